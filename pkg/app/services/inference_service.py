"""Simulation, likelihood weighting and Metropolis-Hastings as handler stacks.

Every algorithm specialises the model with ``handle_core`` and then composes the
handlers below in a fixed order:

    simulate: handle_samp . handle_obs . handle_state . trace_samples . handle_core
    lw:       handle_samp . handle_obs_lw . handle_state . trace_samples . handle_core
    mh:       handle_samp_mh . handle_obs . handle_state . handle_state
              . trace_lps . trace_samples . handle_core
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from operator import itemgetter
from typing import Any, Callable, Iterator, Mapping, NamedTuple, Optional, TypeVar

import numpy as np

from app.core.constants import MH_LOG_EVERY
from app.core.dist import NEG_INF, Dist, log_prob
from app.core.effects import handle_state, modify
from app.core.env import Env
from app.core.errors import InternalError, NothingToInferError
from app.core.model import OBSERVE, SAMPLE, Addr, Model, handle_core
from app.core.prog import (
    Continuation,
    Effect,
    EffectSignature,
    Leaf,
    Node,
    Program,
    Right,
    bind,
    discharge_head,
    project,
)
from app.services.rng_service import iteration_rng

logger = logging.getLogger(__name__)

X = TypeVar("X")

STRACE = Effect("State<STrace>")
LPTRACE = Effect("State<LPTrace>")

SIM_REST = EffectSignature(STRACE, OBSERVE, SAMPLE)
MH_REST = EffectSignature(LPTRACE, STRACE, OBSERVE, SAMPLE)

STrace = Mapping[Addr, Any]
LPTrace = Mapping[Addr, float]

DUMMY_PROPOSAL = Addr("", -1)


class SimRun(NamedTuple):
    value: Any
    strace: STrace
    residual: Env


class LWRun(NamedTuple):
    value: Any
    strace: STrace
    log_weight: float
    residual: Env


class MHRun(NamedTuple):
    value: Any
    strace: STrace
    lptrace: LPTrace
    residual: Env
    fresh: frozenset = frozenset()


class MHState(NamedTuple):
    iteration: int
    value: Any
    strace: STrace
    lptrace: LPTrace
    residual: Env
    accepted: bool
    proposal: Optional[Addr]


def trace_samples(prog: Program, effect: Effect = STRACE) -> Program:
    """After every ``Sample`` insert a ``Modify`` recording the sampled value under its address."""
    if isinstance(prog, Leaf):
        return prog
    request, resume = prog.request, prog.resume
    op = project(request, SAMPLE)
    if op is None:
        return Node(request, Continuation.of(lambda x: trace_samples(resume(x), effect)))
    sig, addr = request.signature, op.addr

    def record(value: Any) -> Program:
        update = modify(lambda trace: {**trace, addr: value}, sig, effect)
        return bind(update, lambda _: trace_samples(resume(value), effect))

    return Node(request, Continuation.of(record))


def trace_lps(prog: Program, effect: Effect = LPTRACE) -> Program:
    """After every ``Sample`` and ``Observe`` insert a ``Modify`` recording the log-probability of the value."""
    if isinstance(prog, Leaf):
        return prog
    request, resume = prog.request, prog.resume
    op = project(request, SAMPLE) or project(request, OBSERVE)
    if op is None:
        return Node(request, Continuation.of(lambda x: trace_lps(resume(x), effect)))
    sig, addr, dist = request.signature, op.addr, op.dist

    def record(value: Any) -> Program:
        lp = log_prob(dist, value)
        update = modify(lambda trace: {**trace, addr: lp}, sig, effect)
        return bind(update, lambda _: trace_lps(resume(value), effect))

    return Node(request, Continuation.of(record))


def handle_obs(prog: Program) -> Program:
    while isinstance(prog, Node):
        routed = discharge_head(prog.request, OBSERVE)
        resume = prog.resume
        if isinstance(routed, Right):
            prog = resume(routed.value.value)
            continue
        return Node(routed.value, Continuation.of(lambda x, k=resume: handle_obs(k(x))))
    return prog


def handle_obs_lw(prog: Program, lp: float = 0.0) -> Program:
    """Like ``handle_obs`` but accumulates ``log_prob`` of every observed value; returns ``(value, lp)``."""
    while isinstance(prog, Node):
        routed = discharge_head(prog.request, OBSERVE)
        resume = prog.resume
        if isinstance(routed, Right):
            op = routed.value
            lp += log_prob(op.dist, op.value)
            prog = resume(op.value)
            continue
        return Node(routed.value, Continuation.of(lambda x, acc=lp, k=resume: handle_obs_lw(k(x), acc)))
    return Leaf((prog.value, lp))


def _last_sample_request(prog: Node) -> Any:
    if prog.request.signature.effects != (SAMPLE,):
        raise InternalError(f"Sample must be the last effect handled, found a program over {prog.request.signature}")
    return prog.request.payload


def handle_samp(rng: np.random.Generator, prog: Program) -> Any:
    while isinstance(prog, Node):
        op = _last_sample_request(prog)
        prog = prog.resume(op.dist.draw(rng))
    return prog.value


def run_simulate(env: Env, m: Model[Any], rng: np.random.Generator) -> SimRun:
    prog = trace_samples(handle_core(env, m, SIM_REST))
    prog = handle_obs(handle_state({}, prog, STRACE))
    (value, residual), strace = handle_samp(rng, prog)
    return SimRun(value, strace, residual)


def tag_values(strace: STrace) -> dict[str, list[Any]]:
    grouped: dict[str, list[tuple[int, Any]]] = defaultdict(list)
    for addr, value in strace.items():
        grouped[addr.tag].append((addr.occurrence, value))
    return {tag: [value for _, value in sorted(pairs, key=itemgetter(0))] for tag, pairs in grouped.items()}


def sampled_tags(strace: STrace) -> dict[str, int]:
    counts: dict[str, int] = defaultdict(int)
    for addr in strace:
        counts[addr.tag] += 1
    return dict(counts)


def reify_trace(strace: STrace, env: Env) -> Env:
    """Output environment: the entries of ``env`` holding the values sampled under each tag, in occurrence order."""
    return env.with_values(tag_values(strace))


def simulate(model_fn: Callable[[X], Model[Any]], env: Env, x: X, rng: np.random.Generator) -> tuple[Any, Env]:
    run = run_simulate(env, model_fn(x), rng)
    return run.value, reify_trace(run.strace, env)


def run_lw(env: Env, m: Model[Any], rng: np.random.Generator) -> LWRun:
    prog = trace_samples(handle_core(env, m, SIM_REST))
    prog = handle_obs_lw(handle_state({}, prog, STRACE))
    (((value, residual), strace), log_weight) = handle_samp(rng, prog)
    return LWRun(value, strace, log_weight, residual)


def iterate_lw(iterations: int, m: Model[Any], env: Env, seed: int, workers: int = 1) -> list[LWRun]:
    def one(iteration: int) -> LWRun:
        return run_lw(env, m, iteration_rng(seed, iteration))

    if workers <= 1 or iterations <= 1:
        return [one(i) for i in range(iterations)]
    logger.debug("lw: fanning %d iterations over %d workers", iterations, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(iterations)))


def lw(
    iterations: int,
    model_fn: Callable[[X], Model[Any]],
    x: X,
    env: Env,
    seed: int,
    workers: int = 1,
) -> list[tuple[Env, float]]:
    runs = iterate_lw(iterations, model_fn(x), env, seed, workers)
    return [(reify_trace(run.strace, env), run.log_weight) for run in runs]


def _lookup(strace: STrace, d: Dist, addr: Addr, proposal: Addr, rng: np.random.Generator) -> tuple[Any, bool]:
    if addr != proposal and addr in strace:
        stored = strace[addr]
        try:
            value = d.accept(stored)
        except InternalError:
            value = None
        if value is not None and d.log_density(value) != NEG_INF:
            return value, False
    return d.draw(rng), True


def lookup_sample(strace: STrace, d: Dist, addr: Addr, proposal: Addr, rng: np.random.Generator) -> Any:
    """Reuse the stored value at ``addr`` unless it is the proposal site, absent, or not a legal draw from ``d``."""
    value, _ = _lookup(strace, d, addr, proposal, rng)
    return value


def handle_samp_mh(strace: STrace, proposal: Addr, rng: np.random.Generator, prog: Program) -> tuple[Any, frozenset]:
    fresh: list[Addr] = []
    while isinstance(prog, Node):
        op = _last_sample_request(prog)
        value, drawn = _lookup(strace, op.dist, op.addr, proposal, rng)
        if drawn:
            fresh.append(op.addr)
        prog = prog.resume(value)
    return prog.value, frozenset(fresh)


def run_mh(env: Env, strace: STrace, proposal: Addr, m: Model[Any], rng: np.random.Generator) -> MHRun:
    prog = trace_lps(trace_samples(handle_core(env, m, MH_REST)))
    prog = handle_obs(handle_state({}, handle_state({}, prog, LPTRACE), STRACE))
    result, fresh = handle_samp_mh(strace, proposal, rng, prog)
    (((value, residual), lptrace), new_strace) = result
    return MHRun(value, new_strace, lptrace, residual, fresh)


def acceptance_log_ratio(current: MHRun, proposed: MHRun) -> float:
    """Log acceptance ratio of a single-site move that redraws fresh sites from the prior.

    fresh: sites drawn anew in the proposed run, the proposal site included.
    stale: sites of the current run that the proposed run did not reuse.
    """
    if not proposed.strace:
        return NEG_INF
    current_total = math.fsum(current.lptrace.values())
    proposed_total = math.fsum(proposed.lptrace.values())
    if current_total == NEG_INF:
        return 0.0
    if proposed_total == NEG_INF:
        return NEG_INF
    stale = [addr for addr in current.strace if addr in proposed.fresh or addr not in proposed.strace]
    return (
        proposed_total
        - current_total
        + math.fsum(current.lptrace[addr] for addr in stale)
        - math.fsum(proposed.lptrace[addr] for addr in proposed.fresh)
        + math.log(len(current.strace))
        - math.log(len(proposed.strace))
    )


def _state(iteration: int, run: MHRun, accepted: bool, proposal: Optional[Addr]) -> MHState:
    return MHState(iteration, run.value, run.strace, run.lptrace, run.residual, accepted, proposal)


def iterate_mh(iterations: int, m: Model[Any], env: Env, seed: int) -> Iterator[MHState]:
    """Yield the chain state after each iteration. Iteration ``i`` draws from ``iteration_rng(seed, i)``."""
    current: Optional[MHRun] = None
    accepted_count = 0
    for iteration in range(iterations):
        rng = iteration_rng(seed, iteration)
        if current is None:
            current = run_mh(env, {}, DUMMY_PROPOSAL, m, rng)
            if not current.strace:
                raise NothingToInferError()
            yield _state(iteration, current, True, None)
            continue
        sites = list(current.strace)
        proposal = sites[int(rng.integers(len(sites)))]
        proposed = run_mh(env, current.strace, proposal, m, rng)
        log_alpha = acceptance_log_ratio(current, proposed)
        accepted = log_alpha >= 0.0 or rng.random() < math.exp(log_alpha)
        if accepted:
            current = proposed
            accepted_count += 1
        if MH_LOG_EVERY > 0 and iteration % MH_LOG_EVERY == 0:
            logger.info("mh: iteration %d/%d, acceptance rate %.3f", iteration, iterations, accepted_count / iteration)
        yield _state(iteration, current, accepted, proposal)


@dataclass
class MHHistory:
    """Accepted sample values per observable variable, appended in iteration order."""

    env: Env
    values: dict[str, list[Any]]

    @classmethod
    def start(cls, env: Env) -> MHHistory:
        return cls(env, {entry.name: [] for entry in env})

    def append(self, state: MHState) -> None:
        for tag, values in tag_values(state.strace).items():
            if tag in self.values:
                self.values[tag].extend(values)

    def to_env(self) -> Env:
        return self.env.with_values(self.values)


def mh(iterations: int, model_fn: Callable[[X], Model[Any]], x: X, env: Env, seed: int) -> Env:
    history = MHHistory.start(env)
    for state in iterate_mh(iterations, model_fn(x), env, seed):
        history.append(state)
    return history.to_env()


def observed_log_prob(lptrace: LPTrace, strace: STrace) -> float:
    """Sum of the log-probabilities recorded at observe sites."""
    return math.fsum(lp for addr, lp in lptrace.items() if addr not in strace)
