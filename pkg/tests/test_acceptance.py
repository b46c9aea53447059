"""Full-scale statistical checks. Deselected by default; run with ``pytest -m slow``."""

from __future__ import annotations

import numpy as np
import pytest

from app.core.dist import PrimKind
from app.core.env import env_of
from app.services.inference_service import mh, simulate
from app.services.rng_service import run_rng
from app.services.run_service import bench
from app.services.zoo_service import Popl, hmm_sir

pytestmark = pytest.mark.slow

SIR0 = Popl(762, 1, 0)


def histogram_mode(values, bins=30):
    counts, edges = np.histogram(values, bins=bins)
    peak = int(np.argmax(counts))
    return 0.5 * (edges[peak] + edges[peak + 1])


def test_sir_bootstrap_recovers_the_parameters():
    truth = env_of(("beta", [0.7]), ("gamma", [0.009]), ("rho", [0.3]), ("xi", [], PrimKind.INT))
    hits = 0
    for seed in range(10):
        _, simulated = simulate(lambda n: hmm_sir(n, SIR0), truth, 100, run_rng(seed))
        conditioned = env_of(
            ("beta", [], PrimKind.REAL),
            ("gamma", [0.0085]),
            ("rho", [], PrimKind.REAL),
            ("xi", simulated.get("xi"), PrimKind.INT),
        )
        posterior = mh(5000, lambda n: hmm_sir(n, SIR0), 100, conditioned, seed=seed)
        beta_mode = histogram_mode(posterior.get("beta")[1000:])
        rho_mode = histogram_mode(posterior.get("rho")[1000:])
        hits += abs(beta_mode - 0.7) <= 0.25 and abs(rho_mode - 0.3) <= 0.15
    assert hits >= 8


@pytest.mark.parametrize("model", ["linregr", "hmm"])
@pytest.mark.parametrize("algo", ["simulate", "lw"])
def test_runtime_grows_linearly_with_iterations(model, algo):
    _, fits = bench([model], [algo], [200, 400, 600, 800, 1000], seed=0)
    assert fits[0].r_squared >= 0.95
