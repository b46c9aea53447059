from __future__ import annotations

import os

from dotenv import load_dotenv

load_dotenv()

ALGORITHMS = ["simulate", "lw", "mh"]
OUTPUT_FORMATS = ["csv", "json"]

DEFAULT_SEED = int(os.getenv("EFFPPL_DEFAULT_SEED", "0"))
LW_WORKERS = int(os.getenv("EFFPPL_LW_WORKERS", "1"))
MH_LOG_EVERY = int(os.getenv("EFFPPL_MH_LOG_EVERY", "1000"))
MAX_API_ITERATIONS = int(os.getenv("EFFPPL_MAX_API_ITERATIONS", "20000"))
BINOMIAL_MAX_N = int(os.getenv("EFFPPL_BINOMIAL_MAX_N", "1000000"))
BENCH_SIZES = [int(size) for size in os.getenv("EFFPPL_BENCH_SIZES", "200,400,600,800,1000").split(",") if size.strip()]
OUTPUT_DIR = os.getenv("EFFPPL_OUTPUT_DIR", "out")
SIMPLEX_TOLERANCE = 1e-9
