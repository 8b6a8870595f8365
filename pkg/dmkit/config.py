"""
dmkit defaults and environment overrides.

Tolerances are plain module constants; every operation that uses one also
accepts it as a keyword argument. Environment variables are read when a
value is requested, never cached at import.

Environment:
  DMKIT_SEED     integer or alphanumeric seed for every RNG in the package
  DMKIT_WORKERS  threads used for frequency sweeps (1 = sequential)
"""
from __future__ import annotations
import logging
import os

import numpy as np

log = logging.getLogger(__name__)

TOOL_VERSION   = "1.0.0"
SCHEMA_VERSION = "1.0"

# ---------------------------------------------------------------------------
# Numerical tolerances
# ---------------------------------------------------------------------------

STABILITY_TOL  = 0.0      # poles must satisfy Re(p) < -STABILITY_TOL
HINF_TOL       = 1e-6     # relative tolerance of the H-infinity bisection
CROSSOVER_RTOL = 1e-12    # crossover frequency refinement (relative)
VERIFY_RTOL    = 1e-4     # pole-to-axis distance accepted by verification
MU_TOL         = 1e-6     # D-scaling refinement of the mu upper bound
MU_RESTARTS    = 5        # power-iteration restarts for the mu lower bound
MU_MAX_ITER    = 200
INCONCLUSIVE_GAP = 0.10   # relative mu bracket gap that flags a result

DEFAULT_GRID_POINTS = 400
DEFAULT_WINDOW      = (1e-2, 1e2)
GRID_DECADES        = 2.0

DEFAULT_SEED = "DMKIT0"

SEED_ENV    = "DMKIT_SEED"
WORKERS_ENV = "DMKIT_WORKERS"


# ---------------------------------------------------------------------------
# Seed helpers
# ---------------------------------------------------------------------------

def seed_to_int(seed: str) -> int:
    """Deterministic integer from a seed string."""
    seed = seed.strip()
    if seed.lstrip('-').isdigit():
        return abs(int(seed)) & 0x7FFFFFFF
    h = 0
    for c in seed.upper():
        h = h * 31 + ord(c)
    return h & 0x7FFFFFFF


def current_seed() -> int:
    return seed_to_int(os.environ.get(SEED_ENV) or DEFAULT_SEED)


def make_rng(seed: int | None = None) -> np.random.Generator:
    """numpy Generator seeded from *seed*, or from DMKIT_SEED when omitted."""
    return np.random.default_rng(current_seed() if seed is None else seed)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        log.warning("ignoring %s=%r (not an integer)", WORKERS_ENV, raw)
        return 1
