"""Canonical generator fixtures used by the test suite and CLI examples.

Deterministic constructions only: base matrices are built from fixed
diagonal patterns conjugated by Givens rotations with a fixed angle
schedule, so every fixture is reproducible from source.  Spectral norms
stay at or below 1 (pure diagonals carry the exact extreme eigenvalues),
which keeps c = 1 a certified Bernstein constant for the unscaled kinds.
"""

import math

import numpy as np

from .simulate import GAUSSIAN, RADEMACHER, STATE_SCALED, GeneratorSpec
from .symmat import SymMat


def _givens(d, i, j, theta):
    g = np.eye(d)
    cs, sn = math.cos(theta), math.sin(theta)
    g[i, i] = cs
    g[j, j] = cs
    g[i, j] = -sn
    g[j, i] = sn
    return g


def _rotation(d, k):
    """A fixed orthogonal matrix for step k: chained Givens rotations."""
    q = np.eye(d)
    for i in range(d - 1):
        q = q @ _givens(d, i, i + 1, 0.61803398875 * (k + 1) + 0.37 * i)
    return q


def _diag_pattern(d, k, top):
    """Deterministic eigenvalue pattern with |values| <= top, sign-alternating."""
    vals = [top * (1.0 - 0.15 * ((k + i) % 4)) * (-1.0 if (k + i) % 2 else 1.0)
            for i in range(d)]
    return np.array(vals)


def _rotated_chain(d, horizon, top):
    mats = []
    for k in range(horizon):
        if k % 3 == 0:
            # exact-spectrum diagonal step (extremes land on +-top exactly)
            a = np.diag(_diag_pattern(d, k, top))
        else:
            q = _rotation(d, k)
            a = q @ np.diag(_diag_pattern(d, k, 0.95 * top)) @ q.T
        mats.append(SymMat((a + a.T) / 2.0))
    return tuple(mats)


def rademacher_chain(d=2, horizon=12):
    """Sign-flip martingale; base norms <= 1 with the exact value 1 attained."""
    return GeneratorSpec(kind=RADEMACHER, base_matrices=_rotated_chain(d, horizon, 1.0),
                         dim=d, horizon=horizon)


def gaussian_chain(d=3, horizon=20):
    """Gaussian-scaled martingale; base norms <= 1."""
    return GeneratorSpec(kind=GAUSSIAN, base_matrices=_rotated_chain(d, horizon, 1.0),
                         dim=d, horizon=horizon)


def state_scaled_chain(d=2, horizon=20, s_lo=0.3, s_hi=0.9):
    """Path-dependent scaling; the predictable rule stays inside [s_lo, s_hi]."""
    return GeneratorSpec(kind=STATE_SCALED, base_matrices=_rotated_chain(d, horizon, 1.0),
                         dim=d, horizon=horizon, s_lo=s_lo, s_hi=s_hi)


def scalar_rademacher(horizon=12):
    """The d = 1 unit-step sign martingale (exact two-point enumeration)."""
    return GeneratorSpec(kind=RADEMACHER,
                         base_matrices=(SymMat.diag([1.0]),) * horizon,
                         dim=1, horizon=horizon)


def condition_violation_fixture():
    """A generator plus a deliberately undersized constant.

    Increments +-2 I have fourth conditional moment 16 I, while the
    majorant at c = 0.5 is only (4! 0.25 / 2) * 4 I = 12 I, so the moment
    check must flag (k=1, p=4).
    """
    spec = GeneratorSpec(kind=RADEMACHER,
                         base_matrices=(SymMat.diag([2.0, 2.0]),),
                         dim=2, horizon=1)
    return spec, 0.5


def certified_fixtures():
    """Name -> spec for every shipped generator fixture (certification set)."""
    return {
        "rademacher_d1": scalar_rademacher(),
        "rademacher_d2": rademacher_chain(d=2),
        "gaussian_d3": gaussian_chain(d=3),
        "gaussian_d4": gaussian_chain(d=4, horizon=25),
        "state_scaled_d2": state_scaled_chain(d=2),
        "state_scaled_d4": state_scaled_chain(d=4, horizon=25),
    }
