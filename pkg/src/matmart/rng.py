"""Counter-based deterministic random streams.

Every random draw in the package is a pure function of
``(master_seed, trial, step, draw_index)``, built from the SplitMix64
finalizer.  There is no mutable generator state, so

* identical seeds reproduce bit-identical experiments,
* trials can be partitioned across any number of workers without
  changing a single draw, and
* the numba kernels, the vectorized numpy kernels, and this reference
  implementation all consume exactly the same integer streams.

Stream-split rule (documented contract):

    trial_seed(seed, i)   = mix64(seed + (i+1) * GOLDEN)        # trial i >= 0
    step_key(tseed, k)    = mix64(tseed + k * GOLDEN)           # step k >= 1
    draw(tseed, k, j)     = mix64(step_key(tseed, k) + (j+1) * GOLDEN)

with all arithmetic modulo 2**64.  Draw j of step k of trial i never
collides with any other (i, k, j) triple in practice (SplitMix64's
finalizer is a bijection on 64-bit words).

Value maps:

    uniform:    u = (z >> 11) * 2**-53                  in [0, 1)
    sign:       +1 if top bit clear else -1             (Rademacher)
    gaussian:   Box-Muller from draws (j, j+1):
                u1 = ((z1 >> 11) + 1) * 2**-53          in (0, 1]
                u2 = (z2 >> 11) * 2**-53                in [0, 1)
                g  = sqrt(-2 ln u1) * cos(2 pi u2)

Box-Muller consumes a fixed two draws per gaussian (no rejection), which
keeps the scalar and vectorized paths in lockstep.
"""

import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

_U_GOLDEN = np.uint64(GOLDEN)
_U_M1 = np.uint64(_M1)
_U_M2 = np.uint64(_M2)
_TWO_NEG53 = 2.0 ** -53


def mix64(z):
    """SplitMix64 finalizer on a Python int (reference implementation)."""
    z &= MASK64
    z ^= z >> 30
    z = (z * _M1) & MASK64
    z ^= z >> 27
    z = (z * _M2) & MASK64
    z ^= z >> 31
    return z


def trial_seed(seed, trial):
    """Seed of the per-trial stream for ``trial`` >= 0."""
    return mix64((seed + (trial + 1) * GOLDEN) & MASK64)


def draw(tseed, step, j):
    """Raw 64-bit draw ``j`` >= 0 of step ``step`` >= 1 within a trial."""
    key = mix64((tseed + step * GOLDEN) & MASK64)
    return mix64((key + (j + 1) * GOLDEN) & MASK64)


def uniform(z):
    """Map a raw draw to [0, 1)."""
    return (z >> 11) * _TWO_NEG53


def sign(z):
    """Map a raw draw to a Rademacher sign in {-1.0, +1.0}."""
    return -1.0 if (z >> 63) else 1.0


def gauss(z1, z2):
    """Map two raw draws to one standard normal via Box-Muller."""
    u1 = ((z1 >> 11) + 1) * _TWO_NEG53
    u2 = (z2 >> 11) * _TWO_NEG53
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


# -- vectorized twins (uint64 arrays; unsigned overflow wraps silently) --


def mix64_vec(z):
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= _U_M1
    z ^= z >> np.uint64(27)
    z *= _U_M2
    z ^= z >> np.uint64(31)
    return z


def trial_seed_vec(seed, trials):
    """Per-trial stream seeds for trial indices in ``trials`` (uint64 array)."""
    idx = np.asarray(trials, dtype=np.uint64)
    return mix64_vec(np.uint64(seed & MASK64) + (idx + np.uint64(1)) * _U_GOLDEN)


def draw_vec(tseeds, step, j):
    """Vectorized ``draw`` over an array of trial seeds."""
    key = mix64_vec(tseeds + np.uint64((step * GOLDEN) & MASK64))
    return mix64_vec(key + np.uint64(((j + 1) * GOLDEN) & MASK64))


def uniform_vec(z):
    return (z >> np.uint64(11)).astype(np.float64) * _TWO_NEG53


def sign_vec(z):
    return np.where(z >> np.uint64(63), -1.0, 1.0)


def gauss_vec(z1, z2):
    u1 = ((z1 >> np.uint64(11)).astype(np.float64) + 1.0) * _TWO_NEG53
    u2 = (z2 >> np.uint64(11)).astype(np.float64) * _TWO_NEG53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def step_signs(tseeds, steps):
    """Rademacher signs for each (trial, step) pair; shape (len(tseeds), len(steps))."""
    out = np.empty((tseeds.shape[0], len(steps)))
    for col, k in enumerate(steps):
        out[:, col] = sign_vec(draw_vec(tseeds, k, 0))
    return out


def step_gaussians(tseeds, steps):
    """Standard normals for each (trial, step) pair; shape (len(tseeds), len(steps))."""
    out = np.empty((tseeds.shape[0], len(steps)))
    for col, k in enumerate(steps):
        out[:, col] = gauss_vec(draw_vec(tseeds, k, 0), draw_vec(tseeds, k, 1))
    return out
