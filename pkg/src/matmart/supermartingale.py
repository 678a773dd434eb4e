"""The exponential trace process, its deviation event, and the stopping time.

For a path M_0..M_N with predictable step variations V_k and an admissible
tilt (t, c), the process

    S_n = tr exp( t M_n - sum_{k<=n} Lambda_{V_k}(t) ),      S_0 = d,

is a positive supermartingale whenever the increments satisfy the Bernstein
condition with constant c.  The deviation-and-variance event at index n is

    A_n = { lambda_max(M_n) >= n x }
          intersect { lambda_max(sum_{k<=n} Lambda_{V_k}(t)) <= n Lambda_y(t) },

and on A_n the process is bounded below: S_n >= exp(n (t x - Lambda_y(t))).
Chasing E[S_{tau and N}] <= d through that lower bound is what produces the
closed-form tail bounds in :mod:`matmart.bounds`; the helpers here expose
each ingredient so the property suite can check them pathwise and in the
mean.

Per-path spectral statistics are cached per (t, c) on the path object
(the event and stopping-time helpers evaluate many (x, y) pairs against
one tilt).  The cache is a private memo: share paths across workers only
for reading, never while populating the cache concurrently.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .bounds import lambda_cap, scalar_lambda, tilt_coef
from .errors import ParameterError
from .simulate import (
    GAUSSIAN,
    STATE_SCALED,
    GeneratorSpec,
    MartingalePath,
    _scale_rule,
)
from .symmat import SymMat


def _sym(a):
    return (a + a.T) / 2.0


def _trace_exp(e):
    w, _, _ = _kernels.jacobi_eigvalsh(_sym(e))
    return float(np.exp(w).sum())


def _path_stats(path: MartingalePath, t: float, c: float):
    """Per-index spectral statistics of a path at tilt (t, c), memoized."""
    key = (float(t), float(c))
    cached = path._stats_cache.get(key)
    if cached is not None:
        return cached
    tilt_coef(t, c)  # validate the window before any work
    n, d = path.horizon, path.dim
    cumlam = np.zeros((n + 1, d, d))
    lam_max_m = np.zeros(n + 1)
    lam_max_cumlam = np.zeros(n + 1)
    s_values = np.empty(n + 1)
    s_values[0] = float(d)
    for k in range(1, n + 1):
        step = lambda_cap(SymMat._wrap(_sym(path.pred_var_steps[k - 1])), t, c)
        cumlam[k] = cumlam[k - 1] + step.entries
        wm, _, _ = _kernels.jacobi_eigvalsh(path.states[k])
        lam_max_m[k] = wm[-1]
        wl, _, _ = _kernels.jacobi_eigvalsh(cumlam[k])
        lam_max_cumlam[k] = wl[-1]
        s_values[k] = _trace_exp(t * path.states[k] - cumlam[k])
    stats = {
        "cumlam": cumlam,
        "lam_max_m": lam_max_m,
        "lam_max_cumlam": lam_max_cumlam,
        "s_values": s_values,
    }
    path._stats_cache[key] = stats
    return stats


@dataclass(frozen=True)
class SProcess:
    """Realized values S_0..S_N of the exponential trace process."""

    values: np.ndarray
    t: float
    c: float
    source: MartingalePath


def s_process(path: MartingalePath, t: float, c: float) -> SProcess:
    """Evaluate S_n along the path; S_0 equals the matrix dimension.

    The exponent t M_n - sum Lambda_{V_k}(t) is symmetrized before the
    spectral exponential to absorb accumulation roundoff.
    """
    stats = _path_stats(path, t, c)
    values = stats["s_values"].copy()
    values.setflags(write=False)
    return SProcess(values=values, t=t, c=c, source=path)


def _check_index(path, n):
    if not (1 <= n <= path.horizon):
        raise ParameterError(f"index n={n} outside 1..{path.horizon}")


def event_a(path: MartingalePath, n: int, x: float, y: float, t: float, c: float) -> bool:
    """The deviation-and-variance event at index n (see module docstring)."""
    _check_index(path, n)
    if not (x > 0.0 and y > 0.0):
        raise ParameterError(f"x and y must be positive, got {x}, {y}")
    stats = _path_stats(path, t, c)
    return bool(
        stats["lam_max_m"][n] >= n * x
        and stats["lam_max_cumlam"][n] <= n * scalar_lambda(y, t, c)
    )


def stopping_time(path: MartingalePath, x: float, y: float, t: float, c: float):
    """First index n >= 1 at which the event holds; math.inf if none by N.

    The value at index n depends only on the path through step n, which is
    what makes tau a stopping time; the horizon-bounded process uses
    min(tau, N).
    """
    stats = _path_stats(path, t, c)
    thr = scalar_lambda(y, t, c)
    for n in range(1, path.horizon + 1):
        if stats["lam_max_m"][n] >= n * x and stats["lam_max_cumlam"][n] <= n * thr:
            return n
    return math.inf


@dataclass(frozen=True)
class CheckResult:
    """Outcome of the pathwise lower-bound check at one index.

    ``event_holds`` False means the implication is vacuous and ``passed`` is
    True by convention.  ``slack`` is s_value - threshold.
    """

    event_holds: bool
    passed: bool
    s_value: float
    threshold: float

    @property
    def slack(self):
        return self.s_value - self.threshold


def lower_bound_check(path: MartingalePath, n: int, x: float, y: float,
                      t: float, c: float) -> CheckResult:
    """On the event, S_n must be at least exp(n (t x - Lambda_y(t))).

    Tolerance 1e-9 relative to S_n covers spectral roundoff; off the event
    the check passes vacuously.
    """
    _check_index(path, n)
    stats = _path_stats(path, t, c)
    s_val = float(stats["s_values"][n])
    holds = event_a(path, n, x, y, t, c)
    threshold = math.exp(n * (t * x - scalar_lambda(y, t, c)))
    if not holds:
        return CheckResult(event_holds=False, passed=True, s_value=s_val,
                           threshold=threshold)
    passed = s_val >= threshold - 1e-9 * abs(s_val)
    return CheckResult(event_holds=True, passed=passed, s_value=s_val,
                       threshold=threshold)


# ---------------------------------------------------------------------------
# Batch evaluation over generated paths (kernel-backed; used by the Monte
# Carlo property checks and the CLI).
# ---------------------------------------------------------------------------


def _spec_kernel_inputs(spec: GeneratorSpec, t: float, c: float):
    """Shared precomputation: base stack, A_k^2 spectra, Lambda cumulants."""
    base = spec.base_stack()
    base_sq = np.einsum("kij,kjl->kil", base, base)
    sq_w, sq_q = _kernels.eigh_stack(base_sq)
    sq_w = np.maximum(sq_w, 0.0)  # A_k^2 is PSD; clip roundoff for log1p
    coef = tilt_coef(t, c)
    n, d = spec.horizon, spec.dim
    cumlam = np.zeros((n + 1, d, d))
    for k in range(1, n + 1):
        step = (sq_q[k - 1] * np.log1p(coef * sq_w[k - 1])) @ sq_q[k - 1].T
        cumlam[k] = cumlam[k - 1] + _sym(step)
    return base, sq_w, sq_q, coef, cumlam


def _chunk_ranges(trials, workers):
    width = (trials + workers - 1) // workers
    return [(i, min(i + width, trials)) for i in range(0, trials, width)]


def _run_chunked(fn, trials, workers):
    """Run ``fn(i0, i1)`` over a fixed partition and concatenate results.

    Partitioning never changes values: trial i draws from the stream keyed
    by (seed, i) alone, so any worker count yields identical arrays.
    """
    ranges = _chunk_ranges(trials, max(1, workers))
    if len(ranges) == 1:
        return fn(*ranges[0])
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda r: fn(*r), ranges))
    else:
        parts = [fn(*r) for r in ranges]
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(cols) for cols in zip(*parts))
    return np.concatenate(parts)


def s_final_samples(spec: GeneratorSpec, t: float, c: float, trials: int,
                    seed: int, workers: int = 1):
    """S_N over ``trials`` independent paths; deterministic in (spec, seed)."""
    base, sq_w, sq_q, coef, cumlam = _spec_kernel_inputs(spec, t, c)
    s_lo = spec.s_lo or 0.0
    s_hi = spec.s_hi or 0.0
    kind = spec.kind_code()

    def run(i0, i1):
        return _kernels.s_final(kind, base, sq_w, sq_q, s_lo, s_hi, coef, t,
                                cumlam[spec.horizon], seed, i0, i1)

    return _run_chunked(run, trials, workers)


@dataclass(frozen=True)
class StoppedBatch:
    """Per-trial results of the stopping-time scan.

    ``tau`` holds N+1 where the event never occurred; ``s_stop`` is
    S_{tau and N}; ``lb_violations`` counts indices where the event held but
    the pathwise lower bound failed; ``hit`` flags tau <= N.
    """

    tau: np.ndarray
    s_stop: np.ndarray
    lb_violations: np.ndarray
    hit: np.ndarray
    horizon: int


def stopped_samples(spec: GeneratorSpec, x: float, y: float, t: float, c: float,
                    trials: int, seed: int, workers: int = 1) -> StoppedBatch:
    """Scan ``trials`` paths for the event, stopping values, and lower bounds."""
    base, sq_w, sq_q, coef, cumlam = _spec_kernel_inputs(spec, t, c)
    n = spec.horizon
    thr = scalar_lambda(y, t, c)
    var_thresh = np.arange(n + 1, dtype=np.float64) * thr
    var_ok = np.zeros(n + 1, dtype=np.uint8)
    if spec.kind != STATE_SCALED:
        for k in range(1, n + 1):
            wl, _, _ = _kernels.jacobi_eigvalsh(cumlam[k])
            var_ok[k] = 1 if wl[-1] <= var_thresh[k] else 0
    lb_log_step = t * x - thr
    s_lo = spec.s_lo or 0.0
    s_hi = spec.s_hi or 0.0
    kind = spec.kind_code()

    def run(i0, i1):
        return _kernels.stopped_scan(kind, base, sq_w, sq_q, s_lo, s_hi, coef,
                                     t, x, var_thresh, var_ok, cumlam[1:],
                                     lb_log_step, seed, i0, i1)

    tau, s_stop, lb_viol, hit = _run_chunked(run, trials, workers)
    return StoppedBatch(tau=tau, s_stop=s_stop, lb_violations=lb_viol,
                        hit=hit, horizon=n)


def conditional_s_samples(spec: GeneratorSpec, path: MartingalePath, n: int,
                          t: float, c: float, resamples: int, seed: int):
    """Resample step n conditionally on a realized prefix; return (samples, s_prev).

    The prefix M_{n-1} and the predictable variation through step n are
    fixed; only the step-n innovation is redrawn, so the sample mean
    estimates E[S_n | F_{n-1}] and must not exceed S_{n-1} beyond noise.
    """
    _check_index(path, n)
    base, sq_w, sq_q, coef, cumlam = _spec_kernel_inputs(spec, t, c)
    m_prev = path.states[n - 1]
    a_n = base[n - 1]

    if spec.kind == STATE_SCALED:
        wl, _, _ = _kernels.jacobi_eigvalsh(m_prev)
        scale = _scale_rule(wl[-1], spec.s_lo, spec.s_hi)
        lam_n = _sym((sq_q[n - 1] * np.log1p(coef * scale * scale * sq_w[n - 1]))
                     @ sq_q[n - 1].T)
    else:
        scale = 1.0
        lam_n = cumlam[n] - cumlam[n - 1]

    cum_prev = _cum_lambda_through(spec, path, n - 1, t, c, cumlam)
    cum_n = cum_prev + lam_n
    s_prev = _trace_exp(t * m_prev - cum_prev)
    cmat = _sym(t * m_prev - cum_n)

    if spec.kind == GAUSSIAN:
        samples = _kernels.cond_gauss_s(cmat, a_n, t, seed, 0, resamples)
    else:
        # two-point innovation: evaluate both outcomes, then draw signs
        s_plus = _trace_exp(cmat + t * scale * a_n)
        s_minus = _trace_exp(cmat - t * scale * a_n)
        from . import rng

        tseeds = rng.trial_seed_vec(int(seed) & rng.MASK64,
                                    np.arange(resamples, dtype=np.uint64))
        signs = rng.sign_vec(rng.draw_vec(tseeds, 1, 0))
        samples = np.where(signs > 0, s_plus, s_minus)
    return samples, s_prev


def _cum_lambda_through(spec, path, n, t, c, cumlam_const):
    """Cumulative Lambda matrix through step n for the path's own variations."""
    if spec.kind != STATE_SCALED:
        return cumlam_const[n]
    stats = _path_stats(path, t, c)
    return stats["cumlam"][n]
