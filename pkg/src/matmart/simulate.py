"""Matrix-martingale trajectory generators with certified moment control.

Three increment laws are provided, all of the scalar-times-matrix form
``dM_k = xi_k * A_k`` with symmetric ``xi_k``, so every conditional moment
has a closed form and the Bernstein condition

    E[(dM_k)^p | F_{k-1}]  <=  (p! c^(p-2) / 2) V_k      (semidefinite order)

is decidable exactly rather than only statistically:

* ``rademacher_series``:  xi_k = eps_k in {-1, +1}, independent.
* ``gaussian_series``:    xi_k standard normal, independent.
* ``state_scaled``:       xi_k = eps_k * s(M_{k-1}) with the bounded
  predictable rule s(M) = s_lo + (s_hi - s_lo) / (1 + lambda_max(M)^2),
  exercising genuine path dependence while keeping V_k analytic.

``min_bernstein_c`` returns the smallest certified constant: odd conditional
moments vanish by symmetry, and for even p,
A^p = (A^2)^(p/2) <= ||A||^(p-2) A^2 while the gaussian moment
(p-1)!! never exceeds p!/2.

Paths are pure functions of ``(spec, seed, trial)`` through the
counter-based streams in :mod:`matmart.rng`; the same trial index yields
the same trajectory inside the Monte Carlo kernels.
"""

from dataclasses import dataclass

import numpy as np

from . import rng
from .bounds import bernstein_rhs
from .errors import ParameterError
from .symmat import SymMat, default_psd_tol, lambda_max, lambda_min, mat_int_pow, spectral_norm

RADEMACHER = "rademacher_series"
GAUSSIAN = "gaussian_series"
STATE_SCALED = "state_scaled"
KINDS = (RADEMACHER, GAUSSIAN, STATE_SCALED)

KIND_CODES = {RADEMACHER: 0, GAUSSIAN: 1, STATE_SCALED: 2}

SCALE_RULE_ID = "inv_sq_lmax"


def _scale_rule(lmax_state, s_lo, s_hi):
    # clamped so roundoff cannot push the value outside [s_lo, s_hi]
    s = s_lo + (s_hi - s_lo) / (1.0 + lmax_state * lmax_state)
    return min(max(s, s_lo), s_hi)


@dataclass(frozen=True)
class GeneratorSpec:
    """Description of a martingale-increment law.

    ``base_matrices`` holds the per-step directions A_1..A_N; ``horizon``
    must equal their count.  ``s_lo``/``s_hi`` bound the predictable scale
    for the state-scaled kind and must satisfy 0 < s_lo <= s_hi <= 1.
    """

    kind: str
    base_matrices: tuple
    dim: int
    horizon: int
    s_lo: float = None  # type: ignore[assignment]
    s_hi: float = None  # type: ignore[assignment]
    scale_fn_id: str = SCALE_RULE_ID

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown generator kind {self.kind!r}; expected one of {KINDS}")
        mats = tuple(self.base_matrices)
        object.__setattr__(self, "base_matrices", mats)
        if not mats:
            raise ParameterError("base_matrices must not be empty")
        if self.horizon != len(mats):
            raise ParameterError(
                f"horizon {self.horizon} != number of base matrices {len(mats)}"
            )
        for i, a in enumerate(mats):
            if not isinstance(a, SymMat):
                raise ParameterError(f"base matrix {i + 1} is not a SymMat")
            if a.dim != self.dim:
                raise ParameterError(
                    f"base matrix {i + 1} has dim {a.dim}, spec says {self.dim}"
                )
        if self.kind == STATE_SCALED:
            if self.s_lo is None or self.s_hi is None:
                raise ParameterError("state_scaled requires s_lo and s_hi")
            if not (0.0 < self.s_lo <= self.s_hi <= 1.0):
                raise ParameterError(
                    f"need 0 < s_lo <= s_hi <= 1, got s_lo={self.s_lo}, s_hi={self.s_hi}"
                )
            if self.scale_fn_id != SCALE_RULE_ID:
                raise ParameterError(
                    f"unknown scale rule {self.scale_fn_id!r}; only {SCALE_RULE_ID!r} is registered"
                )

    def base_stack(self):
        """Base matrices as one (N, d, d) array."""
        return np.stack([a.entries for a in self.base_matrices])

    def kind_code(self):
        return KIND_CODES[self.kind]


class MartingalePath:
    """One realized trajectory M_0..M_N with its predictable variation.

    ``states[n]`` is M_n (``states[0]`` the zero matrix), ``increments[k-1]``
    is dM_k, ``pred_var_steps[k-1]`` the analytic V_k, and
    ``pred_var_cum[n-1]`` the running sum through step n, accumulated
    sequentially so ``pred_var_cum[n] == pred_var_cum[n-1] + pred_var_steps[n]``
    holds bitwise.

    Instances are immutable; the per-(t, c) statistics cache used by the
    exponential-process module is a private memo, never shared across
    workers.
    """

    __slots__ = ("states", "increments", "pred_var_steps", "pred_var_cum",
                 "scales", "_stats_cache")

    def __init__(self, states, increments, pred_var_steps, pred_var_cum, scales=None):
        def ro(a):
            a = np.ascontiguousarray(a, dtype=np.float64)
            a.setflags(write=False)
            return a

        self.states = ro(states)
        self.increments = ro(increments)
        self.pred_var_steps = ro(pred_var_steps)
        self.pred_var_cum = ro(pred_var_cum)
        self.scales = None if scales is None else ro(scales)
        self._stats_cache = {}

    @property
    def horizon(self):
        return self.states.shape[0] - 1

    @property
    def dim(self):
        return self.states.shape[1]

    def state(self, n):
        """M_n as a SymMat."""
        return SymMat._wrap(self.states[n])

    @classmethod
    def from_arrays(cls, states, pred_var_steps, scales=None):
        """Build a path container from explicit states and step variations.

        Used for hand-constructed fixtures.  Validates M_0 = O, symmetry,
        and positive semidefiniteness of each V_k (within the order
        tolerance); increments and the cumulative variation are derived.
        """
        states = np.asarray(states, dtype=np.float64)
        vsteps = np.asarray(pred_var_steps, dtype=np.float64)
        if states.ndim != 3 or states.shape[1] != states.shape[2]:
            raise ParameterError(f"states must be (N+1, d, d), got {states.shape}")
        if vsteps.shape != (states.shape[0] - 1,) + states.shape[1:]:
            raise ParameterError("pred_var_steps must be (N, d, d) matching states")
        if np.any(states[0] != 0.0):
            raise ParameterError("paths must start at the zero matrix")
        if np.abs(states - states.transpose(0, 2, 1)).max() > 1e-10 * (1.0 + np.abs(states).max()):
            raise ParameterError("states must be symmetric")
        for k, v in enumerate(vsteps):
            vm = SymMat(v)
            if lambda_min(vm) < -default_psd_tol(vm, vm):
                raise ParameterError(f"pred_var_steps[{k}] is not positive semidefinite")
        incs = states[1:] - states[:-1]
        cum = np.empty_like(vsteps)
        acc = np.zeros(states.shape[1:])
        for k in range(vsteps.shape[0]):
            acc = acc + vsteps[k]
            cum[k] = acc
        return cls(states, incs, vsteps, cum, scales=scales)


def generate_path(spec: GeneratorSpec, seed: int, trial: int = 0) -> MartingalePath:
    """Realize one trajectory; deterministic given ``(spec, seed, trial)``.

    ``trial`` selects the same per-trial stream the Monte Carlo kernels use
    under master seed ``seed``, so ``generate_path(spec, seed, trial=i)``
    reproduces trial i of any experiment run at that seed.
    """
    n, d = spec.horizon, spec.dim
    base = spec.base_stack()
    tseed = rng.trial_seed(int(seed) & rng.MASK64, trial)

    states = np.zeros((n + 1, d, d))
    incs = np.empty((n, d, d))
    vsteps = np.empty((n, d, d))
    scales = np.ones(n)
    base_sq = np.einsum("kij,kjl->kil", base, base)

    for k in range(1, n + 1):
        if spec.kind == GAUSSIAN:
            xi = rng.gauss(rng.draw(tseed, k, 0), rng.draw(tseed, k, 1))
            vsteps[k - 1] = base_sq[k - 1]
        elif spec.kind == RADEMACHER:
            xi = rng.sign(rng.draw(tseed, k, 0))
            vsteps[k - 1] = base_sq[k - 1]
        else:
            s = _scale_rule(lambda_max(SymMat._wrap(states[k - 1])), spec.s_lo, spec.s_hi)
            scales[k - 1] = s
            xi = rng.sign(rng.draw(tseed, k, 0)) * s
            vsteps[k - 1] = (s * s) * base_sq[k - 1]
        incs[k - 1] = xi * base[k - 1]
        states[k] = states[k - 1] + incs[k - 1]

    cum = np.empty_like(vsteps)
    acc = np.zeros((d, d))
    for k in range(n):
        acc = acc + vsteps[k]
        cum[k] = acc
    return MartingalePath(
        states, incs, vsteps, cum,
        scales=scales if spec.kind == STATE_SCALED else None,
    )


def min_bernstein_c(spec: GeneratorSpec) -> float:
    """Smallest constant for which the Bernstein condition is certified.

    max_k ||A_k|| for the unscaled kinds; the worst-case scale s_hi enters
    once for state_scaled (the step scale multiplies the increment).
    """
    worst = max(spectral_norm(a) for a in spec.base_matrices)
    if spec.kind == STATE_SCALED:
        return spec.s_hi * worst
    return worst


def _double_factorial_odd(m):
    # (m)!! for odd m >= 1; gaussian even moment E[g^p] = (p-1)!!
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


def exact_conditional_moment(spec: GeneratorSpec, k: int, p: int) -> SymMat:
    """E[(dM_k)^p | F_{k-1}] in closed form (worst-case scale for state_scaled).

    Odd moments vanish by sign symmetry; even moments are
    A_k^p (rademacher), (p-1)!! A_k^p (gaussian), or s_hi^p A_k^p
    (state_scaled at the worst predictable scale).
    """
    a = spec.base_matrices[k - 1]
    d = spec.dim
    if p % 2 == 1:
        return SymMat.zeros(d)
    apow = mat_int_pow(a, p)
    if spec.kind == GAUSSIAN:
        return float(_double_factorial_odd(p - 1)) * apow
    if spec.kind == STATE_SCALED:
        return spec.s_hi ** p * apow
    return apow


def worst_case_step_var(spec: GeneratorSpec, k: int) -> SymMat:
    """V_k at the scale used by the exact moment check (s_hi for state_scaled)."""
    a = spec.base_matrices[k - 1].entries
    v = a @ a
    if spec.kind == STATE_SCALED:
        v = v * spec.s_hi ** 2
    return SymMat((v + v.T) / 2.0)


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of the exact Bernstein-condition check.

    ``violations`` lists (step k, moment order p, lambda_min of the slack
    matrix RHS - moment) for every failing pair; ``worst_slack`` is the most
    negative slack eigenvalue seen (0.0 when nothing failed).
    """

    c: float
    p_max: int
    steps: int
    violations: tuple
    worst_slack: float

    @property
    def passed(self):
        return not self.violations


def check_bernstein_condition(spec: GeneratorSpec, c: float, p_max: int) -> ConditionReport:
    """Verify E[(dM_k)^p | F] <= (p! c^(p-2)/2) V_k exactly for 2 <= p <= p_max.

    Moments are closed-form (see :func:`exact_conditional_moment`), so this
    is a deterministic decision up to the semidefinite-order tolerance, not
    a statistical test.
    """
    if p_max < 2:
        raise ParameterError(f"p_max must be >= 2, got {p_max}")
    if c <= 0.0:
        raise ParameterError(f"c must be positive, got {c}")
    violations = []
    worst = 0.0
    for k in range(1, spec.horizon + 1):
        v = worst_case_step_var(spec, k)
        for p in range(2, p_max + 1):
            moment = exact_conditional_moment(spec, k, p)
            rhs = bernstein_rhs(v, p, c)
            slack = lambda_min(rhs - moment)
            tol = default_psd_tol(moment, rhs)
            if slack < -tol:
                violations.append((k, p, slack))
                worst = min(worst, slack)
    return ConditionReport(
        c=c, p_max=p_max, steps=spec.horizon,
        violations=tuple(violations), worst_slack=worst,
    )


def check_path_invariants(path: MartingalePath) -> list:
    """Structural checks on one realized path; returns violation messages.

    Verifies the zero start, bitwise increment/state and cumulative-variation
    consistency, and positive semidefiniteness of each V_k.
    """
    problems = []
    if np.any(path.states[0] != 0.0):
        problems.append("M_0 is not the zero matrix")
    state_tol = 1e-12 * (1.0 + np.abs(path.states).max())
    for k in range(1, path.horizon + 1):
        drift = np.abs(path.states[k] - (path.states[k - 1] + path.increments[k - 1])).max()
        if drift > state_tol:
            problems.append(f"state {k} != state {k - 1} + increment {k} (drift {drift:.3e})")
        prev = path.pred_var_cum[k - 2] if k >= 2 else np.zeros_like(path.pred_var_cum[0])
        if not np.array_equal(path.pred_var_cum[k - 1], prev + path.pred_var_steps[k - 1]):
            problems.append(f"cumulative variation at {k} does not telescope")
        vm = SymMat._wrap(path.pred_var_steps[k - 1])
        if lambda_min(vm) < -default_psd_tol(vm, vm):
            problems.append(f"V_{k} is not positive semidefinite")
    return problems
