"""Closed-form tail bounds and the tilted log-moment surrogate.

Scalar Bernstein bounds for independent sums and martingales, their matrix
extensions, and the matrix function

    Lambda_X(t) = log(I + t^2 X / (2 (1 - t c))),    t > 0, 0 < c t < 1,

which dominates the conditional log-moment generating function of an
increment whose moments satisfy the Bernstein condition.  All bound values
are computed in log space and exponentiated once at the end, so large
horizons do not overflow.  Bounds are returned raw (they may exceed 1, or
d); callers compare values, and clamping would mask identity checks.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotPositiveDefiniteError, ParameterError
from .symmat import SymMat, eig_sym


def _check_tilt(t, c):
    if not (t > 0.0 and 0.0 < c * t < 1.0):
        raise ParameterError(
            f"tilt out of range: need t>0 and 0<ct<1, got t={t}, c={c}, ct={c * t}"
        )


_SPLITTER = 134217729.0  # 2**27 + 1, Dekker splitting for 53-bit doubles


def _one_minus_prod(t, c):
    """1 - t*c to full precision via a compensated product.

    The naive expression loses relative accuracy like tc/(1 - tc) when the
    product approaches 1, which happens at the optimal tilt whenever
    y << c x; the Dekker-split correction removes that amplification.
    """
    p = t * c
    th = t * _SPLITTER - (t * _SPLITTER - t)
    tl = t - th
    ch = c * _SPLITTER - (c * _SPLITTER - c)
    cl = c - ch
    err = ((th * ch - p) + th * cl + tl * ch) + tl * cl
    return (1.0 - p) - err


def tilt_coef(t: float, c: float) -> float:
    """The shared coefficient t^2 / (2 (1 - t c)) of the Lambda map."""
    _check_tilt(t, c)
    return t * t / (2.0 * _one_minus_prod(t, c))


def lambda_cap(x_mat: SymMat, t: float, c: float) -> SymMat:
    """Matrix log-moment surrogate Lambda_X(t) = log(I + t^2 X / (2(1-tc))).

    ``x_mat`` must be positive semidefinite (up to the default order
    tolerance); the log argument is then positive definite and the result
    positive semidefinite.
    """
    coef = tilt_coef(t, c)
    dec = eig_sym(x_mat)
    lam = dec.eigenvalues
    tol = 1e-10 * (1.0 + max(abs(lam[0]), abs(lam[-1])))
    if lam[0] < -tol:
        raise NotPositiveDefiniteError(lam[0], -tol)
    q = dec.eigenvectors
    out = (q * np.log1p(coef * lam)) @ q.T
    return SymMat._wrap((out + out.T) / 2.0)


def scalar_lambda(y: float, t: float, c: float) -> float:
    """Scalar case of the Lambda map: ln(1 + y t^2 / (2 (1 - t c)))."""
    if y < 0.0:
        raise ParameterError(f"y must be nonnegative, got {y}")
    return math.log1p(tilt_coef(t, c) * y)


def optimal_t(x: float, y: float, c: float) -> float:
    """The tilt x / (y + c x) minimizing the generic exponential bound.

    Always lands inside the admissible window: c t = c x / (y + c x) < 1
    whenever x, y, c > 0.
    """
    if not (x > 0.0 and y > 0.0 and c > 0.0):
        raise ParameterError(f"x, y, c must be positive, got {x}, {y}, {c}")
    return x / (y + c * x)


@dataclass(frozen=True)
class BernsteinParams:
    """Parameter bundle for the matrix-martingale bound.

    ``t`` defaults to the optimal tilt x / (y + c x); a supplied value must
    satisfy 0 < c t < 1.
    """

    x: float
    y: float
    c: float
    n: int
    d: int
    t: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if not (self.c > 0.0 and self.x > 0.0 and self.y > 0.0):
            raise ParameterError(
                f"x, y, c must be positive, got x={self.x}, y={self.y}, c={self.c}"
            )
        if self.n < 1 or self.n != int(self.n):
            raise ParameterError(f"n must be a positive integer, got {self.n}")
        if self.d < 1 or self.d != int(self.d):
            raise ParameterError(f"d must be a positive integer, got {self.d}")
        if self.t is None:
            object.__setattr__(self, "t", optimal_t(self.x, self.y, self.c))
        else:
            _check_tilt(self.t, self.c)


@dataclass(frozen=True)
class BoundReport:
    """Both closed forms of the martingale bound at horizon n.

    ``bound_product_form`` is d (1 + x^2/(2(y+cx)))^n exp(-n x^2/(y+cx));
    ``bound_exp_form`` is d exp(-n x^2 / (2(y+cx))).  The product form never
    exceeds the exponential form (ln(1+u) <= u).
    """

    bound_product_form: float
    bound_exp_form: float
    t_used: float
    params: BernsteinParams


def _log_forms(x, y, c, n):
    u = x * x / (2.0 * (y + c * x))
    log_product = n * (math.log1p(u) - 2.0 * u)
    log_exp = -n * u
    return log_product, log_exp


def scalar_martingale_bound(x: float, y: float, c: float, n: int):
    """Scalar martingale Bernstein bound; returns (product form, exp form).

    Bounds P(M_n >= n x, <M>_n <= n y) for a square-integrable scalar
    martingale under the Bernstein moment condition with constant c.
    """
    if not (x > 0.0 and y > 0.0 and c > 0.0):
        raise ParameterError(f"x, y, c must be positive, got {x}, {y}, {c}")
    if n < 1:
        raise ParameterError(f"n must be a positive integer, got {n}")
    log_product, log_exp = _log_forms(x, y, c, n)
    return math.exp(log_product), math.exp(log_exp)


def martingale_matrix_bound(params: BernsteinParams, t: float | None = None) -> BoundReport:
    """Matrix-martingale Bernstein bound: both closed forms, dimension factor d.

    At the optimal tilt t* = x/(y+cx) the generic exponential bound
    d exp(n (Lambda_y(t*) - t* x)) coincides with the product form (checked
    by the property suite to 1e-12 relative).
    """
    if t is None:
        t_used = params.t
    else:
        _check_tilt(t, params.c)
        t_used = t
    log_product, log_exp = _log_forms(params.x, params.y, params.c, params.n)
    log_d = math.log(params.d)
    return BoundReport(
        bound_product_form=math.exp(log_d + log_product),
        bound_exp_form=math.exp(log_d + log_exp),
        t_used=t_used,
        params=params,
    )


def generic_exponential_bound(x, y, c, n, d, t):
    """The pre-optimization bound d exp(n (Lambda_y(t) - t x)) for any valid t.

    Decreasing the exponent over t yields the product form at t = optimal_t.
    At exactly the optimal tilt the Lambda argument is evaluated through the
    cancellation-free identity y t^2 / (2 (1 - t c)) = t^2 (y + c x) / 2;
    composing Lambda with a rounded tilt is otherwise first-order unstable
    when y << c x (the derivative carries a (1 - t c)^-2 factor).
    """
    _check_tilt(t, c)
    if t == optimal_t(x, y, c):
        lam = math.log1p(t * t * (y + c * x) / 2.0)
    else:
        lam = scalar_lambda(y, t, c)
    return d * math.exp(n * (lam - t * x))


def scalar_bernstein_bound(x: float, nu2: float, c: float, n: int) -> float:
    """Bernstein bound for centered independent sums, sqrt(n)-normalized form.

    exp(- sqrt(n) x^2 / (2 (sqrt(n) nu^2 + c x))) for P(S_n >= sqrt(n) x),
    where nu^2 is the per-step average variance.
    """
    if x <= 0.0:
        raise ParameterError(f"x must be positive, got {x}")
    if nu2 < 0.0 or c <= 0.0 or n < 1:
        raise ParameterError(f"need nu2 >= 0, c > 0, n >= 1; got {nu2}, {c}, {n}")
    rn = math.sqrt(n)
    return math.exp(-rn * x * x / (2.0 * (rn * nu2 + c * x)))


def matrix_bernstein_indep_bound(t: float, sigma2: float, r: float, d: int) -> float:
    """Matrix Bernstein bound for independent centered sums.

    d exp(-t^2 / (2 (sigma^2 + r t / 3))) on P(lambda_max(sum X_k) >= t),
    with sigma^2 the spectral norm of the summed second moments and r the
    almost-sure eigenvalue bound on each term.
    """
    if t < 0.0:
        raise ParameterError(f"t must be nonnegative, got {t}")
    if sigma2 < 0.0 or r <= 0.0 or d < 1:
        raise ParameterError(f"need sigma2 >= 0, r > 0, d >= 1; got {sigma2}, {r}, {d}")
    return d * math.exp(-t * t / (2.0 * (sigma2 + r * t / 3.0)))


def bernstein_rhs(v: SymMat, p: int, c: float) -> SymMat:
    """Moment-condition majorant (p! c^(p-2) / 2) V for integer p >= 2."""
    if p < 2 or p != int(p):
        raise ParameterError(f"p must be an integer >= 2, got {p!r}")
    if c <= 0.0:
        raise ParameterError(f"c must be positive, got {c}")
    return (math.factorial(int(p)) * c ** (p - 2) / 2.0) * v


__all__ = [
    "BernsteinParams",
    "BoundReport",
    "bernstein_rhs",
    "generic_exponential_bound",
    "lambda_cap",
    "martingale_matrix_bound",
    "matrix_bernstein_indep_bound",
    "optimal_t",
    "scalar_bernstein_bound",
    "scalar_lambda",
    "scalar_martingale_bound",
    "tilt_coef",
]
