"""Hot numerical kernels: cyclic Jacobi eigensolver and Monte Carlo path loops.

Every kernel here exists twice:

* a scalar loop version, compiled by numba when the numba backend is
  active (decorated with :func:`matmart._backend.maybe_njit`), and
* a vectorized pure-numpy twin (suffix ``_np``) used by the numpy
  backend, batching over trials.

Dispatch wrappers at the bottom pick the active flavor.  Both flavors
consume identical SplitMix64 streams (see :mod:`matmart.rng`), so a trial
index maps to the same simulated path under either backend; floating
point results agree to roundoff (the numpy twins use LAPACK for batched
eigenvalues, the loop kernels use the Jacobi sweep below).

The per-matrix Jacobi path is shared by both backends for the public
spectral API, which keeps golden outputs backend-independent.
"""

import math

import numpy as np

from ._backend import USE_NUMBA, maybe_njit
from . import rng

# Jacobi convergence: off-diagonal Frobenius mass relative to total mass.
JACOBI_OFF_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100

KIND_RADEMACHER = 0
KIND_GAUSSIAN = 1
KIND_STATE_SCALED = 2

_GOLDEN = np.uint64(rng.GOLDEN)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_NEG53 = 2.0 ** -53


# ---------------------------------------------------------------------------
# SplitMix64 draws (scalar, njit-able; uint64 wraps natively under numba)
# ---------------------------------------------------------------------------


@maybe_njit
def _mix64(z):
    z = np.uint64(z)
    z ^= z >> np.uint64(30)
    z = z * _M1
    z ^= z >> np.uint64(27)
    z = z * _M2
    z ^= z >> np.uint64(31)
    return z


@maybe_njit
def _trial_seed(seed, trial):
    return _mix64(np.uint64(seed) + np.uint64(trial + 1) * _GOLDEN)


@maybe_njit
def _draw(tseed, step, j):
    key = _mix64(np.uint64(tseed) + np.uint64(step) * _GOLDEN)
    return _mix64(key + np.uint64(j + 1) * _GOLDEN)


@maybe_njit
def _sign_draw(tseed, step):
    z = _draw(tseed, step, 0)
    if z >> np.uint64(63):
        return -1.0
    return 1.0


@maybe_njit
def _gauss_draw(tseed, step):
    z1 = _draw(tseed, step, 0)
    z2 = _draw(tseed, step, 1)
    u1 = (float(z1 >> np.uint64(11)) + 1.0) * _TWO_NEG53
    u2 = float(z2 >> np.uint64(11)) * _TWO_NEG53
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


# ---------------------------------------------------------------------------
# Cyclic Jacobi eigensolver
# ---------------------------------------------------------------------------


@maybe_njit
def _jacobi_sweep_inplace(a, v, w, compute_v):
    """Diagonalize symmetric ``a`` in place by cyclic Jacobi rotations.

    On exit ``w`` holds eigenvalues in ascending order and, when
    ``compute_v`` is true, the columns of ``v`` are the matching unit
    eigenvectors.  Returns ``(off_residual, converged, sweeps)``;
    convergence means the off-diagonal Frobenius mass fell below
    ``JACOBI_OFF_TOL * (1 + frobenius_norm)``.
    """
    d = a.shape[0]
    if compute_v:
        for i in range(d):
            for j in range(d):
                v[i, j] = 0.0
            v[i, i] = 1.0

    off = 0.0
    sweeps = 0
    converged = False
    while sweeps <= JACOBI_MAX_SWEEPS:
        off2 = 0.0
        diag2 = 0.0
        for i in range(d):
            diag2 += a[i, i] * a[i, i]
            for j in range(i + 1, d):
                off2 += 2.0 * a[i, j] * a[i, j]
        off = math.sqrt(off2)
        if off <= JACOBI_OFF_TOL * (1.0 + math.sqrt(off2 + diag2)):
            converged = True
            break
        if sweeps == JACOBI_MAX_SWEEPS:
            break
        sweeps += 1
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                h = a[q, q] - a[p, p]
                # Rutishauser rotation; the first branch guards overflow
                # of theta**2 when |apq| is negligible next to |h|.
                if abs(h) + 100.0 * abs(apq) == abs(h):
                    t = apq / h
                else:
                    theta = 0.5 * h / apq
                    t = 1.0 / (abs(theta) + math.sqrt(1.0 + theta * theta))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                tau = s / (1.0 + c)
                hpq = t * apq
                a[p, p] -= hpq
                a[q, q] += hpq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for i in range(d):
                    if i != p and i != q:
                        aip = a[i, p]
                        aiq = a[i, q]
                        a[i, p] = aip - s * (aiq + tau * aip)
                        a[p, i] = a[i, p]
                        a[i, q] = aiq + s * (aip - tau * aiq)
                        a[q, i] = a[i, q]
                if compute_v:
                    for i in range(d):
                        vip = v[i, p]
                        viq = v[i, q]
                        v[i, p] = vip - s * (viq + tau * vip)
                        v[i, q] = viq + s * (vip - tau * viq)

    for i in range(d):
        w[i] = a[i, i]
    # stable insertion sort, ascending; keep eigenvector columns aligned
    for i in range(1, d):
        key = w[i]
        j = i - 1
        while j >= 0 and w[j] > key:
            j -= 1
        j += 1
        if j != i:
            for m in range(i, j, -1):
                w[m] = w[m - 1]
            w[j] = key
            if compute_v:
                for r in range(d):
                    tmp = v[r, i]
                    for m in range(i, j, -1):
                        v[r, m] = v[r, m - 1]
                    v[r, j] = tmp
    return off, converged, sweeps


@maybe_njit
def _lambda_max_of(a, buf, w):
    """Largest eigenvalue of symmetric ``a`` using caller-owned scratch."""
    d = a.shape[0]
    for i in range(d):
        for j in range(d):
            buf[i, j] = a[i, j]
    _jacobi_sweep_inplace(buf, buf, w, False)
    return w[d - 1]


def jacobi_eigh(a):
    """Eigendecomposition of a symmetric matrix via cyclic Jacobi.

    Returns ``(w, v, off_residual, converged)``; ``a`` is not modified.
    Runs compiled under the numba backend and as plain Python otherwise,
    with bit-identical results (the sweep uses only +, -, *, / and sqrt).
    """
    d = a.shape[0]
    buf = np.array(a, dtype=np.float64, copy=True, order="C")
    v = np.empty((d, d), dtype=np.float64)
    w = np.empty(d, dtype=np.float64)
    off, converged, _ = _jacobi_sweep_inplace(buf, v, w, True)
    return w, v, off, converged


def jacobi_eigvalsh(a):
    """Eigenvalues (ascending) of a symmetric matrix via cyclic Jacobi."""
    d = a.shape[0]
    buf = np.array(a, dtype=np.float64, copy=True, order="C")
    w = np.empty(d, dtype=np.float64)
    off, converged, _ = _jacobi_sweep_inplace(buf, buf, w, False)
    return w, off, converged


@maybe_njit
def _eigh_stack_kern(stack, w_out, v_out):
    b, d, _ = stack.shape
    buf = np.empty((d, d))
    for i in range(b):
        for r in range(d):
            for s in range(d):
                buf[r, s] = stack[i, r, s]
        _jacobi_sweep_inplace(buf, v_out[i], w_out[i], True)


@maybe_njit
def _eigvalsh_stack_kern(stack, w_out):
    b, d, _ = stack.shape
    buf = np.empty((d, d))
    dummy = np.empty((1, 1))
    for i in range(b):
        for r in range(d):
            for s in range(d):
                buf[r, s] = stack[i, r, s]
        _jacobi_sweep_inplace(buf, dummy, w_out[i], False)


def eigh_stack(stack):
    """Batched eigendecomposition of a (B, d, d) stack of symmetric matrices.

    numba backend: Jacobi per item.  numpy backend: LAPACK ``eigh``.
    Both return eigenvalues ascending.
    """
    stack = np.ascontiguousarray(stack, dtype=np.float64)
    if USE_NUMBA:
        b, d, _ = stack.shape
        w = np.empty((b, d))
        v = np.empty((b, d, d))
        _eigh_stack_kern(stack, w, v)
        return w, v
    w, v = np.linalg.eigh(stack)
    return w, v


def eigvalsh_stack(stack):
    """Batched eigenvalues (ascending) of a (B, d, d) symmetric stack."""
    stack = np.ascontiguousarray(stack, dtype=np.float64)
    if USE_NUMBA:
        b, d, _ = stack.shape
        w = np.empty((b, d))
        _eigvalsh_stack_kern(stack, w)
        return w
    return np.linalg.eigvalsh(stack)


# ---------------------------------------------------------------------------
# Path-simulation kernels (loop flavor)
# ---------------------------------------------------------------------------
#
# Shared argument conventions:
#   kind        int code (0 rademacher, 1 gaussian, 2 state_scaled)
#   base        (N, d, d) per-step direction matrices A_k (k = 1..N)
#   sq_w, sq_q  (N, d), (N, d, d) eigenvalues/vectors of A_k**2 (used to
#               assemble Lambda terms for state_scaled without eigensolves)
#   coef        t**2 / (2 (1 - t c)), the Lambda tilt coefficient
#   seed        master experiment seed; trial i uses rng.trial_seed(seed, i)


@maybe_njit
def _scale_of(lmax_state, s_lo, s_hi):
    # bounded predictable scaling rule "inv_sq_lmax"; the clamp keeps
    # roundoff from pushing the value outside [s_lo, s_hi]
    s = s_lo + (s_hi - s_lo) / (1.0 + lmax_state * lmax_state)
    if s > s_hi:
        return s_hi
    if s < s_lo:
        return s_lo
    return s


@maybe_njit
def _kern_tail_stats(kind, base, sq_w, sq_q, s_lo, s_hi, coef, n,
                     seed, i0, i1, dev_out, var_out):
    """Per-trial statistics of the fixed-horizon deviation event.

    Fills ``dev_out[i - i0] = lambda_max(M_n)`` and, for the state-scaled
    kind, ``var_out[i - i0] = lambda_max(sum_{k<=n} Lambda_{V_k})``
    (other kinds leave ``var_out`` at 0; their variance statistic is
    deterministic and handled by the caller).
    """
    d = base.shape[1]
    m = np.empty((d, d))
    cum = np.empty((d, d))
    buf = np.empty((d, d))
    w = np.empty(d)
    lamv = np.empty(d)
    for trial in range(i0, i1):
        tseed = _trial_seed(seed, trial)
        for r in range(d):
            for s_ in range(d):
                m[r, s_] = 0.0
                cum[r, s_] = 0.0
        for k in range(1, n + 1):
            if kind == 2:
                lmax_state = _lambda_max_of(m, buf, w)
                scale = _scale_of(lmax_state, s_lo, s_hi)
                xi = _sign_draw(tseed, k) * scale
                for j in range(d):
                    lamv[j] = math.log1p(coef * scale * scale * sq_w[k - 1, j])
                for r in range(d):
                    for s_ in range(d):
                        acc = 0.0
                        for j in range(d):
                            acc += sq_q[k - 1, r, j] * lamv[j] * sq_q[k - 1, s_, j]
                        cum[r, s_] += acc
            elif kind == 1:
                xi = _gauss_draw(tseed, k)
            else:
                xi = _sign_draw(tseed, k)
            for r in range(d):
                for s_ in range(d):
                    m[r, s_] += xi * base[k - 1, r, s_]
        dev_out[trial - i0] = _lambda_max_of(m, buf, w)
        if kind == 2:
            var_out[trial - i0] = _lambda_max_of(cum, buf, w)
        else:
            var_out[trial - i0] = 0.0


@maybe_njit
def _trace_exp_of(e, buf, w):
    d = e.shape[0]
    for r in range(d):
        for s_ in range(d):
            buf[r, s_] = e[r, s_]
    _jacobi_sweep_inplace(buf, buf, w, False)
    acc = 0.0
    for i in range(d):
        acc += math.exp(w[i])
    return acc


@maybe_njit
def _kern_stopped_scan(kind, base, sq_w, sq_q, s_lo, s_hi, coef, t,
                       x, var_thresh, var_ok_const, cumlam_const, lb_log_step,
                       seed, i0, i1,
                       tau_out, s_stop_out, lb_viol_out, hit_out):
    """Scan each path for the deviation-and-variance event.

    Per trial: the first event index tau (N + 1 when the event never
    occurs), the stopped value S_{tau ^ N}, and the count of indices n
    at which the event held but S_n fell below
    exp(n * lb_log_step) - 1e-9 S_n (the pathwise lower bound).

    For the state-scaled kind the variance clause is path-dependent and
    checked against ``var_thresh[n]`` = n * Lambda_y(t); for the other
    kinds it is deterministic and precomputed in ``var_ok_const[n]``.
    ``cumlam_const[n-1]`` likewise holds the deterministic cumulative
    Lambda matrices (ignored for state_scaled, which accumulates its own).
    """
    npath = base.shape[0]
    d = base.shape[1]
    m = np.empty((d, d))
    cum = np.empty((d, d))
    e = np.empty((d, d))
    buf = np.empty((d, d))
    w = np.empty(d)
    lamv = np.empty(d)
    for trial in range(i0, i1):
        tseed = _trial_seed(seed, trial)
        for r in range(d):
            for s_ in range(d):
                m[r, s_] = 0.0
                cum[r, s_] = 0.0
        tau = npath + 1
        s_at_stop = -1.0
        viol = 0
        for k in range(1, npath + 1):
            if kind == 2:
                lmax_state = _lambda_max_of(m, buf, w)
                scale = _scale_of(lmax_state, s_lo, s_hi)
                xi = _sign_draw(tseed, k) * scale
                for j in range(d):
                    lamv[j] = math.log1p(coef * scale * scale * sq_w[k - 1, j])
                for r in range(d):
                    for s_ in range(d):
                        acc = 0.0
                        for j in range(d):
                            acc += sq_q[k - 1, r, j] * lamv[j] * sq_q[k - 1, s_, j]
                        cum[r, s_] += acc
            elif kind == 1:
                xi = _gauss_draw(tseed, k)
            else:
                xi = _sign_draw(tseed, k)
            for r in range(d):
                for s_ in range(d):
                    m[r, s_] += xi * base[k - 1, r, s_]

            dev = _lambda_max_of(m, buf, w)
            if dev >= k * x:
                if kind == 2:
                    ok_var = _lambda_max_of(cum, buf, w) <= var_thresh[k]
                else:
                    ok_var = var_ok_const[k] != 0
                if ok_var:
                    # event holds at k: pathwise lower-bound check
                    for r in range(d):
                        for s_ in range(d):
                            if kind == 2:
                                e[r, s_] = t * m[r, s_] - cum[r, s_]
                            else:
                                e[r, s_] = t * m[r, s_] - cumlam_const[k - 1, r, s_]
                    s_val = _trace_exp_of(e, buf, w)
                    if s_val < math.exp(k * lb_log_step) - 1e-9 * s_val:
                        viol += 1
                    if tau > npath:
                        tau = k
                        s_at_stop = s_val
        if tau > npath:
            # no event: stopped value is S_N
            for r in range(d):
                for s_ in range(d):
                    if kind == 2:
                        e[r, s_] = t * m[r, s_] - cum[r, s_]
                    else:
                        e[r, s_] = t * m[r, s_] - cumlam_const[npath - 1, r, s_]
            s_at_stop = _trace_exp_of(e, buf, w)
        tau_out[trial - i0] = tau
        s_stop_out[trial - i0] = s_at_stop
        lb_viol_out[trial - i0] = viol
        hit_out[trial - i0] = 1 if tau <= npath else 0


@maybe_njit
def _kern_s_final(kind, base, sq_w, sq_q, s_lo, s_hi, coef, t,
                  cumlam_final, seed, i0, i1, s_out):
    """Terminal exponential-process value S_N for each trial."""
    npath = base.shape[0]
    d = base.shape[1]
    m = np.empty((d, d))
    cum = np.empty((d, d))
    e = np.empty((d, d))
    buf = np.empty((d, d))
    w = np.empty(d)
    lamv = np.empty(d)
    for trial in range(i0, i1):
        tseed = _trial_seed(seed, trial)
        for r in range(d):
            for s_ in range(d):
                m[r, s_] = 0.0
                cum[r, s_] = 0.0
        for k in range(1, npath + 1):
            if kind == 2:
                lmax_state = _lambda_max_of(m, buf, w)
                scale = _scale_of(lmax_state, s_lo, s_hi)
                xi = _sign_draw(tseed, k) * scale
                for j in range(d):
                    lamv[j] = math.log1p(coef * scale * scale * sq_w[k - 1, j])
                for r in range(d):
                    for s_ in range(d):
                        acc = 0.0
                        for j in range(d):
                            acc += sq_q[k - 1, r, j] * lamv[j] * sq_q[k - 1, s_, j]
                        cum[r, s_] += acc
            elif kind == 1:
                xi = _gauss_draw(tseed, k)
            else:
                xi = _sign_draw(tseed, k)
            for r in range(d):
                for s_ in range(d):
                    m[r, s_] += xi * base[k - 1, r, s_]
        for r in range(d):
            for s_ in range(d):
                if kind == 2:
                    e[r, s_] = t * m[r, s_] - cum[r, s_]
                else:
                    e[r, s_] = t * m[r, s_] - cumlam_final[r, s_]
        s_out[trial - i0] = _trace_exp_of(e, buf, w)


@maybe_njit
def _kern_cond_gauss_s(cmat, amat, t, seed, i0, i1, s_out):
    """S-values after one conditional gaussian resample of the last step.

    ``cmat`` is the fixed part t M_{n-1} - cumulative Lambda through n;
    each resample j evaluates tr exp(cmat + t g_j A_n).
    """
    d = cmat.shape[0]
    e = np.empty((d, d))
    buf = np.empty((d, d))
    w = np.empty(d)
    for trial in range(i0, i1):
        tseed = _trial_seed(seed, trial)
        g = _gauss_draw(tseed, 1)
        for r in range(d):
            for s_ in range(d):
                e[r, s_] = cmat[r, s_] + t * g * amat[r, s_]
        s_out[trial - i0] = _trace_exp_of(e, buf, w)


# ---------------------------------------------------------------------------
# Vectorized numpy twins
# ---------------------------------------------------------------------------

_CHUNK = 8192


def _signs_np(tseeds, step):
    return rng.sign_vec(rng.draw_vec(tseeds, step, 0))


def _gauss_np(tseeds, step):
    return rng.gauss_vec(rng.draw_vec(tseeds, step, 0), rng.draw_vec(tseeds, step, 1))


def _lambda_terms_np(sq_w_k, sq_q_k, coef, scales):
    """Lambda_{s^2 A_k^2}(t) for a vector of scales; shape (T, d, d)."""
    lam = np.log1p(coef * (scales * scales)[:, None] * sq_w_k[None, :])
    return np.einsum("ij,tj,kj->tik", sq_q_k, lam, sq_q_k)


def _tail_stats_np(kind, base, sq_w, sq_q, s_lo, s_hi, coef, n, seed, i0, i1,
                   dev_out, var_out):
    d = base.shape[1]
    for c0 in range(i0, i1, _CHUNK):
        c1 = min(c0 + _CHUNK, i1)
        tseeds = rng.trial_seed_vec(seed, np.arange(c0, c1, dtype=np.uint64))
        tt = c1 - c0
        if kind == KIND_STATE_SCALED:
            m = np.zeros((tt, d, d))
            cum = np.zeros((tt, d, d))
            for k in range(1, n + 1):
                lmax_state = eigvalsh_stack(m)[:, -1] if k > 1 else np.zeros(tt)
                scale = np.clip(s_lo + (s_hi - s_lo) / (1.0 + lmax_state * lmax_state), s_lo, s_hi)
                xi = _signs_np(tseeds, k) * scale
                cum += _lambda_terms_np(sq_w[k - 1], sq_q[k - 1], coef, scale)
                m += xi[:, None, None] * base[k - 1]
            dev_out[c0 - i0:c1 - i0] = eigvalsh_stack(m)[:, -1]
            var_out[c0 - i0:c1 - i0] = eigvalsh_stack(cum)[:, -1]
        else:
            if kind == KIND_GAUSSIAN:
                xs = rng.step_gaussians(tseeds, range(1, n + 1))
            else:
                xs = rng.step_signs(tseeds, range(1, n + 1))
            m = np.einsum("tk,kij->tij", xs, base[:n])
            dev_out[c0 - i0:c1 - i0] = eigvalsh_stack(m)[:, -1]
            var_out[c0 - i0:c1 - i0] = 0.0


def _stopped_scan_np(kind, base, sq_w, sq_q, s_lo, s_hi, coef, t, x,
                     var_thresh, var_ok_const, cumlam_const, lb_log_step,
                     seed, i0, i1,
                     tau_out, s_stop_out, lb_viol_out, hit_out):
    npath = base.shape[0]
    d = base.shape[1]
    for c0 in range(i0, i1, _CHUNK):
        c1 = min(c0 + _CHUNK, i1)
        tseeds = rng.trial_seed_vec(seed, np.arange(c0, c1, dtype=np.uint64))
        tt = c1 - c0
        m = np.zeros((tt, d, d))
        cum = np.zeros((tt, d, d)) if kind == KIND_STATE_SCALED else None
        tau = np.full(tt, npath + 1, dtype=np.int64)
        s_stop = np.full(tt, -1.0)
        viol = np.zeros(tt, dtype=np.int64)
        for k in range(1, npath + 1):
            if kind == KIND_STATE_SCALED:
                lmax_state = eigvalsh_stack(m)[:, -1] if k > 1 else np.zeros(tt)
                scale = np.clip(s_lo + (s_hi - s_lo) / (1.0 + lmax_state * lmax_state), s_lo, s_hi)
                xi = _signs_np(tseeds, k) * scale
                cum += _lambda_terms_np(sq_w[k - 1], sq_q[k - 1], coef, scale)
            elif kind == KIND_GAUSSIAN:
                xi = _gauss_np(tseeds, k)
            else:
                xi = _signs_np(tseeds, k)
            m += xi[:, None, None] * base[k - 1]

            dev = eigvalsh_stack(m)[:, -1]
            flag = dev >= k * x
            if np.any(flag):
                if kind == KIND_STATE_SCALED:
                    var_stat = eigvalsh_stack(cum[flag])[:, -1]
                    flag_idx = np.flatnonzero(flag)[var_stat <= var_thresh[k]]
                else:
                    flag_idx = np.flatnonzero(flag) if var_ok_const[k] else np.empty(0, dtype=np.int64)
                if flag_idx.size:
                    if kind == KIND_STATE_SCALED:
                        e = t * m[flag_idx] - cum[flag_idx]
                    else:
                        e = t * m[flag_idx] - cumlam_const[k - 1][None, :, :]
                    s_val = np.exp(eigvalsh_stack(e)).sum(axis=1)
                    viol[flag_idx] += (s_val < np.exp(k * lb_log_step) - 1e-9 * s_val)
                    fresh = tau[flag_idx] > npath
                    tau[flag_idx[fresh]] = k
                    s_stop[flag_idx[fresh]] = s_val[fresh]
        open_idx = np.flatnonzero(tau > npath)
        if open_idx.size:
            if kind == KIND_STATE_SCALED:
                e = t * m[open_idx] - cum[open_idx]
            else:
                e = t * m[open_idx] - cumlam_const[npath - 1][None, :, :]
            s_stop[open_idx] = np.exp(eigvalsh_stack(e)).sum(axis=1)
        sl = slice(c0 - i0, c1 - i0)
        tau_out[sl] = tau
        s_stop_out[sl] = s_stop
        lb_viol_out[sl] = viol
        hit_out[sl] = (tau <= npath).astype(np.uint8)


def _s_final_np(kind, base, sq_w, sq_q, s_lo, s_hi, coef, t, cumlam_final,
                seed, i0, i1, s_out):
    npath = base.shape[0]
    d = base.shape[1]
    for c0 in range(i0, i1, _CHUNK):
        c1 = min(c0 + _CHUNK, i1)
        tseeds = rng.trial_seed_vec(seed, np.arange(c0, c1, dtype=np.uint64))
        tt = c1 - c0
        if kind == KIND_STATE_SCALED:
            m = np.zeros((tt, d, d))
            cum = np.zeros((tt, d, d))
            for k in range(1, npath + 1):
                lmax_state = eigvalsh_stack(m)[:, -1] if k > 1 else np.zeros(tt)
                scale = np.clip(s_lo + (s_hi - s_lo) / (1.0 + lmax_state * lmax_state), s_lo, s_hi)
                xi = _signs_np(tseeds, k) * scale
                cum += _lambda_terms_np(sq_w[k - 1], sq_q[k - 1], coef, scale)
                m += xi[:, None, None] * base[k - 1]
            e = t * m - cum
        else:
            if kind == KIND_GAUSSIAN:
                xs = rng.step_gaussians(tseeds, range(1, npath + 1))
            else:
                xs = rng.step_signs(tseeds, range(1, npath + 1))
            m = np.einsum("tk,kij->tij", xs, base)
            e = t * m - cumlam_final[None, :, :]
        s_out[c0 - i0:c1 - i0] = np.exp(eigvalsh_stack(e)).sum(axis=1)


def _cond_gauss_s_np(cmat, amat, t, seed, i0, i1, s_out):
    for c0 in range(i0, i1, _CHUNK):
        c1 = min(c0 + _CHUNK, i1)
        tseeds = rng.trial_seed_vec(seed, np.arange(c0, c1, dtype=np.uint64))
        g = _gauss_np(tseeds, 1)
        e = cmat[None, :, :] + (t * g)[:, None, None] * amat[None, :, :]
        s_out[c0 - i0:c1 - i0] = np.exp(eigvalsh_stack(e)).sum(axis=1)


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


def _prep(base):
    return np.ascontiguousarray(base, dtype=np.float64)


def _useed(seed):
    # numba boxes plain ints as int64; mask and hand over as uint64
    return np.uint64(int(seed) & rng.MASK64)


def tail_stats(kind, base, sq_w, sq_q, s_lo, s_hi, coef, n, seed, i0, i1):
    """Deviation / variance statistics for trials [i0, i1); see kernel docs."""
    count = i1 - i0
    dev = np.empty(count)
    var = np.empty(count)
    fn = _kern_tail_stats if USE_NUMBA else _tail_stats_np
    fn(kind, _prep(base), _prep(sq_w), _prep(sq_q),
       float(s_lo), float(s_hi), float(coef), int(n), _useed(seed),
       int(i0), int(i1), dev, var)
    return dev, var


def stopped_scan(kind, base, sq_w, sq_q, s_lo, s_hi, coef, t, x,
                 var_thresh, var_ok_const, cumlam_const, lb_log_step, seed, i0, i1):
    """Stopping-time scan for trials [i0, i1); see kernel docs."""
    count = i1 - i0
    tau = np.empty(count, dtype=np.int64)
    s_stop = np.empty(count)
    lb_viol = np.empty(count, dtype=np.int64)
    hit = np.empty(count, dtype=np.uint8)
    fn = _kern_stopped_scan if USE_NUMBA else _stopped_scan_np
    fn(kind, _prep(base), _prep(sq_w), _prep(sq_q),
       float(s_lo), float(s_hi), float(coef), float(t), float(x),
       np.ascontiguousarray(var_thresh, dtype=np.float64),
       np.ascontiguousarray(var_ok_const, dtype=np.uint8),
       _prep(cumlam_const), float(lb_log_step), _useed(seed),
       int(i0), int(i1), tau, s_stop, lb_viol, hit)
    return tau, s_stop, lb_viol, hit


def s_final(kind, base, sq_w, sq_q, s_lo, s_hi, coef, t, cumlam_final,
            seed, i0, i1):
    """Terminal S_N values for trials [i0, i1)."""
    count = i1 - i0
    out = np.empty(count)
    fn = _kern_s_final if USE_NUMBA else _s_final_np
    fn(kind, _prep(base), _prep(sq_w), _prep(sq_q),
       float(s_lo), float(s_hi), float(coef), float(t),
       _prep(cumlam_final), _useed(seed), int(i0), int(i1), out)
    return out


def cond_gauss_s(cmat, amat, t, seed, i0, i1):
    """Conditional-resample S values for a gaussian last step."""
    count = i1 - i0
    out = np.empty(count)
    fn = _kern_cond_gauss_s if USE_NUMBA else _cond_gauss_s_np
    fn(_prep(cmat), _prep(amat), float(t), _useed(seed), int(i0), int(i1), out)
    return out
