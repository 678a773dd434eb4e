"""Stream contracts and backend agreement for the hot kernels."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from matmart import _kernels, rng
from matmart._backend import USE_NUMBA, active_backend
from matmart.fixtures import gaussian_chain


class TestStreams:
    def test_reference_vs_vectorized(self):
        for seed in (0, 42, 2 ** 63 + 17, 2 ** 64 - 1):
            trials = np.arange(64, dtype=np.uint64)
            vec = rng.trial_seed_vec(seed, trials)
            for i in (0, 1, 63):
                assert int(vec[i]) == rng.trial_seed(seed, i)
            ts = rng.trial_seed(seed, 5)
            for step in (1, 2, 17):
                for j in (0, 1, 5):
                    zv = rng.draw_vec(np.array([ts], dtype=np.uint64), step, j)
                    assert int(zv[0]) == rng.draw(ts, step, j)

    def test_streams_distinct_across_axes(self):
        base = rng.trial_seed(9, 0)
        draws = {rng.draw(base, k, j) for k in range(1, 20) for j in range(4)}
        assert len(draws) == 19 * 4
        assert rng.trial_seed(9, 0) != rng.trial_seed(9, 1)
        assert rng.trial_seed(9, 0) != rng.trial_seed(10, 0)

    def test_value_maps(self):
        z = rng.draw(rng.trial_seed(1, 0), 1, 0)
        u = rng.uniform(z)
        assert 0.0 <= u < 1.0
        assert rng.sign(z) in (-1.0, 1.0)

    def test_gaussian_moments(self):
        tseeds = rng.trial_seed_vec(2024, np.arange(200000, dtype=np.uint64))
        g = rng.gauss_vec(rng.draw_vec(tseeds, 1, 0), rng.draw_vec(tseeds, 1, 1))
        t = g.size
        assert abs(g.mean()) <= 5.0 / np.sqrt(t)
        assert abs(g.var() - 1.0) <= 5.0 * np.sqrt(2.0 / t)
        assert abs((g ** 4).mean() - 3.0) <= 5.0 * np.sqrt(96.0 / t)

    def test_sign_balance(self):
        tseeds = rng.trial_seed_vec(7, np.arange(100000, dtype=np.uint64))
        s = rng.sign_vec(rng.draw_vec(tseeds, 1, 0))
        assert abs(s.mean()) <= 5.0 / np.sqrt(s.size)


class TestPartitionInvariance:
    def test_tail_stats_chunking(self):
        spec = gaussian_chain(d=3, horizon=8)
        base = spec.base_stack()
        sq = np.einsum("kij,kjl->kil", base, base)
        sq_w, sq_q = _kernels.eigh_stack(sq)
        whole = _kernels.tail_stats(1, base, sq_w, sq_q, 0.0, 0.0, 0.1, 8, 99, 0, 500)
        left = _kernels.tail_stats(1, base, sq_w, sq_q, 0.0, 0.0, 0.1, 8, 99, 0, 123)
        right = _kernels.tail_stats(1, base, sq_w, sq_q, 0.0, 0.0, 0.1, 8, 99, 123, 500)
        np.testing.assert_array_equal(whole[0], np.concatenate([left[0], right[0]]))
        np.testing.assert_array_equal(whole[1], np.concatenate([left[1], right[1]]))


@pytest.mark.skipif(not USE_NUMBA, reason="compiled flavor not active")
class TestCompiledVsPython:
    def test_jacobi_bit_identical(self):
        # the plain-Python source of the compiled kernel must produce the
        # same bits: only +,-,*,/ and sqrt are involved
        py_impl = _kernels._jacobi_sweep_inplace.py_func
        rs = np.random.default_rng(3)
        for _ in range(50):
            d = int(rs.integers(1, 7))
            a = rs.normal(size=(d, d))
            a = (a + a.T) / 2.0
            w1 = np.empty(d)
            v1 = np.empty((d, d))
            b1 = a.copy()
            _kernels._jacobi_sweep_inplace(b1, v1, w1, True)
            w2 = np.empty(d)
            v2 = np.empty((d, d))
            b2 = a.copy()
            py_impl(b2, v2, w2, True)
            np.testing.assert_array_equal(w1, w2)
            np.testing.assert_array_equal(v1, v2)

    def test_gauss_draw_matches_reference(self):
        ts = rng.trial_seed(11, 4)
        for step in (1, 3, 9):
            ref = rng.gauss(rng.draw(ts, step, 0), rng.draw(ts, step, 1))
            compiled = float(_kernels._gauss_draw(np.uint64(ts), step))
            assert ref == pytest.approx(compiled, abs=1e-14)


def _run_in_backend(backend, code):
    env = dict(os.environ, MATMART_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", code], capture_output=True,
                         text=True, env=env, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


_AGREEMENT_CODE = """
import json
import numpy as np
from matmart import _kernels
from matmart.fixtures import rademacher_chain, state_scaled_chain

spec = rademacher_chain(d=2, horizon=10)
base = spec.base_stack()
sq = np.einsum("kij,kjl->kil", base, base)
sq_w, sq_q = _kernels.eigh_stack(sq)
dev_r, _ = _kernels.tail_stats(0, base, sq_w, sq_q, 0.0, 0.0, 0.2, 10, 77, 0, 400)

ss = state_scaled_chain(d=2, horizon=6)
base2 = ss.base_stack()
sq2 = np.einsum("kij,kjl->kil", base2, base2)
sq_w2, sq_q2 = _kernels.eigh_stack(sq2)
dev_s, var_s = _kernels.tail_stats(2, base2, sq_w2, sq_q2, ss.s_lo, ss.s_hi,
                                   0.2, 6, 77, 0, 300)
print(json.dumps({
    "dev_r": dev_r.tolist(),
    "dev_s": dev_s.tolist(),
    "var_s": var_s.tolist(),
}))
"""


@pytest.mark.slow
def test_backends_agree_on_paths():
    """The numba and numpy flavors simulate identical trials.

    Same integer streams by construction; eigenvalue routes differ (Jacobi
    vs LAPACK), so agreement is to roundoff, not bitwise.
    """
    a = _run_in_backend("numba", _AGREEMENT_CODE)
    b = _run_in_backend("numpy", _AGREEMENT_CODE)
    for key, tol in (("dev_r", 1e-11), ("dev_s", 1e-11), ("var_s", 1e-11)):
        np.testing.assert_allclose(np.array(a[key]), np.array(b[key]), atol=tol)


def test_active_backend_reports():
    assert active_backend() in ("numba", "numpy")
    assert (active_backend() == "numba") == USE_NUMBA
