"""Backend-equivalence checks: every jitted kernel must agree with its pure
numpy fallback (exactly for root-free arithmetic, to a couple of ulps where
libm cbrt differs), and the fused run loop must reproduce the generic
per-step path."""

import numpy as np
import pytest

from dagrad import kernels
from dagrad.backend import NUMBA_ENABLED
from dagrad.numerics import make_rng

pytestmark = pytest.mark.skipif(
    not NUMBA_ENABLED, reason="numba backend disabled; nothing to compare")


@pytest.fixture
def vecs():
    rng = make_rng(42)
    d = 17
    return {
        "s": rng.normal(size=d),
        "nu": np.abs(rng.normal(size=d)) + 0.05,
        "x": rng.normal(size=d),
        "x0": rng.normal(size=d),
        "g": rng.normal(size=d),
        "g2": np.full(d, 4.0),
        "m": rng.normal(size=d),
        "v": np.abs(rng.normal(size=d)),
    }


def assert_pairs_close(got, want, exact=False):
    for a, b in zip(got, want):
        if exact:
            assert np.array_equal(a, b)
        else:
            # cbrt/sqrt libm differences are ~1 ulp, but cancellation in
            # x0 - s/denominator can amplify them relative to the output
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


def test_madgrad_step_backends(vecs):
    args = (vecs["s"], vecs["nu"], vecs["x"], vecs["x0"], vecs["g"], 0.05, 0.6, 1e-6)
    assert_pairs_close(kernels.madgrad_step_k(*args), kernels.madgrad_step_k_np(*args))


def test_madgrad_theory_step_backends(vecs):
    args = (vecs["s"], vecs["nu"], vecs["x"], vecs["x0"], vecs["g"],
            0.05, 0.07, 0.6, vecs["g2"])
    assert_pairs_close(kernels.madgrad_theory_step_k(*args),
                       kernels.madgrad_theory_step_k_np(*args))


def test_sparse_kernel_backends(vecs):
    idx = np.array([1, 5, 9], dtype=np.int64)
    vals = np.array([0.3, -1.2, 2.0])
    a = [vecs["s"].copy(), vecs["nu"].copy(), vecs["x"].copy()]
    b = [vecs["s"].copy(), vecs["nu"].copy(), vecs["x"].copy()]
    kernels.madgrad_sparse_k(a[0], a[1], a[2], vecs["x0"], idx, vals, 0.05, 1e-6)
    kernels.madgrad_sparse_k_np(b[0], b[1], b[2], vecs["x0"], idx, vals, 0.05, 1e-6)
    assert_pairs_close(a, b)
    # untouched coordinates did not move at all
    mask = np.ones(17, dtype=bool)
    mask[idx] = False
    assert np.array_equal(a[2][mask], vecs["x"][mask])


def test_root_free_kernels_bit_identical(vecs):
    # kernels without cbrt/sqrt-of-sum must agree exactly
    args = (vecs["m"], vecs["x"], vecs["g"], 0.01, 0.9)
    assert_pairs_close(kernels.heavy_ball_step_k(*args),
                       kernels.heavy_ball_step_k_np(*args), exact=True)
    args = (vecs["s"], vecs["x"], vecs["x0"], vecs["g"], 0.3, 2.5, 0.7)
    assert_pairs_close(kernels.dual_avg_step_k(*args),
                       kernels.dual_avg_step_k_np(*args), exact=True)
    args = (vecs["x"], vecs["s"], vecs["g"], 0.1, 0.25)
    assert_pairs_close(kernels.inline_avg_step_k(*args),
                       kernels.inline_avg_step_k_np(*args), exact=True)


def test_adam_adagrad_backends(vecs):
    args = (vecs["m"], vecs["v"], vecs["v"], vecs["x"], vecs["g"],
            0.001, 0.9, 0.999, 1e-8, 0.271, 0.3439, True)
    assert_pairs_close(kernels.adam_step_k(*args), kernels.adam_step_k_np(*args))
    args = (vecs["s"], vecs["v"], vecs["x0"], vecs["g"], 0.05, 1e-6)
    assert_pairs_close(kernels.adagrad_da_step_k(*args),
                       kernels.adagrad_da_step_k_np(*args))
    args = (vecs["v"], vecs["x"], vecs["g"], 0.05, 1e-6)
    assert_pairs_close(kernels.adagrad_md_step_k(*args),
                       kernels.adagrad_md_step_k_np(*args))


def test_fused_trace_matches_stepwise_kernels():
    rng = make_rng(7)
    points = rng.uniform(-1, 1, size=(9, 4))
    steps = 400
    xi = rng.integers(0, 9, size=steps + 1)
    x0 = np.full(4, 0.6)
    g2 = np.ones(4)
    rec = np.arange(0, steps + 1, 25, dtype=np.int64)

    for theory in (False, True):
        xrec, n = kernels.madgrad_trace(points, xi, x0, 0.02, 1e-6, 0.0,
                                        0.0, 0.5, 0.0, True, theory, g2, False, rec)
        assert n == rec.shape[0]
        s = np.zeros(4)
        nu = np.zeros(4)
        x = x0.copy()
        ri = 0
        for k in range(steps + 1):
            if ri < rec.shape[0] and rec[ri] == k:
                assert np.array_equal(xrec[ri], x), f"k={k} theory={theory}"
                ri += 1
            if k == steps:
                break
            g = np.sign(x - points[xi[k]])
            lam = 0.02 * np.sqrt(k + 1.0)
            c_next = 1.5 / ((k + 1.0) + 1.5)
            if theory:
                lam_next = 0.02 * np.sqrt(k + 2.0)
                s, nu, x = kernels.madgrad_theory_step_k(s, nu, x, x0, g, lam,
                                                         lam_next, c_next, g2)
            else:
                s, nu, x = kernels.madgrad_step_k(s, nu, x, x0, g, lam, c_next, 1e-6)


def test_fused_trace_backends_agree():
    rng = make_rng(8)
    points = rng.uniform(-1, 1, size=(6, 3))
    xi = rng.integers(0, 6, size=301)
    x0 = np.zeros(3)
    rec = np.arange(0, 301, 50, dtype=np.int64)
    a, na = kernels.madgrad_trace(points, xi, x0, 0.05, 1e-6, 0.0,
                                  0.3, 0.0, 0.0, False, False, np.ones(3), True, rec)
    b, nb = kernels.madgrad_trace_np(points, xi, x0, 0.05, 1e-6, 0.0,
                                     0.3, 0.0, 0.0, False, False, np.ones(3), True, rec)
    assert na == nb
    np.testing.assert_allclose(a, b, rtol=1e-12)
