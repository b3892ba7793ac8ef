import numpy as np
import pytest

from ktorus import _kernels
from ktorus._kernels import pack_coeffs, pure
from conftest import random_cf

fast = pytest.importorskip("ktorus._kernels._fast",
                           reason="compiled backend not built")


def test_compiled_backend_selected_by_default():
    assert _kernels.BACKEND == "cython"


def test_mu_jet1_parity():
    rng = np.random.default_rng(11)
    cf = random_cf(rng, degree=4)
    packed = pack_coeffs(cf)
    x = rng.uniform(-2, 2, size=200)
    y = rng.uniform(-2, 2, size=200)
    for xi, yi in zip(x, y):
        a = np.asarray(pure.mu_jet1(*packed, xi, yi))
        b = np.asarray(fast.mu_jet1(*packed, xi, yi))
        assert np.max(np.abs(a - b)) < 1e-14


def test_mu_jet1_matches_conformal_factor():
    rng = np.random.default_rng(12)
    cf = random_cf(rng, degree=3)
    packed = pack_coeffs(cf)
    for _ in range(50):
        pt = rng.uniform(-1, 1, size=2)
        m, mx, my = fast.mu_jet1(*packed, pt[0], pt[1])
        assert abs(m - cf.derivative(pt)) < 1e-13
        assert abs(mx - cf.derivative(pt, (1, 0))) < 1e-12
        assert abs(my - cf.derivative(pt, (0, 1))) < 1e-12


def test_integrate_parity():
    # short horizon: chaotic spreading amplifies roundoff on long runs
    rng = np.random.default_rng(13)
    cf = random_cf(rng, degree=3)
    packed = pack_coeffs(cf)
    ts = np.linspace(0.0, 2.0, 17)
    for _ in range(4):
        y0 = np.array([rng.uniform(0, 1), rng.uniform(0, 1),
                       rng.uniform(0, 2 * np.pi)])
        a, _, _ = pure.integrate(*packed, y0, 0.0, ts)
        b, _, _ = fast.integrate(*packed, y0, 0.0, ts)
        assert np.max(np.abs(a - b)) < 1e-6


def test_integrate_parity_tight_tolerance():
    rng = np.random.default_rng(14)
    cf = random_cf(rng, degree=2, amp=0.05)
    packed = pack_coeffs(cf)
    ts = np.linspace(0.0, 3.0, 7)
    y0 = np.array([0.2, 0.7, 1.1])
    a, _, _ = pure.integrate(*packed, y0, 0.0, ts, rtol=1e-12, atol=1e-12)
    b, _, _ = fast.integrate(*packed, y0, 0.0, ts, rtol=1e-12, atol=1e-12)
    assert np.max(np.abs(a - b)) < 1e-9
