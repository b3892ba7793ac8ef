import numpy as np
import pytest

from ktorus import ConformalFactor, Lattice
from ktorus.metric import (default_grid_n, gauss_bonnet_defect,
                           gaussian_curvature, transformed)

from conftest import random_cf


def test_lattice_dual_pairing():
    lat = Lattice((1.0, 0.0), (0.3, 1.1))
    for i, e in enumerate((lat.e1, lat.e2)):
        for j in range(2):
            want = 2.0 * np.pi if i == j else 0.0
            got = float(e @ lat.dual_vector(1 - j, j))
            assert abs(got - want) < 1e-12


def test_lattice_orientation_rejected():
    with pytest.raises(ValueError):
        Lattice((1.0, 0.0), (0.5, -1.0))


def test_hermitian_closure_real_samples():
    cf = ConformalFactor(coeffs={(1, 2): 0.1 + 0.05j, (2, -1): 0.02j})
    rng = np.random.default_rng(0)
    pts = rng.random((40, 2)) * 2.0 - 0.5
    vals = cf.derivative(pts)
    assert np.all(np.isfinite(vals))
    # the closed table must contain both members of each pair
    assert cf.coeffs[(-1, -2)] == np.conj(cf.coeffs[(1, 2)])


def test_inconsistent_pair_rejected():
    with pytest.raises(ValueError):
        ConformalFactor(coeffs={(1, 0): 0.1, (-1, 0): 0.2})
    with pytest.raises(ValueError):
        ConformalFactor(coeffs={(0, 0): 0.1j})


def test_derivative_matches_finite_differences():
    rng = np.random.default_rng(1)
    cf = random_cf(rng, degree=2)
    pts = rng.random((12, 2))
    h = 1e-5
    for order, axis in (((1, 0), 0), ((0, 1), 1)):
        ep = np.zeros(2)
        ep[axis] = h
        fd = (cf.derivative(pts + ep) - cf.derivative(pts - ep)) / (2 * h)
        ex = cf.derivative(pts, order)
        assert np.max(np.abs(fd - ex)) < 1e-8
    # third derivative against a second difference of first derivatives
    ep = np.array([h, 0.0])
    fd = (cf.derivative(pts + ep, (1, 1)) - 2 * cf.derivative(pts, (1, 1))
          + cf.derivative(pts - ep, (1, 1))) / h ** 2
    assert np.max(np.abs(fd - cf.derivative(pts, (3, 1)))) < 1e-4 * (
        1 + np.max(np.abs(cf.derivative(pts, (3, 1)))))


def test_grid_samples_match_pointwise_evaluation():
    rng = np.random.default_rng(2)
    cf = random_cf(rng, degree=3, lattice=Lattice((1.0, 0.0), (0.2, 0.9)))
    mg = cf.grid(32)
    pts = np.stack([mg.X, mg.Y], axis=-1).reshape(-1, 2)
    for name, order in (("mu", (0, 0)), ("mu_x", (1, 0)), ("mu_yy", (0, 2)),
                        ("mu_xxy", (2, 1))):
        grid = getattr(mg, name).ravel()
        direct = cf.derivative(pts, order)
        assert np.max(np.abs(grid - direct)) < 1e-11 * (
            1 + np.max(np.abs(direct)))


def test_spectral_derivative_consistency():
    rng = np.random.default_rng(3)
    cf = random_cf(rng, degree=3)
    mg = cf.grid(48)
    assert np.max(np.abs(mg.dx(mg.mu) - mg.mu_x)) < 1e-11
    # lam is not band-limited; allow spectral truncation at this grid size
    target = 2.0 * mg.mu_y * mg.lam
    assert np.max(np.abs(mg.dy(mg.lam) - target)) < 1e-9 * (
        1 + np.max(np.abs(target)))


def test_curvature_grid_and_gauss_bonnet():
    rng = np.random.default_rng(4)
    cf = random_cf(rng, degree=3)
    mg = cf.grid(64)
    pts = np.stack([mg.X, mg.Y], axis=-1)
    K = gaussian_curvature(cf, pts.reshape(-1, 2)).reshape(64, 64)
    assert np.max(np.abs(K - mg.K)) < 1e-10 * (1 + np.max(np.abs(K)))
    assert abs(gauss_bonnet_defect(mg)) < 1e-12 * (1 + np.max(np.abs(K)))


def test_default_grid_n_policy():
    cf = ConformalFactor(coeffs={(8, 0): 0.01})
    assert default_grid_n(cf, None) >= 128
    assert default_grid_n(cf, 16) == 32          # raised to 4 * degree
    assert default_grid_n(cf, 200) == 200
    big = ConformalFactor(coeffs={(40, 0): 0.01})
    assert default_grid_n(big, None) >= 160


def test_transformed_is_isometric_reparameterization():
    rng = np.random.default_rng(5)
    cf = random_cf(rng, degree=2)
    a = 0.8 + 0.6j
    cfp = transformed(cf, a)
    pts = rng.random((30, 2))
    zp = pts[:, 0] + 1j * pts[:, 1]
    z = a * zp
    src = cf.derivative(np.stack([z.real, z.imag], axis=-1))
    # e^{2 mu'} |dz'|^2 = e^{2 mu} |dz|^2 with dz = a dz'
    want = src + np.log(abs(a))
    got = cfp.derivative(pts)
    assert np.max(np.abs(got - want)) < 1e-12
