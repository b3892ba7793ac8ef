import numpy as np
import pytest

from ktorus import ConformalFactor
from ktorus.solver import (PseudoForm, PseudoVector, j_split,
                           kernel_basis_fields, kernel_delta_pd, make_Z,
                           potentiality_test, range_membership)
from ktorus.tensors import TraceFreeField, l2_norm

from conftest import random_cf


def test_pseudovector_weight_transform():
    c = PseudoVector(weight=3, c1=0.4, c2=-1.1)
    a = 0.8 + 0.6j
    cp = c.transformed(a)
    # components obey (c1 + i c2) = a^w (c1' + i c2')
    assert abs(a ** 3 * cp.as_complex() - c.as_complex()) < 1e-14
    f = PseudoForm(weight=3, w1=0.2, w2=0.9)
    fp = f.transformed(a)
    # the pairing with a pseudovector of equal weight is invariant
    assert abs(fp.pair(cp) - f.pair(c)) < 1e-13


def test_kernel_basis_fields_in_kernel(cf_generic):
    mg = cf_generic.grid(33)
    for m in (1, 2, 3):
        f1, f2 = kernel_basis_fields(mg, m)
        for f in (f1, f2):
            assert f.pd().max_norm() < 1e-11 * max(f.max_norm(), 1.0)
            r1, r2 = f.cauchy_riemann_residual()
            import numpy as _np
            assert max(_np.max(_np.abs(r1)), _np.max(_np.abs(r2))) < 1e-9 * (
                1 + f.max_norm())


def test_kernel_certificate(cf_rotation):
    rep = kernel_delta_pd(cf_rotation, 2, n=17)
    sv = rep.singular_values
    assert sv[1] <= 1e-10 * sv[-1]
    assert sv[2] > 1e-6 * sv[-1]
    assert rep.subspace_sin < 1e-8
    assert rep.pd_residual < 1e-10


def test_kernel_certificate_guards(cf_rotation):
    with pytest.raises(ValueError):
        kernel_delta_pd(cf_rotation, 2, n=16)
    with pytest.raises(ValueError):
        kernel_delta_pd(cf_rotation, 0)


def test_range_membership_distinguishes(cf_generic):
    mg = cf_generic.grid(48)
    n = mg.n
    k = np.fft.fftfreq(n) * n
    damp = np.exp(-0.5 * (np.abs(k)[:, None] + np.abs(k)[None, :]))
    rng = np.random.default_rng(30)

    def smooth():
        spec = damp * (rng.standard_normal((n, n))
                       + 1j * rng.standard_normal((n, n)))
        return np.fft.ifft2(spec).real

    h = TraceFreeField(mg, 3, smooth(), smooth())
    in_range = h.divergence()
    rep = range_membership(in_range)
    assert rep.ok
    shifted = TraceFreeField(mg, in_range.rank,
                             in_range.a + 0.1 * in_range.max_norm(),
                             in_range.b)
    assert not range_membership(shifted).ok


def test_j_split_recovers_components(cf_generic):
    mg = cf_generic.grid(48)
    rng = np.random.default_rng(31)
    n = mg.n
    k = np.fft.fftfreq(n) * n
    damp = np.exp(-0.5 * (np.abs(k)[:, None] + np.abs(k)[None, :]))

    def smooth():
        spec = damp * (rng.standard_normal((n, n))
                       + 1j * rng.standard_normal((n, n)))
        return np.fft.ifft2(spec).real

    v_star = TraceFreeField(mg, 1, smooth(), smooth())
    pure_potential = v_star.pd()
    res = j_split(pure_potential)
    scale = pure_potential.max_norm()
    assert res.solenoidal_part.max_norm() < 1e-7 * scale
    assert res.div_residual_rel < 1e-8
    # generic input: the solenoidal part has (numerically) zero divergence
    h = TraceFreeField(mg, 2, smooth(), smooth())
    res3 = j_split(h)
    dsol = res3.solenoidal_part.divergence()
    dh = h.divergence()
    assert dsol.max_norm() < 1e-7 * max(dh.max_norm(), 1.0)


def test_potentiality_verdicts(cf_flat, cf_rotation, cf_generic):
    assert potentiality_test(cf_flat, 2).verdict == "DEGENERATE"
    rot = potentiality_test(cf_rotation, 2)
    assert rot.verdict == "POTENTIAL"
    assert max(rot.residuals) < 1e-6
    gen = potentiality_test(cf_generic, 2)
    assert gen.verdict == "OBSTRUCTED"
    assert gen.stable
    assert min(gen.residuals) > 0.1


def test_make_Z_and_pair_guard(cf_generic):
    mg = cf_generic.grid(16)
    z = make_Z(mg, 2, (0.3, 0.7))
    assert z.rank == 2
    # Z^{j,c} is e^{2 j mu} times a rotation of grad mu: check one entry
    want_a = np.exp(4.0 * mg.mu) * (0.3 * mg.mu_x + 0.7 * mg.mu_y)
    assert np.max(np.abs(z.a - want_a)) < 1e-12 * (1 + np.max(np.abs(want_a)))
    with pytest.raises(ValueError):
        PseudoForm(weight=2, w1=1.0, w2=0.0).pair(
            PseudoVector(weight=3, c1=1.0, c2=0.0))
