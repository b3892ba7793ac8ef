"""Spectral solvers for kernel, splitting and potentiality questions.

Everything here revolves around the family of fields

    Z^{j,c}:  a = e^{2 j mu}(c1 mu_x + c2 mu_y),
              b = e^{2 j mu}(c2 mu_x - c1 mu_y),     (scalar for j = 0)

attached to a constant pseudovector c of weight j+1, and around the second
order operator delta o pd acting on trace-free fields:

* kernel_delta_pd  -- certifies that the discrete kernel of delta pd at
  rank m is exactly two-dimensional and spanned by the fields
  (a, b) = e^{2 m mu} (c1, c2);
* range_membership -- zero-mean test (w.r.t. the metric area form) for
  membership in the range of delta pd;
* j_split          -- least-squares splitting of a trace-free field into a
  divergence-free part and a part with potential divergence;
* potentiality_test -- decides numerically whether d v = Z^{m-1,c} is
  solvable for some c != 0; the smallest relative residual over unit c is
  the reported obstruction, gated by a resolution-doubling stability check.

Least-squares problems are solved matrix-free with LSMR on the original
operator (never the normal equations), right-preconditioned by a Fourier
smoothing multiplier; all transposes are exact by construction and verified
by adjoint identity tests.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.linalg import subspace_angles
from scipy.sparse.linalg import LinearOperator, lsmr

from .tensors import SymTensorField, TraceFreeField, scalar_field
from .metric import transformed


# -- pseudovectors and pseudoforms -------------------------------------------

@dataclass
class PseudoVector:
    """Constant pseudovector of integer weight w.

    Under the coordinate change z = a z' the components obey
    (c1 + i c2) = a^w (c1' + i c2').
    """

    weight: int
    c1: float
    c2: float

    def as_complex(self):
        return complex(self.c1, self.c2)

    def transformed(self, a):
        """Components in the primed system of z = a z'."""
        zp = self.as_complex() / complex(a) ** self.weight
        return PseudoVector(self.weight, zp.real, zp.imag)

    def norm(self):
        return float(np.hypot(self.c1, self.c2))


@dataclass
class PseudoForm:
    """Covariant counterpart: (w1 + i w2) = conj(a)^{-w} (w1' + i w2')."""

    weight: int
    w1: float
    w2: float

    def as_complex(self):
        return complex(self.w1, self.w2)

    def transformed(self, a):
        zp = self.as_complex() * complex(a).conjugate() ** self.weight
        return PseudoForm(self.weight, zp.real, zp.imag)

    def pair(self, vec):
        """Invariant pairing c1 w1 + c2 w2 with a PseudoVector of equal weight."""
        if vec.weight != self.weight:
            raise ValueError("weight mismatch")
        return vec.c1 * self.w1 + vec.c2 * self.w2


def _c_components(c):
    if isinstance(c, PseudoVector):
        return float(c.c1), float(c.c2)
    c1, c2 = c
    return float(c1), float(c2)


def make_Z(mg, j, c):
    """The field Z^{j,c} on a metric grid; scalar for j = 0, else trace-free."""
    c1, c2 = _c_components(c)
    base = c1 * mg.mu_x + c2 * mg.mu_y
    conj = c2 * mg.mu_x - c1 * mg.mu_y
    if j == 0:
        return scalar_field(mg, base)
    w = np.exp(2.0 * j * mg.mu)
    return TraceFreeField(mg, j, w * base, w * conj)


def kernel_basis_fields(mg, m):
    """The two analytic kernel fields of delta pd at rank m."""
    w = np.exp(2.0 * m * mg.mu)
    z = np.zeros_like(w)
    return (TraceFreeField(mg, m, w.copy(), z.copy()),
            TraceFreeField(mg, m, z.copy(), w.copy()))


# -- operator building blocks (trace-free pairs) -----------------------------

class _DeltaPd:
    """delta o pd on trace-free pairs of rank m, with exact transpose."""

    def __init__(self, mg, m):
        if m < 1:
            raise ValueError("rank must be >= 1")
        self.mg = mg
        self.m = m
        self.wp = np.exp(2.0 * m * mg.mu)
        self.wm = 1.0 / self.wp
        self.u = 1.0 / mg.lam

    def apply(self, ab):
        mg = self.mg
        va = self.wm * ab[0]
        vb = self.wm * ab[1]
        pa = 0.5 * self.wp * (mg.dx(va) - mg.dy(vb))
        pb = 0.5 * self.wp * (mg.dy(va) + mg.dx(vb))
        da = self.u * (mg.dx(pa) + mg.dy(pb))
        db = self.u * (-mg.dy(pa) + mg.dx(pb))
        return np.stack([da, db])

    def applyT(self, gh):
        mg = self.mg
        ga = self.u * gh[0]
        gb = self.u * gh[1]
        # transpose of delta
        ta = -mg.dx(ga) + mg.dy(gb)
        tb = -mg.dy(ga) - mg.dx(gb)
        # transpose of pd
        sa = 0.5 * self.wp * ta
        sb = 0.5 * self.wp * tb
        oa = self.wm * (-mg.dx(sa) - mg.dy(sb))
        ob = self.wm * (mg.dy(sa) - mg.dx(sb))
        return np.stack([oa, ob])


class _DeltaPdScalar:
    """delta o d on scalars: e^{-2 mu} * euclidean Laplacian."""

    def __init__(self, mg):
        self.mg = mg
        self.u = 1.0 / mg.lam

    def _lap(self, v):
        return self.mg.dx(self.mg.dx(v)) + self.mg.dy(self.mg.dy(v))

    def apply(self, v):
        return self.u * self._lap(v[0] if v.ndim == 3 else v)[None]

    def applyT(self, s):
        return self._lap(self.u * (s[0] if s.ndim == 3 else s))[None]


class _InnerDerivative:
    """d on full symmetric rank-r fields, with exact transpose.

    Forward: (r+1) component grids -> (r+2); the transpose reverses the
    composition of spectral derivatives (antisymmetric) and pointwise
    multiplications (symmetric) exactly, so LSMR sees a true adjoint pair.
    """

    def __init__(self, mg, r):
        self.mg = mg
        self.r = r

    def apply(self, v):
        mg, r = self.mg, self.r
        mx, my = mg.mu_x, mg.mu_y
        n1 = np.empty_like(v)
        n2 = np.empty_like(v)
        for k in range(r + 1):
            up = v[k + 1] if k + 1 <= r else 0.0
            dn = v[k - 1] if k - 1 >= 0 else 0.0
            n1[k] = (mg.dx(v[k]) - r * mx * v[k]
                     + (r - k) * my * up - k * my * dn)
            n2[k] = (mg.dy(v[k]) - r * my * v[k]
                     - (r - k) * mx * up + k * mx * dn)
        out = np.zeros((r + 2,) + v.shape[1:])
        for j in range(r + 2):
            if j <= r:
                out[j] += (r + 1 - j) * n1[j]
            if j >= 1:
                out[j] += j * n2[j - 1]
        return out / (r + 1)

    def applyT(self, h):
        mg, r = self.mg, self.r
        mx, my = mg.mu_x, mg.mu_y
        g1 = np.empty((r + 1,) + h.shape[1:])
        g2 = np.empty_like(g1)
        for k in range(r + 1):
            g1[k] = (r + 1 - k) * h[k]
            g2[k] = (k + 1) * h[k + 1]
        out = np.empty_like(g1)
        for l in range(r + 1):
            up1 = g1[l + 1] if l + 1 <= r else 0.0
            dn1 = g1[l - 1] if l - 1 >= 0 else 0.0
            up2 = g2[l + 1] if l + 1 <= r else 0.0
            dn2 = g2[l - 1] if l - 1 >= 0 else 0.0
            out[l] = (-mg.dx(g1[l]) - r * mx * g1[l]
                      + (r - l + 1) * my * dn1 - (l + 1) * my * up1
                      - mg.dy(g2[l]) - r * my * g2[l]
                      - (r - l + 1) * mx * dn2 + (l + 1) * mx * up2)
        return out / (r + 1)


class _Smoother:
    """Fourier right-preconditioner (1 + (|kappa|/k0)^p)^{-1}, self-adjoint."""

    def __init__(self, mg, power=1, k0=2.0 * np.pi):
        n = mg.n
        k = np.fft.fftfreq(n) * n
        k1, k2 = np.meshgrid(k, k, indexing="ij")
        B = mg.lattice.B
        kapx = k1 * B[0, 0] + k2 * B[1, 0]
        kapy = k1 * B[0, 1] + k2 * B[1, 1]
        mag = np.hypot(kapx, kapy) / k0
        self.mult = 1.0 / (1.0 + mag ** power)

    def apply(self, v):
        if v.ndim == 2:
            return np.fft.ifft2(self.mult * np.fft.fft2(v)).real
        return np.stack([np.fft.ifft2(self.mult * np.fft.fft2(c)).real
                         for c in v])


def _metric_weights(mg, rank, tracefree_pair):
    """Per-component pointwise weights turning grid sums into L^2(dsigma).

    For full storage: sqrt(C(rank, k)) e^{(1-rank) mu} sqrt(area)/n per
    component; for a trace-free pair both components carry
    sqrt(2^{rank-1}) e^{(1-rank) mu} sqrt(area)/n.
    """
    from math import comb
    base = np.exp((1.0 - rank) * mg.mu) * np.sqrt(mg.area) / mg.n
    if tracefree_pair:
        if rank == 0:
            raise ValueError("pair weight needs rank >= 1")
        w = np.sqrt(2.0 ** (rank - 1)) * base
        return np.stack([w, w])
    return np.stack([np.sqrt(comb(rank, k)) * base for k in range(rank + 1)])


# -- kernel of delta pd ------------------------------------------------------

@dataclass
class KernelReport:
    m: int
    n: int
    singular_values: np.ndarray   # ascending
    subspace_sin: float           # numeric kernel vs analytic fields
    fields: tuple                 # the two analytic kernel fields
    pd_residual: float            # max |pd field| over both fields


def kernel_delta_pd(cf, m, n=17):
    """SVD certificate for the two-dimensional kernel of delta pd at rank m.

    The operator is assembled densely on a dedicated small n-by-n grid (the
    analytic kernel fields are sampled exactly at any resolution, so a small
    grid suffices) and its smallest singular vectors are compared with the
    analytic fields through principal angles.  n must be odd: an even grid
    carries unpaired modes that both spectral derivatives annihilate, which
    would inflate the discrete kernel.
    """
    if m < 1:
        raise ValueError("rank must be >= 1")
    if n % 2 == 0:
        raise ValueError("kernel certificate needs an odd grid size")
    mg = cf.grid(n)
    op = _DeltaPd(mg, m)
    dim = 2 * n * n
    A = np.empty((dim, dim))
    e = np.zeros(dim)
    for j in range(dim):
        e[j] = 1.0
        A[:, j] = op.apply(e.reshape(2, n, n)).ravel()
        e[j] = 0.0
    _, svals, vt = np.linalg.svd(A)
    f1, f2 = kernel_basis_fields(mg, m)
    exact = np.stack([np.stack([f1.a, f1.b]).ravel(),
                      np.stack([f2.a, f2.b]).ravel()], axis=1)
    numeric = vt[-2:].T
    ang = subspace_angles(numeric, exact)
    pd_res = max(f1.pd().max_norm() / f1.max_norm(),
                 f2.pd().max_norm() / f2.max_norm())
    return KernelReport(m=m, n=n, singular_values=svals[::-1].copy(),
                        subspace_sin=float(np.max(np.sin(ang))),
                        fields=(f1, f2), pd_residual=pd_res)


# -- range membership --------------------------------------------------------

@dataclass
class RangeReport:
    means: np.ndarray
    tol: float
    ok: bool


def range_membership(f, tol_factor=1e-9):
    """Zero-mean test: every component must integrate to 0 against dsigma."""
    mg = f.mg
    if isinstance(f, TraceFreeField):
        comps = [f.a, f.b]
        scale = f.max_norm()
    else:
        comps = list(f.comps)
        scale = f.max_norm()
    means = np.array([mg.integral_dsigma(c) for c in comps])
    tol = tol_factor * mg.area * max(scale, 1e-300)
    return RangeReport(means=means, tol=tol, ok=bool(np.all(np.abs(means) <= tol)))


# -- LSMR plumbing -----------------------------------------------------------

def _lsmr(op_apply, op_applyT, shape_in, shape_out, b, tol=1e-12,
          maxiter=None, smoother=None, weights=None):
    """Weighted, right-preconditioned least squares via LSMR.

    Solves min || W (A x - b) || over x = S y, where S is the Fourier
    smoother and W the pointwise metric weight; returns (x, residual_vector,
    lsmr_istop, iters).  The residual vector is W(Ax - b), recomputed
    explicitly from the returned solution.
    """
    size_in = int(np.prod(shape_in))
    size_out = int(np.prod(shape_out))

    def mv(y):
        v = y.reshape(shape_in)
        if smoother is not None:
            v = smoother.apply(v)
        r = op_apply(v)
        if weights is not None:
            r = weights * r
        return r.ravel()

    def rmv(g):
        h = g.reshape(shape_out)
        if weights is not None:
            h = weights * h
        r = op_applyT(h)
        if smoother is not None:
            r = smoother.apply(r)
        return r.ravel()

    A = LinearOperator((size_out, size_in), matvec=mv, rmatvec=rmv)
    bw = (weights * b if weights is not None else b).ravel()
    if maxiter is None:
        maxiter = 40 * int(np.sqrt(size_in)) + 2000
    sol = lsmr(A, bw, atol=tol, btol=tol, maxiter=maxiter)
    y = sol[0]
    res = (A @ y) - bw
    x = y.reshape(shape_in)
    if smoother is not None:
        x = smoother.apply(x)
    return x, res.reshape(shape_out), int(sol[1]), int(sol[2])


# -- j-split -----------------------------------------------------------------

@dataclass
class JSplitResult:
    """f = solenoidal + potential-divergence parts, via delta pd v = delta f."""

    v: object                    # trace-free (or scalar) potential
    potential_part: TraceFreeField   # pd v
    solenoidal_part: TraceFreeField  # f - pd v
    div_residual_rel: float      # |delta(f - pd v)| / |f| (L2 relative)
    istop: int
    iters: int


def _pd_of(part):
    if isinstance(part, TraceFreeField):
        return part.pd()
    mg = part.mg
    u = part.comps[0]
    return TraceFreeField(mg, 1, mg.dx(u), mg.dy(u))


def j_split(f, tol=1e-12, smoother_power=None):
    """Split a trace-free field along the divergence: delta pd v = delta f.

    v has rank m-1 (a scalar when m = 1); pd v is unique even though v is
    determined only up to the kernel of delta pd, so the parts are stable
    under solver and preconditioner changes.
    """
    mg = f.mg
    m = f.rank
    df = f.divergence()
    if m == 1:
        op = _DeltaPdScalar(mg)
        shape_in = shape_out = (1, mg.n, mg.n)
        b = df.comps
        w = _metric_weights(mg, 0, tracefree_pair=False)
        power = 2 if smoother_power is None else smoother_power
        sm = _Smoother(mg, power=power)
        x, res, istop, iters = _lsmr(op.apply, op.applyT, shape_in, shape_out,
                                     b, tol=tol, smoother=sm, weights=w)
        v = SymTensorField(mg, x)
    else:
        op = _DeltaPd(mg, m - 1)
        shape_in = shape_out = (2, mg.n, mg.n)
        b = np.stack([df.a, df.b])
        w = _metric_weights(mg, m - 1, tracefree_pair=True)
        power = 2 if smoother_power is None else smoother_power
        sm = _Smoother(mg, power=power)
        x, res, istop, iters = _lsmr(op.apply, op.applyT, shape_in, shape_out,
                                     b, tol=tol, smoother=sm, weights=w)
        v = TraceFreeField(mg, m - 1, x[0], x[1])
    fp = _pd_of(v)
    fs = f - fp
    from .tensors import l2_norm
    rel = float(np.linalg.norm(res)) / max(l2_norm(f.expand()), 1e-300)
    return JSplitResult(v=v, potential_part=fp, solenoidal_part=fs,
                        div_residual_rel=rel, istop=istop, iters=iters)


# -- potentiality test -------------------------------------------------------

@dataclass
class PotentialTestResult:
    """Outcome of the d v = Z^{m-1,c} solvability test for rank m."""

    m: int
    resolutions: tuple
    residuals: tuple             # relative residual at each resolution
    best_c: PseudoVector
    stable: bool                 # residuals agree within a factor of 2
    potential: bool              # residual below threshold at both levels
    verdict: str                 # POTENTIAL / OBSTRUCTED / DEGENERATE / UNSTABLE
    eps: float
    gram_eigenvalues: np.ndarray = None
    cross_check: dict = dc_field(default=None)
    solution: object = None      # v for the best c, finest resolution


def _direction_gram_residual(mg):
    """min over unit c of |c . grad mu| / |grad mu| in L^2(dsigma)."""
    w = np.sqrt(mg.lam) * np.sqrt(mg.area) / mg.n
    b1 = (w * mg.mu_x).ravel()
    b2 = (w * mg.mu_y).ravel()
    G = np.array([[b1 @ b1, b1 @ b2], [b1 @ b2, b2 @ b2]])
    evals, evecs = np.linalg.eigh(G)
    scale = np.sqrt(max(evals[-1], 1e-300))
    c = evecs[:, 0]
    return float(np.sqrt(max(evals[0], 0.0)) / max(scale, 1e-300)), c, G


def _potential_residual_at(cf, m, n, tol):
    """(relative residual, best c, gram eigenvalues, solution) at one grid."""
    mg = cf.grid(n)
    if m == 1:
        rel, c, G = _direction_gram_residual(mg)
        evals = np.linalg.eigvalsh(G)
        degenerate = evals[-1] <= 1e-26 * mg.area
        return rel, c, evals, None, degenerate
    r = m - 2
    op = _InnerDerivative(mg, r)
    sm = _Smoother(mg, power=1)
    w = _metric_weights(mg, r + 1, tracefree_pair=False)
    shape_in = (r + 1, mg.n, mg.n)
    shape_out = (r + 2, mg.n, mg.n)
    res_vecs = []
    sols = []
    bs = []
    for c in ((1.0, 0.0), (0.0, 1.0)):
        Z = make_Z(mg, m - 1, c)
        Zfull = Z.expand() if isinstance(Z, TraceFreeField) else Z
        b = Zfull.comps
        x, res, istop, iters = _lsmr(op.apply, op.applyT, shape_in, shape_out,
                                     b, tol=tol, smoother=sm, weights=w)
        res_vecs.append(res.ravel())
        sols.append(x)
        bs.append((w * b).ravel())
    G = np.array([[res_vecs[0] @ res_vecs[0], res_vecs[0] @ res_vecs[1]],
                  [res_vecs[0] @ res_vecs[1], res_vecs[1] @ res_vecs[1]]])
    evals, evecs = np.linalg.eigh(G)
    c = evecs[:, 0]
    bz = c[0] * bs[0] + c[1] * bs[1]
    nz = np.linalg.norm(bz)
    degenerate = max(np.linalg.norm(bs[0]), np.linalg.norm(bs[1])) \
        <= 1e-12 * np.sqrt(mg.area)
    rel = float(np.sqrt(max(evals[0], 0.0)) / max(nz, 1e-300))
    sol = SymTensorField(mg, c[0] * sols[0] + c[1] * sols[1])
    return rel, c, evals, sol, degenerate


def _mixed_derivative_check(cf, c, n):
    """After rotating c to (1, 0): relative size of (e^{2 mu})_{x y}.

    Vanishing characterizes the separable-metric normal form tied to rank-2
    structure; used as an independent cross-check of the m = 2 test.
    """
    w = 2  # weight of c at m = 2
    phi = np.arctan2(c[1], c[0])
    a = np.exp(1j * phi / w)
    cfp = transformed(cf, a)
    mg = cfp.grid(max(64, 4 * cfp.max_degree))
    lam = mg.lam
    mixed = mg.dx(mg.dy(lam))
    ref = max(np.max(np.abs(mg.dx(mg.dx(lam)))),
              np.max(np.abs(mg.dy(mg.dy(lam)))), 1e-300)
    return {"rotation": complex(a), "mixed_rel": float(np.max(np.abs(mixed)) / ref)}


def potentiality_test(cf, m, n=None, eps=1e-6, tol=1e-12, stability_factor=2.0):
    """Necessary-condition test for an irreducible rank-m Killing field.

    Solves the least-squares problems d v = Z^{m-1,c} for the two basis
    pseudovectors, minimizes the joint residual over unit c (smallest
    eigenvalue of the 2x2 residual Gram matrix), and repeats at doubled
    resolution.  A nonzero obstruction is only reported when the two
    resolutions agree within `stability_factor`.
    """
    if m < 1:
        raise ValueError("rank must be >= 1")
    if n is None:
        n = max(32, 4 * cf.max_degree)
    n2 = 2 * n
    r1, c1v, ev1, _, deg1 = _potential_residual_at(cf, m, n, tol)
    r2, c2v, ev2, sol, deg2 = _potential_residual_at(cf, m, n2, tol)
    stable = (max(r1, r2) <= stability_factor * max(min(r1, r2), eps * 1e-3))
    if deg1 and deg2:
        verdict = "DEGENERATE"
        potential = True
    elif max(r1, r2) <= eps:
        verdict = "POTENTIAL"
        potential = True
    elif stable:
        verdict = "OBSTRUCTED"
        potential = False
    else:
        verdict = "UNSTABLE"
        potential = False
    best = PseudoVector(m, float(c2v[0]), float(c2v[1]))
    cross = None
    if m == 2 and not (deg1 and deg2):
        cross = _mixed_derivative_check(cf, c2v, n2)
    return PotentialTestResult(m=m, resolutions=(n, n2), residuals=(r1, r2),
                               best_c=best, stable=stable, potential=potential,
                               verdict=verdict, eps=eps,
                               gram_eigenvalues=np.stack([ev1, ev2]),
                               cross_check=cross, solution=sol)
