"""Symmetric tensor calculus on the conformal torus.

A rank-m symmetric field is stored by its m+1 distinct components on the
metric grid: comps[k] is the component whose index string contains k twos
(order irrelevant by symmetry).  All operators below act on this storage:

* sym_product   -- symmetrized tensor product
* op_i          -- symmetric multiplication by the metric tensor
* op_j          -- contraction with the inverse metric (trace)
* op_p          -- fiberwise orthogonal projection onto trace-free fields
* inner_derivative (d = sym o nabla) and divergence (delta)
* harmonic_decompose -- splits a field into trace-free parts along powers
  of the metric; inverse of the reconstruction sum

Trace-free fields of rank m >= 1 have a two-dimensional fiber and are held
as the pair (a, b) = (comps[0], comps[1]); the full component list follows
the alternating pattern comps[k+2] = -comps[k].
"""

from dataclasses import dataclass
from math import comb

import numpy as np


class SymTensorField:
    """Symmetric rank-m tensor field sampled on a MetricGrid."""

    def __init__(self, mg, comps):
        comps = np.asarray(comps, dtype=float)
        if comps.ndim == 2:  # scalar field given as a bare grid
            comps = comps[None]
        if comps.ndim != 3 or comps.shape[1:] != (mg.n, mg.n):
            raise ValueError("components must have shape (m+1, n, n)")
        self.mg = mg
        self.comps = comps
        self.rank = comps.shape[0] - 1

    @classmethod
    def zero(cls, mg, rank):
        return cls(mg, np.zeros((rank + 1, mg.n, mg.n)))

    def copy(self):
        return SymTensorField(self.mg, self.comps.copy())

    def __add__(self, other):
        _check_pair(self, other)
        return SymTensorField(self.mg, self.comps + other.comps)

    def __sub__(self, other):
        _check_pair(self, other)
        return SymTensorField(self.mg, self.comps - other.comps)

    def __mul__(self, s):
        return SymTensorField(self.mg, self.comps * float(s))

    __rmul__ = __mul__

    def __neg__(self):
        return SymTensorField(self.mg, -self.comps)

    def max_norm(self):
        return float(np.max(np.abs(self.comps)))


class TraceFreeField:
    """Trace-free symmetric field of rank m >= 1, stored as the pair (a, b)."""

    def __init__(self, mg, rank, a, b):
        if rank < 1:
            raise ValueError("trace-free storage needs rank >= 1")
        self.mg = mg
        self.rank = int(rank)
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        if self.a.shape != (mg.n, mg.n) or self.b.shape != (mg.n, mg.n):
            raise ValueError("component grids must match the metric grid")

    def expand(self):
        """Full (m+1)-component storage with the alternating sign pattern."""
        m = self.rank
        comps = np.empty((m + 1, self.mg.n, self.mg.n))
        pair = (self.a, self.b)
        for k in range(m + 1):
            comps[k] = pair[k % 2] * (-1.0 if k % 4 >= 2 else 1.0)
        return SymTensorField(self.mg, comps)

    @classmethod
    def from_sym(cls, f, tol=1e-9):
        """Reinterpret a SymTensorField known to be trace-free."""
        m = f.rank
        if m < 1:
            raise ValueError("rank must be >= 1")
        tf = cls(f.mg, m, f.comps[0], f.comps[1] if m >= 1 else 0)
        err = np.max(np.abs(tf.expand().comps - f.comps))
        scale = max(f.max_norm(), 1e-300)
        if err > tol * scale:
            raise ValueError(f"field is not trace-free (residual {err:.3e})")
        return tf

    def copy(self):
        return TraceFreeField(self.mg, self.rank, self.a.copy(), self.b.copy())

    def __add__(self, other):
        if not isinstance(other, TraceFreeField) or other.rank != self.rank:
            raise ValueError("rank mismatch")
        return TraceFreeField(self.mg, self.rank,
                              self.a + other.a, self.b + other.b)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, s):
        return TraceFreeField(self.mg, self.rank,
                              self.a * float(s), self.b * float(s))

    __rmul__ = __mul__

    def max_norm(self):
        return float(max(np.max(np.abs(self.a)), np.max(np.abs(self.b))))

    # -- fast conformal-coordinate operators ---------------------------------

    def pd(self):
        """Trace-free part of the inner derivative, one rank up.

        For trace-free input the composition p o d reduces to a weighted
        Cauchy--Riemann operator on (a, b); the general-storage route
        p(inner_derivative(expand())) gives the same field.
        """
        mg = self.mg
        c1, c2 = self.cauchy_riemann_residual()
        w = 0.5 * np.exp(2.0 * self.rank * mg.mu)
        return TraceFreeField(mg, self.rank + 1, w * c1, w * c2)

    def divergence(self):
        """Divergence; trace-free of rank m-1 for m >= 2, scalar for m = 1."""
        mg = self.mg
        da = (mg.dx(self.a) + mg.dy(self.b)) / mg.lam
        if self.rank == 1:
            return SymTensorField(mg, da[None])
        db = (-mg.dy(self.a) + mg.dx(self.b)) / mg.lam
        return TraceFreeField(mg, self.rank - 1, da, db)

    def cauchy_riemann_residual(self):
        """Pair of first-order expressions equivalent to pd(f) = 0.

        With (A, B) = e^{-2 m mu} (a, b) the pair is
        (A_x - B_y, A_y + B_x); both vanish iff the trace-free part of the
        inner derivative vanishes.  A Killing trace-free field additionally
        has zero divergence.
        """
        mg = self.mg
        w = np.exp(-2.0 * self.rank * mg.mu)
        A = w * self.a
        B = w * self.b
        return mg.dx(A) - mg.dy(B), mg.dy(A) + mg.dx(B)


def scalar_field(mg, grid):
    return SymTensorField(mg, np.asarray(grid, dtype=float)[None])


def _check_pair(f, h):
    if f.mg is not h.mg or f.rank != h.rank:
        raise ValueError("fields must share grid and rank")


# -- pointwise fiber operations ----------------------------------------------

def sym_product(f, h):
    """Symmetrized tensor product, rank m + r."""
    if f.mg is not h.mg:
        raise ValueError("fields must share a grid")
    m, r = f.rank, h.rank
    out = np.zeros((m + r + 1, f.mg.n, f.mg.n))
    denom = comb(m + r, m)
    for j in range(m + r + 1):
        for s in range(max(0, j - r), min(m, j) + 1):
            w = comb(j, s) * comb(m + r - j, m - s) / denom
            out[j] += w * f.comps[s] * h.comps[j - s]
    return SymTensorField(f.mg, out)


def metric_field(mg):
    """The metric tensor lam*(dx^2+dy^2) as a rank-2 field."""
    z = np.zeros((mg.n, mg.n))
    return SymTensorField(mg, np.stack([mg.lam, z, mg.lam]))


def op_i(f):
    """Symmetric multiplication by the metric: i f = sym(f x g)."""
    return sym_product(f, metric_field(f.mg))


def op_j(f):
    """Trace with respect to g: (j f)_k = e^{-2 mu} (f_k + f_{k+2})."""
    m = f.rank
    if m < 2:
        return SymTensorField.zero(f.mg, 0)
    comps = (f.comps[:m - 1] + f.comps[2:]) / f.mg.lam
    return SymTensorField(f.mg, comps)


def op_p(f):
    """Fiberwise orthogonal projection onto trace-free fields.

    The trace-free fiber at each point is spanned by the alternating
    patterns t^a = (1, 0, -1, 0, ...) and t^b = (0, 1, 0, -1, ...), which
    are orthogonal for the induced fiber inner product; the projection is a
    2-column Gram solve with constant diagonal Gram matrix 2^{m-1}.
    For m = 2 this reduces to the explicit formula p f = f - (1/2)(j f) g,
    which is used directly.
    """
    m = f.rank
    if m <= 1:
        return f.copy()
    if m == 2:
        jf = op_j(f).comps[0]
        half = 0.5 * jf * f.mg.lam
        comps = f.comps - np.stack([half, np.zeros_like(half), half])
        return SymTensorField(f.mg, comps)
    ta, tb = _tracefree_patterns(m)
    wa = np.array([comb(m, k) * ta[k] for k in range(m + 1)])
    wb = np.array([comb(m, k) * tb[k] for k in range(m + 1)])
    alpha = np.tensordot(wa, f.comps, axes=(0, 0)) / 2 ** (m - 1)
    beta = np.tensordot(wb, f.comps, axes=(0, 0)) / 2 ** (m - 1)
    comps = ta[:, None, None] * alpha[None] + tb[:, None, None] * beta[None]
    return SymTensorField(f.mg, comps)


def _tracefree_patterns(m):
    ta = np.zeros(m + 1)
    tb = np.zeros(m + 1)
    for k in range(0, m + 1, 2):
        ta[k] = -1.0 if k % 4 else 1.0
    for k in range(1, m + 1, 2):
        tb[k] = -1.0 if (k - 1) % 4 else 1.0
    return ta, tb


# -- covariant derivative, inner derivative, divergence ----------------------

def nabla(f):
    """Covariant derivative; array (2, m+1, n, n), first axis = new index."""
    mg = f.mg
    m = f.rank
    mx, my = mg.mu_x, mg.mu_y
    out = np.zeros((2, m + 1, mg.n, mg.n))
    for k in range(m + 1):
        up = f.comps[k + 1] if k + 1 <= m else 0.0
        dn = f.comps[k - 1] if k - 1 >= 0 else 0.0
        out[0, k] = (mg.dx(f.comps[k]) - m * mx * f.comps[k]
                     + (m - k) * my * up - k * my * dn)
        out[1, k] = (mg.dy(f.comps[k]) - m * my * f.comps[k]
                     - (m - k) * mx * up + k * mx * dn)
    return out

def inner_derivative(f):
    """d f = sym(nabla f), one rank up; Killing fields satisfy d f = 0."""
    mg = f.mg
    m = f.rank
    nab = nabla(f)
    out = np.zeros((m + 2, mg.n, mg.n))
    for j in range(m + 2):
        if j <= m:
            out[j] += (m + 1 - j) * nab[0, j]
        if j >= 1:
            out[j] += j * nab[1, j - 1]
    return SymTensorField(mg, out / (m + 1))


def divergence(f):
    """delta f = trace of nabla f over the derivative index, one rank down.

    Trace-free inputs can use TraceFreeField.divergence, a two-term
    first-order expression; both routes agree.
    """
    if f.rank < 1:
        raise ValueError("divergence needs rank >= 1")
    mg = f.mg
    nab = nabla(f)
    comps = (nab[0, :f.rank] + nab[1, 1:]) / mg.lam
    return SymTensorField(mg, comps)


def killing_residual(f):
    """Max norm of d f, normalized by the field scale."""
    df = inner_derivative(f)
    return df.max_norm() / max(f.max_norm(), 1e-300)


# -- inner products and norms ------------------------------------------------

def fiber_inner(f, h):
    """Pointwise inner product induced by g on rank-m tensors (a grid).

    Components are paired over full index strings, giving binomial weights:
    <f, h> = e^{-2 m mu} sum_k C(m, k) f_k h_k.
    """
    _check_pair(f, h)
    w = np.array([comb(f.rank, k) for k in range(f.rank + 1)], dtype=float)
    s = np.tensordot(w, f.comps * h.comps, axes=(0, 0))
    return s * np.exp(-2.0 * f.rank * f.mg.mu)


def l2_inner(f, h):
    """Inner product in L^2 with respect to the metric area form."""
    return f.mg.integral_dsigma(fiber_inner(f, h))


def l2_norm(f):
    return l2_inner(f, f) ** 0.5


# -- harmonic decomposition --------------------------------------------------

@dataclass
class HarmonicDecomposition:
    """f = sum_k i^{(m - m_k)/2} parts[k], parts trace-free of rank m_k.

    Part ranks m_k run over m, m-2, ..., down to 1 or 0; parts of rank >= 1
    are TraceFreeField, the rank-0 part (even m) is a scalar SymTensorField.
    parts[-1] is the top, rank-m part.
    """

    rank: int
    parts: list

    def part_ranks(self):
        return [p.rank for p in self.parts]

    def reconstruct(self):
        return reconstruct(self, self.parts[0].mg)


def expand_part(part):
    return part.expand() if isinstance(part, TraceFreeField) else part


def _basis_matrix(m):
    """Columns: fiber patterns of i0^r t for each part rank and t in {a, b}.

    i0 is symmetric multiplication by the flat metric (lam = 1); columns are
    constant in space, so decomposition is a single (m+1)x(m+1) solve.
    Returns (B, col_ranks) with col_ranks[c] the part rank of column c.
    """
    from .metric import ConformalFactor
    flat = ConformalFactor().grid(1)
    cols = []
    ranks = []
    low = m % 2
    for mk in range(low, m + 1, 2):
        if mk == 0:
            pats = [np.array([1.0])]
        else:
            pats = _tracefree_patterns(mk)
        for t in pats:
            f = SymTensorField(flat, t[:, None, None] * np.ones((1, 1)))
            for _ in range((m - mk) // 2):
                f = op_i(f)
            cols.append(f.comps[:, 0, 0])
            ranks.append(mk)
    B = np.column_stack(cols)
    return B, ranks


_BASIS_CACHE = {}


def _basis(m):
    if m not in _BASIS_CACHE:
        B, ranks = _basis_matrix(m)
        _BASIS_CACHE[m] = (B, np.linalg.inv(B), ranks)
    return _BASIS_CACHE[m]


def harmonic_decompose(f):
    """Split f into trace-free parts along powers of the metric."""
    m = f.rank
    mg = f.mg
    B, Binv, ranks = _basis(m)
    coef = np.tensordot(Binv, f.comps, axes=(1, 0))
    parts = []
    c = 0
    low = m % 2
    for mk in range(low, m + 1, 2):
        scale = mg.lam ** ((m - mk) // 2)
        if mk == 0:
            parts.append(SymTensorField(mg, (coef[c] / scale)[None]))
            c += 1
        else:
            parts.append(TraceFreeField(mg, mk, coef[c] / scale,
                                        coef[c + 1] / scale))
            c += 2
    return HarmonicDecomposition(rank=m, parts=parts)


def reconstruct(dec, mg):
    """Inverse of harmonic_decompose."""
    m = dec.rank
    B, _, ranks = _basis(m)
    out = np.zeros((m + 1, mg.n, mg.n))
    c = 0
    for part in dec.parts:
        mk = part.rank
        scale = mg.lam ** ((m - mk) // 2)
        if mk == 0:
            out += B[:, c, None, None] * (part.comps[0] * scale)[None]
            c += 1
        else:
            out += (B[:, c, None, None] * (part.a * scale)[None]
                    + B[:, c + 1, None, None] * (part.b * scale)[None])
            c += 2
    return SymTensorField(mg, out)


# -- divergence chain --------------------------------------------------------

def chain_coefficient(k, even, n=2):
    """Coefficient of the divergence term in the k-th chain equation.

    For f of even rank 2m the chain couples neighbouring parts through
    (2k+2)/(n+4k+2); for odd rank through (2k+3)/(n+4k+4).  In dimension
    n = 2 every coefficient equals 1/2.
    """
    if even:
        return (2 * k + 2) / (n + 4 * k + 2)
    return (2 * k + 3) / (n + 4 * k + 4)


def _part_pd(part):
    if isinstance(part, TraceFreeField):
        return part.pd()
    mg = part.mg
    u = part.comps[0]
    return TraceFreeField(mg, 1, mg.dx(u), mg.dy(u))


def _part_delta(part):
    return part.divergence()


def chain_residuals(f, n=2):
    """Harmonic parts of d f expressed through the chain equations.

    Returns a list matching harmonic_decompose(inner_derivative(f)).parts:
    every entry is zero exactly when f is a Killing field.  The chain for
    rank 2m+1 starts with the scalar (1/n) delta f^0.
    """
    if n != 2:
        raise ValueError("metric chain implemented for n = 2 only")
    dec = harmonic_decompose(f)
    parts = dec.parts
    out = []
    npart = len(parts)
    even = f.rank % 2 == 0
    if not even:
        d0 = _part_delta(parts[0])
        out.append(SymTensorField(f.mg, d0.comps / n))
    for k in range(npart):
        r = _part_pd(parts[k])
        if k + 1 < npart:
            c = chain_coefficient(k, even, n)
            delt = _part_delta(parts[k + 1])
            r = r + c * delt
        out.append(r)
    return out


# -- polynomial picture on the unit sphere bundle ----------------------------

def to_polynomial(f, n_theta=None):
    """Restriction of f to unit tangent vectors, as F(x, y, theta).

    Unit vectors are xi = e^{-mu} (cos t, sin t); the result samples
    F = sum over index strings of f_I xi^I on an (n, n, n_theta) grid.
    """
    m = f.rank
    if n_theta is None:
        n_theta = 4 * (m + 2)
    th = 2.0 * np.pi * np.arange(n_theta) / n_theta
    ct, st = np.cos(th), np.sin(th)
    w = np.exp(-m * f.mg.mu)
    out = np.zeros((f.mg.n, f.mg.n, n_theta))
    for k in range(m + 1):
        ang = comb(m, k) * ct ** (m - k) * st ** k
        out += f.comps[k][:, :, None] * ang[None, None, :]
    return out * w[:, :, None]


def tracefree_polynomial(tf):
    """Same as to_polynomial for a trace-free pair: e^{-m mu}(a cos m t + b sin m t)."""
    m = tf.rank
    n_theta = 4 * (m + 2)
    th = 2.0 * np.pi * np.arange(n_theta) / n_theta
    w = np.exp(-m * tf.mg.mu)
    return (tf.a[:, :, None] * np.cos(m * th)[None, None, :]
            + tf.b[:, :, None] * np.sin(m * th)[None, None, :]) * w[:, :, None]
