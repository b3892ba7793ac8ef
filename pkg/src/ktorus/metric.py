"""Lattices, periodic conformal factors and metric data on the 2-torus.

The torus is R^2/G for a rank-2 lattice G spanned by (e1, e2) with positive
orientation.  The metric is conformal to the flat one,

    g = lam(x, y) * (dx^2 + dy^2),   lam = exp(2*mu),

where mu is a real trigonometric polynomial on the torus given by a finite
table of Fourier coefficients.  Everything downstream (tensor calculus,
spectral solvers, geodesic integration) consumes either pointwise jets of mu
or sampled grids produced here.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np

# derivative orders (ax, ay) making up a third-order jet, in fixed order
JET_ORDERS = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2),
              (3, 0), (2, 1), (1, 2), (0, 3)]

JET_NAMES = ["mu", "mu_x", "mu_y", "mu_xx", "mu_xy", "mu_yy",
             "mu_xxx", "mu_xxy", "mu_xyy", "mu_yyy"]


class Lattice:
    """Rank-2 lattice in R^2 with positively oriented basis (e1, e2)."""

    def __init__(self, e1=(1.0, 0.0), e2=(0.0, 1.0)):
        self.e1 = np.asarray(e1, dtype=float)
        self.e2 = np.asarray(e2, dtype=float)
        if self.e1.shape != (2,) or self.e2.shape != (2,):
            raise ValueError("lattice vectors must be length-2")
        self.area = float(self.e1[0] * self.e2[1] - self.e1[1] * self.e2[0])
        if self.area <= 0.0:
            raise ValueError("basis must satisfy e1 x e2 > 0")
        # columns of E are the basis vectors; A maps cartesian -> fractional
        self.E = np.column_stack([self.e1, self.e2])
        self.A = np.linalg.inv(self.E)
        # dual basis: <b_i, e_j> = 2*pi*delta_ij
        self.B = 2.0 * np.pi * self.A  # rows are b1, b2

    def dual_vector(self, k1, k2):
        """Cartesian wave vector of the Fourier mode (k1, k2)."""
        return k1 * self.B[0] + k2 * self.B[1]

    def frac_from_cart(self, pts):
        pts = np.asarray(pts, dtype=float)
        return pts @ self.A.T

    def cart_from_frac(self, frac):
        frac = np.asarray(frac, dtype=float)
        return frac @ self.E.T

    def wrap(self, pts):
        """Translate points by lattice vectors into the fundamental cell."""
        frac = self.frac_from_cart(pts)
        return self.cart_from_frac(frac - np.floor(frac))

    def __eq__(self, other):
        return (isinstance(other, Lattice)
                and np.array_equal(self.e1, other.e1)
                and np.array_equal(self.e2, other.e2))

    def __hash__(self):
        return hash((tuple(self.e1), tuple(self.e2)))

    def __repr__(self):
        return f"Lattice(e1={tuple(self.e1)}, e2={tuple(self.e2)})"


@dataclass
class MetricJet:
    """Partial derivatives of mu up to third order at a point (or on a grid)."""

    mu: np.ndarray
    mu_x: np.ndarray
    mu_y: np.ndarray
    mu_xx: np.ndarray
    mu_xy: np.ndarray
    mu_yy: np.ndarray
    mu_xxx: np.ndarray
    mu_xxy: np.ndarray
    mu_xyy: np.ndarray
    mu_yyy: np.ndarray

    @property
    def lam(self):
        return np.exp(2.0 * self.mu)


class ConformalFactor:
    """mu as a finite Fourier series on a lattice torus.

    Parameters
    ----------
    lattice : Lattice
    coeffs : dict
        Maps integer pairs (k1, k2) to complex coefficients c_k of
        mu(q) = sum_k c_k exp(i <kappa_k, q>), kappa_k = k1*b1 + k2*b2.
        The table is closed under k -> -k, c -> conj(c) automatically; if
        both members of a pair are supplied they must be consistent.
    """

    def __init__(self, lattice=None, coeffs=None):
        self.lattice = lattice if lattice is not None else Lattice()
        table = {}
        for (k1, k2), c in (coeffs or {}).items():
            k = (int(k1), int(k2))
            c = complex(c)
            if k == (0, 0) and abs(c.imag) > 1e-15 * (1 + abs(c)):
                raise ValueError("constant coefficient must be real")
            for kk, cc in ((k, c), ((-k[0], -k[1]), c.conjugate())):
                if kk in table and abs(table[kk] - cc) > 1e-13 * (1 + abs(cc)):
                    raise ValueError(f"coefficient table not Hermitian at {kk}")
                table[kk] = cc
        if (0, 0) in table:
            table[(0, 0)] = complex(table[(0, 0)].real, 0.0)
        self.coeffs = dict(sorted(table.items()))
        self.max_degree = max((max(abs(k1), abs(k2))
                               for k1, k2 in self.coeffs), default=0)
        ks = np.array(list(self.coeffs) or np.zeros((0, 2)), dtype=float)
        ks = ks.reshape(-1, 2)
        self._kappa = ks @ self.lattice.B  # rows: cartesian wave vectors
        self._c = np.array([self.coeffs[k] for k in self.coeffs], complex)
        self._kints = np.array(list(self.coeffs), dtype=int).reshape(-1, 2)

    # -- pointwise evaluation -------------------------------------------------

    def derivative(self, pts, order=(0, 0)):
        """Evaluate d^ax/dx^ax d^ay/dy^ay mu at cartesian points.

        `pts` has shape (..., 2); the result has shape (...).  Any order is
        supported; the series is differentiated term by term.
        """
        ax, ay = order
        pts = np.asarray(pts, dtype=float)
        if self._c.size == 0:
            return np.zeros(pts.shape[:-1])
        phase = np.exp(1j * (pts @ self._kappa.T))
        mult = (1j * self._kappa[:, 0]) ** ax * (1j * self._kappa[:, 1]) ** ay
        return (phase @ (self._c * mult)).real

    def eval_jet(self, pts):
        """Third-order jet of mu at cartesian points, as a MetricJet."""
        pts = np.asarray(pts, dtype=float)
        if self._c.size == 0:
            z = np.zeros(pts.shape[:-1])
            return MetricJet(*[z.copy() for _ in JET_ORDERS])
        phase = np.exp(1j * (pts @ self._kappa.T))
        ikx = 1j * self._kappa[:, 0]
        iky = 1j * self._kappa[:, 1]
        vals = []
        for ax, ay in JET_ORDERS:
            vals.append((phase @ (self._c * ikx**ax * iky**ay)).real)
        return MetricJet(*vals)

    # -- sampled grids --------------------------------------------------------

    def sample(self, n, order=(0, 0)):
        """Exact samples of the derivative on the n-by-n fractional grid.

        Grid index [i, j] is the point (i/n)*e1 + (j/n)*e2.  Coefficients are
        accumulated into FFT bins, which reproduces the exact point samples
        for any n (modes congruent mod n coincide on the grid).
        """
        ax, ay = order
        c = np.zeros((n, n), dtype=complex)
        for (k1, k2), coef in self.coeffs.items():
            kap = self.lattice.dual_vector(k1, k2)
            c[k1 % n, k2 % n] += coef * (1j * kap[0])**ax * (1j * kap[1])**ay
        return np.fft.ifft2(c).real * n * n

    def grid(self, n):
        return _metric_grid_cached(self, n)

    def __hash__(self):
        return hash((self.lattice, tuple(self.coeffs.items())))

    def __eq__(self, other):
        return (isinstance(other, ConformalFactor)
                and self.lattice == other.lattice
                and self.coeffs == other.coeffs)


@lru_cache(maxsize=32)
def _metric_grid_cached(cf, n):
    return MetricGrid(cf, n)


class MetricGrid:
    """Jet of mu, curvature and spectral helpers sampled on an n-by-n grid.

    Carries everything the tensor calculus needs pointwise: the third-order
    jet of mu, lam = e^{2 mu}, the Gaussian curvature K with its first
    cartesian derivatives, and wavenumber tables for spectral x/y derivatives
    of periodic grids in the lattice coordinates.
    """

    def __init__(self, cf, n):
        if n < 1:
            raise ValueError("grid size must be positive")
        self.cf = cf
        self.n = int(n)
        self.lattice = cf.lattice
        self.area = cf.lattice.area
        for name, order in zip(JET_NAMES, JET_ORDERS):
            setattr(self, name, cf.sample(n, order))
        self.lam = np.exp(2.0 * self.mu)
        lap = self.mu_xx + self.mu_yy
        self.K = -lap / self.lam
        self.K_x = (2.0 * self.mu_x * lap
                    - (self.mu_xxx + self.mu_xyy)) / self.lam
        self.K_y = (2.0 * self.mu_y * lap
                    - (self.mu_xxy + self.mu_yyy)) / self.lam

        # spectral derivative multipliers: d/ds <-> 2*pi*i*k1 etc., mapped to
        # cartesian directions through the inverse basis matrix
        k = np.fft.fftfreq(n) * n
        if n % 2 == 0:
            k[n // 2] = 0.0  # drop the unpaired mode in odd-order derivatives
        k1 = k[:, None]
        k2 = k[None, :]
        A = self.lattice.A
        self._wx = 2j * np.pi * (k1 * A[0, 0] + k2 * A[1, 0])
        self._wy = 2j * np.pi * (k1 * A[0, 1] + k2 * A[1, 1])
        frac = np.arange(n) / n
        s, t = np.meshgrid(frac, frac, indexing="ij")
        self.X = s * self.lattice.e1[0] + t * self.lattice.e2[0]
        self.Y = s * self.lattice.e1[1] + t * self.lattice.e2[1]

    # -- spectral calculus on grids ------------------------------------------

    def dx(self, g):
        return np.fft.ifft2(self._wx * np.fft.fft2(g)).real

    def dy(self, g):
        return np.fft.ifft2(self._wy * np.fft.fft2(g)).real

    def mean(self, g):
        return float(np.mean(g))

    def integral(self, g):
        """Integral over the fundamental cell w.r.t. dx dy."""
        return float(np.mean(g)) * self.area

    def integral_dsigma(self, g):
        """Integral w.r.t. the metric area form dsigma = lam dx dy."""
        return float(np.mean(g * self.lam)) * self.area

    def jet(self):
        return MetricJet(*[getattr(self, name) for name in JET_NAMES])

    def points(self):
        return np.stack([self.X, self.Y], axis=-1)


def resample(g, n2):
    """Fourier interpolation of a periodic grid to a new resolution."""
    n = g.shape[0]
    if n2 == n:
        return np.array(g)
    f = np.fft.fftshift(np.fft.fft2(g)) / (n * n)
    out = np.zeros((n2, n2), dtype=complex)
    m = min(n, n2)
    lo, hi = -(m // 2), (m - 1) // 2 + 1
    c0, c2 = n // 2, n2 // 2
    out[c2 + lo:c2 + hi, c2 + lo:c2 + hi] = f[c0 + lo:c0 + hi, c0 + lo:c0 + hi]
    return np.fft.ifft2(np.fft.ifftshift(out)).real * n2 * n2


def christoffels(jet):
    """Christoffel symbols of g = e^{2 mu}(dx^2+dy^2), shape (2,2,2) + grid.

    G[i, j, k] is Gamma^i_{jk}:
      G^1_{11} = mu_x   G^1_{12} = mu_y   G^1_{22} = -mu_x
      G^2_{11} = -mu_y  G^2_{12} = mu_x   G^2_{22} = mu_y
    """
    p, q = jet.mu_x, jet.mu_y
    base = np.broadcast(p, q)
    G = np.empty((2, 2, 2) + base.shape, dtype=float)
    G[0, 0, 0] = p
    G[0, 0, 1] = G[0, 1, 0] = q
    G[0, 1, 1] = -p
    G[1, 0, 0] = -q
    G[1, 0, 1] = G[1, 1, 0] = p
    G[1, 1, 1] = q
    return G


def curvature_from_jet(jet):
    """Gaussian curvature K = -e^{-2 mu} (mu_xx + mu_yy)."""
    return -(jet.mu_xx + jet.mu_yy) / jet.lam


def gaussian_curvature(cf, pts):
    return curvature_from_jet(cf.eval_jet(pts))


def gauss_bonnet_defect(mg):
    """Integral of K dsigma over the torus; must vanish."""
    return mg.integral_dsigma(mg.K)


def transformed(cf, a):
    """Conformal factor of the same metric in coordinates z = a*z'.

    Since dz = a dz', the metric e^{2mu}|dz|^2 reads e^{2mu'}|dz'|^2 with
    mu'(z') = mu(a z') + log|a|.  The integer coefficient table is reused
    on the divided lattice; log|a| lands in the constant mode.
    """
    a = complex(a)
    if a == 0:
        raise ValueError("a must be nonzero")
    ar, ai = a.real, a.imag
    M = np.array([[ar, ai], [-ai, ar]]) / abs(a) ** 2  # multiplication by 1/a
    lat = Lattice(M @ cf.lattice.e1, M @ cf.lattice.e2)
    coeffs = dict(cf.coeffs)
    coeffs[(0, 0)] = coeffs.get((0, 0), 0.0) + np.log(abs(a))
    return ConformalFactor(lat, coeffs)


def default_grid_n(cf, requested=None):
    """Grid resolution: at least 128 and at least 4x the top mode degree."""
    floor = max(128, 4 * cf.max_degree)
    if requested is None:
        return floor
    return max(int(requested), 4 * cf.max_degree)
