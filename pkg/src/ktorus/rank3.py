"""Rank-3 exclusion battery: curvature transport along isolines.

A rank-3 Killing tensor field forces a scalar potential u (periodic up to
a linear part alpha.x) tied to the metric through two equations:

    transport:     (grad_perp K) u = Phi^c = c1 L1 + c2 L2,
    fourth order:  1/2 Lap^2 u + div(K grad u) = -c2 L1 + c1 L2,

where K is the Gaussian curvature and L = (L1, L2) is a weight-3
1-pseudoform built from third derivatives of the conformal factor.  The
fourth-order equation is always solvable (its compatibility holds
unconditionally), so the computable obstruction is the residual of the
transport equation minimized over the fourth-order solution family, plus
the isoline integral laws that transport implies: line integrals of
Phi^c along curvature isolines telescope to endpoint differences of u,
closed isolines pair with a single cohomology class alpha, disk domains
around nondegenerate extrema integrate Phi^c dsigma to zero, and annuli
between isolines integrate to (class pairing) times the level gap.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.sparse.linalg import LinearOperator, lsmr

from .metric import christoffels
from .solver import make_Z, _Smoother, _metric_weights, _c_components
from .tensors import SymTensorField, TraceFreeField


# -- the weight-3 pseudoform -------------------------------------------------

@dataclass
class LambdaForm:
    """The 1-pseudoform (L1, L2) of weight 3, computed by two routes.

    L1/L2 hold the real-variable route (third mu-derivatives); parts holds
    the three building blocks of the complex route, whose combination
    2*parts[0] + 4*parts[1] - 2*parts[2] must reproduce (L1, L2).
    """

    L1: np.ndarray
    L2: np.ndarray
    parts: list                  # three (P1, P2) pairs from the complex route
    route_discrepancy: float     # max |real route - combined complex route|
    imag_residual: float         # max imaginary residue of the complex route

    def combination(self):
        out1 = 2.0 * self.parts[0][0] + 4.0 * self.parts[1][0] \
            - 2.0 * self.parts[2][0]
        out2 = 2.0 * self.parts[0][1] + 4.0 * self.parts[1][1] \
            - 2.0 * self.parts[2][1]
        return out1, out2

    def pair(self, c):
        """The scalar c1 L1 + c2 L2 for a weight-3 pseudovector c."""
        c1, c2 = _weight3(c)
        return c1 * self.L1 + c2 * self.L2


def _weight3(c):
    comp = _c_components(c)
    w = getattr(c, "weight", 3)
    if w != 3:
        raise ValueError(f"pseudovector weight must be 3, got {w}")
    return float(comp[0]), float(comp[1])


def _lambda_real(jet):
    """(L1, L2) from the third-order jet of mu."""
    mx, my = jet.mu_x, jet.mu_y
    mxx, mxy, myy = jet.mu_xx, jet.mu_xy, jet.mu_yy
    L1 = (jet.mu_xxx - 3.0 * jet.mu_xyy + 10.0 * mx * mxx - 20.0 * my * mxy
          - 10.0 * mx * myy + 8.0 * mx ** 3 - 24.0 * mx * my ** 2)
    L2 = (3.0 * jet.mu_xxy - jet.mu_yyy + 10.0 * my * mxx + 20.0 * mx * mxy
          - 10.0 * my * myy + 24.0 * mx ** 2 * my - 8.0 * my ** 3)
    return L1, L2


def _lambda_complex_parts(jet):
    """Three (P1, P2) pairs from lam = e^{2 mu} and its z-derivatives.

    Both holomorphic and antiholomorphic derivative stacks are evaluated
    independently (no conjugate shortcut), so the imaginary residue of
    each pair is a genuine consistency check.
    """
    lam = jet.lam
    mx, my = jet.mu_x, jet.mu_y
    mxx, mxy, myy = jet.mu_xx, jet.mu_xy, jet.mu_yy
    lx = 2.0 * mx * lam
    ly = 2.0 * my * lam
    lxx = (2.0 * mxx + 4.0 * mx ** 2) * lam
    lxy = (2.0 * mxy + 4.0 * mx * my) * lam
    lyy = (2.0 * myy + 4.0 * my ** 2) * lam
    lxxx = (2.0 * jet.mu_xxx + 12.0 * mx * mxx + 8.0 * mx ** 3) * lam
    lxxy = (2.0 * jet.mu_xxy + 8.0 * mx * mxy + 4.0 * mxx * my
            + 8.0 * mx ** 2 * my) * lam
    lxyy = (2.0 * jet.mu_xyy + 8.0 * my * mxy + 4.0 * myy * mx
            + 8.0 * mx * my ** 2) * lam
    lyyy = (2.0 * jet.mu_yyy + 12.0 * my * myy + 8.0 * my ** 3) * lam

    lz = 0.5 * (lx - 1j * ly)
    lzb = 0.5 * (lx + 1j * ly)
    lzz = 0.25 * (lxx - 2j * lxy - lyy)
    lzbzb = 0.25 * (lxx + 2j * lxy - lyy)
    lzzz = 0.125 * (lxxx - 3j * lxxy - 3.0 * lxyy + 1j * lyyy)
    lzbzbzb = 0.125 * (lxxx + 3j * lxxy - 3.0 * lxyy - 1j * lyyy)

    raw = [((lzzz + lzbzbzb) / lam, 1j * (lzzz - lzbzbzb) / lam),
           ((lz * lzz + lzb * lzbzb) / lam ** 2,
            1j * (lz * lzz - lzb * lzbzb) / lam ** 2),
           ((lz ** 3 + lzb ** 3) / lam ** 3,
            1j * (lz ** 3 - lzb ** 3) / lam ** 3)]
    imag = max(float(np.max(np.abs(p.imag))) for pr in raw for p in pr)
    parts = [(p1.real.copy(), p2.real.copy()) for p1, p2 in raw]
    return parts, imag


def lambda_form(mg):
    """Both-route evaluation of the pseudoform on a metric grid."""
    jet = mg.jet()
    L1, L2 = _lambda_real(jet)
    parts, imag = _lambda_complex_parts(jet)
    c1 = 2.0 * parts[0][0] + 4.0 * parts[1][0] - 2.0 * parts[2][0]
    c2 = 2.0 * parts[0][1] + 4.0 * parts[1][1] - 2.0 * parts[2][1]
    disc = float(max(np.max(np.abs(L1 - c1)), np.max(np.abs(L2 - c2))))
    return LambdaForm(L1=L1, L2=L2, parts=parts,
                      route_discrepancy=disc, imag_residual=imag)


def lambda_at_points(cf, pts):
    """(L1, L2) evaluated at arbitrary cartesian points via the analytic jet."""
    return _lambda_real(cf.eval_jet(np.asarray(pts, float)))


def mean_value_check(cf, n=None):
    """(integral of L1 dsigma, integral of L2 dsigma) over the torus.

    Both vanish for every metric: c1 L1 + c2 L2 is the divergence of a
    rotated covector field for every constant c, and divergences integrate
    to zero.  The grid value certifies quadrature consistency.
    """
    from .metric import default_grid_n
    mg = cf.grid(default_grid_n(cf, n))
    lf = lambda_form(mg)
    return (float(mg.integral_dsigma(lf.L1)),
            float(mg.integral_dsigma(lf.L2)))


# -- T^c and its derived scalars ---------------------------------------------

def make_T(c, mg):
    """Trace-free rank-2 field T^c with T_11 = e^{4 mu}(-c2 mu_x + c1 mu_y),
    T_12 = e^{4 mu}(c1 mu_x + c2 mu_y); equal to the rank-2 Z-field of the
    rotated pseudovector (-c2, c1)."""
    c1, c2 = _weight3(c)
    return make_Z(mg, 2, (-c2, c1))


def delta_T_explicit(c, mg):
    """Closed-form covariant components ((dT)_1, (dT)_2) of the divergence
    of T^c; an independent oracle for the divergence operator."""
    c1, c2 = _weight3(c)
    j = mg.jet()
    w = np.exp(2.0 * j.mu)
    d1 = w * (-c2 * j.mu_xx + 2.0 * c1 * j.mu_xy + c2 * j.mu_yy
              - 4.0 * c2 * j.mu_x ** 2 + 8.0 * c1 * j.mu_x * j.mu_y
              + 4.0 * c2 * j.mu_y ** 2)
    d2 = w * (c1 * j.mu_xx + 2.0 * c2 * j.mu_xy - c1 * j.mu_yy
              + 4.0 * c1 * j.mu_x ** 2 + 8.0 * c2 * j.mu_x * j.mu_y
              - 4.0 * c1 * j.mu_y ** 2)
    return d1, d2


def phi_c(c, mg, check_tol=1e-9):
    """The transport source Phi^c = c1 L1 + c2 L2, verified against the
    covariant route e^{-2 mu}(d_x (dT)_2 - d_y (dT)_1)."""
    lf = lambda_form(mg)
    direct = lf.pair(c)
    div = make_T(c, mg).divergence()
    covariant = (mg.dx(div.b) - mg.dy(div.a)) / mg.lam
    scale = 1.0 + float(np.max(np.abs(direct)))
    err = float(np.max(np.abs(direct - covariant)))
    if err > check_tol * scale:
        raise ValueError(
            f"transport source routes disagree ({err:.3e}); "
            "raise the grid resolution")
    return direct


def delta_squared_T(c, mg):
    """The scalar delta(delta T^c); equals -c2 L1 + c1 L2."""
    div = make_T(c, mg).divergence()
    return (mg.dx(div.a) + mg.dy(div.b)) / mg.lam


# -- the fourth-order solve and the transport residual -----------------------

@dataclass
class CohomologySolution:
    """u = w + alpha1 x + alpha2 y with periodic w on an n-by-n grid."""

    mg: object
    w: np.ndarray
    alpha: np.ndarray

    def gradient(self):
        """(u_x, u_y) as periodic grids."""
        return (self.mg.dx(self.w) + self.alpha[0],
                self.mg.dy(self.w) + self.alpha[1])

    def vector_part(self):
        """The rank-1 companion field (-u_y, u_x) as a SymTensorField."""
        ux, uy = self.gradient()
        return SymTensorField(self.mg, np.stack([-uy, ux]))

    def sigma_pairing(self, lift_cart):
        """Pairing of the cohomology class [alpha dx + alpha dy] with the
        homology class of a loop whose lift displaces by lift_cart."""
        v = np.asarray(lift_cart, float)
        return float(self.alpha[0] * v[0] + self.alpha[1] * v[1])

    def u_at(self, pts_lifted):
        """u at lifted cartesian points (periodic part by Fourier summation)."""
        pts = np.asarray(pts_lifted, float)
        n = self.mg.n
        wc = np.fft.fft2(self.w) / n ** 2
        k = np.fft.fftfreq(n) * n
        frac = self.mg.lattice.frac_from_cart(pts)
        ph1 = np.exp(2j * np.pi * np.outer(frac[..., 0].ravel(), k))
        ph2 = np.exp(2j * np.pi * np.outer(frac[..., 1].ravel(), k))
        vals = np.einsum("pi,ij,pj->p", ph1, wc, ph2).real
        lin = pts[..., 0] * self.alpha[0] + pts[..., 1] * self.alpha[1]
        return vals.reshape(pts.shape[:-1]) + lin


@dataclass
class FourthOrderReport:
    """Residuals of the fourth-order solve and the transport equation."""

    fourth_order_residual: float   # relative, in L2(dsigma)
    transport_residual: float      # relative residual of the first-order law
    transport_scale: float         # L2(dsigma) norm of Phi^c
    gradK_scale: float             # L2(dsigma) norm of |grad K|
    verdict: str                   # OBSTRUCTED-candidate / SOLVED / DEGENERATE
    iterations: tuple = ()


def _grad_perp_K(mg, ux, uy):
    return (-mg.K_y * ux + mg.K_x * uy) / mg.lam


def _fourth_order_solve_w(mg, rhs, tol=1e-12, maxiter=None):
    """Min-norm periodic w with 1/2 Lap^2 w + div(K grad w) = rhs."""
    n = mg.n
    u = 1.0 / mg.lam
    K = mg.K
    smoother = _Smoother(mg, power=4)
    weights = _metric_weights(mg, 0, False)[0]

    def lap(v):
        return mg.dx(mg.dx(v)) + mg.dy(mg.dy(v))

    def apply_S(v):
        return (0.5 * lap(u * lap(v)) + mg.dx(K * mg.dx(v))
                + mg.dy(K * mg.dy(v)))

    def mv(y):
        v = smoother.apply(y.reshape(n, n))
        return (weights * (u * apply_S(v))).ravel()

    def rmv(g):
        h = weights * g.reshape(n, n)
        return smoother.apply(apply_S(u * h)).ravel()

    A = LinearOperator((n * n, n * n), matvec=mv, rmatvec=rmv)
    b = (weights * rhs).ravel()
    if maxiter is None:
        maxiter = 200 * n
    sol = lsmr(A, b, atol=tol, btol=tol, maxiter=maxiter)
    w = smoother.apply(sol[0].reshape(n, n))
    w = w - mg.mean(w)
    res = u * apply_S(w) - rhs
    rel = np.sqrt(float(np.sum((weights * res) ** 2)))
    rel /= max(np.sqrt(float(np.sum((weights * rhs) ** 2))), 1e-300)
    return w, rel, int(sol[2])


def solve_fourth_order(c, cf, n=None, tol=1e-12, degenerate_tol=1e-10):
    """Solve the fourth-order necessary equation and score the transport law.

    The fourth-order equation determines w only up to constants once alpha
    is fixed, and its compatibility holds for every metric, so alpha is
    chosen to minimize the transport residual over the full solution
    family; the reported residual is that minimum.
    """
    from .metric import default_grid_n
    mg = cf.grid(default_grid_n(cf, n))
    lf = lambda_form(mg)
    c1, c2 = _weight3(c)
    rhs = -c2 * lf.L1 + c1 * lf.L2
    phi = c1 * lf.L1 + c2 * lf.L2

    weights = _metric_weights(mg, 0, False)[0]

    def dnorm(g):
        return np.sqrt(float(np.sum((weights * g) ** 2)))

    gradK = np.hypot(mg.K_x, mg.K_y) / np.exp(mg.mu)
    gk_scale = dnorm(gradK)
    phi_scale = dnorm(phi)
    if gk_scale <= degenerate_tol and phi_scale <= degenerate_tol:
        sol = CohomologySolution(mg=mg, w=np.zeros((mg.n, mg.n)),
                                 alpha=np.zeros(2))
        rep = FourthOrderReport(0.0, 0.0, phi_scale, gk_scale,
                                "DEGENERATE", ())
        return sol, rep

    w0, r0, it0 = _fourth_order_solve_w(mg, rhs, tol=tol)
    w1, _, it1 = _fourth_order_solve_w(mg, -(mg.K_x / mg.lam), tol=tol)
    w2, _, it2 = _fourth_order_solve_w(mg, -(mg.K_y / mg.lam), tol=tol)

    base = _grad_perp_K(mg, mg.dx(w0), mg.dy(w0)) - phi
    col1 = _grad_perp_K(mg, mg.dx(w1) + 1.0, mg.dy(w1))
    col2 = _grad_perp_K(mg, mg.dx(w2), mg.dy(w2) + 1.0)
    M = np.column_stack([(weights * col1).ravel(), (weights * col2).ravel()])
    alpha, *_ = np.linalg.lstsq(M, -(weights * base).ravel(), rcond=None)

    w = w0 + alpha[0] * w1 + alpha[1] * w2
    w = w - mg.mean(w)
    sol = CohomologySolution(mg=mg, w=w, alpha=alpha)

    resid = base + alpha[0] * col1 + alpha[1] * col2
    achieved = dnorm(resid)
    lhs = resid + phi
    denom = max(phi_scale, dnorm(lhs))
    if denom <= degenerate_tol * max(1.0, gk_scale):
        # both sides of the transport law vanish: nothing to violate
        transport_rel = 0.0
        verdict = "DEGENERATE"
    else:
        transport_rel = achieved / denom
        verdict = "SOLVED" if transport_rel <= 1e-6 else "OBSTRUCTED-candidate"
    rep = FourthOrderReport(fourth_order_residual=r0,
                            transport_residual=float(transport_rel),
                            transport_scale=float(phi_scale),
                            gradK_scale=float(gk_scale),
                            verdict=verdict,
                            iterations=(it0, it1, it2))
    return sol, rep


@dataclass
class TransportObstruction:
    """Minimum transport residual over all pseudovector directions.

    Irreducible rank-3 tensors need the transport law solvable for some
    nonzero c; every ingredient is linear in c, so the residual minimized
    over the solution family and over unit c is the smallest singular
    value of a two-column matrix.  A minimum clearly above solver noise
    excludes every direction at once.
    """

    singular_values: np.ndarray  # ascending, weighted L2(dsigma) units
    scale: float                 # largest singular value of the source pair
    rel_min: float
    rel_max: float
    best_c: np.ndarray           # unit c with the smallest residual
    worst_c: np.ndarray
    verdict: str                 # OBSTRUCTED / INCONCLUSIVE / DEGENERATE
    fourth_order_residuals: tuple
    _mg: object = None
    _pieces: tuple = None

    def solution_for(self, c):
        """CohomologySolution for a direction, from the shared solves."""
        c1, c2 = _weight3(c)
        w01, w02, w1, w2, al1, al2 = self._pieces
        alpha = c1 * al1 + c2 * al2
        w = c1 * w01 + c2 * w02 + alpha[0] * w1 + alpha[1] * w2
        w = w - self._mg.mean(w)
        return CohomologySolution(mg=self._mg, w=w, alpha=alpha)


def transport_obstruction(cf, n=None, tol=1e-12, threshold=1e-6,
                          degenerate_tol=1e-10):
    """Evaluate the transport law for all directions c at once."""
    from .metric import default_grid_n
    mg = cf.grid(default_grid_n(cf, n))
    lf = lambda_form(mg)
    weights = _metric_weights(mg, 0, False)[0]

    def dnorm(g):
        return np.sqrt(float(np.sum((weights * g) ** 2)))

    gradK = np.hypot(mg.K_x, mg.K_y) / np.exp(mg.mu)
    gk_scale = dnorm(gradK)
    src = np.column_stack([(weights * lf.L1).ravel(),
                           (weights * lf.L2).ravel()])
    scale = float(np.linalg.svd(src, compute_uv=False)[0])
    if gk_scale <= degenerate_tol and scale <= degenerate_tol:
        return TransportObstruction(
            singular_values=np.zeros(2), scale=scale, rel_min=0.0,
            rel_max=0.0, best_c=np.array([1.0, 0.0]),
            worst_c=np.array([0.0, 1.0]), verdict="DEGENERATE",
            fourth_order_residuals=(0.0, 0.0))

    # c = (1, 0): Phi = L1, rhs = L2; c = (0, 1): Phi = L2, rhs = -L1
    w01, r1, _ = _fourth_order_solve_w(mg, lf.L2, tol=tol)
    w02, r2, _ = _fourth_order_solve_w(mg, -lf.L1, tol=tol)
    w1, _, _ = _fourth_order_solve_w(mg, -(mg.K_x / mg.lam), tol=tol)
    w2, _, _ = _fourth_order_solve_w(mg, -(mg.K_y / mg.lam), tol=tol)

    B1 = _grad_perp_K(mg, mg.dx(w01), mg.dy(w01)) - lf.L1
    B2 = _grad_perp_K(mg, mg.dx(w02), mg.dy(w02)) - lf.L2
    C1 = _grad_perp_K(mg, mg.dx(w1) + 1.0, mg.dy(w1))
    C2 = _grad_perp_K(mg, mg.dx(w2), mg.dy(w2) + 1.0)

    M = np.column_stack([(weights * C1).ravel(), (weights * C2).ravel()])
    Bw = np.column_stack([(weights * B1).ravel(), (weights * B2).ravel()])
    al = -np.linalg.lstsq(M, Bw, rcond=None)[0]     # columns: alpha per axis
    Um, sm, _ = np.linalg.svd(M, full_matrices=False)
    Q = Um[:, sm > 1e-10 * max(float(sm[0]), 1e-300)]
    Bt = Bw - Q @ (Q.T @ Bw)
    U, s, Vt = np.linalg.svd(Bt, full_matrices=False)
    order = np.argsort(s)
    svals = s[order]
    best_c = Vt[order[0]]
    worst_c = Vt[order[-1]]
    rel_min = float(svals[0] / max(scale, 1e-300))
    rel_max = float(svals[-1] / max(scale, 1e-300))
    verdict = "OBSTRUCTED" if rel_min > threshold else "INCONCLUSIVE"
    return TransportObstruction(
        singular_values=svals, scale=scale, rel_min=rel_min,
        rel_max=rel_max, best_c=best_c, worst_c=worst_c, verdict=verdict,
        fourth_order_residuals=(r1, r2), _mg=mg,
        _pieces=(w01, w02, w1, w2, al[:, 0], al[:, 1]))

def trace_free_hessian(mg, ux, uy):
    """The trace-free Hessian of u from its periodic gradient grids.

    Components: a = (H11 - H22)/2, b = H12 with H_ij the covariant Hessian.
    """
    G = christoffels(mg.jet())
    H11 = mg.dx(ux) - (G[0, 0, 0] * ux + G[1, 0, 0] * uy)
    H12 = mg.dy(ux) - (G[0, 0, 1] * ux + G[1, 0, 1] * uy)
    H22 = mg.dy(uy) - (G[0, 1, 1] * ux + G[1, 1, 1] * uy)
    return TraceFreeField(mg, 2, 0.5 * (H11 - H22), H12)


def third_derivative_residual(sol, c, mg=None):
    """Max-norm mismatch of all third covariant derivatives of u against
    g_jk(-K u_i + (dT)_i) + grad_i T_jk."""
    if mg is None:
        mg = sol.mg
    G = christoffels(mg.jet())
    ux, uy = sol.gradient()
    du = np.stack([ux, uy])

    # covariant Hessian H[i, j]
    H = np.empty((2, 2, mg.n, mg.n))
    d = (mg.dx, mg.dy)
    for i in range(2):
        for j in range(2):
            H[i, j] = d[j](du[i]) - (G[0, i, j] * du[0] + G[1, i, j] * du[1])

    # third covariant derivative D[i, j, k] = nabla_i H_{jk}
    D = np.empty((2, 2, 2, mg.n, mg.n))
    for i in range(2):
        for j in range(2):
            for k in range(2):
                D[i, j, k] = d[i](H[j, k]) \
                    - sum(G[p, i, j] * H[p, k] + G[p, i, k] * H[j, p]
                          for p in range(2))

    T = make_T(c, mg).expand().comps  # T_{jk}: index count of 2s
    Tm = np.empty((2, 2, mg.n, mg.n))
    Tm[0, 0], Tm[0, 1] = T[0], T[1]
    Tm[1, 0], Tm[1, 1] = T[1], T[2]
    dT1, dT2 = delta_T_explicit(c, mg)
    dT = np.stack([dT1, dT2])

    rhs = np.empty_like(D)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                nT = d[i](Tm[j, k]) - sum(G[p, i, j] * Tm[p, k]
                                          + G[p, i, k] * Tm[j, p]
                                          for p in range(2))
                g_jk = mg.lam if j == k else 0.0
                rhs[i, j, k] = g_jk * (-mg.K * du[i] + dT[i]) + nT
    return float(np.max(np.abs(D - rhs)))


# -- curvature isolines ------------------------------------------------------

@dataclass
class IsolineCurve:
    """Polyline on an isoline of K, parameterized with speed |grad K|.

    points are lifted cartesian vertices (closing vertex repeated, shifted
    by the lift displacement, for closed curves); ts are the parameter
    values of the vertices.
    """

    level: float
    ts: np.ndarray
    points: np.ndarray
    closed: bool
    lift_class: tuple            # integer (p, q) for closed curves
    lift_cart: np.ndarray        # p e1 + q e2
    grad_min: float = 0.0        # min metric norm of grad K along the curve

    @property
    def samples(self):
        return np.column_stack([self.ts, self.points])

    @property
    def duration(self):
        return float(self.ts[-1] - self.ts[0])


def curvature_jet(cf, pts):
    """K and its cartesian gradient at arbitrary points."""
    jet = cf.eval_jet(np.asarray(pts, float))
    lam = jet.lam
    lapmu = jet.mu_xx + jet.mu_yy
    K = -lapmu / lam
    Kx = (2.0 * jet.mu_x * lapmu - (jet.mu_xxx + jet.mu_xyy)) / lam
    Ky = (2.0 * jet.mu_y * lapmu - (jet.mu_xxy + jet.mu_yyy)) / lam
    return K, Kx, Ky


def _project_to_level(cf, pts, level, steps=2):
    """Newton steps moving points onto {K = level} along grad K."""
    p = np.asarray(pts, float).copy()
    for _ in range(steps):
        K, Kx, Ky = curvature_jet(cf, p)
        g2 = Kx ** 2 + Ky ** 2
        g2 = np.where(g2 > 0, g2, 1.0)
        f = (K - level) / g2
        p[..., 0] -= f * Kx
        p[..., 1] -= f * Ky
    return p


# cell-case segment table: corner bits (i,j), (i+1,j), (i+1,j+1), (i,j+1);
# edges 0=bottom h(i,j), 1=right v(i+1,j), 2=top h(i,j+1), 3=left v(i,j)
_MS_SEGMENTS = {
    0: [], 15: [],
    1: [(3, 0)], 14: [(3, 0)],
    2: [(0, 1)], 13: [(0, 1)],
    4: [(1, 2)], 11: [(1, 2)],
    8: [(2, 3)], 7: [(2, 3)],
    3: [(3, 1)], 12: [(3, 1)],
    6: [(0, 2)], 9: [(0, 2)],
}


def _cell_segments(case, center_above):
    if case in (5, 10):
        # saddle cell: pair the crossings so the high region contains the
        # center when the center is above the level
        if case == 5:
            return [(3, 0), (1, 2)] if center_above else [(0, 1), (2, 3)]
        return [(0, 1), (2, 3)] if center_above else [(3, 0), (1, 2)]
    return _MS_SEGMENTS[case]


def extract_isolines(cf, level, n=256, tol_crit_factor=1e-6,
                     refine=4, min_vertices=8):
    """All components of the isoline {K = level}, as IsolineCurve objects.

    Marching squares on an n-by-n periodic grid with shared-edge chaining
    and lift bookkeeping, Newton projection of every vertex onto the
    analytic level set, periodic-spline resampling by a factor refine, and
    the parameterization dt = e^{2 mu} ds_euclid / |grad K|_euclid which
    realizes speed |grad K| in the metric.  Samples closer than tol_crit
    to a critical point of K split the component into open pieces.
    """
    mg = cf.grid(n)
    Kg = mg.K
    osc = float(np.max(Kg) - np.min(Kg))
    if osc <= 1e-13 * (1.0 + float(np.max(np.abs(Kg)))):
        return []
    if not (np.min(Kg) < level < np.max(Kg)):
        return []
    gnorm_grid = np.hypot(mg.K_x, mg.K_y) / np.exp(mg.mu)
    tol_crit = tol_crit_factor * float(np.max(gnorm_grid))

    if np.any(Kg == level):
        level = level + 1e-13 * osc
    above = Kg > level

    # wrapped fractional position of the crossing on each crossed grid edge
    crossings = {}

    def ensure_crossing(kind, i, j):
        key = (kind, i % n, j % n)
        if key not in crossings:
            ii, jj = key[1], key[2]
            if kind == "h":
                ka, kb = Kg[ii, jj], Kg[(ii + 1) % n, jj]
                r = (level - ka) / (kb - ka)
                crossings[key] = np.array([(ii + r) / n, jj / n])
            else:
                ka, kb = Kg[ii, jj], Kg[ii, (jj + 1) % n]
                r = (level - ka) / (kb - ka)
                crossings[key] = np.array([ii / n, (jj + r) / n])
        return key

    def cell_edge(local, i, j):
        return {0: ("h", i, j), 1: ("v", i + 1, j),
                2: ("h", i, j + 1), 3: ("v", i, j)}[local]

    # segments pair up crossings inside each cell; every crossed grid edge
    # belongs to exactly one segment of each of its two cells, so the
    # segment graph is a disjoint union of cycles
    a10 = np.roll(above, -1, axis=0)
    a01 = np.roll(above, -1, axis=1)
    a11 = np.roll(a10, -1, axis=1)
    bits_grid = (above.astype(np.int8) | a10.astype(np.int8) << 1
                 | a11.astype(np.int8) << 2 | a01.astype(np.int8) << 3)
    center_grid = 0.25 * (Kg + np.roll(Kg, -1, 0) + np.roll(Kg, -1, 1)
                          + np.roll(np.roll(Kg, -1, 0), -1, 1))
    crossed_cells = np.argwhere((bits_grid > 0) & (bits_grid < 15))

    segments = []
    incident = {}
    for i, j in crossed_cells:
        bits = int(bits_grid[i, j])
        for a, b in _cell_segments(bits, center_grid[i, j] > level):
            ka = ensure_crossing(*cell_edge(a, i, j))
            kb = ensure_crossing(*cell_edge(b, i, j))
            sid = len(segments)
            segments.append((ka, kb))
            incident.setdefault(ka, []).append(sid)
            incident.setdefault(kb, []).append(sid)

    visited = [False] * len(segments)
    curves = []
    for s0 in range(len(segments)):
        if visited[s0]:
            continue
        start_key, cur = segments[s0]
        visited[s0] = True
        path_keys = [start_key, cur]
        sid = s0
        while cur != start_key:
            sid = next(t for t in incident[cur] if t != sid)
            a, b = segments[sid]
            cur = b if a == cur else a
            visited[sid] = True
            path_keys.append(cur)
        if len(path_keys) < min_vertices:
            continue
        # unwrap: consecutive crossings sit in one cell, so the wrapped
        # step is always the short one
        pos = crossings[path_keys[0]].copy()
        frac_path = [pos.copy()]
        for key in path_keys[1:]:
            delta = crossings[key] - (pos - np.floor(pos))
            delta -= np.round(delta)
            pos = pos + delta
            frac_path.append(pos.copy())
        curves.append(np.array(frac_path))
    return _finish_curves(cf, mg, curves, level, tol_crit, refine, osc)


def _finish_curves(cf, mg, frac_curves, level, tol_crit, refine, osc):
    lat = cf.lattice
    out = []
    for frac in frac_curves:
        disp = frac[-1] - frac[0]
        pq = np.round(disp).astype(int)
        closed = bool(np.max(np.abs(disp - pq)) < 1e-9)
        pts = lat.cart_from_frac(frac)
        pts = _project_to_level(cf, pts, level)
        if closed:
            pts = pts[:-1]
        # periodic/clamped spline resampling on chord length
        seg = np.diff(np.vstack([pts, pts[:1] + lat.cart_from_frac(pq)])
                      if closed else pts, axis=0)
        chord = np.concatenate([[0.0], np.cumsum(np.hypot(*seg.T))])
        if closed:
            data = np.vstack([pts, pts[:1] + lat.cart_from_frac(pq)])
            spl = CubicSpline(chord, data, axis=0, bc_type="periodic"
                              if np.allclose(pq, 0) else "not-a-knot")
        else:
            data = pts
            spl = CubicSpline(chord[:len(pts)], data, axis=0)
        total = chord[-1] if closed else chord[len(pts) - 1]
        m = refine * (len(pts) if closed else len(pts) - 1)
        s_new = np.linspace(0.0, total, m + 1)
        p_new = spl(s_new)
        p_new = _project_to_level(cf, p_new, level)
        if closed:
            p_new[-1] = p_new[0] + lat.cart_from_frac(pq)

        # orient so the tangent follows (-K_y, K_x)
        K, Kx, Ky = curvature_jet(cf, p_new)
        tan = p_new[1] - p_new[0]
        if tan[0] * (-Ky[0]) + tan[1] * Kx[0] < 0:
            p_new = p_new[::-1].copy()
            K, Kx, Ky = K[::-1], Kx[::-1], Ky[::-1]
            pq = -pq
        gnorm = np.hypot(Kx, Ky) * np.exp(-cf.eval_jet(p_new).mu)

        # split at near-critical samples
        ok = gnorm >= tol_crit
        pieces = _split_runs(ok, closed)
        for idx, piece_closed in pieces:
            pp = p_new[idx]
            if len(pp) < 4:
                continue
            mu_mid = cf.eval_jet(0.5 * (pp[:-1] + pp[1:])).mu
            Km, Kxm, Kym = curvature_jet(cf, 0.5 * (pp[:-1] + pp[1:]))
            ds = np.hypot(*np.diff(pp, axis=0).T)
            dt = np.exp(2.0 * mu_mid) * ds / np.hypot(Kxm, Kym)
            ts = np.concatenate([[0.0], np.cumsum(dt)])
            out.append(IsolineCurve(
                level=float(level), ts=ts, points=pp,
                closed=piece_closed,
                lift_class=(int(pq[0]), int(pq[1])) if piece_closed
                else (0, 0),
                lift_cart=lat.cart_from_frac(pq) if piece_closed
                else np.zeros(2),
                grad_min=float(np.min(gnorm[idx]))))
    return out


def _split_runs(ok, closed):
    """Index runs of consecutive True; a fully-True closed curve stays one
    closed piece, otherwise runs become open pieces."""
    if np.all(ok):
        return [(np.arange(len(ok)), closed)]
    if closed:
        # drop the duplicated closing vertex, then wrap runs around
        okc = ok[:-1]
        npts = len(okc)
        bad = np.flatnonzero(~okc)
        pieces = []
        bounds = np.concatenate([bad, [bad[0] + npts]])
        for a, b in zip(bounds[:-1], bounds[1:]):
            idx = np.arange(a + 1, b) % npts
            if len(idx) >= 4:
                pieces.append((idx, False))
        return pieces
    bad = set(np.flatnonzero(~ok).tolist())
    pieces = []
    run = []
    for i in range(len(ok)):
        if i in bad:
            if len(run) >= 4:
                pieces.append((np.array(run), False))
            run = []
        else:
            run.append(i)
    if len(run) >= 4:
        pieces.append((np.array(run), False))
    return pieces


@dataclass
class IsolineIntegral:
    """Line integral of the transport source along one isoline."""

    value: float
    expected: float = None       # endpoint difference or class pairing
    mismatch: float = None
    curve: IsolineCurve = None


def isoline_integral(curve, c, cf, u=None):
    """Integral of (c1 L1 + c2 L2) dt along the curve; when a candidate u
    is supplied the telescoped endpoint value (open curves) or the class
    pairing (closed curves) is evaluated alongside."""
    if curve.grad_min <= 0.0:
        raise ValueError("curve touches a critical region of K")
    pts = curve.points
    mid = 0.5 * (pts[:-1] + pts[1:])
    L1, L2 = lambda_at_points(cf, mid)
    c1, c2 = _weight3(c)
    f = c1 * L1 + c2 * L2
    dts = np.diff(curve.ts)
    value = float(np.sum(f * dts))
    if u is None:
        return IsolineIntegral(value=value, curve=curve)
    if curve.closed:
        expected = u.sigma_pairing(curve.lift_cart)
    else:
        ends = u.u_at(np.vstack([pts[-1], pts[0]]))
        expected = float(ends[0] - ends[1])
    return IsolineIntegral(value=value, expected=expected,
                           mismatch=float(value - expected), curve=curve)


def delta_T_circulation(curve, c, cf):
    """Circulation of the 1-form (dT)_1 dx + (dT)_2 dy along the curve.

    For a closed curve bounding a region D (with the standard orientation),
    this equals the area integral of (c1 L1 + c2 L2) dsigma over D.
    """
    pts = curve.points
    mid = 0.5 * (pts[:-1] + pts[1:])
    jet = cf.eval_jet(mid)
    c1, c2 = _weight3(c)
    w = np.exp(2.0 * jet.mu)
    d1 = w * (-c2 * jet.mu_xx + 2.0 * c1 * jet.mu_xy + c2 * jet.mu_yy
              - 4.0 * c2 * jet.mu_x ** 2 + 8.0 * c1 * jet.mu_x * jet.mu_y
              + 4.0 * c2 * jet.mu_y ** 2)
    d2 = w * (c1 * jet.mu_xx + 2.0 * c2 * jet.mu_xy - c1 * jet.mu_yy
              + 4.0 * c1 * jet.mu_x ** 2 + 8.0 * c2 * jet.mu_x * jet.mu_y
              - 4.0 * c1 * jet.mu_y ** 2)
    dxy = np.diff(pts, axis=0)
    return float(np.sum(d1 * dxy[:, 0] + d2 * dxy[:, 1]))


# -- critical points and domain integrals ------------------------------------

@dataclass
class CriticalPoint:
    point: np.ndarray
    value: float
    kind: str                    # "min" / "max" / "saddle"
    hess_eigs: tuple


def _curvature_hessian(cf, pts):
    pts = np.asarray(pts, float)
    mu = cf.derivative(pts)
    lam = np.exp(2.0 * mu)

    def md(ax, ay):
        return cf.derivative(pts, (ax, ay))

    mx, my = md(1, 0), md(0, 1)
    lap = md(2, 0) + md(0, 2)
    lap_x = md(3, 0) + md(1, 2)
    lap_y = md(2, 1) + md(0, 3)
    lap_xx = md(4, 0) + md(2, 2)
    lap_xy = md(3, 1) + md(1, 3)
    lap_yy = md(2, 2) + md(0, 4)
    mxx, mxy, myy = md(2, 0), md(1, 1), md(0, 2)
    # differentiate K_x = (2 mu_x lap - lap_x) / lam once more
    Kxx = ((2.0 * mxx * lap + 2.0 * mx * lap_x - lap_xx) / lam
           - 2.0 * mx * (2.0 * mx * lap - lap_x) / lam)
    Kxy = ((2.0 * mxy * lap + 2.0 * mx * lap_y - lap_xy) / lam
           - 2.0 * my * (2.0 * mx * lap - lap_x) / lam)
    Kyy = ((2.0 * myy * lap + 2.0 * my * lap_y - lap_yy) / lam
           - 2.0 * my * (2.0 * my * lap - lap_y) / lam)
    return Kxx, Kxy, Kyy


def find_critical_points(cf, n=64, tol=1e-12):
    """Nondegenerate critical points of K in one fundamental domain."""
    mg = cf.grid(n)
    gnorm = np.hypot(mg.K_x, mg.K_y)
    scale = float(np.max(gnorm))
    if scale <= 1e-13:
        return []
    # seeds: local minima of |grad K| on the grid
    local_min = np.ones_like(gnorm, dtype=bool)
    for si in (-1, 0, 1):
        for sj in (-1, 0, 1):
            if si == 0 and sj == 0:
                continue
            local_min &= gnorm <= np.roll(np.roll(gnorm, si, 0), sj, 1)
    seeds = mg.points().reshape(-1, 2)[local_min.ravel()]

    found = []
    lat = cf.lattice
    for s in seeds:
        p = s.copy()
        okay = False
        for _ in range(60):
            _, Kx, Ky = curvature_jet(cf, p[None])
            g = np.array([Kx[0], Ky[0]])
            if np.hypot(*g) <= tol * scale:
                okay = True
                break
            Kxx, Kxy, Kyy = _curvature_hessian(cf, p[None])
            Hm = np.array([[Kxx[0], Kxy[0]], [Kxy[0], Kyy[0]]])
            try:
                step = np.linalg.solve(Hm, -g)
            except np.linalg.LinAlgError:
                break
            if np.hypot(*step) > 0.5:
                step *= 0.5 / np.hypot(*step)
            p = p + step
        if not okay:
            continue
        p = lat.wrap(p[None])[0]

        def lattice_dist(q):
            d = lat.frac_from_cart(p - q)
            d = d - np.round(d)
            return float(np.hypot(*lat.cart_from_frac(d)))

        if any(lattice_dist(q.point) < 1e-8 for q in found):
            continue
        Kxx, Kxy, Kyy = _curvature_hessian(cf, p[None])
        Hm = np.array([[Kxx[0], Kxy[0]], [Kxy[0], Kyy[0]]])
        eigs = np.linalg.eigvalsh(Hm)
        if abs(eigs).min() <= 1e-8 * abs(eigs).max():
            continue
        kind = "min" if eigs[0] > 0 else ("max" if eigs[1] < 0 else "saddle")
        Kv, _, _ = curvature_jet(cf, p[None])
        found.append(CriticalPoint(point=p, value=float(Kv[0]), kind=kind,
                                   hess_eigs=(float(eigs[0]), float(eigs[1]))))
    found.sort(key=lambda q: q.value)
    return found


def _point_in_polygon(poly, pt):
    x, y = poly[:, 0], poly[:, 1]
    x1, y1 = np.roll(x, -1), np.roll(y, -1)
    cond = (y > pt[1]) != (y1 > pt[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        xin = x + (pt[1] - y) * (x1 - x) / (y1 - y)
    return bool(np.sum(cond & (pt[0] < xin)) % 2)


@dataclass
class DiskCheck:
    center: np.ndarray
    kind: str
    level: float
    integral: float              # area integral of Phi^c over the disk
    coarea_value: float          # cross-check through per-level integrals
    scale: float                 # Phi magnitude times disk area


@dataclass
class AnnulusCheck:
    levels: tuple
    lift_class: tuple
    integral: float
    coarea_value: float          # cross-check through per-level integrals
    predicted: float             # sigma pairing times the level gap
    scale: float


@dataclass
class DomainReport:
    critical_points: list
    disks: list
    annuli: list
    notes: list = field(default_factory=list)


def _closest_component(curves, ref_pt, lift_class, lat):
    """Closed component of the given class nearest to a reference point."""
    best, bd = None, np.inf
    neg = tuple(-k for k in lift_class)
    for cv in curves:
        if not cv.closed or cv.lift_class not in (lift_class, neg):
            continue
        d = lat.frac_from_cart(cv.points[:-1] - ref_pt)
        d = d - np.round(d)
        dist = float(np.min(np.hypot(*lat.cart_from_frac(d).T)))
        if dist < bd:
            bd, best = dist, cv
    return best, bd


def _enclosing_component(curves, point, lat):
    for cv in curves:
        if not cv.closed or cv.lift_class != (0, 0):
            continue
        # test the point and its nearest lattice translates
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                q = point + lat.cart_from_frac(np.array([di, dj], float))
                if _point_in_polygon(cv.points[:-1], q):
                    return cv, q
    return None, None


def domain_integral_checks(cf, c, sol=None, n=256, n_levels=9):
    """Disk and annulus area integrals of the transport source.

    Disks: around each nondegenerate extremum of K, bounded by a
    contractible isoline; the area integral of Phi^c dsigma must vanish
    when the transport equation is solvable.  Annuli: between isolines of
    an essential class; the integral must equal the cohomology pairing
    times the level gap (the candidate pairing comes from sol.alpha).
    """
    crits = find_critical_points(cf)
    report = DomainReport(critical_points=crits, disks=[], annuli=[])
    if not crits:
        report.notes.append("no nondegenerate critical structure")
        return report
    values = sorted(q.value for q in crits)
    phi_scale = _phi_maxnorm(cf, c, n=min(n, 128))

    saddle_values = [q.value for q in crits if q.kind == "saddle"]
    for q in crits:
        if q.kind == "saddle":
            continue
        # grow the disk toward the nearest saddle on the correct side; other
        # extrema may sit past it without joining this component
        if q.kind == "max":
            bounds = [v for v in saddle_values if v < q.value - 1e-12] \
                or [v for v in values if v < q.value - 1e-12]
            if not bounds:
                continue
            bound = max(bounds)
        else:
            bounds = [v for v in saddle_values if v > q.value + 1e-12] \
                or [v for v in values if v > q.value + 1e-12]
            if not bounds:
                continue
            bound = min(bounds)
        level = q.value + 0.6 * (bound - q.value)
        curves = extract_isolines(cf, level, n=n)
        cv, lifted_center = _enclosing_component(curves, q.point, cf.lattice)
        if cv is None:
            report.notes.append(
                f"no contractible isoline around {q.kind} at K={q.value:.6g}")
            continue
        # require the disk to hold exactly one critical point
        inside = 0
        for other in crits:
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    t = other.point + cf.lattice.cart_from_frac(
                        np.array([di, dj], float))
                    if _point_in_polygon(cv.points[:-1], t):
                        inside += 1
        if inside != 1:
            report.notes.append(
                f"isoline around {q.kind} at K={q.value:.6g} encloses "
                f"{inside} critical points; skipped")
            continue
        area = _polygon_area(cv.points[:-1])
        disk = delta_T_circulation(cv, c, cf)
        if area < 0:
            disk = -disk
            area = -area
        co = _coarea_disk(cf, c, q, level, n)
        report.disks.append(DiskCheck(
            center=q.point, kind=q.kind, level=level,
            integral=disk, coarea_value=co,
            scale=float(phi_scale * area * np.exp(
                2.0 * cf.derivative(q.point[None])[0]))))

    _annulus_checks(cf, c, sol, n, n_levels, values, report)
    return report


def _phi_maxnorm(cf, c, n):
    mg = cf.grid(n)
    lf = lambda_form(mg)
    return float(np.max(np.abs(lf.pair(c))))


def _polygon_area(poly):
    x, y = poly[:, 0], poly[:, 1]
    x1, y1 = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * float(np.sum(x * y1 - x1 * y))


def _coarea_disk(cf, c, crit, level, n, n_nodes=12, cap=0.02):
    """Disk integral via per-level line integrals plus a quadratic cap."""
    from numpy.polynomial.legendre import leggauss
    a = crit.value + cap * (level - crit.value)
    xg, wg = leggauss(n_nodes)
    s = 0.5 * (a + level) + 0.5 * (level - a) * xg
    w = 0.5 * abs(level - a) * wg
    total = 0.0
    for si, wi in zip(s, w):
        cv = None
        for trial_n in (n, 2 * n, 4 * n):
            curves = extract_isolines(cf, si, n=trial_n, min_vertices=6)
            cv, _ = _enclosing_component(curves, crit.point, cf.lattice)
            if cv is not None:
                break
        if cv is None:
            return np.nan
        val = isoline_integral(cv, c, cf).value
        total += wi * val
    # cap: Phi(P) times the dsigma-area of {K within cap gap}, ellipse rule;
    # the coarea factorization dsigma = dt dK carries positive measures, so
    # no orientation sign enters
    L1, L2 = lambda_at_points(cf, crit.point[None])
    c1, c2 = _weight3(c)
    phi0 = float(c1 * L1[0] + c2 * L2[0])
    det = crit.hess_eigs[0] * crit.hess_eigs[1]
    lam0 = np.exp(2.0 * float(cf.derivative(crit.point[None])[0]))
    cap_area = lam0 * 2.0 * np.pi * abs(a - crit.value) / np.sqrt(abs(det))
    return total + phi0 * cap_area


def _annulus_checks(cf, c, sol, n, n_levels, crit_values, report):
    lo, hi = min(crit_values), max(crit_values)
    trial_levels = np.linspace(lo, hi, n_levels + 2)[1:-1]
    regular = [lv for lv in trial_levels
               if min(abs(lv - v) for v in crit_values)
               > 0.02 * (hi - lo)]
    essential = []
    for lv in regular:
        for cv in extract_isolines(cf, lv, n=n):
            if cv.closed and cv.lift_class != (0, 0):
                essential.append((lv, cv))
                break
    if not essential:
        report.notes.append("no essential isolines found for annulus checks")
        return
    lv0, cv0 = essential[0]
    gaps = sorted(v for v in crit_values if v > lv0)
    upper = min(gaps) if gaps else hi
    lv1 = lv0 + 0.5 * (upper - lv0)
    match, _ = _closest_component(extract_isolines(cf, lv1, n=n),
                                  cv0.points[0], cv0.lift_class, cf.lattice)
    if match is None:
        report.notes.append("no matching component for the annulus level")
        return
    # Stokes: area integral over the band = circulation difference
    circ1 = delta_T_circulation(match, c, cf)
    circ0 = delta_T_circulation(cv0, c, cf)
    if match.lift_class != cv0.lift_class:
        circ1 = -circ1
    integral = circ1 - circ0
    coarea = _coarea_annulus(cf, c, cv0, lv0, lv1, n)
    predicted = None
    if sol is not None:
        predicted = sol.sigma_pairing(cv0.lift_cart) * (lv1 - lv0)
    area_scale = abs(lv1 - lv0) * max(
        1e-300, _phi_maxnorm(cf, c, n=min(n, 128)))
    report.annuli.append(AnnulusCheck(
        levels=(float(lv0), float(lv1)),
        lift_class=cv0.lift_class,
        integral=float(integral),
        coarea_value=float(coarea),
        predicted=None if predicted is None else float(predicted),
        scale=float(area_scale)))


def _coarea_annulus(cf, c, ref_curve, lv0, lv1, n, n_nodes=8):
    from numpy.polynomial.legendre import leggauss
    xg, wg = leggauss(n_nodes)
    s = 0.5 * (lv0 + lv1) + 0.5 * (lv1 - lv0) * xg
    w = 0.5 * abs(lv1 - lv0) * wg
    total = 0.0
    for si, wi in zip(s, w):
        cv, _ = _closest_component(extract_isolines(cf, si, n=n),
                                   ref_curve.points[0], ref_curve.lift_class,
                                   cf.lattice)
        if cv is None:
            return np.nan
        total += wi * isoline_integral(cv, c, cf).value
    return total
