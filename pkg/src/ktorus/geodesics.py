"""Geodesic flow on the conformal torus: orbits, closed geodesics, ray tests.

Unit-speed geodesics are integrated in the angular chart (x, y, th), where
th is the angle of the velocity against the x-axis:

    x' = e^{-mu} cos th,  y' = e^{-mu} sin th,
    th' = e^{-mu}(mu_y cos th - mu_x sin th).

Closed geodesics in a prescribed homotopy class are found by a two-stage
search (periodic polygon energy minimization, then Newton shooting on a
coordinate section).  Ray integrals of the Z-family along closed geodesics
feed the rank-exclusion ratio test: if two closed geodesics give the pair
of integrals

    I_num = oint e^{m mu}(mu_x cos m phi - mu_y sin m phi) dt,
    I_den = oint e^{m mu}(mu_y cos m phi + mu_x sin m phi) dt

with different projective directions [I_num : I_den], no irreducible
rank-(m+1) Killing tensor field exists.

Caveat, established analytically and confirmed numerically by this code:
the integrand pair above is the exact t-derivative of the single-valued
circle-bundle function e^{(m+1)(mu + i phi)}/(m+1), so both integrals
vanish on every closed geodesic of every conformal torus metric.  The
test is therefore sound but never informative: real data always lands in
the all-below-noise branch and the verdict is INCONCLUSIVE.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from ._kernels import integrate as _integrate, pack_coeffs


@dataclass
class GeodesicOrbit:
    """Sampled unit-speed geodesic.  Positions are lifted (not wrapped)."""

    cf: object
    ts: np.ndarray            # (S+1,) uniform sample times
    states: np.ndarray        # (S+1, 3): x, y, theta
    period: float = None      # closed orbits only
    homotopy_class: tuple = None
    closure_residual: float = None
    critical_circle: bool = False
    rtol: float = 1e-11

    @property
    def xs(self):
        return self.states[:, 0]

    @property
    def ys(self):
        return self.states[:, 1]

    @property
    def thetas(self):
        return self.states[:, 2]

    @property
    def n_samples(self):
        return len(self.ts) - 1

    @property
    def samples(self):
        """Rows (t, x, y, theta)."""
        return np.column_stack([self.ts, self.states])

    def is_closed(self):
        return self.period is not None

    def resampled(self, n_samples):
        """Re-integrate from the stored initial state with a new sampling."""
        t_end = self.period if self.is_closed() else self.ts[-1]
        orb = integrate_flow(self.cf, self.states[0], t_end,
                             n_samples=n_samples, rtol=self.rtol)
        orb.period = self.period
        orb.homotopy_class = self.homotopy_class
        orb.closure_residual = self.closure_residual
        orb.critical_circle = self.critical_circle
        return orb

    def unit_speed_residual(self):
        """Max deviation of |gamma'|_g from 1, via differentiated samples.

        Closed orbits are differentiated spectrally in t; open orbits with
        an interior 6th-order finite-difference stencil (coarser bound).
        """
        x, y = self.xs, self.ys
        dt = self.ts[1] - self.ts[0]
        if self.is_closed():
            # remove the linear drift over one period before the FFT
            s = len(self.ts) - 1
            tt = np.arange(s) / s
            px = x[:s] - (x[s] - x[0]) * tt
            py = y[:s] - (y[s] - y[0]) * tt
            k = np.fft.fftfreq(s) * s
            if s % 2 == 0:
                k[s // 2] = 0.0
            w = 2j * np.pi * k / (s * dt)
            vx = np.fft.ifft(w * np.fft.fft(px)).real + (x[s] - x[0]) / (s * dt)
            vy = np.fft.ifft(w * np.fft.fft(py)).real + (y[s] - y[0]) / (s * dt)
            pts = np.stack([x[:s], y[:s]], axis=-1)
        else:
            st = np.array([-3, -2, -1, 1, 2, 3])
            cw = np.array([-1.0, 9.0, -45.0, 45.0, -9.0, 1.0]) / 60.0
            vx = sum(c * x[3 + s: len(x) - 3 + s or None]
                     for c, s in zip(cw, st)) / dt
            vy = sum(c * y[3 + s: len(y) - 3 + s or None]
                     for c, s in zip(cw, st)) / dt
            pts = np.stack([x[3:-3], y[3:-3]], axis=-1)
        mu = self.cf.derivative(pts)
        speed = np.exp(mu) * np.hypot(vx, vy)
        return float(np.max(np.abs(speed - 1.0)))


def integrate_flow(cf, start, t_end, n_samples=2048, rtol=1e-11, atol=None):
    """Integrate the geodesic flow from (x, y, theta) over [0, t_end]."""
    if atol is None:
        atol = rtol
    packed = pack_coeffs(cf)
    ts = np.linspace(0.0, t_end, n_samples + 1)
    ys, _, _ = _integrate(*packed, np.asarray(start, float), 0.0, ts,
                          rtol=rtol, atol=atol)
    return GeodesicOrbit(cf=cf, ts=ts, states=np.asarray(ys), rtol=rtol)


def _flow_endpoint(packed, start, t_end, rtol):
    ys, _, _ = _integrate(*packed, np.asarray(start, float), 0.0,
                          np.array([t_end]), rtol=rtol, atol=rtol)
    return ys[0]


# -- closed geodesics --------------------------------------------------------

def _polygon_energy(cf, pq, n_vertices, start_frac):
    """Discrete energy minimization for a closed polygon in class pq."""
    lat = cf.lattice
    delta = pq[0] * lat.e1 + pq[1] * lat.e2
    p0 = lat.cart_from_frac(np.asarray(start_frac, float))
    k = n_vertices
    v0 = p0[None, :] + np.arange(k)[:, None] / k * delta[None, :]

    def fun(vflat):
        v = vflat.reshape(k, 2)
        vn = np.vstack([v[1:], v[:1] + delta])
        seg = vn - v
        mid = 0.5 * (v + vn)
        jet_mu = cf.derivative(mid)
        lam = np.exp(2.0 * jet_mu)
        s2 = np.sum(seg * seg, axis=1)
        e = float(np.sum(lam * s2))
        gmu = np.stack([cf.derivative(mid, (1, 0)),
                        cf.derivative(mid, (0, 1))], axis=1)
        grad = np.zeros_like(v)
        contrib_mu = lam[:, None] * gmu * s2[:, None]
        contrib_seg = 2.0 * lam[:, None] * seg
        grad += contrib_mu - contrib_seg
        np.add.at(grad, (np.arange(1, k + 1) % k), contrib_mu + contrib_seg)
        return e, grad.ravel()

    res = minimize(fun, v0.ravel(), jac=True, method="L-BFGS-B",
                   options={"maxiter": 2000, "ftol": 1e-15, "gtol": 1e-10})
    v = res.x.reshape(k, 2)
    vn = np.vstack([v[1:], v[:1] + delta])
    seg = vn - v
    mid = 0.5 * (v + vn)
    length = float(np.sum(np.exp(cf.derivative(mid)) * np.hypot(*seg.T)))
    return v, seg, length, res.fun


def _closure_residual(r, length):
    w = np.array([1.0, 1.0, length / (2.0 * np.pi)])
    return float(np.linalg.norm(r * w))


def find_closed_geodesic(cf, pq, n_samples=2048, tol_close=1e-10,
                         rtol=1e-12, n_vertices=64,
                         start_fracs=((0.0, 0.0), (0.33, 0.62), (0.71, 0.24))):
    """Closed geodesic in homotopy class pq = (p, q), as a GeodesicOrbit.

    Stage 1 minimizes the discrete energy of a closed polygon; stage 2
    refines by damped Newton shooting on a coordinate section, with the
    closure residual measured in the weighted norm (1, 1, L/(2 pi)).
    """
    p, q = int(pq[0]), int(pq[1])
    if p == 0 and q == 0:
        raise ValueError("homotopy class must be nontrivial")
    lat = cf.lattice
    delta = p * lat.e1 + q * lat.e2
    packed = pack_coeffs(cf)

    best = None
    for frac in start_fracs:
        v, seg, length, energy = _polygon_energy(cf, (p, q), n_vertices, frac)
        if best is None or energy < best[3]:
            best = (v, seg, length, energy)
    v, seg, length, _ = best
    x0, y0 = v[0]
    th0 = float(np.arctan2(seg[0, 1], seg[0, 0]))
    T0 = length

    # section: hold fixed the coordinate along which the class moves most
    fix_x = abs(delta[0]) >= abs(delta[1])

    def residual(z):
        u, th, T = z
        start = (x0, u, th) if fix_x else (u, y0, th)
        end = _flow_endpoint(packed, start, T, rtol)
        r = np.array([end[0] - start[0] - delta[0],
                      end[1] - start[1] - delta[1],
                      _wrap_pi(end[2] - start[2])])
        return r

    z = np.array([y0 if fix_x else x0, th0, T0])
    r = residual(z)
    best_norm = _closure_residual(r, length)
    for _ in range(30):
        if best_norm <= tol_close:
            break
        J = np.empty((3, 3))
        for col in range(3):
            h = 1e-7 * max(1.0, abs(z[col]))
            zp = z.copy()
            zp[col] += h
            J[:, col] = (residual(zp) - r) / h
        step, *_ = np.linalg.lstsq(J, -r, rcond=None)
        for damp in (1.0, 0.5, 0.25, 0.125, 0.0625):
            zn = z + damp * step
            if zn[2] <= 0.1 * T0:
                continue
            rn = residual(zn)
            nn = _closure_residual(rn, length)
            if nn < best_norm:
                z, r, best_norm = zn, rn, nn
                break
        else:
            break
    if best_norm > tol_close:
        raise RuntimeError(
            f"closed geodesic in class {(p, q)} did not converge "
            f"(residual {best_norm:.3e})")

    u, th, T = z
    start = (x0, u, th) if fix_x else (u, y0, th)
    orbit = integrate_flow(cf, start, T, n_samples=n_samples, rtol=rtol)
    orbit.period = float(T)
    orbit.homotopy_class = (p, q)
    orbit.closure_residual = best_norm
    return orbit


def _wrap_pi(a):
    return (a + np.pi) % (2.0 * np.pi) - np.pi


def invariant_direction(cf, tol=1e-12):
    """Unit vector u with mu constant along u, or None.

    Exists iff all wave vectors lie on one line; detected through the SVD
    of the coefficient-weighted frequency matrix.
    """
    if len(cf._c) == 0:
        return np.array([1.0, 0.0])  # flat: any direction works
    M = cf._kappa * np.abs(cf._c)[:, None]
    _, s, vt = np.linalg.svd(M)
    if s[-1] <= tol * max(s[0], 1.0):
        u = vt[-1]
        return u / np.linalg.norm(u)
    return None


def _direction_class(lat, u, max_index=12):
    """Smallest (p, q) with p e1 + q e2 parallel to u, or None."""
    best = None
    for p in range(-max_index, max_index + 1):
        for q in range(-max_index, max_index + 1):
            if p == 0 and q == 0:
                continue
            v = p * lat.e1 + q * lat.e2
            cross = abs(u[0] * v[1] - u[1] * v[0])
            if cross < 1e-9 * np.linalg.norm(v) and np.dot(u, v) > 0:
                if best is None or np.linalg.norm(v) < best[1]:
                    best = ((p, q), np.linalg.norm(v))
    return best[0] if best else None


def critical_circle_orbits(cf, n_samples=2048):
    """Closed geodesics that are straight lines along an invariant direction.

    If mu depends only on the coordinate w across a direction u, every line
    along u through a critical point of the profile mu(w) is a closed
    geodesic (when u closes up on the torus).  Returns a list of orbits.
    """
    u = invariant_direction(cf)
    if u is None:
        return []
    pq = _direction_class(cf.lattice, u)
    if pq is None:
        return []
    lat = cf.lattice
    delta = pq[0] * lat.e1 + pq[1] * lat.e2
    span = np.linalg.norm(delta)
    uperp = np.array([-u[1], u[0]])
    w_period = lat.area / span
    ws = np.linspace(0.0, w_period, 512, endpoint=False)
    pts = ws[:, None] * uperp[None, :]
    prof = (cf.derivative(pts, (1, 0)) * uperp[0]
            + cf.derivative(pts, (0, 1)) * uperp[1])  # d mu / d w
    orbits = []
    from scipy.optimize import brentq
    roots = []
    if np.max(np.abs(prof)) < 1e-14:
        roots = [0.0]  # profile flat: any line along u is a geodesic
    else:
        def h(w):
            pt = w * uperp
            return (cf.derivative(pt[None], (1, 0))[0] * uperp[0]
                    + cf.derivative(pt[None], (0, 1))[0] * uperp[1])
        for i in range(len(ws)):
            a, b = ws[i], ws[(i + 1) % len(ws)] + (w_period if i + 1 == len(ws) else 0)
            if prof[i] == 0.0:
                roots.append(a)
            elif prof[i] * prof[(i + 1) % len(ws)] < 0:
                roots.append(brentq(h, a, b, xtol=1e-14))
    for w in roots:
        p0 = w * uperp
        mu0 = float(cf.derivative(p0[None])[0])
        period = float(np.exp(mu0) * span)
        th = float(np.arctan2(u[1], u[0]))
        orbit = integrate_flow(cf, (p0[0], p0[1], th), period,
                               n_samples=n_samples, rtol=1e-12)
        orbit.period = period
        orbit.homotopy_class = pq
        end = orbit.states[-1]
        r = np.array([end[0] - p0[0] - delta[0], end[1] - p0[1] - delta[1],
                      _wrap_pi(end[2] - th)])
        orbit.closure_residual = _closure_residual(r, period)
        orbit.critical_circle = True
        orbits.append(orbit)
    return orbits


# -- ray integrals of the Z-family ------------------------------------------

@dataclass
class RayIntegralPair:
    """The two basis ray integrals (and their quadrature error) on an orbit.

    I_num / I_den is the projective ratio compared across orbits; the pair
    corresponds to the constant pseudovectors c = (1, 0) and c = (0, 1).
    """

    m: int
    I_num: float
    I_den: float
    richardson_error: np.ndarray
    homotopy_class: tuple = None
    period: float = None

    @property
    def values(self):
        return np.array([self.I_num, self.I_den])

    def ratio_direction(self):
        """Unit vector along (I_num, I_den); None when both vanish."""
        nrm = float(np.hypot(self.I_num, self.I_den))
        if nrm == 0.0:
            return None
        return self.values / nrm


def _ray_integrand(cf, states, m):
    pts = states[:, :2]
    th = states[:, 2]
    jet = cf.eval_jet(pts)
    w = np.exp(m * jet.mu)
    cm, sm = np.cos(m * th), np.sin(m * th)
    v1 = w * (jet.mu_x * cm - jet.mu_y * sm)
    v2 = w * (jet.mu_y * cm + jet.mu_x * sm)
    return v1, v2


def _closed_quadrature(orbit, m):
    if not orbit.is_closed():
        raise ValueError("ray integrals need a closed orbit")
    s = orbit.n_samples
    if s % 2:
        raise ValueError("need an even sample count")
    dt = orbit.ts[1] - orbit.ts[0]
    v1, v2 = _ray_integrand(orbit.cf, orbit.states[:s], m)
    vals = np.array([np.sum(v1) * dt, np.sum(v2) * dt])
    half = np.array([np.sum(v1[::2]) * 2 * dt, np.sum(v2[::2]) * 2 * dt])
    scale = orbit.period * max(np.max(np.abs(v1)), np.max(np.abs(v2)), 1e-300)
    floor = max(10.0 * orbit.rtol, 1e-14) * scale
    err = np.abs(vals - half) + floor
    return vals, err


def ray_integral_Z(orbit, m, c):
    """Closed-orbit integral oint e^{m mu}[(c1 mu_x + c2 mu_y) cos(m phi)
    + (c2 mu_x - c1 mu_y) sin(m phi)] dt for one pseudovector c.

    Uses the uniform-in-t rectangle rule, spectrally accurate for closed
    orbits.  c may be a PseudoVector or any length-2 sequence.
    """
    comp = np.asarray(getattr(c, "components", c), float)
    vals, _ = _closed_quadrature(orbit, m)
    return float(comp[0] * vals[0] + comp[1] * vals[1])


def ray_integral_pair(orbit, m):
    """Both basis ray integrals on one orbit, with Richardson error bars."""
    vals, err = _closed_quadrature(orbit, m)
    return RayIntegralPair(m=m, I_num=float(vals[0]), I_den=float(vals[1]),
                           richardson_error=err,
                           homotopy_class=orbit.homotopy_class,
                           period=orbit.period)


DEFAULT_CLASSES = ((1, 0), (0, 1), (1, 1), (1, -1))


def default_orbit_menu(cf, n_samples=4096, include_critical=True,
                       classes=DEFAULT_CLASSES):
    """Closed geodesics in the standard homotopy classes, plus any straight
    critical circles the metric admits."""
    orbits = [find_closed_geodesic(cf, pq, n_samples=n_samples)
              for pq in classes]
    if include_critical:
        orbits.extend(critical_circle_orbits(cf, n_samples=n_samples))
    return orbits


@dataclass
class RatioTestResult:
    """Outcome of the closed-geodesic ratio test at one tensor rank."""

    m: int                       # Z-family index; excludes rank m+1 fields
    pairs: list
    separations: np.ndarray      # pairwise projective separations
    margins: np.ndarray          # separation / (10 * combined rel. error)
    n_usable: int                # pairs above the noise cut
    verdict: str                 # OBSTRUCTED / INCONCLUSIVE

    @property
    def excluded_rank(self):
        return self.m + 1


def ratio_test(orbits, m, margin_factor=10.0):
    """Compare projective ray-integral directions across closed geodesics.

    OBSTRUCTED means two orbits give directions [I_num : I_den] separated
    by more than margin_factor times their combined relative quadrature
    error, ruling out an irreducible rank-(m+1) Killing tensor field.
    Pairs with both entries below their own error bars are excluded as
    uninformative; if fewer than two informative pairs remain, or all
    informative pairs are proportional, the verdict is INCONCLUSIVE.
    """
    if len(orbits) < 2:
        raise ValueError("ratio test needs at least 2 closed orbits")
    pairs = [ray_integral_pair(o, m) for o in orbits]

    usable = []
    for p in pairs:
        nrm = float(np.hypot(p.I_num, p.I_den))
        tot_err = float(np.hypot(*p.richardson_error))
        if nrm > margin_factor * tot_err:
            usable.append(p)
    k = len(usable)
    seps = np.zeros((k, k))
    margins = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            vi, vj = usable[i].values, usable[j].values
            ni, nj = np.hypot(*vi), np.hypot(*vj)
            sep = abs(vi[0] * vj[1] - vi[1] * vj[0]) / (ni * nj)
            ei = float(np.hypot(*usable[i].richardson_error)) / ni
            ej = float(np.hypot(*usable[j].richardson_error)) / nj
            seps[i, j] = seps[j, i] = sep
            margins[i, j] = margins[j, i] = sep / (margin_factor * (ei + ej)
                                                   + 1e-300)
    verdict = "OBSTRUCTED" if k >= 2 and np.any(margins > 1.0) \
        else "INCONCLUSIVE"
    return RatioTestResult(m=m, pairs=pairs, separations=seps,
                           margins=margins, n_usable=k, verdict=verdict)


# -- output ------------------------------------------------------------------

def orbit_to_csv(orbit, path):
    """Write orbit samples as CSV rows (t, x, y, theta), 17 digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "y", "theta"])
        for t, (x, y, th) in zip(orbit.ts, orbit.states):
            w.writerow([f"{t:.17g}", f"{x:.17g}", f"{y:.17g}", f"{th:.17g}"])


def second_order_rhs(cf):
    """RHS of the geodesic equation in the (x, y, vx, vy) chart.

    Independent of the angular-chart kernels; used for cross-validation.
    """
    def rhs(_t, s):
        x, y, vx, vy = s
        pt = np.array([[x, y]])
        mx = cf.derivative(pt, (1, 0))[0]
        my = cf.derivative(pt, (0, 1))[0]
        ax = -(mx * vx * vx + 2 * my * vx * vy - mx * vy * vy)
        ay = -(-my * vx * vx + 2 * mx * vx * vy + my * vy * vy)
        return [vx, vy, ax, ay]
    return rhs
