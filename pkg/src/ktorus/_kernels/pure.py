"""Pure numpy geodesic kernels; same algorithm as the compiled backend.

The geodesic flow of g = e^{2 mu}(dx^2+dy^2) is integrated in the angular
chart (x, y, th):

    x' = e^{-mu} cos th,  y' = e^{-mu} sin th,
    th' = e^{-mu} (mu_y cos th - mu_x sin th),

with an adaptive Dormand-Prince 5(4) stepper.  mu enters through a packed
coefficient table (kx, ky, cre, cim): mu = sum cre*cos(kx x + ky y) -
cim*sin(kx x + ky y).
"""

import numpy as np

BACKEND_NAME = "pure"

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# b - b*: weights of the embedded error estimate (k7 = derivative at y_new)
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
               -17253 / 339200, 22 / 525, -1 / 40])


def mu_jet1(kx, ky, cre, cim, x, y):
    """(mu, mu_x, mu_y) at a single point."""
    ph = kx * x + ky * y
    cs, sn = np.cos(ph), np.sin(ph)
    mu = float(cre @ cs - cim @ sn)
    mux = float(-(cre * kx) @ sn - (cim * kx) @ cs)
    muy = float(-(cre * ky) @ sn - (cim * ky) @ cs)
    return mu, mux, muy


def _rhs(kx, ky, cre, cim, y):
    mu, mux, muy = mu_jet1(kx, ky, cre, cim, y[0], y[1])
    w = np.exp(-mu)
    ct, st = np.cos(y[2]), np.sin(y[2])
    return np.array([w * ct, w * st, w * (muy * ct - mux * st)])


def _rms(v, sc):
    return float(np.sqrt(np.mean((v / sc) ** 2)))


def _initial_step(f, y0, f0, direction, rtol, atol):
    sc = atol + np.abs(y0) * rtol
    d0 = _rms(y0, sc)
    d1 = _rms(f0, sc)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * direction * f0
    f1 = f(y1)
    d2 = _rms(f1 - f0, sc) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def integrate(kx, ky, cre, cim, y0, t0, ts_out, rtol=1e-11, atol=1e-11):
    """Integrate the flow from (t0, y0), sampling at the times ts_out.

    ts_out must be strictly monotone and lie beyond t0 in the direction of
    travel.  Every output time is hit exactly by clipping the adaptive step.
    Returns (ys, n_accepted, n_rejected) with ys of shape (len(ts_out), 3).
    """
    kx = np.asarray(kx, float)
    ky = np.asarray(ky, float)
    cre = np.asarray(cre, float)
    cim = np.asarray(cim, float)
    y = np.array(y0, dtype=float)
    ts_out = np.asarray(ts_out, dtype=float)
    out = np.empty((len(ts_out), 3))

    def f(yy):
        return _rhs(kx, ky, cre, cim, yy)

    direction = 1.0 if ts_out[-1] >= t0 else -1.0
    t = t0
    k1 = f(y)
    h = _initial_step(f, y, k1, direction, rtol, atol)
    n_acc = n_rej = 0
    idx = 0
    K = np.empty((7, 3))
    while idx < len(ts_out):
        if n_acc + n_rej > 50_000_000:
            raise RuntimeError("step limit exceeded; tolerances too tight?")
        target = ts_out[idx]
        if (t - target) * direction >= 0.0:
            out[idx] = y
            idx += 1
            continue
        h = min(h, abs(target - t))
        h = max(h, 1e-14 * max(1.0, abs(t)))
        K[0] = k1
        for i in range(5):
            yi = y + direction * h * (K[:i + 1].T @ _A[i])
            K[i + 1] = f(yi)
        y_new = y + direction * h * (K[:6].T @ _B)
        K[6] = f(y_new)
        err_vec = direction * h * (K.T @ _E)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms(err_vec, sc)
        if err <= 1.0:
            t = t + direction * h
            y = y_new
            k1 = K[6]
            n_acc += 1
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h *= fac
        else:
            n_rej += 1
            h *= max(0.2, 0.9 * err ** -0.2)
    return out, n_acc, n_rej
