import csv

import numpy as np
import pytest

from ktorus import ConformalFactor
from ktorus.geodesics import (critical_circle_orbits, default_orbit_menu,
                              find_closed_geodesic, integrate_flow,
                              invariant_direction, orbit_to_csv,
                              ratio_test, ray_integral_Z, ray_integral_pair)


def test_unit_speed_and_flat_lines(cf_flat):
    orbit = integrate_flow(cf_flat, (0.1, 0.2, 0.7), 5.0)
    assert orbit.unit_speed_residual() < 1e-10
    # flat geodesics are straight lines
    want_x = 0.1 + np.cos(0.7) * orbit.ts
    want_y = 0.2 + np.sin(0.7) * orbit.ts
    assert np.max(np.abs(orbit.xs - want_x)) < 1e-9
    assert np.max(np.abs(orbit.ys - want_y)) < 1e-9


def test_clairaut_drift_short(cf_rotation):
    rng = np.random.default_rng(40)
    for _ in range(3):
        start = (rng.random(), rng.random(), rng.random() * 2 * np.pi)
        orbit = integrate_flow(cf_rotation, start, 10.0)
        mu = cf_rotation.derivative(np.stack([orbit.xs, orbit.ys], axis=-1))
        clairaut = np.exp(mu) * np.cos(orbit.thetas)
        assert np.max(np.abs(clairaut - clairaut[0])) < 1e-8


def test_closed_geodesic_classes(cf_generic):
    for pq in ((1, 0), (0, 1)):
        orbit = find_closed_geodesic(cf_generic, pq)
        assert orbit.closure_residual < 1e-9
        # the lift must displace by p e1 + q e2 over one period
        dx = orbit.xs[-1] - orbit.xs[0]
        dy = orbit.ys[-1] - orbit.ys[0]
        assert abs(dx - pq[0]) < 1e-8
        assert abs(dy - pq[1]) < 1e-8
        assert orbit.unit_speed_residual() < 1e-9


def test_flat_closed_geodesic_period(cf_flat):
    orbit = find_closed_geodesic(cf_flat, (1, 1))
    assert abs(orbit.period - np.sqrt(2.0)) < 1e-10


def test_invariant_direction_detection(cf_rotation, cf_generic):
    v = invariant_direction(cf_rotation)
    assert v is not None
    # mu = mu(y): the invariant direction is the x axis
    assert abs(abs(v[0]) - 1.0) < 1e-10
    assert abs(v[1]) < 1e-10
    assert invariant_direction(cf_generic) is None


def test_critical_circles_on_rotation(cf_rotation):
    orbits = critical_circle_orbits(cf_rotation)
    assert orbits
    for orbit in orbits:
        # straight horizontal lines at critical heights of mu
        assert np.max(np.abs(orbit.ys - orbit.ys[0])) < 1e-9
        dmu = cf_rotation.derivative(
            np.array([[0.0, orbit.ys[0]]]), (0, 1))
        assert abs(dmu[0]) < 1e-9


def test_ray_integrals_vanish_on_closed_orbits(cf_generic):
    # structural identity: the loop integrals are exact derivatives, so
    # every closed geodesic integrates Z-fields to quadrature noise
    orbit = find_closed_geodesic(cf_generic, (1, 0))
    for m in (0, 1, 2, 3):
        pair = ray_integral_pair(orbit, m)
        noise = 10.0 * np.max(pair.richardson_error) + 1e-9
        assert abs(pair.I_num) < noise
        assert abs(pair.I_den) < noise
    val = ray_integral_Z(orbit, 2, (0.3, -0.9))
    assert abs(val) < 1e-8


def test_ratio_test_is_inconclusive(cf_generic):
    orbits = [find_closed_geodesic(cf_generic, pq)
              for pq in ((1, 0), (0, 1))]
    res = ratio_test(orbits, 2)
    assert res.verdict == "INCONCLUSIVE"
    assert res.n_usable == 0
    assert res.excluded_rank == 3


def test_default_orbit_menu_includes_critical(cf_rotation):
    orbits = default_orbit_menu(cf_rotation, classes=((1, 0),))
    assert len(orbits) >= 2
    assert any(o.critical_circle for o in orbits)


def test_orbit_csv_roundtrip(tmp_path, cf_generic):
    orbit = find_closed_geodesic(cf_generic, (1, 0))
    path = tmp_path / "orbit.csv"
    orbit_to_csv(orbit, path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x", "y", "theta"]
    assert len(rows) == orbit.ts.size + 1
    t1 = float(rows[1][0])
    assert t1 == orbit.ts[0]
