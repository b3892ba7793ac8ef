"""Per-rank obstruction orchestration and classical structure detection.

Aggregates the independent necessary-condition tests (classical
separability for ranks 1 and 2, potentiality of the weighted gradient
fields, ray-integral proportionality over closed geodesics, and the
rank-3 curvature transport battery) into a single report with one verdict
per rank.  Statuses follow a fixed vocabulary: PASS (condition satisfied
within precision), VIOLATED (condition failed, stable under resolution
doubling and clear of the internal error estimate), DEGENERATE (the
condition is vacuous on this metric) and INCONCLUSIVE (no usable signal).
All conclusions are evidence from finite-precision computation, never
proofs.
"""

import json
from dataclasses import dataclass, field, asdict, is_dataclass

import numpy as np

from .metric import transformed
from .geodesics import default_orbit_menu, ratio_test
from .solver import potentiality_test
from .rank3 import (delta_T_circulation, domain_integral_checks,
                    mean_value_check, lambda_form, transport_obstruction)

SCHEMA_VERSION = 1

STATUSES = ("PASS", "VIOLATED", "DEGENERATE", "INCONCLUSIVE")


@dataclass
class TestRow:
    name: str
    status: str
    residuals: dict = field(default_factory=dict)
    resolution_stability: bool = None
    notes: str = ""

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")


@dataclass
class RankEntry:
    rank: int
    tests: list
    verdict: str


@dataclass
class ObstructionReport:
    metric_id: str
    per_rank: dict               # rank -> RankEntry
    classical: dict
    summary: str
    schema_version: int = SCHEMA_VERSION


# -- classical structure detection -------------------------------------------

def _support_modes(cf):
    return [k for k in cf.coeffs if k != (0, 0)
            and abs(cf.coeffs[k]) > 1e-300]


def _collinear(modes):
    """Exact integer collinearity of a mode set."""
    base = modes[0]
    return all(k[0] * base[1] - k[1] * base[0] == 0 for k in modes)


def _invariant_rotation(cf, kappa):
    """Unit a such that z = a z' makes mu depend on y' only, given that all
    wave vectors are parallel to kappa."""
    kc = complex(kappa[0], kappa[1])
    # z = a z' maps the wave vector to conj(a) kappa; this choice sends it
    # to the positive imaginary axis
    return -1j * kc / abs(kc)


def _directional_residual(cf, n):
    from .solver import _direction_gram_residual
    mg = cf.grid(n)
    rel, c, _ = _direction_gram_residual(mg)
    return rel, c


def _lam_support(cf, n, rel_tol=1e-12):
    """Fourier support of lam = e^{2 mu} above a relative threshold."""
    mg = cf.grid(n)
    C = np.fft.fft2(mg.lam) / n ** 2
    mag = np.abs(C)
    top = float(mag.max())
    k = (np.fft.fftfreq(n) * n).astype(int)
    modes = []
    for i in range(n):
        for j in range(n):
            if (k[i], k[j]) == (0, 0):
                continue
            if mag[i, j] > rel_tol * top:
                kap = cf.lattice.dual_vector(k[i], k[j])
                modes.append(((k[i], k[j]), kap, mag[i, j]))
    return modes


def _separability_residual(cf, n):
    """Best relative off-axes Fourier mass of lam over all rotations.

    Returns (residual, rotation a, axis masses); the candidate axes come
    from the support directions themselves, which is exhaustive: if the
    support fits on two perpendicular lines, those lines contain support
    vectors.
    """
    modes = _lam_support(cf, n)
    if not modes:
        return 0.0, complex(1.0), (0.0, 0.0)
    total = np.sqrt(sum(m[2] ** 2 for m in modes))
    cands = []
    for _, kap, _ in modes:
        d = kap / np.hypot(*kap)
        ang = np.arctan2(d[1], d[0]) % (0.5 * np.pi)
        if all(abs(ang - a) > 1e-12 for a in cands):
            cands.append(ang)
    best = (np.inf, None, None)
    for ang in cands:
        d = np.array([np.cos(ang), np.sin(ang)])
        dp = np.array([-d[1], d[0]])
        off2 = 0.0
        m_ax = [0.0, 0.0]
        for _, kap, mag in modes:
            nk = np.hypot(*kap)
            on1 = abs(kap @ dp) <= 1e-9 * nk     # parallel to d
            on2 = abs(kap @ d) <= 1e-9 * nk      # parallel to d-perp
            if on1:
                m_ax[0] += mag ** 2
            elif on2:
                m_ax[1] += mag ** 2
            else:
                off2 += mag ** 2
        rel = np.sqrt(off2) / total
        if rel < best[0]:
            best = (rel, np.exp(1j * ang),
                    (float(np.sqrt(m_ax[0])), float(np.sqrt(m_ax[1]))))
    return float(best[0]), best[1], best[2]


def classify_classical(cf, n=None):
    """Detect translation-invariant and separable normal forms.

    Rank 1: a Killing vector exists exactly when some rotation makes mu
    independent of x, i.e. all Fourier modes of mu are collinear.  Rank 2:
    a Killing tensor beyond multiples of the metric and products of rank-1
    fields exists exactly when some rotation separates lam = e^{2 mu} into
    a(x) + b(y); detected through the Fourier support of lam.
    """
    from .metric import default_grid_n
    n = default_grid_n(cf, n)
    modes = _support_modes(cf)
    out = {"kind": "generic", "m1": None, "m2": None}

    if not modes:
        out["kind"] = "flat"
        out["m1"] = TestRow("classical_invariant_direction", "DEGENERATE",
                            {"gradient_scale": 0.0},
                            notes="constant conformal factor; every "
                                  "direction is invariant")
        out["m2"] = TestRow("classical_separability", "DEGENERATE",
                            {"off_axes_mass": 0.0},
                            notes="constant conformal factor; trivially "
                                  "separable")
        return out

    # rank 1: exact integer collinearity plus a numeric residual
    r1a, _ = _directional_residual(cf, n)
    r1b, _ = _directional_residual(cf, 2 * n)
    coll = _collinear(modes)
    if coll:
        kap = cf.lattice.dual_vector(*modes[0])
        a = _invariant_rotation(cf, kap)
        cfp = transformed(cf, a)
        mgp = cfp.grid(min(n, 128))
        resid = float(np.max(np.abs(mgp.mu_x))
                      / max(np.max(np.hypot(mgp.mu_x, mgp.mu_y)), 1e-300))
        out["kind"] = "rotation"
        out["m1"] = TestRow(
            "classical_invariant_direction", "PASS",
            {"directional_residual": r1b, "aligned_mu_x": resid,
             "rotation_re": float(a.real), "rotation_im": float(a.imag)},
            resolution_stability=True,
            notes="all conformal-factor modes are collinear; the reported "
                  "rotation sends the invariant direction to the x axis")
    else:
        stable = max(r1a, r1b) <= 2.0 * max(min(r1a, r1b), 1e-12)
        out["m1"] = TestRow(
            "classical_invariant_direction", "VIOLATED",
            {"directional_residual_coarse": r1a,
             "directional_residual_fine": r1b},
            resolution_stability=bool(stable),
            notes="no direction annihilates the conformal factor gradient")

    # rank 2: separability of lam under some rotation
    r2a, rot_a, axes_a = _separability_residual(cf, n)
    r2b, rot_b, axes_b = _separability_residual(cf, 2 * n)
    sep = r2b <= 1e-9
    if sep:
        both_axes = min(axes_b) > 1e-9 * max(max(axes_b), 1e-300)
        if both_axes:
            status = "PASS"
            notes = ("separable with mass on both axes; the separation "
                     "constant yields a rank-2 field independent of the "
                     "metric")
            if out["kind"] != "rotation":
                out["kind"] = "liouville"
        else:
            status = "INCONCLUSIVE"
            notes = ("separable with one active axis; rank-2 fields exist "
                     "but reduce to products of the rank-1 field")
        out["m2"] = TestRow(
            "classical_separability", status,
            {"off_axes_mass": r2b, "axis_mass_1": axes_b[0],
             "axis_mass_2": axes_b[1],
             "rotation_re": float(rot_b.real),
             "rotation_im": float(rot_b.imag)},
            resolution_stability=True, notes=notes)
    else:
        stable = max(r2a, r2b) <= 2.0 * max(min(r2a, r2b), 1e-12)
        out["m2"] = TestRow(
            "classical_separability", "VIOLATED",
            {"off_axes_mass_coarse": r2a, "off_axes_mass_fine": r2b},
            resolution_stability=bool(stable),
            notes="no rotation separates e^{2 mu} into a(x) + b(y)")
    return out


# -- individual pipeline tests -----------------------------------------------

def _potentiality_row(cf, m):
    try:
        res = potentiality_test(cf, m)
    except Exception as exc:  # recorded, not fatal
        return TestRow(f"potentiality_rank{m}", "INCONCLUSIVE",
                       notes=f"error: {exc}")
    status = {"POTENTIAL": "PASS", "OBSTRUCTED": "VIOLATED",
              "DEGENERATE": "DEGENERATE", "UNSTABLE": "INCONCLUSIVE"}
    return TestRow(
        f"potentiality_rank{m}", status[res.verdict],
        {"residual_coarse": float(res.residuals[0]),
         "residual_fine": float(res.residuals[1]),
         "best_c1": float(res.best_c.c1), "best_c2": float(res.best_c.c2)},
        resolution_stability=bool(res.stable),
        notes=f"resolutions {res.resolutions[0]} and {res.resolutions[1]}")


def _ratio_row(orbits, m):
    if orbits is None or len(orbits) < 2:
        return TestRow(f"ray_ratio_rank{m}", "INCONCLUSIVE",
                       notes="orbit menu unavailable")
    try:
        res = ratio_test(orbits, m - 1)
    except Exception as exc:
        return TestRow(f"ray_ratio_rank{m}", "INCONCLUSIVE",
                       notes=f"error: {exc}")
    margins = res.margins if np.size(res.margins) else np.zeros(1)
    status = "VIOLATED" if res.verdict == "OBSTRUCTED" else "INCONCLUSIVE"
    note = (f"{res.n_usable} of {len(res.pairs)} orbit integrals above the "
            "quadrature noise floor")
    return TestRow(
        f"ray_ratio_rank{m}", status,
        {"max_margin": float(np.max(margins)),
         "n_usable": float(res.n_usable)},
        resolution_stability=None if status == "INCONCLUSIVE" else True,
        notes=note)


def _transport_rows(cf, n, threshold=1e-6):
    rows = []
    try:
        ob = transport_obstruction(cf, n=n, threshold=threshold)
    except Exception as exc:
        return [TestRow("transport_solvability", "INCONCLUSIVE",
                        notes=f"error: {exc}")], None
    noise = 10.0 * max(max(ob.fourth_order_residuals), 1e-12)
    if ob.verdict == "DEGENERATE":
        rows.append(TestRow("transport_solvability", "DEGENERATE",
                            {"rel_min": 0.0},
                            notes="flat curvature; transport is vacuous"))
        return rows, ob
    if ob.verdict == "OBSTRUCTED" and ob.rel_min > noise:
        ob2 = transport_obstruction(cf, n=2 * n, threshold=threshold)
        noise2 = 10.0 * max(max(ob2.fourth_order_residuals), 1e-12)
        pair = (ob.rel_min, ob2.rel_min)
        stable = (ob2.verdict == "OBSTRUCTED"
                  and max(pair) <= 2.0 * min(pair)
                  and ob2.rel_min > noise2)
        rows.append(TestRow(
            "transport_solvability",
            "VIOLATED" if stable else "INCONCLUSIVE",
            {"rel_min_coarse": float(ob.rel_min),
             "rel_min_fine": float(ob2.rel_min),
             "rel_max_fine": float(ob2.rel_max),
             "best_c1": float(ob2.best_c[0]),
             "best_c2": float(ob2.best_c[1])},
            resolution_stability=bool(stable),
            notes="minimum transport residual over all directions c"))
        return rows, ob2
    rows.append(TestRow(
        "transport_solvability", "INCONCLUSIVE",
        {"rel_min": float(ob.rel_min), "rel_max": float(ob.rel_max)},
        notes="some direction admits an approximate solution; no "
              "exclusion from the transport law"))
    return rows, ob


def _mean_value_row(cf, n):
    try:
        m1, m2 = mean_value_check(cf, n)
        mg = cf.grid(max(64, 4 * cf.max_degree))
        lf = lambda_form(mg)
        scale = float(max(np.max(np.abs(lf.L1)), np.max(np.abs(lf.L2))))
    except Exception as exc:
        return TestRow("source_mean_values", "INCONCLUSIVE",
                       notes=f"error: {exc}")
    if scale <= 1e-14:
        return TestRow("source_mean_values", "DEGENERATE",
                       {"scale": scale}, notes="source vanishes identically")
    tol = 1e-9 * mg.area * scale
    ok = max(abs(m1), abs(m2)) <= tol
    return TestRow(
        "source_mean_values", "PASS" if ok else "INCONCLUSIVE",
        {"mean_1": float(m1), "mean_2": float(m2), "tolerance": float(tol)},
        resolution_stability=True if ok else None,
        notes="both source components integrate to zero against the "
              "metric area form (holds for every metric)")


def _domain_rows(cf, n_iso=192):
    """Disk integrals for both basis directions; the values are linear in
    c, so existence of a direction killing every disk is a smallest
    singular value criterion."""
    try:
        rep1 = domain_integral_checks(cf, (1.0, 0.0), n=n_iso)
    except Exception as exc:
        return [TestRow("isoline_disk_integrals", "INCONCLUSIVE",
                        notes=f"error: {exc}")], None
    if not rep1.disks:
        note = "; ".join(rep1.notes) or "no usable disk domains"
        return [TestRow("isoline_disk_integrals", "INCONCLUSIVE",
                        notes=note)], rep1
    rows = []
    pairs = []
    errs = []
    for d1 in rep1.disks:
        cv_err = abs(d1.integral - d1.coarea_value) \
            if np.isfinite(d1.coarea_value) else 0.1 * abs(d1.integral)
        errs.append(cv_err + 1e-9 * d1.scale)
        pairs.append(d1)
    rep2 = domain_integral_checks(cf, (0.0, 1.0), n=n_iso)
    D = np.zeros((len(pairs), 2))
    for i, d1 in enumerate(pairs):
        D[i, 0] = d1.integral
        match = min(rep2.disks,
                    key=lambda d2: np.hypot(*(d2.center - d1.center)),
                    default=None)
        if match is None:
            return [TestRow("isoline_disk_integrals", "INCONCLUSIVE",
                            notes="direction bases saw different disks")], rep1
        D[i, 1] = match.integral
    err = float(np.max(errs))
    if len(pairs) >= 2:
        smin = float(np.linalg.svd(D, compute_uv=False)[-1])
    else:
        smin = float(np.hypot(*D[0]))
    scale = float(max(d.scale for d in pairs))
    violated = smin > 10.0 * max(err, 1e-12) and smin > 1e-9 * scale
    residuals = {"min_singular_value": smin, "error_estimate": err,
                 "n_disks": float(len(pairs)), "scale": scale}
    if violated:
        # stability: repeat the circulation route on a doubled contour grid
        try:
            r1b = domain_integral_checks(cf, (1.0, 0.0), n=2 * n_iso)
            r2b = domain_integral_checks(cf, (0.0, 1.0), n=2 * n_iso)
            Db = np.zeros((len(r1b.disks), 2))
            for i, d1 in enumerate(r1b.disks):
                Db[i, 0] = d1.integral
                match = min(r2b.disks,
                            key=lambda d2: np.hypot(*(d2.center - d1.center)))
                Db[i, 1] = match.integral
            sminb = float(np.linalg.svd(Db, compute_uv=False)[-1]) \
                if len(r1b.disks) >= 2 else float(np.hypot(*Db[0]))
            stable = (len(r1b.disks) == len(pairs)
                      and max(smin, sminb) <= 2.0 * min(smin, sminb))
            residuals["min_singular_value_fine"] = sminb
        except Exception:
            stable = False
        rows.append(TestRow(
            "isoline_disk_integrals",
            "VIOLATED" if stable else "INCONCLUSIVE",
            residuals, resolution_stability=bool(stable),
            notes="no direction c makes every disk integral vanish"))
    else:
        rows.append(TestRow(
            "isoline_disk_integrals", "PASS",
            residuals, resolution_stability=True,
            notes="disk integrals vanish within the cross-check error for "
                  "some direction"))
    ann = rep1.annuli + rep2.annuli
    if ann:
        rows.append(TestRow(
            "isoline_annulus_integrals", "INCONCLUSIVE",
            {f"annulus_{i}_integral": float(a.integral)
             for i, a in enumerate(ann)}
            | {f"annulus_{i}_coarea": float(a.coarea_value)
               for i, a in enumerate(ann)},
            notes="band integrals recorded as supplementary evidence; the "
                  "predicted pairing needs a valid potential"))
    return rows, rep1


# -- orchestration -----------------------------------------------------------

def _default_metric_id(cf):
    if not cf.coeffs or all(k == (0, 0) for k in cf.coeffs):
        return "flat"
    parts = []
    for (k1, k2), c in sorted(cf.coeffs.items()):
        if (k1, k2) == (0, 0) or (k1, k2) < (-k1, -k2):
            continue
        parts.append(f"({k1},{k2}):{c.real:.12g}{c.imag:+.12g}j")
    return "mu{" + ";".join(parts) + "}"


def _rank_verdict(rows, classical_row):
    violated = [r for r in rows if r.status == "VIOLATED"]
    if violated:
        names = ", ".join(r.name for r in violated)
        return f"no irreducible field (evidence: {names})"
    if classical_row is not None and classical_row.status == "PASS":
        return "exists (classical structure)"
    if all(r.status == "DEGENERATE" for r in rows):
        return "inconclusive (all conditions degenerate)"
    return "inconclusive"


def run_full(cf, ranks=(1, 2, 3, 4), metric_id=None, n=None,
             include_geodesics=True, include_domains=True,
             orbit_classes=((1, 0), (0, 1), (1, 1), (1, -1))):
    """Evaluate every implemented necessary condition rank by rank."""
    from .metric import default_grid_n
    base_n = n if n is not None else max(96, 4 * cf.max_degree)
    classical = classify_classical(cf, n=default_grid_n(cf, None))

    orbits = None
    orbit_note = ""
    if include_geodesics:
        try:
            orbits = default_orbit_menu(cf, classes=orbit_classes)
        except Exception as exc:
            orbit_note = f"orbit menu failed: {exc}"

    per_rank = {}
    for m in sorted(set(int(r) for r in ranks)):
        rows = []
        classical_row = None
        if m == 1:
            classical_row = classical["m1"]
            rows.append(classical_row)
        elif m == 2:
            classical_row = classical["m2"]
            rows.append(classical_row)
        rows.append(_potentiality_row(cf, m))
        if include_geodesics:
            row = _ratio_row(orbits, m)
            if orbit_note:
                row.notes = orbit_note
            rows.append(row)
        if m == 3:
            t_rows, _ = _transport_rows(cf, base_n)
            rows.extend(t_rows)
            rows.append(_mean_value_row(cf, base_n))
            if include_domains:
                d_rows, _ = _domain_rows(cf)
                rows.extend(d_rows)
        per_rank[m] = RankEntry(rank=m, tests=rows,
                                verdict=_rank_verdict(rows, classical_row))

    summary = _summary_text(classical, per_rank)
    return ObstructionReport(
        metric_id=metric_id if metric_id is not None else
        _default_metric_id(cf),
        per_rank=per_rank, classical=classical, summary=summary)


def _summary_text(classical, per_rank):
    kind = classical["kind"]
    lead = {
        "flat": "flat metric: trivially integrable; Killing fields of all "
                "ranks exist (reducible).",
        "rotation": "translation-invariant metric: a Killing vector field "
                    "exists; higher-rank reducible fields exist.",
        "liouville": "separable metric: a rank-2 Killing field independent "
                     "of the metric exists.",
        "generic": "no classical structure detected.",
    }[kind]
    bits = []
    for m in sorted(per_rank):
        bits.append(f"rank {m}: {per_rank[m].verdict}")
    return lead + " " + "; ".join(bits) + ". All verdicts are numerical " \
        "evidence at finite resolution, not proofs."


# -- canonical JSON ----------------------------------------------------------

def _jsonable(x):
    if is_dataclass(x) and not isinstance(x, type):
        return _jsonable(asdict(x))
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(f"{float(x):.17g}")
    if isinstance(x, complex):
        return {"re": _jsonable(x.real), "im": _jsonable(x.imag)}
    return x


def report_to_json(report):
    """Canonical serialization: sorted keys, fixed float formatting, no
    timestamps; identical inputs give byte-identical output."""
    return json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"
