"""Killing tensor fields on the conformal 2-torus.

Tools for deciding, numerically, whether a torus with metric
e^{2 mu}(dx^2 + dy^2) can admit an irreducible rank-m Killing tensor field:
symmetric tensor calculus, spectral kernel and potentiality solvers,
geodesic ray integrals, isoline transport checks and an aggregated
obstruction report.
"""

__version__ = "0.1.0"

from .metric import (Lattice, ConformalFactor, MetricJet, MetricGrid,
                     christoffels, gaussian_curvature, curvature_from_jet,
                     gauss_bonnet_defect, transformed, default_grid_n)
from .tensors import (SymTensorField, TraceFreeField, HarmonicDecomposition,
                      sym_product, op_i, op_j, op_p, inner_derivative,
                      divergence, harmonic_decompose, chain_residuals,
                      chain_coefficient, to_polynomial, fiber_inner,
                      l2_inner, l2_norm)
from .geodesics import (GeodesicOrbit, integrate_flow, find_closed_geodesic,
                        critical_circle_orbits, invariant_direction,
                        RayIntegralPair, ray_integral_Z, ray_integral_pair,
                        ratio_test, RatioTestResult, default_orbit_menu)
from .solver import (PseudoVector, PseudoForm, make_Z, kernel_basis_fields,
                     kernel_delta_pd, KernelReport, range_membership,
                     j_split, JSplitResult, potentiality_test,
                     PotentialTestResult)
from .rank3 import (LambdaForm, lambda_form, lambda_at_points,
                    mean_value_check, make_T, delta_T_explicit, phi_c,
                    delta_squared_T, CohomologySolution, FourthOrderReport,
                    solve_fourth_order, TransportObstruction,
                    transport_obstruction, trace_free_hessian,
                    third_derivative_residual, IsolineCurve,
                    extract_isolines, isoline_integral, IsolineIntegral,
                    delta_T_circulation, curvature_jet, CriticalPoint,
                    find_critical_points, domain_integral_checks,
                    DomainReport, DiskCheck, AnnulusCheck)
from .pipeline import (ObstructionReport, classify_classical, run_full,
                       report_to_json)

__all__ = [
    "Lattice", "ConformalFactor", "MetricJet", "MetricGrid",
    "christoffels", "gaussian_curvature", "curvature_from_jet",
    "gauss_bonnet_defect", "transformed", "default_grid_n",
    "SymTensorField", "TraceFreeField", "HarmonicDecomposition",
    "sym_product", "op_i", "op_j", "op_p", "inner_derivative",
    "divergence", "harmonic_decompose", "chain_residuals",
    "chain_coefficient", "to_polynomial", "fiber_inner",
    "l2_inner", "l2_norm",
    "GeodesicOrbit", "integrate_flow", "find_closed_geodesic",
    "critical_circle_orbits", "invariant_direction",
    "RayIntegralPair", "ray_integral_Z", "ray_integral_pair",
    "ratio_test", "RatioTestResult", "default_orbit_menu",
    "PseudoVector", "PseudoForm", "make_Z", "kernel_basis_fields",
    "kernel_delta_pd", "KernelReport", "range_membership",
    "j_split", "JSplitResult", "potentiality_test", "PotentialTestResult",
    "LambdaForm", "lambda_form", "lambda_at_points", "mean_value_check",
    "make_T", "delta_T_explicit", "phi_c", "delta_squared_T",
    "CohomologySolution", "FourthOrderReport", "solve_fourth_order",
    "TransportObstruction", "transport_obstruction", "trace_free_hessian",
    "third_derivative_residual", "IsolineCurve", "extract_isolines",
    "isoline_integral", "IsolineIntegral", "delta_T_circulation",
    "curvature_jet", "CriticalPoint", "find_critical_points",
    "domain_integral_checks", "DomainReport", "DiskCheck", "AnnulusCheck",
    "ObstructionReport", "classify_classical", "run_full", "report_to_json",
]
