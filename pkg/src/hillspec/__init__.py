"""Bloch spectra, spectral singularities, and spectral expansions for
one-dimensional periodic differential operators -y'' + q(x) y with
complex-valued 1-periodic potentials.

The public surface mirrors the pipeline:

    potential       coefficient handling and evaluation
    odecore         fundamental solutions theta, phi and lambda-jets
    discriminant    F(lam) = theta(1) + phi'(1) and its derivative
    spectrum        Bloch eigenvalues lam_n(t), band tracking
    eigenfunctions  normalized pairs and the pairing alpha_n(t)
    singularities   multiple eigenvalues, classification, ESS detection
    expansion       spectral expansion and reconstruction (pv / contour)
    oracle          resolvent-side cross-checks (Green kernel, Galerkin)
    cli             `hillspec` entry point
"""

from .errors import (HillspecError, ConfigError, MalformedConfig,
                     NumericalError, ToleranceNotMet, QuadratureFailure,
                     PVDiverges, ResolventPole)
from .potential import Potential, load_potential, zero_potential
from .odecore import (FundamentalSolution, integrate_fundamental,
                      integrate_fundamental_batch, wronskian_defect)
from .discriminant import (DiscriminantValue, hill_discriminant,
                           discriminant_batch, discriminant_derivative,
                           characteristic_determinant, p_branch)
from .spectrum import (BlochEigenvalue, BlochBand, CriticalPoint,
                       AsymptoticWindow, solve_eigenvalues, track_band,
                       find_critical_points, find_multiple_eigenvalues,
                       determine_asymptotic_window, free_seed,
                       arccos_halfplane)
from .eigenfunctions import (EigenfunctionPair, normalized_pair,
                             alpha_closed_form)
from .singularities import (SingularityRecord, SingularQuasimomentum,
                            AlphaFit, find_singularities, classify,
                            geometric_multiplicity, fit_alpha_exponent,
                            singular_quasimomenta)
from .expansion import (TestFunction, GelfandSlice, ExpansionPlan,
                        PairWindow, PVResult, ReconstructionReport,
                        load_function, gelfand_transform, parseval_defect,
                        expansion_coefficient, make_plan, reconstruct,
                        pv_bundle_integral, lambda_domain_expansion,
                        integrate_over_Eh, integrate_over_semicircle,
                        remainder_diagnostics, theorem10_check)
from .oracle import (GreenKernel, TotalProjectionSample, GalerkinResult,
                     green_kernel, total_projection, partial_sum_S_N,
                     galerkin_eigensolve)

__version__ = "0.1.0"

__all__ = [
    "HillspecError", "ConfigError", "MalformedConfig", "NumericalError",
    "ToleranceNotMet", "QuadratureFailure", "PVDiverges", "ResolventPole",
    "Potential", "load_potential", "zero_potential",
    "FundamentalSolution", "integrate_fundamental",
    "integrate_fundamental_batch", "wronskian_defect",
    "DiscriminantValue", "hill_discriminant", "discriminant_batch",
    "discriminant_derivative", "characteristic_determinant", "p_branch",
    "BlochEigenvalue", "BlochBand", "CriticalPoint", "AsymptoticWindow",
    "solve_eigenvalues", "track_band", "find_critical_points",
    "find_multiple_eigenvalues", "determine_asymptotic_window",
    "free_seed", "arccos_halfplane",
    "EigenfunctionPair", "normalized_pair", "alpha_closed_form",
    "SingularityRecord", "SingularQuasimomentum", "AlphaFit",
    "find_singularities", "classify", "geometric_multiplicity",
    "fit_alpha_exponent", "singular_quasimomenta",
    "TestFunction", "GelfandSlice", "ExpansionPlan", "PairWindow",
    "PVResult", "ReconstructionReport", "load_function",
    "gelfand_transform", "parseval_defect", "expansion_coefficient",
    "make_plan", "reconstruct", "pv_bundle_integral",
    "lambda_domain_expansion", "integrate_over_Eh",
    "integrate_over_semicircle", "remainder_diagnostics",
    "theorem10_check",
    "GreenKernel", "TotalProjectionSample", "GalerkinResult",
    "green_kernel", "total_projection", "partial_sum_S_N",
    "galerkin_eigensolve",
    "__version__",
]
