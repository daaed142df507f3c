"""Discrete form modulus and classical modulus of relative homology classes.

Cubical metric complexes with D/E boundary markings, integer relative
homology, p-harmonic minimizers of the form modulus with their Hodge duals,
and certified brackets for the classical modulus of curve and hypersurface
families.
"""

__version__ = "0.1.0"

from .cmod import (ClassicalModulusResult, CmodOptions, CorollaryReport, Density,
                   check_corollary, density_bound, form_density, min_cut_surface,
                   minimize_cmod, shortest_cycle_in_class)
from .dec import (Characterization, characterize, coboundary, cup_pair, hodge_star, lp_norm,
                  p_harmonic_residual)
from .dmod import (DualityReport, ModulusResult, SolverOptions, dual_form,
                   identify_dual_class, inverse_dual_form, minimize_dmod, poincare_dual,
                   verify_duality)
from .errors import ModwedgeError
from .homology import HomologyClass, HomologySummary, evaluate, relative_homology
from .mesh import Chain, Cochain, GridSpec, MetricComplex, build_complex
from .scenes import SCENES, Scene, get_scene, list_scenes

__all__ = [
    "__version__", "GridSpec", "MetricComplex", "Chain", "Cochain", "build_complex",
    "HomologyClass", "HomologySummary", "relative_homology", "evaluate",
    "Characterization", "characterize", "coboundary", "cup_pair", "hodge_star", "lp_norm",
    "p_harmonic_residual", "SolverOptions", "ModulusResult", "DualityReport", "minimize_dmod",
    "verify_duality", "dual_form", "inverse_dual_form", "poincare_dual",
    "identify_dual_class", "Density", "CmodOptions", "ClassicalModulusResult",
    "CorollaryReport", "minimize_cmod", "check_corollary", "density_bound", "form_density",
    "shortest_cycle_in_class", "min_cut_surface", "Scene", "SCENES", "get_scene",
    "list_scenes", "ModwedgeError",
]
