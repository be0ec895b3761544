"""Diffraction, dynamical eigenvalues and gap labels of one-dimensional substitution tilings."""

from .errors import (ComputationError, ConfigurationError, ConvergenceError, RefinementError,
                     SubstitutionError, UnsupportedError, WindowError)
from .gaplabel import RealModule, bragg_to_gap_1d, bragg_to_gap_d, membership, subgroup_index
from .pointset import DecoratedPointSet, from_substitution, from_word
from .presets import get_preset
from .spectra.bands import aperiodic_gap_labels, band_structure
from .spectra.luck import luck_beta
from .spectra.tightbinding import TightBindingModel, ids, lyapunov_exponent, sturm_count
from .substitution import Substitution, iterate, patch_frequency, two_sided_word

__version__ = "0.1.0"

__all__ = [
    "ComputationError", "ConfigurationError", "ConvergenceError", "DecoratedPointSet",
    "RealModule", "RefinementError", "Substitution", "SubstitutionError", "TightBindingModel",
    "UnsupportedError", "WindowError", "aperiodic_gap_labels", "band_structure",
    "bragg_to_gap_1d", "bragg_to_gap_d", "from_substitution", "from_word", "get_preset", "ids",
    "iterate", "luck_beta", "lyapunov_exponent", "membership", "patch_frequency",
    "subgroup_index", "sturm_count", "two_sided_word",
]
