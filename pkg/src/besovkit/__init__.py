"""Numerical toolkit for vector-valued Besov and Triebel-Lizorkin norms and decompositions."""

__version__ = "0.1.0"

from .errors import (BesovkitError, ConvergenceFailure, DegenerateInput, InternalInconsistency,
                     InvalidArgument, InvalidKernel, InvalidMultiplier, NumericalFailure,
                     QuadratureFailure, ResolutionTooSmall, TruncationFailure)
from .value_space import ValueSpace
from .grid import Grid, GridFunction, Multiplier, apply_multiplier, lp_norm
from .norms import (CoefficientField, SpaceParams, besov_norm, build_engines, compare_norms,
                    harmonic_norm, lift, local_means_norm, peetre_norm, seq_norm_b, seq_norm_f,
                    triebel_norm)
from .decomposition import (harmonic_decompose, quark_decompose, quark_decompose_general,
                            reconstruct_atomic, reconstruct_quark, synthesis_bound_check,
                            validate_atom, convergence_check)
