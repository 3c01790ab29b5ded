"""Birth-death processes with two-type catastrophes.

Transient probabilities, resolvents of the process and of its
first-catastrophe absorbed chain, moments and density of the first
effective catastrophe time, and an event-driven simulator used as an
independent oracle.
"""
from ._backend import BACKEND
from .catastrophe import (PhiVector, factors, full_resolvent_direct, full_resolvent_entry, H_value,
                          phi_derivative, phi_direct, phi_entry, phi_via_FG)
from .errors import (BDCatError, CatastropheRequiredError, InversionError, LimitError, SingularHError,
                     SingularSystemError, TruncationError)
from .first_catastrophe import (FirstCatastropheReport, TransformTriple, cumulative, delta_transforms, density,
                                density_mass, moments, moments_single_type, type_probabilities)
from .model import (AbsorbingState, CatastropheRates, RateSchedule, TruncationPolicy, model_from_dict,
                    validate_model)
from .resolvent import (ResolventVector, hat_resolvent_derivative, hat_resolvent_entry, hat_resolvent_row)
from .simulate import estimate_first_catastrophe, estimate_transition, simulate_path
from .transient import (InversionSettings, invert_laplace, transition_row_direct, transition_row_formula)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AbsorbingState", "RateSchedule", "CatastropheRates", "TruncationPolicy", "model_from_dict", "validate_model",
    "ResolventVector", "hat_resolvent_row", "hat_resolvent_entry", "hat_resolvent_derivative",
    "full_resolvent_entry", "full_resolvent_direct", "phi_entry", "phi_derivative", "phi_via_FG", "phi_direct",
    "PhiVector", "H_value", "factors",
    "TransformTriple", "FirstCatastropheReport", "delta_transforms", "type_probabilities", "moments",
    "moments_single_type", "density", "cumulative", "density_mass",
    "InversionSettings", "invert_laplace", "transition_row_formula", "transition_row_direct",
    "simulate_path", "estimate_first_catastrophe", "estimate_transition",
    "BDCatError", "SingularSystemError", "TruncationError", "SingularHError", "CatastropheRequiredError",
    "InversionError", "LimitError",
]
