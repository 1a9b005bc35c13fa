from .modal import ModalOscillator, ResolutionError, integrate_modal
from .params import ParamStore
from .tape import NonFiniteError, Tape, Var, finite_difference, grad, relative_error, value_and_grad

__all__ = [
    "ModalOscillator", "ResolutionError", "integrate_modal", "ParamStore", "NonFiniteError",
    "Tape", "Var", "finite_difference", "grad", "relative_error", "value_and_grad",
]
