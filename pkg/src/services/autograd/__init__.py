"""Dense-tensor reverse-mode differentiation engine."""

from .gradcheck import grad_check
from .graph import ComputeGraph, inverse_sqrt, sigmoid_values
from .tensor import Tensor

__all__ = ["ComputeGraph", "Tensor", "grad_check", "inverse_sqrt", "sigmoid_values"]
