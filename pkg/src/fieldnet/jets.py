"""Derivative jets of scalar fields and parameter gradients.

A jet bundles a field's value, time derivative, spatial gradient and spatial
Hessian at a batch of points. Derivatives come from reverse-mode autograd;
with ``create_graph=True`` every component stays differentiable in the
network parameters so a loss built from jets can be back-propagated.
"""

from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Union

import numpy as np
import torch

from src.errors import DimensionMismatchError, TrainingDivergedError
from src.fieldnet.network import DTYPE, FieldNetwork

ArrayLike = Union[torch.Tensor, np.ndarray, float, list]
ScalarField = Callable[[torch.Tensor, torch.Tensor], torch.Tensor]


@dataclass
class FieldJet:
    """Value and derivatives of a field at B points in R^d."""

    u: torch.Tensor  # (B,)
    u_t: torch.Tensor  # (B,)
    grad_x: torch.Tensor  # (B, d)
    hess_x: Optional[torch.Tensor] = None  # (B, d, d)

    def __len__(self) -> int:
        return self.u.shape[0]

    def detach(self) -> "FieldJet":
        return FieldJet(
            u=self.u.detach(),
            u_t=self.u_t.detach(),
            grad_x=self.grad_x.detach(),
            hess_x=None if self.hess_x is None else self.hess_x.detach(),
        )

    def is_finite(self) -> bool:
        parts = [self.u, self.u_t, self.grad_x]
        if self.hess_x is not None:
            parts.append(self.hess_x)
        return all(bool(torch.isfinite(p).all()) for p in parts)


@dataclass
class ParamGradient:
    """Flat gradient aligned with ``FieldNetwork.parameter_vector``."""

    vector: torch.Tensor
    value: float

    def __len__(self) -> int:
        return self.vector.numel()


def _as_inputs(t: ArrayLike, x: ArrayLike) -> tuple[torch.Tensor, torch.Tensor]:
    x = torch.as_tensor(x, dtype=DTYPE)
    if x.dim() == 1:
        x = x.unsqueeze(0)
    if x.dim() != 2:
        raise DimensionMismatchError(f"points must have shape (B, d), got {tuple(x.shape)}")
    t = torch.as_tensor(t, dtype=DTYPE).reshape(-1)
    if t.numel() == 1 and x.shape[0] > 1:
        t = t.expand(x.shape[0])
    if t.numel() != x.shape[0]:
        raise DimensionMismatchError(
            f"got {t.numel()} times for {x.shape[0]} points",
        )
    return t, x


def _grad_or_zeros(
    output: torch.Tensor, inputs: torch.Tensor, create_graph: bool
) -> torch.Tensor:
    if not output.requires_grad:
        return torch.zeros_like(inputs)
    (grad,) = torch.autograd.grad(
        output.sum(),
        inputs,
        create_graph=create_graph,
        retain_graph=True,
        allow_unused=True,
    )
    return torch.zeros_like(inputs) if grad is None else grad


def function_jet(
    field: ScalarField,
    t: ArrayLike,
    x: ArrayLike,
    create_graph: bool = False,
    hessian: bool = True,
) -> FieldJet:
    """Jet of any pointwise scalar field ``field(t, x) -> (B,)``.

    Rows are differentiated through a summed output, which is exact because
    each output row depends only on its own input row.
    """
    t, x = _as_inputs(t, x)
    t = t.detach().clone().requires_grad_(True)
    x = x.detach().clone().requires_grad_(True)
    u = field(t, x)

    keep_graph = create_graph or hessian
    u_t = _grad_or_zeros(u, t, keep_graph)
    grad_x = _grad_or_zeros(u, x, keep_graph)

    hess_x = None
    if hessian:
        rows = [
            _grad_or_zeros(grad_x[:, i], x, create_graph) for i in range(x.shape[1])
        ]
        hess_x = torch.stack(rows, dim=1)
        hess_x = 0.5 * (hess_x + hess_x.transpose(1, 2))

    jet = FieldJet(u=u, u_t=u_t, grad_x=grad_x, hess_x=hess_x)
    return jet if create_graph else jet.detach()


def eval_jet(
    net: FieldNetwork,
    t: ArrayLike,
    x: ArrayLike,
    create_graph: bool = False,
    hessian: bool = True,
) -> FieldJet:
    """Jet of a field network at points ``x`` (shape (B, d) or (d,)) and times ``t``."""
    t, x = _as_inputs(t, x)
    net.bind(x.shape[1])
    return function_jet(net, t, x, create_graph=create_graph, hessian=hessian)


def parameter_gradients(
    value: torch.Tensor, nets: Iterable[FieldNetwork], iteration: Optional[int] = None
) -> list[torch.Tensor]:
    """Flat gradients of one scalar with respect to each network's parameters."""
    nets = list(nets)
    if not bool(torch.isfinite(value)):
        raise TrainingDivergedError(
            f"Non-finite objective value {float(value)}", iteration=iteration
        )
    params = [p for net in nets for p in net.parameters()]
    if value.requires_grad:
        grads = torch.autograd.grad(value, params, allow_unused=True)
    else:
        grads = [None] * len(params)

    vectors, offset = [], 0
    for net in nets:
        count = len(list(net.parameters()))
        chunk = [
            torch.zeros_like(p) if g is None else g
            for p, g in zip(params[offset : offset + count], grads[offset : offset + count])
        ]
        vectors.append(torch.cat([g.reshape(-1) for g in chunk]).detach())
        offset += count

    for vector in vectors:
        if not bool(torch.isfinite(vector).all()):
            raise TrainingDivergedError("Non-finite parameter gradient", iteration=iteration)
    return vectors


def param_grad(
    net: FieldNetwork, functional: Callable[[FieldNetwork], torch.Tensor]
) -> ParamGradient:
    """Gradient of ``functional(net)`` (a scalar tensor) in the network parameters.

    The functional is expected to build its jets with ``create_graph=True``.
    """
    value = torch.as_tensor(functional(net), dtype=DTYPE)
    (vector,) = parameter_gradients(value, [net])
    return ParamGradient(vector=vector, value=float(value))
