"""Scalar-field MLPs over space-time inputs (t, x)."""

import logging
import math
from typing import Callable, Sequence

import torch
from torch import nn
from torch.nn.utils import parameters_to_vector, vector_to_parameters

from src.errors import ConfigurationError, DimensionMismatchError
from src.models import NetworkHeader

logger = logging.getLogger(__name__)

DTYPE = torch.float64

HIDDEN_ACTIVATIONS: dict[str, Callable[[torch.Tensor], torch.Tensor]] = {
    "tanh": torch.tanh,
}

OUTPUT_HEADS: dict[str, Callable[[torch.Tensor], torch.Tensor]] = {
    "linear": lambda u: u,
    "softplus": nn.functional.softplus,
}


class FieldNetwork(nn.Module):
    """Fully connected network mapping (t, x) in R^(1+d) to a scalar.

    Hidden layers use ``hidden_activation``; the last affine layer is followed
    by ``output_head`` (softplus keeps the field strictly positive).
    Parameters are ordered layer by layer, weight row-major then bias.
    """

    def __init__(
        self,
        layer_dims: Sequence[int],
        hidden_activation: str = "tanh",
        output_head: str = "linear",
        seed: int = 0,
    ):
        super().__init__()
        layer_dims = [int(n) for n in layer_dims]
        if len(layer_dims) < 2 or any(n < 1 for n in layer_dims):
            raise DimensionMismatchError(
                "layer_dims needs at least an input and an output width, all positive",
                {"layer_dims": layer_dims},
            )
        if layer_dims[-1] != 1:
            raise DimensionMismatchError(
                f"field networks are scalar, got output width {layer_dims[-1]}",
                {"layer_dims": layer_dims},
            )
        if layer_dims[0] < 2:
            raise DimensionMismatchError(
                "input width must be 1 + d with d >= 1", {"layer_dims": layer_dims}
            )
        if hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ConfigurationError(f"Unknown hidden activation: {hidden_activation}")
        if output_head not in OUTPUT_HEADS:
            raise ConfigurationError(f"Unknown output head: {output_head}")

        self.layer_dims = layer_dims
        self.hidden_activation = hidden_activation
        self.output_head = output_head
        self.seed = seed
        self.layers = nn.ModuleList(
            nn.Linear(fan_in, fan_out, dtype=DTYPE)
            for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:])
        )

    @property
    def dimension(self) -> int:
        """Spatial dimension d of the inputs."""
        return self.layer_dims[0] - 1

    @property
    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())

    def forward_inputs(self, z: torch.Tensor) -> torch.Tensor:
        """Evaluate on stacked inputs of shape (B, 1 + d); returns shape (B,)."""
        activation = HIDDEN_ACTIVATIONS[self.hidden_activation]
        for layer in self.layers[:-1]:
            z = activation(layer(z))
        return OUTPUT_HEADS[self.output_head](self.layers[-1](z).squeeze(-1))

    def forward(self, t: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
        return self.forward_inputs(torch.cat([t.reshape(-1, 1), x], dim=1))

    def bind(self, dimension: int) -> "FieldNetwork":
        """Check that the network accepts points of the given spatial dimension."""
        if dimension != self.dimension:
            raise DimensionMismatchError(
                f"network input width {self.layer_dims[0]} does not match 1 + d = {1 + dimension}",
                {"layer_dims": self.layer_dims, "dimension": dimension},
            )
        return self

    def parameter_vector(self) -> torch.Tensor:
        return parameters_to_vector(self.parameters()).detach().clone()

    def load_parameter_vector(self, vector: torch.Tensor) -> None:
        vector = torch.as_tensor(vector, dtype=DTYPE)
        if vector.numel() != self.parameter_count:
            raise DimensionMismatchError(
                f"expected {self.parameter_count} parameters, got {vector.numel()}"
            )
        with torch.no_grad():
            vector_to_parameters(vector.clone(), self.parameters())

    def header(self) -> NetworkHeader:
        return NetworkHeader(
            layer_dims=self.layer_dims,
            hidden_activation=self.hidden_activation,
            output_head=self.output_head,
            seed=self.seed,
            parameter_count=self.parameter_count,
        )


def init_network(
    layer_dims: Sequence[int],
    hidden_activation: str = "tanh",
    output_head: str = "linear",
    seed: int = 0,
) -> FieldNetwork:
    """Build a network with Glorot-uniform weights and zero biases.

    Each weight is drawn uniformly from +-sqrt(6 / (fan_in + fan_out)) using a
    private generator, so the same seed always yields the same parameters.
    """
    net = FieldNetwork(layer_dims, hidden_activation, output_head, seed)
    generator = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for layer in net.layers:
            bound = math.sqrt(6.0 / (layer.in_features + layer.out_features))
            layer.weight.uniform_(-bound, bound, generator=generator)
            layer.bias.zero_()
    logger.debug(
        "Initialized %s network %s with seed %d", output_head, net.layer_dims, seed
    )
    return net
