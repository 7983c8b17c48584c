"""JSON checkpoints for field networks."""

import json
from pathlib import Path
from typing import Union

from src.errors import DimensionMismatchError
from src.fieldnet.network import FieldNetwork
from src.models import NetworkCheckpoint


def network_checkpoint(net: FieldNetwork) -> NetworkCheckpoint:
    return NetworkCheckpoint(header=net.header(), parameters=net.parameter_vector().tolist())


def network_from_checkpoint(checkpoint: NetworkCheckpoint) -> FieldNetwork:
    header = checkpoint.header
    net = FieldNetwork(
        header.layer_dims, header.hidden_activation, header.output_head, header.seed
    )
    if len(checkpoint.parameters) != header.parameter_count or (
        header.parameter_count != net.parameter_count
    ):
        raise DimensionMismatchError(
            "Checkpoint parameter count does not match its header",
            {"header": header.parameter_count, "stored": len(checkpoint.parameters)},
        )
    net.load_parameter_vector(checkpoint.parameters)
    return net


def save_network(net: FieldNetwork, path: Union[str, Path]) -> Path:
    """Write header and parameters; floats are stored in shortest-repr form."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(network_checkpoint(net).model_dump(), f)
    return path


def load_network(path: Union[str, Path]) -> FieldNetwork:
    with open(path) as f:
        return network_from_checkpoint(NetworkCheckpoint.model_validate(json.load(f)))
