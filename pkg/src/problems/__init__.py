from src.problems.collocation import (
    BoundaryCollocation,
    CollocationSet,
    EndpointSamples,
    build_collocation,
    endpoint_samples,
    time_grid,
)
from src.problems.domains import (
    BoundarySamples,
    BoxDomain,
    CloudDomain,
    Domain,
    SpatialSamples,
    create_domain,
)
from src.problems.presets import PRESETS, build_preset, list_presets

__all__ = [
    "PRESETS",
    "BoundaryCollocation",
    "BoundarySamples",
    "BoxDomain",
    "CloudDomain",
    "CollocationSet",
    "Domain",
    "EndpointSamples",
    "SpatialSamples",
    "build_collocation",
    "build_preset",
    "create_domain",
    "endpoint_samples",
    "list_presets",
    "time_grid",
]
