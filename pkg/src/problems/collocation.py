"""Space-time collocation sets for a transport problem."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import torch

from src.densities import evaluate_density
from src.errors import ConfigurationError
from src.fieldnet import DTYPE
from src.models import ProblemSpec
from src.problems.domains import SpatialSamples, create_domain

logger = logging.getLogger(__name__)


@dataclass
class EndpointSamples:
    """Spatial nodes with the target densities at t = 0 and t = 1."""

    points: torch.Tensor
    rho0: torch.Tensor
    rho1: torch.Tensor

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass
class BoundaryCollocation:
    """Boundary nodes crossed with the time grid."""

    times: torch.Tensor
    points: torch.Tensor
    normals: torch.Tensor

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass
class CollocationSet:
    """Interior, endpoint and boundary samples of one problem.

    Interior arrays are time-major: block j holds every spatial node at
    ``times[j]``. ``interior_weights`` are the time weight 1/N_t times the
    spatial quadrature weight.
    """

    times: np.ndarray
    spatial: SpatialSamples
    interior_t: torch.Tensor
    interior_x: torch.Tensor
    interior_frames: Optional[torch.Tensor]
    interior_weights: torch.Tensor
    endpoints: EndpointSamples
    boundary: Optional[BoundaryCollocation] = None

    @property
    def time_count(self) -> int:
        return len(self.times)

    @property
    def spatial_count(self) -> int:
        return len(self.spatial)

    @property
    def interior_count(self) -> int:
        return self.interior_x.shape[0]

    @property
    def dimension(self) -> int:
        return self.spatial.dimension

    def spatial_frames(self) -> Optional[torch.Tensor]:
        """Frames of the spatial nodes, or None on boxes."""
        if self.interior_frames is None:
            return None
        return self.interior_frames[: self.spatial_count]

    def to_dict(self) -> dict:
        return {
            "time_count": self.time_count,
            "spatial_count": self.spatial_count,
            "interior_count": self.interior_count,
            "boundary_count": 0 if self.boundary is None else len(self.boundary),
            "codimension": self.spatial.codimension,
            "relative_weights": self.spatial.relative_weights,
        }


def time_grid(n_time: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, n_time)


def endpoint_samples(spec: ProblemSpec, spatial: SpatialSamples) -> EndpointSamples:
    return EndpointSamples(
        points=torch.as_tensor(spatial.points, dtype=DTYPE),
        rho0=torch.as_tensor(evaluate_density(spec.rho0, spatial.points), dtype=DTYPE),
        rho1=torch.as_tensor(evaluate_density(spec.rho1, spatial.points), dtype=DTYPE),
    )


def build_collocation(spec: ProblemSpec, seed: int = 0) -> CollocationSet:
    """Tensor product of the uniform time grid with the domain's spatial nodes."""
    domain = create_domain(spec.domain, seed=seed)
    spatial = domain.spatial_samples()
    if spatial.dimension != spec.dimension:
        raise ConfigurationError(
            f"Spatial samples are {spatial.dimension}-dimensional but the problem "
            f"is {spec.dimension}-dimensional"
        )
    if len(spatial) == 0:
        raise ConfigurationError("Spatial plan produced no samples")

    times = time_grid(spec.n_time)
    n_space = len(spatial)
    interior_t = np.repeat(times, n_space)
    interior_x = np.tile(spatial.points, (len(times), 1))
    interior_weights = np.tile(spatial.weights, len(times)) / len(times)
    interior_frames = None
    if spatial.codimension > 0:
        interior_frames = torch.as_tensor(
            np.tile(spatial.frames, (len(times), 1, 1)), dtype=DTYPE
        )

    boundary = None
    faces = domain.boundary_samples()
    if faces is not None:
        boundary = BoundaryCollocation(
            times=torch.as_tensor(np.repeat(times, len(faces)), dtype=DTYPE),
            points=torch.as_tensor(np.tile(faces.points, (len(times), 1)), dtype=DTYPE),
            normals=torch.as_tensor(np.tile(faces.normals, (len(times), 1)), dtype=DTYPE),
        )

    collocation = CollocationSet(
        times=times,
        spatial=spatial,
        interior_t=torch.as_tensor(interior_t, dtype=DTYPE),
        interior_x=torch.as_tensor(interior_x, dtype=DTYPE),
        interior_frames=interior_frames,
        interior_weights=torch.as_tensor(interior_weights, dtype=DTYPE),
        endpoints=endpoint_samples(spec, spatial),
        boundary=boundary,
    )
    logger.info("Collocation for %s: %s", spec.name, collocation.to_dict())
    return collocation
