"""Implicit test surfaces in the unit cube and isosurface point sampling."""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import torch

from src.errors import EmptyLevelSetError, InvalidParameterError, UnknownPresetError
from src.geometry.cloud import SurfacePointCloud

logger = logging.getLogger(__name__)

LEVEL_TOLERANCE = 1e-6
GRADIENT_FLOOR = 1e-8
NEWTON_ITERATIONS = 50

LevelFunction = Callable[[torch.Tensor], torch.Tensor]


def _centered(points: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    shifted = points - 0.5
    return shifted[:, 0], shifted[:, 1], shifted[:, 2]


def sphere_level(points: torch.Tensor) -> torch.Tensor:
    u, v, w = _centered(points)
    return u**2 + v**2 + w**2 - 0.25


def ellipsoid_level(points: torch.Tensor) -> torch.Tensor:
    u, v, w = _centered(points)
    return u**2 + 3 * v**2 + 6 * w**2 - 0.25


def peanut_level(points: torch.Tensor) -> torch.Tensor:
    u, v, w = _centered(points)
    radial = 8 * v**2 + 8 * w**2
    return ((4 * u - 1) ** 2 + radial) * ((4 * u + 1) ** 2 + radial) - 1.2


def torus_level(points: torch.Tensor) -> torch.Tensor:
    u, v, w = _centered(points)
    return (0.3 - torch.sqrt(u**2 + v**2)) ** 2 + w**2 - 0.04


def opener_level(points: torch.Tensor) -> torch.Tensor:
    u, v, w = _centered(points)
    return (3 * u**2 * (1 - 5 * u**2) - 5 * v**2) ** 2 + 5 * w**2 - 1.0 / 60.0


@dataclass(frozen=True)
class ImplicitSurface:
    """Closed surface {F = 0} inside [0, 1]^3.

    ``resolution`` is the grid size whose sample count lands near the
    reference counts; ``area`` is None when no closed form is used.
    """

    surface_id: str
    level_function: LevelFunction
    resolution: int
    area: Optional[float] = None

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        with torch.no_grad():
            values = self.level_function(torch.as_tensor(points, dtype=torch.float64))
        return values.numpy()

    def value_and_gradient(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = torch.as_tensor(points, dtype=torch.float64).clone().requires_grad_(True)
        values = self.level_function(x)
        (gradient,) = torch.autograd.grad(values.sum(), x)
        return values.detach().numpy(), gradient.numpy()


SURFACES: dict[str, ImplicitSurface] = {
    "sphere": ImplicitSurface("sphere", sphere_level, resolution=16, area=math.pi),
    "ellipsoid": ImplicitSurface("ellipsoid", ellipsoid_level, resolution=25),
    "peanut": ImplicitSurface("peanut", peanut_level, resolution=35),
    "torus": ImplicitSurface(
        "torus", torus_level, resolution=25, area=4 * math.pi**2 * 0.3 * 0.2
    ),
    "opener": ImplicitSurface("opener", opener_level, resolution=34),
}


def get_surface(surface_id: str) -> ImplicitSurface:
    try:
        return SURFACES[surface_id]
    except KeyError:
        raise UnknownPresetError(
            f"Unknown surface: {surface_id}", {"available": sorted(SURFACES)}
        ) from None


def _sign_change_centers(surface: ImplicitSurface, n: int) -> np.ndarray:
    nodes = np.linspace(0.0, 1.0, n + 1)
    grid = np.stack(np.meshgrid(nodes, nodes, nodes, indexing="ij"), axis=-1)
    values = surface.evaluate(grid.reshape(-1, 3)).reshape(n + 1, n + 1, n + 1)

    corners = [
        values[i : i + n, j : j + n, k : k + n]
        for i in (0, 1)
        for j in (0, 1)
        for k in (0, 1)
    ]
    lowest = np.minimum.reduce(corners)
    highest = np.maximum.reduce(corners)
    crossing = (lowest <= 0) & (highest >= 0)

    cells = np.argwhere(crossing)
    return (cells + 0.5) / n


def sample_isosurface(
    surface: ImplicitSurface, grid_resolution: Optional[int] = None
) -> SurfacePointCloud:
    """Sample {F = 0} by Newton-projecting centers of sign-change cells.

    A regular grid of ``grid_resolution`` cells per axis covers [0, 1]^3.
    Samples that stay off the level set, sit where the gradient vanishes or
    drift more than two cells are dropped.
    """
    n = grid_resolution or surface.resolution
    if n < 8:
        raise InvalidParameterError(f"grid_resolution must be at least 8, got {n}")

    start = _sign_change_centers(surface, n)
    if len(start) == 0:
        raise EmptyLevelSetError(
            f"No sign change of the {surface.surface_id} level function at resolution {n}"
        )

    points = start.copy()
    for _ in range(NEWTON_ITERATIONS):
        values, gradients = surface.value_and_gradient(points)
        norms_sq = np.einsum("ij,ij->i", gradients, gradients)
        safe = np.where(norms_sq > GRADIENT_FLOOR**2, norms_sq, np.inf)
        points = points - (values / safe)[:, None] * gradients
        if np.max(np.abs(values)) < 1e-14:
            break

    values, gradients = surface.value_and_gradient(points)
    norms = np.linalg.norm(gradients, axis=1)
    drift = np.linalg.norm(points - start, axis=1)
    accepted = (
        (np.abs(values) <= LEVEL_TOLERANCE)
        & (norms > GRADIENT_FLOOR)
        & (drift <= 2.0 / n)
    )
    rejected = int((~accepted).sum())
    if rejected:
        logger.warning(
            "Dropped %d of %d %s samples after projection",
            rejected,
            len(points),
            surface.surface_id,
        )
    if not accepted.any():
        raise EmptyLevelSetError(f"No {surface.surface_id} sample converged onto the level set")

    points = points[accepted]
    normals = gradients[accepted] / norms[accepted, None]
    count = len(points)
    if surface.area is not None:
        weights = np.full(count, surface.area / count)
    else:
        weights = np.ones(count)

    logger.info(
        "Sampled %d points on the %s at resolution %d", count, surface.surface_id, n
    )
    return SurfacePointCloud(
        points=points,
        normal_bases=normals[:, :, None],
        weights=weights,
        area_known=surface.area is not None,
        source=surface.surface_id,
    )
