"""Spatial domain interface, implementations and factory."""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.errors import ConfigurationError
from src.geometry import (
    SurfacePointCloud,
    add_noise,
    get_surface,
    read_cloud_csv,
    rotate_embed_4d,
    sample_isosurface,
)
from src.models import DomainConfig, EuclideanBox, PointCloudDomain

logger = logging.getLogger(__name__)


@dataclass
class SpatialSamples:
    """Spatial quadrature nodes of a domain.

    ``frames`` has shape (N, d, k); k = 0 on Euclidean boxes.
    """

    points: np.ndarray
    frames: np.ndarray
    weights: np.ndarray
    grid_shape: Optional[tuple[int, ...]] = None
    relative_weights: bool = False
    cloud: Optional[SurfacePointCloud] = None

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    @property
    def codimension(self) -> int:
        return self.frames.shape[2]


@dataclass
class BoundarySamples:
    """Points on the faces of a box with their outward unit normals."""

    points: np.ndarray
    normals: np.ndarray

    def __len__(self) -> int:
        return self.points.shape[0]


class Domain(ABC):
    """Abstract base class for spatial domains."""

    @property
    @abstractmethod
    def dimension(self) -> int:
        """Ambient dimension d."""
        pass

    @abstractmethod
    def spatial_samples(self) -> SpatialSamples:
        """Interior quadrature nodes with frames and weights."""
        pass

    @abstractmethod
    def boundary_samples(self) -> Optional[BoundarySamples]:
        """Boundary nodes, or None for a closed surface."""
        pass


# =============================================================================
# Euclidean Boxes
# =============================================================================


def cell_centers(lo: float, hi: float, n: int) -> np.ndarray:
    return lo + (np.arange(n) + 0.5) * (hi - lo) / n


class BoxDomain(Domain):
    """Axis-aligned box sampled at the centers of a regular grid of cells."""

    def __init__(self, config: EuclideanBox):
        self.config = config

    @property
    def dimension(self) -> int:
        return self.config.dimension

    def axes(self) -> list[np.ndarray]:
        return [
            cell_centers(lo, hi, n)
            for (lo, hi), n in zip(self.config.bounds, self.config.grid_shape)
        ]

    def spatial_samples(self) -> SpatialSamples:
        axes = self.axes()
        mesh = np.meshgrid(*axes, indexing="ij")
        points = np.stack([m.reshape(-1) for m in mesh], axis=1)
        cell_volume = np.prod(
            [(hi - lo) / n for (lo, hi), n in zip(self.config.bounds, self.config.grid_shape)]
        )
        return SpatialSamples(
            points=points,
            frames=np.zeros((len(points), self.dimension, 0)),
            weights=np.full(len(points), cell_volume),
            grid_shape=tuple(self.config.grid_shape),
        )

    def boundary_samples(self) -> BoundarySamples:
        """Face nodes: the grid's cell centers on the other axes, one face at a time."""
        axes = self.axes()
        points, normals = [], []
        for axis, (lo, hi) in enumerate(self.config.bounds):
            others = [a for i, a in enumerate(axes) if i != axis]
            if others:
                mesh = np.meshgrid(*others, indexing="ij")
                face = np.stack([m.reshape(-1) for m in mesh], axis=1)
            else:
                face = np.zeros((1, 0))
            for value, sign in ((lo, -1.0), (hi, 1.0)):
                block = np.insert(face, axis, value, axis=1)
                normal = np.zeros((len(block), self.dimension))
                normal[:, axis] = sign
                points.append(block)
                normals.append(normal)
        return BoundarySamples(points=np.vstack(points), normals=np.vstack(normals))


# =============================================================================
# Point Clouds
# =============================================================================


class CloudDomain(Domain):
    """Closed surface represented by a point cloud with normals."""

    def __init__(self, config: PointCloudDomain, seed: int = 0):
        self.config = config
        self.seed = seed
        self._cloud: Optional[SurfacePointCloud] = None

    @property
    def dimension(self) -> int:
        return self.config.dimension

    @property
    def cloud(self) -> SurfacePointCloud:
        if self._cloud is None:
            self._cloud = self._build_cloud()
        return self._cloud

    def _build_cloud(self) -> SurfacePointCloud:
        if self.config.cloud_file:
            cloud = read_cloud_csv(self.config.cloud_file)
            logger.info("Loaded %d points from %s", len(cloud), self.config.cloud_file)
        else:
            surface = get_surface(self.config.surface)
            cloud = sample_isosurface(surface, self.config.grid_resolution)
        if self.config.embed_4d and cloud.dimension == 3:
            cloud = rotate_embed_4d(cloud)
        if self.config.noise is not None:
            cloud = add_noise(cloud, self.config.noise, self.seed)
        return cloud.validate()

    def spatial_samples(self) -> SpatialSamples:
        cloud = self.cloud
        return SpatialSamples(
            points=cloud.points,
            frames=cloud.normal_bases,
            weights=cloud.weights,
            relative_weights=not cloud.area_known,
            cloud=cloud,
        )

    def boundary_samples(self) -> None:
        return None


def create_domain(config: DomainConfig, seed: int = 0) -> Domain:
    """Create a domain from its configuration.

    Args:
        config: Box or point-cloud domain configuration.
        seed: Fallback seed for point-cloud noise.

    Returns:
        Domain: The configured domain.

    Raises:
        ConfigurationError: If the domain kind is not supported.
    """
    if config.kind == "euclidean_box":
        return BoxDomain(config)
    elif config.kind == "point_cloud":
        return CloudDomain(config, seed=seed)
    else:
        raise ConfigurationError(f"Unsupported domain kind: {config.kind}")
