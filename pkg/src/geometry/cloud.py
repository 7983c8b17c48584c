"""Point clouds with normal frames: embedding, noise and CSV files."""

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from src.errors import DimensionMismatchError, FrameError
from src.geometry.projection import frame_deviation
from src.models import NoiseSpec

logger = logging.getLogger(__name__)

ORTHONORMAL_TOLERANCE = 1e-8

SQRT_HALF = np.sqrt(2.0) / 2.0

# Rotation of the z-w plane used to embed a 3D surface in R^4.
ROTATION_4D = np.array(
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, SQRT_HALF, -SQRT_HALF],
        [0.0, 0.0, SQRT_HALF, SQRT_HALF],
    ]
)


@dataclass
class SurfacePointCloud:
    """Samples of a closed surface with orthonormal normal frames.

    ``normal_bases`` has shape (N, d, k). ``area_known`` is False when the
    weights are unit placeholders rather than |surface| / N.
    """

    points: np.ndarray
    normal_bases: np.ndarray
    weights: np.ndarray
    area_known: bool = True
    source: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        self.normal_bases = np.asarray(self.normal_bases, dtype=np.float64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        n, d = self.points.shape
        if self.normal_bases.ndim == 2:
            self.normal_bases = self.normal_bases[:, :, None]
        if self.normal_bases.shape[:2] != (n, d) or self.weights.shape != (n,):
            raise DimensionMismatchError(
                "points, normal frames and weights disagree in shape",
                {
                    "points": list(self.points.shape),
                    "normal_bases": list(self.normal_bases.shape),
                    "weights": list(self.weights.shape),
                },
            )

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    @property
    def codimension(self) -> int:
        return self.normal_bases.shape[2]

    def validate(self) -> "SurfacePointCloud":
        deviation = frame_deviation(self.normal_bases)
        if deviation > ORTHONORMAL_TOLERANCE:
            raise FrameError(
                f"Cloud normal frames deviate from orthonormal by {deviation:.3e}"
            )
        if np.any(self.weights <= 0):
            raise DimensionMismatchError("Cloud quadrature weights must be positive")
        return self

    def to_dict(self) -> dict:
        return {
            "count": len(self),
            "dimension": self.dimension,
            "codimension": self.codimension,
            "total_weight": float(self.weights.sum()),
            "area_known": self.area_known,
            "source": self.source,
        }


def orthonormalize(frames: np.ndarray) -> np.ndarray:
    """Orthonormalize the columns of each (d, k) frame, keeping their orientation."""
    q, r = np.linalg.qr(frames)
    signs = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    signs[signs == 0] = 1.0
    return q * signs[:, None, :]


def rotate_embed_4d(cloud: SurfacePointCloud) -> SurfacePointCloud:
    """Lift a 3D surface cloud to R^4 through (x, y, z, 0) and the z-w rotation.

    The normal space becomes two-dimensional: the rotated surface normal and
    the rotated w axis.
    """
    if cloud.dimension != 3 or cloud.codimension != 1:
        raise DimensionMismatchError("rotate_embed_4d expects a 3D cloud with one normal")
    n = len(cloud)
    lifted = np.hstack([cloud.points, np.zeros((n, 1))])
    normals = np.hstack([cloud.normal_bases[:, :, 0], np.zeros((n, 1))])
    w_axis = np.tile(ROTATION_4D[:, 3], (n, 1))
    frames = np.stack([normals @ ROTATION_4D.T, w_axis], axis=2)
    return SurfacePointCloud(
        points=lifted @ ROTATION_4D.T,
        normal_bases=orthonormalize(frames),
        weights=cloud.weights.copy(),
        area_known=cloud.area_known,
        source=f"{cloud.source or 'cloud'}-4d",
    )


def _tangential(frames: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Project noise off the normal space and restore unit spread per frame entry."""
    tangential = noise - frames @ np.einsum("ndk,ndj->nkj", frames, noise)
    spread = tangential.std(axis=0)
    return tangential / np.where(spread > 0, spread, 1.0)


def add_noise(
    cloud: SurfacePointCloud, spec: NoiseSpec, seed: Optional[int] = None
) -> SurfacePointCloud:
    """Perturb points and normals with relative Gaussian noise.

    Each coordinate gets noise with standard deviation omega * sigma, where
    sigma is that coordinate's standard deviation over the clean cloud.
    Normal noise is drawn in the tangent directions of each frame and rescaled
    so that every frame entry moves with standard deviation omega_n * sigma_n.
    ``spec.seed`` wins over ``seed``. Perturbed frames are re-orthonormalized.
    """
    rng = np.random.default_rng(spec.seed if spec.seed is not None else (seed or 0))
    point_noise = rng.standard_normal(cloud.points.shape)
    normal_noise = rng.standard_normal(cloud.normal_bases.shape)

    points = cloud.points.copy()
    if spec.omega_x > 0:
        points = points + spec.omega_x * cloud.points.std(axis=0) * point_noise

    frames = cloud.normal_bases.copy()
    if spec.omega_n > 0:
        sigma_n = cloud.normal_bases.std(axis=0)
        shift = spec.omega_n * sigma_n * _tangential(frames, normal_noise)
        frames = orthonormalize(frames + shift)

    logger.info(
        "Added noise to %d points (omega_x=%g, omega_n=%g)",
        len(cloud),
        spec.omega_x,
        spec.omega_n,
    )
    return SurfacePointCloud(
        points=points,
        normal_bases=frames,
        weights=cloud.weights.copy(),
        area_known=cloud.area_known,
        source=cloud.source,
    )


def cloud_header(dimension: int, codimension: int) -> list[str]:
    columns = [f"x{i}" for i in range(dimension)]
    columns += [f"n{j}_{i}" for j in range(codimension) for i in range(dimension)]
    return columns + ["w"]


def write_cloud_csv(cloud: SurfacePointCloud, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    normals = cloud.normal_bases.transpose(0, 2, 1).reshape(len(cloud), -1)
    table = np.hstack([cloud.points, normals, cloud.weights[:, None]])
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(cloud_header(cloud.dimension, cloud.codimension))
        writer.writerows([[f"{value:.8e}" for value in row] for row in table])
    return path


def read_cloud_csv(path: Union[str, Path], area_known: bool = False) -> SurfacePointCloud:
    """Read a cloud written by ``write_cloud_csv`` or supplied by the user."""
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise DimensionMismatchError(f"Point-cloud file {path} is empty")
    header, body = rows[0], rows[1:]
    dimension = sum(1 for name in header if name.startswith("x"))
    codimension = sum(1 for name in header if name.startswith("n")) // max(dimension, 1)
    if header != cloud_header(dimension, codimension):
        raise DimensionMismatchError(
            f"Unexpected point-cloud header in {path}", {"header": header}
        )
    table = np.array([[float(value) for value in row] for row in body], dtype=np.float64)
    table = table.reshape(len(body), len(header))
    normals = table[:, dimension:-1].reshape(len(body), codimension, dimension)
    return SurfacePointCloud(
        points=table[:, :dimension],
        normal_bases=orthonormalize(normals.transpose(0, 2, 1)),
        weights=table[:, -1],
        area_known=area_known,
        source=str(path),
    ).validate()
