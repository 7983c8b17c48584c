"""Closed-form and raster densities used as transport endpoints."""

import math

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.stats import multivariate_normal

from src.errors import DimensionMismatchError, ImageFormatError, SingularCovarianceError
from src.models import DensitySpec, ImageGrid


def _as_points(x, dimension: int) -> tuple[np.ndarray, bool]:
    points = np.asarray(x, dtype=np.float64)
    single = points.ndim == 1
    points = np.atleast_2d(points)
    if points.shape[1] != dimension:
        raise DimensionMismatchError(
            f"density is {dimension}-dimensional, points are {points.shape[1]}-dimensional"
        )
    return points, single


def _result(values: np.ndarray, single: bool):
    return float(values[0]) if single else values


def eval_euclidean_gaussian(spec: DensitySpec, x):
    """Mixture of sum_i c_i (2 pi)^(-1/2) |Sigma_i|^(-1/2) exp(-(x-mu_i)^T Sigma_i^-1 (x-mu_i) / 2).

    The normalizer uses (2 pi)^(1/2) whatever the dimension, so in 2D the
    values are (2 pi)^(1/2) times the standard bivariate normal density.
    """
    points, single = _as_points(x, spec.dimension)
    rescale = (2.0 * math.pi) ** ((spec.dimension - 1) / 2.0)
    total = np.zeros(len(points))
    for component in spec.components:
        try:
            gaussian = multivariate_normal(
                mean=component.mean, cov=component.covariance, allow_singular=False
            )
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SingularCovarianceError(
                f"Covariance of the component at {component.mean} is not positive definite",
                {"covariance": component.covariance},
            ) from exc
        total += component.coefficient * rescale * np.atleast_1d(gaussian.pdf(points))
    return _result(total, single)


def eval_manifold_gaussian(spec: DensitySpec, x):
    """Mixture of c * sum_i coef_i exp(-|mu_i - x|^2 / sigma_i), with c = ``spec.amplitude``."""
    points, single = _as_points(x, spec.dimension)
    total = np.zeros(len(points))
    for component in spec.components:
        squared = np.sum((points - np.asarray(component.mean)) ** 2, axis=1)
        total += component.coefficient * np.exp(-squared / component.scale)
    return _result(spec.amplitude * total, single)


def pixel_centers(image: ImageGrid) -> tuple[np.ndarray, np.ndarray]:
    """Ascending x and y coordinates of pixel centers; row 0 is the top (high y)."""
    rows, cols = len(image.pixels), len(image.pixels[0])
    (x_lo, x_hi), (y_lo, y_hi) = image.extent
    xs = x_lo + (np.arange(cols) + 0.5) * (x_hi - x_lo) / cols
    ys = y_lo + (np.arange(rows) + 0.5) * (y_hi - y_lo) / rows
    return xs, ys


def eval_image_density(spec: DensitySpec, x):
    """Bilinear interpolation of pixel/255 * intensity_scale between pixel centers.

    Points outside the extent give 0; points between the extent and the
    outermost centers take the nearest border value.
    """
    image = spec.image
    if image is None:
        raise ImageFormatError("image_grid density has no image")
    points, single = _as_points(x, 2)
    xs, ys = pixel_centers(image)
    pixels = np.asarray(image.pixels, dtype=np.float64)
    values = pixels[::-1].T * (image.intensity_scale / 255.0)
    interpolator = RegularGridInterpolator((xs, ys), values, method="linear")

    (x_lo, x_hi), (y_lo, y_hi) = image.extent
    inside = (
        (points[:, 0] >= x_lo)
        & (points[:, 0] <= x_hi)
        & (points[:, 1] >= y_lo)
        & (points[:, 1] <= y_hi)
    )
    clamped = np.column_stack(
        [np.clip(points[:, 0], xs[0], xs[-1]), np.clip(points[:, 1], ys[0], ys[-1])]
    )
    result = np.zeros(len(points))
    if inside.any():
        result[inside] = interpolator(clamped[inside])
    return _result(result, single)


EVALUATORS = {
    "euclidean_gaussian_mixture": eval_euclidean_gaussian,
    "manifold_gaussian_mixture": eval_manifold_gaussian,
    "image_grid": eval_image_density,
}


def evaluate_density(spec: DensitySpec, x):
    """Evaluate any density kind at one point (d,) or a batch (N, d)."""
    return EVALUATORS[spec.kind](spec, x)
