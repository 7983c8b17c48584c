"""Catalog of named transport problems."""

import math
from typing import Callable, Optional

import numpy as np

from src.errors import UnknownPresetError
from src.models import (
    DensitySpec,
    EuclideanBox,
    GaussianComponent,
    ImageGrid,
    NoiseSpec,
    PointCloudDomain,
    ProblemSpec,
)
from src.problems.shapes import draw_shape

UNIT_MASS = 1.0 / math.sqrt(2.0 * math.pi)
SQRT_HALF = math.sqrt(0.5)


# =============================================================================
# Density Builders
# =============================================================================


def gaussian(mean, variance: float, coefficient: float = 1.0) -> GaussianComponent:
    d = len(mean)
    covariance = (variance * np.eye(d)).tolist()
    return GaussianComponent(coefficient=coefficient, mean=list(mean), covariance=covariance)


def euclidean_mixture(*components: GaussianComponent) -> DensitySpec:
    return DensitySpec(kind="euclidean_gaussian_mixture", components=list(components))


def manifold_bump(mean, scale: float = 0.01, coefficient: float = 1.0) -> GaussianComponent:
    return GaussianComponent(coefficient=coefficient, mean=list(mean), scale=scale)


def manifold_mixture(*components: GaussianComponent) -> DensitySpec:
    return DensitySpec(kind="manifold_gaussian_mixture", components=list(components))


def image_density(pixels: np.ndarray) -> DensitySpec:
    return DensitySpec(kind="image_grid", image=ImageGrid(pixels=pixels.tolist()))


def four_bumps() -> DensitySpec:
    """Half-weight bumps at the four equatorial poles of the unit-cube sphere."""
    return manifold_mixture(
        manifold_bump([0.5, 0.0, 0.5], coefficient=0.5),
        manifold_bump([0.5, 1.0, 0.5], coefficient=0.5),
        manifold_bump([0.0, 0.5, 0.5], coefficient=0.5),
        manifold_bump([1.0, 0.5, 0.5], coefficient=0.5),
    )


# =============================================================================
# Domains
# =============================================================================


def unit_square(n: int = 30) -> EuclideanBox:
    return EuclideanBox(bounds=[(0.0, 1.0), (0.0, 1.0)], grid_shape=[n, n])


def surface(
    name: str, embed_4d: bool = False, noise: Optional[NoiseSpec] = None
) -> PointCloudDomain:
    return PointCloudDomain(surface=name, embed_4d=embed_4d, noise=noise)


# =============================================================================
# Planar and 1D Problems
# =============================================================================


def _test_a() -> ProblemSpec:
    return ProblemSpec(
        name="A",
        domain=unit_square(),
        rho0=euclidean_mixture(gaussian([0.4, 0.4], 0.01)),
        rho1=euclidean_mixture(gaussian([0.6, 0.6], 0.005, coefficient=2.0)),
        eta=2.0,
        lambda_c=1000.0,
        lambda_hj=1000.0,
        lambda_ic=1000.0,
        mode="UOT",
    )


def _test_b() -> ProblemSpec:
    return ProblemSpec(
        name="B",
        domain=unit_square(),
        rho0=euclidean_mixture(gaussian([0.5, 0.5], 0.005)),
        rho1=euclidean_mixture(
            gaussian([0.3, 0.3], 0.005),
            gaussian([0.7, 0.3], 0.005),
            gaussian([0.7, 0.7], 0.005),
            gaussian([0.3, 0.7], 0.005),
        ),
        eta=2.0,
        lambda_c=1000.0,
        lambda_hj=1000.0,
        lambda_ic=1000.0,
        mode="UOT",
    )


def _test_c(eta: float, name: str) -> Callable[[], ProblemSpec]:
    def build() -> ProblemSpec:
        return ProblemSpec(
            name=name,
            domain=EuclideanBox(bounds=[(0.0, 2.0)], grid_shape=[800]),
            rho0=euclidean_mixture(gaussian([0.7], 0.005)),
            rho1=euclidean_mixture(
                gaussian([0.7], 0.005, coefficient=0.3),
                gaussian([1.3], 0.005, coefficient=0.7),
            ),
            eta=eta,
            lambda_c=100.0,
            lambda_hj=100.0,
            lambda_ic=1000.0,
            mode="UOT",
        )

    return build


def _desk_translation() -> ProblemSpec:
    return ProblemSpec(
        name="desk-translation",
        domain=unit_square(),
        rho0=euclidean_mixture(gaussian([0.4, 0.4], 0.005, coefficient=UNIT_MASS)),
        rho1=euclidean_mixture(gaussian([0.6, 0.6], 0.005, coefficient=UNIT_MASS)),
        eta=0.0,
        lambda_c=1000.0,
        lambda_hj=1000.0,
        lambda_ic=1000.0,
        mode="OT",
    )


def _desk_growth() -> ProblemSpec:
    return ProblemSpec(
        name="desk-growth",
        domain=unit_square(),
        rho0=euclidean_mixture(gaussian([0.5, 0.5], 0.005, coefficient=UNIT_MASS)),
        rho1=euclidean_mixture(gaussian([0.5, 0.5], 0.005, coefficient=4 * UNIT_MASS)),
        eta=2.0,
        lambda_c=1000.0,
        lambda_hj=1000.0,
        lambda_ic=1000.0,
        mode="UOT",
    )


def _shape_transfer(name: str, source: str, target: str) -> Callable[[], ProblemSpec]:
    def build() -> ProblemSpec:
        return ProblemSpec(
            name=name,
            domain=unit_square(28),
            rho0=image_density(draw_shape(source)),
            rho1=image_density(draw_shape(target)),
            eta=2.0,
            lambda_c=1000.0,
            lambda_hj=1000.0,
            lambda_ic=1000.0,
            mode="UOT",
        )

    return build


# =============================================================================
# Surface Problems
# =============================================================================


PEANUT_TIP = math.sqrt(1 + math.sqrt(6 / 5)) / 4
TORUS_OFFSET = 4 * SQRT_HALF / 10
OPENER_TIP = math.sqrt((1 + math.sqrt(1 + 2 * math.sqrt(1 / 15))) / 10) / 2

SURFACE_ENDPOINTS = {
    "Sphere": ("sphere", [0.5, 0.5, 0.0], [0.5, 0.5, 1.0]),
    "Ellipsoid": (
        "ellipsoid",
        [0.5, 0.5, (6 + math.sqrt(6)) / 12],
        [0.5, 0.5, (6 - math.sqrt(6)) / 12],
    ),
    "Peanut": ("peanut", [0.5 + PEANUT_TIP, 0.5, 0.5], [0.5 - PEANUT_TIP, 0.5, 0.5]),
    "Torus": (
        "torus",
        [0.5 + TORUS_OFFSET, 0.5 + TORUS_OFFSET, 0.5],
        [0.5 - TORUS_OFFSET, 0.5 - TORUS_OFFSET, 0.5],
    ),
    "Opener": ("opener", [0.5 + OPENER_TIP, 0.5, 0.5], [0.5, 0.5 - OPENER_TIP, 0.5]),
}


def _surface_transport(
    name: str, surface_id: str, start, end, noise: Optional[NoiseSpec] = None
) -> Callable[[], ProblemSpec]:
    def build() -> ProblemSpec:
        return ProblemSpec(
            name=name,
            domain=surface(surface_id, noise=noise),
            rho0=manifold_mixture(manifold_bump(start)),
            rho1=manifold_mixture(manifold_bump(end)),
            eta=0.0,
            lambda_c=1.0,
            lambda_hj=1.0,
            lambda_ic=1000.0,
            mode="OT",
        )

    return build


def _sphere_4d(name: str, targets: list[list[float]]) -> Callable[[], ProblemSpec]:
    def build() -> ProblemSpec:
        return ProblemSpec(
            name=name,
            domain=surface("sphere", embed_4d=True),
            rho0=manifold_mixture(manifold_bump([0.5, 0.5, SQRT_HALF, SQRT_HALF], scale=0.05)),
            rho1=manifold_mixture(*[manifold_bump(mean, scale=0.05) for mean in targets]),
            eta=0.0,
            lambda_c=10.0,
            lambda_hj=10.0,
            lambda_ic=1000.0,
            mode="OT",
        )

    return build


def _sphere_merge_split(name: str, merge: bool) -> Callable[[], ProblemSpec]:
    def build() -> ProblemSpec:
        single = manifold_mixture(manifold_bump([0.5, 0.5, 1.0]))
        return ProblemSpec(
            name=name,
            domain=surface("sphere"),
            rho0=four_bumps() if merge else single,
            rho1=single if merge else four_bumps(),
            eta=2.0,
            lambda_c=1.0,
            lambda_hj=1.0,
            lambda_ic=1000.0,
            mode="UOT",
        )

    return build


# =============================================================================
# Registry
# =============================================================================


QUARTER = math.sqrt(2) / 4

PRESETS: dict[str, Callable[[], ProblemSpec]] = {
    "A": _test_a,
    "B": _test_b,
    "C-eta100": _test_c(100.0, "C-eta100"),
    "C-eta1": _test_c(1.0, "C-eta1"),
    "C-eta1e-6": _test_c(1e-6, "C-eta1e-6"),
    **{
        name: _surface_transport(name, surface_id, start, end)
        for name, (surface_id, start, end) in SURFACE_ENDPOINTS.items()
    },
    "S-G4": _sphere_4d("S-G4", [[0.5, 0.5, 0.0, 0.0]]),
    "S-MG4": _sphere_4d(
        "S-MG4",
        [
            [1.0, 0.5, QUARTER, QUARTER],
            [0.0, 0.5, QUARTER, QUARTER],
            [0.5, 1.0, QUARTER, QUARTER],
            [0.5, 0.0, QUARTER, QUARTER],
        ],
    ),
    "M1": _sphere_merge_split("M1", merge=True),
    "M2": _sphere_merge_split("M2", merge=False),
}

NOISE_LEVELS = (1, 5, 10)


def _noisy_spheres() -> dict[str, Callable[[], ProblemSpec]]:
    _, start, end = SURFACE_ENDPOINTS["Sphere"]
    variants = {
        "n": lambda omega: NoiseSpec(omega_n=omega),
        "x": lambda omega: NoiseSpec(omega_x=omega),
        "xn": lambda omega: NoiseSpec(omega_x=omega, omega_n=omega),
    }
    return {
        f"Sphere-{tag}{level}": _surface_transport(
            f"Sphere-{tag}{level}", "sphere", start, end, noise(level / 100)
        )
        for tag, noise in variants.items()
        for level in NOISE_LEVELS
    }


PRESETS.update(_noisy_spheres())
PRESETS.update(
    {
        "ST-disc-hexagram": _shape_transfer("ST-disc-hexagram", "disc", "hexagram"),
        "ST-triangle-smiley": _shape_transfer("ST-triangle-smiley", "triangle", "smiley"),
        "ST-digits": _shape_transfer("ST-digits", "one", "seven"),
        "desk-translation": _desk_translation,
        "desk-growth": _desk_growth,
    }
)


def list_presets() -> list[str]:
    return list(PRESETS)


def build_preset(test_id: str) -> ProblemSpec:
    """Build the problem registered under ``test_id``."""
    try:
        builder = PRESETS[test_id]
    except KeyError:
        raise UnknownPresetError(
            f"Unknown preset: {test_id}", {"available": list_presets()}
        ) from None
    return builder()
