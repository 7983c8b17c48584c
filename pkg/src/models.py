"""Pydantic models for problem, training, report and checkpoint schemas."""

import math
from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, Field, model_validator


# =============================================================================
# Density Models
# =============================================================================


class GaussianComponent(BaseModel):
    """One weighted Gaussian bump of a mixture.

    Euclidean mixtures use ``covariance``; manifold mixtures use ``scale``.
    """

    coefficient: float = Field(gt=0)
    mean: list[float]
    covariance: Optional[list[list[float]]] = None
    scale: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _check_covariance(self) -> "GaussianComponent":
        if self.covariance is None:
            return self
        d = len(self.mean)
        if len(self.covariance) != d or any(len(row) != d for row in self.covariance):
            raise ValueError(f"covariance must be {d}x{d} to match the mean")
        for i in range(d):
            for j in range(i + 1, d):
                if abs(self.covariance[i][j] - self.covariance[j][i]) > 1e-12:
                    raise ValueError("covariance must be symmetric")
        return self


class ImageGrid(BaseModel):
    """Raster density: pixel intensities in [0, 255] over a planar extent."""

    pixels: list[list[float]]
    extent: list[tuple[float, float]] = Field(
        default_factory=lambda: [(0.0, 1.0), (0.0, 1.0)]
    )
    intensity_scale: float = Field(10.0, gt=0)

    @model_validator(mode="after")
    def _check_raster(self) -> "ImageGrid":
        if not self.pixels or not self.pixels[0]:
            raise ValueError("image must have at least one pixel")
        width = len(self.pixels[0])
        if any(len(row) != width for row in self.pixels):
            raise ValueError("image rows must have equal length")
        if any(value < 0 for row in self.pixels for value in row):
            raise ValueError("image values must be nonnegative")
        if len(self.extent) != 2 or any(lo >= hi for lo, hi in self.extent):
            raise ValueError("image extent must be two increasing (lo, hi) pairs")
        return self


DensityKind = Literal[
    "euclidean_gaussian_mixture", "manifold_gaussian_mixture", "image_grid"
]


class DensitySpec(BaseModel):
    """Initial or target density of a transport problem."""

    kind: DensityKind
    components: list[GaussianComponent] = Field(default_factory=list)
    amplitude: float = Field(100.0, gt=0)
    image: Optional[ImageGrid] = None

    @model_validator(mode="after")
    def _check_kind(self) -> "DensitySpec":
        if self.kind == "image_grid":
            if self.image is None:
                raise ValueError("image_grid density needs an image")
            return self
        if not self.components:
            raise ValueError(f"{self.kind} needs at least one component")
        dims = {len(c.mean) for c in self.components}
        if len(dims) != 1:
            raise ValueError("all mixture components must share one dimension")
        if self.kind == "euclidean_gaussian_mixture":
            if any(c.covariance is None for c in self.components):
                raise ValueError("euclidean components need a covariance")
        elif any(c.scale is None for c in self.components):
            raise ValueError("manifold components need a scale")
        return self

    @property
    def dimension(self) -> int:
        if self.kind == "image_grid":
            return 2
        return len(self.components[0].mean)


# =============================================================================
# Geometry Models
# =============================================================================


class NoiseSpec(BaseModel):
    """Relative Gaussian noise on points (omega_x) and normals (omega_n).

    ``seed`` falls back to the collocation seed when left unset.
    """

    omega_x: float = Field(0.0, ge=0, le=1)
    omega_n: float = Field(0.0, ge=0, le=1)
    seed: Optional[int] = None


SurfaceName = Literal["sphere", "ellipsoid", "peanut", "torus", "opener"]


class EuclideanBox(BaseModel):
    """Axis-aligned box sampled on a cell-centered grid."""

    kind: Literal["euclidean_box"] = "euclidean_box"
    bounds: list[tuple[float, float]]
    grid_shape: list[int]

    @model_validator(mode="after")
    def _check_plan(self) -> "EuclideanBox":
        if len(self.bounds) != len(self.grid_shape):
            raise ValueError("grid_shape must have one entry per box axis")
        if any(lo >= hi for lo, hi in self.bounds):
            raise ValueError("box bounds must be increasing")
        if any(n < 1 for n in self.grid_shape):
            raise ValueError("grid_shape entries must be positive")
        return self

    @property
    def dimension(self) -> int:
        return len(self.bounds)


class PointCloudDomain(BaseModel):
    """Closed surface given by an implicit function or a point-cloud file."""

    kind: Literal["point_cloud"] = "point_cloud"
    surface: SurfaceName = "sphere"
    grid_resolution: Optional[int] = Field(None, ge=8)
    embed_4d: bool = False
    noise: Optional[NoiseSpec] = None
    cloud_file: Optional[str] = None

    @property
    def dimension(self) -> int:
        return 4 if self.embed_4d else 3


DomainConfig = Annotated[
    Union[EuclideanBox, PointCloudDomain], Field(discriminator="kind")
]


# =============================================================================
# Problem Models
# =============================================================================


class ProblemSpec(BaseModel):
    """Complete description of one transport problem."""

    name: str
    domain: DomainConfig
    rho0: DensitySpec
    rho1: DensitySpec
    eta: float = Field(ge=0)
    lambda_c: float = Field(ge=0)
    lambda_hj: float = Field(ge=0)
    lambda_ic: float = Field(ge=0)
    lambda_bc: Optional[float] = Field(None, ge=0)
    n_time: int = Field(10, ge=2)
    mode: Literal["OT", "UOT"]

    @model_validator(mode="after")
    def _check_consistency(self) -> "ProblemSpec":
        if (self.eta == 0) != (self.mode == "OT"):
            raise ValueError("eta must be 0 exactly when mode is OT")
        if self.lambda_bc is None:
            self.lambda_bc = self.lambda_ic
        for label, density in (("rho0", self.rho0), ("rho1", self.rho1)):
            if density.dimension != self.domain.dimension:
                raise ValueError(
                    f"{label} is {density.dimension}-dimensional but the domain "
                    f"is {self.domain.dimension}-dimensional"
                )
            if density.kind == "image_grid" and self.domain.kind != "euclidean_box":
                raise ValueError("image densities need a planar box domain")
        return self

    @property
    def dimension(self) -> int:
        return self.domain.dimension


# =============================================================================
# Training Models
# =============================================================================


class TrainConfig(BaseModel):
    """Optimizer, stopping rule and network architecture for one run."""

    learning_rate: float = Field(1e-3, gt=0)
    beta1: float = Field(0.9, gt=0, lt=1)
    beta2: float = Field(0.999, gt=0, lt=1)
    eps_adam: float = Field(1e-8, gt=0)
    max_iters: int = Field(20000, ge=1)
    stop_threshold: float = Field(0.1, gt=0)
    log_interval: int = Field(100, ge=1)
    seed: int = 0
    hidden_layers: int = Field(3, ge=0)
    width: int = Field(64, ge=1)

    def layer_dims(self, dimension: int) -> list[int]:
        """Layer widths for a field over (t, x) with x in R^dimension."""
        return [1 + dimension] + [self.width] * self.hidden_layers + [1]


# =============================================================================
# Report Models
# =============================================================================


LOSS_LOG_COLUMNS = ["iter", "L_c", "L_hj", "L_ic", "L_bc", "total", "W_M"]


class LossReport(BaseModel):
    """Loss components and cost estimate at one iteration."""

    iteration: int = Field(0, alias="iter")
    continuity: float = Field(alias="L_c")
    hamilton_jacobi: float = Field(alias="L_hj")
    endpoint: float = Field(alias="L_ic")
    boundary: float = Field(alias="L_bc")
    total: float
    cost: float = Field(alias="W_M")

    model_config = {"populate_by_name": True}

    def row(self) -> list[str]:
        """Loss-log CSV row in ``LOSS_LOG_COLUMNS`` order."""
        values = self.model_dump(by_alias=True)
        return [str(self.iteration)] + [
            f"{values[column]:.8e}" for column in LOSS_LOG_COLUMNS[1:]
        ]


class OracleCheck(BaseModel):
    """One named comparison of a measured value against an expected one."""

    name: str
    measured: float
    expected: float
    tolerance: float
    passed: bool = False

    @model_validator(mode="after")
    def _evaluate(self) -> "OracleCheck":
        bound = self.tolerance * max(1.0, abs(self.expected))
        self.passed = math.isfinite(self.measured) and abs(
            self.measured - self.expected
        ) <= bound
        return self


class OracleReport(BaseModel):
    """Collection of oracle checks."""

    checks: list[OracleCheck] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> list[OracleCheck]:
        return [check for check in self.checks if not check.passed]

    def add(
        self, name: str, measured: float, expected: float, tolerance: float
    ) -> OracleCheck:
        check = OracleCheck(
            name=name, measured=measured, expected=expected, tolerance=tolerance
        )
        self.checks.append(check)
        return check

    def merge(self, other: "OracleReport") -> "OracleReport":
        self.checks.extend(other.checks)
        return self

    def format_table(self) -> str:
        width = max([len(c.name) for c in self.checks] + [5])
        lines = [
            f"{'check':<{width}}  {'measured':>12}  {'expected':>12}  {'tol':>9}  result",
            "-" * (width + 50),
        ]
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            lines.append(
                f"{c.name:<{width}}  {c.measured:>12.4e}  {c.expected:>12.4e}  "
                f"{c.tolerance:>9.1e}  {status}"
            )
        return "\n".join(lines)


# =============================================================================
# Checkpoint Models
# =============================================================================


class NetworkHeader(BaseModel):
    """Architecture header written ahead of a network's parameters."""

    layer_dims: list[int]
    hidden_activation: str
    output_head: str
    seed: int
    parameter_count: int


class NetworkCheckpoint(BaseModel):
    """Network header plus parameters in the fixed flat ordering."""

    header: NetworkHeader
    parameters: list[float]


class TrainCheckpoint(BaseModel):
    """Both networks, Adam moments and best-so-far parameters."""

    rho: NetworkCheckpoint
    phi: NetworkCheckpoint
    first_moments: list[list[float]]
    second_moments: list[list[float]]
    iteration: int
    best_total: float
    best_iteration: int
    best_parameters: list[list[float]]
