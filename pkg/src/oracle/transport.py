"""Upwind finite-volume integration of the continuity equation with a source.

Solves d_t rho + div(rho grad phi) = (eta / 2) rho phi on a box with zero
flux through its walls. Face velocities come from the potential's gradient
at face centers; the source is applied after each transport step as the
exact factor exp(g dt) of the pointwise growth ODE.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np
import torch

from src.errors import DimensionMismatchError, UnboundedVelocityError
from src.export import Snapshot
from src.fieldnet import DTYPE, FieldNetwork, function_jet
from src.fieldnet.jets import ScalarField
from src.models import EuclideanBox
from src.problems.domains import cell_centers

logger = logging.getLogger(__name__)

# (t, points (M, d)) -> (phi (M,), grad phi (M, d))
Potential = Callable[[float, np.ndarray], tuple[np.ndarray, np.ndarray]]

MAX_SPEED = 1e6
MAX_GROWTH_STEP = 0.01
MAX_REFINEMENTS = 30


@dataclass
class FVGrid:
    """Cell-centered grid on an axis-aligned box (1D or 2D)."""

    bounds: list[tuple[float, float]]
    shape: tuple[int, ...]

    def __post_init__(self):
        self.shape = tuple(int(n) for n in self.shape)
        if len(self.bounds) != len(self.shape) or len(self.shape) not in (1, 2):
            raise DimensionMismatchError(
                "Finite-volume grids are 1D or 2D with one bound per axis",
                {"bounds": self.bounds, "shape": self.shape},
            )

    @classmethod
    def from_box(cls, box: EuclideanBox) -> "FVGrid":
        return cls(bounds=list(box.bounds), shape=tuple(box.grid_shape))

    @property
    def dimension(self) -> int:
        return len(self.shape)

    @property
    def spacing(self) -> np.ndarray:
        return np.array([(hi - lo) / n for (lo, hi), n in zip(self.bounds, self.shape)])

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self) -> list[np.ndarray]:
        return [cell_centers(lo, hi, n) for (lo, hi), n in zip(self.bounds, self.shape)]

    def centers(self) -> np.ndarray:
        """Cell centers in C order of ``shape``, shape (prod(shape), d)."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=1)

    def interior_faces(self, axis: int) -> tuple[np.ndarray, tuple[int, ...]]:
        """Centers of the faces between neighbouring cells along ``axis``."""
        lo = self.bounds[axis][0]
        coords = [
            lo + np.arange(1, self.shape[axis]) * self.spacing[axis] if i == axis else a
            for i, a in enumerate(self.axes())
        ]
        mesh = np.meshgrid(*coords, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=1), mesh[0].shape

    def mass(self, rho: np.ndarray) -> float:
        return float(rho.sum() * self.cell_volume)


@dataclass
class FVResult:
    density: np.ndarray
    steps: int
    masses: list[tuple[float, float]] = field(default_factory=list)


def field_potential(scalar_field: ScalarField) -> Potential:
    """Wrap a torch scalar field as a (phi, grad phi) callable on numpy points."""

    def potential(t: float, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = torch.as_tensor(points, dtype=DTYPE)
        jet = function_jet(scalar_field, torch.full((len(x),), t, dtype=DTYPE), x, hessian=False)
        return jet.u.numpy(), jet.grad_x.numpy()

    return potential


def network_potential(net: FieldNetwork) -> Potential:
    """Potential of a trained network, evaluated without building a Hessian."""
    return field_potential(net)


def _face_velocities(potential: Potential, grid: FVGrid, t: float) -> list[np.ndarray]:
    velocities = []
    for axis in range(grid.dimension):
        points, face_shape = grid.interior_faces(axis)
        if len(points) == 0:
            velocities.append(np.zeros(face_shape))
            continue
        _, grad = potential(t, points)
        velocities.append(np.asarray(grad)[:, axis].reshape(face_shape))
    return velocities


def _divergence(rho: np.ndarray, velocities: list[np.ndarray], grid: FVGrid) -> np.ndarray:
    """Upwind flux divergence; wall faces carry no flux."""
    total = np.zeros_like(rho)
    for axis, u in enumerate(velocities):
        n = rho.shape[axis]
        left = np.take(rho, np.arange(n - 1), axis=axis)
        right = np.take(rho, np.arange(1, n), axis=axis)
        flux = np.maximum(u, 0.0) * left + np.minimum(u, 0.0) * right
        pad = [(0, 0)] * rho.ndim
        pad[axis] = (1, 1)
        flux = np.pad(flux, pad)
        total += np.diff(flux, axis=axis) / grid.spacing[axis]
    return total


def _stable_step(velocities: list[np.ndarray], grid: FVGrid, cfl: float) -> float:
    rate = sum(
        float(np.abs(u).max()) / h if u.size else 0.0
        for u, h in zip(velocities, grid.spacing)
    )
    return cfl / rate if rate > 0 else np.inf


def fv_integrate_continuity(
    potential: Potential,
    rho0: np.ndarray,
    grid: FVGrid,
    eta: float,
    cfl: float = 0.5,
    t_final: float = 1.0,
    max_speed: float = MAX_SPEED,
    max_growth_step: float = MAX_GROWTH_STEP,
) -> FVResult:
    """Integrate rho from ``rho0`` (cell averages, shape ``grid.shape``) to ``t_final``.

    Steps obey ``dt * sum_a max|u_a| / h_a <= cfl``; a step that would make
    the density negative is retried with half the step.

    Raises:
        UnboundedVelocityError: If the face velocity is non-finite or exceeds ``max_speed``.
    """
    rho = np.asarray(rho0, dtype=np.float64).reshape(grid.shape).copy()
    centers = grid.centers()
    t, steps = 0.0, 0
    masses = [(0.0, grid.mass(rho))]

    while t < t_final - 1e-14:
        velocities = _face_velocities(potential, grid, t)
        peak = max((float(np.abs(u).max()) for u in velocities if u.size), default=0.0)
        if not np.isfinite(peak) or peak > max_speed:
            raise UnboundedVelocityError(
                f"Face velocity {peak:.3e} at t={t:.4f} exceeds {max_speed:.1e}",
                {"t": t, "speed": peak},
            )
        growth_cap = max_growth_step if eta != 0.0 else np.inf
        dt = min(_stable_step(velocities, grid, cfl), growth_cap, t_final - t)

        for _ in range(MAX_REFINEMENTS):
            transported = rho - dt * _divergence(rho, velocities, grid)
            if transported.min() >= -1e-14 * max(1.0, float(np.abs(rho).max())):
                break
            dt *= 0.5
        else:
            raise UnboundedVelocityError(
                f"Could not find a positivity-preserving step at t={t:.4f}", {"t": t}
            )

        if eta != 0.0:
            phi, _ = potential(t + 0.5 * dt, centers)
            growth = 0.5 * eta * np.asarray(phi).reshape(grid.shape)
            transported = transported * np.exp(growth * dt)

        rho = transported
        t += dt
        steps += 1
        masses.append((t, grid.mass(rho)))

    logger.info("Finite-volume integration: %d steps, final mass %.6e", steps, masses[-1][1])
    return FVResult(density=rho, steps=steps, masses=masses)


def mass_timeseries(
    snapshots: Iterable[Snapshot], weights: Optional[np.ndarray] = None
) -> list[tuple[float, float]]:
    """Quadrature mass sum_i w_i rho(t, x_i) for each snapshot."""
    series = []
    for snapshot in snapshots:
        w = snapshot.weights if weights is None else np.asarray(weights)
        if w is None:
            raise DimensionMismatchError(f"No weights for the snapshot at t={snapshot.t}")
        if len(w) != len(snapshot):
            raise DimensionMismatchError(
                f"{len(w)} weights for {len(snapshot)} snapshot points at t={snapshot.t}"
            )
        series.append((snapshot.t, float(np.sum(w * snapshot.rho))))
    return series
