"""Closed-form (rho, phi) pairs that solve the optimality system exactly.

Growth pair (any eta > 0, no transport):
    phi(t) = phi0 / (1 + eta phi0 t / 4),  rho(t, x) = rho0(x) (1 + eta phi0 t / 4)^2

Translation pair (eta = 0):
    phi(t, x) = a . x - t |a|^2 / 2,  rho(t, x) = rho_G(x - t a)
"""

from dataclasses import dataclass

import numpy as np
import torch

from src.errors import InvalidParameterError
from src.fieldnet import DTYPE, FieldJet, function_jet
from src.fieldnet.jets import ScalarField
from src.residuals import continuity_residual, hj_residual


@dataclass
class ManufacturedPair:
    rho: ScalarField
    phi: ScalarField
    eta: float
    dimension: int

    def jets(self, t, x, hessian: bool = True) -> tuple[FieldJet, FieldJet]:
        return (
            function_jet(self.rho, t, x, hessian=False),
            function_jet(self.phi, t, x, hessian=hessian),
        )

    def residuals(self, t, x) -> tuple[torch.Tensor, torch.Tensor]:
        """Continuity and Hamilton-Jacobi residuals of the pair in flat space."""
        jet_rho, jet_phi = self.jets(t, x)
        return (
            continuity_residual(jet_rho, jet_phi, None, self.eta),
            hj_residual(jet_phi, None, self.eta),
        )


def gaussian_bump(mean, covariance) -> ScalarField:
    """Torch version of a single Euclidean Gaussian component (spatial part only)."""
    mean = torch.as_tensor(np.asarray(mean, dtype=np.float64))
    covariance = np.asarray(covariance, dtype=np.float64)
    precision = torch.as_tensor(np.linalg.inv(covariance))
    normalizer = 1.0 / np.sqrt(2 * np.pi * np.linalg.det(covariance))

    def bump(t: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
        offset = x - mean
        return normalizer * torch.exp(-0.5 * torch.einsum("bi,ij,bj->b", offset, precision, offset))

    return bump


def growth_factor(phi0: float, eta: float) -> float:
    """Terminal mass ratio rho(1) / rho(0) of the growth pair."""
    return (1.0 + 0.25 * eta * phi0) ** 2


def growth_pair(
    phi0: float, eta: float, dimension: int = 2, mean=None, covariance=None
) -> ManufacturedPair:
    if eta <= 0:
        raise InvalidParameterError("The growth pair needs eta > 0", {"eta": eta})
    if 1.0 + 0.25 * eta * phi0 <= 0:
        raise InvalidParameterError(
            "phi0 makes the growth pair vanish before t = 1", {"phi0": phi0, "eta": eta}
        )
    mean = [0.5] * dimension if mean is None else mean
    covariance = 0.005 * np.eye(dimension) if covariance is None else covariance
    profile = gaussian_bump(mean, covariance)

    def phi(t: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
        return phi0 / (1.0 + 0.25 * eta * phi0 * t) + 0.0 * x.sum(dim=-1)

    def rho(t: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
        return profile(t, x) * (1.0 + 0.25 * eta * phi0 * t) ** 2

    return ManufacturedPair(rho=rho, phi=phi, eta=eta, dimension=dimension)


def translation_pair(velocity, mean, covariance) -> ManufacturedPair:
    a = torch.as_tensor(np.asarray(velocity, dtype=np.float64))
    profile = gaussian_bump(mean, covariance)
    speed_squared = float(a @ a)

    def phi(t: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
        return x @ a - 0.5 * speed_squared * t

    def rho(t: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
        return profile(t, x - t.unsqueeze(-1) * a)

    return ManufacturedPair(rho=rho, phi=phi, eta=0.0, dimension=a.numel())


def random_space_time(count: int, dimension: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Uniform (t, x) samples in [0, 1] x [0, 1]^d."""
    rng = np.random.default_rng(seed)
    return rng.uniform(size=count), rng.uniform(size=(count, dimension))


def max_residuals(pair: ManufacturedPair, count: int = 1000, seed: int = 0) -> tuple[float, float]:
    t, x = random_space_time(count, pair.dimension, seed)
    r_c, r_hj = pair.residuals(torch.as_tensor(t, dtype=DTYPE), torch.as_tensor(x, dtype=DTYPE))
    return float(r_c.abs().max()), float(r_hj.abs().max())
