"""Optimality-system residuals, the training loss and transport-cost estimates.

The continuity and Hamilton-Jacobi residuals use the frozen-normal form of
the tangential operators: at each sample P = I - N N^T is held constant, so
div(rho P grad phi) becomes grad rho . P grad phi + rho trace(P H_phi).
On boxes the frame is empty and P is the identity.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import torch

from src.errors import NonFiniteJetError, TrainingDivergedError
from src.fieldnet import DTYPE, FieldJet, FieldNetwork, eval_jet
from src.geometry import projection_apply, tangential_hessian_trace
from src.models import LossReport, ProblemSpec
from src.problems import BoundaryCollocation, CollocationSet, EndpointSamples

logger = logging.getLogger(__name__)


@dataclass
class DerivedFields:
    """Velocity v = P grad phi and growth rate g = (eta / 2) phi."""

    v: torch.Tensor
    g: torch.Tensor


def _require_finite(jet: FieldJet, label: str) -> None:
    if not jet.is_finite():
        raise NonFiniteJetError(f"Non-finite values in the {label} jet")


def derived_fields(jet_phi: FieldJet, frame: Optional[torch.Tensor], eta: float) -> DerivedFields:
    return DerivedFields(
        v=projection_apply(frame, jet_phi.grad_x, check=False),
        g=0.5 * eta * jet_phi.u,
    )


def continuity_residual(
    jet_rho: FieldJet, jet_phi: FieldJet, frame: Optional[torch.Tensor], eta: float
) -> torch.Tensor:
    """r_c = rho_t + grad rho . P grad phi + rho trace(P H_phi) - (eta / 2) rho phi."""
    _require_finite(jet_rho, "density")
    _require_finite(jet_phi, "potential")
    if jet_phi.hess_x is None:
        raise NonFiniteJetError("The potential jet needs a Hessian for the continuity residual")
    velocity = projection_apply(frame, jet_phi.grad_x, check=False)
    divergence = tangential_hessian_trace(frame, jet_phi.hess_x)
    return (
        jet_rho.u_t
        + (jet_rho.grad_x * velocity).sum(dim=-1)
        + jet_rho.u * divergence
        - 0.5 * eta * jet_rho.u * jet_phi.u
    )


def hj_residual(jet_phi: FieldJet, frame: Optional[torch.Tensor], eta: float) -> torch.Tensor:
    """r_hj = phi_t + |P grad phi|^2 / 2 + (eta / 4) phi^2."""
    _require_finite(jet_phi, "potential")
    velocity = projection_apply(frame, jet_phi.grad_x, check=False)
    return jet_phi.u_t + 0.5 * (velocity * velocity).sum(dim=-1) + 0.25 * eta * jet_phi.u**2


def endpoint_residual(
    net_rho: FieldNetwork, spec: ProblemSpec, endpoints: EndpointSamples
) -> torch.Tensor:
    """Mean over nodes of (rho(0, x) - rho0(x))^2 + (rho(1, x) - rho1(x))^2."""
    net_rho.bind(spec.dimension)
    x = endpoints.points
    zeros = torch.zeros(len(endpoints), dtype=DTYPE)
    start = net_rho(zeros, x)
    end = net_rho(zeros + 1.0, x)
    return ((start - endpoints.rho0) ** 2 + (end - endpoints.rho1) ** 2).mean()


def boundary_flux_residual(
    net_rho: FieldNetwork, net_phi: FieldNetwork, boundary: Optional[BoundaryCollocation]
) -> torch.Tensor:
    """Mean of (rho grad phi . n)^2 over boundary nodes; zero without a boundary."""
    if boundary is None:
        logger.warning("Boundary flux requested on a domain without boundary; using 0")
        return torch.zeros((), dtype=DTYPE)
    jet_phi = eval_jet(net_phi, boundary.times, boundary.points, create_graph=True, hessian=False)
    rho = net_rho(boundary.times, boundary.points)
    flux = rho * (jet_phi.grad_x * boundary.normals).sum(dim=-1)
    return (flux**2).mean()


def _cost_density(rho: torch.Tensor, fields: DerivedFields, phi: torch.Tensor, eta: float):
    kinetic = 0.5 * rho * (fields.v * fields.v).sum(dim=-1)
    return kinetic + 0.25 * eta * rho * phi**2


@dataclass
class LossTerms:
    """Differentiable loss components for one evaluation."""

    continuity: torch.Tensor
    hamilton_jacobi: torch.Tensor
    endpoint: torch.Tensor
    boundary: torch.Tensor
    total: torch.Tensor
    cost: torch.Tensor

    def report(self, iteration: int = 0) -> LossReport:
        values = {
            "L_c": float(self.continuity),
            "L_hj": float(self.hamilton_jacobi),
            "L_ic": float(self.endpoint),
            "L_bc": float(self.boundary),
            "total": float(self.total),
            "W_M": float(self.cost),
        }
        if not all(math.isfinite(value) for value in values.values()):
            raise TrainingDivergedError(
                f"Non-finite loss at iteration {iteration}: {values}", iteration=iteration
            )
        return LossReport(iter=iteration, **values)


def interior_jets(
    net_rho: FieldNetwork,
    net_phi: FieldNetwork,
    collocation: CollocationSet,
    create_graph: bool,
    hessian: bool = True,
) -> tuple[FieldJet, FieldJet]:
    t, x = collocation.interior_t, collocation.interior_x
    jet_rho = eval_jet(net_rho, t, x, create_graph=create_graph, hessian=False)
    jet_phi = eval_jet(net_phi, t, x, create_graph=create_graph, hessian=hessian)
    return jet_rho, jet_phi


def assemble_loss(
    net_rho: FieldNetwork,
    net_phi: FieldNetwork,
    collocation: CollocationSet,
    spec: ProblemSpec,
) -> LossTerms:
    """Weighted sum of the mean-square residuals, differentiable in both networks."""
    jet_rho, jet_phi = interior_jets(net_rho, net_phi, collocation, create_graph=True)
    frames = collocation.interior_frames

    continuity = (continuity_residual(jet_rho, jet_phi, frames, spec.eta) ** 2).mean()
    hamilton_jacobi = (hj_residual(jet_phi, frames, spec.eta) ** 2).mean()
    endpoint = endpoint_residual(net_rho, spec, collocation.endpoints)
    if collocation.boundary is not None:
        boundary = boundary_flux_residual(net_rho, net_phi, collocation.boundary)
    else:
        boundary = torch.zeros((), dtype=DTYPE)

    total = (
        spec.lambda_c * continuity
        + spec.lambda_hj * hamilton_jacobi
        + spec.lambda_ic * endpoint
        + spec.lambda_bc * boundary
    )
    with torch.no_grad():
        fields = derived_fields(jet_phi.detach(), frames, spec.eta)
        density = _cost_density(jet_rho.u.detach(), fields, jet_phi.u.detach(), spec.eta)
        cost = (collocation.interior_weights * density).sum()
    return LossTerms(continuity, hamilton_jacobi, endpoint, boundary, total, cost)


def total_loss(
    net_rho: FieldNetwork,
    net_phi: FieldNetwork,
    collocation: CollocationSet,
    spec: ProblemSpec,
    iteration: int = 0,
) -> LossReport:
    return assemble_loss(net_rho, net_phi, collocation, spec).report(iteration)


def wfr_cost(
    net_rho: FieldNetwork,
    net_phi: FieldNetwork,
    collocation: CollocationSet,
    spec: ProblemSpec,
) -> float:
    """Quadrature of rho |v|^2 / 2 + (eta / 4) rho phi^2 over the interior nodes.

    The growth penalty rho g^2 / eta is written through g = (eta / 2) phi so
    that eta = 0 needs no division.
    """
    jet_rho, jet_phi = interior_jets(
        net_rho, net_phi, collocation, create_graph=False, hessian=False
    )
    fields = derived_fields(jet_phi, collocation.interior_frames, spec.eta)
    density = _cost_density(jet_rho.u, fields, jet_phi.u, spec.eta)
    return float((collocation.interior_weights * density).sum())


def source_transport_split(
    net_rho: FieldNetwork,
    net_phi: FieldNetwork,
    collocation: CollocationSet,
    spec: ProblemSpec,
) -> tuple[float, float]:
    """Time-integrated source effort S = sum w rho g^2 and transport effort T = sum w rho |v|^2."""
    jet_rho, jet_phi = interior_jets(
        net_rho, net_phi, collocation, create_graph=False, hessian=False
    )
    fields = derived_fields(jet_phi, collocation.interior_frames, spec.eta)
    weights = collocation.interior_weights
    source = (weights * jet_rho.u * fields.g**2).sum()
    transport = (weights * jet_rho.u * (fields.v * fields.v).sum(dim=-1)).sum()
    return float(source), float(transport)
