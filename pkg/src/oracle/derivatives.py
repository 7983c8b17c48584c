"""Finite-difference checks of network jets and parameter gradients."""

import logging
from typing import Callable, Sequence

import torch

from src.fieldnet import DTYPE, FieldNetwork, eval_jet, parameter_gradients
from src.models import OracleReport

logger = logging.getLogger(__name__)

JET_TOLERANCES = {"value": 1e-5, "time": 1e-5, "gradient": 1e-5, "hessian": 1e-4}


def _relative(error: torch.Tensor, reference: torch.Tensor) -> float:
    scale = torch.clamp(reference.abs(), min=1.0)
    return float((error.abs() / scale).max())


def fd_errors(net: FieldNetwork, t, x, h: float = 1e-4) -> dict[str, float]:
    """Largest relative deviation of each jet component from central differences.

    Hessian entries come from second differences of the value alone, so no
    automatic derivative enters the reference.
    """
    t = torch.as_tensor(t, dtype=DTYPE).reshape(-1)
    x = torch.as_tensor(x, dtype=DTYPE)
    if x.dim() == 1:
        x = x.unsqueeze(0)
    if t.numel() == 1:
        t = t.expand(x.shape[0])
    net.bind(x.shape[1])
    jet = eval_jet(net, t, x)
    d = x.shape[1]
    eye = torch.eye(d, dtype=DTYPE) * h

    with torch.no_grad():
        u = net(t, x)

        def at(shift: torch.Tensor) -> torch.Tensor:
            return net(t, x + shift)

        u_t = (net(t + h, x) - net(t - h, x)) / (2 * h)
        grad = torch.stack([(at(eye[i]) - at(-eye[i])) / (2 * h) for i in range(d)], dim=1)
        hess = torch.empty((x.shape[0], d, d), dtype=DTYPE)
        for i in range(d):
            hess[:, i, i] = (at(eye[i]) - 2 * u + at(-eye[i])) / h**2
            for j in range(i + 1, d):
                hess[:, i, j] = (
                    at(eye[i] + eye[j])
                    - at(eye[i] - eye[j])
                    - at(-eye[i] + eye[j])
                    + at(-eye[i] - eye[j])
                ) / (4 * h**2)
                hess[:, j, i] = hess[:, i, j]

    return {
        "value": _relative(jet.u - u, u),
        "time": _relative(jet.u_t - u_t, u_t),
        "gradient": _relative(jet.grad_x - grad, grad),
        "hessian": _relative(jet.hess_x - hess, hess),
    }


def fd_check(
    net: FieldNetwork,
    t,
    x,
    h: float = 1e-4,
    tolerances: dict[str, float] = JET_TOLERANCES,
    label: str = "fd",
) -> OracleReport:
    """Compare every jet component of ``net`` at (t, x) against central differences."""
    report = OracleReport()
    for component, error in fd_errors(net, t, x, h).items():
        report.add(f"{label}/{component}", error, 0.0, tolerances[component])
    return report


def fd_param_check(
    objective: Callable[[], torch.Tensor],
    nets: Sequence[FieldNetwork],
    h: float = 1e-6,
    tolerance: float = 1e-5,
    label: str = "fd/parameters",
) -> OracleReport:
    """Compare the automatic parameter gradient of ``objective()`` with central differences.

    ``objective`` is re-evaluated with each parameter nudged by +-h, so it
    must read the networks' current parameters on every call.
    """
    analytic = parameter_gradients(objective(), nets)
    worst = 0.0
    for net, gradient in zip(nets, analytic):
        base = net.parameter_vector()
        numeric = torch.empty_like(base)
        for k in range(base.numel()):
            shifted = base.clone()
            shifted[k] += h
            net.load_parameter_vector(shifted)
            upper = float(objective().detach())
            shifted[k] -= 2 * h
            net.load_parameter_vector(shifted)
            lower = float(objective().detach())
            numeric[k] = (upper - lower) / (2 * h)
        net.load_parameter_vector(base)
        worst = max(worst, _relative(gradient - numeric, numeric))
    logger.debug("Parameter gradient check: worst relative error %.3e", worst)
    report = OracleReport()
    report.add(label, worst, 0.0, tolerance)
    return report
