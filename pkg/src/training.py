"""Full-batch Adam training of the density and potential networks."""

import copy
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
import torch

from src.errors import TrainingDivergedError
from src.export import Snapshot, append_loss_row
from src.fieldnet import DTYPE, FieldNetwork, eval_jet, init_network, parameter_gradients
from src.fieldnet.checkpoint import network_checkpoint, network_from_checkpoint
from src.models import LossReport, ProblemSpec, TrainCheckpoint, TrainConfig
from src.problems import CollocationSet, build_collocation
from src.residuals import assemble_loss, derived_fields

logger = logging.getLogger(__name__)

SNAPSHOT_TIMES = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass
class TrainState:
    """Networks, Adam moments and the best parameters seen so far."""

    net_rho: FieldNetwork
    net_phi: FieldNetwork
    first_moments: list[torch.Tensor]
    second_moments: list[torch.Tensor]
    iteration: int = 0
    best_total: float = math.inf
    best_iteration: int = 0
    best_parameters: Optional[list[torch.Tensor]] = None

    @property
    def networks(self) -> list[FieldNetwork]:
        return [self.net_rho, self.net_phi]

    def record_best(self, total: float) -> None:
        if total < self.best_total:
            self.best_total = total
            self.best_iteration = self.iteration
            self.best_parameters = [net.parameter_vector() for net in self.networks]

    def best_networks(self) -> tuple[FieldNetwork, FieldNetwork]:
        """Copies of both networks carrying the best parameters."""
        rho, phi = copy.deepcopy(self.net_rho), copy.deepcopy(self.net_phi)
        if self.best_parameters is not None:
            rho.load_parameter_vector(self.best_parameters[0])
            phi.load_parameter_vector(self.best_parameters[1])
        return rho, phi


@dataclass
class TrainResult:
    state: TrainState
    history: list[LossReport]
    snapshots: list[Snapshot] = field(default_factory=list)
    stop_reason: str = "max_iters"
    final: Optional[LossReport] = None


def init_state(spec: ProblemSpec, config: TrainConfig) -> TrainState:
    """Fresh networks (softplus density, linear potential) and zero moments."""
    dims = config.layer_dims(spec.dimension)
    net_rho = init_network(dims, "tanh", "softplus", seed=config.seed)
    net_phi = init_network(dims, "tanh", "linear", seed=config.seed + 1)
    zeros = [torch.zeros(net.parameter_count, dtype=DTYPE) for net in (net_rho, net_phi)]
    return TrainState(
        net_rho=net_rho,
        net_phi=net_phi,
        first_moments=[z.clone() for z in zeros],
        second_moments=[z.clone() for z in zeros],
    )


def adam_update(
    parameters: torch.Tensor,
    gradient: torch.Tensor,
    first_moment: torch.Tensor,
    second_moment: torch.Tensor,
    step: int,
    config: TrainConfig,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """One bias-corrected Adam update; entries with zero gradient keep their value."""
    first_moment = config.beta1 * first_moment + (1.0 - config.beta1) * gradient
    second_moment = config.beta2 * second_moment + (1.0 - config.beta2) * gradient * gradient
    m_hat = first_moment / (1.0 - config.beta1**step)
    v_hat = second_moment / (1.0 - config.beta2**step)
    update = config.learning_rate * m_hat / (torch.sqrt(v_hat) + config.eps_adam)
    update = torch.where(gradient != 0, update, torch.zeros_like(update))
    return parameters - update, first_moment, second_moment


def adam_step(
    state: TrainState, gradients: list[torch.Tensor], config: TrainConfig
) -> TrainState:
    for gradient in gradients:
        if not bool(torch.isfinite(gradient).all()):
            raise TrainingDivergedError(
                f"Non-finite gradient at iteration {state.iteration}",
                iteration=state.iteration,
            )
    step = state.iteration + 1
    for i, (net, gradient) in enumerate(zip(state.networks, gradients)):
        parameters, state.first_moments[i], state.second_moments[i] = adam_update(
            net.parameter_vector(),
            gradient,
            state.first_moments[i],
            state.second_moments[i],
            step,
            config,
        )
        net.load_parameter_vector(parameters)
    state.iteration = step
    return state


def make_snapshot(
    net_rho: FieldNetwork,
    net_phi: FieldNetwork,
    collocation: CollocationSet,
    spec: ProblemSpec,
    t: float,
) -> Snapshot:
    """Evaluate rho, phi, g and v on the spatial nodes at time t."""
    points = torch.as_tensor(collocation.spatial.points, dtype=DTYPE)
    times = torch.full((len(points),), float(t), dtype=DTYPE)
    jet_phi = eval_jet(net_phi, times, points, hessian=False)
    fields = derived_fields(jet_phi, collocation.spatial_frames(), spec.eta)
    with torch.no_grad():
        rho = net_rho(times, points)
    return Snapshot(
        t=float(t),
        points=collocation.spatial.points.copy(),
        rho=rho.numpy().copy(),
        phi=jet_phi.u.numpy().copy(),
        g=fields.g.numpy().copy(),
        v=fields.v.numpy().copy(),
        weights=collocation.spatial.weights.copy(),
    )


def train(
    spec: ProblemSpec,
    config: TrainConfig,
    state: Optional[TrainState] = None,
    collocation: Optional[CollocationSet] = None,
    loss_log: Optional[Union[str, Path]] = None,
    snapshot_times: tuple[float, ...] = SNAPSHOT_TIMES,
) -> TrainResult:
    """Run Adam until the total loss drops below the threshold or max_iters is reached.

    Both networks take one step per iteration from the joint loss. A logged
    row is kept every ``log_interval`` iterations and for the last evaluation.
    Snapshots use the best parameters. A non-finite loss raises
    ``TrainingDivergedError`` carrying the rows logged so far.
    """
    collocation = collocation or build_collocation(spec, seed=config.seed)
    state = state or init_state(spec, config)
    for net in state.networks:
        net.bind(spec.dimension)

    history: list[LossReport] = []
    stop_reason = "max_iters"
    report: Optional[LossReport] = None

    def log(row: LossReport) -> None:
        history.append(row)
        if loss_log is not None:
            append_loss_row(loss_log, row)
        logger.info(
            "iter %d total %.4e (L_c %.3e, L_hj %.3e, L_ic %.3e, L_bc %.3e) W %.4e",
            row.iteration,
            row.total,
            row.continuity,
            row.hamilton_jacobi,
            row.endpoint,
            row.boundary,
            row.cost,
        )

    try:
        while True:
            terms = assemble_loss(state.net_rho, state.net_phi, collocation, spec)
            report = terms.report(state.iteration)
            state.record_best(report.total)

            if report.total < config.stop_threshold:
                stop_reason = "threshold"
                break
            if state.iteration >= config.max_iters:
                break
            if state.iteration % config.log_interval == 0:
                log(report)

            gradients = parameter_gradients(terms.total, state.networks, state.iteration)
            adam_step(state, gradients, config)
    except TrainingDivergedError as exc:
        logger.error("Training diverged at iteration %s", exc.iteration)
        raise TrainingDivergedError(
            exc.message, iteration=exc.iteration, history=history
        ) from exc

    log(report)
    logger.info(
        "Stopped at iteration %d (%s); best total %.4e at iteration %d",
        state.iteration,
        stop_reason,
        state.best_total,
        state.best_iteration,
    )

    best_rho, best_phi = state.best_networks()
    snapshots = [
        make_snapshot(best_rho, best_phi, collocation, spec, t) for t in snapshot_times
    ]
    return TrainResult(
        state=state,
        history=history,
        snapshots=snapshots,
        stop_reason=stop_reason,
        final=report,
    )


# =============================================================================
# Checkpoints
# =============================================================================


def save_state(state: TrainState, path: Union[str, Path]) -> Path:
    best = state.best_parameters or [net.parameter_vector() for net in state.networks]
    checkpoint = TrainCheckpoint(
        rho=network_checkpoint(state.net_rho),
        phi=network_checkpoint(state.net_phi),
        first_moments=[m.tolist() for m in state.first_moments],
        second_moments=[v.tolist() for v in state.second_moments],
        iteration=state.iteration,
        best_total=state.best_total,
        best_iteration=state.best_iteration,
        best_parameters=[p.tolist() for p in best],
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(checkpoint.model_dump(), f)
    return path


def _vector(values: list[float]) -> torch.Tensor:
    return torch.as_tensor(np.asarray(values, dtype=np.float64))


def load_state(path: Union[str, Path]) -> TrainState:
    with open(path) as f:
        checkpoint = TrainCheckpoint.model_validate(json.load(f))
    return TrainState(
        net_rho=network_from_checkpoint(checkpoint.rho),
        net_phi=network_from_checkpoint(checkpoint.phi),
        first_moments=[_vector(m) for m in checkpoint.first_moments],
        second_moments=[_vector(v) for v in checkpoint.second_moments],
        iteration=checkpoint.iteration,
        best_total=checkpoint.best_total,
        best_iteration=checkpoint.best_iteration,
        best_parameters=(
            [_vector(p) for p in checkpoint.best_parameters]
            if math.isfinite(checkpoint.best_total)
            else None
        ),
    )
