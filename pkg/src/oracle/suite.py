"""Validation suite: every independent check, fanned out over a thread pool."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable

import numpy as np
import torch

from src.densities import evaluate_density
from src.fieldnet import init_network
from src.models import EuclideanBox, OracleReport, ProblemSpec
from src.oracle.costs import (
    analytic_fr_cost,
    analytic_ot_cost_translation,
    discrete_fr_path_cost,
    discrete_ot_cost,
)
from src.oracle.derivatives import JET_TOLERANCES, fd_errors, fd_param_check
from src.oracle.manufactured import growth_factor, growth_pair, max_residuals, translation_pair
from src.oracle.transport import FVGrid, field_potential, fv_integrate_continuity
from src.problems import build_collocation
from src.problems.presets import euclidean_mixture, gaussian
from src.residuals import assemble_loss

logger = logging.getLogger(__name__)

MAX_WORKERS = 4
NETWORK_COUNT = 100
POINTS_PER_NETWORK = 20
RESIDUAL_TOLERANCE = 1e-8
SHIFT = np.array([0.2, 0.2])


def check_derivatives(seed: int = 0) -> OracleReport:
    """Jets of random tanh networks against central differences."""
    rng = np.random.default_rng(seed)
    worst = dict.fromkeys(JET_TOLERANCES, 0.0)
    for k in range(NETWORK_COUNT):
        d = int(rng.integers(1, 4))
        dims = [1 + d] + [int(rng.integers(4, 17))] * int(rng.integers(1, 4)) + [1]
        head = "softplus" if k % 2 else "linear"
        net = init_network(dims, "tanh", head, seed=seed + k)
        t = rng.uniform(size=POINTS_PER_NETWORK)
        x = rng.uniform(size=(POINTS_PER_NETWORK, d))
        for component, error in fd_errors(net, t, x).items():
            worst[component] = max(worst[component], error)
    report = OracleReport()
    for component, error in worst.items():
        report.add(f"jets/{component}", error, 0.0, JET_TOLERANCES[component])
    return report


def _small_problem() -> ProblemSpec:
    return ProblemSpec(
        name="gradient-check",
        domain=EuclideanBox(bounds=[(0.0, 1.0), (0.0, 1.0)], grid_shape=[4, 4]),
        rho0=euclidean_mixture(gaussian([0.4, 0.4], 0.02)),
        rho1=euclidean_mixture(gaussian([0.6, 0.6], 0.02, coefficient=2.0)),
        eta=2.0,
        lambda_c=1.0,
        lambda_hj=1.0,
        lambda_ic=1.0,
        n_time=3,
        mode="UOT",
    )


def check_loss_gradient(seed: int = 0) -> OracleReport:
    """Parameter gradient of the full loss against parameter-space differences."""
    spec = _small_problem()
    collocation = build_collocation(spec, seed=seed)
    net_rho = init_network([3, 4, 1], "tanh", "softplus", seed=seed)
    net_phi = init_network([3, 4, 1], "tanh", "linear", seed=seed + 1)

    def objective() -> torch.Tensor:
        return assemble_loss(net_rho, net_phi, collocation, spec).total

    return fd_param_check(objective, [net_rho, net_phi], label="loss/parameters")


def check_manufactured(seed: int = 0) -> OracleReport:
    report = OracleReport()
    pairs = {
        "growth": growth_pair(phi0=2.0, eta=2.0),
        "translation": translation_pair(SHIFT, [0.4, 0.4], 0.005 * np.eye(2)),
    }
    for name, pair in pairs.items():
        continuity, hamilton_jacobi = max_residuals(pair, seed=seed)
        report.add(f"manufactured/{name}/continuity", continuity, 0.0, RESIDUAL_TOLERANCE)
        report.add(f"manufactured/{name}/hamilton_jacobi", hamilton_jacobi, 0.0, RESIDUAL_TOLERANCE)
    return report


def check_growth_cost(seed: int = 0) -> OracleReport:
    report = OracleReport()
    expected = analytic_fr_cost(1.0, 4.0, 2.0)
    report.add("cost/growth", discrete_fr_path_cost(1.0, 4.0, 2.0), expected, 5e-4)
    return report


def gaussian_cells(grid: FVGrid, mean, variance: float) -> np.ndarray:
    density = euclidean_mixture(gaussian(mean, variance))
    return np.asarray(evaluate_density(density, grid.centers()))


def check_translation_cost(seed: int = 0) -> OracleReport:
    """Discrete transport between gridded Gaussians against the rigid-shift cost."""
    grid = FVGrid(bounds=[(0.0, 1.0), (0.0, 1.0)], shape=(64, 64))
    points = grid.centers()
    source = gaussian_cells(grid, [0.4, 0.4], 0.001)
    target = gaussian_cells(grid, [0.6, 0.6], 0.001)
    measured = discrete_ot_cost(
        points, source / source.sum(), points, target / target.sum(), support_threshold=1e-6
    )
    expected = analytic_ot_cost_translation(SHIFT)
    report = OracleReport()
    report.add("cost/translation", measured, expected, 0.02 * expected)
    return report


def _translation_error(cells: int, shift: float = 0.2) -> float:
    grid = FVGrid(bounds=[(0.0, 1.0)], shape=(cells,))
    rho0 = gaussian_cells(grid, [0.4], 0.005)
    exact = gaussian_cells(grid, [0.4 + shift], 0.005)

    def potential(t: float, points: np.ndarray):
        return shift * points[:, 0], np.full_like(points, shift)

    result = fv_integrate_continuity(potential, rho0, grid, eta=0.0)
    return float(np.abs(result.density - exact).sum() / np.abs(exact).sum())


def check_finite_volume(seed: int = 0) -> OracleReport:
    report = OracleReport()

    grid = FVGrid(bounds=[(0.0, 1.0), (0.0, 1.0)], shape=(32, 32))
    rho0 = gaussian_cells(grid, [0.5, 0.5], 0.005)

    def still(t: float, points: np.ndarray):
        return np.zeros(len(points)), np.zeros_like(points)

    at_rest = fv_integrate_continuity(still, rho0, grid, eta=0.0)
    report.add("fv/at_rest", float(np.abs(at_rest.density - rho0).max()), 0.0, 1e-12)

    def swirl(t: float, points: np.ndarray):
        x, y = points[:, 0] - 0.5, points[:, 1] - 0.5
        phi = 0.3 * x * y + 0.1 * x
        return phi, np.stack([0.3 * y + 0.1, 0.3 * x], axis=1)

    moving = fv_integrate_continuity(swirl, rho0, grid, eta=0.0)
    masses = np.array([m for _, m in moving.masses])
    drift = float(np.abs(masses - masses[0]).max() / masses[0])
    report.add("fv/mass_conservation", drift, 0.0, 1e-12)

    coarse, fine = _translation_error(100), _translation_error(200)
    report.add("fv/translation_l1", fine, 0.0, 0.1)
    report.add("fv/translation_order", math.log2(coarse / fine), 1.0, 0.35)

    pair = growth_pair(phi0=2.0, eta=2.0)
    grown = fv_integrate_continuity(field_potential(pair.phi), rho0, grid, eta=2.0)
    ratio = grid.mass(grown.density) / grid.mass(rho0)
    report.add("fv/growth_factor", ratio, growth_factor(2.0, 2.0), 0.01)
    return report


CHECKS: dict[str, Callable[[int], OracleReport]] = {
    "derivatives": check_derivatives,
    "loss_gradient": check_loss_gradient,
    "manufactured": check_manufactured,
    "growth_cost": check_growth_cost,
    "translation_cost": check_translation_cost,
    "finite_volume": check_finite_volume,
}


def run_validation_suite(seed: int = 0, max_workers: int = MAX_WORKERS) -> OracleReport:
    """Run every check in parallel and merge the reports in a fixed order.

    A check that raises is recorded as a single failed entry instead of
    aborting the suite.
    """
    total = len(CHECKS)
    logger.info("Running %d validation checks (%d workers)", total, max_workers)
    results: dict[str, OracleReport] = {}
    completed = 0

    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        future_to_name = {executor.submit(check, seed): name for name, check in CHECKS.items()}

        for future in as_completed(future_to_name):
            name = future_to_name[future]
            completed += 1
            try:
                results[name] = future.result()
                status = "ok" if results[name].passed else "FAILED"
            except Exception as exc:
                logger.error("Check %s raised: %s", name, exc)
                results[name] = OracleReport()
                results[name].add(f"{name}/error", math.nan, 0.0, 0.0)
                status = "error"
            logger.info("[%d/%d] %s %s", completed, total, status, name)

    report = OracleReport()
    for name in CHECKS:
        report.merge(results[name])
    return report
