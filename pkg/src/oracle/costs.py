"""Closed-form and brute-force transport costs."""

import logging

import numpy as np
from scipy import sparse
from scipy.optimize import linprog, minimize

from src.errors import DimensionMismatchError, InvalidParameterError

logger = logging.getLogger(__name__)


def analytic_fr_cost(m0: float, kappa: float, eta: float) -> float:
    """Optimal pure-growth cost (4 / eta)(sqrt(kappa) - 1)^2 m0 for rho1 = kappa rho0."""
    if eta <= 0:
        raise InvalidParameterError("The growth cost needs eta > 0", {"eta": eta})
    if kappa < 0 or m0 < 0:
        raise InvalidParameterError(
            "Mass and growth ratio must be nonnegative", {"m0": m0, "kappa": kappa}
        )
    return 4.0 / eta * (np.sqrt(kappa) - 1.0) ** 2 * m0


def discrete_fr_path_cost(m0: float, kappa: float, eta: float, steps: int = 200) -> float:
    """Minimize the discretized growth action over mass paths m(t) from m0 to kappa m0.

    Each step contributes (m_{k+1} - m_k)^2 / (eta dt m_mid) with m_mid the
    step's average mass. Endpoints are fixed; the start guess is linear.
    """
    if eta <= 0:
        raise InvalidParameterError("The growth cost needs eta > 0", {"eta": eta})
    if steps < 2:
        raise InvalidParameterError("Need at least two steps", {"steps": steps})
    if kappa == 1.0 or m0 == 0.0:
        return 0.0
    dt = 1.0 / steps
    start, end = float(m0), float(kappa * m0)

    def action(interior: np.ndarray) -> tuple[float, np.ndarray]:
        path = np.concatenate([[start], interior, [end]])
        delta = np.diff(path)
        middle = 0.5 * (path[:-1] + path[1:])
        value = np.sum(delta**2 / middle) / (eta * dt)
        d_right = (2 * delta / middle - 0.5 * delta**2 / middle**2) / (eta * dt)
        d_left = (-2 * delta / middle - 0.5 * delta**2 / middle**2) / (eta * dt)
        grad = d_right[:-1] + d_left[1:]
        return value, grad

    guess = np.linspace(start, end, steps + 1)[1:-1]
    floor = 1e-12 * max(start, end)
    result = minimize(
        action,
        guess,
        jac=True,
        method="L-BFGS-B",
        bounds=[(floor, None)] * len(guess),
        options={"maxiter": 20000, "ftol": 1e-15, "gtol": 1e-12},
    )
    logger.debug("Path minimization: %s after %d iterations", result.message, result.nit)
    return float(result.fun)


def analytic_ot_cost_translation(delta_mu, mass: float = 1.0) -> float:
    """Half squared distance times mass for a rigid translation by ``delta_mu``."""
    delta = np.asarray(delta_mu, dtype=np.float64)
    return 0.5 * mass * float(delta @ delta)


def discrete_ot_cost(
    source_points: np.ndarray,
    source_weights: np.ndarray,
    target_points: np.ndarray,
    target_weights: np.ndarray,
    support_threshold: float = 1e-8,
) -> float:
    """Half the squared 2-Wasserstein distance between two weighted point sets.

    Solved exactly as a linear program (HiGHS). Points whose weight is below
    ``support_threshold`` times the largest weight are dropped; the target is
    rescaled to the source mass.
    """
    source_points = np.asarray(source_points, dtype=np.float64)
    target_points = np.asarray(target_points, dtype=np.float64)
    if source_points.shape[1] != target_points.shape[1]:
        raise DimensionMismatchError("Source and target points differ in dimension")
    a = np.asarray(source_weights, dtype=np.float64)
    b = np.asarray(target_weights, dtype=np.float64)
    keep_a = a > support_threshold * a.max()
    keep_b = b > support_threshold * b.max()
    x, a = source_points[keep_a], a[keep_a]
    y, b = target_points[keep_b], b[keep_b]
    b = b * a.sum() / b.sum()

    n, m = len(a), len(b)
    cost = 0.5 * np.sum((x[:, None, :] - y[None, :, :]) ** 2, axis=-1).ravel()
    rows = sparse.kron(sparse.eye(n), np.ones((1, m)))
    cols = sparse.kron(np.ones((1, n)), sparse.eye(m))
    constraints = sparse.vstack([rows, cols]).tocsr()
    logger.info("Solving discrete transport with %d x %d plan", n, m)
    result = linprog(
        cost,
        A_eq=constraints,
        b_eq=np.concatenate([a, b]),
        bounds=(0, None),
        method="highs",
    )
    if not result.success:
        raise InvalidParameterError(f"Transport LP failed: {result.message}")
    return float(result.fun)
