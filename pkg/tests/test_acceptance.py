"""End-to-end training runs checked against analytic costs and limits.

Each run takes minutes to tens of minutes on a CPU; run with ``-m slow``.
"""

from functools import lru_cache

import numpy as np
import pytest
import torch

from src.densities import evaluate_density
from src.fieldnet import DTYPE
from src.models import TrainConfig
from src.oracle import (
    FVGrid,
    analytic_fr_cost,
    analytic_ot_cost_translation,
    fv_integrate_continuity,
    mass_timeseries,
    network_potential,
)
from src.problems import build_collocation, build_preset
from src.residuals import source_transport_split, wfr_cost
from src.training import train

pytestmark = pytest.mark.slow

MAX_ITERS = 20000
REDUCED_ITERS = 5000


@lru_cache(maxsize=None)
def trained(preset: str, max_iters: int = MAX_ITERS):
    """Train a preset once per session; returns spec, collocation, result and best networks."""
    spec = build_preset(preset)
    config = TrainConfig(max_iters=max_iters)
    collocation = build_collocation(spec, seed=config.seed)
    result = train(spec, config, collocation=collocation)
    net_rho, net_phi = result.state.best_networks()
    return spec, collocation, result, net_rho, net_phi


class TestGaussianMagnitudes:
    @pytest.mark.parametrize(
        "preset, max_iters, bound",
        [("A", MAX_ITERS, 5e-2), ("B", MAX_ITERS, 1e-1), ("A", REDUCED_ITERS, 2e-1)],
    )
    def test_loss_components(self, preset, max_iters, bound):
        """Test that every residual component ends at or below its bound."""
        _, _, result, _, _ = trained(preset, max_iters)
        final = result.final
        assert final.continuity <= bound
        assert final.hamilton_jacobi <= bound
        assert final.endpoint <= bound


class TestDeskCosts:
    """Trained costs against closed-form values."""

    def test_translation_cost(self):
        """Test the equal-mass shift by (0.2, 0.2) within 10% of 0.04."""
        spec, collocation, _, net_rho, net_phi = trained("desk-translation")
        cost = wfr_cost(net_rho, net_phi, collocation, spec)
        assert cost == pytest.approx(analytic_ot_cost_translation([0.2, 0.2]), rel=0.1)

    def test_translation_conserves_mass(self):
        """Test that the OT run keeps its mass within 5% at every snapshot."""
        _, _, result, _, _ = trained("desk-translation")
        masses = np.array([mass for _, mass in mass_timeseries(result.snapshots)])
        assert np.abs(masses / masses[0] - 1.0).max() < 0.05

    def test_growth_cost(self):
        """Test that quadrupling the mass in place costs 2.0 within 10%."""
        spec, collocation, _, net_rho, net_phi = trained("desk-growth")
        cost = wfr_cost(net_rho, net_phi, collocation, spec)
        assert cost == pytest.approx(analytic_fr_cost(1.0, 4.0, 2.0), rel=0.1)

    def test_finite_volume_cross_check(self):
        """Test that pushing rho0 with the Test A potential, growth included, lands near rho(1).

        The L1 gap is measured against the target density rho1 on a 64x64 grid.
        """
        spec, _, _, net_rho, net_phi = trained("A")
        assert spec.eta == 2.0
        grid = FVGrid(bounds=spec.domain.bounds, shape=(64, 64))
        centers = grid.centers()
        rho0 = np.asarray(evaluate_density(spec.rho0, centers))
        target = np.asarray(evaluate_density(spec.rho1, centers))
        result = fv_integrate_continuity(network_potential(net_phi), rho0, grid, eta=spec.eta)

        points = torch.as_tensor(centers, dtype=DTYPE)
        with torch.no_grad():
            trained_rho1 = net_rho(torch.ones(len(points), dtype=DTYPE), points).numpy()
        moved = result.density.reshape(-1)
        assert np.abs(moved - trained_rho1).sum() / np.abs(target).sum() < 0.2


class TestEtaLimits:
    """Source and transport effort at the two ends of the eta range."""

    def effort(self, preset):
        spec, collocation, _, net_rho, net_phi = trained(preset)
        return source_transport_split(net_rho, net_phi, collocation, spec)

    def test_small_eta_transports(self):
        """Test S / T < 0.1 at eta = 1e-6."""
        source, transport = self.effort("C-eta1e-6")
        assert source / transport < 0.1

    def test_large_eta_grows_in_place(self):
        """Test T / S < 0.1 at eta = 100."""
        source, transport = self.effort("C-eta100")
        assert transport / source < 0.1


class TestSphere:
    """Transport between the poles of the sphere."""

    def test_loss_components(self):
        _, _, result, _, _ = trained("Sphere")
        final = result.final
        assert final.continuity <= 3e-1
        assert final.hamilton_jacobi <= 2e-1
        assert final.endpoint <= 1e-2

    def test_velocity_is_tangent(self):
        """Test that v has no normal component at any node."""
        _, collocation, result, _, _ = trained("Sphere")
        frames = collocation.spatial.frames
        for snapshot in result.snapshots:
            normal = np.einsum("nd,ndk->nk", snapshot.v, frames)
            assert np.abs(normal).max() < 1e-10

    def test_midpoint_on_equator(self):
        """Test that the density peak at t = 0.5 lies within 0.15 of the equator."""
        _, _, result, _, _ = trained("Sphere")
        midpoint = next(s for s in result.snapshots if s.t == 0.5)
        peak = midpoint.points[np.argmax(midpoint.rho)]
        assert abs(peak[2] - 0.5) < 0.15
