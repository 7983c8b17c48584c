"""Tests for residuals, loss assembly and cost estimates."""

from dataclasses import replace

import numpy as np
import pytest
import torch

from src.fieldnet import DTYPE, eval_jet, function_jet, init_network
from src.geometry import rotate_embed_4d
from src.oracle.manufactured import growth_pair, max_residuals, translation_pair
from src.problems import BoundaryCollocation, build_collocation
from src.residuals import (
    assemble_loss,
    boundary_flux_residual,
    continuity_residual,
    derived_fields,
    endpoint_residual,
    hj_residual,
    source_transport_split,
    total_loss,
    wfr_cost,
)

CENTER = torch.tensor([0.5, 0.5, 0.5], dtype=DTYPE)


def affine_net(coefficients, bias=0.0, dimension=2):
    """phi(t, x) = c0 t + c[1:] . x + bias as a single-layer network."""
    net = init_network([1 + dimension, 1])
    vector = torch.tensor(list(coefficients) + [bias], dtype=DTYPE)
    net.load_parameter_vector(vector)
    return net


def nets_for(spec, seed=0):
    dims = [1 + spec.dimension, 8, 8, 1]
    return init_network(dims, output_head="softplus", seed=seed), init_network(dims, seed=seed + 1)


class TestManufacturedResiduals:
    """Tests that closed-form solutions zero both residuals."""

    @pytest.mark.parametrize("phi0, eta", [(2.0, 2.0), (1.0, 0.5), (-1.0, 2.0)])
    def test_growth_pair(self, phi0, eta):
        """Test the spatially constant growth solution."""
        r_c, r_hj = max_residuals(growth_pair(phi0, eta), count=1000)
        assert r_c < 1e-8
        assert r_hj < 1e-8

    def test_translation_pair(self):
        """Test the rigidly translating Gaussian with eta = 0."""
        pair = translation_pair([0.2, 0.2], [0.4, 0.4], [[0.005, 0.0], [0.0, 0.005]])
        r_c, r_hj = max_residuals(pair, count=1000)
        assert r_c < 1e-8
        assert r_hj < 1e-8

    def test_residuals_detect_a_wrong_rate(self):
        """Test that a mismatched eta leaves a continuity residual."""
        pair = growth_pair(2.0, 2.0)
        pair.eta = 1.0
        r_c, _ = max_residuals(pair, count=100)
        assert r_c > 1.0


class TestTangentialOperators:
    """Tests for the projected residual terms on the sphere."""

    @staticmethod
    def radial(t, x):
        return ((x - CENTER) ** 2).sum(dim=-1) + 0.0 * t

    def test_normal_potential_has_no_velocity(self, sphere_cloud):
        """Test that a purely radial potential gives a zero HJ residual."""
        points = torch.as_tensor(sphere_cloud.points, dtype=DTYPE)
        frames = torch.as_tensor(sphere_cloud.normal_bases, dtype=DTYPE)
        jet = function_jet(self.radial, torch.zeros(len(points), dtype=DTYPE), points)
        residual = hj_residual(jet, frames, eta=0.0)
        assert float(residual.abs().max()) < 1e-10

    def test_frozen_normal_divergence(self, sphere_cloud):
        """Test that div(P grad phi) reduces to trace(P H) = 4 for |x - c|^2."""
        points = torch.as_tensor(sphere_cloud.points, dtype=DTYPE)
        frames = torch.as_tensor(sphere_cloud.normal_bases, dtype=DTYPE)
        times = torch.zeros(len(points), dtype=DTYPE)

        def unit(t, x):
            return torch.ones_like(t) + 0.0 * x.sum(dim=-1)

        jet_rho = function_jet(unit, times, points, hessian=False)
        jet_phi = function_jet(self.radial, times, points)
        residual = continuity_residual(jet_rho, jet_phi, frames, eta=0.0)
        assert torch.allclose(residual, torch.full_like(residual, 4.0), atol=1e-10)
        flat = continuity_residual(jet_rho, jet_phi, None, eta=0.0)
        assert torch.allclose(flat, torch.full_like(flat, 6.0), atol=1e-12)


class TestDerivedFields:
    """Tests for the velocity and growth rate read off the potential."""

    def test_no_growth_without_eta(self, random_net, rng):
        """Test that eta = 0 gives g = 0 everywhere."""
        times, points = rng.uniform(size=30), rng.uniform(size=(30, 2))
        jet = eval_jet(random_net(), times, points, hessian=False)
        fields = derived_fields(jet, None, eta=0.0)
        assert torch.count_nonzero(fields.g) == 0
        assert torch.equal(fields.v, jet.grad_x)

    def test_normal_gradient_at_the_pole(self):
        """Test that phi = x3 with normal e3 has no velocity at the pole."""
        point = torch.tensor([[0.5, 0.5, 1.0]], dtype=DTYPE)
        frame = torch.tensor([[[0.0], [0.0], [1.0]]], dtype=DTYPE)
        jet = function_jet(lambda t, x: x[:, 2] + 0.0 * t, torch.zeros(1, dtype=DTYPE), point)
        fields = derived_fields(jet, frame, eta=2.0)
        assert torch.equal(fields.v, torch.zeros_like(fields.v))
        assert float(fields.g[0]) == pytest.approx(1.0)

    @pytest.mark.parametrize("embed", [False, True])
    def test_velocity_is_tangent(self, sphere_cloud, random_net, embed):
        """Test that v is orthogonal to every normal column of the frame."""
        cloud = rotate_embed_4d(sphere_cloud) if embed else sphere_cloud
        net = random_net(dims=(1 + cloud.dimension, 8, 8, 1), seed=3)
        times = np.linspace(0.0, 1.0, len(cloud))
        jet = eval_jet(net, times, cloud.points, hessian=False)
        frames = torch.as_tensor(cloud.normal_bases, dtype=DTYPE)
        fields = derived_fields(jet, frames, eta=2.0)
        assert float(torch.einsum("nd,ndk->nk", fields.v, frames).abs().max()) <= 1e-12


class TestLoss:
    """Tests for the assembled training loss."""

    def test_permuting_collocation_keeps_components(self, small_spec):
        """Test that shuffling every sample set leaves the loss components unchanged."""
        collocation = build_collocation(small_spec)
        generator = torch.Generator().manual_seed(0)

        def shuffled(record, *names):
            order = torch.randperm(len(getattr(record, names[0])), generator=generator)
            return replace(record, **{name: getattr(record, name)[order] for name in names})

        permuted_set = replace(
            shuffled(collocation, "interior_t", "interior_x", "interior_weights"),
            endpoints=shuffled(collocation.endpoints, "points", "rho0", "rho1"),
            boundary=shuffled(collocation.boundary, "times", "points", "normals"),
        )
        nets = nets_for(small_spec, seed=5)
        plain = assemble_loss(*nets, collocation, small_spec).report()
        permuted = assemble_loss(*nets, permuted_set, small_spec).report()
        for name in ("continuity", "hamilton_jacobi", "endpoint", "boundary", "total", "cost"):
            assert getattr(permuted, name) == pytest.approx(getattr(plain, name), rel=1e-12)

    def test_scaling_lambda_c(self, small_spec):
        """Test that ten times lambda_c scales only the continuity contribution."""
        collocation = build_collocation(small_spec)
        nets = nets_for(small_spec, seed=6)
        scaled_spec = small_spec.model_copy(update={"lambda_c": 10 * small_spec.lambda_c})
        base = assemble_loss(*nets, collocation, small_spec)
        scaled = assemble_loss(*nets, collocation, scaled_spec)
        for name in ("continuity", "hamilton_jacobi", "endpoint", "boundary"):
            assert float(getattr(scaled, name)) == float(getattr(base, name))
        added = float(scaled.total - base.total)
        expected = 9 * small_spec.lambda_c * float(base.continuity)
        assert added == pytest.approx(expected, rel=1e-8)

    def test_boundary_flux_of_unit_outflow(self):
        """Test phi = x1 and rho = 1 against the wall normal e1: flux residual 1."""
        boundary = BoundaryCollocation(
            times=torch.zeros(1, dtype=DTYPE),
            points=torch.tensor([[1.0, 0.5]], dtype=DTYPE),
            normals=torch.tensor([[1.0, 0.0]], dtype=DTYPE),
        )
        unit_rho = affine_net([0.0, 0.0, 0.0], bias=1.0)
        phi = affine_net([0.0, 1.0, 0.0])
        assert float(boundary_flux_residual(unit_rho, phi, boundary)) == pytest.approx(1.0)

    def test_total_is_weighted_sum(self, small_spec):
        """Test the weighted combination of the four terms."""
        collocation = build_collocation(small_spec)
        terms = assemble_loss(*nets_for(small_spec), collocation, small_spec)
        expected = (
            small_spec.lambda_c * terms.continuity
            + small_spec.lambda_hj * terms.hamilton_jacobi
            + small_spec.lambda_ic * terms.endpoint
            + small_spec.lambda_bc * terms.boundary
        )
        assert float(terms.total) == pytest.approx(float(expected), rel=1e-12)
        assert terms.total.requires_grad

    def test_report_row(self, small_spec):
        """Test that total_loss returns a finite report with the iteration."""
        collocation = build_collocation(small_spec)
        report = total_loss(*nets_for(small_spec), collocation, small_spec, iteration=7)
        assert report.iteration == 7
        assert report.total > 0
        assert report.cost >= 0

    def test_endpoint_residual_by_hand(self, small_spec):
        """Test the endpoint term against a direct computation."""
        collocation = build_collocation(small_spec)
        net_rho, _ = nets_for(small_spec)
        endpoints = collocation.endpoints
        n = len(endpoints)
        start = net_rho(torch.zeros(n, dtype=DTYPE), endpoints.points)
        end = net_rho(torch.ones(n, dtype=DTYPE), endpoints.points)
        expected = ((start - endpoints.rho0) ** 2 + (end - endpoints.rho1) ** 2).mean()
        value = endpoint_residual(net_rho, small_spec, endpoints)
        assert float(value) == pytest.approx(float(expected), rel=1e-12)

    def test_boundary_flux_without_boundary(self, small_spec):
        """Test that a missing boundary contributes zero."""
        net_rho, net_phi = nets_for(small_spec)
        assert float(boundary_flux_residual(net_rho, net_phi, None)) == 0.0

    def test_boundary_flux_vanishes_without_spatial_gradient(self, small_spec):
        """Test zero flux for a potential that depends on time only."""
        collocation = build_collocation(small_spec)
        net_rho, _ = nets_for(small_spec)
        constant_phi = affine_net([0.3, 0.0, 0.0], bias=1.0)
        value = boundary_flux_residual(net_rho, constant_phi, collocation.boundary)
        assert float(value) == 0.0


class TestCost:
    """Tests for transport-cost quadrature."""

    def test_zero_potential_costs_nothing(self, small_spec):
        """Test that phi = 0 gives zero cost and zero efforts."""
        collocation = build_collocation(small_spec)
        net_rho, _ = nets_for(small_spec)
        zero_phi = affine_net([0.0, 0.0, 0.0])
        assert wfr_cost(net_rho, zero_phi, collocation, small_spec) == 0.0
        assert source_transport_split(net_rho, zero_phi, collocation, small_spec) == (0.0, 0.0)

    def test_affine_potential_kinetic_cost(self, small_spec):
        """Test the cost of a uniform velocity field in OT mode."""
        spec = small_spec.model_copy(update={"eta": 0.0, "mode": "OT"})
        collocation = build_collocation(spec)
        net_rho, _ = nets_for(spec)
        phi = affine_net([0.0, 0.3, -0.4])
        rho = net_rho(collocation.interior_t, collocation.interior_x).detach()
        expected = float((collocation.interior_weights * rho).sum()) * 0.5 * 0.25
        assert wfr_cost(net_rho, phi, collocation, spec) == pytest.approx(expected, rel=1e-12)

    def test_cost_splits_into_source_and_transport(self, small_spec):
        """Test W = T / 2 + S / eta."""
        collocation = build_collocation(small_spec)
        net_rho, net_phi = nets_for(small_spec, seed=4)
        cost = wfr_cost(net_rho, net_phi, collocation, small_spec)
        source, transport = source_transport_split(net_rho, net_phi, collocation, small_spec)
        assert cost == pytest.approx(0.5 * transport + source / small_spec.eta, rel=1e-10)

    def test_loss_cost_matches_wfr_cost(self, small_spec):
        """Test that the cost logged with the loss equals wfr_cost."""
        collocation = build_collocation(small_spec)
        net_rho, net_phi = nets_for(small_spec, seed=2)
        terms = assemble_loss(net_rho, net_phi, collocation, small_spec)
        expected = wfr_cost(net_rho, net_phi, collocation, small_spec)
        assert float(terms.cost) == pytest.approx(expected, rel=1e-12)
