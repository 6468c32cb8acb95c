"""Geometry layer: presets, spline space, transformation and coefficients."""

import math

import numpy as np
import pytest

from periscat.errors import (
    ConfigurationError,
    GeometryError,
    InvalidPerturbationError,
)
from periscat.geometry import (
    ClosedFormPerturbation,
    Perturbation,
    SplineBasis,
    build_diffeomorphism,
    eval_perturbation,
    eval_surface,
    material_coefficients,
    perturbation_preset,
    project_onto_basis,
    surface_preset,
)

LAM = 2.0 * math.pi
RNG = np.random.default_rng(20240601)


def fd_jacobian(diffeo, pts, eps=1e-6):
    """Central finite differences of Phi_p (independent of the analytic path)."""
    pts = np.asarray(pts, dtype=float)
    J = np.zeros(pts.shape[:-1] + (2, 2))
    for k in range(2):
        dp = np.zeros(2)
        dp[k] = eps
        J[..., :, k] = (diffeo.map(pts + dp) - diffeo.map(pts - dp)) / (2 * eps)
    return J


class TestSurfacePresets:
    def test_f1_at_zero(self):
        f1 = surface_preset("f1")
        assert eval_surface(f1, 0.0) == pytest.approx(2.25, abs=1e-14)

    def test_f1_periodicity(self):
        f1 = surface_preset("f1")
        assert eval_surface(f1, 2 * math.pi) == pytest.approx(2.25, abs=1e-12)
        x = RNG.uniform(-50, 50, size=200)
        assert np.max(np.abs(f1(x + LAM) - f1(x))) < 1e-12

    def test_f3_at_zero(self):
        f3 = surface_preset("f3")
        assert eval_surface(f3, 0.0) == pytest.approx(0.75, abs=1e-14)

    def test_all_presets_periodic_and_below_H(self):
        for name in ("f1", "f2", "f3"):
            s = surface_preset(name)
            x = RNG.uniform(-100, 100, size=150)
            assert np.max(np.abs(s(x + LAM) - s(x))) < 1e-12
            assert s.sup_height < 4.0

    def test_slope_matches_fd(self):
        for name in ("f1", "f2", "f3"):
            s = surface_preset(name)
            x = RNG.uniform(-4, 4, size=40)
            fd = (s(x + 1e-6) - s(x - 1e-6)) / 2e-6
            assert np.max(np.abs(s.slope(x) - fd)) < 1e-7


class TestSplineBasis:
    def test_support_inside_open_cell(self):
        basis = SplineBasis(10)
        a, b = basis.cell
        for n in range(basis.n_basis):
            for order in (0, 1, 2):
                va = basis.deriv(n, a, order) if order else basis.eval(n, a)
                vb = basis.deriv(n, b, order) if order else basis.eval(n, b)
                assert abs(va) == 0.0
                assert abs(vb) == 0.0

    def test_gram_nonsingular(self):
        basis = SplineBasis(10)
        g = basis.gram()
        assert np.allclose(g, g.T)
        cond = np.linalg.cond(g)
        assert np.isfinite(cond) and cond < 1e6

    def test_basis_reproduction(self):
        basis = SplineBasis(10)
        coeffs, resid = project_onto_basis(lambda x: basis.eval(2, x), basis)
        e2 = np.zeros(10)
        e2[2] = 1.0
        assert np.allclose(coeffs, e2, atol=1e-10)
        assert resid < 1e-10

    def test_zero_target(self):
        basis = SplineBasis(10)
        coeffs, resid = project_onto_basis(lambda x: np.zeros_like(x), basis)
        assert np.allclose(coeffs, 0.0)
        assert resid == 0.0

    def test_p1_projection_residual(self):
        basis = SplineBasis(10)
        p1 = perturbation_preset("p1")
        coeffs, resid = project_onto_basis(p1.value, basis)
        assert resid < 5e-2


class TestPerturbations:
    def test_zero_coefficients(self):
        p = Perturbation(0, SplineBasis(10), np.zeros(10))
        x = RNG.uniform(-10, 10, size=100)
        assert np.all(eval_perturbation(p, x) == 0.0)

    def test_p1_values(self):
        p1 = perturbation_preset("p1")
        assert eval_perturbation(p1, 0.0) == pytest.approx(-0.5, abs=1e-14)
        assert eval_perturbation(p1, math.pi) == 0.0
        assert eval_perturbation(p1, -math.pi) == 0.0

    def test_support_confinement(self):
        basis = SplineBasis(10)
        p = Perturbation(1, basis, RNG.standard_normal(10))
        lo, hi = p.support
        x_out = np.concatenate(
            [RNG.uniform(lo - 30, lo, 500), RNG.uniform(hi, hi + 30, 500)]
        )
        assert np.all(p.value(x_out) == 0.0)
        p3 = perturbation_preset("p3")
        x_out = np.concatenate([RNG.uniform(-40, -3, 500), RNG.uniform(3, 40, 500)])
        assert np.all(p3.value(x_out) == 0.0)

    def test_p3_c2_at_endpoints(self):
        # symmetrised reading: value, slope (and numerically the curvature)
        # all vanish as x -> -3, 3
        p3 = perturbation_preset("p3")
        for x0 in (-3.0, 3.0):
            xs = x0 + np.array([-1e-4, 1e-4]) * (1 if x0 < 0 else -1)
            assert np.max(np.abs(p3.value(xs))) < 1e-10
            assert np.max(np.abs(p3.derivative(xs))) < 1e-6

    def test_json_round_trip(self):
        basis = SplineBasis(10)
        p = Perturbation(2, basis, RNG.standard_normal(10))
        q = Perturbation.loads(p.dumps())
        assert q.cell_index == 2
        assert np.allclose(q.coefficients, p.coefficients)
        x = RNG.uniform(*q.support, size=50)
        assert np.allclose(q.value(x), p.value(x), atol=1e-14)

    def test_shifted_cell_support(self):
        basis = SplineBasis(10)
        p = Perturbation(-2, basis, np.ones(10))
        lo, hi = p.support
        assert lo == pytest.approx(-2 * LAM - math.pi)
        assert hi == pytest.approx(-2 * LAM + math.pi)
        inside = RNG.uniform(lo + 0.5, hi - 0.5, 50)
        assert np.all(np.abs(p.value(inside)) > 0)


class TestDiffeomorphism:
    def setup_method(self):
        self.surface = surface_preset("f1")
        self.p1 = perturbation_preset("p1")
        self.diffeo = build_diffeomorphism(self.surface, self.p1, 4.0)

    def test_identity_for_zero_perturbation(self):
        p0 = Perturbation(0, SplineBasis(10), np.zeros(10))
        d = build_diffeomorphism(self.surface, p0, 4.0)
        pts = np.column_stack(
            [RNG.uniform(-10, 10, 200), RNG.uniform(2.3, 4.0, 200)]
        )
        assert np.allclose(d.map(pts), pts, atol=1e-15)
        J = d.jacobian(pts)
        assert np.allclose(J, np.eye(2), atol=1e-15)

    def test_identity_on_top_boundary(self):
        pts = np.column_stack([RNG.uniform(-3, 3, 100), np.full(100, 4.0)])
        assert np.allclose(self.diffeo.map(pts), pts, atol=1e-14)

    def test_identity_outside_cell(self):
        pts = np.column_stack(
            [RNG.uniform(math.pi, 3 * math.pi, 300), RNG.uniform(2.5, 4.0, 300)]
        )
        assert np.allclose(self.diffeo.map(pts), pts, atol=1e-15)

    def test_maps_surface_onto_perturbed_surface(self):
        x1 = RNG.uniform(-math.pi, math.pi, 100)
        pts = np.column_stack([x1, self.surface(x1)])
        mapped = self.diffeo.map(pts)
        target = self.surface(x1) + self.p1.value(x1)
        assert np.max(np.abs(mapped[:, 1] - target)) < 1e-12

    def test_jacobian_matches_finite_differences(self):
        pts = np.column_stack(
            [RNG.uniform(-math.pi + 0.1, math.pi - 0.1, 60), RNG.uniform(2.4, 3.9, 60)]
        )
        J = self.diffeo.jacobian(pts)
        Jfd = fd_jacobian(self.diffeo, pts)
        assert np.max(np.abs(J - Jfd)) < 1e-6

    def test_H_too_small_rejected(self):
        with pytest.raises(GeometryError):
            build_diffeomorphism(self.surface, self.p1, 2.25)

    def test_validity_guard(self):
        basis = SplineBasis(10)
        huge = Perturbation(0, basis, 40.0 * np.ones(10))
        d = build_diffeomorphism(self.surface, huge, 60.0)
        pts = np.column_stack(
            [RNG.uniform(-math.pi, math.pi, 400), RNG.uniform(2.3, 50.0, 400)]
        )
        with pytest.raises(InvalidPerturbationError):
            d.check_validity(pts)


class TestMaterialCoefficients:
    def setup_method(self):
        self.surface = surface_preset("f1")
        self.p1 = perturbation_preset("p1")
        self.diffeo = build_diffeomorphism(self.surface, self.p1, 4.0)

    def test_identity_for_zero_perturbation(self):
        p0 = Perturbation(0, SplineBasis(10), np.zeros(10))
        d = build_diffeomorphism(self.surface, p0, 4.0)
        pts = np.column_stack([RNG.uniform(-9, 9, 200), RNG.uniform(2.3, 3.9, 200)])
        A, c = material_coefficients(d, pts)
        assert np.allclose(A, np.eye(2), atol=1e-15)
        assert np.allclose(c, 1.0, atol=1e-15)

    def test_identity_outside_cell(self):
        pts = np.column_stack(
            [RNG.uniform(math.pi, 5 * math.pi, 400), RNG.uniform(2.3, 3.9, 400)]
        )
        A, c = material_coefficients(self.diffeo, pts)
        assert np.max(np.abs(A - np.eye(2))) <= 1e-14
        assert np.max(np.abs(c - 1.0)) <= 1e-14

    def test_top_boundary_identity(self):
        pts = np.column_stack([RNG.uniform(-3, 3, 50), np.full(50, 4.0)])
        A, c = material_coefficients(self.diffeo, pts)
        assert np.allclose(A, np.eye(2), atol=1e-14)
        assert np.allclose(c, 1.0, atol=1e-14)

    def test_matches_fd_jacobian_assembly(self):
        pts = np.column_stack(
            [RNG.uniform(-math.pi + 0.1, math.pi - 0.1, 60), RNG.uniform(2.4, 3.9, 60)]
        )
        A, c = material_coefficients(self.diffeo, pts)
        Jfd = fd_jacobian(self.diffeo, pts)
        det = np.linalg.det(Jfd)
        inv = np.linalg.inv(Jfd)
        A_ref = det[..., None, None] * inv @ np.swapaxes(inv, -1, -2)
        assert np.max(np.abs(A - A_ref)) < 1e-6
        assert np.max(np.abs(c - det)) < 1e-6

    def test_symmetry_and_spd(self):
        for pname in ("p1", "p2", "p3"):
            for sname in ("f1", "f2", "f3"):
                d = build_diffeomorphism(
                    surface_preset(sname), perturbation_preset(pname), 4.0
                )
                x1 = RNG.uniform(-3, 3, 300)
                x2 = RNG.uniform(surface_preset(sname).sup_height + 0.51, 3.9, 300)
                pts = np.column_stack([x1, x2])
                A, c = material_coefficients(d, pts)
                assert np.max(np.abs(A - np.swapaxes(A, -1, -2))) <= 1e-14
                eig = np.linalg.eigvalsh(A)
                assert np.min(eig) > 0
                assert np.min(c) > 0


def test_config_errors():
    with pytest.raises(ConfigurationError):
        surface_preset("f9")
    with pytest.raises(ConfigurationError):
        perturbation_preset("q1")
    with pytest.raises(ConfigurationError):
        SplineBasis(0)
