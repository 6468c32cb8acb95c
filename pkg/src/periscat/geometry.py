"""Periodic surfaces, local perturbations and the cell-supported domain transformation.

A periodic surface is the graph of a smooth Lambda-periodic height profile.
A local perturbation lives in one periodic cell (index J) and is either a
closed-form preset or an element of the cubic-spline search space used by the
reconstruction.  The transformation ``Phi_p`` pushes the unperturbed domain
onto the perturbed one; its Jacobian induces the matrix/scalar coefficient
pair (A_p, c_p) that enters the transformed Helmholtz problem.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import BSpline

from .errors import ConfigurationError, GeometryError, InvalidPerturbationError

__all__ = [
    "PeriodicSurface",
    "SplineBasis",
    "Perturbation",
    "ClosedFormPerturbation",
    "DiffeoField",
    "surface_preset",
    "perturbation_preset",
    "eval_surface",
    "eval_perturbation",
    "project_onto_basis",
    "build_diffeomorphism",
    "material_coefficients",
]

# Quadrature used for all one-dimensional cell integrals (projection, Gram
# matrices, residuals).  Degree 10 Gauss on each knot interval is far beyond
# what cubic splines need.
_GAUSS_N = 10
_GX, _GW = np.polynomial.legendre.leggauss(_GAUSS_N)


@dataclass(frozen=True)
class PeriodicSurface:
    """Graph surface x2 = zeta(x1) with period ``period``.

    ``profile`` and ``slope`` are vectorised callables for zeta and zeta'.
    ``sup_height`` is the maximum of zeta over one period (precomputed).
    """

    period: float
    profile: Callable[[np.ndarray], np.ndarray]
    slope: Callable[[np.ndarray], np.ndarray]
    sup_height: float
    name: str = "custom"

    def __post_init__(self):
        if self.period <= 0:
            raise GeometryError("surface period must be positive")

    def __call__(self, x1):
        return self.profile(np.asarray(x1, dtype=float))


def trigonometric_surface(period, cos_coeffs, sin_coeffs, constant, name="custom"):
    """Surface from a trigonometric polynomial table.

    zeta(x) = constant + sum_n cos_coeffs[n-1] cos(n w x) + sin_coeffs[n-1] sin(n w x)
    with w = 2 pi / period.  Lets users add surfaces without code changes.
    """
    w = 2.0 * math.pi / period
    ac = np.asarray(cos_coeffs, dtype=float)
    as_ = np.asarray(sin_coeffs, dtype=float)
    n = np.arange(1, max(len(ac), len(as_)) + 1)
    ac = np.pad(ac, (0, len(n) - len(ac)))
    as_ = np.pad(as_, (0, len(n) - len(as_)))

    def profile(x):
        ph = np.multiply.outer(np.asarray(x, dtype=float), n * w)
        return constant + np.cos(ph) @ ac + np.sin(ph) @ as_

    def slope(x):
        ph = np.multiply.outer(np.asarray(x, dtype=float), n * w)
        return -np.sin(ph) @ (ac * n * w) + np.cos(ph) @ (as_ * n * w)

    xs = np.linspace(0.0, period, 4096, endpoint=False)
    return PeriodicSurface(period, profile, slope, float(np.max(profile(xs))), name)


def surface_preset(name, period=2.0 * math.pi):
    """Named height profiles used throughout the package ("f1", "f2", "f3")."""
    if name == "f1":
        return trigonometric_surface(period, [0.25], [], 2.0, name="f1")
    if name == "f2":
        return trigonometric_surface(period, [-0.25], [], 2.0, name="f2")
    if name == "f3":
        return trigonometric_surface(period, [0.0, -0.25], [1.0 / 3.0, 0.0], 1.0, name="f3")
    if name == "flat":
        return trigonometric_surface(period, [], [], 0.0, name="flat")
    raise ConfigurationError(f"unknown surface preset {name!r}")


def eval_surface(surface: PeriodicSurface, x1):
    """Height of the periodic surface at abscissa(s) x1."""
    return surface(x1)


class SplineBasis:
    """Cubic B-splines with uniform knots on the closed reference cell.

    Only interior splines are kept: each basis function together with its
    first two derivatives vanishes at the cell endpoints, so every expansion
    is C^2 across the cell boundary and compactly supported in the open cell.
    """

    degree = 3

    def __init__(self, n_basis, cell=(-math.pi, math.pi)):
        if n_basis < 1:
            raise ConfigurationError("need at least one basis function")
        a, b = float(cell[0]), float(cell[1])
        if not b > a:
            raise ConfigurationError("empty spline cell")
        self.n_basis = int(n_basis)
        self.cell = (a, b)
        n_int = self.n_basis + self.degree  # interior intervals
        self.knots = np.linspace(a, b, n_int + 1)
        self._splines = [
            BSpline.basis_element(self.knots[i : i + self.degree + 2], extrapolate=False)
            for i in range(self.n_basis)
        ]
        self._derivs = [s.derivative() for s in self._splines]
        self._derivs2 = [s.derivative(2) for s in self._splines]

    def _eval(self, table, n, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        t = self.knots
        lo, hi = t[n], t[n + self.degree + 1]
        inside = (x > lo) & (x < hi)
        if np.any(inside):
            out[inside] = np.nan_to_num(table[n](x[inside]))
        return out

    def eval(self, n, x):
        """Value of basis function n at x (zero outside its support)."""
        return self._eval(self._splines, n, x)

    def deriv(self, n, x, order=1):
        return self._eval(self._derivs if order == 1 else self._derivs2, n, x)

    def design_matrix(self, x):
        """(len(x), n_basis) matrix of basis values."""
        return np.column_stack([self.eval(n, x) for n in range(self.n_basis)])

    def quadrature(self):
        """Gauss nodes/weights resolving every knot interval."""
        t = self.knots
        mid = 0.5 * (t[1:] + t[:-1])
        half = 0.5 * (t[1:] - t[:-1])
        x = (mid[:, None] + half[:, None] * _GX).ravel()
        w = (half[:, None] * _GW).ravel()
        return x, w

    def gram(self):
        x, w = self.quadrature()
        B = self.design_matrix(x)
        return (B * w[:, None]).T @ B


@dataclass(frozen=True)
class Perturbation:
    """Spline-parameterised local perturbation supported in cell ``cell_index``."""

    cell_index: int
    basis: SplineBasis
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.shape != (self.basis.n_basis,):
            raise ConfigurationError(
                f"expected {self.basis.n_basis} coefficients, got shape {c.shape}"
            )
        object.__setattr__(self, "coefficients", c)

    @property
    def shift(self):
        a, b = self.basis.cell
        return self.cell_index * (b - a)

    @property
    def support(self):
        a, b = self.basis.cell
        return (a + self.shift, b + self.shift)

    def value(self, x1):
        x = np.asarray(x1, dtype=float) - self.shift
        out = np.zeros(x.shape)
        for n in range(self.basis.n_basis):
            c = self.coefficients[n]
            if c != 0.0:
                out += c * self.basis.eval(n, x)
        return out

    def derivative(self, x1, order=1):
        x = np.asarray(x1, dtype=float) - self.shift
        out = np.zeros(x.shape)
        for n in range(self.basis.n_basis):
            c = self.coefficients[n]
            if c != 0.0:
                out += c * self.basis.deriv(n, x, order=order)
        return out

    def with_coefficients(self, coefficients):
        return Perturbation(self.cell_index, self.basis, np.asarray(coefficients, float))

    def to_json_dict(self):
        return {
            "cell_index": self.cell_index,
            "knots": self.basis.knots.tolist(),
            "coefficients": self.coefficients.tolist(),
        }

    @staticmethod
    def from_json_dict(d):
        knots = np.asarray(d["knots"], dtype=float)
        coeffs = np.asarray(d["coefficients"], dtype=float)
        basis = SplineBasis(len(coeffs), cell=(knots[0], knots[-1]))
        if len(basis.knots) != len(knots) or not np.allclose(basis.knots, knots):
            raise ConfigurationError("knot vector is not the uniform layout of this basis family")
        return Perturbation(int(d["cell_index"]), basis, coeffs)

    def dumps(self):
        return json.dumps(self.to_json_dict())

    @staticmethod
    def loads(s):
        return Perturbation.from_json_dict(json.loads(s))


@dataclass(frozen=True)
class ClosedFormPerturbation:
    """Preset perturbation given by explicit formulas (used for data synthesis)."""

    cell_index: int
    support: tuple
    _f: Callable = field(repr=False)
    _df: Callable = field(repr=False)
    name: str = "custom"

    def value(self, x1):
        x = np.asarray(x1, dtype=float)
        a, b = self.support
        out = np.zeros(x.shape)
        m = (x > a) & (x < b)
        if np.any(m):
            out[m] = self._f(x[m])
        return out

    def derivative(self, x1, order=1):
        if order != 1:
            raise NotImplementedError("closed-form presets expose first derivatives only")
        x = np.asarray(x1, dtype=float)
        a, b = self.support
        out = np.zeros(x.shape)
        m = (x > a) & (x < b)
        if np.any(m):
            out[m] = self._df(x[m])
        return out


def perturbation_preset(name, cell_index=0, literal_p3=False):
    """Named local perturbations ("p1", "p2", "p3"), supported in one cell.

    ``p3`` by default symmetrises the cubic factors to (x-3)^3 (x+3)^3 so the
    bump is twice continuously differentiable at both support endpoints; pass
    ``literal_p3=True`` for the one-sided (x-3)^6 reading.
    """
    shift = cell_index * 2.0 * math.pi
    if name == "p1":
        f = lambda x: -0.25 - 0.25 * np.cos(x - shift)
        df = lambda x: 0.25 * np.sin(x - shift)
        support = (-math.pi + shift, math.pi + shift)
    elif name == "p2":
        f = lambda x: 0.25 + 0.25 * np.cos(x - shift)
        df = lambda x: -0.25 * np.sin(x - shift)
        support = (-math.pi + shift, math.pi + shift)
    elif name == "p3":
        c = 5.0e-4
        w = math.pi / 3.0
        if literal_p3:
            g = lambda x: (x - 3.0) ** 6
            dg = lambda x: 6.0 * (x - 3.0) ** 5
        else:
            g = lambda x: (x - 3.0) ** 3 * (x + 3.0) ** 3
            dg = lambda x: 3.0 * (x - 3.0) ** 2 * (x + 3.0) ** 2 * (2.0 * x)
        f = lambda x: c * g(x - shift) * np.sin(w * ((x - shift) + 3.0))
        df = lambda x: c * (
            dg(x - shift) * np.sin(w * ((x - shift) + 3.0))
            + g(x - shift) * w * np.cos(w * ((x - shift) + 3.0))
        )
        support = (-3.0 + shift, 3.0 + shift)
    else:
        raise ConfigurationError(f"unknown perturbation preset {name!r}")
    return ClosedFormPerturbation(cell_index, support, f, df, name=name)


def eval_perturbation(perturbation, x1):
    """Perturbation height offset p(x1); identically zero outside its cell."""
    return perturbation.value(x1)


def project_onto_basis(target, basis: SplineBasis, shift=0.0):
    """L2-best approximation of ``target`` on the basis cell.

    Returns (coefficients, relative_residual).  ``shift`` translates the
    target so presets living in cell J can be projected onto the reference
    cell basis.
    """
    x, w = basis.quadrature()
    t = np.asarray(target(x + shift), dtype=float)
    B = basis.design_matrix(x)
    gram = (B * w[:, None]).T @ B
    rhs = (B * w[:, None]).T @ t
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > 1e14:
        raise ConfigurationError(f"spline Gram matrix is numerically singular (cond={cond:.3g})")
    coeffs = np.linalg.solve(gram, rhs)
    resid = t - B @ coeffs
    norm_t = math.sqrt(float(np.sum(w * t * t)))
    rel = math.sqrt(float(np.sum(w * resid * resid))) / norm_t if norm_t > 0 else 0.0
    return coeffs, rel


class DiffeoField:
    """The map Phi_p, its analytic Jacobian and the induced PDE coefficients.

    Phi_p(x) = (x1, x2 + q(x) p(x1)) with q(x) = (x2-H)^3 / (zeta(x1)-H)^3,
    the identity outside the perturbed cell and on the artificial boundary.
    """

    def __init__(self, surface, perturbation, height):
        self.surface = surface
        self.perturbation = perturbation
        self.height = float(height)
        lo, hi = perturbation.support
        xs = np.linspace(lo, hi, 2049)
        sup_p = float(np.max(surface(xs) + perturbation.value(xs))) if hi > lo else -np.inf
        if self.height <= max(surface.sup_height, sup_p):
            raise GeometryError(
                f"artificial boundary H={height} must exceed both surface suprema"
            )

    def map(self, points):
        """Apply Phi_p to points of shape (..., 2)."""
        pts = np.asarray(points, dtype=float)
        x1, x2 = pts[..., 0], pts[..., 1]
        H = self.height
        zeta = self.surface(x1)
        p = self.perturbation.value(x1)
        q = (x2 - H) ** 3 / (zeta - H) ** 3
        out = pts.copy()
        out[..., 1] = x2 + q * p
        return out

    def jacobian(self, points):
        """Analytic Jacobian of Phi_p, shape (..., 2, 2)."""
        pts = np.asarray(points, dtype=float)
        x1, x2 = pts[..., 0], pts[..., 1]
        H = self.height
        zeta = self.surface(x1)
        dzeta = self.surface.slope(x1)
        p = self.perturbation.value(x1)
        dp = self.perturbation.derivative(x1)
        d = zeta - H
        cube = (x2 - H) ** 3
        # d/dx1 [p / d^3] = p'/d^3 - 3 p zeta'/d^4
        j21 = cube * (dp / d**3 - 3.0 * p * dzeta / d**4)
        j22 = 1.0 + 3.0 * (x2 - H) ** 2 * p / d**3
        J = np.zeros(pts.shape[:-1] + (2, 2))
        J[..., 0, 0] = 1.0
        J[..., 1, 0] = j21
        J[..., 1, 1] = j22
        return J

    def det_jacobian(self, points):
        return self.jacobian(points)[..., 1, 1]

    def check_validity(self, quad_points, min_det=0.1):
        """Reject perturbations whose transformation degenerates.

        Newton steps can propose large coefficients; requiring
        det grad Phi_p > ``min_det`` on the quadrature points keeps the
        transformed problem uniformly elliptic.
        """
        d = self.det_jacobian(quad_points)
        dmin = float(np.min(d))
        if dmin <= min_det:
            raise InvalidPerturbationError(
                f"min det grad Phi_p = {dmin:.4f} <= {min_det} on quadrature points"
            )
        return dmin


def build_diffeomorphism(surface, perturbation, height):
    """Construct the cell-supported transformation for (surface, perturbation, H)."""
    return DiffeoField(surface, perturbation, height)


def material_coefficients(diffeo: DiffeoField, points):
    """Coefficient pair (A_p, c_p) of the transformed Helmholtz operator.

    A_p = |det J| J^{-1} J^{-T} and c_p = |det J| for J = grad Phi_p.  With
    J = [[1, 0], [b, d]] this reduces to A_p = [[d, -b], [-b, (1+b^2)/d]],
    c_p = d, which is what is evaluated here (d > 0 is enforced upstream).
    """
    J = diffeo.jacobian(points)
    b = J[..., 1, 0]
    d = J[..., 1, 1]
    if np.any(d <= 0):
        raise InvalidPerturbationError("det grad Phi_p <= 0 at a requested point")
    A = np.zeros(J.shape)
    A[..., 0, 0] = d
    A[..., 0, 1] = -b
    A[..., 1, 0] = -b
    A[..., 1, 1] = (1.0 + b * b) / d
    return A, d
