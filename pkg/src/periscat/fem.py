"""Finite elements on the periodic cell with the modal radiation closure.

Per quasimomentum node the cell problem is a P1 Helmholtz system with
  * exact quasi-periodic identification of the right boundary with the left
    (phase-shifted elimination, no penalty),
  * homogeneous or lifted Dirichlet values on the surface,
  * the Dirichlet-to-Neumann block on the artificial boundary assembled from
    exact integrals of hat functions against the retained Rayleigh modes.

The locally perturbed problem couples all quasimomentum blocks through a
single-cell correction form; it is reduced to one cell-sized unknown (the
physical field on the perturbed cell) and solved by GMRES preconditioned by
the factorized per-node blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import solve_banded

from .bloch import BlochField, QuasiMomentumGrid, bloch_of_herglotz
from .errors import AnomalyError, ConfigurationError, GeometryError, SolverError
from .geometry import build_diffeomorphism, material_coefficients
from .mesh import CellMesh, build_cell_mesh

__all__ = [
    "DtnConfig",
    "AlphaSystem",
    "assemble_cell_matrices",
    "assemble_alpha_system",
    "assemble_coupling_matrix",
    "hat_mode_integrals",
    "apply_dtn_nodal",
    "rayleigh_coefficients",
    "propagate_field",
    "solve_unperturbed",
    "solve_perturbed",
    "solve_quasi_periodic_dirichlet",
    "solve_bloch_coupled",
    "surface_flux",
    "scattered_rayleigh",
]


@dataclass(frozen=True)
class DtnConfig:
    """Radiation-closure truncation: modes |j| <= j_max at wavenumber k."""

    wavenumber: float
    j_max: int
    period: float

    def __post_init__(self):
        needed = int(math.ceil(self.wavenumber / self.reciprocal)) + 2
        if self.j_max < needed:
            raise ConfigurationError(
                f"DtN truncation j_max={self.j_max} keeps too few modes; need >= {needed}"
            )

    @property
    def reciprocal(self):
        return 2.0 * math.pi / self.period

    @property
    def modes(self):
        return np.arange(-self.j_max, self.j_max + 1)

    def betas(self, alpha):
        """Vertical wavenumbers sqrt(k^2 - |L* j - alpha|^2) on the UPRC branch."""
        xi = self.reciprocal * self.modes - alpha
        return np.sqrt(self.wavenumber**2 - xi**2 + 0j)


def default_dtn(k, period, margin=8):
    j_max = int(math.ceil(k / (2.0 * math.pi / period))) + margin
    return DtnConfig(k, j_max, period)


def hat_mode_integrals(x_nodes, mu):
    """Exact integrals q[n] = int hat_n(x) exp(-i mu x) dx on a 1-D partition.

    Evaluated element by element in closed form, with a series fallback for
    small phase increments so the formula stays stable as mu -> 0.
    """
    x = np.asarray(x_nodes, dtype=float)
    L = np.diff(x)
    z = -1j * mu * L
    small = np.abs(z) < 1e-5
    zs = np.where(small, 1.0, z)  # placeholder to avoid 0/0
    ez = np.exp(z)
    int_t = np.where(
        small,
        0.5 + z / 3.0 + z**2 / 8.0 + z**3 / 30.0,
        (ez * (zs - 1.0) + 1.0) / zs**2,
    )
    int_one = np.where(small, 1.0 + z / 2.0 + z**2 / 6.0 + z**3 / 24.0, (ez - 1.0) / zs)
    phase = np.exp(-1j * mu * x[:-1])
    left = L * phase * (int_one - int_t)   # weight of the left node of each element
    right = L * phase * int_t              # weight of the right node
    q = np.zeros(len(x), dtype=complex)
    q[:-1] += left
    q[1:] += right
    return q


def assemble_cell_matrices(mesh: CellMesh):
    """Plain P1 stiffness and mass matrices on the full node set (real, CSR)."""
    tris = mesh.triangles
    p = mesh.nodes[tris]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    area = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    if np.any(area <= 0):
        raise GeometryError("degenerate or inverted triangle in cell mesh")
    # gradients of barycentric coordinates
    b = np.stack(
        [p[:, 1, 1] - p[:, 2, 1], p[:, 2, 1] - p[:, 0, 1], p[:, 0, 1] - p[:, 1, 1]], axis=1
    )
    c = np.stack(
        [p[:, 2, 0] - p[:, 1, 0], p[:, 0, 0] - p[:, 2, 0], p[:, 1, 0] - p[:, 0, 0]], axis=1
    )
    inv4a = 1.0 / (4.0 * area)
    ke = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]) * inv4a[:, None, None]
    me = (np.ones((3, 3)) + np.eye(3))[None, :, :] * (area[:, None, None] / 12.0)
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    n = mesh.n_nodes
    K = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((me.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    return K, M


def _triangle_midpoints(mesh):
    p = mesh.nodes[mesh.triangles]
    return 0.5 * (p[:, [0, 1, 2]] + p[:, [1, 2, 0]])  # (T, 3, 2)


def assemble_coupling_matrix(mesh: CellMesh, surface, perturbation, height,
                             k, min_det=0.1):
    """Single-cell correction form from the transformed coefficients.

    B[m, n] = int (A_p - I) grad hat_n . grad hat_m - k^2 (c_p - 1) hat_n hat_m
    over the perturbed cell, with coefficients evaluated at the physical cell
    (reference coordinates shifted by J * Lambda).  Edge-midpoint quadrature,
    exact for quadratic integrands.  Returns None when the perturbation is
    numerically zero.
    """
    coeffs = getattr(perturbation, "coefficients", None)
    if coeffs is not None and not np.any(coeffs):
        return None
    diffeo = build_diffeomorphism(surface, perturbation, height)
    shift = perturbation.cell_index * surface.period
    mids = _triangle_midpoints(mesh) + np.array([shift, 0.0])
    diffeo.check_validity(mids.reshape(-1, 2), min_det=min_det)
    A, c = material_coefficients(diffeo, mids)  # (T, 3, 2, 2), (T, 3)
    dA = A - np.eye(2)
    dc = c - 1.0
    keep = (np.abs(dA).max(axis=(1, 2, 3)) > 1e-15) | (np.abs(dc).max(axis=1) > 1e-15)
    if not np.any(keep):
        return None
    tris = mesh.triangles[keep]
    p = mesh.nodes[tris]
    dA = dA[keep].mean(axis=1)  # midpoint average per triangle
    dc = dc[keep]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    area = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    b = np.stack([p[:, 1, 1] - p[:, 2, 1], p[:, 2, 1] - p[:, 0, 1], p[:, 0, 1] - p[:, 1, 1]], axis=1)
    cc = np.stack([p[:, 2, 0] - p[:, 1, 0], p[:, 0, 0] - p[:, 2, 0], p[:, 1, 0] - p[:, 0, 0]], axis=1)
    grads = np.stack([b, cc], axis=2) / (2.0 * area[:, None, None])  # (T, 3, 2)
    ke = np.einsum("tiu,tuv,tjv,t->tij", grads, dA, grads, area)
    # mass with varying coefficient: edge-midpoint rule; hat values at
    # midpoints are 1/2 on the two adjacent vertices
    mid_vals = 0.5 * (np.eye(3) + np.roll(np.eye(3), -1, axis=0))  # (3 mids, 3 verts)
    me = np.einsum("tq,qi,qj,t->tij", dc, mid_vals, mid_vals, area / 3.0)
    be = ke - k * k * me
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    n = mesh.n_nodes
    return sp.coo_matrix((be.ravel(), (rows, cols)), shape=(n, n)).tocsr()


class AlphaSystem:
    """One quasimomentum block: reduced operator, loads, lifting, factorization."""

    def __init__(self, mesh, alpha, k, dtn, cell_matrices=None):
        self.mesh = mesh
        self.alpha = float(alpha)
        self.k = float(k)
        self.dtn = dtn
        K, M = cell_matrices if cell_matrices is not None else assemble_cell_matrices(mesh)
        betas = dtn.betas(alpha)
        if np.any(np.abs(betas) < 1e-8):
            raise AnomalyError(f"Wood anomaly at alpha={alpha}: beta ~ 0")
        self.betas = betas
        top = mesh.top_nodes
        xt = mesh.nodes[top, 0]
        n = mesh.n_nodes
        # DtN block: -(i/Lambda) sum_j beta_j conj(q_j) q_j^T on the trace
        self.q_modes = np.stack(
            [hat_mode_integrals(xt, dtn.reciprocal * j - alpha) for j in dtn.modes]
        )  # (n_modes, n_top)
        blk = (1j / mesh.period) * (
            (self.q_modes.conj() * betas[:, None]).T @ self.q_modes
        )
        T_dtn = sp.coo_matrix(
            (
                blk.ravel(),
                (
                    np.repeat(top, len(top)),
                    np.tile(top, len(top)),
                ),
            ),
            shape=(n, n),
        ).tocsr()
        self.A_full = (K - (k * k) * M).astype(complex) - T_dtn
        self._build_reduction()
        self._lu = None

    def _build_reduction(self):
        mesh = self.mesh
        n = mesh.n_nodes
        phase = np.exp(-1j * self.alpha * mesh.period)
        self.qp_phase = phase
        dirichlet = set(mesh.surface_nodes.tolist())
        right = mesh.right_nodes
        left = mesh.left_nodes
        partner = dict(zip(right.tolist(), left.tolist()))
        red_index = {}
        for node in range(n):
            if node in dirichlet or node in partner:
                continue
            red_index[node] = len(red_index)
        rows, cols, vals = [], [], []
        for node in range(n):
            if node in dirichlet:
                continue
            if node in partner:
                ell = partner[node]
                if ell in dirichlet:
                    continue
                rows.append(node)
                cols.append(red_index[ell])
                vals.append(phase)
            else:
                rows.append(node)
                cols.append(red_index[node])
                vals.append(1.0 + 0j)
        self.n_reduced = len(red_index)
        self.R = sp.coo_matrix((vals, (rows, cols)), shape=(n, self.n_reduced)).tocsr()
        self.A_red = (self.R.conj().T @ self.A_full @ self.R).tocsc()

    @property
    def lu(self):
        if self._lu is None:
            self._lu = spla.splu(self.A_red)
        return self._lu

    def dirichlet_lift(self, surface_values):
        """Full-space lifting with prescribed surface node values.

        The value at the right-bottom corner is forced to the phase-shifted
        left value so the lifted trace stays quasi-periodic.
        """
        lift = np.zeros(self.mesh.n_nodes, dtype=complex)
        vals = np.asarray(surface_values, dtype=complex)
        if vals.shape != self.mesh.surface_nodes.shape:
            raise ConfigurationError("need one Dirichlet value per surface node")
        lift[self.mesh.surface_nodes] = vals
        corner_r = self.mesh.surface_nodes[-1]
        corner_l = self.mesh.surface_nodes[0]
        lift[corner_r] = self.qp_phase * lift[corner_l]
        return lift

    def load_from_top_modes(self, mode_indices, amplitudes):
        """Boundary load b[n] = int f hat_n with f = sum_m c_m exp(i (L* m - alpha) x1)."""
        b = np.zeros(self.mesh.n_nodes, dtype=complex)
        xt = self.mesh.nodes[self.mesh.top_nodes, 0]
        for m, c in zip(mode_indices, amplitudes):
            q = hat_mode_integrals(xt, self.dtn.reciprocal * m - self.alpha)
            b[self.mesh.top_nodes] += c * np.conj(q)
        return b

    def load_from_top_values(self, values):
        """Boundary load from nodal values of a band-limited top datum.

        The datum is expanded in the grid modes by DFT over the nx distinct
        top nodes, then integrated exactly against the hats.
        """
        mesh = self.mesh
        nx = mesh.nx
        xt = mesh.nodes[mesh.top_nodes[:-1], 0]
        vals = np.asarray(values, dtype=complex)
        if len(vals) == len(mesh.top_nodes):
            vals = vals[:-1]
        ms = np.arange(-(nx // 2), nx - nx // 2)
        # coefficients c_m = (1/nx) sum_n v_n exp(-i (L* m - alpha) x_n)
        E = np.exp(-1j * np.outer(self.dtn.reciprocal * ms - self.alpha, xt))
        coeffs = (E @ vals) / nx
        b = np.zeros(mesh.n_nodes, dtype=complex)
        xt_full = mesh.nodes[mesh.top_nodes, 0]
        for m, c in zip(ms, coeffs):
            q = hat_mode_integrals(xt_full, self.dtn.reciprocal * m - self.alpha)
            b[mesh.top_nodes] += c * np.conj(q)
        return b

    def solve(self, b_full, lift=None):
        """Solve the block for one right-hand side; returns full nodal values."""
        rhs = np.asarray(b_full, dtype=complex)
        if lift is not None:
            rhs = rhs - self.A_full @ lift
        u_red = self.lu.solve(self.R.conj().T @ rhs)
        u_full = self.R @ u_red
        if lift is not None:
            u_full = u_full + lift
        return u_full


def assemble_alpha_system(mesh, alpha, k, dtn, cell_matrices=None):
    """Spec-level constructor for one quasimomentum block."""
    return AlphaSystem(mesh, alpha, k, dtn, cell_matrices=cell_matrices)


def apply_dtn_nodal(trace, alpha, x1_nodes, dtn):
    """Modal application of the radiation map on a uniform trace grid.

    Analysis by DFT over the distinct nodes (exact for band-limited data),
    multiplication with the symbol i beta_j, synthesis at the same nodes.
    """
    vals = np.asarray(trace, dtype=complex)
    x = np.asarray(x1_nodes, dtype=float)
    n = len(x)
    betas = dtn.betas(alpha)
    E = np.exp(-1j * np.outer(dtn.reciprocal * dtn.modes - alpha, x))
    coeffs = (E @ vals) / n
    return (1j * betas * coeffs) @ np.conj(E)


def rayleigh_coefficients(trace, alpha, dtn, x1_nodes):
    """Modal coefficients of a quasi-periodic trace on the uniform top grid.

    trace(x1) = sum_j  w_j exp(i (L* j - alpha) x1); coefficients are exact
    for data band-limited to the retained modes.
    """
    vals = np.asarray(trace, dtype=complex)
    x = np.asarray(x1_nodes, dtype=float)
    if len(vals) != len(x):
        raise ConfigurationError("trace and abscissas differ in length")
    E = np.exp(-1j * np.outer(dtn.reciprocal * dtn.modes - alpha, x))
    return (E @ vals) / len(x)


def propagate_field(coeffs, alpha, dtn, ref_height, x1, x2):
    """Evaluate the upward modal expansion at height(s) x2 >= reference height."""
    x2a = np.asarray(x2, dtype=float)
    if np.any(x2a < ref_height - 1e-12):
        raise GeometryError("propagation is only valid on or above the reference height")
    betas = dtn.betas(alpha)
    xi = dtn.reciprocal * dtn.modes - alpha
    x1a = np.asarray(x1, dtype=float)
    ph = np.exp(1j * (np.multiply.outer(x1a, xi) + np.multiply.outer(x2a - ref_height, betas)))
    return ph @ np.asarray(coeffs, dtype=complex)


def _herglotz_boundary_load(system: AlphaSystem, density):
    """Top datum of the incident field: f = (d/dx2 - T_alpha) (transformed incident)."""
    k = system.k
    H = system.mesh.height
    ms, amps, xi, betas = bloch_of_herglotz(density, k, system.alpha, system.mesh.period)
    c = amps * (-2j * betas) * np.exp(-1j * betas * H)
    return system.load_from_top_modes(ms, c)


def build_alpha_systems(mesh, grid, k, dtn):
    KM = assemble_cell_matrices(mesh)
    return [AlphaSystem(mesh, a, k, dtn, cell_matrices=KM) for a in grid.nodes]


def solve_unperturbed(mesh, grid, incident, k, dtn, systems=None):
    """Total transformed field of the unperturbed surface, per quasimomentum node."""
    systems = systems or build_alpha_systems(mesh, grid, k, dtn)
    vals = np.empty((grid.m_nodes, mesh.n_nodes), dtype=complex)
    for i, system in enumerate(systems):
        try:
            vals[i] = system.solve(_herglotz_boundary_load(system, incident))
        except RuntimeError as exc:  # pragma: no cover - factorization failure
            raise SolverError(f"block solve failed at alpha index {i}: {exc}",
                              alpha_index=i) from exc
    return BlochField(grid, vals, mesh)


def solve_bloch_coupled(systems, grid, loads, lifts=None, coupling=None,
                        cell_index=0, tol=1e-8, maxiter=200):
    """Solve the quasimomentum family coupled through one perturbed cell.

    Equations (one per node i):
        A_i w_i + sqrt(L/2pi) e^{i alpha_i L J} B s = b_i,
        s = sqrt(2pi/L)/M * sum_i e^{-i alpha_i L J} w_i   (physical cell field)

    which reduces to a single cell-sized fixed-point equation for s solved by
    GMRES; the per-node blocks act as the (exact) preconditioner.  Without a
    coupling matrix the blocks are independent.
    """
    m = grid.m_nodes
    lam = grid.period
    if lifts is None:
        lifts = [None] * m
    red_rhs = []
    for system, b, lift in zip(systems, loads, lifts):
        rhs = np.asarray(b, dtype=complex)
        if lift is not None:
            rhs = rhs - system.A_full @ lift
        red_rhs.append(system.R.conj().T @ rhs)

    if coupling is None:
        vals = np.empty((m, systems[0].mesh.n_nodes), dtype=complex)
        for i, (system, lift) in enumerate(zip(systems, lifts)):
            u = system.R @ system.lu.solve(red_rhs[i])
            if lift is not None:
                u = u + lift
            vals[i] = u
        return BlochField(grid, vals, systems[0].mesh), {"iterations": 0, "residual": 0.0}

    B = coupling
    J = cell_index
    kappa = math.sqrt(2.0 * math.pi / lam) / m
    gamma = math.sqrt(lam / (2.0 * math.pi)) * np.exp(1j * grid.nodes * lam * J)
    phase_out = np.exp(-1j * grid.nodes * lam * J)

    base = []  # uncoupled block solutions (full space, with lifts)
    for i, (system, lift) in enumerate(zip(systems, lifts)):
        u = system.R @ system.lu.solve(red_rhs[i])
        if lift is not None:
            u = u + lift
        base.append(u)
    s0 = kappa * sum(phase_out[i] * base[i] for i in range(m))

    n = systems[0].mesh.n_nodes

    def matvec(t):
        Bt = B @ t
        acc = np.array(t, dtype=complex)
        for i, system in enumerate(systems):
            acc += (1.0 / m) * (system.R @ system.lu.solve(system.R.conj().T @ Bt))
        return acc

    op = spla.LinearOperator((n, n), matvec=matvec, dtype=complex)
    iters = [0]

    def cb(_):
        iters[0] += 1

    s, info = spla.gmres(op, s0, rtol=min(tol, 1e-10), atol=0.0,
                         maxiter=maxiter, callback=cb, callback_type="pr_norm")
    if info != 0:
        raise SolverError(f"coupled outer iteration failed to converge (info={info})",
                          residual=float(np.linalg.norm(matvec(s) - s0)))

    Bs = B @ s
    vals = np.empty((m, n), dtype=complex)
    for i, (system, lift) in enumerate(zip(systems, lifts)):
        u = system.R @ system.lu.solve(red_rhs[i] - gamma[i] * (system.R.conj().T @ Bs))
        if lift is not None:
            u = u + lift
        vals[i] = u

    # full-system relative residual (diagnostic; the blocks are solved by LU)
    s_check = kappa * sum(phase_out[i] * vals[i] for i in range(m))
    res = float(np.linalg.norm(matvec(s) - s0) / max(np.linalg.norm(s0), 1e-300))
    drift = float(np.linalg.norm(s_check - s) / max(np.linalg.norm(s), 1e-300))
    if res > tol:
        raise SolverError(f"coupled solve residual {res:.3e} exceeds {tol}", residual=res)
    return (
        BlochField(grid, vals, systems[0].mesh),
        {"iterations": iters[0], "residual": res, "consistency": drift},
    )


def solve_perturbed(mesh, grid, incident, perturbation, k, dtn, systems=None,
                    tol=1e-8, maxiter=200, min_det=0.1):
    """Transformed total field with a local perturbation (coupled family).

    Returns (BlochField of w_T, solve info).
    """
    systems = systems or build_alpha_systems(mesh, grid, k, dtn)
    loads = [_herglotz_boundary_load(s, incident) for s in systems]
    B = assemble_coupling_matrix(mesh, mesh.surface, perturbation, mesh.height, k,
                                 min_det=min_det)
    return solve_bloch_coupled(systems, grid, loads, coupling=B,
                               cell_index=perturbation.cell_index,
                               tol=tol, maxiter=maxiter)


def solve_quasi_periodic_dirichlet(mesh, alpha, k, dtn, dirichlet_values=None,
                                   top_load=None, system=None):
    """Single-block solve with nonhomogeneous surface data via lifting."""
    system = system or AlphaSystem(mesh, alpha, k, dtn)
    b = np.zeros(mesh.n_nodes, dtype=complex) if top_load is None else np.asarray(top_load)
    lift = None
    if dirichlet_values is not None:
        lift = system.dirichlet_lift(dirichlet_values)
    return system.solve(b, lift=lift)


def scattered_rayleigh(field: BlochField, incident, k, dtn):
    """Rayleigh coefficients (at the artificial boundary) of the scattered part.

    Subtracts the transformed incident trace from the total trace per node and
    analyses the result in the retained modes.  Shape (M, n_modes).
    """
    mesh = field.mesh
    grid = field.grid
    xt = mesh.nodes[mesh.top_nodes[:-1], 0]
    H = mesh.height
    out = np.empty((grid.m_nodes, len(dtn.modes)), dtype=complex)
    for i, alpha in enumerate(grid.nodes):
        trace = field.values[i][mesh.top_nodes[:-1]]
        if incident is not None:
            ms, amps, xi, betas = bloch_of_herglotz(incident, k, alpha, mesh.period)
            inc = (np.exp(1j * np.outer(xt, xi) - 1j * H * betas[None, :])) @ amps
            trace = trace - inc
        out[i] = rayleigh_coefficients(trace, alpha, dtn, xt)
    return out


def synthesize_at(coeffs_per_alpha, grid, dtn, ref_height, x1, x2):
    """Physical-field synthesis from per-node modal coefficients.

    u(x) = (1/M) sum_i sum_j c[i, j] exp(i (L* j - alpha_i) x1 + i beta_j (x2 - H));
    the modal phases continue the quasi-periodic folding to arbitrary x1.
    """
    x1a = np.asarray(x1, dtype=float)
    vals = np.zeros(x1a.shape, dtype=complex)
    for i, alpha in enumerate(grid.nodes):
        vals += propagate_field(coeffs_per_alpha[i], alpha, dtn, ref_height, x1a, x2)
    return vals / grid.m_nodes


def surface_flux(mesh: CellMesh, operator_full, cell_field, slope_at_nodes):
    """Variational recovery of the upward co-normal derivative on the surface.

    Solves the surface mass-matrix system (arclength measure, parameterized by
    x1) for the Neumann trace of the residual functional; superior to direct
    gradient sampling for P1 elements.  The sign convention is the upward
    normal.  End-node values carry no side-edge correction; downstream
    pairings multiply by functions vanishing there.
    """
    r = (operator_full @ np.asarray(cell_field, dtype=complex))[mesh.surface_nodes]
    x = mesh.x1_grid
    w = np.sqrt(1.0 + np.asarray(slope_at_nodes, dtype=float) ** 2)
    h = np.diff(x)
    wm = 0.5 * (w[:-1] + w[1:])  # trapezoid-consistent arclength weight per element
    main = np.zeros(len(x))
    main[:-1] += h * wm / 3.0
    main[1:] += h * wm / 3.0
    off = h * wm / 6.0
    ab = np.zeros((3, len(x)), dtype=complex)
    ab[0, 1:] = off
    ab[1, :] = main
    ab[2, :-1] = off
    lam = solve_banded((1, 1), ab, r)
    return -lam
