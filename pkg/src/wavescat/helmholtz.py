"""Finite-element solver for the truncated impedance problem.

Weak form on the truncated domain, with linear triangles:

    integral grad(u).grad(v) - mu * integral u v
        + i zeta * integral_Gamma u v  =  integral_Gamma h v,

which discretizes  -Laplace(u) - mu u = 0  with u = 0 on the walls and the
absorbing-type condition  du/dn + i zeta u = h  on the artificial
cross-sections.  Test functions enter unconjugated, so the system matrix is
complex symmetric (A == A^T); wall rows are eliminated symmetrically.

Normal derivatives of discrete solutions are never taken numerically: where
a Neumann trace is needed the boundary condition identity N u = h - i zeta
D u supplies it at full accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidImpedanceError, SingularSystemError, WavescatError
from .mesh import Mesh, TraceMesh, trace_mesh

_RESIDUAL_TOL = 1e-10


@dataclass(eq=False)
class TruncatedSystem:
    """Assembled complex-symmetric operator of the truncated problem."""

    mesh: Mesh
    mu: float
    zeta: float
    trace_meshes: tuple[TraceMesh, ...]
    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    boundary_mass: sp.csr_matrix
    free: np.ndarray              # indices of unconstrained nodes
    matrix: sp.csc_matrix         # reduced system K - mu M + i zeta B
    _lu: object = field(default=None, repr=False)

    def factorization(self):
        if self._lu is None:
            try:
                self._lu = spla.splu(self.matrix)
            except RuntimeError as exc:  # singular factorization
                raise SingularSystemError(
                    f"sparse factorization failed at mu={self.mu!r}, "
                    f"zeta={self.zeta!r}: {exc}"
                ) from exc
        return self._lu


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Nodal values of the impedance datum h on each cross-section."""

    per_end: tuple[np.ndarray, ...]

    def __post_init__(self):
        for arr in self.per_end:
            if not np.all(np.isfinite(arr)):
                raise WavescatError("boundary data contains non-finite values")

    @classmethod
    def zeros(cls, traces: Sequence[TraceMesh]) -> "BoundaryData":
        return cls(tuple(np.zeros(len(t.y), dtype=complex) for t in traces))

    def concatenated(self) -> np.ndarray:
        return np.concatenate([np.asarray(a, dtype=complex) for a in self.per_end])


@dataclass(frozen=True, eq=False)
class FieldSolution:
    """Complex nodal field on the full mesh (walls identically zero)."""

    values: np.ndarray
    system: TruncatedSystem
    residual: float

    def dirichlet_trace(self, end_index: int) -> np.ndarray:
        tm = _trace_for(self.system, end_index)
        return self.values[tm.node_indices]


def _trace_for(system: TruncatedSystem, end_index: int) -> TraceMesh:
    for tm in system.trace_meshes:
        if tm.end_index == end_index:
            return tm
    raise WavescatError(f"system has no trace mesh for end {end_index}")


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def _p1_matrices(nodes: np.ndarray, triangles: np.ndarray):
    """Vectorized stiffness and mass assembly for linear triangles."""
    p = nodes
    t = triangles
    x = p[t, 0]
    y = p[t, 1]
    bmat = np.stack(
        [y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1
    )
    cmat = np.stack(
        [x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1
    )
    area = 0.5 * (bmat[:, 0] * cmat[:, 1] - bmat[:, 1] * cmat[:, 0])
    # K_ij = (b_i b_j + c_i c_j) / (4 A),  M_ij = A/12 (1 + delta_ij)
    K_loc = (
        bmat[:, :, None] * bmat[:, None, :] + cmat[:, :, None] * cmat[:, None, :]
    ) / (4.0 * area)[:, None, None]
    M_base = np.full((3, 3), 1.0 / 12.0)
    np.fill_diagonal(M_base, 2.0 / 12.0)
    M_loc = area[:, None, None] * M_base[None, :, :]
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = len(nodes)
    K = sp.coo_matrix((K_loc.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((M_loc.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    return K, M


def _boundary_mass(mesh: Mesh) -> sp.csr_matrix:
    n = len(mesh.nodes)
    mask = mesh.edge_labels != 0
    edges = mesh.boundary_edges[mask]
    if len(edges) == 0:
        return sp.csr_matrix((n, n))
    p = mesh.nodes
    ell = np.linalg.norm(p[edges[:, 1]] - p[edges[:, 0]], axis=1)
    data = np.concatenate([ell / 3.0, ell / 3.0, ell / 6.0, ell / 6.0])
    rows = np.concatenate([edges[:, 0], edges[:, 1], edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 0], edges[:, 1], edges[:, 1], edges[:, 0]])
    return sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()


def assemble(mesh: Mesh, mu: float, zeta: float) -> TruncatedSystem:
    """Assemble the reduced complex-symmetric system for (mu, zeta != 0).

    The volume mass term averages the consistent and the vertex-rule
    (lumped) quadratures; both are O(h^2)-accurate for the weak form and
    their leading dispersion errors have opposite signs, so the average
    keeps phases accurate over channels hundreds of elements long.
    """
    if zeta == 0.0 or np.imag(zeta) != 0.0:
        raise InvalidImpedanceError("zeta must be real and nonzero")
    zeta = float(np.real(zeta))
    K, M_cons = _p1_matrices(mesh.nodes, mesh.triangles)
    lumped = sp.diags(np.asarray(M_cons.sum(axis=1)).ravel())
    M = (0.5 * (M_cons + lumped)).tocsr()
    B = _boundary_mass(mesh)
    wall = mesh.wall_nodes()
    free = np.setdiff1d(np.arange(len(mesh.nodes)), wall)
    A = (K - mu * M).astype(complex) + 1j * zeta * B
    A_ff = A[np.ix_(free, free)].tocsc()
    traces = tuple(trace_mesh(mesh, e.index) for e in mesh.domain.scene.ends)
    return TruncatedSystem(
        mesh=mesh,
        mu=float(mu),
        zeta=zeta,
        trace_meshes=traces,
        stiffness=K,
        mass=M,
        boundary_mass=B,
        free=free,
        matrix=A_ff,
    )


def boundary_load(system: TruncatedSystem, data: BoundaryData) -> np.ndarray:
    """Full-length load vector B h from nodal impedance data."""
    if len(data.per_end) != len(system.trace_meshes):
        raise WavescatError("boundary data does not match the trace meshes")
    n = len(system.mesh.nodes)
    h_full = np.zeros(n, dtype=complex)
    for tm, vals in zip(system.trace_meshes, data.per_end):
        vals = np.asarray(vals, dtype=complex)
        if len(vals) != len(tm.node_indices):
            raise WavescatError(
                f"end {tm.end_index}: boundary data length {len(vals)} does not "
                f"match trace mesh ({len(tm.node_indices)} nodes)"
            )
        h_full[tm.node_indices] = vals
    return system.boundary_mass @ h_full


def solve(system: TruncatedSystem, rhs_batch: Sequence[BoundaryData]) -> list[FieldSolution]:
    """Solve the truncated problem for a batch of impedance data.

    One sparse LU factorization, one back-substitution per datum; each
    solution is checked against its discrete residual.
    """
    if len(rhs_batch) == 0:
        raise WavescatError("rhs batch is empty")
    lu = system.factorization()
    out = []
    n = len(system.mesh.nodes)
    for data in rhs_batch:
        b_full = boundary_load(system, data)
        b = b_full[system.free]
        bnorm = np.linalg.norm(b)
        if bnorm == 0.0:
            out.append(
                FieldSolution(values=np.zeros(n, dtype=complex), system=system, residual=0.0)
            )
            continue
        x = lu.solve(b)
        res = float(np.linalg.norm(system.matrix @ x - b) / bnorm)
        if not np.isfinite(res) or res > _RESIDUAL_TOL:
            raise SingularSystemError(
                f"discrete residual {res:.3e} exceeds {_RESIDUAL_TOL:.0e} at "
                f"mu={system.mu!r}, zeta={system.zeta!r}"
            )
        full = np.zeros(n, dtype=complex)
        full[system.free] = x
        out.append(FieldSolution(values=full, system=system, residual=res))
    return out


def prop43_check(system: TruncatedSystem, data: BoundaryData) -> tuple[float, float]:
    """Return (||D u||_{L2(Gamma)}, ||h||_{L2(Gamma)} / |zeta|) for the
    solution of the problem with right-hand side (0, 0, h).

    The first never exceeds the second; with the consistent boundary mass the
    discrete inequality is exact, so callers may assert lhs <= rhs * (1 + 1e-6).
    """
    sol = solve(system, [data])[0]
    lhs_sq = 0.0
    rhs_sq = 0.0
    for tm, h_end in zip(system.trace_meshes, data.per_end):
        u_end = sol.values[tm.node_indices]
        lhs_sq += np.real(np.conj(u_end) @ (tm.mass @ u_end))
        h_arr = np.asarray(h_end, dtype=complex)
        rhs_sq += np.real(np.conj(h_arr) @ (tm.mass @ h_arr))
    return float(np.sqrt(max(lhs_sq, 0.0))), float(np.sqrt(max(rhs_sq, 0.0)) / abs(system.zeta))
