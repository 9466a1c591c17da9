"""Scattering matrices from the truncated quadratic functional.

For every propagating mode j, the truncated impedance problem is solved
twice, with the impedance datum of the incoming wave u_j^+ and of the
outgoing wave u_j^-.  Writing w_j and z_j for the cross-section trace
residues D(v_j^- - u_j^-) and D(v_j^+ - u_j^+), the Hermitian Gram matrices

    E_ij = (w_i, w_j),   F_ij = (z_i, w_j),   G_i = (z_i, z_i)

define, per incoming mode l, the quadratic functional

    J_l(a) = <a E, a> + 2 Re <F_l, a> + G_l = || z_l + sum_j a_j w_j ||^2,

whose unique minimizer row a0 solves a0 E + F_l = 0 and approximates row l
of the scattering matrix with an error decaying exponentially in the
truncation radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, NumericsError, SingularGramError, WavescatError
from .geometry import WaveguideScene, truncate
from .helmholtz import BoundaryData, TruncatedSystem, assemble, solve
from .mesh import TraceMesh, generate
from .spectral import (
    INCOMING,
    OUTGOING,
    PropagatingMode,
    TransverseBasis,
    Wave,
    enumerate_modes,
    gamma_estimate,
    make_wave,
    transverse_eigs,
)

_COND_LIMIT = 1.0 / (100.0 * np.finfo(float).eps)


@dataclass(frozen=True, eq=False)
class GramMatrices:
    """Cross-section Gram matrices of the trace residues."""

    E: np.ndarray        # (M, M) Hermitian positive semidefinite
    F: np.ndarray        # (M, M)
    G_diag: np.ndarray   # (M,) nonnegative
    R: float
    mu: float

    @property
    def M(self) -> int:
        return len(self.G_diag)

    def cond_E(self) -> float:
        w = np.linalg.eigvalsh(self.E)
        return float(w[-1] / max(w[0], np.finfo(float).tiny))

    def min_eig_E(self) -> float:
        return float(np.linalg.eigvalsh(self.E)[0])


@dataclass(frozen=True, eq=False)
class ScatteringResult:
    """Scattering matrix approximation with its quality diagnostics."""

    S: np.ndarray               # (M, M); row l = minimizer for incoming mode l
    J: np.ndarray               # (M,) functional values at the minimizers
    unitarity_defect: float     # || S S^H - I ||_F
    cond_E: float
    min_eig_E: float
    minimizer_norms: np.ndarray  # (M,) sum_j |a_j|^2 per row
    mu: float
    R: float
    h: float
    zeta: float
    modes: tuple[PropagatingMode, ...]
    gram: GramMatrices


def trace_inner(f: np.ndarray, g: np.ndarray, traces: Sequence[TraceMesh]) -> complex:
    """L2(Gamma) inner product of concatenated per-end trace vectors."""
    total = sum(len(tm.y) for tm in traces)
    if len(f) != total or len(g) != total:
        raise WavescatError("trace length mismatch")
    out = 0.0 + 0.0j
    pos = 0
    for tm in traces:
        n = len(tm.y)
        out += np.conj(g[pos:pos + n]) @ (tm.mass @ f[pos:pos + n])
        pos += n
    return complex(out)


def _block_mass_apply(vecs: np.ndarray, traces: Sequence[TraceMesh]) -> np.ndarray:
    total = sum(len(tm.y) for tm in traces)
    if vecs.shape[0] != total:
        raise WavescatError("trace length mismatch")
    out = np.empty_like(vecs)
    pos = 0
    for tm in traces:
        n = len(tm.y)
        out[pos:pos + n] = tm.mass @ vecs[pos:pos + n]
        pos += n
    return out


def assemble_gram(
    v_minus: np.ndarray,
    v_plus: np.ndarray,
    u_minus: np.ndarray,
    u_plus: np.ndarray,
    traces: Sequence[TraceMesh],
    R: float,
    mu: float,
) -> GramMatrices:
    """Build E, F, G from (M, n) arrays of concatenated cross-section traces.

    Rows index modes, columns the trace nodes of all ends in order.  The
    Hermitian structure of E is asserted rather than assumed.
    """
    W = (v_minus - u_minus).T   # columns w_j
    Z = (v_plus - u_plus).T
    MW = _block_mass_apply(W, traces)
    E = (W.conj().T @ MW).T     # E_ij = (w_i, w_j)
    F = (Z.T @ MW.conj())       # F_ij = (z_i, w_j) = sum z_i conj(M w_j)
    G = np.real(np.sum(Z.conj() * _block_mass_apply(Z, traces), axis=0))
    herm_defect = np.linalg.norm(E - E.conj().T)
    if herm_defect > 1e-12 * max(np.linalg.norm(E), 1e-300):
        raise NumericsError(f"Gram matrix lost Hermitian symmetry: {herm_defect:.3e}")
    E = 0.5 * (E + E.conj().T)
    return GramMatrices(E=E, F=F, G_diag=np.maximum(G, 0.0), R=float(R), mu=float(mu))


def minimize_row(gram: GramMatrices, l: int) -> tuple[np.ndarray, float]:
    """Minimizer row a0 of J_l and the value J_l(a0) >= 0."""
    cond = gram.cond_E()
    if not np.isfinite(cond) or cond >= _COND_LIMIT or gram.min_eig_E() <= 0.0:
        raise SingularGramError(
            f"Gram matrix numerically singular at R={gram.R!r} "
            f"(cond={cond:.3e}); the truncation radius is below the "
            "nonsingularity onset -- increase R"
        )
    a0 = np.linalg.solve(gram.E.T, -gram.F[l])
    residual = np.linalg.norm(a0 @ gram.E + gram.F[l])
    if residual > 1e-10 * max(np.linalg.norm(gram.F), 1e-300):
        raise NumericsError(f"normal equation residual {residual:.3e} too large")
    J = functional_value(gram, l, a0)
    return a0, J


def functional_value(gram: GramMatrices, l: int, a: np.ndarray) -> float:
    """J_l(a), clamped at zero for roundoff-level negative values."""
    val = float(
        np.real(np.vdot(a, a @ gram.E) + 2.0 * np.vdot(a, gram.F[l]))
        + gram.G_diag[l]
    )
    tol = 1e-12 * (1.0 + abs(gram.G_diag[l]))
    if val < -tol:
        raise NumericsError(f"functional value {val!r} is negative beyond roundoff")
    return max(val, 0.0)


# ---------------------------------------------------------------------------
# end-to-end pipeline
# ---------------------------------------------------------------------------

def scene_bases(scene: WaveguideScene, mu: float, guard: float = 1e-3,
                grid_n: int = 256) -> list[TransverseBasis]:
    bases = []
    for end in scene.ends:
        count = int(math.ceil(end.width * math.sqrt(max(mu, 0.0) + 1.0) / math.pi)) + 2
        bases.append(
            transverse_eigs(end.cross_section, count, grid_n=grid_n, end_index=end.index)
        )
    return bases


def wave_boundary_data(
    wave: Wave, traces: Sequence[TraceMesh], zeta: float, R: float
) -> BoundaryData:
    """Impedance datum (N + i zeta D) u of a wave, sampled on trace nodes."""
    per_end = []
    for tm in traces:
        if tm.end_index == wave.mode.end_index:
            per_end.append(wave.impedance_trace(tm.y, R, zeta))
        else:
            per_end.append(np.zeros(len(tm.y), dtype=complex))
    return BoundaryData(tuple(per_end))


def wave_trace(wave: Wave, traces: Sequence[TraceMesh], R: float) -> np.ndarray:
    """Concatenated Dirichlet trace of a wave over all cross-sections."""
    parts = []
    for tm in traces:
        if tm.end_index == wave.mode.end_index:
            parts.append(wave.dirichlet_trace(tm.y, R))
        else:
            parts.append(np.zeros(len(tm.y), dtype=complex))
    return np.concatenate(parts)


def compute_scattering(
    scene: WaveguideScene,
    mu: float,
    R: float,
    h: float,
    zeta: float = 1.0,
    threshold_guard: float = 1e-3,
    grade_corners: bool = False,
) -> ScatteringResult:
    """Full pipeline: modes -> waves -> 2M truncated solves -> Gram -> S."""
    bases = scene_bases(scene, mu, threshold_guard)
    modes = enumerate_modes(bases, mu, threshold_guard)
    if not modes:
        raise WavescatError(f"no propagating modes at mu={mu!r}")
    waves_out = [make_wave(m, OUTGOING) for m in modes]
    waves_in = [make_wave(m, INCOMING) for m in modes]

    domain = truncate(scene, R)
    mesh = generate(domain, h, grade_corners=grade_corners)
    system = assemble(mesh, mu, zeta)
    traces = system.trace_meshes

    batch = [wave_boundary_data(w, traces, zeta, R) for w in waves_out + waves_in]
    sols = solve(system, batch)
    M = len(modes)

    def sol_trace(sol):
        return np.concatenate([sol.values[tm.node_indices] for tm in traces])

    v_minus = np.array([sol_trace(s) for s in sols[:M]])
    v_plus = np.array([sol_trace(s) for s in sols[M:]])
    u_minus = np.array([wave_trace(w, traces, R) for w in waves_out])
    u_plus = np.array([wave_trace(w, traces, R) for w in waves_in])

    gram = assemble_gram(v_minus, v_plus, u_minus, u_plus, traces, R, mu)
    S = np.empty((M, M), dtype=complex)
    J = np.empty(M)
    for l in range(M):
        S[l], J[l] = minimize_row(gram, l)
    defect = float(np.linalg.norm(S @ S.conj().T - np.eye(M)))
    return ScatteringResult(
        S=S,
        J=J,
        unitarity_defect=defect,
        cond_E=gram.cond_E(),
        min_eig_E=gram.min_eig_E(),
        minimizer_norms=np.sum(np.abs(S) ** 2, axis=1),
        mu=float(mu),
        R=float(R),
        h=float(h),
        zeta=float(zeta),
        modes=tuple(modes),
        gram=gram,
    )


# ---------------------------------------------------------------------------
# convergence studies
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DecayFit:
    rate: float | None       # fitted decay rate (err ~ C e^{-rate * R})
    intercept: float | None
    residual: float | None   # rms residual of the log-linear fit
    used: np.ndarray         # mask of points entering the fit
    floor_limited: bool


def fit_decay_rate(R: np.ndarray, values: np.ndarray, floor: float = 1e-12) -> DecayFit:
    """Least-squares fit of log(values) vs R; points at or below ``floor``
    are excluded.  With fewer than 2 usable points the fit is floor-limited."""
    R = np.asarray(R, dtype=float)
    vals = np.asarray(values, dtype=float)
    used = vals > floor
    if int(used.sum()) < 2:
        return DecayFit(rate=None, intercept=None, residual=None,
                        used=used, floor_limited=True)
    slope, intercept = np.polyfit(R[used], np.log(vals[used]), 1)
    res = np.log(vals[used]) - (slope * R[used] + intercept)
    return DecayFit(
        rate=float(-slope),
        intercept=float(intercept),
        residual=float(np.sqrt(np.mean(res**2))),
        used=used,
        floor_limited=False,
    )


@dataclass(frozen=True, eq=False)
class ConvergenceStudy:
    mu: float
    h: float
    zeta: float
    R_ref: float
    R_values: np.ndarray      # radii compared against the reference
    errors: np.ndarray        # Frobenius distance to the reference matrix
    j_max: np.ndarray         # max_l J_l at each compared radius
    margin: float             # reference exclusion window (2 decay lengths)
    lambda_fit: DecayFit      # rate of the S-matrix error decay
    j_fit: DecayFit           # rate of the functional decay (about 2 gamma)
    results: dict             # R -> ScatteringResult, reference included

    @property
    def lambda_hat(self) -> float | None:
        return self.lambda_fit.rate

    @property
    def two_gamma_hat(self) -> float | None:
        return self.j_fit.rate


def convergence_from_results(
    results: Sequence, gamma_est: float, floor: float = 1e-12
) -> ConvergenceStudy:
    """Fit decay rates from precomputed results (ascending R, last = reference).

    Radii within two decay lengths of the reference are excluded so the
    reference's own truncation error does not contaminate the fit.
    """
    results = sorted(results, key=lambda r: r.R)
    if len(results) < 2:
        raise ConvergenceError("need at least two radii")
    ref = results[-1]
    margin = 2.0 / gamma_est
    usable = [r for r in results[:-1] if r.R <= ref.R - margin + 1e-12]
    if len(usable) < 3:
        raise ConvergenceError(
            f"only {len(usable)} radii below the reference margin; need >= 3"
        )
    R_values = np.array([r.R for r in usable])
    errors = np.array([np.linalg.norm(r.S - ref.S) for r in usable])
    j_max = np.array([float(np.max(r.J)) for r in usable])
    return ConvergenceStudy(
        mu=ref.mu,
        h=ref.h,
        zeta=ref.zeta,
        R_ref=ref.R,
        R_values=R_values,
        errors=errors,
        j_max=j_max,
        margin=margin,
        lambda_fit=fit_decay_rate(R_values, errors, floor),
        j_fit=fit_decay_rate(R_values, j_max, floor=floor**2),
        results={r.R: r for r in results},
    )


def convergence_study(
    scene: WaveguideScene,
    mu: float,
    R_list: Sequence[float],
    h: float,
    zeta: float = 1.0,
    threshold_guard: float = 1e-3,
    grade_corners: bool = False,
) -> ConvergenceStudy:
    """Compute S at every radius and fit the exponential decay rates."""
    R_sorted = sorted(R_list)
    if len(R_sorted) < 4:
        raise ConvergenceError("R_list must contain at least 4 ascending radii")
    results = [
        compute_scattering(scene, mu, R, h, zeta, threshold_guard, grade_corners)
        for R in R_sorted
    ]
    bases = scene_bases(scene, mu, threshold_guard)
    return convergence_from_results(results, gamma_estimate(bases, mu))
