"""Independent semi-analytic references for two waveguide families.

Two cross-validation solvers that share no code path with the FEM pipeline:

* the uniform straight guide, where the scattering matrix is known in closed
  form once the sign convention is fixed, and where the truncated impedance
  problem separates into exact 2x2 mode-space systems;
* the symmetric width-step junction, solved by classical mode matching
  (transverse expansion on both sides, continuity of value and normal
  derivative across the aperture, dense truncated solve).

Sign derivation for the straight guide (global coordinate x along the guide,
left cross-section origin at x = 0, right at x = L, outward coordinates
t1 = -x and t2 = x - L):  the bounded solution c e^{i lam x} phi(y) equals
the incoming wave of end 1 near end 1 and e^{i lam L} times the outgoing
wave of end 2 near end 2, so the only nonzero scattering entries are the
transmissions e^{+ i lam L}.  ``straight_guide_truncated_S`` reproduces this
from the truncated quadratic-functional machinery in exact arithmetic, which
is how the convention was verified before being trusted (see the tests).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.lib.scimath import sqrt as csqrt

from .errors import ThresholdProximityError, WavescatError


def _propagating_k(d: float, mu: float, guard: float) -> list[int]:
    out = []
    k = 1
    while True:
        nu = (k * math.pi / d) ** 2
        if abs(mu - nu) < guard:
            raise ThresholdProximityError(mu, nu, 0, k, guard)
        if nu >= mu:
            return out
        out.append(k)
        k += 1


# ---------------------------------------------------------------------------
# uniform straight guide
# ---------------------------------------------------------------------------

def straight_guide_S(
    d: float, mu: float, L1: float, L2: float, threshold_guard: float = 1e-3
) -> np.ndarray:
    """Exact scattering matrix of a uniform guide of width d.

    L1 and L2 are the distances from the two end origins to a common
    reference plane inside the guide (their sum is the full propagation
    length between the origins).  Reflection blocks vanish; transmission is
    diagonal with entries e^{+ i lam_k (L1 + L2)}.  Mode index is
    lexicographic by (end, transverse index), end 1 first.
    """
    ks = _propagating_k(d, mu, threshold_guard)
    m = len(ks)
    S = np.zeros((2 * m, 2 * m), dtype=complex)
    for i, k in enumerate(ks):
        lam = math.sqrt(mu - (k * math.pi / d) ** 2)
        phase = np.exp(1j * lam * (L1 + L2))
        S[i, m + i] = phase
        S[m + i, i] = phase
    return S


def _modal_aux_coeffs(
    lam: float, L: float, R: float, zeta: float, source_end: int, direction: str
) -> tuple[complex, complex]:
    """Coefficients (A, B) of v = A e^{i lam x} + B e^{-i lam x} solving the
    truncated impedance problem on x in [-R, L+R] with datum from one basis
    wave; the datum of a wave is zero on the far cross-section."""
    a = 1j * (zeta - lam)
    b = 1j * (zeta + lam)
    e = np.exp
    M = np.array(
        [
            [a * e(-1j * lam * R), b * e(1j * lam * R)],
            [b * e(1j * lam * (L + R)), a * e(-1j * lam * (L + R))],
        ]
    )
    c = 1.0 / math.sqrt(2.0 * lam)
    rhs = np.zeros(2, dtype=complex)
    row = 0 if source_end == 1 else 1
    rhs[row] = c * (a if direction == "incoming" else b) * e(
        1j * lam * R * (1 if direction == "outgoing" else -1)
    )
    A, B = np.linalg.solve(M, rhs)
    return complex(A), complex(B)


def _modal_wave_trace(lam: float, R: float, source_end: int, direction: str) -> np.ndarray:
    """Dirichlet traces of a basis wave on (Gamma1, Gamma2); zero off its end."""
    c = 1.0 / math.sqrt(2.0 * lam)
    val = c * np.exp(1j * lam * R * (1 if direction == "outgoing" else -1))
    out = np.zeros(2, dtype=complex)
    out[0 if source_end == 1 else 1] = val
    return out


def _modal_sol_trace(A: complex, B: complex, lam: float, L: float, R: float) -> np.ndarray:
    return np.array(
        [
            A * np.exp(-1j * lam * R) + B * np.exp(1j * lam * R),
            A * np.exp(1j * lam * (L + R)) + B * np.exp(-1j * lam * (L + R)),
        ]
    )


def straight_guide_truncated_S(
    d: float, mu: float, L: float, R: float, zeta: float, threshold_guard: float = 1e-3
) -> np.ndarray:
    """Minimizer matrix of the truncated functional for the uniform guide,
    computed exactly in mode space.

    Since transverse modes are orthonormal, the trace Gram matrices decouple
    into 2x2 blocks per transverse index; each block is assembled from the
    exact auxiliary solutions and minimized in closed form.  The result
    equals ``straight_guide_S(d, mu, L/2, L/2)`` to roundoff for every R > 0
    and real zeta != 0, which pins down the sign convention.
    """
    if zeta == 0.0:
        raise WavescatError("zeta must be nonzero")
    ks = _propagating_k(d, mu, threshold_guard)
    m = len(ks)
    S = np.zeros((2 * m, 2 * m), dtype=complex)
    for i, k in enumerate(ks):
        lam = math.sqrt(mu - (k * math.pi / d) ** 2)
        w_cols = []
        z_cols = []
        for end in (1, 2):
            A, B = _modal_aux_coeffs(lam, L, R, zeta, end, "outgoing")
            w_cols.append(
                _modal_sol_trace(A, B, lam, L, R) - _modal_wave_trace(lam, R, end, "outgoing")
            )
            A, B = _modal_aux_coeffs(lam, L, R, zeta, end, "incoming")
            z_cols.append(
                _modal_sol_trace(A, B, lam, L, R) - _modal_wave_trace(lam, R, end, "incoming")
            )
        W = np.column_stack(w_cols)   # columns: D(v_j^- - u_j^-) on (G1, G2)
        Z = np.column_stack(z_cols)
        E = (W.conj().T @ W).T        # E_ij = (w_i, w_j)
        F = (W.conj().T @ Z).T        # F_ij = (z_i, w_j)
        block = np.linalg.solve(E.T, -F.T).T
        idx = (i, m + i)
        for r in range(2):
            for cidx in range(2):
                S[idx[r], idx[cidx]] = block[r, cidx]
    return S


# ---------------------------------------------------------------------------
# width-step junction by mode matching
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StepJunction:
    """Abrupt width change: guide of width d_left joins width d_right >= d_left.

    ``alignment`` places the narrow side inside the wide one: "centered" or
    "flush" (lower walls coincide).  ``n_trunc`` is the number of transverse
    modes retained on the narrow side; the wide side keeps proportionally
    more so both expansions resolve the same transverse scales.
    """

    d_left: float
    d_right: float
    mu: float
    alignment: str = "centered"
    n_trunc: int = 24
    threshold_guard: float = 1e-3

    def __post_init__(self):
        if not (self.d_left > 0 and self.d_right > 0):
            raise WavescatError("widths must be positive")
        if self.d_left > self.d_right:
            raise WavescatError("d_left must not exceed d_right")
        if self.alignment not in ("centered", "flush"):
            raise WavescatError("alignment must be 'centered' or 'flush'")

    @property
    def left_offset(self) -> float:
        return 0.5 * (self.d_right - self.d_left) if self.alignment == "centered" else 0.0


class StepResult(NamedTuple):
    S: np.ndarray
    converged: bool
    delta: float          # max-entry change when doubling the truncation
    n_left: int
    n_right: int


def _overlap_matrix(d_l: float, d_r: float, offset: float, n_l: int, n_r: int) -> np.ndarray:
    """K[m, n] = integral over the aperture of phi^L_m(y) phi^R_n(y) dy,
    in closed form (product-to-sum on the sine pair)."""
    w = d_l
    a = (np.arange(1, n_l + 1) * math.pi / d_l)[:, None]
    b = (np.arange(1, n_r + 1) * math.pi / d_r)[None, :]
    cph = b * offset  # right-side sine evaluated at y = s + offset
    plus = (np.sin((a + b) * w + cph) - np.sin(cph)) / (2.0 * (a + b))
    diff = a - b
    equal = np.abs(diff) < 1e-12
    diff_safe = np.where(equal, 1.0, diff)
    minus = (np.sin(diff * w - cph) + np.sin(cph)) / (2.0 * diff_safe)
    minus = np.where(equal, 0.5 * w * np.cos(cph), minus)
    return (minus - plus) * math.sqrt(2.0 / d_l) * math.sqrt(2.0 / d_r)


def _step_S_once(sj: StepJunction, n_left: int) -> np.ndarray:
    mu = sj.mu
    n_right = int(math.ceil(n_left * sj.d_right / sj.d_left))
    nu_l = (np.arange(1, n_left + 1) * math.pi / sj.d_left) ** 2
    nu_r = (np.arange(1, n_right + 1) * math.pi / sj.d_right) ** 2
    alpha = csqrt(mu - nu_l)   # i * decay rate for evanescent indices
    beta = csqrt(mu - nu_r)
    prop_l = np.nonzero(nu_l < mu)[0]
    prop_r = np.nonzero(nu_r < mu)[0]
    c_l = 1.0 / np.sqrt(2.0 * np.real(alpha[prop_l]))
    c_r = 1.0 / np.sqrt(2.0 * np.real(beta[prop_r]))
    K = _overlap_matrix(sj.d_left, sj.d_right, sj.left_offset, n_left, n_right)

    # unknowns [B (left outgoing); C (right outgoing)]
    n_tot = n_left + n_right
    M = np.zeros((n_tot, n_tot), dtype=complex)
    M[:n_right, :n_left] = K.T
    M[:n_right, n_left:] = -np.eye(n_right)
    M[n_right:, :n_left] = -np.diag(1j * alpha)
    M[n_right:, n_left:] = -K * (1j * beta)[None, :]

    m_tot = len(prop_l) + len(prop_r)
    rhs = np.zeros((n_tot, m_tot), dtype=complex)
    for col, (m_idx, c) in enumerate(zip(prop_l, c_l)):
        A = np.zeros(n_left, dtype=complex)
        A[m_idx] = c
        rhs[:n_right, col] = -K.T @ A
        rhs[n_right:, col] = -1j * alpha * A
    for col, (n_idx, c) in enumerate(zip(prop_r, c_r), start=len(prop_l)):
        D = np.zeros(n_right, dtype=complex)
        D[n_idx] = c
        rhs[:n_right, col] = D
        rhs[n_right:, col] = -K @ (1j * beta * D)

    sol = np.linalg.solve(M, rhs)
    B = sol[:n_left, :]
    C = sol[n_left:, :]
    S = np.zeros((m_tot, m_tot), dtype=complex)
    S[:, : len(prop_l)] = (B[prop_l, :] / c_l[:, None]).T
    S[:, len(prop_l):] = (C[prop_r, :] / c_r[:, None]).T
    return S


def step_junction_S(sj: StepJunction) -> StepResult:
    """Mode-matched scattering matrix of the step, origins at the junction
    plane, both transverse bases oriented with increasing global y.

    Doubles the truncation once; the convergence flag requires the matrix to
    move by less than 1e-6 (max entry).  A False flag means the result must
    not be used as ground truth.
    """
    n_prop = len(_propagating_k(sj.d_left, sj.mu, sj.threshold_guard)) + len(
        _propagating_k(sj.d_right, sj.mu, sj.threshold_guard)
    )
    n_left = max(sj.n_trunc, n_prop + 8)
    S1 = _step_S_once(sj, n_left)
    S2 = _step_S_once(sj, 2 * n_left)
    delta = float(np.max(np.abs(S2 - S1)))
    return StepResult(
        S=S2,
        converged=delta < 1e-6,
        delta=delta,
        n_left=2 * n_left,
        n_right=int(math.ceil(2 * n_left * sj.d_right / sj.d_left)),
    )


def step_truncated_minimizer(
    sj: StepJunction, R_left: float, R_right: float, zeta: float,
    n_trunc: int | None = None,
) -> np.ndarray:
    """Exact mode-space replica of the truncated-functional method for the
    step junction: auxiliary impedance problems solved by mode matching on
    the two finite segments, trace Gram matrices in the transverse basis,
    one minimizer row per incoming mode.

    Shares no discretization with the finite element pipeline, so the only
    error is the transverse truncation; used to measure the true dependence
    of the minimizer on the truncation radius at machine precision.
    """
    if zeta == 0.0:
        raise WavescatError("zeta must be nonzero")
    mu = sj.mu
    n_left = n_trunc if n_trunc is not None else max(sj.n_trunc, 16)
    n_right = int(math.ceil(n_left * sj.d_right / sj.d_left))
    nu_l = (np.arange(1, n_left + 1) * math.pi / sj.d_left) ** 2
    nu_r = (np.arange(1, n_right + 1) * math.pi / sj.d_right) ** 2
    alpha = csqrt(mu - nu_l)
    beta = csqrt(mu - nu_r)
    prop_l = np.nonzero(nu_l < mu)[0]
    prop_r = np.nonzero(nu_r < mu)[0]
    c_l = 1.0 / np.sqrt(2.0 * np.real(alpha[prop_l]))
    c_r = 1.0 / np.sqrt(2.0 * np.real(beta[prop_r]))
    K = _overlap_matrix(sj.d_left, sj.d_right, sj.left_offset, n_left, n_right)
    e = np.exp

    # Wall-anchored basis keeps every exponential bounded by one:
    #   left  segment [-R_left, 0]:  P e^{i a (x + R_left)} + Q e^{-i a x}
    #   right segment [0, R_right]:  S e^{-i b (x - R_right)} + T e^{i b x}
    # (P, S anchored at their cross-sections; Q, T at the junction plane).
    nl, nr = n_left, n_right
    eaL = e(1j * alpha * R_left)    # |.| <= 1
    ebR = e(1j * beta * R_right)
    n_tot = 2 * nl + 2 * nr
    A = np.zeros((n_tot, n_tot), dtype=complex)
    iP, iQ, iS, iT = 0, nl, 2 * nl, 2 * nl + nr
    # value continuity projected on the right basis
    A[:nr, iP:iP + nl] = K.T * eaL[None, :]
    A[:nr, iQ:iQ + nl] = K.T
    A[:nr, iS:iS + nr] = -np.diag(ebR)
    A[:nr, iT:iT + nr] = -np.eye(nr)
    # derivative continuity projected on the left basis
    r0 = nr
    A[r0:r0 + nl, iP:iP + nl] = np.diag(1j * alpha * eaL)
    A[r0:r0 + nl, iQ:iQ + nl] = -np.diag(1j * alpha)
    A[r0:r0 + nl, iS:iS + nr] = K * (1j * beta * ebR)[None, :]
    A[r0:r0 + nl, iT:iT + nr] = -K * (1j * beta)[None, :]
    # impedance condition at the left cross-section x = -R_left
    r1 = nr + nl
    A[r1:r1 + nl, iP:iP + nl] = np.diag(1j * (zeta - alpha))
    A[r1:r1 + nl, iQ:iQ + nl] = np.diag(1j * (zeta + alpha) * eaL)
    # impedance condition at the right cross-section x = +R_right
    r2 = r1 + nl
    A[r2:r2 + nr, iS:iS + nr] = np.diag(1j * (zeta - beta))
    A[r2:r2 + nr, iT:iT + nr] = np.diag(1j * (zeta + beta) * ebR)

    # impedance data of the 2M basis waves (outgoing batch, then incoming)
    m_l, m_r = len(prop_l), len(prop_r)
    M_tot = m_l + m_r
    rhs = np.zeros((n_tot, 2 * M_tot), dtype=complex)
    for col, (m_idx, c) in enumerate(zip(prop_l, c_l)):
        lam = np.real(alpha[m_idx])
        rhs[r1 + m_idx, col] = c * 1j * (zeta + lam) * e(1j * lam * R_left)
        rhs[r1 + m_idx, M_tot + col] = c * 1j * (zeta - lam) * e(-1j * lam * R_left)
    for col, (n_idx, c) in enumerate(zip(prop_r, c_r), start=m_l):
        lam = np.real(beta[n_idx])
        rhs[r2 + n_idx, col] = c * 1j * (zeta + lam) * e(1j * lam * R_right)
        rhs[r2 + n_idx, M_tot + col] = c * 1j * (zeta - lam) * e(-1j * lam * R_right)

    sol = np.linalg.solve(A, rhs)
    P, Q = sol[iP:iP + nl], sol[iQ:iQ + nl]
    Sc, T = sol[iS:iS + nr], sol[iT:iT + nr]
    # Dirichlet traces on (left, right) cross-sections, all transverse modes
    tr_left = P + Q * eaL[:, None]
    tr_right = Sc + T * ebR[:, None]
    traces = np.vstack([tr_left, tr_right])  # (nl + nr, 2M) solution traces

    # wave traces in the same mode coordinates
    wave_tr = np.zeros((nl + nr, 2 * M_tot), dtype=complex)
    for col, (m_idx, c) in enumerate(zip(prop_l, c_l)):
        lam = np.real(alpha[m_idx])
        wave_tr[m_idx, col] = c * e(1j * lam * R_left)
        wave_tr[m_idx, M_tot + col] = c * e(-1j * lam * R_left)
    for col, (n_idx, c) in enumerate(zip(prop_r, c_r), start=m_l):
        lam = np.real(beta[n_idx])
        wave_tr[nl + n_idx, col] = c * e(1j * lam * R_right)
        wave_tr[nl + n_idx, M_tot + col] = c * e(-1j * lam * R_right)

    W = traces[:, :M_tot] - wave_tr[:, :M_tot]
    Z = traces[:, M_tot:] - wave_tr[:, M_tot:]
    E = (W.conj().T @ W).T
    F = (W.conj().T @ Z).T
    return np.linalg.solve(E.T, -F.T).T


def step_scene_S(sj: StepJunction, collar_left: float, collar_right: float) -> StepResult:
    """Step scattering matrix in the wave basis of ``scenes.width_step``.

    That scene puts the end origins a collar length away from the junction
    plane, which multiplies row l and column j by e^{i lam L}; and its left
    end parameterizes the cross-section downward (a counter-clockwise
    junction traverses its left edge top to bottom), which flips the sign of
    every even transverse mode on the left: phi_k(d - y) = (-1)^{k+1}
    phi_k(y).  Both gauge factors are applied here so entries compare one to
    one with the pipeline output.
    """
    res = step_junction_S(sj)
    ks_l = _propagating_k(sj.d_left, sj.mu, sj.threshold_guard)
    ks_r = _propagating_k(sj.d_right, sj.mu, sj.threshold_guard)
    lam = np.array(
        [math.sqrt(sj.mu - (k * math.pi / sj.d_left) ** 2) for k in ks_l]
        + [math.sqrt(sj.mu - (k * math.pi / sj.d_right) ** 2) for k in ks_r]
    )
    collars = np.array([collar_left] * len(ks_l) + [collar_right] * len(ks_r))
    phase = np.exp(1j * lam * collars)
    flips = np.array([(-1.0) ** (k + 1) for k in ks_l] + [1.0] * len(ks_r))
    g = phase * flips
    return res._replace(S=g[:, None] * res.S * g[None, :])
