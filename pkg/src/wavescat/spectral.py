"""Transverse modes and travelling waves of the straight channels.

On a channel of width d with Dirichlet walls the transverse eigenpairs are

    nu_k = (k pi / d)^2,   phi_k(y) = sqrt(2/d) sin(k pi y / d),

and a spectral parameter mu supports the propagating waves

    u_k^{±}(y, t) = (2 lam_k)^{-1/2} e^{∓ i lam_k t} phi_k(y),
    lam_k = sqrt(mu - nu_k) > 0,

in outward local coordinates.  The sign convention is fixed by the boundary
(Wronskian) form: w(u, v) = (Nu, Dv) - (Du, Nv) on the cross-section at
t = R, with D the trace, N the outward normal derivative and (f, g) the L2
inner product integrating f * conj(g).  Then w(u^+, u^+) = -i and
w(u^-, u^-) = +i independently of R; i*w(u, u) > 0 identifies incoming
waves.  Every constructed wave verifies this at runtime.

The transverse problem is also solved numerically (second-order finite
differences, symmetric tridiagonal eigensolver) so the pipeline carries a
cross-check that generalizes to non-analytic cross-sections; downstream
wave construction uses the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import NumericsError, ThresholdProximityError, WavescatError
from .geometry import CrossSection

_GAUSS_POINTS = 64


@dataclass(frozen=True, eq=False)
class TransverseBasis:
    """First ``count`` Dirichlet eigenpairs of one cross-section."""

    width: float
    count: int
    nu: np.ndarray        # closed-form eigenvalues (k pi / d)^2, ascending
    nu_fd: np.ndarray     # finite-difference eigenvalues, same ordering
    grid_y: np.ndarray    # sampling grid incl. endpoints
    phi_fd: np.ndarray    # (grid_n, count) sampled eigenfunctions, L2-normalized
    end_index: int | None = None

    def phi(self, k: int, y: np.ndarray) -> np.ndarray:
        """Closed-form eigenfunction, unit L2 norm, phi'(0) > 0."""
        d = self.width
        return np.sqrt(2.0 / d) * np.sin(k * np.pi * np.asarray(y) / d)

    def dphi(self, k: int, y: np.ndarray) -> np.ndarray:
        d = self.width
        return np.sqrt(2.0 / d) * (k * np.pi / d) * np.cos(k * np.pi * np.asarray(y) / d)


def transverse_eigs(
    cs: CrossSection, count: int, grid_n: int = 256, end_index: int | None = None
) -> TransverseBasis:
    """Solve the Dirichlet interval eigenproblem numerically and analytically.

    Finite differences on ``grid_n`` nodes reduce -phi'' = nu phi to a
    symmetric tridiagonal eigenproblem; eigenfunctions are L2-normalized with
    the sign fixed by phi'(0) > 0.
    """
    if count < 1:
        raise WavescatError("count must be >= 1")
    if grid_n < 16:
        raise WavescatError("grid_n must be >= 16")
    d = cs.width
    if not d > 0:
        raise WavescatError("cross-section width must be positive")
    n_int = grid_n - 2
    dy = d / (grid_n - 1)
    diag = np.full(n_int, 2.0 / dy**2)
    off = np.full(n_int - 1, -1.0 / dy**2)
    count = min(count, n_int)
    vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, count - 1))
    grid = np.linspace(0.0, d, grid_n)
    phi = np.zeros((grid_n, count))
    phi[1:-1, :] = vecs
    norms = np.sqrt(dy * np.sum(vecs**2, axis=0))
    phi /= norms
    signs = np.where(phi[1, :] > 0, 1.0, -1.0)
    phi *= signs
    k = np.arange(1, count + 1)
    return TransverseBasis(
        width=d,
        count=count,
        nu=(k * np.pi / d) ** 2,
        nu_fd=vals,
        grid_y=grid,
        phi_fd=phi,
        end_index=end_index,
    )


@dataclass(frozen=True)
class PropagatingMode:
    """One propagating transverse channel at a given spectral parameter."""

    end_index: int
    k: int
    mu: float
    nu: float
    lam: float            # sqrt(mu - nu) > 0
    width: float
    dist_below: float     # mu - nu_k
    dist_above: float     # nu_{k+1} - mu


def _analytic_nu(width: float, k: int) -> float:
    return (k * math.pi / width) ** 2


def enumerate_modes(
    bases: Sequence[TransverseBasis],
    mu: float,
    threshold_guard: float = 1e-3,
) -> list[PropagatingMode]:
    """All propagating modes, globally indexed lexicographically by (end, k).

    Raises ThresholdProximityError when mu lies within ``threshold_guard`` of
    any cut-off value, where the mode count would change.
    """
    modes: list[PropagatingMode] = []
    for pos, basis in enumerate(bases):
        end_index = basis.end_index if basis.end_index is not None else pos + 1
        d = basis.width
        k_max = int(math.ceil(d * math.sqrt(max(mu, 0.0) + threshold_guard) / math.pi)) + 1
        for k in range(1, k_max + 1):
            nu = _analytic_nu(d, k)
            if abs(mu - nu) < threshold_guard:
                raise ThresholdProximityError(mu, nu, end_index, k, threshold_guard)
            if nu < mu:
                modes.append(
                    PropagatingMode(
                        end_index=end_index,
                        k=k,
                        mu=mu,
                        nu=nu,
                        lam=math.sqrt(mu - nu),
                        width=d,
                        dist_below=mu - nu,
                        dist_above=_analytic_nu(d, k + 1) - mu,
                    )
                )
    modes.sort(key=lambda m: (m.end_index, m.k))
    return modes


def mode_count_per_end(modes: Sequence[PropagatingMode]) -> dict[int, int]:
    counts: dict[int, int] = {}
    for m in modes:
        counts[m.end_index] = counts.get(m.end_index, 0) + 1
    return counts


def gamma_estimate(bases: Sequence[TransverseBasis], mu: float) -> float:
    """Decay rate of the slowest evanescent channel: min over ends of
    sqrt(nu_{M+1} - mu).  Bounds the usable exponential convergence rate."""
    rates = []
    for basis in bases:
        k = 1
        while _analytic_nu(basis.width, k) < mu:
            k += 1
        rates.append(math.sqrt(_analytic_nu(basis.width, k) - mu))
    return min(rates)


INCOMING = "incoming"
OUTGOING = "outgoing"


@dataclass(frozen=True)
class Wave:
    """Closed-form channel wave u^{±} in local end coordinates.

    ``sgn`` is +1 for incoming (e^{-i lam t}) and -1 for outgoing
    (e^{+i lam t}); the amplitude (2 lam)^{-1/2} normalizes the boundary
    Wronskian to w(u^{±}, u^{±}) = ∓i.  Zero off its own end.
    """

    mode: PropagatingMode
    direction: str

    @property
    def sgn(self) -> int:
        return +1 if self.direction == INCOMING else -1

    @property
    def amplitude(self) -> float:
        return 1.0 / math.sqrt(2.0 * self.mode.lam)

    def phi(self, y: np.ndarray) -> np.ndarray:
        d = self.mode.width
        return np.sqrt(2.0 / d) * np.sin(self.mode.k * np.pi * np.asarray(y) / d)

    def dirichlet_trace(self, y: np.ndarray, t: float) -> np.ndarray:
        lam = self.mode.lam
        return self.amplitude * np.exp(-1j * self.sgn * lam * t) * self.phi(y)

    def neumann_trace(self, y: np.ndarray, t: float) -> np.ndarray:
        """Outward normal derivative d/dt of the wave on {t = const}."""
        return -1j * self.sgn * self.mode.lam * self.dirichlet_trace(y, t)

    def impedance_trace(self, y: np.ndarray, t: float, zeta: float) -> np.ndarray:
        """(N + i zeta D) u on {t = const}; the data fed to the truncated solver."""
        return 1j * (zeta - self.sgn * self.mode.lam) * self.dirichlet_trace(y, t)


def wronskian(u: Wave, v: Wave, R: float) -> complex:
    """Boundary form (Nu, Dv)_Gamma - (Du, Nv)_Gamma at t = R.

    Gauss-Legendre quadrature, exact to roundoff for the trigonometric
    products that occur here.  Waves on different ends give exactly 0.
    """
    if u.mode.end_index != v.mode.end_index:
        return 0.0 + 0.0j
    d = u.mode.width
    xg, wg = np.polynomial.legendre.leggauss(_GAUSS_POINTS)
    y = 0.5 * d * (xg + 1.0)
    w = 0.5 * d * wg
    Du = u.dirichlet_trace(y, R)
    Nu = u.neumann_trace(y, R)
    Dv = v.dirichlet_trace(y, R)
    Nv = v.neumann_trace(y, R)
    return complex(np.sum(w * (Nu * np.conj(Dv) - Du * np.conj(Nv))))


def make_wave(mode: PropagatingMode, direction: str, verify: bool = True) -> Wave:
    """Construct a wave and verify its Wronskian normalization at runtime."""
    if direction not in (INCOMING, OUTGOING):
        raise WavescatError(f"direction must be '{INCOMING}' or '{OUTGOING}'")
    wave = Wave(mode=mode, direction=direction)
    if verify:
        val = wronskian(wave, wave, R=1.0)
        expected = -1j * wave.sgn
        if abs(val - expected) > 1e-10:
            raise NumericsError(
                f"wave normalization violated: w(u,u) = {val!r}, expected {expected!r}"
            )
    return wave
