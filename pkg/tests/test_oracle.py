import math

import numpy as np
import pytest

from wavescat.oracle import (
    StepJunction,
    step_junction_S,
    step_truncated_minimizer,
    straight_guide_S,
    straight_guide_truncated_S,
)
from wavescat.errors import ThresholdProximityError, WavescatError

PI = math.pi


def test_straight_guide_no_reflection():
    S = straight_guide_S(PI, 2.5, 6.0, 6.0)
    assert S.shape == (2, 2)
    assert S[0, 0] == 0.0 and S[1, 1] == 0.0
    assert abs(S[0, 1]) == pytest.approx(1.0)


def test_straight_guide_transmission_phase():
    lam = math.sqrt(1.5)
    S = straight_guide_S(PI, 2.5, 6.0, 6.0)
    assert np.angle(S[0, 1]) == pytest.approx(((lam * 12.0 + PI) % (2 * PI)) - PI)


def test_straight_guide_two_modes_block_diagonal():
    S = straight_guide_S(PI, 5.0, 1.0, 2.0)
    assert S.shape == (4, 4)
    # modes do not couple: only the per-mode transmission entries are nonzero
    expected = np.zeros((4, 4), dtype=complex)
    for i, lam in enumerate((2.0, 1.0)):
        expected[i, 2 + i] = np.exp(1j * lam * 3.0)
        expected[2 + i, i] = np.exp(1j * lam * 3.0)
    np.testing.assert_allclose(S, expected, atol=1e-15)


def test_straight_guide_threshold_guarded():
    with pytest.raises(ThresholdProximityError):
        straight_guide_S(PI, 4.0005, 1.0, 1.0)


def test_truncated_minimizer_reproduces_exact_S():
    """The sign-convention derivation: the truncated-functional minimizer in
    exact mode space equals the closed-form scattering matrix for every R
    and zeta, which pins the transmission phase to e^{+ i lam L}."""
    for mu in (2.5, 5.0):
        S_exact = straight_guide_S(PI, mu, 1.0, 1.0)
        for zeta in (0.5, 1.0, 2.0, -1.3):
            for R in (1.0, 4.0, 9.5):
                S_trunc = straight_guide_truncated_S(PI, mu, 2.0, R, zeta)
                assert np.max(np.abs(S_trunc - S_exact)) < 1e-12


def test_degenerate_step_reproduces_straight_guide():
    sj = StepJunction(d_left=PI, d_right=PI, mu=2.5, n_trunc=16)
    res = step_junction_S(sj)
    S_exact = straight_guide_S(PI, 2.5, 0.0, 0.0)
    assert np.max(np.abs(res.S - S_exact)) < 1e-10


def test_step_unitarity_self_check():
    sj = StepJunction(d_left=PI, d_right=2 * PI, mu=2.5, n_trunc=48)
    res = step_junction_S(sj)
    M = len(res.S)
    assert np.linalg.norm(res.S @ res.S.conj().T - np.eye(M)) < 1e-8


def test_step_reciprocity():
    sj = StepJunction(d_left=PI, d_right=2 * PI, mu=2.5, n_trunc=48)
    res = step_junction_S(sj)
    assert np.max(np.abs(res.S - res.S.T)) < 1e-8


def test_step_truncation_error_decreasing():
    sj = StepJunction(d_left=PI, d_right=2 * PI, mu=2.5)
    from wavescat.oracle import _step_S_once

    deltas = []
    prev = _step_S_once(sj, 16)
    for n in (32, 64, 128):
        cur = _step_S_once(sj, n)
        deltas.append(np.max(np.abs(cur - prev)))
        prev = cur
    assert deltas[0] > deltas[1] > deltas[2]


def test_step_convergence_flag():
    converged = step_junction_S(StepJunction(PI, 2 * PI, 2.5, n_trunc=384))
    assert converged.converged
    rough = step_junction_S(StepJunction(PI, 2 * PI, 2.5, n_trunc=16))
    assert not rough.converged


def test_step_rejects_bad_parameters():
    with pytest.raises(WavescatError):
        StepJunction(d_left=2 * PI, d_right=PI, mu=2.5)
    with pytest.raises(WavescatError):
        StepJunction(d_left=PI, d_right=2 * PI, mu=2.5, alignment="sideways")


def test_step_minimizer_matches_converged_S():
    # the mode-space truncated functional lands on the mode-matched S
    sj = StepJunction(d_left=PI, d_right=2 * PI, mu=2.5, n_trunc=384)
    S_ref = step_junction_S(sj).S
    a = step_truncated_minimizer(sj, 6.0, 6.0, 1.0, n_trunc=384)
    assert np.max(np.abs(a - S_ref)) < 2e-6


def test_step_minimizer_truncation_decay_rate():
    """The minimizer converges to S at twice the first evanescent rate; the
    cross terms that would produce the single rate vanish by transverse
    orthogonality on the cross-sections."""
    from wavescat.scattering import fit_decay_rate

    sj = StepJunction(d_left=PI, d_right=2 * PI, mu=2.5)
    ref = step_truncated_minimizer(sj, 14.0, 14.0, 1.0, n_trunc=96)
    Rs = np.arange(1.0, 6.5, 0.5)
    errs = np.array([
        np.max(np.abs(step_truncated_minimizer(sj, R, R, 1.0, n_trunc=96) - ref))
        for R in Rs
    ])
    fit = fit_decay_rate(Rs, errs, floor=1e-11)
    gamma = math.sqrt(4.0 - 2.5)
    assert fit.rate == pytest.approx(2 * gamma, rel=0.05)
