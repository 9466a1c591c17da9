import math

import numpy as np
import pytest

from wavescat.errors import InvalidImpedanceError, WavescatError
from wavescat.geometry import truncate
from wavescat.helmholtz import BoundaryData, assemble, boundary_load, prop43_check, solve
from wavescat.mesh import generate, trace_mesh
from wavescat.oracle import _modal_aux_coeffs
from wavescat.scattering import scene_bases, wave_boundary_data
from wavescat.scenes import obstacle_strip, straight_strip
from wavescat.spectral import INCOMING, OUTGOING, enumerate_modes, make_wave

PI = math.pi


def _system(scene, mu, zeta, R=3.0, h=PI / 16):
    mesh = generate(truncate(scene, R), h)
    return assemble(mesh, mu, zeta)


def test_zeta_zero_rejected():
    mesh = generate(truncate(straight_strip(), 2.0), PI / 8)
    with pytest.raises(InvalidImpedanceError):
        assemble(mesh, 1.0, 0.0)


def test_system_complex_symmetric():
    system = _system(straight_strip(), 2.5, 1.0)
    A = system.matrix
    defect = abs(A - A.T).max()
    assert defect <= 1e-12 * abs(A).max()


def test_coercive_case_zero_data_zero_solution():
    # mu = 0, zeta = 1, h = 0: unique solution is identically zero
    system = _system(straight_strip(), 0.0, 1.0)
    data = BoundaryData.zeros(system.trace_meshes)
    sol = solve(system, [data])[0]
    assert np.all(sol.values == 0.0)


def test_weak_form_reproduced_against_quadrature_oracle():
    """v^T A u on nodal interpolants matches the continuous weak form to O(h^2).

    The oracle integrates grad(u).grad(v) - mu u v with a degree-5 Gauss rule
    per triangle and the boundary term with dense 1-D Gauss nodes; it shares
    nothing with the assembled matrices.
    """
    mu, zeta = 2.3, 1.4
    scene = straight_strip()

    def u_fn(x, y):
        return np.sin(y) * np.cos(0.7 * x)

    def grad_u(x, y):
        return np.stack([-0.7 * np.sin(y) * np.sin(0.7 * x), np.cos(y) * np.cos(0.7 * x)])

    def v_fn(x, y):
        return np.sin(y) * (1.0 + 0.3 * x) + 0.2 * np.sin(2 * y) * x**2

    def grad_v(x, y):
        return np.stack(
            [0.3 * np.sin(y) + 0.4 * np.sin(2 * y) * x,
             np.cos(y) * (1.0 + 0.3 * x) + 0.4 * np.cos(2 * y) * x**2]
        )

    # degree-5 rule on the reference triangle
    w_ref = np.array([0.225] + [0.132394152788506] * 3 + [0.125939180544827] * 3)
    a1, b1 = 0.059715871789770, 0.470142064105115
    a2, b2 = 0.797426985353087, 0.101286507323456
    bary = np.array(
        [[1 / 3, 1 / 3, 1 / 3],
         [a1, b1, b1], [b1, a1, b1], [b1, b1, a1],
         [a2, b2, b2], [b2, a2, b2], [b2, b2, a2]]
    )

    def oracle_bilinear(mesh):
        p = mesh.nodes
        t = mesh.triangles
        v0, v1, v2 = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
        area = 0.5 * np.abs(
            (v1[:, 0] - v0[:, 0]) * (v2[:, 1] - v0[:, 1])
            - (v1[:, 1] - v0[:, 1]) * (v2[:, 0] - v0[:, 0])
        )
        total = 0.0
        for wq, (l0, l1, l2) in zip(w_ref, bary):
            xq = l0 * v0[:, 0] + l1 * v1[:, 0] + l2 * v2[:, 0]
            yq = l0 * v0[:, 1] + l1 * v1[:, 1] + l2 * v2[:, 1]
            gu = grad_u(xq, yq)
            gv = grad_v(xq, yq)
            total += np.sum(wq * area * (np.sum(gu * gv, axis=0) - mu * u_fn(xq, yq) * v_fn(xq, yq)))
        xg, wg = np.polynomial.legendre.leggauss(24)
        for end in mesh.domain.scene.ends:
            yloc = 0.5 * end.width * (xg + 1.0)
            wloc = 0.5 * end.width * wg
            pts = end.origin[None, :] + np.outer(yloc, end.y_dir) + mesh.domain.R * end.axis
            total += 1j * zeta * np.sum(wloc * u_fn(pts[:, 0], pts[:, 1]) * v_fn(pts[:, 0], pts[:, 1]))
        return total

    errs = []
    for h in (PI / 8, PI / 16):
        mesh = generate(truncate(scene, 2.0), h)
        system = assemble(mesh, mu, zeta)
        K, M, B = system.stiffness, system.mass, system.boundary_mass
        A_full = (K - mu * M).astype(complex) + 1j * zeta * B
        u_h = u_fn(mesh.nodes[:, 0], mesh.nodes[:, 1])
        v_h = v_fn(mesh.nodes[:, 0], mesh.nodes[:, 1])
        exact = oracle_bilinear(mesh)
        errs.append(abs(v_h @ (A_full @ u_h) - exact))
    assert errs[0] / errs[1] > 3.0          # O(h^2) decay
    assert errs[1] < 2e-2 * abs(mu)


def test_rhs_zero_gives_zero():
    system = _system(straight_strip(), 2.5, 1.0)
    data = BoundaryData.zeros(system.trace_meshes)
    sol = solve(system, [data])[0]
    assert np.linalg.norm(sol.values) == 0.0
    assert sol.residual == 0.0


def test_batch_solutions_deterministic():
    system = _system(straight_strip(), 2.5, 1.0)
    rng = np.random.default_rng(7)
    vals = tuple(
        rng.standard_normal(len(tm.y)) + 1j * rng.standard_normal(len(tm.y))
        for tm in system.trace_meshes
    )
    data = BoundaryData(vals)
    s1, s2 = solve(system, [data, data])
    np.testing.assert_array_equal(s1.values, s2.values)


def test_residual_invariant():
    system = _system(obstacle_strip(), 2.5, 1.0)
    rng = np.random.default_rng(3)
    data = BoundaryData(tuple(
        rng.standard_normal(len(tm.y)) + 1j * rng.standard_normal(len(tm.y))
        for tm in system.trace_meshes
    ))
    sol = solve(system, [data])[0]
    assert sol.residual < 1e-10


def test_boundary_data_length_mismatch_rejected():
    system = _system(straight_strip(), 2.5, 1.0)
    bad = BoundaryData((np.zeros(3, dtype=complex), np.zeros(3, dtype=complex)))
    with pytest.raises(WavescatError):
        boundary_load(system, bad)


def test_fem_trace_converges_to_modal_solution():
    """Straight guide: the auxiliary solution is exactly A e^{i lam x} +
    B e^{-i lam x} per transverse mode; FEM cross-section traces converge to
    it at second order in h."""
    scene = straight_strip()          # junction length 2, ends at x=0 and x=2
    mu, zeta, R = 2.5, 1.0, 3.0
    lam = math.sqrt(mu - 1.0)
    A, B = _modal_aux_coeffs(lam, 2.0, R, zeta, source_end=1, direction="outgoing")
    errs = []
    for h in (PI / 8, PI / 16, PI / 32):
        mesh = generate(truncate(scene, R), h)
        system = assemble(mesh, mu, zeta)
        bases = scene_bases(scene, mu)
        modes = enumerate_modes(bases, mu)
        wave = make_wave(modes[0], OUTGOING)
        sol = solve(system, [wave_boundary_data(wave, system.trace_meshes, zeta, R)])[0]
        err_sq = 0.0
        for tm, x_gamma in zip(system.trace_meshes, (-R, 2.0 + R)):
            coef = A * np.exp(1j * lam * x_gamma) + B * np.exp(-1j * lam * x_gamma)
            phi = math.sqrt(2.0 / PI) * np.sin(tm.y)
            diff = sol.values[tm.node_indices] - coef * phi
            err_sq += np.real(np.conj(diff) @ (tm.mass @ diff))
        errs.append(math.sqrt(err_sq))
    assert errs[0] / errs[1] > 3.2
    assert errs[1] / errs[2] > 3.2
    assert errs[2] < 1e-3


def test_discrete_uniqueness_by_dense_svd():
    # smallest singular value bounded away from zero on small meshes
    for mu, zeta, R in ((2.5, 1.0, 2.0), (3.5, 0.5, 1.5), (1.5, 2.0, 2.5)):
        system = _system(straight_strip(), mu, zeta, R=R, h=PI / 10)
        A = system.matrix.toarray()
        assert A.shape[0] < 2000
        smin = np.linalg.svd(A, compute_uv=False)[-1]
        assert smin > 1e-8 * np.abs(A).max()


def test_prop43_zero_data():
    system = _system(straight_strip(), 2.5, 1.0)
    lhs, rhs = prop43_check(system, BoundaryData.zeros(system.trace_meshes))
    assert lhs == 0.0 and rhs == 0.0


def test_prop43_random_draws():
    # 100 random data draws on one system: the discrete bound is exact
    system = _system(obstacle_strip(), 2.5, 1.0, h=PI / 12)
    rng = np.random.default_rng(42)
    for _ in range(100):
        data = BoundaryData(tuple(
            rng.standard_normal(len(tm.y)) + 1j * rng.standard_normal(len(tm.y))
            for tm in system.trace_meshes
        ))
        lhs, rhs = prop43_check(system, data)
        assert lhs <= rhs * (1.0 + 1e-6)


def test_prop43_zeta_scaling():
    scene = straight_strip()
    rng = np.random.default_rng(11)
    mesh = generate(truncate(scene, 3.0), PI / 12)
    sys1 = assemble(mesh, 2.5, 1.0)
    sys10 = assemble(mesh, 2.5, 10.0)
    data = BoundaryData(tuple(
        rng.standard_normal(len(tm.y)) + 1j * rng.standard_normal(len(tm.y))
        for tm in sys1.trace_meshes
    ))
    lhs1, rhs1 = prop43_check(sys1, data)
    lhs10, rhs10 = prop43_check(sys10, data)
    assert rhs10 == pytest.approx(rhs1 / 10.0)
    assert lhs10 <= rhs10 * (1.0 + 1e-6)


def test_wave_data_incoming_outgoing_factors():
    # (N + i zeta D)u^{±} = i(zeta ∓ lam) D u^{±}
    scene = straight_strip()
    mu, zeta, R = 2.5, 1.0, 2.0
    bases = scene_bases(scene, mu)
    modes = enumerate_modes(bases, mu)
    lam = modes[0].lam
    mesh = generate(truncate(scene, R), PI / 8)
    tms = [trace_mesh(mesh, p) for p in (1, 2)]
    for direction, factor in ((INCOMING, 1j * (zeta - lam)), (OUTGOING, 1j * (zeta + lam))):
        wave = make_wave(modes[0], direction)
        data = wave_boundary_data(wave, tms, zeta, R)
        np.testing.assert_allclose(
            data.per_end[0], factor * wave.dirichlet_trace(tms[0].y, R), atol=1e-14
        )
        assert np.all(data.per_end[1] == 0.0)
