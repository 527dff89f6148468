import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from implosion.errors import DomainError
from implosion.phase_portrait import (EmdenPoint, StopSpec, default_bracket, emden_jacobian,
                                      emden_rhs, integrate_desingularized, p0_expansion,
                                      ratio_index_for_regime, ratio_to_lambda, sonic_point,
                                      sonic_series)
from implosion.phase_portrait.series import origin_residual
from implosion.regimes import GasModel, lambda_star

MODEL = GasModel(1.4, 1.12)


def test_emden_point_rejects_nonfinite():
    with pytest.raises(ValueError):
        EmdenPoint(math.nan, 0.0)
    assert np.array_equal(EmdenPoint(1.0, 2.0).as_array(), [1.0, 2.0])


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(3)
    h = 1e-6
    for q, u in rng.uniform(-2, 4, (20, 2)):
        fd = np.empty((2, 2))
        for j, e in enumerate(np.eye(2)):
            fp = np.array(emden_rhs(q + h * e[0], u + h * e[1], MODEL)[:2])
            fm = np.array(emden_rhs(q - h * e[0], u - h * e[1], MODEL)[:2])
            fd[:, j] = (fp - fm) / (2 * h)
        np.testing.assert_allclose(emden_jacobian(q, u, MODEL), fd, atol=1e-6 * (1 + abs(q)) ** 3)


def test_sonic_point_node():
    sp = sonic_point(MODEL)
    p = sp.location
    assert 1 + p.u_hat == pytest.approx(MODEL.alpha * p.q_hat, abs=1e-14)
    assert max(abs(x) for x in emden_rhs(p.q_hat, p.u_hat, MODEL)) < 1e-12
    slow, fast = sp.jac_eigenvalues
    assert slow * fast > 0 and abs(fast) > abs(slow)
    jv = sp.jacobian @ sp.nu_minus
    np.testing.assert_allclose(jv, slow * sp.nu_minus, atol=1e-10)
    assert sp.nu_minus[0] < 0


def test_sonic_roots_merge_at_lambda_star():
    g = 1.4
    lo = sonic_point(GasModel(g, lambda_star(g) - 1e-4), which="lower").location.u_hat
    hi = sonic_point(GasModel(g, lambda_star(g) - 1e-4)).location.u_hat
    assert 0 < hi - lo < 0.05


def test_ratio_to_lambda_inverts_eigen_ratio():
    lam = ratio_to_lambda(1.4, 5.5)
    assert 1 < lam < lambda_star(1.4)
    assert sonic_point(GasModel(1.4, lam)).eigen_ratio == pytest.approx(5.5, abs=1e-8)
    lo, hi = default_bracket(1.4, 5)
    assert 1 < lo < hi < lambda_star(1.4)


def test_ratio_index_for_regime():
    m = ratio_index_for_regime(1.4, 0.1)
    assert m == 61
    assert GasModel(1.4, default_bracket(1.4, m)[0], 0.1).delta_dis > 0


def test_origin_series():
    ser = p0_expansion(MODEL, q_star=2.0, order=12)
    assert ser.q[0] == 2.0
    assert ser.w[0] == pytest.approx(-(MODEL.lam - 1) / (3 * MODEL.alpha), rel=1e-14)
    r = np.array([1e-3, 1e-2, 5e-2])
    res_q, res_u = origin_residual(ser, MODEL, r)
    assert np.max(np.abs(res_q)) < 1e-13 and np.max(np.abs(res_u)) < 1e-13
    coeffs = ser.coefficients
    assert coeffs[0] == ser.q[0] and coeffs[1] == ser.w[0]
    with pytest.raises(DomainError):
        p0_expansion(MODEL, q_star=-1.0)


def test_sonic_series_solves_orbit_equation():
    sp = sonic_point(MODEL)
    ser = sonic_series(MODEL, sp, order=30)
    assert ser.c[0] == pytest.approx(sp.location.u_hat, abs=1e-14)
    x = np.linspace(-0.2, 0.2, 9) * ser.radius
    x = x[x != 0]
    q = ser.q_s + x
    u = ser.u(x)
    n_q, n_u, d = emden_rhs(q, u, MODEL)
    # du/dq = N_U / N_Q along the branch; dxi/dq = D / N_Q
    np.testing.assert_allclose(ser.du(x) * n_q, n_u, atol=1e-10)
    np.testing.assert_allclose(ser.dxi(x) * n_q, d, atol=1e-10)


def test_integrator_agrees_with_direct_ode():
    start = EmdenPoint(0.3, -0.1)
    traj = integrate_desingularized(start, 0.0, +1, MODEL, tol=1e-12)
    assert traj.kinds()[-1] == "reached-Pinf-neighborhood"
    xi_end = 5.0
    sol = solve_ivp(lambda xi, y: np.array(emden_rhs(y[0], y[1], MODEL)[:2])
                    / emden_rhs(y[0], y[1], MODEL)[2],
                    (0.0, xi_end), [0.3, -0.1], rtol=1e-12, atol=1e-14)
    q, u, _, _ = traj.at_xi(np.array([xi_end]))
    assert q[0] == pytest.approx(sol.y[0, -1], rel=1e-8)
    assert u[0] == pytest.approx(sol.y[1, -1], rel=1e-8, abs=1e-12)


def test_integrator_stops_on_section():
    traj = integrate_desingularized(EmdenPoint(0.3, -0.1), 0.0, +1, MODEL,
                                    StopSpec(kinds=("section",), section_q=0.1))
    assert traj.kinds() == ["section"]
    assert traj.q[-1] == pytest.approx(0.1, abs=1e-10)


def test_outgoing_branch_decays(run14):
    res = run14.shoot
    assert res.trajectory_out.kinds()[-1] == "reached-Pinf-neighborhood"
    assert res.outgoing_slope == pytest.approx(-res.lam, rel=1e-3)
    assert res.achieved_order >= 4
    lam, traj_in, traj_out, sonic = res
    assert lam == res.lam


def test_frozen_exponent(run14):
    assert run14.shoot.lam == pytest.approx(1.1169976688687302, abs=1e-10)


def _rhs_direct(q, u, m):
    # second coding: expand the polynomials term by term
    a, lam = m.alpha, m.lam
    n_q = (-lam * q - (lam + 1 + 3 * a) * q * u - (1 + 3 * a) * q * u * u
           + a * lam * q * u + a * q * u * u + a * a * q**3)
    n_u = (-lam * u - u * u - a * q * q - lam * u * u - u**3 - a * q * q * u
           + a * lam * q * q + a * (1 + 3 * a) * q * q * u)
    d = 1 + 2 * u + u * u - a * a * q * q
    return n_q, n_u, d


def test_emden_special_points():
    m = GasModel(1.4, 1.19)
    assert emden_rhs(0.0, 0.0, m) == (0.0, 0.0, 1.0)
    assert emden_rhs(0.0, -1.0, m) == (0.0, 0.0, 0.0)
    rng = np.random.default_rng(11)
    pts = [(1.0, 0.0)] + list(rng.uniform(-2, 3, (50, 2)))
    for q, u in pts:
        np.testing.assert_allclose(emden_rhs(q, u, m), _rhs_direct(q, u, m),
                                   rtol=1e-13, atol=1e-13)


def test_sonic_eigenvectors_unit():
    sp = sonic_point(GasModel(1.4, 1.19))
    for v in (sp.nu_minus, sp.nu_plus):
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-14)
    for lam, v in zip(sp.jac_eigenvalues, (sp.nu_minus, sp.nu_plus)):
        np.testing.assert_allclose(sp.jacobian @ v, lam * v, atol=1e-10)
    assert max(sp.residuals) <= 1e-10


def test_p_inf_is_stable_node():
    for ang in np.linspace(0, 2 * np.pi, 5)[:-1]:
        start = EmdenPoint(1e-6 * np.cos(ang), 1e-6 * np.sin(ang))
        traj = integrate_desingularized(start, 0.0, +1, MODEL,
                                        StopSpec(kinds=("reached-Pinf-neighborhood",),
                                                 pinf_radius=1e-9))
        assert traj.kinds() == ["reached-Pinf-neighborhood"]
        assert math.hypot(traj.q[-1], traj.u[-1]) == pytest.approx(1e-9, rel=1e-6)


def test_slow_direction_reaches_p_inf_fast_crosses():
    sp = sonic_point(MODEL)
    p = sp.location.as_array()
    traj = integrate_desingularized(EmdenPoint(*(p + 1e-6 * sp.nu_minus)), 0.0, +1, MODEL)
    assert traj.kinds()[-1] == "reached-Pinf-neighborhood"
    sel = traj.q <= 10 * traj.q[-1]
    slope = np.polyfit(traj.xi[sel], np.log(traj.q[sel]), 1)[0]
    assert slope == pytest.approx(-MODEL.lam, rel=0.01)
    # backward along the fast direction the orbit crosses the sonic line
    start = EmdenPoint(*(p + 1e-3 * sp.nu_plus))
    assert integrate_desingularized(start, 0.0, -1, MODEL).kinds() == ["sonic-crossing"]


def test_orbit_satisfies_original_system():
    traj = integrate_desingularized(EmdenPoint(0.3, -0.1), 0.0, +1, MODEL, tol=1e-12)
    xi = np.linspace(0.5, 4.0, 9)
    h = 1e-5
    q, u, dq, du = traj.at_xi(xi)
    qp, up, _, _ = traj.at_xi(xi + h)
    qm, um, _, _ = traj.at_xi(xi - h)
    np.testing.assert_allclose((qp - qm) / (2 * h), dq, atol=1e-8)
    np.testing.assert_allclose((up - um) / (2 * h), du, atol=1e-8)


def test_translation_symmetry():
    traj = integrate_desingularized(EmdenPoint(0.3, -0.1), 0.0, +1, MODEL, tol=1e-12)
    k = len(traj.q) // 3
    again = integrate_desingularized(EmdenPoint(traj.q[k], traj.u[k]), traj.xi[k] + 7.0, +1,
                                     MODEL, tol=1e-12)
    xi = np.linspace(traj.xi[k] + 0.1, traj.xi[k] + 3.0, 5)
    a = traj.at_xi(xi)
    b = again.at_xi(xi + 7.0)
    np.testing.assert_allclose(a[0], b[0], rtol=1e-9)
    np.testing.assert_allclose(a[1], b[1], rtol=1e-9, atol=1e-13)


def test_origin_series_leading_terms():
    m = GasModel(1.4, 1.19)
    ser = p0_expansion(m, 1.0, 12)
    assert ser.w[0] == pytest.approx(-0.19 / 0.6, rel=1e-13)
    u1 = ser.w[0]
    assert ser.q[1] == pytest.approx(-u1 * (m.lam + u1) / (2 * m.alpha), rel=1e-13)
    q, u, _, _ = ser.evaluate(np.array([0.0]))
    assert q[0] == 1.0 and u[0] == 0.0
    # residual O(r^order): compare two radii
    r = np.array([0.05, 0.1])
    res = np.abs(origin_residual(p0_expansion(m, 1.0, 4), m, r)[0])
    assert np.log(res[1] / res[0]) / np.log(2) > 7.5
