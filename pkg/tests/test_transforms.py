import math
import warnings

import numpy as np
import pytest

from implosion.errors import DomainError, ParseError
from implosion.simulator import state_from_initial_data, uniform_grid
from implosion.transforms import (CutoffSet, FloorWarning, SelfSimFrame, build_initial_data,
                                  bump, bump_deriv, c_from_density, density_from_c,
                                  eval_cutoffs, field_scale, from_selfsim, load_initial_data,
                                  rescale_fields, rescaled_observables, save_initial_data,
                                  smooth_max, to_selfsim)

FRAME = SelfSimFrame(0.1, 1.12)


def test_frame_round_trip():
    t = np.array([0.0, 0.05, 0.0999])
    x = np.array([0.1, 0.5, 2.0])
    tau, y = to_selfsim(FRAME, t, x)
    assert tau[0] == pytest.approx(FRAME.tau0)
    t2, x2 = from_selfsim(FRAME, tau, y)
    np.testing.assert_allclose(t2, t, atol=1e-15)
    np.testing.assert_allclose(x2, x, rtol=1e-14)
    np.testing.assert_allclose(FRAME.time_of(tau), t, atol=1e-15)


def test_frame_domain():
    with pytest.raises(DomainError):
        FRAME.remaining(0.1)
    with pytest.raises(DomainError):
        SelfSimFrame(0.1, 1.0)
    with pytest.raises(DomainError):
        SelfSimFrame(-1.0, 1.1)


def test_field_rescaling_inverse():
    q, u = np.array([1.0, 2.0]), np.array([-0.1, 0.3])
    c, v = rescale_fields(FRAME, "to_eulerian", 0.02, q, u)
    assert c[0] == pytest.approx(0.08 ** (1 / 1.12 - 1) / 1.12)
    q2, u2 = rescale_fields(FRAME, "to_selfsim", 0.02, c, v)
    np.testing.assert_allclose(q2, q, rtol=1e-15)
    np.testing.assert_allclose(u2, u, rtol=1e-15)
    with pytest.raises(ValueError):
        rescale_fields(FRAME, "sideways", 0.0, q, u)
    rho = density_from_c(c, 0.2)
    np.testing.assert_allclose(c_from_density(rho, 0.2), c, rtol=1e-14)


def test_bump_shape():
    x = np.linspace(-1.5, 1.5, 30001)
    b = bump(x)
    assert np.all(b[np.abs(x) <= 0.5] == 1.0)
    assert np.all(b[np.abs(x) >= 1.0] == 0.0)
    assert np.max(np.abs(np.gradient(b, x))) <= 4.0
    xi = np.array([-0.9, -0.7, 0.6, 0.75, 0.95])
    h = 1e-6
    np.testing.assert_allclose(bump_deriv(xi), (bump(xi + h) - bump(xi - h)) / (2 * h),
                               atol=1e-7)


def test_weight_function():
    cs = CutoffSet(r0=2.0, eta=0.25)
    r = np.array([0.5, 1.9, 20.0, 100.0])
    phi, _ = cs.weight(r)
    np.testing.assert_allclose(phi[:2], 1.0)
    np.testing.assert_allclose(phi[2:], (r[2:] / 2.0) ** 1.5 / 2, rtol=1e-14)
    rr = np.linspace(1.0, 10.0, 41)
    h = 1e-6
    _, dphi = cs.weight(rr)
    fd = (cs.weight(rr + h)[0] - cs.weight(rr - h)[0]) / (2 * h)
    np.testing.assert_allclose(dphi, fd, atol=1e-6)
    assert np.all(cs.weight(np.linspace(0, 50, 1001))[0] > 0)
    with pytest.raises(DomainError):
        CutoffSet(eta=1.0)


def test_cutoff_profiles():
    cs = CutoffSet()
    vals = eval_cutoffs(cs, 1.0, np.array([0.0, 9.0, 16.0, 19.0, 26.0]))
    chi_x, x_hat, chi1, chi2, phi, dphi = vals
    assert chi_x[0] == 1.0 and x_hat[0] == 1.0
    np.testing.assert_array_equal(chi1, [1, 1, 0, 0, 0])
    np.testing.assert_array_equal(chi2, [1, 1, 1, 1, 0])


def test_smooth_max_bounds():
    a = np.linspace(-2, 2, 101)
    s = smooth_max(a, 0.0, 0.1)
    assert np.all(s >= np.maximum(a, 0.0))
    assert np.all(s <= np.maximum(a, 0.0) + 0.1 * math.log(2) + 1e-15)


def test_initial_data_matches_profile(profile14):
    frame = SelfSimFrame(0.1, profile14.model.lam)
    r = uniform_grid(512, 1.5)
    data = build_initial_data(profile14, frame, CutoffSet(), 1e-6, r)
    assert np.all(data.rho0 > 0)
    core = r <= 0.5
    y = r[core] * 0.1 ** (-1 / frame.lam)
    q, u, _, _ = profile14.interpolate(y)
    s = field_scale(frame, 0.0)
    np.testing.assert_allclose(data.c0[core], s * q, rtol=1e-12)
    np.testing.assert_allclose(data.u0[core], s * u, rtol=1e-12, atol=1e-15)
    assert np.all(data.u0[r >= 1.0] == 0.0)
    assert np.all(data.rho0 >= 0.999 * data.floor_bound() * (1 + (r / 0.1 ** (1 / frame.lam)) ** 2)
                  ** (-(frame.lam - 1) / (2 * profile14.model.alpha)))


def test_floor_warning(profile14):
    frame = SelfSimFrame(0.1, profile14.model.lam)
    with pytest.warns(FloorWarning):
        build_initial_data(profile14, frame, CutoffSet(), 1e3, uniform_grid(256, 1.5))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        build_initial_data(profile14, frame, CutoffSet(), 1e-3, uniform_grid(256, 1.5))
    with pytest.raises(DomainError):
        build_initial_data(profile14, frame, CutoffSet(), 0.0, uniform_grid(256, 1.5))
    with pytest.raises(DomainError):
        build_initial_data(profile14, SelfSimFrame(0.1, 1.15), CutoffSet(), 1e-3,
                           uniform_grid(256, 1.5))


def test_rescaled_observables_at_start(profile14):
    frame = SelfSimFrame(0.1, profile14.model.lam)
    data = build_initial_data(profile14, frame, CutoffSet(), 1e-6, uniform_grid(2048, 1.5))
    state = state_from_initial_data(data)
    y = np.array([0.2, 0.5, 1.0])
    lq, lu = rescaled_observables(frame, state, y, profile14.model.alpha)
    q, u, _, _ = profile14.interpolate(y)
    np.testing.assert_allclose(lq, q ** (1 / profile14.model.alpha), rtol=1e-6)
    np.testing.assert_allclose(lu, u, rtol=1e-6)
    with pytest.raises(DomainError):
        rescaled_observables(frame, state, np.array([100.0]), profile14.model.alpha)


def test_initial_data_round_trip(profile14, tmp_path):
    frame = SelfSimFrame(0.1, profile14.model.lam)
    pert = lambda y: (1e-3 * np.exp(-y * y), np.zeros_like(y))
    data = build_initial_data(profile14, frame, CutoffSet(), 1e-4, uniform_grid(128, 1.5),
                              perturbation=pert)
    path = tmp_path / "init.csv"
    save_initial_data(data, path)
    back = load_initial_data(path)
    assert np.array_equal(back.rho0, data.rho0) and np.array_equal(back.u0, data.u0)
    assert back.provenance["perturbation"] == "custom"
    bad = tmp_path / "bad.csv"
    lines = path.read_text().splitlines()
    i = lines.index("r,rho0,u0") + 1
    lines[i] = "0,-1,0"
    bad.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError, match="density"):
        load_initial_data(bad)


def test_weight_is_c1_at_joins():
    cs = CutoffSet(r0=1.5, eta=0.3)
    for r in (cs.r0, 4 * cs.r0):
        for h in (1e-4, 1e-5):
            left = (cs.weight(r)[0] - cs.weight(r - h)[0]) / h
            right = (cs.weight(r + h)[0] - cs.weight(r)[0]) / h
            assert abs(left - right) < 50 * h
        lo, hi = cs.weight(np.array([r * (1 - 1e-12), r * (1 + 1e-12)]))[1]
        assert lo == pytest.approx(hi, abs=1e-9)


def test_floor_vanishes_as_nu1_shrinks(profile14):
    frame = SelfSimFrame(0.1, profile14.model.lam)
    r = uniform_grid(512, 1.5)
    s = field_scale(frame, 0.0)
    q, _, _, _ = profile14.interpolate(r * 0.1 ** (-1 / frame.lam))
    exact = s * bump(r) * q
    errs = [np.max(np.abs(build_initial_data(profile14, frame, CutoffSet(), nu, r).c0 - exact))
            for nu in (1e-2, 1e-3, 1e-4)]
    # the floor term is linear in nu1
    assert errs[0] / errs[1] == pytest.approx(10, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(10, rel=0.05)
