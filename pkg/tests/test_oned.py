import math

import numpy as np
import pytest

from rearropt.oned import (
    FitError,
    OneDParams,
    fd_rm_1d,
    fit_rate,
    iterate_map,
    map_h,
    r_star,
    rate_L,
    rate_report,
    theta_star,
)

P_HALF = OneDParams(1.0, 10.0, 0.5)
P_THIN = OneDParams(1.0, 100.0, 0.02)


def test_params_validation():
    with pytest.raises(ValueError):
        OneDParams(0.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        OneDParams(2.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        OneDParams(1.0, 2.0, 1.5)


def test_rate_L_closed_form():
    assert rate_L(P_HALF) == pytest.approx(0.45, abs=1e-15)
    assert rate_L(P_THIN) == pytest.approx(0.9702, abs=1e-15)


def test_theta_and_r_star_domain():
    for bad in (0.0, 1.0, -0.2, 1.7):
        with pytest.raises(ValueError):
            theta_star(bad)
        with pytest.raises(ValueError):
            r_star(bad)


def test_rate_relations_generic():
    for L in (0.05, 0.3, 0.45, 0.77, 0.9702):
        t = theta_star(L)
        r = r_star(L)
        assert 0.0 < t < 1.0
        assert 0.0 < r < L
        assert (1.0 - r) ** 2 == pytest.approx(1.0 - L, abs=1e-15)
        assert r == pytest.approx(0.5 * (1.0 + t) * L, abs=1e-15)


def test_map_upper_branch_closed_form():
    # for (1, 100, 0.02): alpha = 2.98, switch at 2.02/2.98, and at y = 0.9
    # the upper branch gives (0.02/2.98) * 99 * 0.1 = 99/1490
    y1 = map_h(0.9, P_THIN)
    assert y1 == pytest.approx(99.0 / 1490.0, rel=1e-15)


def test_map_fixed_point_and_endpoint():
    assert map_h(0.0, P_HALF) == 0.0
    assert map_h(1.0, P_HALF) == pytest.approx(0.0, abs=1e-15)


def test_map_lower_branch_linearization():
    # h(y)/y -> L as y -> 0; the conjugate form must hold this down to
    # tiny scales with no cancellation
    L = rate_L(P_HALF)
    for y, tol in ((1e-4, 1e-3), (1e-10, 1e-9), (1e-100, 1e-12), (1e-300, 1e-12)):
        assert map_h(y, P_HALF) / y == pytest.approx(L, rel=tol)


def test_map_lower_branch_at_switch_closed_form():
    # at the switch point the sqrt argument collapses to (delta f_-)^2, so
    # the lower branch value is (delta (f_+ - f_-) / alpha) (1 - 2 delta)
    for fm, fp, d in ((1.0, 10.0, 0.2), (1.0, 100.0, 0.02), (2.0, 3.0, 0.3)):
        p = OneDParams(fm, fp, d)
        alpha = fm + d * (fp - fm)
        lam = d * (fm + fp) / alpha
        assert lam > 3.0 * d - 1.0
        expect = (d * (fp - fm) / alpha) * (1.0 - 2.0 * d)
        assert map_h(lam, p) == pytest.approx(expect, rel=1e-12)


def test_map_domain_validation():
    with pytest.raises(ValueError):
        map_h(-0.1, P_HALF)
    with pytest.raises(ValueError):
        map_h(1.1, P_HALF)


def test_iterate_rm_matches_manual_composition():
    # h maps [0,1] into itself, so plain RM is direct composition of map_h
    traj = iterate_map("rm", 0.3, P_HALF, 12)
    assert [it.k for it in traj] == list(range(13))
    y = 0.3
    for it in traj:
        assert it.y == y
        y = map_h(y, P_HALF)


def test_iterate_marm_matches_manual_recurrence():
    n = 15
    traj = [it.y for it in iterate_map("marm", 0.3, P_HALF, n)]
    y_prev, y = 0.3, 0.3
    manual = [0.3]
    for k in range(n):
        theta = 0.0 if k == 0 else (k - 1.0) / (k + 2.0)
        y_t = min(1.0, max(-1.0, y + theta * (y - y_prev)))
        y_next = map_h(y_t, P_HALF) if y_t >= 0 else -map_h(-y_t, P_HALF)
        y_prev, y = y, y_next
        manual.append(y)
    assert traj == manual


def test_iterate_oarm_first_step_matches_rm():
    # extrapolation from a single point is a no-op
    oarm = iterate_map("oarm", 0.3, P_HALF, 1)
    assert oarm[1].y == map_h(0.3, P_HALF)


def test_iterate_custom_schedule_overrides_default():
    base = iterate_map("marm", 0.3, P_HALF, 10, theta_schedule=lambda k: 0.0)
    rm = iterate_map("rm", 0.3, P_HALF, 10)
    assert [it.y for it in base] == [it.y for it in rm]


def test_iterate_validation():
    with pytest.raises(ValueError):
        iterate_map("nesterov", 0.3, P_HALF, 5)
    with pytest.raises(ValueError):
        iterate_map("rm", -0.3, P_HALF, 5)
    with pytest.raises(ValueError):
        iterate_map("rm", 0.3, P_HALF, 0)


def test_iterate_stops_before_hard_zero():
    traj = iterate_map("rm", 0.3, P_HALF, 2000)
    assert len(traj) < 1000
    assert traj[-1].y != 0.0
    assert abs(traj[-1].y) < 1e-300


def test_map_derivative_at_zero_matches_rate_grid():
    for fm, fp, d in ((1, 10, 0.5), (1, 100, 0.02), (2, 5, 0.3), (1, 3, 0.7)):
        p = OneDParams(fm, fp, d)
        fd = map_h(1e-7, p) / 1e-7
        assert abs(fd - rate_L(p)) <= 1e-4


def test_marm_envelope_decays_at_sqrt_L():
    # the Nesterov-style schedule drives the roots complex with modulus
    # sqrt(L); the trajectory bounces across 0 and its peak envelope decays
    # at about sqrt(0.45) = 0.67
    traj = [it.y for it in iterate_map("marm", 0.5, P_HALF, 120)]
    flips = sum(1 for a, b in zip(traj, traj[1:]) if (a < 0) != (b < 0))
    assert flips > 5
    env = fit_rate(np.abs(traj), envelope=True)
    assert env == pytest.approx(math.sqrt(0.45), abs=0.05)


def test_fit_rate_exact_geometric():
    vals = 0.25 * 0.9 ** np.arange(60)
    assert fit_rate(vals) == pytest.approx(0.9, rel=1e-12)
    assert fit_rate(vals, tail_fraction=1.0) == pytest.approx(0.9, rel=1e-12)


def test_fit_rate_ignores_sign():
    vals = 0.25 * (-0.8) ** np.arange(40)
    assert fit_rate(vals) == pytest.approx(0.8, rel=1e-12)


def test_fit_rate_envelope_tracks_peaks():
    k = np.arange(60)
    vals = 0.7**k * np.where(k % 3 == 0, 1.5, 1.0)
    assert fit_rate(vals, envelope=True) == pytest.approx(0.7, rel=1e-10)


def test_fit_rate_errors():
    with pytest.raises(FitError):
        fit_rate([1.0, 0.5])
    with pytest.raises(FitError):
        fit_rate([1.0, 0.5, 0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        fit_rate([1.0, 0.5, 0.25], tail_fraction=0.0)
    flat = np.zeros(10)
    with pytest.raises(FitError):
        fit_rate(flat, envelope=True)


def test_rate_report_bundles_constants():
    rep = rate_report(P_HALF, fitted_rate=0.44)
    assert rep.L == pytest.approx(0.45, abs=1e-15)
    assert rep.theta_star == theta_star(0.45)
    assert rep.r_star == r_star(0.45)
    assert rep.fitted_rate == 0.44


def test_fd_rm_centers_the_support():
    n = 256
    hist = fd_rm_1d(n, P_HALF, 0.3)
    assert hist.termination == "diff_zero"
    h = 1.0 / n
    assert abs(hist.records[-1].objective) <= h
    ind = hist.final_density
    assert int(ind.sum()) == 128
    # support stays contiguous while sliding to the center
    on = np.flatnonzero(ind)
    assert on[-1] - on[0] == on.size - 1


def test_fd_rm_offsets_decay_geometrically():
    n = 1024
    hist = fd_rm_1d(n, P_HALF, 0.3)
    offsets = np.abs(hist.objectives)
    usable = offsets[offsets > 2.0 / n]
    rate = fit_rate(usable, tail_fraction=1.0)
    assert rate == pytest.approx(0.45, abs=0.08)


def test_fd_rm_validation():
    with pytest.raises(ValueError):
        fd_rm_1d(32, P_HALF, 0.4)
    with pytest.raises(ValueError):
        fd_rm_1d(256, P_HALF, 0.2)  # support would stick out at 0
    with pytest.raises(ValueError):
        fd_rm_1d(256, P_HALF, 0.8)
