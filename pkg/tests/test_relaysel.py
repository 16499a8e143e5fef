import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pncsim.errors import NoRelays, OutOfDomain, OutOfSegment
from pncsim.netmodel import Deployment, PowerProfile, PropagationParams, relay_grid_linear, relay_grid_planar
from pncsim.rates import rate_pncb
from pncsim.relaysel import (Objective, RelaySnrs, ascend, classify_case, compute_big_d,
                             gradient_logF, gradient_logF_planar, log_objective, log_objective_planar,
                             nearest_relay, objective_f, pncb_relay_rates, select_relay_pncb_linear,
                             select_relay_pncb_planar, select_relay_scpnc, verify_logconcavity)
from pncsim.verification import exhaustive_best_rate, flipped_h_log_objective, grid_optimum

POWER = PowerProfile()
PROP = PropagationParams()
D = compute_big_d(46, 23, 3.7)


def test_big_d():
    assert D == pytest.approx(1 + 10 ** (-2.3 / 3.7), rel=1e-12)
    assert D == pytest.approx(1.2390, abs=1e-4)
    assert 1 < D < 2


def test_classify_case_examples():
    assert classify_case(0.6 * 800, 800, D) == 3
    assert classify_case(800 / D, 800, D) == 3
    assert classify_case(200, 800, D) == 4
    assert classify_case(720, 800, D) == 1
    with pytest.raises(OutOfSegment):
        classify_case(5, 800, D)
    with pytest.raises(OutOfSegment):
        classify_case(801, 800, D)


@settings(max_examples=300, deadline=None)
@given(st.floats(20, 1000), st.floats(0, 1))
def test_classify_case_partition(x_b, u):
    x = 10 + u * (x_b - 10)
    case = classify_case(x, x_b, D)
    # case 2 would need x > x_b/D and x <= x_b/2 at once
    assert case in (1, 3, 4)
    assert (case == 3) == (x_b / 2 < x <= x_b / D)


@settings(max_examples=200, deadline=None)
@given(st.floats(50, 1000), st.floats(0.01, 0.99), st.floats(0.05, 5), st.floats(0.05, 5))
def test_objective_matches_rate_composition(x_b, u, gb, ga):
    obj = Objective.from_profile(x_b, POWER, PROP, gain_br=gb, gain_ar=ga)
    if obj.empty:
        return
    x = obj.lower + u * (obj.upper - obj.lower)
    r_ma = math.log2(1 + obj.gamma_b * (x_b - x) ** (-obj.n))
    r_bc = math.log2(1 + obj.gamma_r0 * x ** (-obj.n))
    assert objective_f(x, obj) == pytest.approx(rate_pncb(r_ma, r_bc)[0], rel=1e-12)
    assert log_objective(x, obj) == pytest.approx(math.log(objective_f(x, obj)), rel=1e-12)


def test_objective_domain():
    obj = Objective.from_profile(800, POWER, PROP)
    with pytest.raises(OutOfDomain):
        objective_f(300, obj)
    with pytest.raises(OutOfDomain):
        objective_f(799, obj)
    assert obj.upper == pytest.approx(800 / D)


@settings(max_examples=100, deadline=None)
@given(st.floats(100, 1000), st.floats(0.05, 0.95), st.floats(1e-6, 1e6))
def test_objective_scaling_consistency(x_b, u, c):
    # scaling every gamma by c equals the same problem with the distance unit rescaled
    obj = Objective.from_profile(x_b, POWER, PROP)
    x = obj.lower + u * (obj.upper - obj.lower)
    s = c ** (1 / obj.n)
    ref = Objective(obj.gamma_b, obj.gamma_r0, x_b / s, obj.n, obj.d_big, obj.ref_dist / s)
    assert objective_f(x, obj.scaled(c)) == pytest.approx(objective_f(x / s, ref), rel=1e-10)


def test_exact_gradient_against_central_difference():
    obj = Objective.from_profile(700, POWER, PROP, gain_br=0.3, gain_ar=2.0)
    for x in np.linspace(obj.lower + 1, obj.upper - 1, 7):
        h = 1e-3
        fd = (log_objective(x + h, obj) - log_objective(x - h, obj)) / (2 * h)
        assert gradient_logF(x, obj, "exact") == pytest.approx(fd, rel=1e-5, abs=1e-12)


def test_planar_gradient_on_axis_matches_linear():
    obj = Objective.from_profile(700, POWER, PROP, user_xy=(700, 0))
    x = 0.5 * (obj.lower + obj.upper)
    g = gradient_logF_planar(np.array([x, 0.0]), obj, "exact")
    assert g[0] == pytest.approx(gradient_logF(x, obj, "exact"), rel=1e-12)
    assert abs(g[1]) < 1e-15
    assert log_objective_planar(np.array([x, 0.0]), obj) == pytest.approx(log_objective(x, obj))


def test_ascent_reaches_grid_optimum_at_one_km():
    obj = Objective.from_profile(1000, POWER, PROP)
    dep = Deployment.linear(1000, relay_grid_linear(10, PROP)[:, 0], 10, PROP)
    sel = select_relay_pncb_linear(dep, obj)
    x_grid, _ = grid_optimum(obj, 0.01)
    assert abs(sel.x_star - x_grid) < 0.5
    best = exhaustive_best_rate(1000, obj, dep.relay_positions[:, 0], PROP.ref_dist)
    assert sel.achieved_rate >= best * (1 - 1e-3)
    assert obj.lower < sel.x_star <= obj.upper
    # the trace ascends
    f = [v for _, v in sel.trace]
    assert all(b >= a for a, b in zip(f, f[1:]))


def test_single_relay_is_always_chosen():
    dep = Deployment.linear(900, [100.0], prop=PROP)
    sel = select_relay_pncb_linear(dep, Objective.from_profile(900, POWER, PROP))
    assert sel.chosen_index == 0


def test_tie_break_lowest_index():
    relays = np.array([[600.0, 0], [500.0, 0], [400.0, 0], [500.0, 0]])
    assert nearest_relay(relays, (550.0, 0)) == 0
    assert nearest_relay(relays, (450.0, 0)) == 1
    assert nearest_relay(relays, (500.0, 0), eligible=np.array([1, 0, 1, 1], bool)) == 3


def test_no_eligible_relay():
    dep = Deployment.linear(500, [495.0], prop=PROP)
    with pytest.raises(NoRelays):
        select_relay_pncb_linear(dep, Objective.from_profile(500, POWER, PROP))


def test_planar_picks_best_relay_far_user():
    prop = PropagationParams(cell_radius=1200.0)
    dep = Deployment.planar((850.0, 750.0), relay_grid_planar(200, prop), prop=prop)
    obj = Objective.from_profile(dep.user_distance, POWER, prop, user_xy=(850, 750))
    sel = select_relay_pncb_planar(dep, obj)
    rates = pncb_relay_rates(RelaySnrs.from_objective(dep, obj))
    assert sel.achieved_rate == pytest.approx(np.nanmax(rates), rel=1e-12)


def test_planar_on_axis_degenerates_to_linear():
    obj = Objective.from_profile(800, POWER, PROP, user_xy=(800, 0))
    grid = relay_grid_planar(100, PROP)
    sel = select_relay_pncb_planar(Deployment.planar((800, 0), grid, prop=PROP), obj)
    lin = select_relay_pncb_linear(Deployment.linear(800, [400.0], prop=PROP),
                                   Objective.from_profile(800, POWER, PROP))
    assert abs(sel.x_star[1]) < 1e-6
    assert sel.x_star[0] == pytest.approx(lin.x_star, abs=1e-6)


def test_planar_rotation_equivariance():
    user = np.array([600.0, 350.0])
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    grid = relay_grid_planar(100, PROP)
    out = []
    for u, g in ((user, grid), (rot @ user, grid @ rot.T)):
        obj = Objective.from_profile(np.hypot(*u), POWER, PROP, user_xy=u)
        out.append(select_relay_pncb_planar(Deployment.planar(u, g, prop=PROP), obj))
    np.testing.assert_allclose(out[1].x_star, rot @ out[0].x_star, atol=1e-6)
    assert out[1].achieved_rate == pytest.approx(out[0].achieved_rate, abs=1e-12)


def test_batched_ascent_matches_single():
    users = np.array([[300.0, 0], [650.0, 0], [990.0, 0]])
    obj = [Objective.from_profile(u[0], POWER, PROP) for u in users]
    batch = ascend(users, [o.gamma_b for o in obj], [o.gamma_r0 for o in obj], PROP.path_loss_exp, D)
    for i, o in enumerate(obj):
        one = ascend(users[i:i + 1], o.gamma_b, o.gamma_r0, PROP.path_loss_exp, D)
        np.testing.assert_array_equal(batch.position[i], one.position[0])


def test_empty_domain():
    # for x_b <= 2*d0 the d0 limit around the user closes the interval
    obj = Objective.from_profile(18, POWER, PROP)
    assert obj.empty
    res = ascend(np.array([[18.0, 0]]), obj.gamma_b, obj.gamma_r0, obj.n, obj.d_big)
    assert res.position[0, 0] == 9.0 and res.stop_reason[0] == "empty-domain"


def _snrs(ma, bc):
    """Relay SNRs that give symmetric lattice MA rate ``ma`` and BC rate ``bc``."""
    s_ma = 2.0 ** np.asarray(ma) - 0.5
    s_bc = 2.0 ** np.asarray(bc) - 1.0
    return RelaySnrs(s_ma, s_ma, s_bc, s_bc)


def test_scpnc_filters_then_maximises_broadcast():
    dep = Deployment.linear(900, [100.0, 300.0, 500.0], prop=PROP)
    sel = select_relay_scpnc(dep, _snrs([0.4, 2.0, 1.0], [9.0, 3.0, 4.0]))
    assert sel.chosen_index == 2 and not sel.outage
    assert sel.achieved_rate == pytest.approx(0.5)


def test_scpnc_outage_fallback():
    dep = Deployment.linear(900, [100.0, 300.0], prop=PROP)
    sel = select_relay_scpnc(dep, _snrs([0.1, 0.3], [5.0, 1.0]))
    assert sel.outage and sel.chosen_index == 1


def test_scpnc_single_survivor():
    dep = Deployment.linear(900, [100.0], prop=PROP)
    sel = select_relay_scpnc(dep, _snrs([2.0], [3.0]))
    assert sel.chosen_index == 0 and not sel.outage


def test_logconcavity_report_and_negative_control():
    # a noise floor where every SNR term is small enough for the claim to hold
    power = PowerProfile(noise_power=-40.0)
    obj = Objective.from_profile(600, power, PROP)
    rep = verify_logconcavity(obj, 2000)
    assert rep.second_diff_ok and rep.h_condition_ok and rep.passed
    control = verify_logconcavity(obj, 2000, flipped_h_log_objective)
    assert not control.passed
    assert any("FAIL" in line or "PASS" in line for line in rep.lines())
    with pytest.raises(ValueError):
        verify_logconcavity(obj, 2)
