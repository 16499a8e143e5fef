import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pncsim.errors import ConfigError, DistanceBelowReference
from pncsim.netmodel import (Deployment, PowerProfile, PropagationParams, dbm_to_watts,
                             estimate_user_distance, free_space_factor, link_budget, received_power,
                             relay_grid_linear, relay_grid_planar, sample_fading, watts_to_dbm)


def test_free_space_factor_default_profile(prop):
    # lambda/(4 pi) = 0.012565 m, 10^1.7 = 50.12, 46 dBm = 39.81 W
    assert free_space_factor(46, prop) == pytest.approx(0.012565 ** 2 * 50.12 * 39.81, rel=2e-3)
    assert free_space_factor(46, prop) == pytest.approx(0.315, abs=1e-3)


def test_free_space_factor_n_equal_two():
    prop = PropagationParams(path_loss_exp=2.0000001)
    lam = 299_792_458.0 / (4 * math.pi * prop.carrier_freq)
    assert free_space_factor(0.0, prop) == pytest.approx(lam ** 2 * 1e-3, rel=1e-6)


def test_free_space_factor_linear_in_power(prop):
    assert free_space_factor(33.0103, prop) == pytest.approx(2 * free_space_factor(30.0, prop), rel=1e-5)


def test_received_power_example():
    p = received_power(0.315, 1.0, 500.0, 3.7)
    assert p == pytest.approx(0.315 / 500 ** 3.7, rel=1e-12)
    assert p == pytest.approx(3.24e-11, rel=5e-3)
    # 3.24e-11 W is -104.9 dBW, i.e. -74.9 dBm
    assert watts_to_dbm(p) == pytest.approx(-74.9, abs=0.05)


def test_received_power_deep_fade_and_reference_check():
    assert received_power(0.315, 0.0, 500.0, 3.7) == 0.0
    with pytest.raises(DistanceBelowReference):
        received_power(0.315, 1.0, 1.0, 3.7, ref_dist=10.0)


def test_fading_statistics(rng):
    h = sample_fading(rng, 1_000_000)
    assert np.all(h >= 0)
    assert h.mean() == pytest.approx(1.0, abs=0.01)
    assert np.mean(h <= math.log(2)) == pytest.approx(0.5, abs=0.01)


def test_link_budget_snr_at_half_km(power, prop):
    dep = Deployment.linear(800.0, [500.0], prop=prop)
    lb = link_budget("A", "R", dep, power, prop)
    assert lb.distance == 500.0
    # -74.9 dBm received over -121.45 dBm noise
    assert lb.snr == pytest.approx(10 ** ((-74.88 + 121.45) / 10), rel=0.01)
    assert lb.snr == pytest.approx(lb.rx_power / dbm_to_watts(power.noise_power), rel=1e-12)


def test_link_budget_reciprocity_with_equal_powers(prop):
    power = PowerProfile(30, 30, 30, allow_any_powers=True)
    dep = Deployment.linear(800.0, [300.0], prop=prop)
    assert link_budget("A", "R", dep, power, prop) == link_budget("R", "A", dep, power, prop)


def test_power_profile_validation():
    with pytest.raises(ConfigError):
        PowerProfile(noise_power=-math.inf)
    with pytest.raises(ConfigError):
        PowerProfile(23, 30, 46)
    PowerProfile(23, 30, 46, allow_any_powers=True)


def test_propagation_validation():
    with pytest.raises(ConfigError):
        PropagationParams(path_loss_exp=2.0)
    with pytest.raises(ConfigError):
        PropagationParams(ref_dist=0)
    with pytest.raises(ConfigError):
        PropagationParams(cell_radius=5.0)


def test_deployment_validation(prop):
    with pytest.raises(ConfigError):
        Deployment.linear(1200.0, [500.0], prop=prop)
    with pytest.raises(ConfigError):
        Deployment.linear(800.0, [5.0], prop=prop)
    with pytest.raises(ConfigError):
        Deployment.linear(800.0, [], prop=prop)


def test_estimate_distance_round_trip(power, prop):
    dep = Deployment.linear(800.0, [400.0], prop=prop)
    snr = link_budget("A", "B", dep, power, prop).snr
    assert estimate_user_distance(snr, power, prop) == pytest.approx(800.0, abs=1e-6)
    faded = link_budget("A", "B", dep, power, prop, fading_gain=2.0).snr
    assert estimate_user_distance(faded, power, prop) == pytest.approx(800 * 2 ** (-1 / 3.7), rel=1e-9)
    assert estimate_user_distance(faded, power, prop) == pytest.approx(663.3, abs=0.1)
    assert estimate_user_distance(1e30, power, prop) == prop.ref_dist


@settings(max_examples=200, deadline=None)
@given(st.floats(10.0, 1000.0))
def test_estimate_round_trip_property(d):
    power, prop = PowerProfile(), PropagationParams()
    dep = Deployment.linear(d, [prop.ref_dist], prop=prop)
    snr = link_budget("A", "B", dep, power, prop).snr
    assert estimate_user_distance(snr, power, prop) == pytest.approx(d, rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.floats(10.0, 999.0), st.floats(0.01, 1.0), st.floats(-10.0, 50.0))
def test_received_power_monotone(d, dd, p):
    prop = PropagationParams()
    pbar = free_space_factor(p, prop)
    assert received_power(pbar, 1.0, d + dd, prop.path_loss_exp) < received_power(pbar, 1.0, d, prop.path_loss_exp)
    assert free_space_factor(p + 0.5, prop) > pbar


def test_free_space_ordering_default_profile(power, prop):
    assert free_space_factor(power.p_a_tx, prop) > free_space_factor(power.p_r_tx, prop) > \
        free_space_factor(power.p_b_tx, prop)


def test_relay_grids(prop):
    lin = relay_grid_linear(10.0, prop)
    assert lin[0, 0] == 10.0 and lin[-1, 0] == 1000.0 and len(lin) == 100
    assert relay_grid_linear(400.0, prop)[:, 0].tolist() == [400.0, 800.0]
    planar = relay_grid_planar(316.2, prop)
    d = np.hypot(planar[:, 0], planar[:, 1])
    assert np.all(d <= 1000.0) and np.all(d >= 10.0)
    # roughly 10 relays per km^2 over the pi km^2 cell
    assert 28 <= len(planar) <= 40
