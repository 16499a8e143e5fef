import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from pncsim.errors import BothLinksSilent
from pncsim.rates import (rate_bc, rate_breakdown, rate_ma_lattice, rate_ma_lattice_raw,
                          rate_ma_upper, rate_pnc_equal, rate_pncb)

snr = st.floats(0.0, 1e6)
pos_snr = st.floats(1e-6, 1e6)
rate = st.floats(0.0, 50.0)
live_rate = st.floats(1e-6, 50.0)


def test_ma_upper_examples():
    assert rate_ma_upper(1, 1) == 1.0
    assert rate_ma_upper(0, 123.0) == 0.0
    assert rate_ma_upper(45.2, 3.0) == pytest.approx(2.0)


def test_ma_lattice_examples():
    assert rate_ma_lattice(1, 1) == pytest.approx(math.log2(1.5))
    assert rate_ma_lattice_raw(0.4, 0.4) == pytest.approx(math.log2(0.9))
    assert rate_ma_lattice(0.4, 0.4) == 0.0
    with pytest.raises(BothLinksSilent):
        rate_ma_lattice(0.0, 0.0)


def test_bc_examples():
    assert rate_bc(3, 3) == 2.0
    assert rate_bc(3, 1) == 1.0
    assert rate_bc(45.2, 45.2) == pytest.approx(math.log2(46.2))
    assert rate_bc(45.2, 45.2) == pytest.approx(5.53, abs=0.005)


def test_equal_slot_examples():
    assert rate_pnc_equal(2, 2) == 1.0
    assert rate_pnc_equal(1, 3) == 0.5
    assert rate_pnc_equal(0, 3) == 0.0


def test_pncb_examples():
    assert rate_pncb(2, 2) == (1.0, 0.5, 0.5)
    assert rate_pncb(1, 3) == pytest.approx((0.75, 0.75, 0.25))
    assert rate_pncb(0, 3) == (0.0, 0.5, 0.5)
    assert rate_pncb(0, 0) == (0.0, 0.5, 0.5)


def test_vectorised():
    r, a, b = rate_pncb(np.array([2.0, 1.0, 0.0]), np.array([2.0, 3.0, 3.0]))
    np.testing.assert_allclose(r, [1.0, 0.75, 0.0])
    np.testing.assert_allclose(a, [0.5, 0.75, 0.5])


@settings(max_examples=300, deadline=None)
@given(rate)
def test_pncb_balanced_equals_equal_slots(r):
    assert rate_pncb(r, r)[0] == pytest.approx(r / 2) == rate_pnc_equal(r, r)


@settings(max_examples=300, deadline=None)
@given(rate, rate)
def test_pncb_never_loses_to_equal_slots(a, b):
    r, rho_ma, rho_bc = rate_pncb(a, b)
    assert r >= rate_pnc_equal(a, b) - 1e-12
    assert rho_ma + rho_bc == pytest.approx(1.0)


@settings(max_examples=300, deadline=None)
@given(live_rate, live_rate)
def test_pncb_split_balances_phases(a, b):
    r, rho_ma, rho_bc = rate_pncb(a, b)
    assert 0 < rho_ma < 1 and 0 < rho_bc < 1
    # both phases are bottlenecks at the optimal split
    assert rho_ma * a == pytest.approx(r) and rho_bc * b == pytest.approx(r)


@settings(max_examples=300, deadline=None)
@given(pos_snr)
def test_lattice_symmetric_closed_form(s):
    assert rate_ma_lattice_raw(s, s) == pytest.approx(math.log2(0.5 + s), rel=1e-12, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(st.floats(1.0, 1e6), st.floats(1.0, 1e6))
def test_lattice_gap_to_upper_bound(a, b):
    upper, lattice = rate_ma_upper(a, b), rate_ma_lattice(a, b)
    assert lattice <= upper + 1e-12
    # one bit in general; half a bit (log2(4/3) in fact) for balanced links
    assert lattice >= upper - 1.0
    assert rate_ma_lattice(a, a) >= rate_ma_upper(a, a) - math.log2(4 / 3) - 1e-12


def test_lattice_half_bit_fails_under_imbalance():
    # the weak user's lattice term collapses when the partner is much stronger
    assert rate_ma_upper(1, 1000) - rate_ma_lattice(1, 1000) > 0.9


@settings(max_examples=300, deadline=None)
@given(snr, snr, st.floats(0.0, 1e3))
def test_monotone_in_each_snr(a, b, d):
    assert rate_ma_upper(a + d, b) >= rate_ma_upper(a, b)
    assert rate_bc(a, b + d) >= rate_bc(a, b)


def test_lattice_not_monotone_in_partner_snr():
    # raising the strong link lowers the weak link's lattice term
    assert rate_ma_lattice(1e6, 1.0) < rate_ma_lattice(1e3, 1.0)


@settings(max_examples=200, deadline=None)
@given(pos_snr, pos_snr, snr, snr)
def test_breakdown_invariants(a, b, c, d):
    for strategy in ("PNC-B", "PNC-equal", "upper-bound"):
        rb = rate_breakdown(a, b, c, d, strategy)
        assert rb.rho_ma + rb.rho_bc == pytest.approx(1.0)
        assert rb.r_ma <= min(rb.r_ar0, rb.r_br0) + 1e-12
        assert rb.r_bc == min(rb.r_r0a, rb.r_r0b)
        ma = rb.r_ma if strategy == "upper-bound" else rb.r_ma_lc
        assert rb.r_overall <= min(ma, rb.r_bc) + 1e-12
        assert min(rb.r_ma, rb.r_ma_lc, rb.r_bc, rb.r_overall) >= 0


def test_breakdown_flags_clamp():
    assert rate_breakdown(0.4, 0.4, 1, 1).lattice_clamped
    assert not rate_breakdown(4, 4, 1, 1).lattice_clamped
    with pytest.raises(ValueError):
        rate_breakdown(1, 1, 1, 1, "nope")
