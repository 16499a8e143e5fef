"""Spectral efficiencies (bps/Hz) of the two PNC phases and their compositions.

All functions accept scalars or numpy arrays of linear SNRs.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .errors import BothLinksSilent


def _log2_1p(snr):
    return np.log2(1.0 + np.asarray(snr, dtype=float))


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def rate_ma_upper(snr_ar0, snr_br0):
    """Upper bound of the multiple-access phase: the weaker of the two links."""
    return _out(np.minimum(_log2_1p(snr_ar0), _log2_1p(snr_br0)))


def rate_ma_lattice_raw(snr_ar0, snr_br0):
    """Nested-lattice MA rate before clamping; may be negative at low SNR."""
    sa = np.asarray(snr_ar0, dtype=float)
    sb = np.asarray(snr_br0, dtype=float)
    total = sa + sb
    if np.any(total <= 0):
        raise BothLinksSilent("lattice MA rate undefined when both links have zero SNR")
    with np.errstate(divide="ignore"):
        return _out(np.minimum(np.log2(sa / total + sa), np.log2(sb / total + sb)))


def rate_ma_lattice(snr_ar0, snr_br0):
    """Nested-lattice MA rate, clamped at zero."""
    return _out(np.maximum(rate_ma_lattice_raw(snr_ar0, snr_br0), 0.0))


def rate_bc(snr_r0a, snr_r0b):
    return _out(np.minimum(_log2_1p(snr_r0a), _log2_1p(snr_r0b)))


def rate_pnc_equal(r_ma_lc, r_bc):
    """Equal time slots: half the bottleneck phase rate."""
    return _out(0.5 * np.minimum(r_ma_lc, r_bc))


def rate_pncb(r_ma, r_bc):
    """Time-optimal split between the phases.

    Returns ``(rate, rho_ma, rho_bc)``. If either phase rate is zero the rate is
    zero and the split is reported as (0.5, 0.5).
    """
    r_ma = np.asarray(r_ma, dtype=float)
    r_bc = np.asarray(r_bc, dtype=float)
    total = r_ma + r_bc
    live = (r_ma > 0) & (r_bc > 0)
    safe = np.where(live, total, 1.0)
    rate = np.where(live, r_ma * r_bc / safe, 0.0)
    rho_ma = np.where(live, r_bc / safe, 0.5)
    rho_bc = np.where(live, r_ma / safe, 0.5)
    return _out(rate), _out(rho_ma), _out(rho_bc)


@dataclass(frozen=True)
class RateBreakdown:
    r_ar0: float
    r_br0: float
    r_r0a: float
    r_r0b: float
    r_ma: float
    r_ma_lc: float
    r_bc: float
    rho_ma: float
    rho_bc: float
    r_overall: float
    strategy: str
    lattice_clamped: bool

    def as_dict(self):
        return asdict(self)


STRATEGIES = ("PNC-equal", "PNC-B", "upper-bound")


def rate_breakdown(snr_ar0, snr_br0, snr_r0a, snr_r0b, strategy="PNC-B"):
    """All component rates for one (user, relay) pair.

    ``PNC-B`` and ``PNC-equal`` use the lattice MA rate; ``upper-bound`` uses
    the MA upper bound with the time-optimal split.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    r_ma = rate_ma_upper(snr_ar0, snr_br0)
    raw = rate_ma_lattice_raw(snr_ar0, snr_br0)
    r_ma_lc = max(raw, 0.0)
    r_bc = rate_bc(snr_r0a, snr_r0b)
    if strategy == "PNC-equal":
        overall = rate_pnc_equal(r_ma_lc, r_bc)
        rho_ma = rho_bc = 0.5
    else:
        overall, rho_ma, rho_bc = rate_pncb(r_ma_lc if strategy == "PNC-B" else r_ma, r_bc)
    return RateBreakdown(
        r_ar0=float(_log2_1p(snr_ar0)), r_br0=float(_log2_1p(snr_br0)),
        r_r0a=float(_log2_1p(snr_r0a)), r_r0b=float(_log2_1p(snr_r0b)),
        r_ma=r_ma, r_ma_lc=r_ma_lc, r_bc=r_bc, rho_ma=rho_ma, rho_bc=rho_bc,
        r_overall=overall, strategy=strategy, lattice_clamped=raw < 0,
    )
