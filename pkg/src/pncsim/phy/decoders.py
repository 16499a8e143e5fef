"""Relay-side decoders for the PNC multiple-access phase.

XOR-CD maps each superimposed symbol to an LLR on ``X_A ^ X_B`` and channel
decodes that directly (valid because the code is linear). When its CRC fails,
two individual-message decoders are tried: RMUD (max-log per-user LLRs over the
joint constellation) and SIC (decode the stronger user treating the weaker as
noise, cancel, decode the weaker).
"""

from dataclasses import dataclass

import numpy as np

from .channel import bpsk, estimate_gains
from .coding import conv_encode, viterbi_decode
from .crc import WIDTH, crc_ok

LLR_CLIP = 1e4
_MIN_NOISE_VAR = 1e-12


def _hypothesis_metrics(y, ga, gb, noise_var):
    """Log-likelihoods (up to a constant) of the four (s_a, s_b) BPSK pairs.

    Returned in the order (+,+), (+,-), (-,+), (-,-).
    """
    s2 = max(noise_var, _MIN_NOISE_VAR)
    ga = ga[:, None]
    gb = gb[:, None]
    out = []
    for sa in (1.0, -1.0):
        for sb in (1.0, -1.0):
            out.append(-np.abs(y - sa * ga - sb * gb) ** 2 / (2 * s2))
    return out


def _clip(llr):
    return np.clip(llr, -LLR_CLIP, LLR_CLIP)


def xor_llr(y, ga, gb, noise_var, exact=True):
    """LLR of ``X_A ^ X_B`` per symbol.

    ``exact`` marginalises each XOR class over its two constellation points;
    otherwise the max-log approximation is used.
    """
    pp, pm, mp, mm = _hypothesis_metrics(y, ga, gb, noise_var)
    combine = np.logaddexp if exact else np.maximum
    return _clip(combine(pp, mm) - combine(pm, mp))


def rmud_llrs(y, ga, gb, noise_var):
    """Max-log per-user LLRs: for each bit hypothesis keep only the nearest point."""
    pp, pm, mp, mm = _hypothesis_metrics(y, ga, gb, noise_var)
    la = np.maximum(pp, pm) - np.maximum(mp, mm)
    lb = np.maximum(pp, mp) - np.maximum(pm, mm)
    return _clip(la), _clip(lb)


def single_user_llr(y, gain, noise_var, interference_power=0.0):
    """Matched-filter BPSK LLR with optional Gaussian-approximated interference.

    ``interference_power`` is the total (two-dimensional) power of signals
    treated as noise.
    """
    s2 = np.maximum(noise_var + 0.5 * np.asarray(interference_power), _MIN_NOISE_VAR)
    s2 = np.broadcast_to(s2, gain.shape)[:, None]
    return _clip(2.0 * np.real(np.conj(gain)[:, None] * y) / s2)


def _gains(real, known_gains):
    if known_gains is None:
        return real.gain_a, real.gain_b
    if known_gains == "pilot":
        return estimate_gains(real)
    ga, gb = known_gains
    n = real.rx_symbols.shape[0]
    return (np.broadcast_to(np.asarray(ga, dtype=np.complex128), (n,)),
            np.broadcast_to(np.asarray(gb, dtype=np.complex128), (n,)))


def _decode(llr):
    payload = viterbi_decode(llr)
    return crc_ok(np.atleast_2d(payload)), payload


def xor_cd_decode(real, known_gains=None, exact=True):
    """XOR channel decoding. Returns ``(ok, xor_info_bits)`` per frame.

    ``known_gains`` is ``None`` for genie CSI, ``"pilot"`` for least-squares
    preamble estimates, or an explicit ``(gain_a, gain_b)`` pair.
    """
    ga, gb = _gains(real, known_gains)
    ok, payload = _decode(xor_llr(real.rx_symbols, ga, gb, real.noise_var, exact=exact))
    return ok, payload[:, :-WIDTH]


def rmud_decode(real, known_gains=None):
    """Reduced-constellation MUD. Returns ``(ok, bits_a, bits_b)``; ok needs both CRCs."""
    ga, gb = _gains(real, known_gains)
    la, lb = rmud_llrs(real.rx_symbols, ga, gb, real.noise_var)
    ok_a, pa = _decode(la)
    ok_b, pb = _decode(lb)
    return ok_a & ok_b, pa[:, :-WIDTH], pb[:, :-WIDTH]


def sic_decode(real, known_gains=None):
    """Successive interference cancellation. Returns ``(ok, bits_a, bits_b)``.

    The stronger link (larger ``|h|^2``, ties to A) is decoded first with the
    weaker one treated as Gaussian noise, re-encoded and subtracted.
    """
    ga, gb = _gains(real, known_gains)
    y = real.rx_symbols
    a_first = np.abs(ga) >= np.abs(gb)
    g_strong = np.where(a_first, ga, gb)
    g_weak = np.where(a_first, gb, ga)

    ok_s, p_s = _decode(single_user_llr(y, g_strong, real.noise_var, np.abs(g_weak) ** 2))
    residual = y - g_strong[:, None] * bpsk(conv_encode(p_s))
    ok_w, p_w = _decode(single_user_llr(residual, g_weak, real.noise_var))

    first = a_first[:, None]
    pa = np.where(first, p_s, p_w)
    pb = np.where(first, p_w, p_s)
    return ok_s & ok_w, pa[:, :-WIDTH], pb[:, :-WIDTH]


@dataclass
class DecodeOutcome:
    """Per-frame flags. Fallback flags are False for frames where they were not run."""

    xor_cd_ok: np.ndarray
    rmud_ok: np.ndarray
    sic_ok: np.ndarray
    fallback_run: np.ndarray
    decoded_xor: np.ndarray

    @property
    def pipeline_ok(self):
        return self.xor_cd_ok | self.rmud_ok | self.sic_ok


def _subset(real, idx):
    pilots = None if real.rx_pilots is None else real.rx_pilots[idx]
    return type(real)(real.gain_a[idx], real.gain_b[idx], real.noise_var,
                      real.rx_symbols[idx], pilots)


def decode_pipeline(real, known_gains=None, exact_xor=True):
    """XOR-CD first; RMUD and SIC only on frames whose XOR-CD CRC failed."""
    ga, gb = _gains(real, known_gains)
    ok_x, xor_bits = xor_cd_decode(real, (ga, gb), exact=exact_xor)
    n = ok_x.shape[0]
    rmud_ok = np.zeros(n, dtype=bool)
    sic_ok = np.zeros(n, dtype=bool)
    decoded = xor_bits.copy()
    failed = np.flatnonzero(~ok_x)
    if failed.size:
        sub = _subset(real, failed)
        gains = (ga[failed], gb[failed])
        r_ok, ra, rb = rmud_decode(sub, gains)
        s_ok, sa, sb = sic_decode(sub, gains)
        rmud_ok[failed] = r_ok
        sic_ok[failed] = s_ok
        fix = np.where(r_ok[:, None], ra ^ rb, np.where(s_ok[:, None], sa ^ sb, decoded[failed]))
        decoded[failed] = fix
    return DecodeOutcome(ok_x, rmud_ok, sic_ok, ~ok_x, decoded)
