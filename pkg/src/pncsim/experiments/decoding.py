"""Relay decoding sweep over (Gamma_BR0, Gamma_AR0) pairs."""

import numpy as np

from ..phy.channel import random_frames, transmit_ma
from ..phy.decoders import decode_pipeline
from .common import binomial_ci, config_dict, derive_rng, write_outputs


def _pair_tag(pair):
    return "-".join(f"{v:g}".replace(".", "p") for v in pair)


def _pair_chunk(seed, pair, chunk, n_frames, phy):
    rng = derive_rng(seed, f"decode/{pair[0]!r}/{pair[1]!r}", chunk)
    snr_b, snr_a = pair
    loss = phy.implementation_loss_db
    fa = random_frames(rng, n_frames, phy.info_bits)
    fb = random_frames(rng, n_frames, phy.info_bits)
    real = transmit_ma(fa, fb, snr_a - loss, snr_b - loss, rng, pilots=phy.csi == "pilot")
    out = decode_pipeline(real, "pilot" if phy.csi == "pilot" else None, exact_xor=phy.exact_xor)
    truth = fa.info_bits ^ fb.info_bits
    # a CRC pass on wrong bits is possible in principle; count it separately
    undetected = out.pipeline_ok & np.any(out.decoded_xor != truth, axis=1)
    return out, undetected


def decompose(xor_ok, rmud_ok, sic_ok):
    """Success rates and the rescue decomposition of one SNR pair.

    Shares are fractions of the frames rescued by the fallbacks, so
    ``rmud_share + sic_share - both_share == 1`` whenever anything was rescued.
    """
    n = xor_ok.size
    rescued = ~xor_ok & (rmud_ok | sic_ok)
    n_rescued = int(rescued.sum())
    pipeline = xor_ok | rescued
    out = {
        "frames": n,
        "xor_cd_success": float(xor_ok.mean()),
        "pipeline_success": float(pipeline.mean()),
        "gain": float(rescued.mean()),
        "rescued_frames": n_rescued,
        "rmud_rescues": int((rescued & rmud_ok).sum()),
        "sic_rescues": int((rescued & sic_ok).sum()),
        "both_rescues": int((rescued & rmud_ok & sic_ok).sum()),
    }
    for name in ("rmud", "sic", "both"):
        out[f"{name}_share"] = out[f"{name}_rescues"] / n_rescued if n_rescued else float("nan")
    out["xor_cd_ci"] = binomial_ci(int(xor_ok.sum()), n)
    out["pipeline_ci"] = binomial_ci(int(pipeline.sum()), n)
    out["xor_cd_sigma"] = float(np.sqrt(out["xor_cd_success"] * (1 - out["xor_cd_success"]) / n))
    out["pipeline_sigma"] = float(np.sqrt(out["pipeline_success"] * (1 - out["pipeline_success"]) / n))
    return out


def run_decoding_sweep(cfg, phy, pairs=None, frames_per_pair=None, out_dir=None):
    """Drive the relay decoder over every SNR pair.

    Each pair is ``(Gamma_BR0, Gamma_AR0)`` in dB; both links are sent
    ``phy.implementation_loss_db`` below their nominal SNR.
    Returns ``{pair: decomposition dict}``.
    """
    pairs = [tuple(map(float, p)) for p in (pairs or cfg.snr_pairs)]
    if not pairs:
        raise ValueError("no SNR pairs to sweep")
    n_total = int(frames_per_pair or cfg.frames_per_pair)
    results = {}
    for pair in pairs:
        cols = {k: [] for k in ("frame", "xor_cd_ok", "rmud_ok", "sic_ok", "pipeline_ok", "undetected")}
        done = 0
        chunk = 0
        while done < n_total:
            m = min(phy.batch_frames, n_total - done)
            out, undetected = _pair_chunk(cfg.seed, pair, chunk, m, phy)
            cols["frame"].append(np.arange(done, done + m))
            cols["xor_cd_ok"].append(out.xor_cd_ok)
            cols["rmud_ok"].append(out.rmud_ok)
            cols["sic_ok"].append(out.sic_ok)
            cols["pipeline_ok"].append(out.pipeline_ok)
            cols["undetected"].append(undetected)
            done += m
            chunk += 1
        rec = {k: np.concatenate(v) for k, v in cols.items()}
        res = decompose(rec["xor_cd_ok"], rec["rmud_ok"], rec["sic_ok"])
        res["undetected_errors"] = int(rec["undetected"].sum())
        res["snr_br0_db"], res["snr_ar0_db"] = pair
        res["implementation_loss_db"] = phy.implementation_loss_db
        results[pair] = res
        if out_dir is not None:
            summary = {"experiment": "decode-sweep", "seed": cfg.seed, "pair": list(pair), **res,
                       "config": {"exp": config_dict(cfg), "phy": config_dict(phy)}}
            write_outputs(out_dir, "decode-sweep", _pair_tag(pair), cfg.seed, rec, summary)
    return results


def separation_sigmas(a, b):
    """(success_b - success_a) in units of their combined binomial standard error."""
    sd = np.hypot(a["xor_cd_sigma"], b["xor_cd_sigma"])
    return float((b["xor_cd_success"] - a["xor_cd_success"]) / sd) if sd > 0 else float("inf")
