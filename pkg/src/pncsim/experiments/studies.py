"""Network-level Monte-Carlo studies: rate maps, strategy comparison,
densification and MA-phase SNR distributions."""

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize_scalar

from ..netmodel import Deployment, PowerProfile, relay_grid_linear, relay_grid_planar
from ..relaysel import (Objective, RelaySnrs, eligible_relays, pncb_relay_rates,
                        select_relay_pncb_linear, select_relay_pncb_planar)
from .common import (concat_trials, config_dict, mean_ci, relay_separation_for_density,
                     run_trials, write_outputs)

SNR_BANDS = (("low", -np.inf, 7.5), ("medium", 7.5, 10.0), ("high", 10.0, 30.0))


def _tag_number(x):
    return f"{x:g}".replace(".", "p")


def _summary_header(name, cfg, power, prop, **extra):
    out = {"experiment": name, "seed": cfg.seed, "config": {
        "exp": config_dict(cfg), "power": config_dict(power), "prop": config_dict(prop)}}
    out.update(extra)
    return out


# ---------------------------------------------------------------------------
# rate map

@dataclass
class RateMap:
    relay_positions: np.ndarray
    rates: np.ndarray
    eligible: np.ndarray
    pick: int
    best: int
    selection: object


def run_rate_map(user_pos, relay_grid, power, prop, step=0.01, max_iter=10_000, mode="simplified"):
    """Lattice PNC-B rate through every relay (unit fading) and the ascent's pick."""
    user_pos = np.asarray(user_pos, dtype=float)
    relay_grid = np.atleast_2d(np.asarray(relay_grid, dtype=float))
    linear = np.all(relay_grid[:, 1] == 0) and user_pos[1] == 0
    dep = Deployment("linear" if linear else "planar", user_pos, relay_grid, prop=prop)
    obj = Objective.from_profile(dep.user_distance, power, prop, user_xy=user_pos)
    snrs = RelaySnrs.from_objective(dep, obj)
    select = select_relay_pncb_linear if linear else select_relay_pncb_planar
    sel = select(dep, obj, step, max_iter, mode, snrs)
    rates = pncb_relay_rates(snrs)
    ok = eligible_relays(dep)
    best = int(np.argmax(np.where(ok, rates, -np.inf)))
    return RateMap(relay_grid, rates, ok, sel.chosen_index, best, sel)


def write_rate_map(rmap, out_dir, seed, tag="map", trace=False):
    records = {
        "relay": np.arange(len(rmap.rates)),
        "x": rmap.relay_positions[:, 0], "y": rmap.relay_positions[:, 1],
        "rate": np.where(rmap.eligible, rmap.rates, np.nan),
        "eligible": rmap.eligible,
        "picked": np.arange(len(rmap.rates)) == rmap.pick,
    }
    summary = {"experiment": "rate-map", "seed": seed, "pick": rmap.pick, "best": rmap.best,
               "pick_is_best": rmap.pick == rmap.best,
               "selection": rmap.selection.as_dict(with_trace=trace)}
    return write_outputs(out_dir, "rate-map", tag, seed, records, summary)


# ---------------------------------------------------------------------------
# strategy comparison vs user distance

def bin_means(distance, values_by_name, width, radius):
    edges = np.arange(0.0, radius + width, width)
    idx = np.digitize(distance, edges[1:-1])
    rows = []
    for b in range(len(edges) - 1):
        mask = idx == b
        row = {"bin_lo": edges[b], "bin_hi": edges[b + 1], "count": int(mask.sum())}
        for name, v in values_by_name.items():
            row[f"{name}_mean"], row[f"{name}_ci"] = mean_ci(v[mask])
        rows.append(row)
    return rows


def run_rate_comparison(cfg, power, prop, out_dir=None):
    """Mean PNC-B and SC-PNC rates per user-distance bin for each relay separation.

    Returns ``{separation: {"records": columns, "bins": rows, "summary": dict}}``.
    """
    results = {}
    grid = relay_grid_linear if cfg.model == "linear" else relay_grid_planar
    for s in cfg.relay_separations:
        relays = grid(s, prop)
        label = f"compare/{cfg.model}/{s!r}"
        rec = concat_trials(run_trials(cfg.n_realizations, label, cfg.model, relays, power, prop, cfg))
        bins = bin_means(rec["user_distance"], {"pncb": rec["pncb_rate"], "scpnc": rec["scpnc_rate"]},
                         cfg.bin_width, prop.cell_radius)
        filled = [b for b in bins if b["count"] > 0]
        gains = [(b["pncb_mean"] - b["scpnc_mean"]) / b["scpnc_mean"] for b in filled]
        summary = _summary_header(
            "compare", cfg, power, prop, separation=s, n_relays=len(relays), bins=bins,
            pncb_mean=float(rec["pncb_rate"].mean()), scpnc_mean=float(rec["scpnc_rate"].mean()),
            mean_relative_gain=float(np.mean(gains)),
            min_bin_difference=float(min(b["pncb_mean"] - b["scpnc_mean"] for b in filled)),
            pncb_dominates_all_bins=bool(all(b["pncb_mean"] >= b["scpnc_mean"] for b in filled)),
            per_trial_dominance_fraction=float(np.mean(rec["pncb_rate"] >= rec["scpnc_rate"])),
            scpnc_outage_fraction=float(rec["scpnc_outage"].mean()),
        )
        if out_dir is not None:
            write_outputs(out_dir, "compare", f"s{_tag_number(s)}", cfg.seed, rec, summary)
        results[s] = {"records": rec, "bins": bins, "summary": summary}
    return results


# ---------------------------------------------------------------------------
# densification

@dataclass
class DensificationReport:
    density_factors: list
    separations: list
    n_relays: list
    aggregate_rate: dict
    aggregate_rate_gain: dict
    densification_gain: dict
    # both strategies normalised to the SC-PNC reference aggregate
    gain_vs_scpnc_reference: dict

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def run_densification(cfg, power, prop, density_factors=None, out_dir=None):
    """Aggregate rate of ``n_users`` area-uniform users per relay density.

    Densities are ``reference_density * factor`` relays/km^2 on a square grid.
    Gains are normalised per strategy to its own aggregate at factor 1, and
    rho = gain / factor.
    """
    factors = list(density_factors or cfg.density_factors)
    if 1 not in factors:
        factors = [1] + factors
    agg = {"PNC-B": [], "SC-PNC": []}
    seps, counts, per_factor = [], [], []
    for f in factors:
        s = relay_separation_for_density(cfg.reference_density * f)
        relays = relay_grid_planar(s, prop)
        # users are common to all densities, fading is not
        trials = run_trials(cfg.n_realizations, f"densify/fading/{f!r}", "planar", relays, power,
                            prop, cfg, user_label="densify/users")
        sums = np.array([(t.pncb_rate.sum(), t.scpnc_rate.sum()) for t in trials])
        agg["PNC-B"].append(float(sums[:, 0].mean()))
        agg["SC-PNC"].append(float(sums[:, 1].mean()))
        seps.append(float(s))
        counts.append(len(relays))
        per_factor.append(sums)
    ref = factors.index(1)
    gain = {k: [v / a[ref] for v in a] for k, a in agg.items()}
    rho = {k: [g / f for g, f in zip(gs, factors)] for k, gs in gain.items()}
    cross = {k: [v / agg["SC-PNC"][ref] for v in a] for k, a in agg.items()}
    report = DensificationReport(factors, seps, counts, agg, gain, rho, cross)
    if out_dir is not None:
        for f, s, sums in zip(factors, seps, per_factor):
            rec = {"realization": np.arange(len(sums)), "pncb_aggregate": sums[:, 0],
                   "scpnc_aggregate": sums[:, 1]}
            summary = _summary_header("densify", cfg, power, prop, density_factor=f, separation=s,
                                      pncb_aggregate=mean_ci(sums[:, 0]),
                                      scpnc_aggregate=mean_ci(sums[:, 1]))
            write_outputs(out_dir, "densify", f"f{_tag_number(f)}", cfg.seed, rec, summary)
        write_outputs(out_dir, "densify", "report", cfg.seed, None,
                      _summary_header("densify", cfg, power, prop, report=report.as_dict()))
    return report


# ---------------------------------------------------------------------------
# MA-phase SNR distributions

def empirical_cdf(values):
    """Sorted sample and the right-continuous step heights k/N."""
    x = np.sort(np.asarray(values, dtype=float))
    return x, np.arange(1, x.size + 1) / x.size


def band_probabilities(values_db):
    v = np.asarray(values_db, dtype=float)
    return {name: float(np.mean((v > lo) & (v <= hi))) for name, lo, hi in SNR_BANDS}


def collect_snrs(cfg, power, prop, separation):
    """Selected-relay MA SNR columns for one separation (planar, PNC-B)."""
    relays = relay_grid_planar(separation, prop)
    # the stream label leaves out the noise power so calibration reuses the draws
    label = f"snr-cdf/{separation!r}"
    return concat_trials(run_trials(cfg.n_realizations, label, "planar", relays, power, prop, cfg))


def run_snr_cdf(cfg, power, prop, separations=None, out_dir=None, grid_db=None):
    """Empirical CDFs of Gamma_AR0 and Gamma_BR0 at the PNC-B relay and the band table."""
    seps = list(separations or cfg.cdf_separations)
    grid_db = np.arange(-20.0, 80.5, 0.5) if grid_db is None else np.asarray(grid_db)
    results = {}
    for s in seps:
        rec = collect_snrs(cfg, power, prop, s)
        ar, br = rec["snr_ar0_db"], rec["snr_br0_db"]
        summary = _summary_header(
            "snr-cdf", cfg, power, prop, separation=s, samples=int(ar.size),
            bands={"AR0": band_probabilities(ar), "BR0": band_probabilities(br)},
            distinct_selected_relays=int(np.unique(rec["pncb_relay"]).size),
            distinct_ar0_values=int(np.unique(ar).size),
            cdf={"grid_db": grid_db,
                 "AR0": np.searchsorted(np.sort(ar), grid_db, side="right") / ar.size,
                 "BR0": np.searchsorted(np.sort(br), grid_db, side="right") / br.size},
        )
        if out_dir is not None:
            cols = {k: rec[k] for k in ("realization", "user", "user_x", "user_y", "pncb_relay",
                                        "snr_ar0_db", "snr_br0_db")}
            write_outputs(out_dir, "snr-cdf", f"s{_tag_number(s)}", cfg.seed, cols, summary)
        results[s] = {"records": rec, "summary": summary}
    return results


@dataclass
class NoiseCalibration:
    noise_power: float
    achieved: dict
    targets: dict
    objective: float


def calibrate_noise_power(cfg, power, prop, targets=None, bounds=(-115.0, -95.0), xatol=0.02):
    """Fit the single noise-power scalar so P(Gamma_BR0 <= 7.5 dB) hits the targets.

    Uses the same user and fading draws for every candidate noise power and
    minimises the squared error with a bounded scalar search.
    """
    targets = dict(targets or {100.0: 0.10, 600.0: 0.23})

    def low_prob(noise):
        p = replace(power, noise_power=float(noise))
        return {s: band_probabilities(collect_snrs(cfg, p, prop, s)["snr_br0_db"])["low"]
                for s in targets}

    def loss(noise):
        got = low_prob(noise)
        return sum((got[s] - t) ** 2 for s, t in targets.items())

    # coarse scan to bracket the (piecewise constant) loss, then refine
    grid = np.arange(bounds[0], bounds[1] + 1e-9, 1.0)
    losses = [loss(g) for g in grid]
    k = int(np.argmin(losses))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(loss, bounds=(lo, hi), method="bounded", options={"xatol": xatol})
    best = float(res.x) if res.fun <= losses[k] else float(grid[k])
    return NoiseCalibration(best, low_prob(best), targets, float(min(res.fun, losses[k])))


def calibrated_power(power, calibration):
    return PowerProfile(power.p_a_tx, power.p_r_tx, power.p_b_tx, calibration.noise_power,
                        power.allow_any_powers)
