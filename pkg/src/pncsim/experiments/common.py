"""Configuration, seeding, output writers and the batched network trial."""

import csv
import json
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from ..errors import ConfigError, NoRelays
from ..netmodel import (estimate_user_distance, free_space_factor, link_snr,
                        sample_fading)
from ..rates import rate_bc, rate_ma_lattice, rate_pnc_equal, rate_pncb
from ..relaysel import ascend, compute_big_d

# (gamma_BR0, gamma_AR0) in dB: ten reference operating points, then (7, 9.5)
REFERENCE_SNR_PAIRS = (
    (7.0, 7.5), (7.0, 9.0), (7.5, 7.5), (7.5, 9.5), (7.5, 10.5), (7.5, 13.5),
    (9.5, 9.5), (9.5, 10.5), (9.5, 13.5), (12.5, 20.5),
)
DEFAULT_SNR_PAIRS = REFERENCE_SNR_PAIRS + ((7.0, 9.5),)

STRATEGIES = ("PNC-B", "SC-PNC")


@dataclass
class ExperimentConfig:
    n_realizations: int = 1000
    n_users: int = 100
    relay_separations: tuple = (10.0, 400.0)
    seed: int = 0
    strategy_set: tuple = STRATEGIES
    snr_pairs: tuple = DEFAULT_SNR_PAIRS
    frames_per_pair: int = 10_000
    model: str = "linear"
    bin_width: float = 50.0
    density_factors: tuple = (1, 2, 4, 6, 8, 10)
    reference_density: float = 10.0  # relays per km^2
    cdf_separations: tuple = (100.0, 600.0)
    step: float = 0.01
    max_iter: int = 10_000
    gradient_mode: str = "simplified"
    target_rate: float = 0.5
    backhaul_fading: bool = False
    jobs: int = 1

    def __post_init__(self):
        for name in ("n_realizations", "n_users", "frames_per_pair", "max_iter", "jobs"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"exp.{name} must be at least 1")
        if self.model not in ("linear", "planar"):
            raise ConfigError(f"exp.model must be 'linear' or 'planar', got {self.model!r}")
        if self.gradient_mode not in ("simplified", "exact"):
            raise ConfigError(f"exp.gradient_mode must be 'simplified' or 'exact'")
        if not set(self.strategy_set) <= set(STRATEGIES) or not self.strategy_set:
            raise ConfigError(f"exp.strategy_set must be a nonempty subset of {STRATEGIES}")
        if not self.step > 0:
            raise ConfigError("exp.step must be positive")
        if not self.bin_width > 0:
            raise ConfigError("exp.bin_width must be positive")
        if any(s <= 0 for s in self.relay_separations) or any(s <= 0 for s in self.cdf_separations):
            raise ConfigError("relay separations must be positive")
        if any(f <= 0 for f in self.density_factors):
            raise ConfigError("density factors must be positive")


@dataclass
class PhyConfig:
    # one scalar SNR offset standing in for the hardware receiver's losses
    implementation_loss_db: float = 9.0
    info_bits: int = 512
    csi: str = "genie"
    exact_xor: bool = True
    batch_frames: int = 1000

    def __post_init__(self):
        if self.csi not in ("genie", "pilot"):
            raise ConfigError(f"phy.csi must be 'genie' or 'pilot', got {self.csi!r}")
        if self.info_bits < 1 or self.batch_frames < 1:
            raise ConfigError("phy.info_bits and phy.batch_frames must be at least 1")


def config_dict(obj):
    out = {}
    for f in fields(obj):
        v = getattr(obj, f.name)
        out[f.name] = [list(x) if isinstance(x, tuple) else x for x in v] if isinstance(v, tuple) else v
    return out


# ---------------------------------------------------------------------------
# seeding

def derive_rng(seed, label, *index):
    """Generator for one (experiment stream, realization) cell; order independent."""
    key = zlib.crc32(str(label).encode())
    return np.random.default_rng(np.random.SeedSequence([int(seed), key, *map(int, index)]))


def map_realizations(fn, args_list, jobs=1):
    """``[fn(*a) for a in args_list]``, optionally across processes; results keep input order."""
    if jobs <= 1 or len(args_list) <= 1:
        return [fn(*a) for a in args_list]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, *zip(*args_list)))


# ---------------------------------------------------------------------------
# output

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if np.isfinite(v) else None
    return v


def output_stem(experiment, tag, seed):
    return f"{experiment}_{tag}_{seed}"


def write_outputs(out_dir, experiment, tag, seed, records, summary):
    """Write ``records`` (dict of equal-length columns) as CSV and ``summary`` as JSON."""
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.join(out_dir, output_stem(experiment, tag, seed))
    paths = []
    if records is not None:
        cols = list(records)
        with open(stem + ".csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for row in zip(*(records[c] for c in cols)):
                w.writerow([_fmt(v) for v in row])
        paths.append(stem + ".csv")
    with open(stem + ".json", "w") as fh:
        json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths.append(stem + ".json")
    return paths


def mean_ci(x, z=1.96):
    """Sample mean and normal-approximation half width."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return float("nan"), float("nan")
    if x.size == 1:
        return float(x[0]), float("nan")
    return float(x.mean()), float(z * x.std(ddof=1) / np.sqrt(x.size))


def binomial_ci(successes, trials, z=1.96):
    """Wilson score interval ``(low, high)``."""
    if trials == 0:
        return float("nan"), float("nan")
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * np.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return float(centre - half), float(centre + half)


# ---------------------------------------------------------------------------
# geometry sampling

def sample_users_disk(rng, n_users, prop):
    """Area-uniform users on the annulus d0 <= r <= cell radius."""
    r = np.sqrt(rng.uniform(prop.ref_dist ** 2, prop.cell_radius ** 2, n_users))
    theta = rng.uniform(0.0, 2 * np.pi, n_users)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def sample_users_line(rng, n_users, prop):
    x = rng.uniform(prop.ref_dist, prop.cell_radius, n_users)
    return np.column_stack([x, np.zeros_like(x)])


def relay_separation_for_density(density_per_km2):
    return 1000.0 / np.sqrt(density_per_km2)


# ---------------------------------------------------------------------------
# one network realization

@dataclass
class TrialBatch:
    """Per-user outcome of one realization; every field has one entry per user."""

    user_x: np.ndarray
    user_y: np.ndarray
    user_distance: np.ndarray
    x_star_x: np.ndarray
    x_star_y: np.ndarray
    stop_reason: np.ndarray
    pncb_relay: np.ndarray
    pncb_rate: np.ndarray
    scpnc_relay: np.ndarray
    scpnc_rate: np.ndarray
    scpnc_outage: np.ndarray
    snr_ar0_db: np.ndarray
    snr_br0_db: np.ndarray

    def as_columns(self):
        return asdict(self)


def _pick(values, mask):
    """Row-wise argmax over ``mask``-ed entries, lowest index on ties."""
    return np.argmax(np.where(mask, values, -np.inf), axis=1)


def pncb_targets(users_xy, power, prop, cfg):
    """Continuous PNC-B optimum x* for a batch of users (large-scale gains).

    Returns ``(x_star, stop_reason)``. The ascent is elementwise across users,
    so batching does not change any individual result.
    """
    users_xy = np.atleast_2d(users_xy)
    n = prop.path_loss_exp
    # distance estimate from the (fading averaged) A->B reference signal
    d_ab = np.hypot(users_xy[:, 0], users_xy[:, 1])
    snr_ab = link_snr(power.p_a_tx, np.maximum(d_ab, prop.ref_dist), 1.0, power, prop)
    x_hat = np.atleast_1d(estimate_user_distance(snr_ab, power, prop))
    b_hat = users_xy * (x_hat / d_ab)[:, None]
    noise = power.noise_watts
    asc = ascend(b_hat, free_space_factor(power.p_b_tx, prop) / noise,
                 free_space_factor(power.p_r_tx, prop) / noise, n,
                 compute_big_d(power.p_a_tx, power.p_b_tx, n), prop.ref_dist,
                 cfg.step, cfg.max_iter, cfg.gradient_mode)
    return asc.position, asc.stop_reason


def simulate_trial(users_xy, relays_xy, power, prop, cfg, rng, targets=None):
    """Select relays for every user of one realization with both strategies.

    Fading is Rayleigh and reciprocal per node pair; the backhaul (A <-> relay)
    is non-fading unless ``cfg.backhaul_fading``. The PNC-B optimiser works
    from large-scale gains; achieved rates use the realised fading.
    ``targets`` may carry precomputed ``pncb_targets`` output for these users.
    """
    users_xy = np.atleast_2d(users_xy)
    n_users, n_relays = len(users_xy), len(relays_xy)
    n = prop.path_loss_exp
    d_ab = np.hypot(users_xy[:, 0], users_xy[:, 1])
    x_star, stop_reason = targets if targets is not None else pncb_targets(users_xy, power, prop, cfg)

    noise = power.noise_watts
    pbar_a = free_space_factor(power.p_a_tx, prop)
    pbar_b = free_space_factor(power.p_b_tx, prop)
    pbar_r = free_space_factor(power.p_r_tx, prop)

    d_ar = np.hypot(relays_xy[:, 0], relays_xy[:, 1])
    diff = relays_xy[None, :, :] - users_xy[:, None, :]
    d_br = np.hypot(diff[..., 0], diff[..., 1])
    eligible = d_br >= prop.ref_dist
    if not eligible.any(axis=1).all():
        raise NoRelays("a user has no relay at least d0 away")
    d_br_safe = np.where(eligible, d_br, prop.ref_dist)

    h_access = sample_fading(rng, (n_users, n_relays))
    h_back = sample_fading(rng, n_relays) if cfg.backhaul_fading else np.ones(n_relays)
    path_ar = h_back * d_ar ** (-n) / noise
    path_br = h_access * d_br_safe ** (-n) / noise
    snr_ar0 = np.broadcast_to(pbar_a * path_ar, (n_users, n_relays))
    snr_r0a = np.broadcast_to(pbar_r * path_ar, (n_users, n_relays))
    snr_br0 = pbar_b * path_br
    snr_r0b = pbar_r * path_br

    r_ma = rate_ma_lattice(snr_ar0, snr_br0)
    r_bc = rate_bc(snr_r0a, snr_r0b)

    # PNC-B: eligible relay nearest to x*
    dx = relays_xy[None, :, :] - x_star[:, None, :]
    dist = np.where(eligible, np.hypot(dx[..., 0], dx[..., 1]), np.inf)
    k_b = np.argmin(dist, axis=1)
    rows = np.arange(n_users)
    pncb, _, _ = rate_pncb(r_ma[rows, k_b], r_bc[rows, k_b])

    # SC-PNC: MA outage filter, then the best weaker broadcast link
    survivors = eligible & (r_ma >= cfg.target_rate)
    outage = ~survivors.any(axis=1)
    k_s = np.where(outage, _pick(r_ma, eligible), _pick(r_bc, survivors))
    scpnc = rate_pnc_equal(r_ma[rows, k_s], r_bc[rows, k_s])

    return TrialBatch(
        user_x=users_xy[:, 0], user_y=users_xy[:, 1], user_distance=d_ab,
        x_star_x=x_star[:, 0], x_star_y=x_star[:, 1], stop_reason=stop_reason,
        pncb_relay=k_b, pncb_rate=np.atleast_1d(pncb),
        scpnc_relay=k_s, scpnc_rate=np.atleast_1d(scpnc), scpnc_outage=outage,
        snr_ar0_db=10 * np.log10(snr_ar0[rows, k_b]),
        snr_br0_db=10 * np.log10(snr_br0[rows, k_b]),
    )


def concat_trials(trials):
    """Stack TrialBatch objects into columns, adding realization and user indices."""
    cols = {"realization": [], "user": []}
    for i, t in enumerate(trials):
        m = len(t.user_x)
        cols["realization"].append(np.full(m, i))
        cols["user"].append(np.arange(m))
        for k, v in t.as_columns().items():
            cols.setdefault(k, []).append(np.asarray(v))
    return {k: np.concatenate(v) for k, v in cols.items()}


def _trial_chunk(indices, user_label, fading_label, model, relays, power, prop, cfg):
    sampler = sample_users_line if model == "linear" else sample_users_disk
    rngs, users = [], []
    for i in indices:
        rng = derive_rng(cfg.seed, fading_label, i)
        u_rng = rng if user_label is None else derive_rng(cfg.seed, user_label, i)
        users.append(sampler(u_rng, cfg.n_users, prop))
        rngs.append(rng)
    x_star, stop = pncb_targets(np.vstack(users), power, prop, cfg)
    out = []
    for k, (u, rng) in enumerate(zip(users, rngs)):
        sl = slice(k * cfg.n_users, (k + 1) * cfg.n_users)
        out.append(simulate_trial(u, relays, power, prop, cfg, rng, (x_star[sl], stop[sl])))
    return out


def run_trials(n_realizations, fading_label, model, relays, power, prop, cfg,
               user_label=None, chunk=100):
    """TrialBatch per realization, in realization order.

    Realization ``i`` draws from ``derive_rng(seed, fading_label, i)``; users
    come from the same stream unless ``user_label`` names a separate one (to
    share user drops between runs).
    """
    starts = range(0, n_realizations, chunk)
    args = [(list(range(a, min(a + chunk, n_realizations))), user_label, fading_label, model,
             relays, power, prop, cfg) for a in starts]
    return [t for part in map_realizations(_trial_chunk, args, cfg.jobs) for t in part]
