"""PNC-B relay selection by gradient ascent on log f, and the SC-PNC baseline.

With A at the origin and the (estimated) user at distance ``x_b_hat`` the
PNC-B objective over the search interval ``(x_b_hat/2, x_b_hat/D]`` is

    f = (1/ln 2) * g*h / (g + h)
    g = ln(1 + gamma_b * d_BR^-n)      (user -> relay, the MA bottleneck)
    h = ln(1 + gamma_r0 * d_AR^-n)     (relay -> base station, the BC bottleneck)

and the ascent runs on ``F = ln f``. Positions are updated in coordinates
normalised by the A-B distance, so the step ``alpha`` is dimensionless.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NoRelays, OutOfDomain, OutOfSegment
from .netmodel import free_space_factor
from .rates import rate_bc, rate_ma_lattice, rate_pnc_equal, rate_pncb

MODES = ("simplified", "exact")

# stop reasons reported by the ascent
STOP_DECREASE = "objective-decrease"
STOP_BOUNDARY = "upper-boundary"
STOP_LOWER = "lower-boundary"
STOP_MAX_ITER = "max-iter"
STOP_STALLED = "stalled"
STOP_EMPTY = "empty-domain"


def compute_big_d(p_a_tx, p_b_tx, n):
    """D = 1 + (P_B/P_A)^(1/n) with powers given in dBm."""
    return 1.0 + (10.0 ** ((p_b_tx - p_a_tx) / 10.0)) ** (1.0 / n)


@dataclass(frozen=True)
class Objective:
    """Parameters of the PNC-B objective for one user and one fading draw.

    ``gamma_a`` and ``gamma_rb`` are not part of f; they close the link budget
    (A -> relay and relay -> B) when the achieved lattice rate is evaluated.
    ``user_xy`` is the estimated user position; it defaults to the x axis.
    """

    gamma_b: float
    gamma_r0: float
    x_b_hat: float
    n: float
    d_big: float
    ref_dist: float = 10.0
    gamma_a: float = float("nan")
    gamma_rb: float = float("nan")
    user_xy: tuple = None

    @classmethod
    def from_profile(cls, x_b_hat, power, prop, gain_br=1.0, gain_ar=1.0, user_xy=None):
        """Build from powers and propagation; fading gains are reciprocal per node pair."""
        noise = power.noise_watts
        pb = free_space_factor(power.p_b_tx, prop)
        pr = free_space_factor(power.p_r_tx, prop)
        pa = free_space_factor(power.p_a_tx, prop)
        if user_xy is not None:
            user_xy = tuple(float(v) for v in user_xy)
        return cls(
            gamma_b=float(pb * gain_br / noise),
            gamma_r0=float(pr * gain_ar / noise),
            x_b_hat=float(x_b_hat),
            n=prop.path_loss_exp,
            d_big=compute_big_d(power.p_a_tx, power.p_b_tx, prop.path_loss_exp),
            ref_dist=prop.ref_dist,
            gamma_a=float(pa * gain_ar / noise),
            gamma_rb=float(pr * gain_br / noise),
            user_xy=user_xy,
        )

    @property
    def user_position(self):
        if self.user_xy is None:
            return np.array([self.x_b_hat, 0.0])
        u = np.asarray(self.user_xy, dtype=float)
        return u * (self.x_b_hat / np.hypot(*u))

    @property
    def lower(self):
        return self.x_b_hat / 2.0

    @property
    def upper(self):
        """Right end of the feasible interval: x_b_hat/D, pulled in to keep d_BR >= d0."""
        return min(self.x_b_hat / self.d_big, self.x_b_hat - self.ref_dist)

    @property
    def empty(self):
        return self.upper <= self.lower

    def scaled(self, factor):
        """Copy with every gamma multiplied by ``factor``."""
        return Objective(self.gamma_b * factor, self.gamma_r0 * factor, self.x_b_hat, self.n,
                         self.d_big, self.ref_dist, self.gamma_a * factor,
                         self.gamma_rb * factor, self.user_xy)


def classify_case(x_r0, x_b, d_big, ref_dist=10.0):
    """Which branch of the piecewise PNC-B rate applies at ``x_r0``.

    1: MA limited by A->R, BC by R->A     (x > x_b/D, x > x_b/2)
    2: MA limited by A->R, BC by R->B     (x > x_b/D, x <= x_b/2)
    3: MA limited by B->R, BC by R->A     (x <= x_b/D, x > x_b/2)
    4: MA limited by B->R, BC by R->B     (x <= x_b/D, x <= x_b/2)
    """
    if not ref_dist <= x_r0 <= x_b:
        raise OutOfSegment(f"relay at {x_r0} m is outside [{ref_dist}, {x_b}] m")
    ma_a = x_r0 > x_b / d_big
    bc_a = x_r0 > x_b / 2.0
    if ma_a:
        return 1 if bc_a else 2
    return 3 if bc_a else 4


# ---------------------------------------------------------------------------
# objective and gradient as functions of the two distances

def _g_h(d_ar, d_br, gamma_b, gamma_r0, n):
    s_g = gamma_b * d_br ** (-n)
    s_h = gamma_r0 * d_ar ** (-n)
    return np.log1p(s_g), np.log1p(s_h), s_g, s_h


def _log_f(d_ar, d_br, gamma_b, gamma_r0, n):
    g, h, _, _ = _g_h(d_ar, d_br, gamma_b, gamma_r0, n)
    return np.log(g) + np.log(h) - np.log(g + h) - np.log(np.log(2.0))


def _distance_partials(d_ar, d_br, gamma_b, gamma_r0, n, mode):
    """dF/d(d_BR) and dF/d(d_AR)."""
    g, h, s_g, s_h = _g_h(d_ar, d_br, gamma_b, gamma_r0, n)
    dg = -n / d_br
    dh = -n / d_ar
    if mode == "exact":
        dg = dg * s_g / (1.0 + s_g)
        dh = dh * s_h / (1.0 + s_h)
    elif mode != "simplified":
        raise ValueError(f"unknown gradient mode {mode!r}; expected one of {MODES}")
    inv_sum = 1.0 / (g + h)
    return (1.0 / g - inv_sum) * dg, (1.0 / h - inv_sum) * dh


def _check_domain(x, obj):
    x = np.asarray(x, dtype=float)
    if np.any(x <= obj.lower) or np.any(x > obj.upper):
        raise OutOfDomain(
            f"x_r0 must lie in ({obj.lower:.6g}, {obj.upper:.6g}] m for x_b_hat={obj.x_b_hat:.6g} m")
    return x


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def objective_f(x_r0, obj):
    """PNC-B objective f (bps/Hz) at relay distance ``x_r0`` on the A-B segment."""
    x = _check_domain(x_r0, obj)
    g, h, _, _ = _g_h(x, obj.x_b_hat - x, obj.gamma_b, obj.gamma_r0, obj.n)
    return _out(g * h / (g + h) / np.log(2.0))


def log_objective(x_r0, obj):
    """F = ln f."""
    x = _check_domain(x_r0, obj)
    return _out(_log_f(x, obj.x_b_hat - x, obj.gamma_b, obj.gamma_r0, obj.n))


def gradient_logF(x_r0, obj, mode="simplified"):
    """dF/dx along the A-B segment (1/m)."""
    x = _check_domain(x_r0, obj)
    d_br_part, d_ar_part = _distance_partials(x, obj.x_b_hat - x, obj.gamma_b, obj.gamma_r0, obj.n, mode)
    # d_AR grows with x, d_BR shrinks
    return _out(d_ar_part - d_br_part)


def _planar_distances(p, b):
    return np.hypot(p[..., 0], p[..., 1]), np.hypot(p[..., 0] - b[..., 0], p[..., 1] - b[..., 1])


def log_objective_planar(p, obj):
    p = np.asarray(p, dtype=float)
    d_ar, d_br = _planar_distances(p, obj.user_position)
    return _out(_log_f(d_ar, d_br, obj.gamma_b, obj.gamma_r0, obj.n))


def gradient_logF_planar(p, obj, mode="simplified"):
    """(dF/dx, dF/dy) at planar position(s) ``p``."""
    p = np.asarray(p, dtype=float)
    b = obj.user_position
    d_ar, d_br = _planar_distances(p, b)
    d_br_part, d_ar_part = _distance_partials(d_ar, d_br, obj.gamma_b, obj.gamma_r0, obj.n, mode)
    return (d_ar_part / d_ar)[..., None] * p + (d_br_part / d_br)[..., None] * (p - b)


# ---------------------------------------------------------------------------
# gradient ascent

@dataclass
class AscentResult:
    """Batched ascent output; arrays have one entry per user."""

    position: np.ndarray
    iterations: np.ndarray
    stop_reason: np.ndarray
    final_log_f: np.ndarray
    trace: list = field(default_factory=list)


def ascend(user_pos, gamma_b, gamma_r0, n, d_big, ref_dist=10.0, step=0.01,
           max_iter=10_000, mode="simplified", record_trace=False):
    """Gradient ascent on F for a batch of users.

    Parameters
    ----------
    user_pos : array (U, 2)
        Estimated user positions (metres).
    gamma_b, gamma_r0 : array (U,) or scalar
        Objective constants of each user.
    step : float
        Step size in coordinates normalised by the A-B distance.
    record_trace : bool
        Keep ``(positions, F)`` of every accepted iterate (arrays over users).

    Returns
    -------
    AscentResult
        ``position`` is x* in metres. Stop rules, checked per user after each
        update: F strictly decreased (keep the previous iterate), the update
        left the feasible region above (clamp onto the ``x_b_hat/D`` circle,
        or the ``d0`` limit around the user), the update fell back to the
        ``x_b_hat/2`` side (clamp 1 mm inside it), the iterate did not move,
        or ``max_iter`` was reached. A clamp is only taken when it does not
        lower F.
    """
    b = np.atleast_2d(np.asarray(user_pos, dtype=float))
    n_users = b.shape[0]
    gamma_b = np.broadcast_to(np.asarray(gamma_b, dtype=float), (n_users,))
    gamma_r0 = np.broadcast_to(np.asarray(gamma_r0, dtype=float), (n_users,))
    length = np.hypot(b[:, 0], b[:, 1])
    unit = b / length[:, None]
    r_max = np.minimum(length / d_big, length - ref_dist)
    lo = length / 2.0

    offset = np.maximum(0.01 * length * (1.0 / d_big - 0.5), 1e-3)
    r0 = lo + offset
    empty = r_max <= lo
    r0 = np.where(empty, lo, np.minimum(r0, r_max))
    p = unit * r0[:, None]

    reason = np.full(n_users, STOP_MAX_ITER, dtype=object)
    reason[empty] = STOP_EMPTY
    iters = np.zeros(n_users, dtype=np.int64)
    active = ~empty

    def log_f(pos, idx):
        d_ar, d_br = _planar_distances(pos, b[idx])
        return _log_f(d_ar, d_br, gamma_b[idx], gamma_r0[idx], n)

    cur_f = np.full(n_users, np.nan)
    if active.any():
        cur_f[active] = log_f(p[active], np.flatnonzero(active))
    trace = [(p.copy(), cur_f.copy())] if record_trace else []

    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        pi = p[idx]
        bi = b[idx]
        d_ar, d_br = _planar_distances(pi, bi)
        d_br_part, d_ar_part = _distance_partials(d_ar, d_br, gamma_b[idx], gamma_r0[idx], n, mode)
        grad = (d_ar_part / d_ar)[:, None] * pi + (d_br_part / d_br)[:, None] * (pi - bi)
        # normalised coordinates: u = p / L, dF/du = L * dF/dp
        new = pi + (step * length[idx] ** 2)[:, None] * grad
        iters[idx] += 1

        new_ar, new_br = _planar_distances(new, bi)
        stalled = np.all(new == pi, axis=1)
        over = ~stalled & ((new_ar > length[idx] / d_big) | (new_br < ref_dist))
        under = ~stalled & ~over & (new_ar <= lo[idx])
        moving = ~(stalled | over | under)

        new_f = np.full(idx.size, np.nan)
        if moving.any():
            new_f[moving] = log_f(new[moving], idx[moving])
        decreased = moving & (new_f < cur_f[idx])
        accept = moving & ~decreased

        # clamp overshoots onto the boundary along the update direction, unless
        # the boundary point is worse than where we stand
        if over.any():
            o = idx[over]
            clamp = new[over] * (r_max[o] / new_ar[over])[:, None]
            clamp_f = log_f(clamp, o)
            better = clamp_f >= cur_f[o]
            p[o[better]] = clamp[better]
            cur_f[o[better]] = clamp_f[better]
        # the lower end is open: clamp to the smallest seed offset inside it
        if under.any():
            u = idx[under]
            inner = lo[u] + np.minimum(1e-3, 0.5 * (r_max[u] - lo[u]))
            clamp = unit[u] * inner[:, None]
            clamp_f = log_f(clamp, u)
            better = clamp_f >= cur_f[u]
            p[u[better]] = clamp[better]
            cur_f[u[better]] = clamp_f[better]
        p[idx[accept]] = new[accept]
        cur_f[idx[accept]] = new_f[accept]

        for mask, why in ((stalled, STOP_STALLED), (over, STOP_BOUNDARY),
                          (under, STOP_LOWER), (decreased, STOP_DECREASE)):
            reason[idx[mask]] = why
            active[idx[mask]] = False
        if record_trace:
            trace.append((p.copy(), cur_f.copy()))

    return AscentResult(p, iters, reason, cur_f, trace)


# ---------------------------------------------------------------------------
# selection

@dataclass
class RelaySnrs:
    """Linear SNRs of the four links through each candidate relay, shape (k,)."""

    ar0: np.ndarray
    br0: np.ndarray
    r0a: np.ndarray
    r0b: np.ndarray

    def __post_init__(self):
        for name in ("ar0", "br0", "r0a", "r0b"):
            setattr(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))

    def __len__(self):
        return self.ar0.shape[0]

    @classmethod
    def from_objective(cls, dep, obj):
        """Per-relay SNRs with the objective's (relay-independent) gains."""
        d_ar, d_br = dep.relay_distances()
        # relays closer than d0 to the user are outside the path-loss model
        d_br = np.where(d_br >= dep.prop.ref_dist, d_br, np.nan)
        n = obj.n
        return cls(obj.gamma_a * d_ar ** (-n), obj.gamma_b * d_br ** (-n),
                   obj.gamma_r0 * d_ar ** (-n), obj.gamma_rb * d_br ** (-n))


def pncb_relay_rates(snrs):
    """Lattice-based PNC-B rate through each relay."""
    rate, _, _ = rate_pncb(rate_ma_lattice(snrs.ar0, snrs.br0), rate_bc(snrs.r0a, snrs.r0b))
    return np.atleast_1d(rate)


def scpnc_relay_rates(snrs):
    return np.atleast_1d(rate_pnc_equal(rate_ma_lattice(snrs.ar0, snrs.br0), rate_bc(snrs.r0a, snrs.r0b)))


@dataclass
class SelectionResult:
    chosen_index: int
    chosen_position: np.ndarray
    x_star: object
    iterations: int
    trace: list
    achieved_rate: float
    strategy: str
    stop_reason: str = ""
    outage: bool = False

    def as_dict(self, with_trace=False):
        x_star = self.x_star.tolist() if isinstance(self.x_star, np.ndarray) else self.x_star
        out = {
            "chosen_index": self.chosen_index,
            "chosen_position": [float(v) for v in self.chosen_position],
            "x_star": x_star,
            "iterations": self.iterations,
            "achieved_rate": self.achieved_rate,
            "strategy": self.strategy,
            "stop_reason": self.stop_reason,
            "outage": self.outage,
        }
        if with_trace:
            out["trace"] = [([float(v) for v in np.atleast_1d(pos)], float(f)) for pos, f in self.trace]
        return out


def eligible_relays(dep):
    """Relays at least d0 from the user (the path-loss model is invalid closer in)."""
    _, d_br = dep.relay_distances()
    return d_br >= dep.prop.ref_dist


def nearest_relay(relay_positions, target, eligible=None):
    """Index of the relay closest to ``target``; ties go to the lowest index."""
    diff = relay_positions - np.asarray(target, dtype=float)
    d = np.hypot(diff[:, 0], diff[:, 1])
    if eligible is not None:
        d = np.where(eligible, d, np.inf)
    if not np.isfinite(d).any():
        raise NoRelays("no eligible relay")
    return int(np.argmin(d))


def _select_pncb(dep, obj, step, max_iter, mode, snrs):
    ok = eligible_relays(dep)
    if not ok.any():
        raise NoRelays("no relay is at least d0 away from the user")
    res = ascend(obj.user_position[None, :], obj.gamma_b, obj.gamma_r0, obj.n, obj.d_big,
                 obj.ref_dist, step, max_iter, mode, record_trace=True)
    x_star = res.position[0]
    k = nearest_relay(dep.relay_positions, x_star, ok)
    snrs = snrs or RelaySnrs.from_objective(dep, obj)
    rate = float(pncb_relay_rates(snrs)[k])
    trace = [(pos[0].copy(), float(f[0])) for pos, f in res.trace]
    # drop repeated entries left by the batched recorder after the stop
    while len(trace) > 1 and np.array_equal(trace[-1][0], trace[-2][0]) and trace[-1][1] == trace[-2][1]:
        trace.pop()
    return SelectionResult(k, dep.relay_positions[k].copy(), x_star, int(res.iterations[0]),
                           trace, rate, "PNC-B", str(res.stop_reason[0]))


def select_relay_pncb_linear(dep, obj, step=0.01, max_iter=10_000, mode="simplified", snrs=None):
    """Gradient-ascent relay selection on the linear model.

    ``snrs`` (per-relay :class:`RelaySnrs`) lets the achieved rate use
    relay-specific fading; by default the objective's gains are used for every relay.
    """
    if dep.model != "linear":
        raise ValueError("linear selection needs a linear deployment")
    result = _select_pncb(dep, obj, step, max_iter, mode, snrs)
    result.x_star = float(result.x_star[0])
    result.trace = [(float(pos[0]), f) for pos, f in result.trace]
    return result


def select_relay_pncb_planar(dep, obj, step=0.01, max_iter=10_000, mode="simplified", snrs=None):
    """Simultaneous (x, y) ascent starting at the A-B midpoint side of the interval."""
    if dep.model != "planar":
        raise ValueError("planar selection needs a planar deployment")
    if obj.user_xy is None:
        obj = Objective(obj.gamma_b, obj.gamma_r0, obj.x_b_hat, obj.n, obj.d_big, obj.ref_dist,
                        obj.gamma_a, obj.gamma_rb, tuple(dep.user_pos))
    return _select_pncb(dep, obj, step, max_iter, mode, snrs)


def select_relay_scpnc(dep, snrs, target_rate=0.5):
    """Selection cooperation: keep relays whose lattice MA rate meets the target,
    then maximise the weaker broadcast link.

    If no relay meets the target the best-MA relay is used and ``outage`` is set.
    Ties go to the lowest index.
    """
    if len(snrs) != len(dep.relay_positions):
        raise ValueError("one SNR entry per relay is required")
    ok = eligible_relays(dep)
    if not ok.any():
        raise NoRelays("no relay is at least d0 away from the user")
    r_ma = np.atleast_1d(rate_ma_lattice(snrs.ar0, snrs.br0))
    r_bc = np.atleast_1d(rate_bc(snrs.r0a, snrs.r0b))
    survivors = ok & (r_ma >= target_rate)
    outage = not survivors.any()
    if outage:
        k = int(np.argmax(np.where(ok, r_ma, -np.inf)))
    else:
        k = int(np.argmax(np.where(survivors, r_bc, -np.inf)))
    rate = float(rate_pnc_equal(r_ma[k], r_bc[k]))
    return SelectionResult(k, dep.relay_positions[k].copy(), dep.relay_positions[k].copy(), 0, [],
                           rate, "SC-PNC", "", outage)


# ---------------------------------------------------------------------------
# numerical log-concavity check

@dataclass
class LogConcavityReport:
    passed: bool
    second_diff_ok: bool
    h_condition_ok: bool
    max_second_diff: float
    first_violation: float
    h_threshold: float
    ref_dist: float
    grid_points: int
    tolerance: float

    def lines(self):
        status = "PASS" if self.passed else "FAIL"
        out = [
            f"log-concavity: {status}",
            f"  grid points: {self.grid_points}, max second difference: {self.max_second_diff:.3e} "
            f"(tolerance {self.tolerance:.0e})",
            f"  h-side threshold (gamma_r0/(e^n-1))^(1/n) = {self.h_threshold:.4g} m "
            f"vs d0 = {self.ref_dist:g} m: {'below' if self.h_condition_ok else 'NOT below'}",
        ]
        if not self.second_diff_ok:
            out.append(f"  first violating point: x = {self.first_violation:.6g} m")
        return out


def verify_logconcavity(obj, grid_points=10_000, log_objective_fn=None, tolerance=1e-9):
    """Second central differences of ln f over a uniform grid of the search interval.

    ``log_objective_fn(x, obj)`` replaces ln f (used for negative controls).
    """
    if grid_points < 3:
        raise ValueError("need at least 3 grid points")
    fn = log_objective_fn or log_objective
    lo, hi = obj.lower, obj.upper
    # open at the lower end
    x = lo + (hi - lo) * np.arange(1, grid_points + 1) / grid_points
    values = np.asarray(fn(x, obj), dtype=float)
    d2 = values[2:] - 2.0 * values[1:-1] + values[:-2]
    bad = np.flatnonzero(~(d2 <= tolerance))
    threshold = (obj.gamma_r0 / np.expm1(obj.n)) ** (1.0 / obj.n)
    h_ok = bool(threshold < obj.ref_dist)
    first = float(x[bad[0] + 1]) if bad.size else float("nan")
    return LogConcavityReport(
        passed=bool(bad.size == 0 and h_ok), second_diff_ok=bool(bad.size == 0), h_condition_ok=h_ok,
        max_second_diff=float(np.nanmax(d2)), first_violation=first, h_threshold=float(threshold),
        ref_dist=obj.ref_dist, grid_points=grid_points, tolerance=tolerance,
    )
