"""Property suites behind ``pncsim verify``: optimiser against brute-force
oracles, gradient checks and the numerical log-concavity test."""

import time
from dataclasses import dataclass, field

import numpy as np

from .netmodel import Deployment, PowerProfile, PropagationParams, relay_grid_linear
from .rates import rate_bc, rate_ma_lattice, rate_pncb
from .relaysel import (Objective, gradient_logF, log_objective, objective_f,
                       select_relay_pncb_linear, verify_logconcavity)


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def lines(self):
        return [f"[{'PASS' if self.passed else 'FAIL'}] {self.name}"] + [f"    {d}" for d in self.details]


def _random_objective(rng, power, prop):
    """Linear-model user distance and a reciprocal fading pair."""
    x_b = rng.uniform(prop.ref_dist, prop.cell_radius)
    gain_br, gain_ar = rng.exponential(1.0, 2)
    return x_b, Objective.from_profile(x_b, power, prop, gain_br=gain_br, gain_ar=gain_ar)


def exhaustive_best_rate(x_b, obj, relay_xs, ref_dist):
    """Largest lattice PNC-B rate over relays at least d0 from the user (rates module only)."""
    xs = relay_xs[np.abs(x_b - relay_xs) >= ref_dist]
    d_br = np.abs(x_b - xs)
    n = obj.n
    r_ma = rate_ma_lattice(obj.gamma_a * xs ** (-n), obj.gamma_b * d_br ** (-n))
    r_bc = rate_bc(obj.gamma_r0 * xs ** (-n), obj.gamma_rb * d_br ** (-n))
    rate, _, _ = rate_pncb(r_ma, r_bc)
    return float(np.max(rate))


def grid_optimum(obj, resolution=0.1):
    """Best objective value on a ``resolution`` grid over the search interval."""
    lo, hi = obj.lower, obj.upper
    x = np.arange(lo + resolution, hi, resolution)
    x = np.append(x, hi) if x.size == 0 or x[-1] < hi else x
    values = objective_f(x, obj)
    k = int(np.argmax(values))
    return float(x[k]), float(values[k])


def check_optimizer(n_draws=1000, seed=0, power=None, prop=None, separation=10.0,
                    rate_tol=1e-3, objective_tol=1e-6):
    """Ascent selection against the exhaustive relay search and the 0.1 m grid."""
    power = power or PowerProfile()
    prop = prop or PropagationParams()
    rng = np.random.default_rng(seed)
    relay_xs = relay_grid_linear(separation, prop)[:, 0]
    rate_loss = np.zeros(n_draws)
    obj_gap = np.full(n_draws, np.nan)
    in_interval = np.ones(n_draws, dtype=bool)
    t0 = time.perf_counter()
    for i in range(n_draws):
        x_b, obj = _random_objective(rng, power, prop)
        dep = Deployment.linear(x_b, relay_xs, separation, prop)
        sel = select_relay_pncb_linear(dep, obj)
        best = exhaustive_best_rate(x_b, obj, relay_xs, prop.ref_dist)
        rate_loss[i] = (best - sel.achieved_rate) / best
        if not obj.empty:
            in_interval[i] = obj.lower < sel.x_star <= obj.upper
            _, f_grid = grid_optimum(obj)
            obj_gap[i] = f_grid - objective_f(sel.x_star, obj)
    elapsed = time.perf_counter() - t0
    rate_fail = int(np.sum(rate_loss > rate_tol))
    gap_fail = int(np.nansum(obj_gap > objective_tol))
    passed = rate_fail == 0 and gap_fail == 0 and in_interval.all()
    details = [
        f"{n_draws} draws, {elapsed:.1f} s",
        f"rate within {rate_tol:.1%} of exhaustive best: {n_draws - rate_fail}/{n_draws} "
        f"(worst loss {rate_loss.max():.3%})",
        f"objective within {objective_tol:g} of grid optimum: {int(np.sum(~np.isnan(obj_gap))) - gap_fail}"
        f"/{int(np.sum(~np.isnan(obj_gap)))} (worst gap {np.nanmax(obj_gap):.3g})",
        f"x* inside the search interval: {int(in_interval.sum())}/{n_draws}",
    ]
    return CheckResult("optimizer vs oracles", bool(passed), details,
                       {"rate_loss": rate_loss, "objective_gap": obj_gap, "elapsed": elapsed,
                        "rate_failures": rate_fail, "objective_failures": gap_fail})


def finite_difference(obj, x, delta=1e-4):
    """Central difference of ln f evaluated in extended precision."""
    from .relaysel import _log_f

    xl = np.longdouble(x)
    d = np.longdouble(delta)
    f = lambda z: _log_f(z, np.longdouble(obj.x_b_hat) - z, np.longdouble(obj.gamma_b),
                         np.longdouble(obj.gamma_r0), np.longdouble(obj.n))
    return float((f(xl + d) - f(xl - d)) / (2 * d))


def check_gradients(n_points=100, seed=0, power=None, prop=None, fd_tol=1e-6, mode_tol=0.02,
                    snr_floor=100.0):
    """Exact gradient against finite differences; simplified against exact where both
    SNR terms are at least ``snr_floor``."""
    power = power or PowerProfile()
    prop = prop or PropagationParams()
    rng = np.random.default_rng(seed)
    fd_err, mode_err = [], []
    while len(fd_err) < n_points:
        _, obj = _random_objective(rng, power, prop)
        if obj.upper - obj.lower < 1e-3:
            continue
        x = rng.uniform(obj.lower + 5e-4, obj.upper - 5e-4)
        exact = gradient_logF(x, obj, "exact")
        fd_err.append(abs(exact - finite_difference(obj, x)) / abs(exact))
        s_g = obj.gamma_b * (obj.x_b_hat - x) ** (-obj.n)
        s_h = obj.gamma_r0 * x ** (-obj.n)
        if s_g >= snr_floor and s_h >= snr_floor:
            mode_err.append(abs(gradient_logF(x, obj, "simplified") - exact) / abs(exact))
    fd_err, mode_err = np.array(fd_err), np.array(mode_err)
    fd_ok = bool(np.all(fd_err <= fd_tol))
    mode_ok = bool(np.all(mode_err <= mode_tol))
    details = [
        f"finite differences: {int(np.sum(fd_err <= fd_tol))}/{fd_err.size} within {fd_tol:g} "
        f"(worst {fd_err.max():.2e})",
        f"simplified vs exact (SNR terms >= {snr_floor:g}): {int(np.sum(mode_err <= mode_tol))}/"
        f"{mode_err.size} within {mode_tol:.0%} (worst {mode_err.max() if mode_err.size else 0:.2%})",
    ]
    return CheckResult("gradient checks", fd_ok and mode_ok, details,
                       {"fd_error": fd_err, "mode_error": mode_err, "fd_ok": fd_ok, "mode_ok": mode_ok})


def flipped_h_log_objective(x, obj):
    """Negative control: ln f with the sign of h flipped (ln of a negative harmonic term)."""
    x = np.asarray(x, dtype=float)
    g = np.log1p(obj.gamma_b * (obj.x_b_hat - x) ** (-obj.n))
    h = -np.log1p(obj.gamma_r0 * x ** (-obj.n))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.log(np.abs(g * h / (g + h)))


def check_logconcavity(n_instances=100, seed=0, power=None, prop=None, grid_points=10_000,
                       fixed_distances=(200.0, 600.0, 1000.0)):
    """Second-difference test on the fixed unit-fading cases and random instances,
    plus the flipped-h negative control (which must fail)."""
    power = power or PowerProfile()
    prop = prop or PropagationParams()
    rng = np.random.default_rng(seed)
    reports = [("x_b=%g, unit fading" % d, verify_logconcavity(Objective.from_profile(d, power, prop),
                                                               grid_points)) for d in fixed_distances]
    n_random = 0
    while n_random < n_instances:
        _, obj = _random_objective(rng, power, prop)
        if obj.empty:
            continue
        reports.append((f"random #{n_random}", verify_logconcavity(obj, grid_points)))
        n_random += 1
    control = verify_logconcavity(Objective.from_profile(600.0, power, prop), grid_points,
                                  flipped_h_log_objective)
    d2_fail = sum(not r.second_diff_ok for _, r in reports)
    h_fail = sum(not r.h_condition_ok for _, r in reports)
    passed = d2_fail == 0 and h_fail == 0 and not control.passed
    details = [f"{len(reports)} instances ({len(fixed_distances)} fixed, {n_instances} random), "
               f"{grid_points} grid points each",
               f"second differences <= 1e-9: {len(reports) - d2_fail}/{len(reports)} "
               f"(largest {max(r.max_second_diff for _, r in reports):.3e})",
               f"h-side threshold below d0: {len(reports) - h_fail}/{len(reports)} "
               f"(threshold at unit fading {reports[0][1].h_threshold:.4g} m)",
               f"negative control (flipped h) rejected: {not control.passed}"]
    for label, r in reports[:len(fixed_distances)]:
        details.append(f"{label}: {'pass' if r.passed else 'fail'} (max d2 {r.max_second_diff:.3e}"
                       + ("" if r.second_diff_ok else f", first violation x={r.first_violation:.6g} m") + ")")
    return CheckResult("log-concavity", bool(passed), details,
                       {"reports": reports, "control": control, "d2_failures": d2_fail, "h_failures": h_fail})


def run_verification(power=None, prop=None, seed=0, optimizer_draws=1000, logconcavity_instances=100,
                     gradient_points=100):
    return [
        check_gradients(gradient_points, seed, power, prop),
        check_logconcavity(logconcavity_instances, seed, power, prop),
        check_optimizer(optimizer_draws, seed, power, prop),
    ]
