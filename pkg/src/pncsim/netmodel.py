"""Cell geometry, free-space/path-loss link budget and SNRs.

The base station (node A) sits at the origin. Positions are stored as 2-D
coordinates in metres for both the linear model (``y == 0``) and the planar one.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DistanceBelowReference

SPEED_OF_LIGHT = 299_792_458.0


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(watts):
    return 10.0 * np.log10(np.asarray(watts, dtype=float)) + 30.0


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class PowerProfile:
    """Transmit powers and the total noise power N0*W, all in dBm."""

    p_a_tx: float = 46.0
    p_r_tx: float = 30.0
    p_b_tx: float = 23.0
    # thermal -174 dBm/Hz over one 180 kHz resource block
    noise_power: float = -121.45
    allow_any_powers: bool = False

    def __post_init__(self):
        for name in ("p_a_tx", "p_r_tx", "p_b_tx", "noise_power"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite, got {getattr(self, name)}")
        if not self.allow_any_powers and not (self.p_a_tx > self.p_r_tx > self.p_b_tx):
            raise ConfigError(
                "power constraint P_A > P_R > P_B violated "
                f"({self.p_a_tx} / {self.p_r_tx} / {self.p_b_tx} dBm); "
                "set allow_any_powers to override"
            )

    @property
    def noise_watts(self):
        return float(dbm_to_watts(self.noise_power))

    def tx_dbm(self, role):
        return {"A": self.p_a_tx, "R": self.p_r_tx, "B": self.p_b_tx}[role]


@dataclass(frozen=True)
class PropagationParams:
    path_loss_exp: float = 3.7
    carrier_freq: float = 1.9e9
    ref_dist: float = 10.0
    cell_radius: float = 1000.0

    def __post_init__(self):
        if not self.path_loss_exp > 2:
            raise ConfigError(f"path loss exponent must exceed 2, got {self.path_loss_exp}")
        if not self.ref_dist > 0:
            raise ConfigError(f"reference distance must be positive, got {self.ref_dist}")
        if not self.cell_radius > self.ref_dist:
            raise ConfigError("cell radius must exceed the reference distance")
        if not self.carrier_freq > 0:
            raise ConfigError("carrier frequency must be positive")


@dataclass
class Deployment:
    """One scheduled user B and the candidate relays.

    ``user_pos`` is a length-2 array and ``relay_positions`` has shape (k, 2);
    the linear model keeps every y coordinate at zero.
    """

    model: str
    user_pos: np.ndarray
    relay_positions: np.ndarray
    relay_separation: float = float("nan")
    prop: PropagationParams = field(default_factory=PropagationParams)

    def __post_init__(self):
        if self.model not in ("linear", "planar"):
            raise ConfigError(f"unknown deployment model {self.model!r}")
        self.user_pos = np.asarray(self.user_pos, dtype=float).reshape(2)
        self.relay_positions = np.asarray(self.relay_positions, dtype=float).reshape(-1, 2)
        if len(self.relay_positions) == 0:
            raise ConfigError("deployment needs at least one relay")
        pts = np.vstack([self.user_pos, self.relay_positions])
        if self.model == "linear" and np.any(pts[:, 1] != 0):
            raise ConfigError("linear deployments must lie on the x axis")
        d = np.hypot(pts[:, 0], pts[:, 1])
        # small slack so grid points generated exactly on the rim are accepted
        tol = 1e-9 * self.prop.cell_radius
        if np.any(d > self.prop.cell_radius + tol) or np.any(d < self.prop.ref_dist - tol):
            raise ConfigError("all nodes must lie inside the cell and at least d0 from the base station")

    @classmethod
    def linear(cls, x_b, relay_xs, relay_separation=float("nan"), prop=None):
        xs = np.asarray(relay_xs, dtype=float).reshape(-1)
        return cls("linear", np.array([x_b, 0.0]), np.column_stack([xs, np.zeros_like(xs)]),
                   relay_separation, prop or PropagationParams())

    @classmethod
    def planar(cls, user_xy, relay_xy, relay_separation=float("nan"), prop=None):
        return cls("planar", user_xy, relay_xy, relay_separation, prop or PropagationParams())

    @property
    def user_distance(self):
        return float(np.hypot(*self.user_pos))

    def relay_distances(self):
        """Distances (relay to A, relay to B), each of shape (k,)."""
        d_ar = np.hypot(self.relay_positions[:, 0], self.relay_positions[:, 1])
        diff = self.relay_positions - self.user_pos
        return d_ar, np.hypot(diff[:, 0], diff[:, 1])


def relay_grid_linear(separation, prop):
    """Relays every ``separation`` metres along the x axis, from d0 out to the cell edge."""
    first = np.ceil(prop.ref_dist / separation)
    last = np.floor(prop.cell_radius / separation + 1e-9)
    xs = np.arange(first, last + 1) * separation
    return np.column_stack([xs, np.zeros_like(xs)])


def relay_grid_planar(separation, prop):
    """Square lattice of spacing ``separation`` clipped to the cell disk (origin excluded)."""
    m = np.floor(prop.cell_radius / separation + 1e-9)
    k = np.arange(-m, m + 1) * separation
    gx, gy = np.meshgrid(k, k)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    d = np.hypot(pts[:, 0], pts[:, 1])
    keep = (d <= prop.cell_radius * (1 + 1e-12)) & (d >= prop.ref_dist)
    return pts[keep]


def free_space_factor(p_tx, prop):
    """Reference received power Pbar_x (W) for a transmit power in dBm."""
    wavelength_term = (SPEED_OF_LIGHT / (4.0 * np.pi * prop.carrier_freq)) ** 2
    return wavelength_term * prop.ref_dist ** (prop.path_loss_exp - 2.0) * dbm_to_watts(p_tx)


def received_power(pbar, fading_gain, distance, n, ref_dist=10.0):
    """Pbar * |h|^2 * d^-n, in watts. Works elementwise on arrays."""
    distance = np.asarray(distance, dtype=float)
    if np.any(distance < ref_dist):
        raise DistanceBelowReference(
            f"distance {np.min(distance):.6g} m is below the reference distance {ref_dist} m")
    return pbar * np.asarray(fading_gain, dtype=float) * distance ** (-n)


def sample_fading(rng, size=None):
    """Rayleigh power gains |h|^2 ~ Exp(1)."""
    return rng.exponential(1.0, size=size)


def link_snr(p_tx, distance, fading_gain, power, prop):
    """Vectorised linear SNR for a transmitter at ``p_tx`` dBm."""
    pbar = free_space_factor(p_tx, prop)
    return received_power(pbar, fading_gain, distance, prop.path_loss_exp, prop.ref_dist) / power.noise_watts


@dataclass(frozen=True)
class LinkBudget:
    distance: float
    fading_gain: float
    rx_power: float
    snr: float

    @property
    def snr_db(self):
        return float(linear_to_db(self.snr))


def _node_position(role, dep, relay):
    if role == "A":
        return np.zeros(2)
    if role == "B":
        return dep.user_pos
    if role == "R":
        return dep.relay_positions[relay]
    raise ValueError(f"unknown node role {role!r}; expected 'A', 'B' or 'R'")


def link_budget(tx, rx, dep, power, prop, fading_gain=1.0, relay=0):
    """Budget of the ``tx -> rx`` link; roles are ``"A"``, ``"B"`` or ``"R"`` (relay index ``relay``)."""
    d = float(np.hypot(*(_node_position(tx, dep, relay) - _node_position(rx, dep, relay))))
    pbar = free_space_factor(power.tx_dbm(tx), prop)
    p_rx = float(received_power(pbar, fading_gain, d, prop.path_loss_exp, prop.ref_dist))
    return LinkBudget(d, float(fading_gain), p_rx, p_rx / power.noise_watts)


def estimate_user_distance(snr_ab, power, prop):
    """Invert the path loss of the A->B reference signal, fading taken as unit gain.

    The estimate is clamped to ``[d0, r]``.
    """
    snr_ab = np.asarray(snr_ab, dtype=float)
    if np.any(snr_ab <= 0):
        raise ValueError("SNR must be positive to estimate a distance")
    pbar_a = free_space_factor(power.p_a_tx, prop)
    d = (pbar_a / (snr_ab * power.noise_watts)) ** (1.0 / prop.path_loss_exp)
    d = np.clip(d, prop.ref_dist, prop.cell_radius)
    return float(d) if d.ndim == 0 else d
