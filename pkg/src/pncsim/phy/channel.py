"""Frames, BPSK mapping and the simulated two-user multiple-access channel.

The relay sees ``Y = h_A X_A + h_B X_B + n`` with constant complex gains per
frame, uniformly random phases and circular white Gaussian noise of variance
``noise_var`` per real dimension. A link's SNR is ``|h|^2 / (2 * noise_var)``
(unit symbol energy).
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import hadamard

from ..errors import LengthMismatch
from .coding import conv_encode
from .crc import WIDTH, attach_crc

DEFAULT_INFO_BITS = 512
PILOT_LENGTH = 64

# two orthogonal +-1 preambles, one per transmitter
_PILOTS = hadamard(PILOT_LENGTH)[1:3].astype(np.float64)


def bpsk(bits):
    """Map bit 0 to +1 and bit 1 to -1."""
    return 1.0 - 2.0 * np.asarray(bits, dtype=np.float64)


@dataclass
class CodedFrame:
    """A batch of frames, one per row."""

    info_bits: np.ndarray
    crc_bits: np.ndarray
    coded_bits: np.ndarray
    modulated: np.ndarray

    @property
    def payload(self):
        return np.concatenate([self.info_bits, self.crc_bits], axis=1)

    def __len__(self):
        return self.info_bits.shape[0]


def make_frames(info_bits):
    """CRC-protect, encode and modulate ``info_bits`` of shape ``(F, K)`` or ``(K,)``."""
    info = np.atleast_2d(np.asarray(info_bits, dtype=np.uint8))
    payload = attach_crc(info)
    coded = conv_encode(payload)
    return CodedFrame(info, payload[:, -WIDTH:], coded, bpsk(coded))


def random_frames(rng, n_frames, n_info=DEFAULT_INFO_BITS):
    return make_frames(rng.integers(0, 2, size=(n_frames, n_info), dtype=np.uint8))


@dataclass
class MacChannelRealization:
    gain_a: np.ndarray
    gain_b: np.ndarray
    noise_var: float
    rx_symbols: np.ndarray
    rx_pilots: np.ndarray = None

    @property
    def snr_a(self):
        return np.abs(self.gain_a) ** 2 / (2 * self.noise_var)

    @property
    def snr_b(self):
        return np.abs(self.gain_b) ** 2 / (2 * self.noise_var)


def _complex_noise(rng, shape, noise_var):
    if noise_var == 0:
        return np.zeros(shape, dtype=np.complex128)
    sd = np.sqrt(noise_var)
    return rng.normal(0.0, sd, shape) + 1j * rng.normal(0.0, sd, shape)


def superimpose(frame_a, frame_b, gain_a, gain_b, noise_var, rng=None, pilots=False):
    """Received block for explicit complex gains (one per frame or a scalar)."""
    xa, xb = frame_a.modulated, frame_b.modulated
    if xa.shape != xb.shape:
        raise LengthMismatch(f"frame shapes differ: {xa.shape} vs {xb.shape}")
    n_frames = xa.shape[0]
    ga = np.broadcast_to(np.asarray(gain_a, dtype=np.complex128), (n_frames,)).copy()
    gb = np.broadcast_to(np.asarray(gain_b, dtype=np.complex128), (n_frames,)).copy()
    if noise_var > 0 and rng is None:
        raise ValueError("a random source is required when noise_var > 0")
    y = ga[:, None] * xa + gb[:, None] * xb + _complex_noise(rng, xa.shape, noise_var)
    rx_pilots = None
    if pilots:
        rx_pilots = (ga[:, None] * _PILOTS[0] + gb[:, None] * _PILOTS[1]
                     + _complex_noise(rng, (n_frames, PILOT_LENGTH), noise_var))
    return MacChannelRealization(ga, gb, noise_var, y, rx_pilots)


def transmit_ma(frame_a, frame_b, snr_a_db, snr_b_db, rng, noise_var=0.5, pilots=False):
    """Send both frames through the MAC at the given per-link SNRs (dB).

    Gain magnitudes are fixed by the SNRs; each frame draws its own uniform
    phase per link.
    """
    n_frames = len(frame_a)
    mag_a = np.sqrt(2 * noise_var * 10 ** (snr_a_db / 10))
    mag_b = np.sqrt(2 * noise_var * 10 ** (snr_b_db / 10))
    phase = rng.uniform(0.0, 2 * np.pi, size=(2, n_frames))
    return superimpose(frame_a, frame_b, mag_a * np.exp(1j * phase[0]),
                       mag_b * np.exp(1j * phase[1]), noise_var, rng, pilots=pilots)


def estimate_gains(real):
    """Least-squares gain estimates from the orthogonal preambles."""
    if real.rx_pilots is None:
        raise ValueError("realization was generated without pilots")
    est = real.rx_pilots @ _PILOTS.T / PILOT_LENGTH
    return est[:, 0], est[:, 1]
