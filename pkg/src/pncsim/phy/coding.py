"""Tail-biting convolutional code (rate 1/3, K=7) and a batched soft Viterbi decoder.

Generators are the LTE ones, 133/171/165 octal. Coded bits are interleaved per
time step: ``[d0[0], d1[0], d2[0], d0[1], ...]``.

LLR convention throughout the phy package: ``L = log P(bit=0) / P(bit=1)``,
so a positive LLR favours bit 0 (BPSK symbol +1).
"""

import numpy as np

GENERATORS = (0o133, 0o171, 0o165)
CONSTRAINT_LENGTH = 7
MEMORY = CONSTRAINT_LENGTH - 1
N_STATES = 1 << MEMORY
RATE_INV = len(GENERATORS)


def _taps(g):
    # tap k multiplies c[i-k]; k=0 is the MSB of the 7-bit generator
    return [k for k in range(CONSTRAINT_LENGTH) if (g >> (MEMORY - k)) & 1]


def _parity(x):
    return bin(x).count("1") & 1


def _build_trellis():
    # state s packs c[i-1] at bit 5 ... c[i-6] at bit 0; register = (u << 6) | s
    out = np.zeros((N_STATES, 2), dtype=np.int64)
    for s in range(N_STATES):
        for u in (0, 1):
            reg = (u << MEMORY) | s
            idx = 0
            for g in GENERATORS:
                idx = (idx << 1) | _parity(reg & g)
            out[s, u] = idx
    # next state ns is reached from (ns & 31) << 1 and its odd twin, input ns >> 5
    ns = np.arange(N_STATES)
    u = ns >> (MEMORY - 1)
    prev0 = (ns & (N_STATES // 2 - 1)) << 1
    return out, out[prev0, u], out[prev0 | 1, u]


_OUT, _IDX0, _IDX1 = _build_trellis()

# _SIGNS[j, t] is +1 when output bit j of triplet t is 0, else -1
_SIGNS = np.array(
    [[1.0 - 2.0 * ((t >> (RATE_INV - 1 - j)) & 1) for t in range(1 << RATE_INV)] for j in range(RATE_INV)]
)


def conv_encode(bits):
    """Tail-biting encode. ``bits`` is ``(K,)`` or a batch ``(F, K)``; returns ``3*K`` coded bits per row."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.shape[-1] == 0:
        raise ValueError("cannot encode an empty bit vector")
    k = bits.shape[-1]
    # register preloaded with the last MEMORY input bits
    ext = np.concatenate([np.take(bits, np.arange(k - MEMORY, k) % k, axis=-1), bits], axis=-1)
    streams = []
    for g in GENERATORS:
        acc = np.zeros(bits.shape, dtype=np.uint8)
        for tap in _taps(g):
            acc ^= ext[..., MEMORY - tap: MEMORY - tap + k]
        streams.append(acc)
    return np.stack(streams, axis=-1).reshape(*bits.shape[:-1], RATE_INV * k)


def viterbi_decode(llr, passes=2):
    """Soft-decision tail-biting Viterbi decoder.

    Parameters
    ----------
    llr : array_like, shape (3*K,) or (F, 3*K)
        Coded-bit LLRs, positive favouring bit 0.
    passes : int
        Number of trips around the tail-biting trellis. Each pass starts from
        the path metrics left by the previous one; decisions are traced back
        over the last pass only (wrap-around decoding).

    Returns
    -------
    numpy.ndarray of uint8, shape (K,) or (F, K)
    """
    llr = np.asarray(llr, dtype=np.float64)
    single = llr.ndim == 1
    llr = np.atleast_2d(llr)
    n_frames, n_coded = llr.shape
    if n_coded % RATE_INV:
        raise ValueError(f"LLR length {n_coded} is not a multiple of {RATE_INV}")
    k = n_coded // RATE_INV
    half = N_STATES // 2
    # metrics are state-major (states, frames) so the butterflies below are
    # contiguous slices; float32 is enough given the periodic renormalisation
    bm = (0.5 * llr.reshape(n_frames, k, RATE_INV) @ _SIGNS).astype(np.float32)
    bm = np.ascontiguousarray(bm.transpose(1, 2, 0))
    i00, i01 = _IDX0[:half], _IDX0[half:]
    i10, i11 = _IDX1[:half], _IDX1[half:]

    pm = np.zeros((N_STATES, n_frames), dtype=np.float32)
    nxt = np.empty_like(pm)
    decisions = np.empty((k, N_STATES, n_frames), dtype=bool)
    for p in range(passes):
        keep = p == passes - 1
        for t in range(k):
            b = bm[t]
            even, odd = pm[0::2], pm[1::2]
            a0, a1 = even + b[i00], odd + b[i10]
            c0, c1 = even + b[i01], odd + b[i11]
            np.maximum(a0, a1, out=nxt[:half])
            np.maximum(c0, c1, out=nxt[half:])
            if keep:
                np.greater(a1, a0, out=decisions[t, :half])
                np.greater(c1, c0, out=decisions[t, half:])
            pm, nxt = nxt, pm
            if t % 64 == 63:
                pm -= pm.max(axis=0)
        pm -= pm.max(axis=0)

    cols = np.arange(n_frames)
    state = pm.argmax(axis=0)
    out = np.empty((n_frames, k), dtype=np.uint8)
    for t in range(k - 1, -1, -1):
        out[:, t] = state >> (MEMORY - 1)
        state = ((state & (half - 1)) << 1) | decisions[t, state, cols]
    return out[0] if single else out
