"""Link-level model of the PNC multiple-access phase: coding, channel, decoders."""

from .channel import (CodedFrame, MacChannelRealization, bpsk, estimate_gains, make_frames,
                      random_frames, superimpose, transmit_ma)
from .coding import conv_encode, viterbi_decode
from .crc import attach_crc, crc32_batch, crc32_linear, crc_ok
from .decoders import (DecodeOutcome, decode_pipeline, rmud_decode, sic_decode, xor_cd_decode,
                       xor_llr)

__all__ = [
    "CodedFrame", "MacChannelRealization", "bpsk", "estimate_gains", "make_frames", "random_frames",
    "superimpose", "transmit_ma", "conv_encode", "viterbi_decode", "attach_crc", "crc32_batch",
    "crc32_linear", "crc_ok", "DecodeOutcome", "decode_pipeline", "rmud_decode", "sic_decode",
    "xor_cd_decode", "xor_llr",
]
