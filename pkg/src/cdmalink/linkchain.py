"""Bit-true discrete-time CDMA link: interleaver, QPSK, scrambling, channel, receiver.

Symbol streams are complex numpy arrays with unit average power per symbol.
Functions work along the last axis so a batch of blocks can be processed at
once.  Gray mapping (first bit on the real axis, second on the imaginary
axis, bit 0 -> positive)::

    00 -> (+1+j)/sqrt2    01 -> (+1-j)/sqrt2
    11 -> (-1-j)/sqrt2    10 -> (-1+j)/sqrt2
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import rng as rngmod
from .analytic import Direction, LinkScenario

__all__ = [
    "Fading",
    "ScramblingSequence",
    "interleave",
    "deinterleave",
    "qpsk_modulate",
    "qpsk_demodulate",
    "scramble",
    "descramble",
    "rayleigh_taps",
    "ChannelOutput",
    "channel_components",
    "apply_channel",
    "phase_align",
    "snr_weights",
    "receiver_front_end",
]

_INV_SQRT2 = 1 / math.sqrt(2)


class Fading(enum.Enum):
    IID = "iid"  # independent tap per symbol (ideal interleaving)
    BLOCK = "block"  # one tap per block
    NONE = "none"  # unit tap, AWGN only


@dataclass(frozen=True, eq=False)
class ScramblingSequence:
    """+-1 chips, one per symbol."""

    chips: np.ndarray = field(repr=False)
    seed: int = 0
    user: int = 0

    def __post_init__(self):
        chips = np.asarray(self.chips, dtype=np.float64)
        if not np.all(np.abs(chips) == 1):
            raise ValueError("scrambling chips must be +1 or -1")
        chips.setflags(write=False)
        object.__setattr__(self, "chips", chips)

    @classmethod
    def generate(cls, length: int, seed: int, user: int = 0) -> "ScramblingSequence":
        bits = rngmod.random_bits(rngmod.stream(seed, rngmod.SCRAMBLING, user), length)
        return cls(1.0 - 2.0 * bits, seed, user)

    def __len__(self):
        return self.chips.shape[-1]


def _check_depth(length: int, depth: int):
    if depth < 1:
        raise ValueError("interleaver depth must be positive")
    if length % depth:
        raise ValueError(f"length {length} is not divisible by depth {depth}")


def interleave(bits, depth: int) -> np.ndarray:
    """Block interleaver: write rows of ``depth`` symbols, read columns."""
    x = np.asarray(bits)
    _check_depth(x.shape[-1], depth)
    lead = x.shape[:-1]
    return np.swapaxes(x.reshape(lead + (-1, depth)), -1, -2).reshape(x.shape)


def deinterleave(bits, depth: int) -> np.ndarray:
    x = np.asarray(bits)
    _check_depth(x.shape[-1], depth)
    lead = x.shape[:-1]
    return np.swapaxes(x.reshape(lead + (depth, -1)), -1, -2).reshape(x.shape)


def qpsk_modulate(bits) -> np.ndarray:
    b = np.asarray(bits)
    if b.shape[-1] % 2:
        raise ValueError("QPSK needs an even number of bits")
    levels = (1.0 - 2.0 * b) * _INV_SQRT2
    return levels.reshape(b.shape[:-1] + (-1, 2)).view(np.complex128)[..., 0]


def qpsk_demodulate(stream) -> np.ndarray:
    """Soft metrics: real and imaginary part of each symbol, interleaved."""
    s = np.ascontiguousarray(stream, dtype=np.complex128)
    return s.view(np.float64).copy()


def _chips(seq) -> np.ndarray:
    return seq.chips if isinstance(seq, ScramblingSequence) else np.asarray(seq, dtype=np.float64)


def scramble(stream, seq) -> np.ndarray:
    s = np.asarray(stream)
    chips = _chips(seq)
    if chips.shape[-1] != s.shape[-1]:
        raise ValueError("stream and scrambling sequence lengths differ")
    return s * chips


descramble = scramble


def rayleigh_taps(rng: np.random.Generator, shape, fading: Fading = Fading.IID) -> np.ndarray:
    """Circular complex Gaussian taps with unit mean power.

    ``shape`` ends with the symbol axis.  Block fading draws one tap per
    leading index and holds it over the block.
    """
    fading = Fading(fading)
    shape = tuple(shape)
    if fading is Fading.NONE:
        return np.ones(shape, dtype=np.complex128)
    draw = shape if fading is Fading.IID else shape[:-1] + (1,)
    taps = rng.standard_normal(draw + (2,)).view(np.complex128)[..., 0] * _INV_SQRT2
    return np.broadcast_to(taps, shape).copy()


class ChannelOutput(NamedTuple):
    taps: np.ndarray  # desired user's coefficients
    signal: np.ndarray  # desired contribution
    interference: np.ndarray  # sum of the interferers' contributions
    noise: np.ndarray
    interferer_gain: np.ndarray  # sum over interferers of |tap|**2, per symbol

    @property
    def received(self) -> np.ndarray:
        return self.signal + self.interference + self.noise


def channel_components(scenario, desired, interferers, rng, fading=Fading.IID) -> ChannelOutput:
    """Core of :func:`apply_channel` keeping the signal, interference and noise apart."""
    fading = Fading(fading)
    amp = math.sqrt(2 * scenario.energy_per_coded_bit)
    shape = desired.shape
    taps = rayleigh_taps(rng, shape, fading)
    signal = amp * desired if fading is Fading.NONE else amp * taps * desired
    interference = np.zeros(shape, dtype=np.complex128)
    gain = np.zeros(shape)
    for s in interferers:
        if s.shape != shape:
            raise ValueError("all user streams must have the same length")
        if scenario.direction is Direction.DOWNLINK:
            interference += s
        else:
            tap = rayleigh_taps(rng, shape, fading)
            interference += tap * s
            gain += np.abs(tap) ** 2
    if interferers:
        if scenario.direction is Direction.DOWNLINK:
            interference *= taps
            gain = len(interferers) * np.abs(taps) ** 2
        interference *= amp
    parts = rng.standard_normal(shape + (2,))
    parts *= math.sqrt(scenario.noise_density / 2)
    noise = parts.view(np.complex128)[..., 0]
    return ChannelOutput(taps, signal, interference, noise, gain)


def apply_channel(
    scenario: LinkScenario,
    desired,
    interferers,
    seed: int | np.random.Generator,
    fading: Fading | str = Fading.IID,
):
    """Flat Rayleigh fading multi-user channel.

    Every stream is scaled to ``2 * energy_per_coded_bit`` per symbol.
    Uplink users fade independently; downlink users share the desired
    user's tap sequence.  Complex white Gaussian noise of variance
    ``noise_density`` is added per symbol.

    Returns
    -------
    received : ndarray of complex
    taps : ndarray of complex
        The desired user's channel coefficients.
    """
    desired = np.asarray(desired, dtype=np.complex128)
    interferers = [np.asarray(s, dtype=np.complex128) for s in interferers]
    if len(interferers) != scenario.interferers:
        raise ValueError(f"expected {scenario.interferers} interfering streams, got {len(interferers)}")
    rng = seed if isinstance(seed, np.random.Generator) else rngmod.stream(seed, rngmod.FADING)
    out = channel_components(scenario, desired, interferers, rng, fading)
    return out.received, out.taps


def phase_align(received, taps) -> np.ndarray:
    """Derotate by the conjugate unit-magnitude tap (perfect CSI)."""
    taps = np.asarray(taps)
    mag = np.abs(taps)
    rot = np.divide(np.conj(taps), mag, out=np.ones_like(taps), where=mag > 0)
    return received * rot


def snr_weights(scenario: LinkScenario, taps) -> np.ndarray:
    """Per-symbol metric weights that turn phase-aligned metrics into MRC.

    Each symbol is scaled by its tap magnitude over its own interference
    plus noise power, so the decoder adds per-bit SNRs.  On the uplink that
    power is constant; on the downlink the interference fades with the
    desired signal.
    """
    mag = np.abs(np.asarray(taps))
    spread = 2 * scenario.interferers * scenario.energy_per_coded_bit
    if scenario.direction is Direction.DOWNLINK:
        power = spread * mag**2 + scenario.noise_density
    else:
        power = np.full_like(mag, spread + scenario.noise_density)
    return np.divide(mag, power, out=mag.copy(), where=power > 0)


def receiver_front_end(received, taps, seq) -> np.ndarray:
    """Descramble, phase-align with the known taps and demodulate to soft metrics."""
    received = np.asarray(received, dtype=np.complex128)
    taps = np.asarray(taps, dtype=np.complex128)
    if received.shape != taps.shape:
        raise ValueError("received stream and taps differ in length")
    return qpsk_demodulate(phase_align(descramble(received, seq), taps))
