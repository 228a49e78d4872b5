"""Seeded Monte-Carlo experiments on the link chain.

Randomness is addressed per batch (see :mod:`cdmalink.rng`), so results are
bit-identical for a given seed and a run with more trials repeats the
earlier batches exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from . import rng as rngmod
from .analytic import Direction, Grid, LinkScenario, SnrPdfGrid, avg_coded_snr, downlink_snr_limit
from .convcode import CodeSpec, encode, viterbi_decode
from .linkchain import (
    ChannelOutput,
    Fading,
    channel_components,
    deinterleave,
    interleave,
    phase_align,
    qpsk_modulate,
    snr_weights,
)

__all__ = [
    "ExperimentConfig",
    "EmpiricalPdf",
    "BerEstimate",
    "InsufficientBitsError",
    "estimate_snr_pdf",
    "estimate_ber",
    "measure_interference_variance",
    "ks_distance",
    "wilson_interval",
    "snr_support_edge",
]

MIN_BITS = 10_000
COMBINING = ("phase", "snr")
SNR_BATCH = 1 << 16  # symbols per random-stream batch for SNR statistics


class InsufficientBitsError(ValueError):
    pass


def snr_support_edge(scenario: LinkScenario) -> float:
    """Upper edge of the per-bit SNR support; a far quantile for the uplink."""
    if scenario.direction is Direction.DOWNLINK and scenario.interferers:
        return downlink_snr_limit(scenario)
    # P(exponential > 30 mean) = e**-30
    return 30 * avg_coded_snr(scenario)


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte-Carlo experiment.

    ``num_trials`` counts coded-bit SNR draws in SNR mode (``code`` is None)
    and blocks of ``block_length`` information bits in BER mode.
    ``combining`` selects the decoder metrics under fading: ``"phase"``
    derotates only, ``"snr"`` also weights each symbol by its SNR (MRC),
    which is the receiver the union bound describes.
    """

    scenario: LinkScenario
    code: CodeSpec | None = None
    num_trials: int = 100_000
    seed: int = rngmod.DEFAULT_SEED
    grid: Grid | None = None
    block_length: int = 1000
    interleaver_depth: int | None = None
    fading: Fading = Fading.IID
    max_errors: int | None = 500
    batch_blocks: int = 200
    combining: str = "phase"

    def __post_init__(self):
        object.__setattr__(self, "fading", Fading(self.fading))
        if self.combining not in COMBINING:
            raise ValueError(f"combining must be one of {COMBINING}, got {self.combining!r}")
        if self.num_trials < 1:
            raise ValueError("num_trials must be at least 1")
        if self.grid is None and self.code is None:
            edge = snr_support_edge(self.scenario)
            object.__setattr__(self, "grid", Grid(1.1 * edge, 441))
        if self.code is not None:
            depth = self.depth
            coded = self.code.coded_length(self.block_length)
            if coded % depth or coded % 2:
                raise ValueError(
                    f"coded block of {coded} bits must be even and divisible by the "
                    f"interleaver depth {depth}"
                )

    @property
    def depth(self) -> int:
        if self.interleaver_depth is not None:
            return self.interleaver_depth
        return self.code.rate_inverse if self.code else 1

    def covers_support(self) -> bool:
        if self.grid is None:
            return False
        return self.grid.gamma_min <= 0 and self.grid.gamma_max >= 1.1 * snr_support_edge(self.scenario) * (1 - 1e-12)


@dataclass(frozen=True, eq=False)
class EmpiricalPdf:
    """Histogram of SNR draws on the bins between consecutive grid points."""

    grid: Grid
    counts: np.ndarray
    density: np.ndarray
    samples: np.ndarray = field(repr=False)
    overflow: int = 0

    def integral(self) -> float:
        return float(np.sum(self.density) * self.grid.step)


@dataclass(frozen=True)
class BerEstimate:
    bit_errors: int
    bits_tested: int
    point_estimate: float
    wilson_interval_95: tuple[float, float]
    error_positions: np.ndarray | None = field(default=None, repr=False, compare=False)


def wilson_interval(
    errors: int, trials: int, confidence: float = 0.95, design_effect: float = 1.0
) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion.

    ``design_effect`` > 1 widens the interval for clustered errors by
    shrinking the effective sample to ``trials / design_effect``.
    """
    z = stats.norm.ppf(0.5 + confidence / 2)
    p = errors / trials
    n = trials / max(design_effect, 1.0)
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if errors == 0 else max(0.0, centre - half)
    hi = 1.0 if errors == trials else min(1.0, centre + half)
    return lo, hi


def block_design_effect(sum_errors: float, sum_squares: float, blocks: int, block_length: int) -> float:
    """Variance inflation of block error counts over independent bit errors.

    Viterbi errors arrive in bursts, so the count per block is
    overdispersed relative to a binomial.  Returns at least 1.
    """
    if blocks < 2 or sum_errors == 0:
        return 1.0
    mean = sum_errors / blocks
    var = (sum_squares - blocks * mean * mean) / (blocks - 1)
    p = mean / block_length
    binomial = block_length * p * (1 - p)
    return max(1.0, var / binomial) if binomial > 0 else 1.0


def ks_distance(samples, pdf: SnrPdfGrid) -> float:
    """Kolmogorov-Smirnov distance between samples and a gridded pdf."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    cdf = pdf.cdf() / pdf.integral()
    f = np.interp(x, pdf.gamma, cdf, left=0.0, right=1.0)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def _user_symbols(seed: int, batch: int, user: int, shape) -> tuple[np.ndarray, np.ndarray]:
    """Scrambled random QPSK of an interfering user, and its chips."""
    data = rngmod.random_bits(rngmod.stream(seed, batch, rngmod.INTERFERER_DATA, user), tuple(shape[:-1]) + (2 * shape[-1],))
    chips = _chips(seed, batch, user, shape)
    return qpsk_modulate(data) * chips, chips


def _chips(seed: int, batch: int, user: int, shape) -> np.ndarray:
    return 1.0 - 2.0 * rngmod.random_bits(rngmod.stream(seed, batch, rngmod.SCRAMBLING, user), shape)


def _transmit(scenario, desired, seed, batch, fading) -> tuple[ChannelOutput, np.ndarray]:
    """Scramble the desired symbols, add K-1 random users, pass the channel."""
    shape = desired.shape
    chips = _chips(seed, batch, 0, shape)
    interferers = [_user_symbols(seed, batch, k, shape)[0] for k in range(1, scenario.num_users)]
    out = channel_components(
        scenario, desired * chips, interferers, rngmod.stream(seed, batch, rngmod.FADING), fading
    )
    return out, chips


def _random_qpsk(seed, batch, n):
    return qpsk_modulate(rngmod.random_bits(rngmod.stream(seed, batch, rngmod.DATA), 2 * n))


def _batches(total: int, size: int):
    start = 0
    index = 0
    while start < total:
        n = min(size, total - start)
        yield index, n
        start += n
        index += 1


def estimate_snr_pdf(config: ExperimentConfig) -> EmpiricalPdf:
    """Histogram of the per-coded-bit SNR at the decoder input.

    The SNR of a coded bit is the desired energy ``|a|^2 xi`` over the mean
    interference-plus-noise power given the desired user's channel ``a``.
    Interference power is averaged over the +-1 scrambling chips, which is
    exact (``2 xi sum_k |a_k|^2``).  Uplink interferer taps are independent
    of ``a`` and get averaged over the batch; downlink interferers share
    ``a``.  The thermal noise density is known to the receiver.  Both coded
    bits of a QPSK symbol carry the SNR of their symbol.
    """
    sc = config.scenario
    xi = sc.energy_per_coded_bit
    symbols = (config.num_trials + 1) // 2
    draws = []
    for batch, n in _batches(symbols, SNR_BATCH):
        out, _ = _transmit(sc, _random_qpsk(config.seed, batch, n), config.seed, batch, config.fading)
        gain = np.abs(out.taps) ** 2
        interference = 2 * xi * out.interferer_gain
        if sc.direction is Direction.UPLINK:
            interference = np.mean(interference)
        draws.append(np.repeat(gain * xi / (interference + sc.noise_density), 2))
    samples = np.concatenate(draws)[: config.num_trials]
    grid = config.grid
    counts, _ = np.histogram(samples, bins=grid.points)
    inside = int(counts.sum())
    density = counts / (max(inside, 1) * grid.step)
    return EmpiricalPdf(grid, counts, density, samples, len(samples) - inside)


def measure_interference_variance(
    scenario: LinkScenario, num_symbols: int, seed: int, fading: Fading | str = Fading.IID
) -> float:
    """Interference power on the soft metrics of the desired user.

    Expressed as a noise-density equivalent: twice the per-metric variance,
    the scale on which complex noise of variance N0 reads N0.
    """
    if scenario.interferers == 0:
        return 0.0
    total = 0.0
    count = 0
    for batch, n in _batches(num_symbols, SNR_BATCH):
        out, chips = _transmit(scenario, _random_qpsk(seed, batch, n), seed, batch, Fading(fading))
        parts = phase_align(out.interference * chips, out.taps).view(np.float64)
        total += float(np.dot(parts, parts))
        count += parts.size
    return 2 * total / count


def estimate_ber(config: ExperimentConfig, keep_errors: bool = False) -> BerEstimate:
    """Information-bit error rate of the full coded chain.

    Blocks are processed in batches of ``batch_blocks``; the run stops after
    the batch in which ``max_errors`` errors have accumulated.  The Wilson
    interval accounts for error bursts through the dispersion of the
    per-block error counts.
    """
    code = config.code
    if code is None:
        raise ValueError("BER estimation needs a code")
    sc = config.scenario
    length = config.block_length
    if config.num_trials * length < MIN_BITS:
        raise InsufficientBitsError(
            f"{config.num_trials} blocks of {length} bits is below {MIN_BITS} bits"
        )
    depth = config.depth
    errors = 0
    bits = 0
    blocks = 0
    squares = 0.0
    positions = []
    for batch, nblocks in _batches(config.num_trials, config.batch_blocks):
        info = rngmod.random_bits(rngmod.stream(config.seed, batch, rngmod.DATA), (nblocks, length))
        tx = qpsk_modulate(interleave(encode(code, info), depth))
        out, chips = _transmit(sc, tx, config.seed, batch, config.fading)
        received = out.signal
        if sc.interferers:
            received += out.interference
        received += out.noise
        received *= chips
        if config.fading is not Fading.NONE:
            received = phase_align(received, out.taps)
            if config.combining == "snr":
                received *= snr_weights(sc, out.taps)
        metrics = deinterleave(received.view(np.float64), depth)
        decoded = viterbi_decode(code, metrics)
        wrong = decoded != info
        per_block = np.count_nonzero(wrong, axis=1)
        n_wrong = int(per_block.sum())
        squares += float(np.dot(per_block, per_block))
        blocks += nblocks
        if keep_errors:
            positions.append(np.flatnonzero(wrong.ravel()) + bits)
        errors += n_wrong
        bits += nblocks * length
        if config.max_errors is not None and errors >= config.max_errors:
            break
    return BerEstimate(
        errors,
        bits,
        errors / bits,
        wilson_interval(errors, bits, design_effect=block_design_effect(errors, squares, blocks, length)),
        np.concatenate(positions) if keep_errors else None,
    )


def with_trials(config: ExperimentConfig, num_trials: int) -> ExperimentConfig:
    return replace(config, num_trials=num_trials)
