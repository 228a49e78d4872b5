"""Analytic SNR statistics and union-bound BER for coded CDMA links.

All pdfs live on uniform grids (:class:`SnrPdfGrid`) and every integral is a
trapezoidal sum over the grid.  Closed-form densities are sampled exactly;
numerically derived densities (convolutions, Gaussian approximation) are
renormalized to unit trapezoidal mass.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import special
from scipy.integrate import trapezoid
from scipy.signal import fftconvolve

__all__ = [
    "Direction",
    "LinkScenario",
    "Grid",
    "SnrPdfGrid",
    "DistanceSpectrum",
    "GridError",
    "avg_coded_snr",
    "downlink_snr_limit",
    "default_grid",
    "uplink_bit_pdf",
    "uplink_combined_pdf",
    "downlink_bit_pdf",
    "downlink_combined_pdf",
    "convolve_pdfs",
    "self_convolve",
    "gaussian_approx_pdf",
    "point_mass_pdf",
    "q_function",
    "pairwise_error_prob",
    "union_bound_ber",
]

# Largest tolerated deviation of a convolution's mass before renormalizing.
MAX_CONVOLUTION_DRIFT = 1e-3


class GridError(ValueError):
    """Raised when two grids are incompatible or too coarse for an operation."""


class Direction(enum.Enum):
    UPLINK = "uplink"
    DOWNLINK = "downlink"


@dataclass(frozen=True)
class LinkScenario:
    """Operating point of one link.

    Parameters
    ----------
    num_users : int
        Number of active synchronous users K (desired user included).
    energy_per_coded_bit : float
        Received average energy per coded bit, in the same units as
        ``noise_density``.
    noise_density : float
        Thermal noise density N0.  The complex noise added per QPSK symbol
        has variance N0.
    direction : Direction
    """

    num_users: int
    energy_per_coded_bit: float = 1.0
    noise_density: float = 1.0
    direction: Direction = Direction.UPLINK

    def __post_init__(self):
        if isinstance(self.direction, str):
            object.__setattr__(self, "direction", Direction(self.direction))
        if int(self.num_users) != self.num_users or self.num_users < 1:
            raise ValueError(f"num_users must be a positive integer, got {self.num_users}")
        if not self.energy_per_coded_bit > 0:
            raise ValueError("energy_per_coded_bit must be positive")
        if not self.noise_density >= 0:
            raise ValueError("noise_density must be nonnegative")

    @property
    def interferers(self) -> int:
        return self.num_users - 1

    @property
    def coded_snr_db(self) -> float:
        """Per-coded-bit energy to thermal noise ratio in dB."""
        if self.noise_density == 0:
            return math.inf
        return 10 * math.log10(self.energy_per_coded_bit / self.noise_density)

    def with_direction(self, direction: Direction | str) -> "LinkScenario":
        return LinkScenario(
            self.num_users, self.energy_per_coded_bit, self.noise_density, Direction(direction)
        )

    @classmethod
    def from_ebn0_db(
        cls,
        num_users: int,
        ebn0_db: float,
        rate_inverse: int = 1,
        direction: Direction | str = Direction.UPLINK,
    ) -> "LinkScenario":
        """Scenario with unit coded-bit energy at a given Eb/N0 per information bit."""
        coded_db = ebn0_db - 10 * math.log10(rate_inverse)
        return cls(num_users, 1.0, 10 ** (-coded_db / 10), Direction(direction))


@dataclass(frozen=True)
class Grid:
    """Uniform sampling of [gamma_min, gamma_max] with inclusive endpoints."""

    gamma_max: float
    num_points: int
    gamma_min: float = 0.0

    def __post_init__(self):
        if self.num_points < 2:
            raise GridError("a grid needs at least two points")
        if not self.gamma_min < self.gamma_max:
            raise GridError("gamma_min must be below gamma_max")
        if self.gamma_min < 0:
            raise GridError("SNR grids start at a nonnegative value")

    @classmethod
    def with_step(cls, upper: float, step: float, gamma_min: float = 0.0) -> "Grid":
        """Grid with exactly ``step`` spacing covering at least [gamma_min, upper]."""
        intervals = max(1, math.ceil((upper - gamma_min) / step - 1e-9))
        return cls(gamma_min + intervals * step, intervals + 1, gamma_min)

    @property
    def step(self) -> float:
        return (self.gamma_max - self.gamma_min) / (self.num_points - 1)

    @property
    def points(self) -> np.ndarray:
        return self.gamma_min + self.step * np.arange(self.num_points)


@dataclass(frozen=True, eq=False)
class SnrPdfGrid:
    """A pdf of the SNR sampled on a uniform grid."""

    gamma_min: float
    gamma_max: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or len(values) < 2:
            raise GridError("pdf values must be a 1-d array with at least two samples")
        if not self.gamma_min < self.gamma_max:
            raise GridError("gamma_min must be below gamma_max")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("pdf values must be finite and nonnegative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def on(cls, grid: Grid, values) -> "SnrPdfGrid":
        return cls(grid.gamma_min, grid.gamma_max, values)

    @property
    def grid(self) -> Grid:
        return Grid(self.gamma_max, len(self.values), self.gamma_min)

    @property
    def step(self) -> float:
        return (self.gamma_max - self.gamma_min) / (len(self.values) - 1)

    @property
    def gamma(self) -> np.ndarray:
        return self.gamma_min + self.step * np.arange(len(self.values))

    @property
    def peak(self) -> float:
        return float(self.values.max())

    def integral(self) -> float:
        return float(trapezoid(self.values, dx=self.step))

    def mean(self) -> float:
        return float(trapezoid(self.gamma * self.values, dx=self.step) / self.integral())

    def variance(self) -> float:
        mu = self.mean()
        return float(trapezoid((self.gamma - mu) ** 2 * self.values, dx=self.step) / self.integral())

    def mass_above(self, threshold: float) -> float:
        """Trapezoidal mass on grid intervals lying entirely above ``threshold``."""
        g, v = self.gamma, self.values
        keep = g[:-1] >= threshold
        return float(np.sum(0.5 * (v[:-1] + v[1:])[keep]) * self.step)

    def cdf(self) -> np.ndarray:
        """Cumulative trapezoidal integral at each grid point."""
        v = self.values
        return np.concatenate(([0.0], np.cumsum(0.5 * (v[:-1] + v[1:]) * self.step)))

    def __call__(self, gamma) -> np.ndarray:
        """Linear interpolation, zero outside the grid."""
        return np.interp(gamma, self.gamma, self.values, left=0.0, right=0.0)

    def normalized(self) -> "SnrPdfGrid":
        return SnrPdfGrid(self.gamma_min, self.gamma_max, self.values / self.integral())


@dataclass(frozen=True)
class DistanceSpectrum:
    """Free distance and information error weights of a convolutional code."""

    free_distance: int
    weights: Mapping[int, float]
    truncation_distance: int | None = None

    def __post_init__(self):
        weights = {int(d): float(c) for d, c in sorted(self.weights.items())}
        if not weights:
            raise ValueError("a distance spectrum needs at least one term")
        if self.free_distance < 1:
            raise ValueError("free distance must be positive")
        if min(weights) != self.free_distance:
            raise ValueError(
                f"smallest distance {min(weights)} differs from free distance {self.free_distance}"
            )
        if any(c <= 0 for c in weights.values()):
            raise ValueError("information error weights must be positive")
        trunc = max(weights) if self.truncation_distance is None else int(self.truncation_distance)
        if trunc < self.free_distance:
            raise ValueError("truncation distance below free distance")
        weights = {d: c for d, c in weights.items() if d <= trunc}
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "truncation_distance", trunc)

    @property
    def distances(self) -> list[int]:
        return list(self.weights)


def avg_coded_snr(scenario: LinkScenario) -> float:
    """Average SNR per coded bit, xi / (2 (K-1) xi + N0).

    The multiple-access interference of each of the K-1 co-channel users is
    counted at its full received energy, which reduces to xi/N0 for K = 1.
    """
    xi = scenario.energy_per_coded_bit
    denom = 2 * scenario.interferers * xi + scenario.noise_density
    if denom == 0:
        raise ValueError("average SNR undefined: no interference and no noise")
    return xi / denom


def downlink_snr_limit(scenario: LinkScenario) -> float:
    """Upper edge 1/(2(K-1)) of the per-coded-bit downlink SNR."""
    if scenario.interferers < 1:
        raise ValueError("the downlink SNR is only bounded with at least one interferer")
    return 1.0 / (2 * scenario.interferers)


def _require(scenario: LinkScenario, direction: Direction):
    if scenario.direction is not direction:
        raise ValueError(f"expected a {direction.value} scenario, got {scenario.direction.value}")


def _downlink_intervals(scenario: LinkScenario) -> int:
    # The per-bit density peaks within about N0/(4 xi (K-1)^2) of the SNR
    # limit; resolve that with ~20 points.
    m = 2 * scenario.interferers
    beta = scenario.noise_density / scenario.energy_per_coded_bit
    if beta == 0:
        return 400
    return int(min(max(400, math.ceil(40 * m / beta)), 1_000_000))


def default_grid(scenario: LinkScenario, d: int = 1) -> Grid:
    """Grid used when a pdf operation is called without one.

    Uplink: step gamma_c/400 up to (d + 12 sqrt(d) + 30) gamma_c.
    Downlink: the per-bit support [0, 1/(2(K-1))] split finely enough to
    resolve the density peak, repeated d times.
    """
    if scenario.direction is Direction.UPLINK:
        g = avg_coded_snr(scenario)
        return Grid.with_step((d + 12 * math.sqrt(d) + 30) * g, g / 400)
    n = _downlink_intervals(scenario)
    return Grid(d * downlink_snr_limit(scenario), d * n + 1)


def _erlang(gamma: np.ndarray, d: int, mean_bit: float) -> np.ndarray:
    out = np.zeros_like(gamma)
    pos = gamma > 0
    logf = (
        (d - 1) * np.log(gamma[pos])
        - gamma[pos] / mean_bit
        - special.gammaln(d)
        - d * math.log(mean_bit)
    )
    out[pos] = np.exp(logf)
    if d == 1:
        out[gamma == 0] = 1.0 / mean_bit
    return out


def uplink_bit_pdf(scenario: LinkScenario, grid: Grid | None = None) -> SnrPdfGrid:
    """Exponential pdf of the per-coded-bit SNR over independent Rayleigh fading."""
    return uplink_combined_pdf(scenario, 1, grid)


def uplink_combined_pdf(scenario: LinkScenario, d: int, grid: Grid | None = None) -> SnrPdfGrid:
    """Chi-square pdf with 2d degrees of freedom of the SNR of d combined coded bits.

    Evaluated in log space, so d in the hundreds is fine.
    """
    _require(scenario, Direction.UPLINK)
    if d < 1:
        raise ValueError("d must be a positive integer")
    grid = grid or default_grid(scenario, d)
    return SnrPdfGrid.on(grid, _erlang(grid.points, int(d), avg_coded_snr(scenario)))


def downlink_bit_pdf(scenario: LinkScenario, grid: Grid | None = None) -> SnrPdfGrid:
    """Per-coded-bit downlink SNR pdf under common Rayleigh fading.

    The SNR is ``a xi / (2 (K-1) a xi + N0)`` with ``a`` the unit-mean
    exponential channel power shared by the desired and the interfering
    signals.  Changing variables gives a density supported on
    ``[0, 1/(2(K-1)))``.
    """
    _require(scenario, Direction.DOWNLINK)
    limit = downlink_snr_limit(scenario)
    beta = scenario.noise_density / scenario.energy_per_coded_bit
    if beta == 0:
        raise ValueError("without thermal noise the downlink SNR is a point mass at the limit")
    grid = grid or default_grid(scenario, 1)
    g = grid.points
    u = 1.0 - g / limit
    out = np.zeros_like(g)
    inside = (g >= 0) & (u > 0)
    with np.errstate(over="ignore"):
        power = beta * g[inside] / u[inside]
        out[inside] = beta * np.exp(-power) / u[inside] ** 2
    out[~np.isfinite(out)] = 0.0
    return SnrPdfGrid.on(grid, out)


def _same_step(a: float, b: float) -> bool:
    return abs(a - b) <= 1e-9 * max(a, b)


def convolve_pdfs(a: SnrPdfGrid, b: SnrPdfGrid) -> SnrPdfGrid:
    """Density of the sum of two independent SNRs.

    Trapezoidal rule for the convolution integral, so the two endpoint
    terms get half weight.  The result is renormalized to unit mass.
    """
    if a.gamma_min != 0 or b.gamma_min != 0:
        raise GridError("convolution needs grids starting at zero")
    if not _same_step(a.step, b.step):
        raise GridError(f"step mismatch: {a.step!r} vs {b.step!r}")
    h = a.step
    x, y = a.values, b.values
    c = fftconvolve(x, y)
    c[: len(y)] -= 0.5 * x[0] * y
    c[: len(x)] -= 0.5 * y[0] * x
    c *= h
    # FFT round-off leaves tiny negative values where the true density is zero
    np.clip(c, 0.0, None, out=c)
    mass = trapezoid(c, dx=h)
    if abs(mass - 1.0) >= MAX_CONVOLUTION_DRIFT:
        raise GridError(
            f"convolution mass drifted to {mass:.6g}; the grid is too coarse or truncated"
        )
    return SnrPdfGrid(0.0, h * (len(c) - 1), c / mass)


def self_convolve(pdf: SnrPdfGrid, d: int) -> SnrPdfGrid:
    """d-fold self-convolution by repeated squaring."""
    if d < 1:
        raise ValueError("d must be a positive integer")
    result = None
    base = pdf
    while True:
        if d & 1:
            result = base if result is None else convolve_pdfs(result, base)
        d >>= 1
        if not d:
            return result
        base = convolve_pdfs(base, base)


def downlink_combined_pdf(scenario: LinkScenario, d: int, grid: Grid | None = None) -> SnrPdfGrid:
    """SNR pdf of d combined downlink coded bits by numerical convolution.

    ``grid`` describes the per-bit sampling; it must start at zero.  The
    result spans ``d`` times the per-bit grid.
    """
    bit = downlink_bit_pdf(scenario, grid)
    if d == 1:
        return bit
    if bit.gamma_min != 0:
        raise GridError("the per-bit grid must start at zero")
    return self_convolve(bit, d)


def gaussian_approx_pdf(scenario: LinkScenario, d: int, grid: Grid | None = None) -> SnrPdfGrid:
    """Truncated Gaussian approximation to the combined downlink SNR pdf.

    Mean and variance are d times the per-bit moments (central limit
    matching); the density is cut to ``(0, d/(2(K-1)))`` and rescaled to
    unit mass there.
    """
    _require(scenario, Direction.DOWNLINK)
    if d < 1:
        raise ValueError("d must be a positive integer")
    bit = downlink_bit_pdf(scenario)
    mu = d * bit.mean()
    sigma = math.sqrt(d * bit.variance())
    upper = d * downlink_snr_limit(scenario)
    grid = grid or default_grid(scenario, d)
    g = grid.points
    values = np.exp(-0.5 * ((g - mu) / sigma) ** 2) / (math.sqrt(2 * math.pi) * sigma)
    values[(g <= 0) | (g >= upper)] = 0.0
    pdf = SnrPdfGrid.on(grid, values)
    mass = pdf.integral()
    if mass <= 0:
        raise GridError("grid misses the support of the Gaussian approximation")
    return pdf.normalized()


def point_mass_pdf(gamma0: float, grid: Grid) -> SnrPdfGrid:
    """Unit-mass triangular spike centred on the grid point nearest ``gamma0``.

    Stands in for a deterministic SNR (unfaded channel) on a grid.
    """
    g = grid.points
    i = int(np.clip(round((gamma0 - grid.gamma_min) / grid.step), 0, len(g) - 1))
    values = np.zeros_like(g)
    values[i] = 1.0
    pdf = SnrPdfGrid.on(grid, values)
    return pdf.normalized()


def q_function(x):
    """Gaussian upper-tail probability Q(x) = P(N(0,1) > x)."""
    out = 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2))
    return float(out) if np.ndim(out) == 0 else out


def _q_antiderivatives(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Antiderivatives of Q(sqrt(2t)) and t*Q(sqrt(2t)), expressed with the
    # upper regularized gamma so that far-tail differences keep precision.
    q = q_function(np.sqrt(2 * g))
    g0 = g * q - 0.25 * special.gammaincc(1.5, g)
    g1 = 0.5 * g * g * q - 0.1875 * special.gammaincc(2.5, g)
    return g0, g1


def pairwise_error_prob(pdf: SnrPdfGrid, method: str = "quadrature") -> float:
    """Average of Q(sqrt(2 gamma)) over an SNR pdf.

    The pdf is taken as piecewise linear between grid points (the
    trapezoidal model) and integrated exactly against Q(sqrt(2 gamma)),
    which keeps the square-root behaviour of the integrand at gamma = 0 from
    costing accuracy.
    """
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    g = pdf.gamma
    f = pdf.values
    h = pdf.step
    g0, g1 = _q_antiderivatives(g)
    d0 = np.diff(g0)
    d1 = np.diff(g1)
    left = (g[1:] * d0 - d1) / h
    right = (d1 - g[:-1] * d0) / h
    total = float(np.sum(f[:-1] * left + f[1:] * right))
    return min(max(total, 0.0), 0.5)


def union_bound_ber(spectrum: DistanceSpectrum, per_distance_p2: Mapping[int, float]) -> float:
    """Truncated union bound sum of c_d * p2(d) over the spectrum."""
    missing = [d for d in spectrum.weights if d not in per_distance_p2]
    if missing:
        raise KeyError(f"no pairwise error probability for distances {missing}")
    return float(sum(c * per_distance_p2[d] for d, c in spectrum.weights.items()))
