"""
SNR statistics of a power-controlled CDMA link
==============================================

With perfect average power control every user arrives with the same mean
power.  On the uplink each user fades independently, so the per-bit SNR
of the desired user is exponential.  On the downlink one fading tap scales
the desired signal and all interferers alike, which caps the SNR at
1/(2(K-1)) no matter how strong the fade.

This script compares the two per-bit densities, then looks at the sum of
many coded bits, which is what a soft-decision decoder effectively sees.
"""

import numpy as np

from cdmalink import (
    Direction,
    Grid,
    LinkScenario,
    avg_coded_snr,
    downlink_bit_pdf,
    downlink_combined_pdf,
    downlink_snr_limit,
    gaussian_approx_pdf,
    uplink_bit_pdf,
    uplink_combined_pdf,
)
from cdmalink.montecarlo import ExperimentConfig, estimate_snr_pdf, ks_distance

# Ten users, 6 dB per information bit, rate 1/4 code.
up = LinkScenario.from_ebn0_db(10, 6.0, 4, Direction.UPLINK)
down = up.with_direction(Direction.DOWNLINK)
gbar = avg_coded_snr(up)
print(f"mean per-bit SNR {gbar:.5f} (1/{1 / gbar:.3f}), downlink cap {downlink_snr_limit(down):.5f}")

###############################################################################
# Per-bit densities
# -----------------
# Sample both on the same grid.  The uplink density is largest at zero; the
# downlink density piles up just below its cap.

grid = Grid(0.08, 9)
for g, u, d in zip(grid.points, uplink_bit_pdf(up, grid).values, downlink_bit_pdf(down, grid).values):
    print(f"  gamma={g:.3f}  uplink={u:8.3f}  downlink={d:8.3f}")

###############################################################################
# The simulated chain agrees
# --------------------------
# Pass random QPSK through the scrambled multi-user channel and measure the
# SNR seen by the desired user.

for sc, ref in ((up, uplink_bit_pdf(up)), (down, downlink_bit_pdf(down))):
    emp = estimate_snr_pdf(ExperimentConfig(sc, num_trials=100_000, seed=1))
    print(f"{sc.direction.value:8s} KS distance to the analytic pdf: {ks_distance(emp.samples, ref):.4f}")

###############################################################################
# Combining many coded bits
# -------------------------
# For a code with free distance 164 the relevant quantity is the sum of 164
# per-bit SNRs.  The uplink sum is Erlang; the downlink sum is bounded by
# 164 times the cap and is found numerically.  A Gaussian with matched
# moments is a convenient stand-in, though the per-bit skew still shows.

d = 164
exact_up = uplink_combined_pdf(up, d)
exact_down = downlink_combined_pdf(down, d)
approx = gaussian_approx_pdf(down, d, exact_down.grid)
edge = d * downlink_snr_limit(down)
print(f"uplink mass above {edge:.3f}: {exact_up.mass_above(edge):.3f}")
print(f"downlink mass above {edge:.3f}: {exact_down.mass_above(edge):.3f}")
gap = np.max(np.abs(approx.values - exact_down.values)) / exact_down.peak
print(f"Gaussian vs exact downlink, largest gap relative to the peak: {gap:.3f}")
