"""
Union bound against the simulated coded link
============================================

The truncated union bound adds up, distance by distance, the probability
of mistaking the sent codeword for one at that Hamming distance, weighted
by the number of information bits such a mistake flips.  Here it is checked
against the full chain (encoder, interleaver, QPSK, scrambling, channel,
soft Viterbi decoding) for the memory-2 (5,7) code.
"""

from cdmalink import CodeSpec, LinkScenario, Direction, distance_spectrum, union_bound_ber
from cdmalink.cli import pairwise_probabilities
from cdmalink.linkchain import Fading
from cdmalink.montecarlo import ExperimentConfig, estimate_ber

code = CodeSpec.from_octal(3, ["5", "7"])
spectrum = distance_spectrum(code, 12)
print("distance spectrum:", {d: int(c) for d, c in spectrum.weights.items()})

###############################################################################
# Unfaded single-user link
# ------------------------
# Without fading each pairwise term is a plain Q-function, and the bound
# becomes tight as the SNR grows.

for ebn0 in (3.0, 4.0, 5.0):
    sc = LinkScenario.from_ebn0_db(1, ebn0, 2)
    bound = union_bound_ber(spectrum, pairwise_probabilities(sc, spectrum.distances, Fading.NONE))
    est = estimate_ber(ExperimentConfig(sc, code, fading=Fading.NONE, num_trials=20_000, max_errors=300, seed=2))
    lo, hi = est.wilson_interval_95
    print(f"AWGN {ebn0:.0f} dB: simulated {est.point_estimate:.2e} [{lo:.2e}, {hi:.2e}], bound {bound:.2e}")

###############################################################################
# Two users with Rayleigh fading
# ------------------------------
# Without spreading gain a second user already costs a lot of SNR, so
# stretch the code to rate 1/8 by sending each (5,7) output four times.
# Every distance quadruples and the free distance becomes 20.
#
# The bound assumes every coded bit fades independently and that the
# decoder adds per-bit SNRs.  The specified receiver only derotates, and
# the two bits of a QPSK symbol share one fade, so with the default
# interleaver (depth = 8) both sit in the same short error event.
# Weighting the metrics by SNR and interleaving deeply (depth 1002 puts
# the pair 125 trellis steps apart) brings the chain to the bound's model.

code8 = CodeSpec.from_octal(3, ["5", "7"] * 4)
spectrum8 = distance_spectrum(code8, 45)
receivers = (("derotate only", "phase", None), ("SNR weighted", "snr", None), ("SNR weighted, deep", "snr", 1002))
for direction in (Direction.UPLINK, Direction.DOWNLINK):
    sc = LinkScenario.from_ebn0_db(2, 10.0, 8, direction)
    bound = union_bound_ber(spectrum8, pairwise_probabilities(sc, spectrum8.distances, Fading.IID))
    print(f"{direction.value} K=2 at 10 dB, bound {bound:.2e}")
    for label, combining, depth in receivers:
        cfg = ExperimentConfig(
            sc, code8, num_trials=10_000, max_errors=300, seed=3, combining=combining, interleaver_depth=depth
        )
        est = estimate_ber(cfg)
        lo, hi = est.wilson_interval_95
        print(f"  {label:20s} {est.point_estimate:.2e} [{lo:.2e}, {hi:.2e}]")
