"""Coded CDMA link laboratory.

Analytic SNR densities and union bounds for coded synchronous CDMA over
Rayleigh fading (uplink and downlink), and a bit-true Monte-Carlo link to
check them against.
"""

__version__ = "0.1.0"

from .analytic import (
    Direction,
    DistanceSpectrum,
    Grid,
    GridError,
    LinkScenario,
    SnrPdfGrid,
    avg_coded_snr,
    convolve_pdfs,
    downlink_bit_pdf,
    downlink_combined_pdf,
    downlink_snr_limit,
    gaussian_approx_pdf,
    pairwise_error_prob,
    point_mass_pdf,
    q_function,
    self_convolve,
    union_bound_ber,
    uplink_bit_pdf,
    uplink_combined_pdf,
)
from .convcode import CodeSpec, SearchBudgetExceeded, distance_spectrum, encode, viterbi_decode
from .linkchain import Fading, ScramblingSequence, apply_channel, receiver_front_end
from .montecarlo import (
    BerEstimate,
    EmpiricalPdf,
    ExperimentConfig,
    InsufficientBitsError,
    estimate_ber,
    estimate_snr_pdf,
    ks_distance,
    measure_interference_variance,
    wilson_interval,
)
