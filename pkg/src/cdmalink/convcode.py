"""Feed-forward convolutional codes: encoder, soft Viterbi decoder, distance spectrum.

Conventions
-----------
* A generator is a bitmask of ``constraint_length`` bits written in octal;
  the most significant bit taps the current input.
* Encoding is zero-terminated: ``constraint_length - 1`` tail zeros flush
  the register, so a block of L bits yields ``n * (L + K - 1)`` code bits.
* Soft metrics follow the demodulator: a positive value favours code bit 0
  and its magnitude is the reliability.  The decoder maximizes the
  correlation between metrics and the antipodal codeword.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numba
import numpy as np

from .analytic import DistanceSpectrum

__all__ = [
    "CodeSpec",
    "Trellis",
    "SearchBudgetExceeded",
    "build_trellis",
    "encode",
    "viterbi_decode",
    "distance_spectrum",
    "trellis_states",
]

MAX_CONSTRAINT_LENGTH = 16


class SearchBudgetExceeded(RuntimeError):
    """The detour search did not terminate within its step budget."""


@dataclass(frozen=True)
class CodeSpec:
    rate_inverse: int
    constraint_length: int
    generators: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(int(g) for g in self.generators))
        if self.rate_inverse < 1:
            raise ValueError("rate_inverse must be positive")
        if not 2 <= self.constraint_length <= MAX_CONSTRAINT_LENGTH:
            raise ValueError(
                f"constraint_length must lie in [2, {MAX_CONSTRAINT_LENGTH}], "
                f"got {self.constraint_length}"
            )
        if len(self.generators) != self.rate_inverse:
            raise ValueError(
                f"expected {self.rate_inverse} generators, got {len(self.generators)}"
            )
        for g in self.generators:
            if not 0 < g < 1 << self.constraint_length:
                raise ValueError(
                    f"generator {g:o} (octal) does not fit {self.constraint_length} bits"
                )

    @classmethod
    def from_octal(cls, constraint_length: int, generators) -> "CodeSpec":
        gens = tuple(int(str(g), 8) for g in generators)
        return cls(len(gens), constraint_length, gens)

    @property
    def memory(self) -> int:
        return self.constraint_length - 1

    @property
    def num_states(self) -> int:
        return 1 << self.memory

    @property
    def octal(self) -> list[str]:
        return [format(g, "o") for g in self.generators]

    def taps(self) -> np.ndarray:
        """(n, K) array of 0/1 taps; column k multiplies the input delayed by k."""
        k = self.constraint_length
        return np.array(
            [[(g >> (k - 1 - delay)) & 1 for delay in range(k)] for g in self.generators],
            dtype=np.uint8,
        )

    def coded_length(self, info_length: int) -> int:
        return self.rate_inverse * (info_length + self.memory)


@dataclass(frozen=True, eq=False)
class Trellis:
    """State machine of a code.

    A state holds the last K-1 inputs with the most recent one in the most
    significant position.
    """

    num_states: int
    next_state: np.ndarray  # (S, 2)
    outputs: np.ndarray  # (S, 2, n) code bits


def _parity(x: np.ndarray) -> np.ndarray:
    x = x.copy()
    out = np.zeros_like(x)
    while np.any(x):
        out ^= x & 1
        x >>= 1
    return out


@functools.lru_cache(maxsize=32)
def build_trellis(code: CodeSpec) -> Trellis:
    s = code.num_states
    state = np.arange(s)[:, None]
    bit = np.arange(2)[None, :]
    register = (bit << code.memory) | state
    next_state = register >> 1
    outputs = np.stack([_parity(register & g) for g in code.generators], axis=-1)
    next_state.setflags(write=False)
    outputs = outputs.astype(np.uint8)
    outputs.setflags(write=False)
    return Trellis(s, next_state, outputs)


def encode(code: CodeSpec, bits) -> np.ndarray:
    """Zero-terminated encoding.

    ``bits`` may be 1-d or a batch of equal-length blocks (time on the last
    axis).  Output symbols are interleaved per step: all n outputs of step
    t precede those of step t+1.
    """
    u = np.asarray(bits, dtype=np.uint8)
    if u.size and u.max() > 1:
        raise ValueError("bits must be 0 or 1")
    length = u.shape[-1]
    steps = length + code.memory
    out = np.zeros(u.shape[:-1] + (steps, code.rate_inverse), dtype=np.uint8)
    for j, row in enumerate(code.taps()):
        for delay in np.flatnonzero(row):
            out[..., delay : delay + length, j] ^= u
    return out.reshape(u.shape[:-1] + (steps * code.rate_inverse,))


def trellis_states(code: CodeSpec, bits) -> np.ndarray:
    """State sequence visited while encoding ``bits`` plus the tail (length L+K)."""
    trellis = build_trellis(code)
    u = list(np.asarray(bits, dtype=np.uint8)) + [0] * code.memory
    states = [0]
    for b in u:
        states.append(int(trellis.next_state[states[-1], b]))
    return np.array(states)


LANES = 64  # blocks decoded side by side


@numba.njit(cache=True)
def _first_input_differs(choice, prev_state, t, a, b, half, lane):
    # Trace two survivors ending in states a and b at time t back to where
    # they merge; True when the path through a has input 0 at the first
    # step where they differ, i.e. it is lexicographically smaller.
    bit_a = 0
    while a != b and t > 0:
        bit_a = a // half
        a = prev_state[a, choice[t - 1, a, lane]]
        b = prev_state[b, choice[t - 1, b, lane]]
        t -= 1
    return bit_a == 0


@numba.njit(cache=True)
def _viterbi_kernel(metrics, label_signs, edge_label, prev_state, num_info):
    # metrics: (T*n, W), one block per lane; label_signs: (2**n, n)
    # antipodal branch labels; prev_state[s, i] is the i-th predecessor of
    # state s and edge_label[s, i] the label on that edge.
    num_labels, n = label_signs.shape
    lanes = metrics.shape[1]
    steps = metrics.shape[0] // n
    num_states = prev_state.shape[0]
    half = num_states // 2
    out = np.zeros((num_info, lanes), dtype=np.uint8)
    choice = np.zeros((steps, num_states, lanes), dtype=np.uint8)
    pm = np.full((num_states, lanes), -np.inf)
    new_pm = np.empty((num_states, lanes))
    branch = np.empty((num_labels, lanes))
    pm[0, :] = 0.0
    for t in range(steps):
        for lab in range(num_labels):
            for w in range(lanes):
                branch[lab, w] = 0.0
            for j in range(n):
                sign = label_signs[lab, j]
                for w in range(lanes):
                    branch[lab, w] += sign * metrics[t * n + j, w]
        for s in range(num_states):
            p0 = prev_state[s, 0]
            p1 = prev_state[s, 1]
            l0 = edge_label[s, 0]
            l1 = edge_label[s, 1]
            ties = 0
            for w in range(lanes):
                m0 = pm[p0, w] + branch[l0, w]
                m1 = pm[p1, w] + branch[l1, w]
                better = m1 > m0
                choice[t, s, w] = better
                new_pm[s, w] = m1 if better else m0
                ties += m1 == m0
            if ties:
                for w in range(lanes):
                    m0 = pm[p0, w] + branch[l0, w]
                    if m0 == pm[p1, w] + branch[l1, w] and m0 != -np.inf:
                        # exact tie: keep the lexicographically smaller survivor
                        keep_first = _first_input_differs(choice, prev_state, t, p0, p1, half, w)
                        choice[t, s, w] = 0 if keep_first else 1
        pm, new_pm = new_pm, pm
    for w in range(lanes):
        state = 0
        for t in range(steps - 1, -1, -1):
            if t < num_info:
                out[t, w] = state // half
            state = prev_state[state, choice[t, state, w]]
    return out


def viterbi_decode(code: CodeSpec, soft_metrics) -> np.ndarray:
    """Maximum-likelihood sequence decoding of zero-terminated blocks.

    ``soft_metrics`` is 1-d (one block) or 2-d (a batch of blocks).  Ties
    between equally likely paths resolve to the lexicographically smaller
    information sequence.
    """
    m = np.asarray(soft_metrics, dtype=np.float64)
    single = m.ndim == 1
    if single:
        m = m[None, :]
    n = code.rate_inverse
    if m.shape[-1] % n:
        raise ValueError(f"metric length {m.shape[-1]} is not a multiple of {n}")
    steps = m.shape[-1] // n
    num_info = steps - code.memory
    if num_info < 0:
        raise ValueError("block shorter than the encoder tail")
    trellis = build_trellis(code)
    s = trellis.num_states
    low = np.arange(s) & ((s >> 1) - 1)
    prev_state = np.stack([low << 1, (low << 1) | 1], axis=1).astype(np.int64)
    weights = 1 << np.arange(n - 1, -1, -1)
    labels = (trellis.outputs.astype(np.int64) * weights).sum(axis=-1)
    entering = np.arange(s) // (s >> 1)
    edge_label = labels[prev_state, entering[:, None]]
    label_bits = (np.arange(1 << n)[:, None] >> np.arange(n - 1, -1, -1)) & 1
    label_signs = 1.0 - 2.0 * label_bits
    out = np.empty((m.shape[0], num_info), dtype=np.uint8)
    for start in range(0, m.shape[0], LANES):
        group = np.ascontiguousarray(m[start : start + LANES].T)
        out[start : start + LANES] = _viterbi_kernel(group, label_signs, edge_label, prev_state, num_info).T
    return out[0] if single else out


def distance_spectrum(
    code: CodeSpec, max_distance: int, max_steps: int | None = None
) -> DistanceSpectrum:
    """Exact free distance and information error weights up to ``max_distance``.

    Breadth-first expansion of all detours that leave the zero state,
    tracking for every (state, accumulated weight) the number of partial
    paths and their summed information weight.  A path is retired when it
    re-merges with the zero state or exceeds ``max_distance``.
    """
    trellis = build_trellis(code)
    s = trellis.num_states
    weight = trellis.outputs.sum(axis=-1).astype(np.int64)
    if max_steps is None:
        max_steps = (max_distance + 1) * s + code.constraint_length
    count = np.zeros((s, max_distance + 1), dtype=np.float64)
    info = np.zeros_like(count)
    first, w0 = trellis.next_state[0, 1], weight[0, 1]
    if first == 0:
        raise ValueError("degenerate trellis")
    if w0 <= max_distance:
        count[first, w0] = 1.0
        info[first, w0] = 1.0
    found_count = np.zeros(max_distance + 1)
    found_info = np.zeros(max_distance + 1)
    for _ in range(max_steps):
        if not count.any():
            break
        new_count = np.zeros_like(count)
        new_info = np.zeros_like(info)
        states, dists = np.nonzero(count)
        for st, dist in zip(states, dists):
            for bit in (0, 1):
                nxt = trellis.next_state[st, bit]
                w = dist + weight[st, bit]
                if w > max_distance:
                    continue
                c = count[st, dist]
                i = info[st, dist] + bit * c
                if nxt == 0:
                    found_count[w] += c
                    found_info[w] += i
                else:
                    new_count[nxt, w] += c
                    new_info[nxt, w] += i
        count, info = new_count, new_info
    else:
        if count.any():
            raise SearchBudgetExceeded(
                f"detours of weight <= {max_distance} still open after {max_steps} steps "
                "(catastrophic code or budget too small)"
            )
    present = np.flatnonzero(found_count)
    if present.size == 0:
        raise ValueError(f"no detour of weight <= {max_distance}")
    weights = {int(d): float(found_info[d]) for d in present}
    return DistanceSpectrum(int(present[0]), weights, max_distance)
