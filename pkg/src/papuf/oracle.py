"""Brute-force reference implementations, used only by the test suite.

Everything here recomputes results through deliberately naive arithmetic
(plain Python lists, explicit permutation composition, exhaustive
codeword search) so the fast numpy paths can be checked against an
independent derivation.  The only shared pieces are the seed-derivation
and tie/noise stream helpers, which must match bit for bit so that random
tie breaks are comparable.
"""

from __future__ import annotations

from itertools import product

import numpy as np

from .bch import BchCode
from .circuit import _noise_rng, _tie_rng
from .device import DeviceInstance

MAX_ORACLE_STAGES = 4
MAX_ORACLE_CODE_LENGTH = 15

# Gate-level reference for the 3-input arbiter: three flip-flops race the
# pairs (T,C), (C,B), (B,T) and the mux/XOR stage emits NOT(qT ^ qC ^ qB).
def gate_level_priority(order: tuple[str, str, str]) -> int:
    rank = {name: pos for pos, name in enumerate(order)}
    q_t = int(rank["T"] < rank["C"])
    q_c = int(rank["C"] < rank["B"])
    q_b = int(rank["B"] < rank["T"])
    return 1 ^ (q_t ^ q_c ^ q_b)


def exhaustive_propagate(device: DeviceInstance, challenge, eval_seed: int = 0) -> int:
    """Reference evaluation by explicit per-stage permutation composition.

    Refuses netlists beyond MAX_ORACLE_STAGES; the point is exhaustive
    checking of small instances, not speed.
    """
    netlist = device.netlist
    if netlist.stages > MAX_ORACLE_STAGES:
        raise ValueError(f"oracle refuses netlists over {MAX_ORACLE_STAGES} stages")
    challenge = [int(b) for b in challenge]
    if len(challenge) != netlist.stages:
        raise ValueError("challenge length does not match the netlist")
    lines = netlist.lines
    sigma = device.params.sigma_noise
    window = device.params.metastability_window
    # source line per output line, for select 0 and select 1
    identity = list(range(lines))
    rotation = [2, 0, 1] if lines == 3 else [1, 0]

    tap_points = {}
    for point, (tap, target) in enumerate(netlist.ff_taps, start=1):
        tap_points.setdefault(tap, []).append((point, target))
    pending: dict[int, list[int]] = {}

    times = [0.0] * lines
    for stage in range(netlist.stages):
        if stage in pending:
            selects = pending.pop(stage)
        else:
            selects = [challenge[stage]] * lines
        new_times = []
        for line in range(lines):
            source = rotation[line] if selects[line] == 1 else identity[line]
            new_times.append(times[source] + float(device.delay_table[stage][selects[line]][line]))
        times = new_times
        for point, target in tap_points.get(stage, ()):
            jitter = sigma * _noise_rng(eval_seed, point).standard_normal((1, lines))[0]
            tie = _tie_rng(eval_seed, point).integers(0, 2, size=(1, 3), dtype=np.uint8)[0]
            sampled = [times[l] + float(jitter[l]) for l in range(lines)]
            pending[target] = [
                _oracle_compare(sampled[0], sampled[1], window, int(tie[0])),
                _oracle_compare(sampled[1], sampled[2], window, int(tie[1])),
                _oracle_compare(sampled[2], sampled[0], window, int(tie[2])),
            ]

    jitter = sigma * _noise_rng(eval_seed, 0).standard_normal((1, lines))[0]
    final = [times[l] + float(jitter[l]) for l in range(lines)]
    if lines == 2:
        tie = _tie_rng(eval_seed, 0).integers(0, 2, size=(1, 1), dtype=np.uint8)[0]
        return _oracle_compare(final[0], final[1], window, int(tie[0]))
    tie = _tie_rng(eval_seed, 0).integers(0, 2, size=(1, 3), dtype=np.uint8)[0]
    q_t = _oracle_compare(final[0], final[1], window, int(tie[0]))
    q_c = _oracle_compare(final[1], final[2], window, int(tie[1]))
    q_b = _oracle_compare(final[2], final[0], window, int(tie[2]))
    return 1 ^ (q_t ^ q_c ^ q_b)


def _oracle_compare(first: float, second: float, window: float, tie_bit: int) -> int:
    if abs(first - second) <= window:
        return tie_bit
    return 1 if first < second else 0


# ---------------------------------------------------------------------------
# nearest-codeword search for small BCH codes


def _oracle_systematic_codewords(code: BchCode) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """All (message, codeword) pairs via list-based long division."""
    gen_bits = [(code.generator >> d) & 1 for d in range(code.generator.bit_length())][::-1]
    deg = len(gen_bits) - 1
    words = []
    for message in product((0, 1), repeat=code.k):
        padded = list(message) + [0] * deg
        remainder = padded.copy()
        for i in range(code.k):
            if remainder[i]:
                for j, g in enumerate(gen_bits):
                    remainder[i + j] ^= g
        codeword = tuple(list(message) + remainder[code.k :])
        words.append((message, codeword))
    return words


def naive_nearest_codeword(received, code: BchCode) -> tuple[np.ndarray, int]:
    """Minimum-distance decoding by scanning every codeword.

    Returns (message, distance to the nearest codeword); refuses codes
    longer than MAX_ORACLE_CODE_LENGTH bits.
    """
    if code.n > MAX_ORACLE_CODE_LENGTH:
        raise ValueError(f"oracle refuses codes over {MAX_ORACLE_CODE_LENGTH} bits")
    received = [int(b) for b in received]
    best_message = None
    best_distance = code.n + 1
    for message, codeword in _oracle_systematic_codewords(code):
        distance = sum(r != c for r, c in zip(received, codeword))
        if distance < best_distance:
            best_distance = distance
            best_message = message
    return np.array(best_message, dtype=np.uint8), int(best_distance)


# ---------------------------------------------------------------------------
# naive Hamming-distance statistics


def naive_intra_hd(responses) -> float:
    rows = [[int(b) for b in row] for row in responses]
    n = len(rows[0])
    total = 0.0
    for i in range(len(rows) - 1):
        hd = sum(a != b for a, b in zip(rows[i], rows[i + 1]))
        total += hd / n
    return total / (len(rows) - 1) * 100.0


def naive_inter_hd(responses) -> float:
    rows = [[int(b) for b in row] for row in responses]
    k = len(rows)
    n = len(rows[0])
    total = 0.0
    for i in range(k - 1):
        for j in range(i + 1, k):
            hd = sum(a != b for a, b in zip(rows[i], rows[j]))
            total += hd / n
    return 2.0 / (k * (k - 1)) * total * 100.0
