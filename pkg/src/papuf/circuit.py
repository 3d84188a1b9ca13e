"""Arrival-time propagation and arbiter decisions for all three designs.

Line order is (T, C, B) for the 3-line designs and (top, bottom) for the
classical 2-line arbiter PUF.  A mux select of 0 keeps each line on itself;
a select of 1 applies the cyclic rotation T->C->B->T (a plain swap for the
2-line chain), i.e. with select 1 output T reads line B, C reads T and B
reads C.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .device import NOISE_TAG, TIE_TAG, DeviceInstance
from .netlist import Netlist
from .seeds import SEED_MASK, derive_seed

# Source line per output line under the select=1 permutation.
ROT3 = np.array([2, 0, 1])
ROT2 = np.array([1, 0])

# Strict arrival orderings (fastest line first) that produce response 1:
# exactly the cyclic rotations of (T, C, B).  The other three orderings give
# 0, so the arbiter output is balanced 3/6 over strict orderings.
CANONICAL_PRIORITY_TABLE: dict[tuple[str, str, str], int] = {
    ("T", "C", "B"): 1,
    ("C", "B", "T"): 1,
    ("B", "T", "C"): 1,
    ("T", "B", "C"): 0,
    ("B", "C", "T"): 0,
    ("C", "T", "B"): 0,
}


def decision_lut_from_table(table: dict[tuple[str, str, str], int]) -> np.ndarray:
    """Compile an ordering->bit table into a lookup over the three pairwise
    flip-flop bits (qT, qC, qB) = (T<C, C<B, B<T), indexed qT*4+qC*2+qB.

    The two index patterns 000 and 111 cannot arise from a strict ordering
    (they encode a cyclic contradiction); they only appear when ties are
    randomly resolved and are completed here as XNOR of the three bits,
    which is what the flip-flop/mux realization produces.
    """
    lut = np.empty(8, dtype=np.uint8)
    for idx in range(8):
        lut[idx] = 1 ^ ((idx >> 2) ^ (idx >> 1) ^ idx) & 1
    for order, bit in table.items():
        rank = {name: pos for pos, name in enumerate(order)}
        q0 = int(rank["T"] < rank["C"])
        q1 = int(rank["C"] < rank["B"])
        q2 = int(rank["B"] < rank["T"])
        lut[(q0 << 2) | (q1 << 1) | q2] = bit
    return lut


DEFAULT_DECISION_LUT = decision_lut_from_table(CANONICAL_PRIORITY_TABLE)


def _tie_rng(tie_seed: int, point: int) -> np.random.Generator:
    return np.random.default_rng([tie_seed & SEED_MASK, TIE_TAG, point])


def _noise_rng(eval_seed: int, point: int) -> np.random.Generator:
    return np.random.default_rng([eval_seed & SEED_MASK, NOISE_TAG, point])


def simple_arbiter(t_data: float, t_clock: float, metastability_window: float = 0.0, tie_seed: int = 0) -> int:
    """Latch decision between two racing edges: 1 if the data edge wins.

    When the arrival gap is within the metastability window (including the
    exact tie at window 0) the output is a fair random bit derived from
    tie_seed.
    """
    if abs(t_data - t_clock) <= metastability_window:
        return int(_tie_rng(tie_seed, 0).integers(0, 2))
    return 1 if t_data < t_clock else 0


def _pairwise_bits(arrivals: Sequence[float], metastability_window: float, tie_seed: int) -> tuple[int, int, int]:
    t, c, b = (float(v) for v in arrivals)
    pairs = ((t, c), (c, b), (b, t))
    bits = []
    for k, (first, second) in enumerate(pairs):
        if abs(first - second) <= metastability_window:
            bits.append(int(_tie_rng(tie_seed, k).integers(0, 2)))
        else:
            bits.append(1 if first < second else 0)
    return tuple(bits)


def priority_arbiter(
    arrivals: Sequence[float],
    metastability_window: float = 0.0,
    tie_seed: int = 0,
    decision_lut: np.ndarray | None = None,
) -> int:
    """Three-input arbiter: output a pure function of the arrival ordering.

    Three flip-flops race the pairs (T,C), (C,B), (B,T); the mux/XOR stage
    maps the bit triple through ``decision_lut`` (default: 1 exactly on the
    cyclic rotations of T,C,B).  Pass a different LUT, e.g. from
    ``decision_lut_from_table``, to swap in an alternative wiring.
    """
    lut = DEFAULT_DECISION_LUT if decision_lut is None else decision_lut
    q0, q1, q2 = _pairwise_bits(arrivals, metastability_window, tie_seed)
    return int(lut[(q0 << 2) | (q1 << 1) | q2])


def feed_forward_arbiter(
    arrivals: Sequence[float],
    metastability_window: float = 0.0,
    tie_seed: int = 0,
) -> tuple[int, int, int]:
    """Tap arbiter emitting (F0, F1, F2) = (T<C, C<B, B<T).

    F0 drives the T-line mux select at the target stage, F1 the C line and
    F2 the B line.
    """
    return _pairwise_bits(arrivals, metastability_window, tie_seed)


def _cmp_vec(first: np.ndarray, second: np.ndarray, window: float, tie_bits: np.ndarray) -> np.ndarray:
    wins = (first < second).astype(np.uint8)
    return np.where(np.abs(first - second) <= window, tie_bits, wins)


def _validate_challenges(netlist: Netlist, challenges: np.ndarray) -> np.ndarray:
    challenges = np.asarray(challenges)
    if challenges.ndim != 2 or challenges.shape[1] != netlist.stages:
        raise ValueError(
            f"challenge shape {challenges.shape} does not match {netlist.stages} stages"
        )
    return np.ascontiguousarray(challenges, dtype=np.uint8)


def propagate_many(
    device: DeviceInstance,
    challenges: np.ndarray,
    eval_seed: int = 0,
    decision_lut: np.ndarray | None = None,
) -> np.ndarray:
    """Evaluate a batch of challenges in one pass; returns (N,) response bits.

    Each row is one independent evaluation: per-evaluation jitter and tie
    bits are drawn row-wise from streams derived from eval_seed, one stream
    per observation point (every feed-forward tap plus the terminal
    arbiter).  The whole batch is deterministic under (device, challenges,
    eval_seed); standard-normal draws are scaled by sigma_noise, so rescaling
    delays, noise and window together never changes a response bit.
    """
    netlist = device.netlist
    challenges = _validate_challenges(netlist, challenges)
    n_eval = challenges.shape[0]
    lines = netlist.lines
    sigma = device.params.sigma_noise
    window = device.params.metastability_window
    delay = device.delay_table
    rot = ROT3 if lines == 3 else ROT2
    lut = DEFAULT_DECISION_LUT if decision_lut is None else decision_lut

    taps_at_stage: dict[int, list[tuple[int, int]]] = {}
    for point, (tap, target) in enumerate(netlist.ff_taps, start=1):
        taps_at_stage.setdefault(tap, []).append((point, target))
    pending: dict[int, np.ndarray] = {}

    times = np.zeros((n_eval, lines))
    line_idx = np.arange(lines)
    for i in range(netlist.stages):
        rotated = times[:, rot]
        if i in pending:
            sel = pending.pop(i)  # (N, 3) per-line selects from a feed-forward arbiter
            times = np.where(sel.astype(bool), rotated, times) + delay[i][sel, line_idx]
        else:
            sel = challenges[:, i]
            times = np.where((sel == 1)[:, None], rotated, times) + delay[i][sel]
        for point, target in taps_at_stage.get(i, ()):
            sampled = times + sigma * _noise_rng(eval_seed, point).standard_normal((n_eval, lines))
            tie = _tie_rng(eval_seed, point).integers(0, 2, size=(n_eval, 3), dtype=np.uint8)
            pending[target] = np.stack(
                [
                    _cmp_vec(sampled[:, 0], sampled[:, 1], window, tie[:, 0]),
                    _cmp_vec(sampled[:, 1], sampled[:, 2], window, tie[:, 1]),
                    _cmp_vec(sampled[:, 2], sampled[:, 0], window, tie[:, 2]),
                ],
                axis=1,
            )

    final = times + sigma * _noise_rng(eval_seed, 0).standard_normal((n_eval, lines))
    return _arbitrate(final, window, lut, _tie_rng(eval_seed, 0), lines)


def _arbitrate(
    final: np.ndarray,
    window: float,
    lut: np.ndarray,
    tie_rng: np.random.Generator,
    lines: int,
) -> np.ndarray:
    n_eval = final.shape[0]
    if lines == 2:
        tie = tie_rng.integers(0, 2, size=(n_eval, 1), dtype=np.uint8)
        return _cmp_vec(final[:, 0], final[:, 1], window, tie[:, 0])
    tie = tie_rng.integers(0, 2, size=(n_eval, 3), dtype=np.uint8)
    q0 = _cmp_vec(final[:, 0], final[:, 1], window, tie[:, 0])
    q1 = _cmp_vec(final[:, 1], final[:, 2], window, tie[:, 1])
    q2 = _cmp_vec(final[:, 2], final[:, 0], window, tie[:, 2])
    return lut[(q0.astype(np.intp) << 2) | (q1.astype(np.intp) << 1) | q2]


def propagate(
    device: DeviceInstance,
    challenge: np.ndarray,
    eval_seed: int = 0,
    decision_lut: np.ndarray | None = None,
) -> int:
    """Evaluate one challenge; see ``propagate_many`` for the noise model."""
    challenge = np.asarray(challenge)
    if challenge.ndim != 1:
        raise ValueError("propagate expects a single challenge vector")
    return int(propagate_many(device, challenge[None, :], eval_seed, decision_lut)[0])


def clean_arrival_times(device: DeviceInstance, challenges: np.ndarray) -> np.ndarray:
    """Noise-free terminal arrival times, (N, lines).

    Only valid for netlists without feed-forward taps, where the data path
    is a pure function of the challenge.
    """
    netlist = device.netlist
    if netlist.ff_taps:
        raise ValueError("clean arrival times are undefined for feed-forward netlists")
    challenges = _validate_challenges(netlist, challenges)
    rot = ROT3 if netlist.lines == 3 else ROT2
    times = np.zeros((challenges.shape[0], netlist.lines))
    delay = device.delay_table
    for i in range(netlist.stages):
        sel = challenges[:, i]
        times = np.where((sel == 1)[:, None], times[:, rot], times) + delay[i][sel]
    return times


def repeated_reads(
    device: DeviceInstance,
    challenges: np.ndarray,
    repetitions: int,
    eval_seed: int = 0,
    chunk: int = 64,
) -> np.ndarray:
    """Evaluate the same challenge batch ``repetitions`` times; (R, N) bits.

    Tapless designs reuse the cached clean arrival times and only redraw
    jitter per repetition, which makes million-read experiments cheap.
    Feed-forward designs fall back to one full propagation per repetition.
    Deterministic under (device, challenges, repetitions, eval_seed) and
    independent of the chunk size.
    """
    netlist = device.netlist
    if netlist.ff_taps:
        challenges = _validate_challenges(netlist, challenges)
        return np.stack(
            [
                propagate_many(device, challenges, derive_seed(eval_seed, "rep", r))
                for r in range(repetitions)
            ]
        )
    clean = clean_arrival_times(device, challenges)
    n_eval, lines = clean.shape
    sigma = device.params.sigma_noise
    window = device.params.metastability_window
    noise_rng = _noise_rng(eval_seed, 0)
    tie_rng = _tie_rng(eval_seed, 0)
    out = np.empty((repetitions, n_eval), dtype=np.uint8)
    done = 0
    while done < repetitions:
        size = min(chunk, repetitions - done)
        jitter = sigma * noise_rng.standard_normal((size, n_eval, lines))
        final = clean[None, :, :] + jitter
        flat = final.reshape(size * n_eval, lines)
        out[done : done + size] = _arbitrate(
            flat, window, DEFAULT_DECISION_LUT, tie_rng, lines
        ).reshape(size, n_eval)
        done += size
    return out
