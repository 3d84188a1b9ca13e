"""Statistical evaluation of CRP datasets.

All percentages use fractional Hamming distances scaled by 100.  The
intra-chip statistic averages HD(R_i, R_{i+1})/n over consecutive responses
to challenges that differ in one bit; the inter-chip statistic averages
HD(R_i, R_j)/n over all device pairs for a shared challenge.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .circuit import repeated_reads
from .device import DeviceInstance, synthesize_population
from .netlist import Design, Netlist, default_ff_taps
from .response import CrpSet, collect_crps, expand_many, majority_vote, random_seed_challenges
from .seeds import derive_seed


@dataclass
class MetricsReport:
    """All headline statistics of one CRP dataset, percentages in [0, 100]."""

    uniformity_min: float
    uniformity_max: float
    uniformity_avg: float
    bit_aliasing_min: float
    bit_aliasing_max: float
    bit_aliasing_avg: float
    uniqueness: float
    reliability: float
    stable0: float
    stable1: float
    unstable: float
    intra_hd_histogram: np.ndarray
    inter_hd_histogram: np.ndarray
    challenge_mode: str = "random"

    def report_lines(self) -> list[str]:
        pairs = {
            "bit_aliasing_avg": self.bit_aliasing_avg,
            "bit_aliasing_max": self.bit_aliasing_max,
            "bit_aliasing_min": self.bit_aliasing_min,
            "challenge_mode": self.challenge_mode,
            "reliability": self.reliability,
            "robustness_stable0": self.stable0,
            "robustness_stable1": self.stable1,
            "robustness_unstable": self.unstable,
            "uniformity_avg": self.uniformity_avg,
            "uniformity_max": self.uniformity_max,
            "uniformity_min": self.uniformity_min,
            "uniqueness": self.uniqueness,
        }
        out = []
        for key in sorted(pairs):
            value = pairs[key]
            out.append(f"{key}={value}" if isinstance(value, str) else f"{key}={value:.4f}")
        return out


def _as_response_matrix(responses) -> np.ndarray:
    mat = np.asarray(responses, dtype=np.uint8)
    if mat.ndim != 2:
        raise ValueError("expected a 2-D array of equal-length responses")
    return mat


def intra_hd(responses) -> tuple[float, np.ndarray]:
    """Mean percent HD over consecutive response pairs, plus the histogram.

    The input must be ordered so that consecutive entries answer challenges
    differing in a single bit.  The histogram counts raw HD values, one
    entry per compared pair.
    """
    mat = _as_response_matrix(responses)
    if mat.shape[0] < 2:
        raise ValueError("need at least two responses for the intra-chip HD")
    n = mat.shape[1]
    dists = (mat[:-1] != mat[1:]).sum(axis=1)
    histogram = np.bincount(dists, minlength=n + 1)
    return float(dists.mean() / n * 100.0), histogram


def inter_hd(responses) -> tuple[float, np.ndarray]:
    """Mean percent HD over all device pairs for one shared challenge."""
    mat = _as_response_matrix(responses)
    k = mat.shape[0]
    if k < 2:
        raise ValueError("need at least two devices for the inter-chip HD")
    n = mat.shape[1]
    dists = np.array([(mat[i] != mat[j]).sum() for i, j in combinations(range(k), 2)])
    histogram = np.bincount(dists, minlength=n + 1)
    return float(dists.mean() / n * 100.0), histogram


def uniformity(crps: CrpSet) -> tuple[float, float, float]:
    """Per-response percentage of 1 bits; (min, max, avg) over all records."""
    fractions = crps.responses.mean(axis=3) * 100.0
    return float(fractions.min()), float(fractions.max()), float(fractions.mean())


def bit_aliasing(crps: CrpSet) -> tuple[float, float, float]:
    """Per bit position, percentage of (device, challenge) records reading 1.

    (min, max, avg) over bit positions, computed on the first repetition.
    """
    if crps.n_devices < 2:
        raise ValueError("bit aliasing needs at least two devices")
    per_position = crps.responses[:, :, 0, :].mean(axis=(0, 1)) * 100.0
    return float(per_position.min()), float(per_position.max()), float(per_position.mean())


def robustness(crps: CrpSet) -> tuple[float, float, float]:
    """(stable0, stable1, unstable) percentages over (device, challenge, bit)
    cells; a cell is stable only if every repetition agrees."""
    if crps.repetitions < 2:
        raise ValueError("robustness needs at least two repetitions")
    ones = crps.responses.sum(axis=2)
    total = ones.size
    n_stable0 = int((ones == 0).sum())
    n_stable1 = int((ones == crps.repetitions).sum())
    n_unstable = total - n_stable0 - n_stable1
    return (
        n_stable0 / total * 100.0,
        n_stable1 / total * 100.0,
        n_unstable / total * 100.0,
    )


def enrollment_responses(crps: CrpSet, reference: str = "majority") -> np.ndarray:
    """Golden response per (device, challenge): first read or a bitwise
    majority over the first (up to 11, odd) repetitions."""
    if reference == "first":
        return crps.responses[:, :, 0, :]
    if reference != "majority":
        raise ValueError(f"unknown reference {reference!r}")
    votes = min(11, crps.repetitions)
    if votes % 2 == 0:
        votes -= 1
    window = crps.responses[:, :, :votes, :]
    return (window.sum(axis=2) * 2 > votes).astype(np.uint8)


def reliability(crps: CrpSet, reference="majority") -> float:
    """100 minus the mean percent HD between each repeated read and the
    enrollment response."""
    if crps.repetitions < 2:
        raise ValueError("reliability needs at least two repetitions")
    if isinstance(reference, str):
        golden = enrollment_responses(crps, reference)
    else:
        golden = np.asarray(reference, dtype=np.uint8)
    mismatch = (crps.responses != golden[:, :, None, :]).mean()
    return float(100.0 - mismatch * 100.0)


def uniqueness(crps: CrpSet) -> float:
    """Inter-chip HD averaged over every shared challenge, in percent."""
    d = crps.n_devices
    if d < 2:
        raise ValueError("uniqueness needs at least two devices")
    first_reads = crps.responses[:, :, 0, :]
    ones = first_reads.sum(axis=0)  # (C, n) count of devices reading 1
    diff_pairs = (ones * (d - ones)).sum()
    total_pairs = d * (d - 1) / 2 * first_reads.shape[1] * first_reads.shape[2]
    return float(diff_pairs / total_pairs * 100.0)


def _inter_histogram(crps: CrpSet) -> np.ndarray:
    n = crps.response_size
    first_reads = crps.responses[:, :, 0, :]
    histogram = np.zeros(n + 1, dtype=np.int64)
    for i, j in combinations(range(crps.n_devices), 2):
        dists = (first_reads[i] != first_reads[j]).sum(axis=1)
        histogram += np.bincount(dists, minlength=n + 1)
    return histogram


def _intra_histogram(crps: CrpSet) -> np.ndarray:
    n = crps.response_size
    first_reads = crps.responses[:, :, 0, :]
    histogram = np.zeros(n + 1, dtype=np.int64)
    for d in range(crps.n_devices):
        dists = (first_reads[d, :-1] != first_reads[d, 1:]).sum(axis=1)
        histogram += np.bincount(dists, minlength=n + 1)
    return histogram


def compute_report(crps: CrpSet, reference: str = "majority") -> MetricsReport:
    """Evaluate every statistic the dataset supports; single-repetition sets
    report NaN for reliability and robustness."""
    uni = uniformity(crps)
    alias = bit_aliasing(crps) if crps.n_devices >= 2 else (float("nan"),) * 3
    uniq = uniqueness(crps) if crps.n_devices >= 2 else float("nan")
    if crps.repetitions >= 2:
        rel = reliability(crps, reference)
        rob = robustness(crps)
    else:
        rel = float("nan")
        rob = (float("nan"),) * 3
    return MetricsReport(
        uniformity_min=uni[0],
        uniformity_max=uni[1],
        uniformity_avg=uni[2],
        bit_aliasing_min=alias[0],
        bit_aliasing_max=alias[1],
        bit_aliasing_avg=alias[2],
        uniqueness=uniq,
        reliability=rel,
        stable0=rob[0],
        stable1=rob[1],
        unstable=rob[2],
        intra_hd_histogram=_intra_histogram(crps),
        inter_hd_histogram=_inter_histogram(crps),
        challenge_mode=crps.challenge_mode,
    )


# ---------------------------------------------------------------------------
# noise calibration


class CalibrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class CalibrationResult:
    sigma_noise: float
    achieved_reliability: float
    target: float
    iterations: int


def measure_reliability(
    device: DeviceInstance,
    num_challenges: int = 48,
    response_size: int = 128,
    repetitions: int = 13,
    eval_seed: int = 0,
) -> float:
    """Monte-Carlo reliability of one device: percent agreement of repeated
    reads with the majority-vote enrollment response."""
    seeds = random_seed_challenges(device.netlist.stages, num_challenges, derive_seed(eval_seed, "rel-chal"))
    expanded = expand_many(seeds, response_size).reshape(-1, device.netlist.stages)
    reads = repeated_reads(device, expanded, repetitions, derive_seed(eval_seed, "rel-reads"))
    votes = min(11, repetitions)
    if votes % 2 == 0:
        votes -= 1
    golden = majority_vote(reads[:votes])
    return float(100.0 - (reads != golden[None, :]).mean() * 100.0)


def calibrate_noise(
    target_reliability: float,
    device: DeviceInstance,
    search_bounds: tuple[float, float] = (0.0, 50.0),
    tolerance: float = 0.25,
    num_challenges: int = 48,
    repetitions: int = 13,
    eval_seed: int = 0,
    max_iterations: int = 60,
) -> CalibrationResult:
    """Bisect sigma_noise until the device's simulated reliability is within
    ``tolerance`` of the target.

    All probes reuse the same evaluation seed, so jitter draws are common
    random numbers scaled by sigma and the probe function is monotone in
    practice.  A target of 100 is satisfied exactly by sigma_noise = 0.
    """
    if not 50.0 < target_reliability <= 100.0:
        raise CalibrationError(f"target reliability must be in (50, 100], got {target_reliability}")
    if target_reliability == 100.0:
        return CalibrationResult(0.0, 100.0, 100.0, 0)

    def probe(sigma: float) -> float:
        probe_device = device.with_params(device.params.with_noise(sigma))
        return measure_reliability(
            probe_device, num_challenges, 128, repetitions, eval_seed=eval_seed
        )

    lo, hi = search_bounds
    rel_lo = probe(lo)
    if rel_lo + tolerance < target_reliability:
        raise CalibrationError(
            f"target {target_reliability}% unreachable: reliability at sigma={lo} is {rel_lo:.2f}%"
        )
    rel_hi = probe(hi)
    if rel_hi - tolerance > target_reliability:
        raise CalibrationError(
            f"target {target_reliability}% unreachable: reliability at sigma={hi} is still {rel_hi:.2f}%"
        )
    for iteration in range(1, max_iterations + 1):
        mid = 0.5 * (lo + hi)
        rel_mid = probe(mid)
        if abs(rel_mid - target_reliability) <= tolerance:
            return CalibrationResult(mid, rel_mid, target_reliability, iteration)
        if rel_mid > target_reliability:
            lo = mid
        else:
            hi = mid
    raise CalibrationError(
        f"bisection did not reach {target_reliability}% within {max_iterations} iterations"
    )


# ---------------------------------------------------------------------------
# parameter sweeps


@dataclass
class SweepRow:
    label: str
    uniqueness: float
    reliability: float
    uniqueness_by_seed: tuple[float, ...]
    reliability_by_seed: tuple[float, ...]


def _population_metrics(params, netlist, population_size, num_challenges, repetitions, response_size, seed):
    population = synthesize_population(params, netlist, population_size, derive_seed(seed, "pop"))
    crps = collect_crps(
        population,
        num_challenges,
        repetitions,
        response_size,
        derive_seed(seed, "crps"),
    )
    return uniqueness(crps), reliability(crps)


def sweep_feed_forward(
    base_netlist: Netlist,
    tap_counts,
    population_size: int = 6,
    params=None,
    num_challenges: int = 16,
    repetitions: int = 5,
    response_size: int = 128,
    seeds=(0, 1, 2, 3, 4),
) -> list[SweepRow]:
    """Uniqueness and reliability as a function of the feed-forward tap count.

    Each tap count is measured on fresh populations for every seed; taps are
    spread evenly over the chain via ``default_ff_taps``.
    """
    if base_netlist.design is Design.APUF:
        raise ValueError("the feed-forward sweep applies to the 3-line designs")
    if params is None:
        raise ValueError("explicit DelayParams (with a nonzero sigma_noise) are required")
    rows = []
    for count in tap_counts:
        taps = default_ff_taps(base_netlist.stages, int(count))
        netlist = Netlist(Design.FF_PA_PUF, base_netlist.stages, taps)
        uniq, rel = [], []
        for seed in seeds:
            u, r = _population_metrics(
                params, netlist, population_size, num_challenges, repetitions, response_size,
                derive_seed("ff-sweep", count, seed),
            )
            uniq.append(u)
            rel.append(r)
        rows.append(
            SweepRow(
                label=str(int(count)),
                uniqueness=float(np.mean(uniq)),
                reliability=float(np.mean(rel)),
                uniqueness_by_seed=tuple(uniq),
                reliability_by_seed=tuple(rel),
            )
        )
    return rows


def sweep_response_size(
    netlist: Netlist,
    sizes=(8, 16, 32, 64, 128),
    population_size: int = 4,
    params=None,
    num_challenges: int = 32,
    repetitions: int = 5,
    seeds=(0, 1, 2),
) -> list[SweepRow]:
    """Uniqueness and reliability per response size (one row per size)."""
    if params is None:
        raise ValueError("explicit DelayParams are required")
    rows = []
    for size in sizes:
        uniq, rel = [], []
        for seed in seeds:
            u, r = _population_metrics(
                params, netlist, population_size, num_challenges, repetitions, int(size),
                derive_seed("size-sweep", size, seed),
            )
            uniq.append(u)
            rel.append(r)
        rows.append(
            SweepRow(
                label=str(int(size)),
                uniqueness=float(np.mean(uniq)),
                reliability=float(np.mean(rel)),
                uniqueness_by_seed=tuple(uniq),
                reliability_by_seed=tuple(rel),
            )
        )
    return rows
