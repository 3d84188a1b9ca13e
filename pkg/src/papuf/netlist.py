"""Topology descriptors for the simulated delay-based PUF designs."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class Design(Enum):
    """Supported circuit families."""

    APUF = "APUF"
    PA_PUF = "PA_PUF"
    FF_PA_PUF = "FF_PA_PUF"


@dataclass(frozen=True)
class Netlist:
    """Describes one mux-chain topology.

    ``stages`` is the number of multiplexer stages, which equals the number
    of challenge bits the chain consumes.  ``ff_taps`` is a tuple of
    (tap_stage, target_stage) pairs: a feed-forward arbiter samples the line
    arrival times right after ``tap_stage`` and its three output bits drive
    the per-line mux selects of ``target_stage`` instead of the challenge
    bit.  Taps are only allowed on the FF_PA_PUF design.
    """

    design: Design
    stages: int
    ff_taps: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        if not isinstance(self.design, Design):
            object.__setattr__(self, "design", Design(self.design))
        if self.stages < 1:
            raise ValueError(f"stage count must be >= 1, got {self.stages}")
        taps = tuple(sorted((int(a), int(b)) for a, b in self.ff_taps))
        object.__setattr__(self, "ff_taps", taps)
        if taps and self.design is not Design.FF_PA_PUF:
            raise ValueError(f"feed-forward taps are not allowed on {self.design.value}")
        targets = [t for _, t in taps]
        if len(set(targets)) != len(targets):
            raise ValueError("each target stage may be driven by at most one feed-forward arbiter")
        for tap, target in taps:
            if not 0 <= tap < target < self.stages:
                raise ValueError(f"invalid feed-forward tap ({tap}, {target}) for {self.stages} stages")

    @property
    def lines(self) -> int:
        """Number of parallel delay lines: 2 for APUF, 3 otherwise."""
        return 2 if self.design is Design.APUF else 3

    def describe(self) -> str:
        taps = ",".join(f"{a}:{b}" for a, b in self.ff_taps) or "none"
        return f"design={self.design.value};stages={self.stages};taps={taps}"

    @classmethod
    def parse(cls, text: str) -> "Netlist":
        fields = dict(item.split("=", 1) for item in text.split(";"))
        taps = ()
        if fields.get("taps", "none") != "none":
            taps = tuple(tuple(int(x) for x in pair.split(":")) for pair in fields["taps"].split(","))
        return cls(Design(fields["design"]), int(fields["stages"]), taps)


def default_ff_taps(stages: int, count: int) -> tuple[tuple[int, int], ...]:
    """Evenly spaced feed-forward taps: count pairs spread over the chain.

    For 64 stages and count=2 this yields ((16, 32), (32, 48)).
    """
    if count == 0:
        return ()
    if stages < count + 2:
        raise ValueError(f"cannot place {count} feed-forward taps on {stages} stages")
    taps = []
    for j in range(count):
        tap = ((j + 1) * stages) // (count + 2)
        target = ((j + 2) * stages) // (count + 2)
        taps.append((tap, target))
    return tuple(taps)
