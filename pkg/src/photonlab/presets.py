"""Named input states and their default true phase."""

from __future__ import annotations

import re
from dataclasses import dataclass
from math import pi

from .fock import ModeState, StateError, holland_burnett, mmprime, noon

# Found with estimation.find_optimal_phistar at t = 0.5 (symmetric); the
# optimum drifts with loss but the window stays unambiguous around it.
HB_PHI_STAR = pi / 6


@dataclass(frozen=True)
class NamedState:
    name: str
    state: ModeState
    phi_star: float
    huver: tuple[int, int] | None = None  # (m, m') for mm' states

    @property
    def slug(self) -> str:
        return re.sub(r"[^A-Za-z0-9]+", "_", self.name).strip("_")


def parse_state(text: str) -> NamedState:
    """Accepts ``6::0``, ``5::1``, ``HB(6)``, ``noon:6``, ``mm:4,2`` or ``hb:6``."""
    raw = text.strip()
    t = raw.lower().replace(" ", "")
    m = re.fullmatch(r"(\d+)::(\d+)", t) or re.fullmatch(r"mm(?:prime)?:(\d+),(\d+)", t)
    if m:
        a, b = int(m[1]), int(m[2])
        if b == 0:
            return NamedState(f"{a}::0", noon(a), pi / (2 * a))
        return NamedState(f"{a}::{b}", mmprime(a, b), pi / (2 * (a - b)), (a, b))
    m = re.fullmatch(r"noon:?(\d+)", t)
    if m:
        n = int(m[1])
        return NamedState(f"{n}::0", noon(n), pi / (2 * n))
    m = re.fullmatch(r"hb(?::|\()?(\d+)\)?", t)
    if m:
        n = int(m[1])
        return NamedState(f"HB({n})", holland_burnett(n), HB_PHI_STAR)
    raise StateError(f"cannot parse input state {raw!r}")


BENCHMARK_STATES = ("6::0", "5::1", "4::2", "HB(6)")


def benchmark_states() -> list[NamedState]:
    return [parse_state(s) for s in BENCHMARK_STATES]
