from __future__ import annotations

from typing import NamedTuple


class DetectionEvent(NamedTuple):
    """``n0`` photons counted at D0 and ``n1`` at D1."""

    n0: int
    n1: int

    @property
    def detected(self) -> int:
        return self.n0 + self.n1

    def lost(self, total_photons: int) -> int:
        return total_photons - self.n0 - self.n1

    def __str__(self) -> str:
        return f"D({self.n0},{self.n1})"


def all_events(total_photons: int) -> list[DetectionEvent]:
    """Every outcome with n0 + n1 <= N, most photons detected first."""
    out = []
    for detected in range(total_photons, -1, -1):
        for n0 in range(detected, -1, -1):
            out.append(DetectionEvent(n0, detected - n0))
    return out
