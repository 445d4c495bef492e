"""Mode representation <-> one qubit pair per photon.

Photon i lives on qubits (2i-1, 2i). Inside the interferometer a pair reads

    00  lower arm          11  upper arm
    01  lost, lower arm    10  lost, upper arm

and after the output beam splitter 00 / 11 mean "heading to D0 / D1".
"""

from __future__ import annotations

from itertools import combinations
from math import comb, sqrt

import numpy as np

from .events import DetectionEvent
from .fock import ModeState, StateError
from .qubits import QubitState, bits_to_index

SUBSPACE_TOL = 1e-8

PAIR_CODES = {"00": "D0", "11": "D1", "01": "lost", "10": "lost"}


def pair_bitstrings(total_photons: int, lower: int) -> list[str]:
    """The C(N, m) distinct arrangements of m lower-arm and N-m upper-arm photons."""
    out = []
    for chosen in combinations(range(total_photons), lower):
        pairs = ["11"] * total_photons
        for i in chosen:
            pairs[i] = "00"
        out.append("".join(pairs))
    return out


def mode_to_qubit(state: ModeState) -> QubitState:
    n = state.total_photons
    amps = np.zeros(2 ** (2 * n), dtype=complex)
    for m, c in enumerate(state.amplitudes):
        if c == 0:
            continue
        weight = c / sqrt(comb(n, m))
        for bits in pair_bitstrings(n, m):
            amps[bits_to_index(bits)] = weight
    return QubitState(2 * n, amps)


def qubit_to_mode(state: QubitState) -> ModeState:
    """Inverse of :func:`mode_to_qubit` for states in the bosonic no-loss subspace."""
    if state.num_qubits % 2:
        raise StateError("a photon encoding has an even number of qubits")
    n = state.num_qubits // 2
    coeffs = np.zeros(n + 1, dtype=complex)
    inside = 0.0
    for m in range(n + 1):
        idx = [bits_to_index(b) for b in pair_bitstrings(n, m)]
        block = state.amplitudes[idx]
        # projection onto the normalized symmetric vector of this sector
        coeffs[m] = block.sum() / sqrt(len(idx))
        inside += abs(coeffs[m]) ** 2
    outside = state.norm() - inside
    if outside > SUBSPACE_TOL:
        raise StateError(f"state has weight {outside:.3g} outside the bosonic-symmetric subspace")
    return ModeState(coeffs / sqrt(inside))


def decode_bitstring(bits: str) -> DetectionEvent:
    if len(bits) % 2:
        raise ValueError(f"bitstring of odd length {len(bits)}")
    n0 = n1 = 0
    for i in range(0, len(bits), 2):
        pair = bits[i : i + 2]
        if pair == "00":
            n0 += 1
        elif pair == "11":
            n1 += 1
        elif pair not in ("01", "10"):
            raise ValueError(f"not a bitstring: {bits!r}")
    return DetectionEvent(n0, n1)


def event_lookup(num_data_qubits: int) -> tuple[np.ndarray, np.ndarray]:
    """Per amplitude index (data qubits only): (n0, n1) decoded from its bits."""
    idx = np.arange(2**num_data_qubits)
    n0 = np.zeros(idx.size, dtype=int)
    n1 = np.zeros(idx.size, dtype=int)
    for p in range(num_data_qubits // 2):
        a = idx >> (2 * p) & 1
        b = idx >> (2 * p + 1) & 1
        n0 += (a == 0) & (b == 0)
        n1 += (a == 1) & (b == 1)
    return n0, n1
