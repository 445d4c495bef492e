"""Dense state-vector simulator for a small fixed gate set.

Qubits are numbered from 1. Qubit k is bit k-1 of the amplitude index, so
qubit 1 is the least significant bit. Bitstrings are written qubit 1 first,
which is the reverse of the usual binary reading of the index.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import reduce

import numpy as np

NORM_TOL = 1e-10


class GateKind(str, enum.Enum):
    X = "X"
    Z = "Z"
    H = "H"
    U3 = "U3"
    CX = "CX"
    CZ = "CZ"
    CH = "CH"
    CU3 = "CU3"
    CCX = "CCX"


_N_CONTROLS = {
    GateKind.X: 0, GateKind.Z: 0, GateKind.H: 0, GateKind.U3: 0,
    GateKind.CX: 1, GateKind.CZ: 1, GateKind.CH: 1, GateKind.CU3: 1,
    GateKind.CCX: 2,
}
_ANGLED = {GateKind.U3, GateKind.CU3}


def u3_matrix(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array(
        [[c, -np.exp(1j * lam) * s], [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]],
        dtype=complex,
    )


X_MATRIX = np.array([[0, 1], [1, 0]], dtype=complex)
Z_MATRIX = np.array([[1, 0], [0, -1]], dtype=complex)
H_MATRIX = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


@dataclass(frozen=True)
class GateOp:
    kind: GateKind
    target: int
    controls: tuple[int, ...] = ()
    angles: tuple[float, ...] = ()

    def __post_init__(self):
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "controls", tuple(int(c) for c in self.controls))
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        if len(self.controls) != _N_CONTROLS[kind]:
            raise ValueError(f"{kind.value} takes {_N_CONTROLS[kind]} control(s), got {len(self.controls)}")
        if kind in _ANGLED and len(self.angles) != 3:
            raise ValueError(f"{kind.value} needs (theta, phi, lambda)")
        if kind not in _ANGLED and self.angles:
            raise ValueError(f"{kind.value} takes no angles")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"control and target qubits must be distinct: {self.qubits}")
        if min(self.qubits) < 1:
            raise ValueError("qubit indices start at 1")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.controls + (self.target,)

    def matrix(self) -> np.ndarray:
        """The 2x2 matrix applied to the target when all controls are 1."""
        base = self.kind.value.lstrip("C") or "X"
        if base == "X":
            return X_MATRIX
        if base == "Z":
            return Z_MATRIX
        if base == "H":
            return H_MATRIX
        return u3_matrix(*self.angles)

    def inverse(self) -> GateOp:
        if self.kind in _ANGLED:
            theta, phi, lam = self.angles
            return GateOp(self.kind, self.target, self.controls, (-theta, -lam, -phi))
        return self

    def to_line(self) -> str:
        parts = [self.kind.value, ",".join(str(q) for q in self.qubits)]
        if self.angles:
            parts.append(",".join(repr(a) for a in self.angles))
        return " ".join(parts)

    @classmethod
    def from_line(cls, line: str) -> GateOp:
        fields = line.split()
        kind = GateKind(fields[0])
        qubits = [int(q) for q in fields[1].split(",")]
        angles = tuple(float(a) for a in fields[2].split(",")) if len(fields) > 2 else ()
        return cls(kind, qubits[-1], tuple(qubits[:-1]), angles)


@dataclass(frozen=True)
class QubitState:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).ravel()
        if amps.size != 2**self.num_qubits:
            raise ValueError(f"{self.num_qubits} qubits need {2 ** self.num_qubits} amplitudes, got {amps.size}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zeros(cls, num_qubits: int) -> QubitState:
        amps = np.zeros(2**num_qubits, dtype=complex)
        amps[0] = 1
        return cls(num_qubits, amps)

    @classmethod
    def from_bitstring(cls, bits: str) -> QubitState:
        amps = np.zeros(2 ** len(bits), dtype=complex)
        amps[bits_to_index(bits)] = 1
        return cls(len(bits), amps)

    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def extend(self, extra: int) -> QubitState:
        """Append ``extra`` qubits in |0> (they become the highest-numbered qubits)."""
        amps = np.zeros(2 ** (self.num_qubits + extra), dtype=complex)
        amps[: self.amplitudes.size] = self.amplitudes
        return QubitState(self.num_qubits + extra, amps)

    def restrict(self, num_qubits: int) -> tuple[QubitState, float]:
        """Project the qubits above ``num_qubits`` onto |0>; returns (state, residual norm lost)."""
        kept = self.amplitudes[: 2**num_qubits]
        residual = max(self.norm() - float(np.vdot(kept, kept).real), 0.0)
        return QubitState(num_qubits, kept), residual


def bits_to_index(bits: str) -> int:
    return sum(1 << k for k, b in enumerate(bits) if b == "1")


def index_to_bits(index: int, num_qubits: int) -> str:
    return "".join("1" if index >> k & 1 else "0" for k in range(num_qubits))


def _axis(q: int, n: int) -> int:
    # C-order reshape to (2,)*n puts the most significant bit on axis 0
    return n - q


def apply(state: QubitState, gate: GateOp) -> QubitState:
    n = state.num_qubits
    if max(gate.qubits) > n:
        raise ValueError(f"gate {gate.to_line()} addresses qubit {max(gate.qubits)} of a {n}-qubit state")
    psi = np.array(state.amplitudes).reshape((2,) * n)
    index = [slice(None)] * n
    for c in gate.controls:
        index[_axis(c, n)] = 1
    sub = psi[tuple(index)]
    # target axis inside the sliced view
    t_axis = _axis(gate.target, n) - sum(1 for c in gate.controls if _axis(c, n) < _axis(gate.target, n))
    moved = np.moveaxis(sub, t_axis, 0)
    (m00, m01), (m10, m11) = gate.matrix()
    lo = moved[0].copy()
    hi = moved[1]
    moved[0] = m00 * lo + m01 * hi
    moved[1] = m10 * lo + m11 * hi
    return QubitState(n, psi.reshape(-1))


def run(gates, state: QubitState) -> QubitState:
    return reduce(apply, gates, state)


def fidelity(a: QubitState, b: QubitState) -> float:
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"cannot compare {a.num_qubits}- and {b.num_qubits}-qubit states")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def _checked_probabilities(state: QubitState) -> np.ndarray:
    probs = state.probabilities()
    total = probs.sum()
    if abs(total - 1.0) > NORM_TOL:
        raise ValueError(f"state is not normalized (norm^2 = {total:.12g})")
    return probs / total


def sample_indices(state: QubitState, rng: np.random.Generator, shots: int) -> np.ndarray:
    probs = _checked_probabilities(state)
    return rng.choice(probs.size, size=shots, p=probs)


def sample_counts(state: QubitState, rng: np.random.Generator, shots: int) -> np.ndarray:
    """Per-basis-state tallies of ``shots`` measurements (same law as iid draws)."""
    return rng.multinomial(shots, _checked_probabilities(state))


def sample(state: QubitState, rng: np.random.Generator) -> str:
    """One computational-basis measurement, as a bitstring (qubit 1 first)."""
    return index_to_bits(int(sample_indices(state, rng, 1)[0]), state.num_qubits)
