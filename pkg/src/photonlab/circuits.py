"""Qubit circuits for the interferometer: state preparation, phase, loss, output beam splitter.

State preparation follows the two-level-rotation scheme: start from the
largest basis term, then for each following term route it next to the
current one with a CNOT ladder (a Gray-code walk between the two
bitstrings), apply a controlled real rotation that leaves the right weight
behind, and walk back. A final pass fixes complex phases term by term.

Multi-controlled gates are expanded into Toffoli cascades on ancilla qubits
numbered after the data qubits. The controls of each rotation are pruned to
a set of bits that separates the active basis state from every other basis
state currently holding amplitude. The result is exact on |0...0> input,
which is the only input the preparation ever sees, and keeps the ancilla
count small.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import acos, pi, sqrt

import numpy as np

from . import encoding
from ._runtime import rng_stream
from .events import DetectionEvent, all_events
from .fock import ModeState, StateError
from .qubits import GateKind, GateOp, QubitState, run, sample_counts

AMPLITUDE_FLOOR = 1e-14
PHASE_FLOOR = 1e-13
SHOT_BATCH = 20_000

STAGES = ("prep", "phase", "fbs", "bs")


@dataclass(frozen=True)
class Circuit:
    num_data_qubits: int
    num_ancilla: int = 0
    gates: tuple[GateOp, ...] = ()
    stages: tuple[tuple[str, int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "stages", tuple(tuple(s) for s in self.stages))
        limit = self.num_qubits
        for g in self.gates:
            if max(g.qubits) > limit:
                raise ValueError(f"gate {g.to_line()} outside a {limit}-qubit circuit")

    @property
    def num_qubits(self) -> int:
        return self.num_data_qubits + self.num_ancilla

    def stage(self, name: str) -> tuple[GateOp, ...]:
        for label, start, stop in self.stages:
            if label == name:
                return self.gates[start:stop]
        raise KeyError(name)

    def __add__(self, other: Circuit) -> Circuit:
        if other.num_data_qubits != self.num_data_qubits:
            raise ValueError("cannot join circuits over different data registers")
        offset = len(self.gates)
        stages = self.stages + tuple((n, a + offset, b + offset) for n, a, b in other.stages)
        return Circuit(
            self.num_data_qubits,
            max(self.num_ancilla, other.num_ancilla),
            self.gates + other.gates,
            stages,
        )

    def simulate(self, initial: QubitState | None = None) -> QubitState:
        state = QubitState.zeros(self.num_qubits) if initial is None else initial
        return run(self.gates, state)

    def to_text(self) -> str:
        lines = [f"# data {self.num_data_qubits} ancilla {self.num_ancilla}"]
        lines += [f"# stage {name} {start} {stop}" for name, start, stop in self.stages]
        lines += [g.to_line() for g in self.gates]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> Circuit:
        data = ancilla = 0
        stages, gates = [], []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                fields = line[1:].split()
                if fields[0] == "data":
                    data, ancilla = int(fields[1]), int(fields[3])
                elif fields[0] == "stage":
                    stages.append((fields[1], int(fields[2]), int(fields[3])))
                continue
            gates.append(GateOp.from_line(line))
        return cls(data, ancilla, gates, stages)


# --- multi-controlled gates -------------------------------------------------


@dataclass
class _Emitter:
    """Collects gates and tracks how many ancillas the cascades needed."""

    num_data: int
    gates: list = field(default_factory=list)
    ancillas: int = 0

    def ancilla(self, k: int) -> int:
        self.ancillas = max(self.ancillas, k)
        return self.num_data + k

    def x(self, q: int):
        self.gates.append(GateOp(GateKind.X, q))

    def cx(self, c: int, t: int):
        self.gates.append(GateOp(GateKind.CX, t, (c,)))

    def controlled(self, controls: dict[int, int], target: int, angles: tuple | None = None):
        """X (``angles`` None) or U3(angles) on ``target`` when every control q equals controls[q]."""
        flips = [q for q, v in sorted(controls.items()) if v == 0]
        for q in flips:
            self.x(q)
        self._positive(sorted(controls), target, angles)
        for q in flips:
            self.x(q)

    def _positive(self, ctrl: list[int], target: int, angles):
        single = GateKind.X if angles is None else GateKind.U3
        pair = GateKind.CX if angles is None else GateKind.CU3
        args = () if angles is None else tuple(angles)
        k = len(ctrl)
        if k == 0:
            self.gates.append(GateOp(single, target, (), args))
            return
        if k == 1:
            self.gates.append(GateOp(pair, target, (ctrl[0],), args))
            return
        if k == 2 and angles is None:
            self.gates.append(GateOp(GateKind.CCX, target, tuple(ctrl)))
            return
        # AND of the controls accumulated along a chain of ancillas
        n_and = k - 1 if angles is not None else k - 2
        chain = []
        prev = ctrl[0]
        for j in range(n_and):
            anc = self.ancilla(j + 1)
            chain.append(GateOp(GateKind.CCX, anc, (prev, ctrl[j + 1])))
            prev = anc
        self.gates.extend(chain)
        if angles is None:
            self.gates.append(GateOp(GateKind.CCX, target, (ctrl[-1], prev)))
        else:
            self.gates.append(GateOp(GateKind.CU3, target, (prev,), args))
        self.gates.extend(reversed(chain))


def _bit(x: int, q: int) -> int:
    return x >> (q - 1) & 1


def _separating_bits(ref: int, others, allowed: list[int]) -> list[int]:
    """Greedy small set of qubits on which ``ref`` differs from every state in ``others``."""
    remaining = list(others)
    chosen: list[int] = []
    while remaining:
        best = None
        for q in allowed:
            if q in chosen:
                continue
            hits = sum(_bit(y, q) != _bit(ref, q) for y in remaining)
            key = (hits, _bit(ref, q), -q)
            if hits and (best is None or key > best[0]):
                best = (key, q)
        if best is None:
            raise StateError("basis states cannot be separated on the allowed qubits")
        q = best[1]
        chosen.append(q)
        remaining = [y for y in remaining if _bit(y, q) == _bit(ref, q)]
    return chosen


def _ladder_image(x: int, pivot: int, targets: list[int]) -> int:
    if _bit(x, pivot):
        for d in targets:
            x ^= 1 << (d - 1)
    return x


# --- state preparation ------------------------------------------------------


def synthesize_input(target: QubitState) -> Circuit:
    """Gate sequence taking |0...0> to ``target`` (up to a global phase)."""
    nq = target.num_qubits
    qubits = list(range(1, nq + 1))
    amps = target.amplitudes
    support = [int(i) for i in np.flatnonzero(np.abs(amps) > AMPLITUDE_FLOOR)]
    if not support:
        raise StateError("target state has no nonzero amplitude")
    terms = sorted(support, key=lambda i: (-abs(amps[i]), i))
    mags = np.abs(amps[terms])
    mags = mags / np.linalg.norm(mags)

    em = _Emitter(nq)
    for q in qubits:
        if _bit(terms[0], q):
            em.x(q)

    active = [terms[0]]
    remainder = 1.0
    for i in range(len(terms) - 1):
        s, t = terms[i], terms[i + 1]
        diff = [q for q in qubits if _bit(s, q) != _bit(t, q)]
        others = [y for y in active if y != s]
        plan = None
        for pivot in diff:
            rest = [d for d in diff if d != pivot]
            img_s = _ladder_image(s, pivot, rest)
            img_others = [_ladder_image(y, pivot, rest) for y in others]
            ctrl = _separating_bits(img_s, img_others, [q for q in qubits if q != pivot])
            if plan is None or len(ctrl) < len(plan[2]):
                plan = (pivot, rest, ctrl, img_s)
        pivot, rest, ctrl, img_s = plan

        cos_half = min(1.0, mags[i] / remainder) if remainder > 0 else 1.0
        theta = 2 * acos(cos_half)
        if _bit(img_s, pivot):
            theta = -theta
        for d in rest:
            em.cx(pivot, d)
        em.controlled({q: _bit(img_s, q) for q in ctrl}, pivot, (theta, 0.0, 0.0))
        for d in reversed(rest):
            em.cx(pivot, d)
        remainder = sqrt(max(remainder**2 - mags[i] ** 2, 0.0))
        active.append(t)

    _fix_phases(em, terms, amps, qubits)
    return Circuit(nq, em.ancillas, em.gates, (("prep", 0, len(em.gates)),))


def _fix_phases(em: _Emitter, terms: list[int], amps: np.ndarray, qubits: list[int]):
    ref_phase = np.angle(amps[terms[0]])
    for k in terms[1:]:
        lam = float(np.angle(amps[k] * np.exp(-1j * ref_phase)))
        if abs(lam) < PHASE_FLOOR:
            continue
        plan = None
        for b in qubits:
            others = [y for y in terms if y != k and _bit(y, b) == _bit(k, b)]
            ctrl = _separating_bits(k, others, [q for q in qubits if q != b])
            key = (len(ctrl), 1 - _bit(k, b))
            if plan is None or key < plan[0]:
                plan = (key, b, ctrl)
        _, b, ctrl = plan
        flip = not _bit(k, b)
        if flip:
            em.x(b)
        em.controlled({q: _bit(k, q) for q in ctrl}, b, (0.0, 0.0, lam))
        if flip:
            em.x(b)


# --- interferometer stages --------------------------------------------------


def _pairs(n: int):
    return [(2 * i - 1, 2 * i) for i in range(1, n + 1)]


def _check_t(name: str, t: float):
    if not 0.0 <= t <= 1.0:
        raise StateError(f"{name}={t} is not a transmissivity in [0, 1]")


def coupler_angles(t: float) -> tuple[float, float, float]:
    """U3 angles of [[sqrt t, i sqrt(1-t)], [i sqrt(1-t), sqrt t]]."""
    return (2 * acos(sqrt(t)), pi / 2, -pi / 2)


def _fragment(n: int, name: str, gates) -> Circuit:
    gates = list(gates)
    return Circuit(2 * n, 0, gates, ((name, 0, len(gates)),))


def phase_stage(n: int, phi: float) -> Circuit:
    # valid while every pair is still 00 or 11
    return _fragment(n, "phase", [GateOp(GateKind.U3, a, (), (0.0, 0.0, phi)) for a, _ in _pairs(n)])


def fbs_stage(n: int, t0: float, t1: float) -> Circuit:
    _check_t("t0", t0)
    _check_t("t1", t1)
    gates = []
    for a, b in _pairs(n):
        gates += [
            GateOp(GateKind.X, a),
            GateOp(GateKind.CU3, b, (a,), coupler_angles(t0)),
            GateOp(GateKind.X, a),
            GateOp(GateKind.CU3, b, (a,), coupler_angles(t1)),
        ]
    return _fragment(n, "fbs", gates)


def bs_stage(n: int) -> Circuit:
    # 01 / 10 (lost photons) must pass through untouched
    gates = []
    for a, b in _pairs(n):
        gates += [
            GateOp(GateKind.CX, b, (a,)),
            GateOp(GateKind.X, b),
            GateOp(GateKind.CU3, a, (b,), coupler_angles(0.5)),
            GateOp(GateKind.X, b),
            GateOp(GateKind.CX, b, (a,)),
        ]
    return _fragment(n, "bs", gates)


@lru_cache(maxsize=64)
def prep_circuit(state: ModeState) -> Circuit:
    return synthesize_input(encoding.mode_to_qubit(state))


def build(state: ModeState, phi: float, t0: float, t1: float) -> Circuit:
    n = state.total_photons
    return prep_circuit(state) + phase_stage(n, phi) + fbs_stage(n, t0, t1) + bs_stage(n)


# --- sampling ---------------------------------------------------------------


@lru_cache(maxsize=8)
def _lookup(num_data_qubits: int):
    return encoding.event_lookup(num_data_qubits)


def detection_probabilities(state: QubitState, num_data_qubits: int) -> dict[DetectionEvent, float]:
    """Born probabilities of each D(n0, n1), summed over ancilla values."""
    n0, n1 = _lookup(num_data_qubits)
    probs = state.probabilities().reshape(-1, 2**num_data_qubits).sum(axis=0)
    n = num_data_qubits // 2
    flat = np.bincount(n0 * (n + 1) + n1, weights=probs, minlength=(n + 1) ** 2)
    return {ev: float(flat[ev.n0 * (n + 1) + ev.n1]) for ev in all_events(n)}


def sample_state(state: QubitState, num_data_qubits: int, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Measure ``shots`` times and return per-event counts in ``all_events`` order."""
    n = num_data_qubits // 2
    n0, n1 = _lookup(num_data_qubits)
    per_basis = sample_counts(state, rng, shots).reshape(-1, 2**num_data_qubits).sum(axis=0)
    flat = np.bincount(n0 * (n + 1) + n1, weights=per_basis, minlength=(n + 1) ** 2).astype(np.int64)
    return np.array([flat[ev.n0 * (n + 1) + ev.n1] for ev in all_events(n)])


def sample_detections(circuit: Circuit, shots: int, seed: int, *, state: QubitState | None = None) -> dict[DetectionEvent, int]:
    """Run the circuit ``shots`` times and tally the decoded events.

    Shots are drawn in fixed-size batches, batch ``b`` on the stream
    ``(seed, b)``, so counts do not depend on how batches are scheduled.
    Pass ``state`` to reuse an already simulated output.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if state is None:
        state = circuit.simulate()
    n = circuit.num_data_qubits // 2
    counts = np.zeros(len(all_events(n)), dtype=np.int64)
    for b, start in enumerate(range(0, shots, SHOT_BATCH)):
        size = min(SHOT_BATCH, shots - start)
        counts += sample_state(state, circuit.num_data_qubits, size, rng_stream(seed, b))
    return {ev: int(c) for ev, c in zip(all_events(n), counts) if c}
