"""Exact two-mode Fock-space model of the lossy Mach-Zehnder interferometer.

This is the reference the qubit circuits are checked against. Conventions:

* ``ModeState.amplitudes[m]`` multiplies ``|m>_l |N-m>_u`` (m photons in the
  lower arm).
* The phase shift sits in the upper arm: ``c_m -> exp(i (N-m) phi) c_m``.
* Loss is a beam splitter coupling each arm to an empty environment mode,
  ``a^dag -> sqrt(t) a^dag + i sqrt(1-t) e^dag``, followed by a partial trace.
* The output beam splitter maps ``a_l^dag -> (a_D0^dag + i a_D1^dag)/sqrt2`` and
  ``a_u^dag -> (i a_D0^dag + a_D1^dag)/sqrt2``.

After loss, a sector with ``n`` surviving photons is a matrix over
``|j>_l |n-j>_u`` for j = 0..n; after the output beam splitter the same index
counts photons at D0.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from math import comb, factorial, sqrt

import numpy as np

from . import trig
from .events import DetectionEvent, all_events

NORM_TOL = 1e-10
PROB_FLOOR = 1e-12
EIG_FLOOR = 1e-12


class StateError(ValueError):
    pass


@dataclass(frozen=True)
class ModeState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).ravel()
        if amps.size < 2:
            raise StateError("a mode state needs at least one photon (two amplitudes)")
        norm = np.vdot(amps, amps).real
        if abs(norm - 1.0) > NORM_TOL:
            raise StateError(f"amplitudes not normalized (sum |c|^2 = {norm:.12g})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def total_photons(self) -> int:
        return self.amplitudes.size - 1

    def __eq__(self, other):
        if not isinstance(other, ModeState):
            return NotImplemented
        return self.amplitudes.shape == other.amplitudes.shape and np.array_equal(
            self.amplitudes, other.amplitudes
        )

    def __hash__(self):
        return hash(self.amplitudes.tobytes())


@dataclass(frozen=True)
class DensityState:
    """Loss-mixed state, split by how many photons each arm lost.

    ``sectors[(k0, k1)]`` is the (unnormalized) density matrix of the light
    when k0 photons left the lower arm and k1 the upper one.
    """

    total_photons: int
    sectors: dict = field(default_factory=dict)

    def trace(self) -> float:
        return float(sum(np.trace(r).real for r in self.sectors.values()))

    def blocks(self) -> dict[int, np.ndarray]:
        """Sum sectors with the same number of surviving photons.

        Which arm lost a photon is recorded only in the environment, so the
        state of the light alone is this block-diagonal sum.
        """
        out: dict[int, np.ndarray] = {}
        for (k0, k1), rho in self.sectors.items():
            n = self.total_photons - k0 - k1
            out[n] = out.get(n, 0) + rho
        return dict(sorted(out.items(), reverse=True))

    def map_sectors(self, fn) -> DensityState:
        return DensityState(self.total_photons, {k: fn(k, r) for k, r in self.sectors.items()})


class ObservableKind(str, enum.Enum):
    PARITY = "parity"
    HUVER_A = "huver_A"


@dataclass(frozen=True)
class ObservableSpec:
    kind: ObservableKind
    m: int = 0
    m_prime: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", ObservableKind(self.kind))
        if self.kind is ObservableKind.HUVER_A and not self.m > self.m_prime >= 0:
            raise StateError(f"huver_A needs m > m' >= 0, got m={self.m}, m'={self.m_prime}")

    @classmethod
    def parity(cls) -> ObservableSpec:
        return cls(ObservableKind.PARITY)

    @classmethod
    def huver(cls, m: int, m_prime: int) -> ObservableSpec:
        return cls(ObservableKind.HUVER_A, m, m_prime)


# --- input states -----------------------------------------------------------


def noon(n: int) -> ModeState:
    if n < 1:
        raise StateError("NOON state needs N >= 1")
    c = np.zeros(n + 1, dtype=complex)
    c[0] = c[n] = 1 / sqrt(2)
    return ModeState(c)


def mmprime(m: int, m_prime: int) -> ModeState:
    if not m > m_prime >= 0:
        raise StateError(f"mm' state needs m > m' >= 0, got ({m}, {m_prime})")
    c = np.zeros(m + m_prime + 1, dtype=complex)
    c[m] = c[m_prime] = 1 / sqrt(2)
    return ModeState(c)


def holland_burnett(n: int) -> ModeState:
    if n < 2 or n % 2:
        raise StateError(f"Holland-Burnett state needs an even N >= 2, got {n}")
    c = np.zeros(n + 1, dtype=complex)
    half = n // 2
    for k in range(half + 1):
        c[2 * k] = sqrt(factorial(2 * k) * factorial(n - 2 * k)) / (2**half * factorial(k) * factorial(half - k))
    return ModeState(c)


def make_input(kind: str, *params) -> ModeState:
    """Build a NOON, mm' or Holland-Burnett input, or a custom one from a coefficient vector.

    >>> make_input("noon", 2).amplitudes.round(4)
    array([0.7071+0.j, 0.    +0.j, 0.7071+0.j])
    """
    kind = kind.lower()
    if kind == "noon":
        return noon(*params)
    if kind in ("mmprime", "mm"):
        return mmprime(*params)
    if kind == "hb":
        return holland_burnett(*params)
    if kind == "custom":
        (coeffs,) = params
        return ModeState(coeffs)
    raise StateError(f"unknown input state kind {kind!r}")


# --- two-mode linear optics -------------------------------------------------


def _transform_pair(amps: dict, i: int, j: int, u) -> dict:
    """Apply a linear map of creation operators to modes ``i`` and ``j``.

    ``u[out][in]`` sends ``a_in^dag -> sum_out u[out][in] a_out^dag``; states
    are dicts from occupation tuples to amplitudes.
    """
    out: dict = {}
    for occ, amp in amps.items():
        p, q = occ[i], occ[j]
        norm = amp / sqrt(factorial(p) * factorial(q))
        for x in range(p + 1):
            cx = comb(p, x) * u[0][0] ** x * u[1][0] ** (p - x)
            for y in range(q + 1):
                c = norm * cx * comb(q, y) * u[0][1] ** y * u[1][1] ** (q - y)
                if c == 0:
                    continue
                na, nb = x + y, p + q - x - y
                key = list(occ)
                key[i], key[j] = na, nb
                key = tuple(key)
                out[key] = out.get(key, 0) + c * sqrt(factorial(na) * factorial(nb))
    return out


def _loss_matrix(t: float) -> np.ndarray:
    return np.array([[sqrt(t), 1j * sqrt(1 - t)], [1j * sqrt(1 - t), sqrt(t)]])


BS_MATRIX = np.array([[1, 1j], [1j, 1]]) / sqrt(2)


def output_bs_unitary(n: int) -> np.ndarray:
    """The output beam splitter restricted to the n-photon subspace."""
    v = np.zeros((n + 1, n + 1), dtype=complex)
    for j in range(n + 1):
        for (a, _), amp in _transform_pair({(j, n - j): 1.0}, 0, 1, BS_MATRIX).items():
            v[a, j] += amp
    return v


# --- channel steps ----------------------------------------------------------


def apply_phase(state: ModeState, phi: float) -> ModeState:
    n = state.total_photons
    upper = n - np.arange(n + 1)
    phases = np.exp(1j * upper * np.mod(phi, 2 * np.pi))
    return ModeState(state.amplitudes * phases)


def apply_loss(state: ModeState, t0: float, t1: float) -> DensityState:
    for name, t in (("t0", t0), ("t1", t1)):
        if not 0.0 <= t <= 1.0:
            raise StateError(f"{name}={t} is not a transmissivity in [0, 1]")
    n = state.total_photons
    # modes: lower, upper, env-lower, env-upper
    amps = {(m, n - m, 0, 0): c for m, c in enumerate(state.amplitudes) if c != 0}
    amps = _transform_pair(amps, 0, 2, _loss_matrix(t0))
    amps = _transform_pair(amps, 1, 3, _loss_matrix(t1))

    vectors: dict = {}
    for (nl, nu, k0, k1), amp in amps.items():
        if abs(amp) == 0:
            continue
        vec = vectors.setdefault((k0, k1), np.zeros(nl + nu + 1, dtype=complex))
        vec[nl] += amp
    sectors = {k: np.outer(v, v.conj()) for k, v in sorted(vectors.items()) if np.vdot(v, v).real > 0}
    return DensityState(n, sectors)


def apply_final_bs(state: DensityState) -> DensityState:
    def rotate(key, rho):
        v = output_bs_unitary(rho.shape[0] - 1)
        return v @ rho @ v.conj().T

    return state.map_sectors(rotate)


def pre_bs_state(state: ModeState, phi: float, t0: float, t1: float) -> DensityState:
    """State of the light inside the interferometer, just before the output beam splitter."""
    return apply_loss(apply_phase(state, phi), t0, t1)


def readout(state: DensityState) -> dict[DetectionEvent, float]:
    probs = {ev: 0.0 for ev in all_events(state.total_photons)}
    for rho in state.sectors.values():
        n = rho.shape[0] - 1
        for n0, p in enumerate(np.diag(rho).real):
            probs[DetectionEvent(n0, n - n0)] += float(p)
    return probs


def exact_likelihood(state: ModeState, phi: float, t0: float, t1: float) -> dict[DetectionEvent, float]:
    """P(D(n0, n1) | phi) for every event, including the impossible ones (as 0)."""
    return readout(apply_final_bs(pre_bs_state(state, phi, t0, t1)))


def likelihood_matrix(state: ModeState, phis, t0: float, t1: float) -> tuple[list[DetectionEvent], np.ndarray]:
    """Exact likelihoods stacked as an (events, phis) array."""
    events = all_events(state.total_photons)
    out = np.empty((len(events), np.size(phis)))
    for col, phi in enumerate(np.atleast_1d(phis)):
        probs = exact_likelihood(state, float(phi), t0, t1)
        out[:, col] = [probs[ev] for ev in events]
    return events, out


def likelihood_coefficients(state: ModeState, t0: float, t1: float) -> tuple[list[DetectionEvent], np.ndarray]:
    """Trigonometric coefficients of every event's likelihood, shape (2N+1, events)."""
    n = state.total_photons
    nodes = trig.sample_points(n)
    events, values = likelihood_matrix(state, nodes, t0, t1)
    return events, trig.fit(nodes, values.T, n)


# --- observables ------------------------------------------------------------


def observable_matrix(obs: ObservableSpec, n: int) -> np.ndarray:
    """Operator on the n-photon block, basis |j>_l |n-j>_u."""
    op = np.zeros((n + 1, n + 1), dtype=complex)
    if obs.kind is ObservableKind.PARITY:
        # i^n keeps the operator Hermitian on every photon-number block
        for k in range(n + 1):
            op[k, n - k] = 1j**n * (-1) ** k
        return op
    m, mp = obs.m, obs.m_prime
    for r in range(mp + 1):
        for s in range(mp + 1):
            if m + mp - r - s != n:
                continue
            op[mp - r, m - r] += 1
            op[m - r, mp - r] += 1
    return op


def _expect(obs: ObservableSpec, rho_blocks: dict[int, np.ndarray]) -> tuple[float, float]:
    first = second = 0.0
    for n, rho in rho_blocks.items():
        op = observable_matrix(obs, n)
        first += np.trace(op @ rho).real
        second += np.trace(op @ op @ rho).real
    return first, second


def expectation(obs: ObservableSpec, state: ModeState, phi: float, t0: float, t1: float) -> tuple[float, float]:
    """Mean and variance of ``obs`` on the state before the output beam splitter."""
    if obs.kind is ObservableKind.HUVER_A and obs.m + obs.m_prime != state.total_photons:
        raise StateError(
            f"huver_A({obs.m},{obs.m_prime}) acts on {obs.m + obs.m_prime} photons, state has {state.total_photons}"
        )
    mean, second = _expect(obs, pre_bs_state(state, phi, t0, t1).blocks())
    return mean, max(second - mean**2, 0.0)


def error_propagation(obs: ObservableSpec, state: ModeState, phi, t0: float, t1: float) -> np.ndarray:
    """sqrt(Var O) / |d<O>/dphi| at each phi (inf where the slope vanishes)."""
    n = state.total_photons
    nodes = trig.sample_points(n)
    means = np.array([expectation(obs, state, p, t0, t1)[0] for p in nodes])
    slope_coeffs = trig.derivative(trig.fit(nodes, means, n))
    phis = np.atleast_1d(np.asarray(phi, dtype=float))
    out = np.empty(phis.size)
    for i, p in enumerate(phis):
        _, var = expectation(obs, state, p, t0, t1)
        slope = abs(trig.evaluate(slope_coeffs, p)[0])
        out[i] = np.sqrt(var) / slope if slope > 1e-12 else np.inf
    return out


# --- Fisher information -----------------------------------------------------


def classical_fisher_curve(state: ModeState, phis, t0: float, t1: float) -> np.ndarray:
    """Fisher information of photon counting behind the output beam splitter, at each phi.

    Each likelihood is fitted exactly as a degree-N trigonometric polynomial
    and differentiated analytically. Where P < 1e-12 the term uses its limit:
    a probability can only touch zero quadratically, so P'^2/P -> 2 P''.
    """
    _, coeffs = likelihood_coefficients(state, t0, t1)
    d1 = trig.derivative(coeffs)
    p = trig.evaluate(coeffs, phis)
    dp = trig.evaluate(d1, phis)
    ddp = trig.evaluate(trig.derivative(d1), phis)
    safe = np.where(p > PROB_FLOOR, p, 1.0)
    terms = np.where(p > PROB_FLOOR, dp**2 / safe, 2 * np.clip(ddp, 0.0, None))
    return terms.sum(axis=1)


def classical_fisher(state: ModeState, phi: float, t0: float, t1: float) -> float:
    return float(classical_fisher_curve(state, [phi], t0, t1)[0])


def classical_fisher_fd(state: ModeState, phi: float, t0: float, t1: float, h: float = 1e-4) -> float:
    """Same quantity with a central finite difference for the slope."""
    events = all_events(state.total_photons)
    p = exact_likelihood(state, phi, t0, t1)
    hi = exact_likelihood(state, phi + h, t0, t1)
    lo = exact_likelihood(state, phi - h, t0, t1)
    total = 0.0
    for ev in events:
        if p[ev] > PROB_FLOOR:
            total += ((hi[ev] - lo[ev]) / (2 * h)) ** 2 / p[ev]
    return total


def _block_qfi(rho: np.ndarray, drho: np.ndarray) -> float:
    lam, vecs = np.linalg.eigh(rho)
    d = vecs.conj().T @ drho @ vecs
    denom = lam[:, None] + lam[None, :]
    keep = denom > EIG_FLOOR
    return float(2 * np.sum(np.abs(d[keep]) ** 2 / denom[keep]))


def qfi(state: ModeState, phi: float, t0: float, t1: float) -> float:
    """Quantum Fisher information of the light before the output beam splitter.

    The phase acts as exp(i phi n_u) and commutes with the loss channel, so
    d(rho)/d(phi) = i [n_u, rho] on each photon-number block.
    """
    total = 0.0
    for n, rho in pre_bs_state(state, phi, t0, t1).blocks().items():
        gen = np.diag(n - np.arange(n + 1)).astype(complex)
        drho = 1j * (gen @ rho - rho @ gen)
        try:
            total += _block_qfi(rho, drho)
        except np.linalg.LinAlgError as exc:
            raise ArithmeticError(f"eigendecomposition failed on the {n}-photon block") from exc
    return total
