"""Likelihood tables, Bayesian phase updates and precision figures of merit."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from functools import lru_cache
from math import pi, sqrt

import numpy as np

from . import circuits, fock, trig
from ._runtime import pmap, rng_stream
from .events import DetectionEvent, all_events
from .fock import ModeState

DEFAULT_GRID = 360
DEFAULT_SHOTS = 100_000
DEFAULT_NR = 400
DEFAULT_REPS = 200
DEFAULT_POSTERIOR_POINTS = 2000
WINDOW_WIDTH = pi / 6
ANCILLA_TOL = 1e-12

# stream-key prefixes, so table shots and experiment shots never share a stream
_TABLE_STREAM = 1
_EXPERIMENT_STREAM = 2


class PosteriorUnderflowError(ArithmeticError):
    """Every grid point of the posterior has zero weight."""


class Provenance(str, enum.Enum):
    SAMPLED = "sampled"
    EXACT = "exact"


# --- likelihood tables ------------------------------------------------------


@dataclass(frozen=True)
class LikelihoodTable:
    events: tuple[DetectionEvent, ...]
    grid: np.ndarray
    coeffs: np.ndarray  # (2N+1, events)
    provenance: Provenance
    frequencies: np.ndarray | None = None  # (events, grid), sampled tables only
    shots: int = 0
    seed: int = 0

    @property
    def degree(self) -> int:
        return trig.degree_of(self.coeffs)

    def fitted(self, phis) -> np.ndarray:
        """Raw fitted curves, shape (events, len(phis)); may dip below zero."""
        return (trig.design_matrix(phis, self.degree) @ self.coeffs).T

    def evaluate(self, phis) -> np.ndarray:
        """Fitted curves clamped at zero and renormalized over events at each phi."""
        vals = np.clip(self.fitted(phis), 0.0, None)
        total = vals.sum(axis=0, keepdims=True)
        return np.divide(vals, total, out=np.zeros_like(vals), where=total > 0)

    def index(self, event: DetectionEvent) -> int:
        return self.events.index(DetectionEvent(*event))


def _sampled_frequencies(state: ModeState, t0: float, t1: float, grid, shots: int, seed: int) -> np.ndarray:
    n = state.total_photons
    prep = circuits.prep_circuit(state)
    prepared = _drop_clean_ancillas(prep.simulate(), prep.num_data_qubits)
    tail_fixed = circuits.fbs_stage(n, t0, t1) + circuits.bs_stage(n)

    def one(j):
        phase = circuits.phase_stage(n, float(grid[j]))
        out = (phase + tail_fixed).simulate(prepared)
        rows = np.zeros(len(all_events(n)))
        for b, start in enumerate(range(0, shots, circuits.SHOT_BATCH)):
            size = min(circuits.SHOT_BATCH, shots - start)
            rng = rng_stream(seed, _TABLE_STREAM, j, b)
            rows += circuits.sample_state(out, prep.num_data_qubits, size, rng)
        return rows / shots

    return np.column_stack(pmap(one, range(len(grid))))


def _drop_clean_ancillas(state, num_data_qubits: int):
    # the later stages never touch ancillas, so once prep has returned them
    # to |0> they can be dropped without changing any outcome probability
    reduced, residual = state.restrict(num_data_qubits)
    return reduced if residual < ANCILLA_TOL else state


@lru_cache(maxsize=128)
def build_likelihoods(
    state: ModeState,
    t0: float,
    t1: float,
    n: int = DEFAULT_GRID,
    shots: int = DEFAULT_SHOTS,
    seed: int = 0,
    provenance: Provenance | str = Provenance.SAMPLED,
) -> LikelihoodTable:
    """Tabulate P(D|phi) on ``n`` points of [0, 2pi) and fit each event.

    Sampled tables run the circuit ``shots`` times per grid point and fit a
    degree-N trigonometric polynomial to the frequencies R/W; exact tables
    fit the oracle values (the fit is then exact).
    """
    provenance = Provenance(provenance)
    deg = state.total_photons
    if n < 2 * deg + 1:
        raise ValueError(f"grid of {n} points cannot fix a degree-{deg} trigonometric polynomial")
    grid = 2 * pi * np.arange(n) / n
    if provenance is Provenance.EXACT:
        events, values = fock.likelihood_matrix(state, grid, t0, t1)
        return LikelihoodTable(tuple(events), grid, trig.fit(grid, values.T, deg), provenance)
    if shots < 1:
        raise ValueError("shots must be >= 1")
    freqs = _sampled_frequencies(state, t0, t1, grid, shots, seed)
    return LikelihoodTable(
        tuple(all_events(deg)), grid, trig.fit(grid, freqs.T, deg), provenance, freqs, shots, seed
    )


# --- posterior --------------------------------------------------------------


@dataclass(frozen=True)
class PosteriorDistribution:
    """Probability masses on a uniform grid; masses carry trapezoid weights,
    so plain weighted sums are trapezoid-rule integrals."""

    grid: np.ndarray
    weights: np.ndarray

    @classmethod
    def uniform(cls, lo: float, hi: float, points: int = DEFAULT_POSTERIOR_POINTS) -> PosteriorDistribution:
        if not hi > lo:
            raise ValueError(f"empty prior window [{lo}, {hi}]")
        grid = np.linspace(lo, hi, points)
        w = np.ones(points)
        w[0] = w[-1] = 0.5
        return cls(grid, w / w.sum())

    def log_weights(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.weights)

    @classmethod
    def from_log(cls, grid: np.ndarray, logw: np.ndarray) -> PosteriorDistribution:
        top = np.max(logw)
        if not np.isfinite(top):
            raise PosteriorUnderflowError("posterior vanished on the whole grid")
        w = np.exp(logw - top)
        return cls(grid, w / w.sum())


def phi_hat(p: PosteriorDistribution) -> float:
    return float(np.dot(p.weights, p.grid))


def delta_phi(p: PosteriorDistribution) -> float:
    mu = phi_hat(p)
    return float(sqrt(max(np.dot(p.weights, (p.grid - mu) ** 2), 0.0)))


def _log_likelihoods(table: LikelihoodTable, grid: np.ndarray) -> np.ndarray:
    # Normalizing each P(D|phi) over [0, 2pi) only rescales it by a constant,
    # which the per-step normalization of the posterior removes anyway.
    with np.errstate(divide="ignore"):
        return np.log(table.evaluate(grid))


def _update_counts(prior: PosteriorDistribution, loglik: np.ndarray, counts: np.ndarray) -> PosteriorDistribution:
    seen = counts > 0
    logw = prior.log_weights() + counts[seen] @ loglik[seen]
    return PosteriorDistribution.from_log(prior.grid, logw)


def bayesian_update(prior: PosteriorDistribution, table: LikelihoodTable, events) -> PosteriorDistribution:
    """Multiply in the likelihood of each event and renormalize, in log space."""
    counts = np.zeros(len(table.events))
    for ev in events:
        counts[table.index(ev)] += 1
    if not counts.any():
        return prior
    return _update_counts(prior, _log_likelihoods(table, prior.grid), counts)


# --- repeated experiments ---------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    state: ModeState
    t0: float
    t1: float
    phi_star: float
    window: tuple[float, float] | None = None
    n_r: int = DEFAULT_NR
    reps: int = DEFAULT_REPS
    grid_points: int = DEFAULT_GRID
    shots: int = DEFAULT_SHOTS
    seed: int = 0
    provenance: Provenance = Provenance.SAMPLED
    posterior_points: int = DEFAULT_POSTERIOR_POINTS
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "provenance", Provenance(self.provenance))
        if self.window is None:
            half = WINDOW_WIDTH / 2
            object.__setattr__(self, "window", (self.phi_star - half, self.phi_star + half))
        lo, hi = self.window
        if not lo <= self.phi_star <= hi:
            raise ValueError(f"phi* = {self.phi_star} outside the prior window [{lo}, {hi}]")
        for name in ("n_r", "reps", "grid_points", "shots", "posterior_points"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    def table(self) -> LikelihoodTable:
        return build_likelihoods(
            self.state, self.t0, self.t1, self.grid_points, self.shots, self.seed, self.provenance
        )

    def prior(self) -> PosteriorDistribution:
        return PosteriorDistribution.uniform(*self.window, self.posterior_points)


@dataclass(frozen=True)
class ExperimentSummary:
    config: ExperimentConfig
    delta_phis: np.ndarray = field(repr=False)
    variances: np.ndarray = field(repr=False)
    estimates: np.ndarray = field(repr=False)

    @property
    def avg_delta_phi(self) -> float:
        return float(self.delta_phis.mean())

    @property
    def std_error(self) -> float:
        m = self.delta_phis.size
        return float(self.delta_phis.std(ddof=1) / sqrt(m)) if m > 1 else 0.0

    @property
    def fisher(self) -> float:
        mean_var = float(self.variances.mean())
        return 1.0 / (self.config.n_r * mean_var) if mean_var > 0 else np.inf


def _detection_probabilities_at(cfg: ExperimentConfig):
    circ = circuits.build(cfg.state, cfg.phi_star, cfg.t0, cfg.t1)
    return circ, circ.simulate()


def run_experiments(cfg: ExperimentConfig, table: LikelihoodTable | None = None) -> ExperimentSummary:
    """``reps`` independent experiments of ``n_r`` circuit shots each at phi*."""
    table = cfg.table() if table is None else table
    prior = cfg.prior()
    loglik = _log_likelihoods(table, prior.grid)
    circ, out = _detection_probabilities_at(cfg)

    def one(m):
        rng = rng_stream(cfg.seed, _EXPERIMENT_STREAM, m)
        counts = circuits.sample_state(out, circ.num_data_qubits, cfg.n_r, rng)
        post = _update_counts(prior, loglik, counts)
        d = delta_phi(post)
        return d, d * d, phi_hat(post)

    rows = np.array(pmap(one, range(cfg.reps)))
    return ExperimentSummary(cfg, rows[:, 0], rows[:, 1], rows[:, 2])


def avg_delta_phi(cfg: ExperimentConfig) -> tuple[float, float]:
    """Monte-Carlo average of the posterior standard deviation, with its standard error."""
    s = run_experiments(cfg)
    return s.avg_delta_phi, s.std_error


def fisher_from_posterior(cfg: ExperimentConfig) -> float:
    """Fisher information read off the posterior width: 1 / (N_r * mean posterior variance)."""
    return run_experiments(cfg).fisher


# --- bounds and phi* --------------------------------------------------------


def bounds(n: int, t0: float, t1: float) -> tuple[float, float]:
    """(Heisenberg limit 1/N, standard interferometry limit for transmissivities t0, t1)."""
    if n < 1:
        raise ValueError("need at least one photon")
    for t in (t0, t1):
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"transmissivity {t} outside [0, 1]")
    hl = 1.0 / n
    if t0 == 0 or t1 == 0:
        return hl, np.inf
    return hl, (sqrt(t0) + sqrt(t1)) / (2 * sqrt(n * t0 * t1))


def delta_phi_min(fisher_information: float) -> float:
    return 1.0 / sqrt(fisher_information) if fisher_information > 0 else np.inf


def find_optimal_phistar(
    base: ExperimentConfig, candidates, rel_tol: float = 0.01
) -> tuple[float, list[tuple[float, float, float]]]:
    """Pick the candidate phi* with the smallest averaged posterior width.

    Each candidate gets a window centred on it. When the counting Fisher
    information is flat in phi (lossless NOON and mm' inputs) the widths form
    a plateau that only rises where a mirror image of phi* enters the window.
    Candidates within ``rel_tol`` plus two standard errors of the best are
    treated as tied, and the one nearest the middle of the tied range wins.

    Returns the winner and ``(phi, avg_delta_phi, std_error)`` per candidate.
    """
    candidates = sorted(float(c) for c in candidates)
    if not candidates:
        raise ValueError("no candidate phases")
    scored = []
    for phi in candidates:
        s = run_experiments(replace(base, phi_star=phi, window=None))
        scored.append((phi, s.avg_delta_phi, s.std_error))
    _, best_avg, best_se = min(scored, key=lambda r: (r[1], r[0]))
    cutoff = best_avg * (1 + rel_tol) + 2 * best_se
    tied = [phi for phi, avg, _ in scored if avg <= cutoff]
    middle = 0.5 * (tied[0] + tied[-1])
    return min(tied, key=lambda phi: (abs(phi - middle), phi)), scored
