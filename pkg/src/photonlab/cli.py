"""Command-line front end.

    photonlab likelihood  --state 6::0 --t0 0.5 --exact --out out/
    photonlab sweep       --t-grid 0.2,0.5,0.9 --loss symmetric --out out/
    photonlab compare-schemes --state 5::1 --state 4::2 --t-grid 1,0.7,0.5

Settings come from built-in defaults, then an optional INI file
(``--config``, section ``[photonlab]``), then command-line flags.
Every run writes its CSV files plus ``manifest.json`` into ``--out``.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from math import pi
from pathlib import Path

import numpy as np

from . import __version__, estimation, fock
from .estimation import ExperimentConfig, Provenance
from .presets import BENCHMARK_STATES, NamedState, parse_state

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


class SchemaError(ArithmeticError):
    pass


@dataclass
class Settings:
    states: list[str] = field(default_factory=lambda: list(BENCHMARK_STATES))
    t0: float | None = None
    t1: float | None = None
    t_grid: list[float] | None = None
    loss: str = "symmetric"
    phi_star: str | None = None
    nr: int = estimation.DEFAULT_NR
    reps: int = estimation.DEFAULT_REPS
    shots: int = estimation.DEFAULT_SHOTS
    grid: int = estimation.DEFAULT_GRID
    posterior_points: int = estimation.DEFAULT_POSTERIOR_POINTS
    scheme_points: int = 240
    seed: int = 0
    provenance: str = Provenance.SAMPLED.value
    out: str = "out"

    def loss_settings(self, default: list[float]) -> list[tuple[float, float]]:
        if self.t_grid:
            ts = self.t_grid
        elif self.t0 is not None or self.t1 is not None:
            t0 = 1.0 if self.t0 is None else self.t0
            t1 = t0 if self.t1 is None else self.t1
            return [(t0, t1)]
        else:
            ts = default
        if self.loss == "symmetric":
            return [(t, t) for t in ts]
        return [(1.0, t) for t in ts]


def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [float(x) for x in str(text).replace(";", ",").split(",") if x.strip()]


_CASTS = {
    "states": lambda v: [s.strip() for s in (v if isinstance(v, list) else str(v).split(";")) if s.strip()],
    "t0": float,
    "t1": float,
    "t_grid": _floats,
    "loss": str,
    "phi_star": str,
    "nr": int,
    "reps": int,
    "shots": int,
    "grid": int,
    "posterior_points": int,
    "scheme_points": int,
    "seed": int,
    "provenance": str,
    "out": str,
}


def resolve_settings(args: argparse.Namespace) -> Settings:
    values: dict = {}
    if args.config:
        parser = configparser.ConfigParser()
        try:
            with open(args.config) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        section = parser["photonlab"] if parser.has_section("photonlab") else parser[parser.default_section]
        for key, raw in section.items():
            key = key.replace("-", "_")
            if key not in _CASTS:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = raw
    for f in fields(Settings):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    try:
        cast = {k: _CASTS[k](v) for k, v in values.items()}
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad setting: {exc}") from exc
    s = Settings(**cast)
    _validate(s)
    return s


def _validate(s: Settings):
    if s.loss not in ("symmetric", "asymmetric"):
        raise ConfigError("loss must be 'symmetric' or 'asymmetric'")
    if s.provenance not in ("sampled", "exact"):
        raise ConfigError("provenance must be 'sampled' or 'exact'")
    for t in [s.t0, s.t1, *(s.t_grid or [])]:
        if t is not None and not 0.0 <= t <= 1.0:
            raise ConfigError(f"transmissivity {t} outside [0, 1]")
    for name in ("nr", "reps", "shots", "grid", "posterior_points", "scheme_points"):
        if getattr(s, name) < 1:
            raise ConfigError(f"{name} must be >= 1")
    if s.phi_star not in (None, "auto"):
        try:
            float(s.phi_star)
        except ValueError as exc:
            raise ConfigError(f"phi_star must be a number or 'auto', got {s.phi_star!r}") from exc
    try:
        for name in s.states:
            parse_state(name)
    except fock.StateError as exc:
        raise ConfigError(str(exc)) from exc


# --- CSV schemas ------------------------------------------------------------

# column -> (type, lower, upper, empty allowed); bounds apply to floats
_P = ("float", 0.0, 1.0 + 1e-9, False)
SCHEMAS = {
    "likelihood": {
        "state": ("str", None, None, False),
        "t0": _P,
        "t1": _P,
        "event_n0": ("int", 0, None, False),
        "event_n1": ("int", 0, None, False),
        "phi": ("float", 0.0, 2 * pi, False),
        "p_sampled": ("float", 0.0, 1.0 + 1e-9, True),
        "p_fitted": _P,
        "p_exact": ("float", -1e-12, 1.0 + 1e-9, False),
    },
    "sweep": {
        "state": ("str", None, None, False),
        "t0": _P,
        "t1": _P,
        "phi_star": ("float", None, None, False),
        "avg_delta_phi": ("float", 0.0, None, False),
        "std_error": ("float", 0.0, None, False),
        "F_posterior": ("float", 0.0, math.inf, False),
        "F_exact": ("float", -1e-9, None, False),
        "F_Q": ("float", -1e-9, None, False),
        "delta_phi_min": ("float", 0.0, math.inf, False),
        "SIL": ("float", 0.0, math.inf, False),
        "HL": ("float", 0.0, 1.0, False),
    },
    "compare_schemes": {
        "state": ("str", None, None, False),
        "t0": _P,
        "t1": _P,
        "dphi_counting": ("float", 0.0, math.inf, False),
        "dphi_parity": ("float", 0.0, math.inf, False),
        "dphi_huver": ("float", 0.0, math.inf, True),
        "SIL": ("float", 0.0, math.inf, False),
        "HL": ("float", 0.0, 1.0, False),
    },
}


def validate_rows(kind: str, rows: list[dict]):
    schema = SCHEMAS[kind]
    for i, row in enumerate(rows):
        if list(row) != list(schema):
            raise SchemaError(f"{kind} row {i}: columns {list(row)} != {list(schema)}")
        for col, (typ, lo, hi, nullable) in schema.items():
            v = row[col]
            if v is None:
                if not nullable:
                    raise SchemaError(f"{kind} row {i}: {col} is empty")
                continue
            if typ == "str":
                if not isinstance(v, str) or not v:
                    raise SchemaError(f"{kind} row {i}: {col} must be a non-empty string")
                continue
            if typ == "int" and not isinstance(v, (int, np.integer)):
                raise SchemaError(f"{kind} row {i}: {col} must be an integer")
            x = float(v)
            if math.isnan(x):
                raise SchemaError(f"{kind} row {i}: {col} is NaN")
            if (lo is not None and x < lo) or (hi is not None and x > hi):
                raise SchemaError(f"{kind} row {i}: {col}={x} outside [{lo}, {hi}]")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    x = float(v)
    if x == 0:
        x = 0.0  # drop the sign of -0.0
    return repr(x)


def render_csv(kind: str, rows: list[dict]) -> str:
    validate_rows(kind, rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(SCHEMAS[kind]))
    for row in rows:
        w.writerow([_cell(row[c]) for c in SCHEMAS[kind]])
    return buf.getvalue()


# --- commands ---------------------------------------------------------------


def _phi_star(s: Settings, named: NamedState, t0: float, t1: float) -> float:
    if s.phi_star is None:
        return named.phi_star
    if s.phi_star != "auto":
        return float(s.phi_star)
    base = _experiment(s, named, t0, t1, named.phi_star)
    candidates = named.phi_star + np.linspace(-pi / 24, pi / 24, 9)
    best, _ = estimation.find_optimal_phistar(base, candidates)
    return best


def _experiment(s: Settings, named: NamedState, t0: float, t1: float, phi_star: float) -> ExperimentConfig:
    return ExperimentConfig(
        named.state, t0, t1, phi_star,
        n_r=s.nr, reps=s.reps, grid_points=s.grid, shots=s.shots, seed=s.seed,
        provenance=Provenance(s.provenance), posterior_points=s.posterior_points, label=named.name,
    )


def likelihood_rows(s: Settings, named: NamedState, t0: float, t1: float) -> list[dict]:
    table = estimation.build_likelihoods(named.state, t0, t1, s.grid, s.shots, s.seed, Provenance(s.provenance))
    events, exact = fock.likelihood_matrix(named.state, table.grid, t0, t1)
    fitted = table.evaluate(table.grid)
    rows = []
    for e, ev in enumerate(events):
        for j, phi in enumerate(table.grid):
            rows.append({
                "state": named.name, "t0": t0, "t1": t1,
                "event_n0": ev.n0, "event_n1": ev.n1, "phi": phi,
                "p_sampled": None if table.frequencies is None else table.frequencies[e, j],
                "p_fitted": fitted[e, j],
                "p_exact": exact[e, j],
            })
    return rows


def cmd_likelihood(s: Settings) -> dict[str, str]:
    out = {}
    for named in map(parse_state, s.states):
        for t0, t1 in s.loss_settings([0.5]):
            name = f"likelihood_{named.slug}_t0-{t0:g}_t1-{t1:g}_{s.provenance}.csv"
            out[name] = render_csv("likelihood", likelihood_rows(s, named, t0, t1))
    return out


def sweep_row(s: Settings, named: NamedState, t0: float, t1: float) -> dict:
    phi_star = _phi_star(s, named, t0, t1)
    summary = estimation.run_experiments(_experiment(s, named, t0, t1, phi_star))
    f_exact = fock.classical_fisher(named.state, phi_star, t0, t1)
    hl, sil = estimation.bounds(named.state.total_photons, t0, t1)
    return {
        "state": named.name, "t0": t0, "t1": t1, "phi_star": phi_star,
        "avg_delta_phi": summary.avg_delta_phi, "std_error": summary.std_error,
        "F_posterior": summary.fisher, "F_exact": f_exact,
        "F_Q": fock.qfi(named.state, phi_star, t0, t1),
        "delta_phi_min": estimation.delta_phi_min(f_exact),
        "SIL": sil, "HL": hl,
    }


def cmd_sweep(s: Settings) -> dict[str, str]:
    grid = [round(0.1 * k, 10) for k in range(10, -1, -1)]
    rows = [
        sweep_row(s, named, t0, t1)
        for t0, t1 in s.loss_settings(grid)
        for named in map(parse_state, s.states)
    ]
    return {f"sweep_{s.loss}.csv": render_csv("sweep", rows)}


def scheme_row(s: Settings, named: NamedState, t0: float, t1: float) -> dict:
    phis = pi * np.arange(1, s.scheme_points + 1) / s.scheme_points
    st = named.state
    counting = fock.classical_fisher_curve(st, phis, t0, t1).max()
    parity = fock.error_propagation(fock.ObservableSpec.parity(), st, phis, t0, t1).min()
    huver = None
    if named.huver is not None:
        huver = fock.error_propagation(fock.ObservableSpec.huver(*named.huver), st, phis, t0, t1).min()
    hl, sil = estimation.bounds(st.total_photons, t0, t1)
    return {
        "state": named.name, "t0": t0, "t1": t1,
        "dphi_counting": estimation.delta_phi_min(counting),
        "dphi_parity": parity, "dphi_huver": huver,
        "SIL": sil, "HL": hl,
    }


def cmd_compare_schemes(s: Settings) -> dict[str, str]:
    grid = [round(0.1 * k, 10) for k in range(10, 0, -1)]
    rows = [
        scheme_row(s, named, t0, t1)
        for t0, t1 in s.loss_settings(grid)
        for named in map(parse_state, s.states)
    ]
    return {f"compare_schemes_{s.loss}.csv": render_csv("compare_schemes", rows)}


COMMANDS = {
    "likelihood": cmd_likelihood,
    "sweep": cmd_sweep,
    "compare-schemes": cmd_compare_schemes,
}


# --- entry point ------------------------------------------------------------


def write_outputs(s: Settings, command: str, files: dict[str, str], started: float) -> Path:
    out_dir = Path(s.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for name, text in files.items():
        data = text.encode()
        (out_dir / name).write_bytes(data)
        records.append({"path": name, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)})
    manifest = {
        "tool": "photonlab",
        "version": __version__,
        "command": command,
        "config": asdict(s),
        "seed": s.seed,
        "started_unix": round(started, 3),
        "elapsed_s": round(time.time() - started, 3),
        "outputs": records,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="photonlab", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="INI file with a [photonlab] section")
    p.add_argument("--state", dest="states", action="append", help="input state, e.g. 6::0, 5::1, HB(6); repeatable")
    p.add_argument("--t0", type=float, help="lower-arm transmissivity")
    p.add_argument("--t1", type=float, help="upper-arm transmissivity")
    p.add_argument("--t-grid", dest="t_grid", help="comma-separated transmissivities to sweep")
    p.add_argument("--loss", choices=["symmetric", "asymmetric"], help="how --t-grid is applied (asymmetric: t0 = 1)")
    p.add_argument("--phi-star", dest="phi_star", help="true phase in radians, or 'auto'")
    p.add_argument("--nr", type=int, help="shots per simulated experiment (N_r)")
    p.add_argument("--reps", type=int, help="experiments averaged per point (M)")
    p.add_argument("--shots", type=int, help="shots per likelihood grid point (W)")
    p.add_argument("--grid", type=int, help="likelihood grid points on [0, 2pi)")
    p.add_argument("--posterior-points", dest="posterior_points", type=int)
    p.add_argument("--scheme-points", dest="scheme_points", type=int, help="phase grid for compare-schemes")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="provenance", action="store_const", const="exact",
                      help="likelihood tables from the exact Fock model")
    mode.add_argument("--sampled", dest="provenance", action="store_const", const="sampled",
                      help="likelihood tables fitted to circuit samples (default)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    started = time.time()
    try:
        settings = resolve_settings(args)
        files = COMMANDS[args.command](settings)
        manifest = write_outputs(settings, args.command, files, started)
    except ConfigError as exc:
        print(f"photonlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"photonlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"photonlab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {len(files)} file(s); manifest at {manifest}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
