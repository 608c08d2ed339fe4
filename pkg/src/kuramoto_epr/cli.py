"""Command-line driver.

    kuramoto-epr simulate   --dist delta:0 --K 1 --init first_harmonic:1e-4 --N 8192 --t-end 8
    kuramoto-epr spectrum   --dist delta:1 --K 4
    kuramoto-epr chsh       --angles 0,22.5,45,67.5
    kuramoto-epr trajectory --omega1 1 --Omega 1 --mode derived --frequency-scale 1e15
    kuramoto-epr sweep      --task spectrum --param K --values 1:5:9 --dist lorentzian:0,0.5

Every subcommand also reads ``--config FILE`` (``key = value`` lines,
``#`` comments); flags given on the command line override the file.
Exit status: 0 success, 1 invalid configuration, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__
from .bellchsh import CLASSICAL_BOUND, ChshScenario, deterministic_bound
from .ensemble import FrequencyDistribution, OscillatorEnsemble, parse_init
from .meanfield import FitRejected, NumericalError, SimConfig, fit_growth_rate, simulate
from .spectrum import (
    CoherenceTrajectoryParams,
    QuadratureError,
    coherence_trajectory,
    spectrum_delta,
    spectrum_general,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2

TIME_CONVENTION = (
    "t_seconds = t / frequency_scale, with frequency_scale read as the angular frequency omega1 in rad/s "
    "(nondimensional time unit 1/omega1)"
)


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


DEFAULTS: dict[str, dict[str, Any]] = {
    "simulate": {
        "N": 1024, "K": 1.0, "dt": 0.01, "t_end": 10.0, "dist": "delta:0", "init": "uniform_random",
        "stride": 1, "fit_window": None, "record_phases": False, "seed": 0,
    },
    "spectrum": {"dist": "delta:1", "K": 4.0, "solver": "auto", "frame": "comoving", "interval": "1e-6,100"},
    "chsh": {"angles": "0,22.5,45,67.5", "n_events": 1_000_000, "seed": 0},
    "trajectory": {
        "omega1": 1.0, "Omega": None, "alpha": 0.0, "mode": "derived", "t_end": 10.0, "n_points": 1001,
        "frequency_scale": None,
    },
    "sweep": {
        "task": "spectrum", "param": "K", "values": "1:5:9", "workers": 0,
        "N": 1024, "K": 1.0, "dt": 0.01, "t_end": 10.0, "dist": "delta:0", "init": "first_harmonic:1e-4",
        "frame": "comoving", "interval": "1e-6,100", "n_events": 0, "seed": 0,
    },
}

_BOOL_KEYS = {"record_phases"}


# ---------------------------------------------------------------- config


def read_config_file(path: str) -> dict[str, str]:
    """Flat ``key = value`` file; blank lines and ``#`` comments ignored."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _coerce(key: str, value: Any, default: Any) -> Any:
    if value is None or not isinstance(value, str):
        return value
    if key in _BOOL_KEYS:
        low = value.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {value!r}")
    if value.lower() in ("none", "null", ""):
        return None
    if isinstance(default, bool):
        return value.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        try:
            number = float(value)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {value!r}") from None
        if number != int(number):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return int(number)
    if isinstance(default, float) or key in ("Omega", "frequency_scale"):
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {value!r}") from None
    return value


def resolve_config(command: str, file_values: dict, flag_values: dict) -> dict:
    defaults = DEFAULTS[command]
    unknown = sorted(set(file_values) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {', '.join(unknown)}")
    merged = dict(defaults)
    merged.update(file_values)
    merged.update({k: v for k, v in flag_values.items() if k in defaults})
    return {k: _coerce(k, v, defaults[k]) for k, v in merged.items()}


def _floats(text: str, key: str, count: Optional[int] = None) -> list[float]:
    try:
        values = [float(v) for v in str(text).split(",")]
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {text!r}") from None
    if count is not None and len(values) != count:
        raise ConfigError(f"{key}: expected {count} values, got {len(values)}")
    if not all(math.isfinite(v) for v in values):
        raise ConfigError(f"{key}: values must be finite")
    return values


def parse_grid(text: str) -> list[float]:
    """``lo:hi:n`` (inclusive linspace) or a comma-separated list."""
    text = str(text)
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid must be lo:hi:n, got {text!r}")
        try:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ConfigError(f"grid must be lo:hi:n, got {text!r}") from None
        if n < 1:
            raise ConfigError("grid needs at least one point")
        return [float(v) for v in np.linspace(lo, hi, n)]
    return _floats(text, "values")


def _dist(cfg: dict) -> FrequencyDistribution:
    try:
        return FrequencyDistribution.parse(cfg["dist"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------- output


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def json_document(command: str, config: dict, results: dict) -> dict:
    """Payload (config + results) plus a metadata block holding the only volatile field."""
    return {
        "command": command,
        "config": _jsonable(config),
        "results": _jsonable(results),
        "metadata": {
            "tool": "kuramoto-epr",
            "version": __version__,
            "generated_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "time_convention": TIME_CONVENTION,
        },
    }


def dumps_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def csv_text(command: str, config: dict, header: list[str], rows) -> str:
    """CSV with a single ``# config:`` provenance line ahead of the header."""
    buf = io.StringIO()
    buf.write("# config: " + json.dumps({"command": command, **_jsonable(config)}, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text, encoding="utf-8", newline="")
    return path


# ---------------------------------------------------------------- tasks


def _check_positive(cfg: dict, *keys):
    for key in keys:
        value = cfg[key]
        if value is None or not (value > 0):
            raise ConfigError(f"{key} must be positive, got {value}")


def run_simulation(cfg: dict) -> tuple[Any, dict]:
    dist = _dist(cfg)
    try:
        mode, amplitude = parse_init(cfg["init"])
        ensemble = OscillatorEnsemble.build(int(cfg["N"]), dist, mode, amplitude, seed=int(cfg["seed"]))
        sim = SimConfig(float(cfg["K"]), float(cfg["dt"]), float(cfg["t_end"]), int(cfg.get("stride", 1)),
                        bool(cfg.get("record_phases", False)))
        traj = simulate(ensemble, sim)
    except NumericalError as exc:
        raise NumericalFailure(str(exc)) from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    window = _floats(cfg["fit_window"], "fit_window", 2) if cfg.get("fit_window") else None
    summary = {"final_r": float(traj.r_series[-1]), "initial_r": float(traj.r_series[0])}
    try:
        rate = fit_growth_rate(traj, window)
        summary.update(fitted_growth_rate=rate, fit_diagnostic="")
    except FitRejected as exc:
        summary.update(fitted_growth_rate=None, fit_diagnostic=str(exc))
    if float(cfg["K"]) > 0:
        try:
            theory = spectrum_general(dist, float(cfg["K"]))
            summary["predicted_growth_rate"] = theory.eigenvalues[0] if theory.eigenvalues else None
        except QuadratureError:
            summary["predicted_growth_rate"] = None
    else:
        summary["predicted_growth_rate"] = None
    return traj, summary


def run_spectrum(cfg: dict):
    dist = _dist(cfg)
    K = cfg["K"]
    if not (isinstance(K, (int, float)) and K > 0):
        raise ConfigError(f"K must be positive, got {K}")
    solver = cfg["solver"]
    if solver not in ("auto", "delta", "general"):
        raise ConfigError(f"solver must be auto, delta or general, got {solver!r}")
    if cfg["frame"] not in ("comoving", "lab"):
        raise ConfigError(f"frame must be comoving or lab, got {cfg['frame']!r}")
    lo, hi = _floats(cfg["interval"], "interval", 2)
    if solver == "delta" or (solver == "auto" and dist.is_delta and dist.center > 0):
        if not dist.is_delta or dist.center <= 0:
            raise ConfigError("the delta solver needs a delta distribution with positive center")
        return spectrum_delta(dist.center, float(K))
    try:
        return spectrum_general(dist, float(K), (lo, hi), frame=cfg["frame"])
    except QuadratureError as exc:
        raise NumericalFailure(str(exc)) from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def run_chsh(cfg: dict, angles: Optional[list] = None) -> dict:
    a, b, c, d = angles if angles is not None else _floats(cfg["angles"], "angles", 4)
    scenario = ChshScenario(a, b, c, d)
    out = {
        "angles_deg": [a, b, c, d],
        "correlations": scenario.correlations,
        "S": scenario.S,
        "classical_bound": deterministic_bound(),
        "violates_classical_bound": scenario.S > CLASSICAL_BOUND,
    }
    n = int(cfg.get("n_events") or 0)
    if n:
        if n < 2:
            raise ConfigError("n_events must be 0 (skip Monte Carlo) or >= 2")
        est, runs = scenario.monte_carlo(n, seed=int(cfg["seed"]))
        out["monte_carlo"] = {
            "n_events": n,
            "seed": int(cfg["seed"]),
            "S_hat": est.value,
            "standard_error": est.standard_error,
            "correlations": {k: {"value": r.value, "standard_error": r.standard_error} for k, r in runs.items()},
        }
    return out


def _sweep_point(task: str, cfg: dict) -> dict:
    if task == "spectrum":
        res = run_spectrum(dict(cfg, solver="general"))
        top = res.eigenvalues[0] if res.eigenvalues else None
        return {"n_roots": len(res.eigenvalues), "leading_eigenvalue": top,
                "max_abs_residual": max((abs(r) for r in res.residuals), default=None)}
    if task == "growth":
        _, summary = run_simulation(cfg)
        return {"fitted_growth_rate": summary["fitted_growth_rate"],
                "predicted_growth_rate": summary["predicted_growth_rate"], "final_r": summary["final_r"]}
    if task == "chsh":
        theta = float(cfg["theta"])
        res = run_chsh(cfg, [0.0, theta, 2 * theta, 3 * theta])
        mc = res.get("monte_carlo", {})
        return {"S": res["S"], "S_hat": mc.get("S_hat"), "standard_error": mc.get("standard_error")}
    raise ConfigError(f"unknown sweep task {task!r}")


def _sweep_worker(args):
    index, task, cfg = args
    try:
        return index, _sweep_point(task, cfg), ""
    except (FitRejected, NumericalFailure) as exc:
        return index, {}, str(exc)


_SWEEP_COLUMNS = {
    "spectrum": ["n_roots", "leading_eigenvalue", "max_abs_residual"],
    "growth": ["fitted_growth_rate", "predicted_growth_rate", "final_r"],
    "chsh": ["S", "S_hat", "standard_error"],
}
_SWEEP_PARAMS = {"spectrum": {"K"}, "growth": {"K", "N", "dt"}, "chsh": {"theta"}}


def run_sweep(cfg: dict) -> tuple[list[str], list[list]]:
    task, param = cfg["task"], cfg["param"]
    if task not in _SWEEP_COLUMNS:
        raise ConfigError(f"sweep task must be one of {sorted(_SWEEP_COLUMNS)}, got {task!r}")
    if param not in _SWEEP_PARAMS[task]:
        raise ConfigError(f"sweep task {task} can vary {sorted(_SWEEP_PARAMS[task])}, not {param!r}")
    values = parse_grid(cfg["values"])
    jobs = []
    for i, v in enumerate(values):
        point = dict(cfg)
        point[param] = int(v) if param == "N" else v
        jobs.append((i, task, point))
    workers = int(cfg["workers"]) or (os.cpu_count() or 1)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_sweep_worker, jobs))
    else:
        results = [_sweep_worker(job) for job in jobs]
    results.sort(key=lambda item: item[0])
    header = ["index", param, *_SWEEP_COLUMNS[task], "diagnostic"]
    rows = []
    for index, res, diag in results:
        cells = ["" if res.get(col) is None else res[col] for col in _SWEEP_COLUMNS[task]]
        rows.append([index, values[index], *cells, diag])
    return header, rows


# ---------------------------------------------------------------- commands


def _cmd_simulate(cfg, out_dir, prefix):
    traj, summary = run_simulation(cfg)
    if not np.all(np.isfinite(traj.r_series)):
        raise NumericalFailure("non-finite order parameter in trajectory")
    rows = zip(traj.times, traj.r_series, traj.phi_series, traj.mean_unwrapped_phase)
    _write(out_dir, f"{prefix}_trajectory.csv", csv_text("simulate", cfg, ["t", "r", "phi", "mean_phase"], rows))
    if traj.phase_snapshots is not None:
        header = ["t", *[f"theta_{i}" for i in range(traj.n_oscillators)]]
        snap_rows = ([t, *row] for t, row in zip(traj.times, traj.phase_snapshots))
        _write(out_dir, f"{prefix}_phases.csv", csv_text("simulate", cfg, header, snap_rows))
    doc = json_document("simulate", cfg, summary)
    _write(out_dir, f"{prefix}_summary.json", dumps_json(doc))
    return doc


def _cmd_spectrum(cfg, out_dir, prefix):
    res = run_spectrum(cfg)
    doc = json_document("spectrum", cfg, res.to_dict())
    _write(out_dir, f"{prefix}.json", dumps_json(doc))
    if not res.eigenvalues:
        raise NumericalFailure(res.diagnostic or "no spectrum root")
    return doc


def _cmd_chsh(cfg, out_dir, prefix):
    doc = json_document("chsh", cfg, run_chsh(cfg))
    _write(out_dir, f"{prefix}.json", dumps_json(doc))
    return doc


def _cmd_trajectory(cfg, out_dir, prefix):
    _check_positive(cfg, "omega1", "t_end")
    omega = cfg["Omega"] if cfg["Omega"] is not None else cfg["omega1"]
    scale = cfg["frequency_scale"]
    if scale is not None and not scale > 0:
        raise ConfigError("frequency_scale must be positive")
    if int(cfg["n_points"]) < 2:
        raise ConfigError("n_points must be at least 2")
    try:
        params = CoherenceTrajectoryParams(float(cfg["omega1"]), float(omega), float(cfg["alpha"]), cfg["mode"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    t = np.linspace(0.0, float(cfg["t_end"]), int(cfg["n_points"]))
    r1 = coherence_trajectory(params, t)
    if not np.all(np.isfinite(r1)):
        raise NumericalFailure("coherence trajectory overflowed; shorten t_end")
    if scale is None:
        header, rows = ["t", "r1"], zip(t, r1)
    else:
        header, rows = ["t", "t_seconds", "r1"], zip(t, t / scale, r1)
    _write(out_dir, f"{prefix}.csv", csv_text("trajectory", cfg, header, rows))
    return None


def _cmd_sweep(cfg, out_dir, prefix):
    header, rows = run_sweep(cfg)
    _write(out_dir, f"{prefix}.csv", csv_text("sweep", cfg, header, rows))
    return None


COMMANDS = {
    "simulate": _cmd_simulate,
    "spectrum": _cmd_spectrum,
    "chsh": _cmd_chsh,
    "trajectory": _cmd_trajectory,
    "sweep": _cmd_sweep,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kuramoto-epr", description="Mean-field Kuramoto and CHSH toolkit.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    S = argparse.SUPPRESS

    def common(p):
        p.add_argument("--config", default=None, help="flat key = value config file")
        p.add_argument("--out-dir", default=".", help="directory for output files")
        p.add_argument("--prefix", default=None, help="output file name prefix (default: subcommand)")
        p.add_argument("--quiet", action="store_true", help="do not echo JSON results to stdout")

    p = sub.add_parser("simulate", help="integrate the mean-field dynamics")
    common(p)
    p.add_argument("--N", type=int, default=S)
    p.add_argument("--K", type=float, default=S)
    p.add_argument("--dt", type=float, default=S)
    p.add_argument("--t-end", dest="t_end", type=float, default=S)
    p.add_argument("--dist", default=S, help="delta:c | lorentzian:c,gamma | gaussian:c,sigma")
    p.add_argument("--init", default=S, help="uniform_random | equally_spaced | first_harmonic:amp")
    p.add_argument("--stride", type=int, default=S)
    p.add_argument("--fit-window", dest="fit_window", default=S, help="t0,t1")
    p.add_argument("--record-phases", dest="record_phases", action="store_const", const=True, default=S)
    p.add_argument("--seed", type=int, default=S)

    p = sub.add_parser("spectrum", help="solve the discrete spectrum equation")
    common(p)
    p.add_argument("--dist", default=S)
    p.add_argument("--K", type=float, default=S)
    p.add_argument("--solver", choices=("auto", "delta", "general"), default=S)
    p.add_argument("--frame", choices=("comoving", "lab"), default=S)
    p.add_argument("--interval", default=S, help="lo,hi search interval for the general solver")

    p = sub.add_parser("chsh", help="evaluate the CHSH value")
    common(p)
    p.add_argument("--angles", default=S, help="a,b,c,d in degrees")
    p.add_argument("--n-events", dest="n_events", type=int, default=S, help="events per pair; 0 skips Monte Carlo")
    p.add_argument("--seed", type=int, default=S)

    p = sub.add_parser("trajectory", help="linear-theory coherence curve r1(t)")
    common(p)
    p.add_argument("--omega1", type=float, default=S)
    p.add_argument("--Omega", type=float, default=S, help="growth eigenvalue (default: omega1)")
    p.add_argument("--alpha", type=float, default=S)
    p.add_argument("--mode", choices=("derived", "paper_literal"), default=S)
    p.add_argument("--t-end", dest="t_end", type=float, default=S)
    p.add_argument("--n-points", dest="n_points", type=int, default=S)
    p.add_argument("--frequency-scale", dest="frequency_scale", type=float, default=S,
                   help="omega1 in rad/s; adds a t_seconds column")

    p = sub.add_parser("sweep", help="run a task over a parameter grid")
    common(p)
    p.add_argument("--task", choices=sorted(_SWEEP_COLUMNS), default=S)
    p.add_argument("--param", default=S)
    p.add_argument("--values", default=S, help="lo:hi:n or comma list")
    p.add_argument("--workers", type=int, default=S, help="0 = available CPUs")
    for flag, kw in (("--N", {"type": int}), ("--K", {"type": float}), ("--dt", {"type": float}),
                     ("--n-events", {"type": int, "dest": "n_events"}), ("--seed", {"type": int})):
        p.add_argument(flag, default=S, **kw)
    p.add_argument("--t-end", dest="t_end", type=float, default=S)
    p.add_argument("--dist", default=S)
    p.add_argument("--init", default=S)
    p.add_argument("--frame", choices=("comoving", "lab"), default=S)
    p.add_argument("--interval", default=S)
    return parser


def run(argv: Optional[list[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise ConfigError("a subcommand is required: " + ", ".join(COMMANDS))
        flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "out_dir", "prefix", "quiet")}
        file_values = read_config_file(args.config) if args.config else {}
        cfg = resolve_config(args.command, file_values, flags)
        doc = COMMANDS[args.command](cfg, Path(args.out_dir), args.prefix or args.command)
        if doc is not None and not args.quiet:
            sys.stdout.write(dumps_json(doc))
        return EXIT_OK
    except ConfigError as exc:
        print(f"kuramoto-epr: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"kuramoto-epr: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(run())
