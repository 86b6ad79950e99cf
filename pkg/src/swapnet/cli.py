"""Batch runner: ``swapnet run|validate|presets``.

Configs are INI files. Every section is one experiment; keys in ``[DEFAULT]``
are inherited by all sections. Example::

    [DEFAULT]
    seed = 2024
    mean_counts = 1000

    [fig3a]
    theta_points = 19

    [purity_check]
    experiment = purity
    state = quartz

Exit codes: 0 success, 2 bad config, 3 estimator failure, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__, counting, estimate, states
from .network import ideal_visibility

EXIT_OK, EXIT_CONFIG, EXIT_ESTIMATOR, EXIT_IO = 0, 2, 3, 4
OUTPUT_ENV = "SWAPNET_OUTPUT_DIR"
DEFAULT_OUTPUT = "swapnet_out"

PRESETS = {
    "fig3a": "overlap of |H> with HWP(theta)|H> = cos2t|H> + sin2t|V>; v = cos^2(2 theta)",
    "fig3b": "overlap of HWP(theta)|H> with the quartz-dephased [[0.5,0.29],[0.29,0.5]]; v = 0.5 + 0.29 sin(4 theta)",
    "fig3c": "two-qubit input cos2t|HH> +/- sin2t|VV>; v = 1 for every theta",
    "fig3d": "two-qubit input cos2t|HV> +/- sin2t|VH>; v = +/- sin(4 theta), |v| = concurrence",
    "fig4a": "locked run at phase 0: singlet (|HV> - |VH>)/sqrt2, then |HH>, then singlet; coincidences flip",
    "fig4c": "locked run at phase 0: triplet (|HV> + |VH>)/sqrt2, then |HH>, then triplet; no flip",
}
GENERIC = ("overlap", "purity", "fidelity", "hsdist", "witness_sweep", "witness_locked")
EXPERIMENTS = GENERIC + tuple(PRESETS)
FIGURE_SWEEPS = ("fig3a", "fig3b", "fig3c", "fig3d")
LOCKED = ("witness_locked", "fig4a", "fig4c")

COMMON_KEYS = {
    "experiment", "seed", "mean_counts", "phase_points", "phase_min", "phase_max",
    "epsilon", "drift_sigma", "threshold", "output_path",
}
KIND_KEYS = {
    "overlap": {"state_a", "state_b"},
    "purity": {"state"},
    "fidelity": {"psi", "state"},
    "hsdist": {"state_a", "state_b"},
    "witness_sweep": {"state"},
    "witness_locked": {"states", "lock_phase", "dots_per_segment"},
    "fig3a": {"theta_points", "theta_min", "theta_max"},
    "fig3b": {"theta_points", "theta_min", "theta_max", "mixed_state"},
    "fig3c": {"theta_points", "theta_min", "theta_max", "sign"},
    "fig3d": {"theta_points", "theta_min", "theta_max", "sign"},
    "fig4a": {"lock_phase", "dots_per_segment"},
    "fig4c": {"lock_phase", "dots_per_segment"},
}
ALL_KEYS = COMMON_KEYS.union(*KIND_KEYS.values())


class ConfigError(ValueError):
    def __init__(self, section: str, key: str | None, message: str):
        where = f"[{section}]" + (f" {key}" if key else "")
        super().__init__(f"{where}: {message}")
        self.section, self.key = section, key


@dataclass
class ExperimentConfig:
    name: str
    experiment: str
    raw: dict[str, str]
    seed: int
    mean_counts: float
    phases: tuple[float, ...]
    epsilon: float
    drift_sigma: float
    threshold: float
    output_path: str | None
    states: dict[str, Any] = field(default_factory=dict)
    thetas: tuple[float, ...] = ()
    sign: str = "+"
    lock_phase: float = 0.0
    dots_per_segment: int = 50

    def sweep_plan(self, seed: int | None = None) -> counting.SweepPlan:
        return counting.SweepPlan(
            self.phases, self.mean_counts, self.seed if seed is None else seed, self.drift_sigma, self.epsilon
        )


# --- parsing ------------------------------------------------------------------

def _get(section, name, key, conv, default):
    if key not in section:
        return default
    text = section[key]
    try:
        val = conv(text)
    except (ValueError, states.StateError) as exc:
        raise ConfigError(name, key, f"cannot parse {text!r}: {exc}") from None
    if isinstance(val, float) and not math.isfinite(val):
        raise ConfigError(name, key, "value must be finite")
    return val


def _parse_int(text: str) -> int:
    return int(text.strip())


def _state(name, section, key, default=None, dim=None, pure=False):
    spec = section.get(key, default)
    if spec is None:
        raise ConfigError(name, key, "missing required state")
    try:
        st = states.parse_pure(spec) if pure else states.parse_state(spec)
    except ValueError as exc:
        raise ConfigError(name, key, str(exc)) from None
    if dim is not None and st.dim != dim:
        raise ConfigError(name, key, f"expected a {dim}-dimensional state, got {st.dim}")
    return st


def parse_section(name: str, section) -> ExperimentConfig:
    kind = section.get("experiment", name if name in EXPERIMENTS else None)
    if kind is None:
        raise ConfigError(name, "experiment", "missing experiment type")
    if kind not in EXPERIMENTS:
        raise ConfigError(name, "experiment", f"unknown experiment {kind!r}; choose from {', '.join(EXPERIMENTS)}")
    allowed = COMMON_KEYS | KIND_KEYS[kind]
    own = set(section.keys()) - set(section.parser.defaults().keys())
    for key in sorted(own):
        if key not in allowed:
            raise ConfigError(name, key, f"unknown key for experiment {kind!r}")

    seed = _get(section, name, "seed", _parse_int, 0)
    if seed < 0:
        raise ConfigError(name, "seed", "seed must be non-negative")
    mean_counts = _get(section, name, "mean_counts", float, 1000.0)
    if mean_counts <= 0:
        raise ConfigError(name, "mean_counts", "must be positive")
    epsilon = _get(section, name, "epsilon", float, 1.0)
    if not 0.0 <= epsilon <= 1.0:
        raise ConfigError(name, "epsilon", f"must lie in [0, 1], got {epsilon}")
    drift = _get(section, name, "drift_sigma", float, 0.0)
    if drift < 0:
        raise ConfigError(name, "drift_sigma", "must be non-negative")
    threshold = _get(section, name, "threshold", float, estimate.DEFAULT_THRESHOLD)

    n_phase = _get(section, name, "phase_points", _parse_int, 36)
    phase_min = _get(section, name, "phase_min", states.parse_angle, 0.0)
    phase_max = _get(section, name, "phase_max", states.parse_angle, 2 * math.pi)
    if kind not in LOCKED and n_phase < 4:
        raise ConfigError(name, "phase_points", f"a sweep needs at least 4 phases, got {n_phase}")
    if kind not in LOCKED and not phase_max > phase_min:
        raise ConfigError(name, "phase_max", "must exceed phase_min")

    cfg = ExperimentConfig(
        name=name,
        experiment=kind,
        raw={k: section[k] for k in sorted(section.keys())},
        seed=seed,
        mean_counts=mean_counts,
        phases=counting.uniform_phases(max(n_phase, 1), phase_min, phase_max),
        epsilon=epsilon,
        drift_sigma=drift,
        threshold=threshold,
        output_path=section.get("output_path"),
    )

    if kind in ("overlap", "hsdist"):
        cfg.states = {k: _state(name, section, k, dim=2) for k in ("state_a", "state_b")}
    elif kind == "purity":
        cfg.states = {"state": _state(name, section, "state", dim=2)}
    elif kind == "fidelity":
        cfg.states = {"psi": _state(name, section, "psi", pure=True), "state": _state(name, section, "state", dim=2)}
        if cfg.states["psi"].dim != 2:
            raise ConfigError(name, "psi", "fidelity needs a single-qubit pure state")
    elif kind == "witness_sweep":
        cfg.states = {"state": _state(name, section, "state", dim=4)}
    elif kind in FIGURE_SWEEPS:
        n_theta = _get(section, name, "theta_points", _parse_int, 19)
        if n_theta < 2:
            raise ConfigError(name, "theta_points", "need at least 2 theta points")
        lo = _get(section, name, "theta_min", states.parse_angle, 0.0)
        hi = _get(section, name, "theta_max", states.parse_angle, math.pi / 4)
        cfg.thetas = tuple(lo + i * (hi - lo) / (n_theta - 1) for i in range(n_theta))
        if kind == "fig3b":
            cfg.states = {"mixed_state": _state(name, section, "mixed_state", default="quartz", dim=2)}
        if kind in ("fig3c", "fig3d"):
            cfg.sign = section.get("sign", "+").strip()
            if cfg.sign not in ("+", "-"):
                raise ConfigError(name, "sign", "must be '+' or '-'")

    if kind in LOCKED:
        cfg.lock_phase = _get(section, name, "lock_phase", states.parse_angle, 0.0)
        cfg.dots_per_segment = _get(section, name, "dots_per_segment", _parse_int, 50)
        if cfg.dots_per_segment < 1:
            raise ConfigError(name, "dots_per_segment", "must be at least 1")
        if abs(math.cos(cfg.lock_phase)) < 1e-9:
            raise ConfigError(name, "lock_phase", "a lock at a fringe zero crossing cannot show a flip")
        if kind == "witness_locked":
            specs = section.get("states")
            if specs is None:
                raise ConfigError(name, "states", "missing; give three specs separated by ';'")
            parts = [p for p in specs.split(";")]
            if len(parts) != 3:
                raise ConfigError(name, "states", f"need exactly 3 segment states, got {len(parts)}")
            segs = []
            for p in parts:
                try:
                    segs.append(states.parse_state(p))
                except ValueError as exc:
                    raise ConfigError(name, "states", str(exc)) from None
            if any(s.dim != 4 for s in segs):
                raise ConfigError(name, "states", "segment states must be two-qubit states")
        else:
            entangled = "singlet" if kind == "fig4a" else "triplet"
            segs = [states.parse_state(s) for s in (entangled, "HH", entangled)]
        cfg.states = {"segments": segs}
    return cfg


def load_config(path: str | Path, overrides: dict[str, str] | None = None) -> list[ExperimentConfig]:
    """Parse and fully validate a config file. Raises ConfigError or OSError."""
    text = Path(path).read_text(encoding="utf-8")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError("file", None, str(exc).splitlines()[0]) from None
    for key in parser.defaults():
        if key not in ALL_KEYS:
            raise ConfigError("DEFAULT", key, "unknown key")
    for key, val in (overrides or {}).items():
        parser["DEFAULT"][key] = val
    if not parser.sections():
        raise ConfigError("file", None, "no experiment sections")
    return [parse_section(name, parser[name]) for name in parser.sections()]


# --- execution ----------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def _curve_csv(rows) -> str:
    lines = ["theta_or_phase,oracle_value,estimate"]
    lines += [f"{_fmt(t)},{_fmt(o)},{_fmt(e)}" for t, o, e in rows]
    return "\n".join(lines) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")


def _write_runs(outdir: Path, prefix: str, runs) -> None:
    for k, run in enumerate(runs):
        tag = f"{prefix}run{k}" if len(runs) > 1 else prefix.rstrip("_")
        tag = tag or "sweep"
        _write(outdir / "counts" / f"{tag}_target.csv", counting.counts_to_csv(run.target))
        _write(outdir / "counts" / f"{tag}_reference.csv", counting.counts_to_csv(run.reference))


def _figure_point(cfg: ExperimentConfig, index: int, theta: float):
    seed = counting.derive_seed(cfg.seed, index)
    plan = cfg.sweep_plan(seed)
    runs: list = []
    extra = {}
    if cfg.experiment == "fig3a":
        rep = estimate.estimate_overlap(states.parse_state("H"), states.waveplate_state(theta).density(), plan, runs)
    elif cfg.experiment == "fig3b":
        rep = estimate.estimate_overlap(states.waveplate_state(theta).density(), cfg.states["mixed_state"], plan, runs)
    else:
        basis = "HH_VV" if cfg.experiment == "fig3c" else "HV_VH"
        rho = states.nonmax_entangled(theta, cfg.sign, basis).density()
        rep = estimate.estimate_witness(rho, plan, runs)
        if cfg.experiment == "fig3d":
            extra = {
                "concurrence_oracle": estimate.oracle_wootters_concurrence(rho),
                "concurrence_estimate": estimate.concurrence_from_visibility(
                    max(-1.0, min(1.0, rep.estimate)), "HV_VH_family"
                ),
            }
    return seed, rep, runs, extra


def run_experiment(cfg: ExperimentConfig, outdir: Path, workers: int = 1) -> dict:
    entry: dict[str, Any] = {"name": cfg.name, "experiment": cfg.experiment, "config": cfg.raw}
    kind = cfg.experiment
    if kind in FIGURE_SWEEPS:
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(lambda it: _figure_point(cfg, *it), enumerate(cfg.thetas)))
        else:
            results = [_figure_point(cfg, i, t) for i, t in enumerate(cfg.thetas)]
        points = []
        for i, (theta, (seed, rep, runs, extra)) in enumerate(zip(cfg.thetas, results)):
            _write_runs(outdir, f"point{i:02d}_", runs)
            points.append({"theta": theta, "seed": seed, **_report_dict(rep), **extra})
        _write(outdir / "curve.csv", _curve_csv((p["theta"], p["oracle"], p["estimate"]) for p in points))
        entry["points"] = points
        return entry

    if kind in LOCKED:
        seed = counting.derive_seed(cfg.seed, 0)
        plan = counting.LockedRunPlan(
            cfg.lock_phase, cfg.states["segments"], cfg.dots_per_segment,
            cfg.mean_counts, seed, cfg.drift_sigma, cfg.epsilon,
        )
        run = counting.simulate_locked_run(plan)
        verdict = estimate.witness_verdict(run, cfg.threshold)
        _write(outdir / "counts" / "locked.csv", counting.counts_to_csv(run))
        _write(outdir / "report.txt", estimate.to_key_value(verdict))
        _write(outdir / "reports.csv", estimate.to_csv_rows([verdict], [cfg.name]))
        entry["seed"] = seed
        entry["segment_visibilities"] = [ideal_visibility(s) for s in cfg.states["segments"]]
        entry["verdict"] = _report_dict(verdict)
        return entry

    runs: list = []
    plan = cfg.sweep_plan()
    st = cfg.states
    if kind == "overlap":
        rep = estimate.estimate_overlap(st["state_a"], st["state_b"], plan, runs)
    elif kind == "purity":
        rep = estimate.estimate_purity(st["state"], plan, runs)
    elif kind == "fidelity":
        rep = estimate.estimate_fidelity(st["psi"], st["state"], plan, runs)
    elif kind == "hsdist":
        rep = estimate.estimate_hs_distance(st["state_a"], st["state_b"], plan, runs)
    else:
        rep = estimate.estimate_witness(st["state"], plan, runs)
    _write_runs(outdir, "", runs)
    _write(outdir / "report.txt", estimate.to_key_value(rep))
    _write(outdir / "reports.csv", estimate.to_csv_rows([rep], [cfg.name]))
    entry["report"] = _report_dict(rep)
    return entry


def _report_dict(obj) -> dict:
    out = {}
    for k, v in vars(obj).items():
        if hasattr(v, "value"):
            v = v.value
        elif isinstance(v, tuple):
            v = list(v)
        out[k] = v
    return out


def run(configs: list[ExperimentConfig], output_root: Path, workers: int = 1) -> dict:
    manifest = {
        "swapnet_version": __version__,
        "numpy_version": np.__version__,
        "python_version": platform.python_version(),
        "experiments": [],
    }
    for cfg in configs:
        root = Path(cfg.output_path) if cfg.output_path else output_root
        manifest["experiments"].append(run_experiment(cfg, root / cfg.name, workers))
    output_root.mkdir(parents=True, exist_ok=True)
    _write(output_root / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def list_presets() -> str:
    return "".join(f"{name:6s}  {desc}\n" for name, desc in PRESETS.items())


# --- entry point --------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="swapnet", description="Controlled-SWAP interferometer simulator")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run every experiment in a config file")
    r.add_argument("config")
    r.add_argument("--seed", type=int)
    r.add_argument("--mean-counts", type=float)
    r.add_argument("--output", help=f"output directory (default ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
    r.add_argument("--workers", type=int, default=1, help="threads for independent theta points")
    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("config")
    sub.add_parser("presets", help="list figure presets")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "presets":
        sys.stdout.write(list_presets())
        return EXIT_OK

    overrides = {}
    if args.command == "run":
        if args.seed is not None:
            overrides["seed"] = str(args.seed)
        if args.mean_counts is not None:
            overrides["mean_counts"] = repr(args.mean_counts)
    try:
        configs = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_IO

    if args.command == "validate":
        print("OK")
        return EXIT_OK

    output_root = Path(args.output or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)
    try:
        manifest = run(configs, output_root, max(1, args.workers))
    except (estimate.FitError, estimate.CalibrationError, estimate.ProtocolError) as exc:
        print(f"error: estimator failed: {exc}", file=sys.stderr)
        return EXIT_ESTIMATOR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    for exp in manifest["experiments"]:
        if "verdict" in exp:
            print(f"{exp['name']}: {exp['verdict']['verdict']} (statistic {exp['verdict']['statistic']:.2f})")
        elif "report" in exp:
            rep = exp["report"]
            print(f"{exp['name']}: {rep['kind']} estimate {rep['estimate']:.4f} oracle {rep['oracle']:.4f}")
        else:
            worst = max(p["abs_error"] for p in exp["points"])
            print(f"{exp['name']}: {len(exp['points'])} points, max |estimate - oracle| {worst:.4f}")
    print(f"wrote {output_root / 'manifest.json'}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
