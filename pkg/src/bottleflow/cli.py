"""Command-line front end.

Every subcommand reads one JSON configuration document (``--config``) and
writes JSON or CSV to ``--out`` (standard output when omitted).  Numbers are
written with 15 significant digits and keys in a fixed order, so identical
configurations reproduce identical files.

Exit codes: 0 success, 2 configuration or file error, 3 inadmissible signal,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cascade import PositiveLinearSystem, cascade_periodic_orbit
from .core import (
    BottleneckParams,
    average_outflow,
    dual_gain,
    periodic_fixed_point,
    periodic_gain,
    simulate_transient,
)
from .exceptions import DomainError, InadmissibleSignalError, NumericalError
from .optimize import search_schedule
from .rfm import RfmParams, compare_reduction, simulate_rfm, write_trajectory_csv
from .signals import (
    SwitchingSignal,
    check_admissible,
    constant_signal,
    fast_switching_family,
    random_signal,
)


EXIT_OK, EXIT_CONFIG, EXIT_INADMISSIBLE, EXIT_NUMERIC = 0, 2, 3, 4

DEFAULT_PARAMS = {"lambda": 1.0, "sigma_bar": 1.0, "epsilon": 0.9}
DEFAULT_PERIOD = 20.0
DEFAULT_PAIRS = 2
DEFAULT_EPSILON_RATIO = 0.9
DEFAULT_SWEEP_GRID = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5]


class ConfigError(Exception):
    pass


def fmt(v: float) -> float:
    """Round to 15 significant digits for stable output."""
    return float(f"{float(v):.15g}")


def _fmt_tree(obj):
    if isinstance(obj, dict):
        return {k: _fmt_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_fmt_tree(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else None
    return obj


@dataclass
class ExperimentConfig:
    params: BottleneckParams
    signal_source: str
    signal: SwitchingSignal | None = None
    system: PositiveLinearSystem | None = None
    rfm: RfmParams | None = None
    out: str | None = None
    seed: int = 0
    samples: int | None = None
    base_dir: Path = Path(".")
    raw: dict = field(default_factory=dict)

    def section(self, name: str) -> dict:
        sec = self.raw.get(name, {})
        if not isinstance(sec, dict):
            raise ConfigError(f"config section {name!r} must be an object")
        return sec


def _read_json(path: Path):
    if not path.is_file():
        raise ConfigError(f"file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


_SIGNAL_KEYS = ("file", "random", "fast", "constant", "segments")


def _load_signal(spec: dict, params: BottleneckParams, base: Path, seed: int) -> tuple[str, SwitchingSignal]:
    present = [k for k in _SIGNAL_KEYS if k in spec]
    if len(present) != 1:
        raise ConfigError(f"signal needs exactly one source out of {_SIGNAL_KEYS}, got {present}")
    kind = present[0]
    if kind == "file":
        return kind, SwitchingSignal.from_dict(_read_json(base / spec["file"]))
    if kind == "segments":
        return kind, SwitchingSignal.from_dict(spec)
    opts = spec[kind] if isinstance(spec[kind], dict) else {}
    T = float(opts.get("period", spec.get("period", DEFAULT_PERIOD)))
    if kind == "random":
        return kind, random_signal(
            params, T, int(opts.get("n_pairs", DEFAULT_PAIRS)), int(opts.get("seed", seed))
        )
    if kind == "fast":
        return kind, fast_switching_family(params, T, int(opts.get("N", 1)))
    return kind, constant_signal(T)


def load_config(path: str | None, overrides: argparse.Namespace) -> ExperimentConfig:
    raw: dict = {}
    base = Path(".")
    if path is not None:
        p = Path(path)
        raw = _read_json(p)
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        base = p.parent
    for key in ("out", "seed", "samples"):
        value = getattr(overrides, key, None)
        if value is not None:
            raw[key] = value
    try:
        params = BottleneckParams.from_dict({**DEFAULT_PARAMS, **raw.get("params", {})})
        seed = int(raw.get("seed", 0))
        signal_source, signal = "none", None
        if "signal" in raw:
            signal_source, signal = _load_signal(raw["signal"], params, base, seed)
        system = None
        if "system" in raw:
            sys_spec = raw["system"]
            if "file" in sys_spec:
                sys_spec = _read_json(base / sys_spec["file"])
            system = PositiveLinearSystem.from_dict(
                sys_spec, require_positive=bool(raw.get("require_positive", True))
            )
        rfm = None
        if "rfm" in raw:
            rfm = RfmParams(tuple(raw["rfm"]["rates"]), float(raw["rfm"].get("epsilon", 0.0)))
    except (DomainError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from None
    samples = raw.get("samples")
    return ExperimentConfig(
        params=params,
        signal_source=signal_source,
        signal=signal,
        system=system,
        rfm=rfm,
        out=raw.get("out"),
        seed=seed,
        samples=None if samples is None else int(samples),
        base_dir=base,
        raw=raw,
    )


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _emit_json(doc: dict, out: str | None) -> None:
    _emit(json.dumps(_fmt_tree(doc), indent=2) + "\n", out)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{v:.15g}" if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _require_signal(cfg: ExperimentConfig) -> SwitchingSignal:
    if cfg.signal is None:
        raise ConfigError("this command needs a 'signal' section")
    return cfg.signal


def _require_admissible(signal, params, orbit=None):
    report = check_admissible(signal, params, orbit=orbit)
    if not report.member:
        raise InadmissibleSignalError(report)
    return report


def cmd_orbit(cfg: ExperimentConfig) -> None:
    """Periodic orbit of the bottleneck: x0, switch endpoints, averages and gain."""
    signal = _require_signal(cfg)
    params = cfg.params
    orbit = periodic_fixed_point(signal, params)
    _require_admissible(signal, params, orbit)
    doc = {
        "period": orbit.period,
        "x0": orbit.x0,
        "endpoints": list(orbit.segment_endpoints),
        "average_occupancy": orbit.average_occupancy,
        "average_outflow": average_outflow(orbit, params),
        "J": periodic_gain(signal, params),
        "contraction": orbit.contraction,
        "signal": signal.to_dict(),
    }
    traj = cfg.section("trajectory")
    if "csv" in traj:
        tr = simulate_transient(
            signal,
            params,
            float(traj.get("x_init", orbit.x0)),
            int(traj.get("periods", 1)),
            int(traj.get("samples_per_period", 200)),
        )
        write_trajectory_csv(cfg.base_dir / traj["csv"], tr.times, tr.occupancy[:, None])
    _emit_json(doc, cfg.out)


def cmd_gain(cfg: ExperimentConfig) -> None:
    """Gain and dual gain of one admissible signal."""
    signal = _require_signal(cfg)
    params = cfg.params
    report = _require_admissible(signal, params)
    _emit_json(
        {
            "J": periodic_gain(signal, params),
            "dual_gain": dual_gain(signal, params),
            "admissible": report.member,
            "measures": {lvl.label: m for lvl, m in signal.measures.items()},
        },
        cfg.out,
    )


def _histogram_rows(params, T, n_pairs, seeds):
    rows = []
    for s in seeds:
        sig = random_signal(params, T, n_pairs, s)
        J = periodic_gain(sig, params)
        rows.append((s, J, J * params.constant_outflow))
    return rows


def _summary(rows):
    cols = np.array([r[1:] for r in rows], dtype=float)
    return [
        ("mean", *map(float, cols.mean(axis=0))),
        ("min", *map(float, cols.min(axis=0))),
        ("max", *map(float, cols.max(axis=0))),
    ]


def cmd_histogram(cfg: ExperimentConfig) -> None:
    """Gain of many random admissible signals, one row per seed."""
    sec = cfg.section("histogram")
    n = cfg.samples if cfg.samples is not None else int(sec.get("samples", 10_000))
    if n < 1:
        raise ConfigError("samples must be >= 1")
    T = float(sec.get("period", DEFAULT_PERIOD))
    n_pairs = int(sec.get("n_pairs", DEFAULT_PAIRS))
    rows = _histogram_rows(cfg.params, T, n_pairs, range(cfg.seed, cfg.seed + n))
    _emit(_csv_text(["seed", "J", "average_outflow"], rows + _summary(rows)), cfg.out)


def cmd_sweep(cfg: ExperimentConfig) -> None:
    """Random-signal gains over a grid of mean inflow values."""
    sec = cfg.section("sweep")
    grid = [float(v) for v in sec.get("sigma_bars", DEFAULT_SWEEP_GRID)]
    if not grid:
        raise ConfigError("sigma_bars must be nonempty")
    n = cfg.samples if cfg.samples is not None else int(sec.get("samples", 1000))
    ratio = float(sec.get("epsilon_ratio", DEFAULT_EPSILON_RATIO))
    T = float(sec.get("period", DEFAULT_PERIOD))
    n_pairs = int(sec.get("n_pairs", DEFAULT_PAIRS))
    out_rows, summary = [], []
    for sb in grid:
        try:
            params = BottleneckParams(cfg.params.lam, sb, ratio * sb)
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
        rows = _histogram_rows(params, T, n_pairs, range(cfg.seed, cfg.seed + n))
        out_rows += [(sb, s, J) for s, J, _ in rows]
        summary.append((sb, "mean", float(np.mean([r[1] for r in rows]))))
    _emit(_csv_text(["sigma_bar", "seed", "J"], out_rows + summary), cfg.out)


def cmd_cascade(cfg: ExperimentConfig) -> None:
    """Average output of the bottleneck feeding a positive linear system."""
    signal = _require_signal(cfg)
    if cfg.system is None:
        raise ConfigError("cascade needs a 'system' section")
    _require_admissible(signal, cfg.params)
    orbit = cascade_periodic_orbit(signal, cfg.params, cfg.system)
    _emit_json(
        {
            "average_input": orbit.average_input,
            "average_output": orbit.average_output,
            "trajectory_average_output": orbit.trajectory_average_output,
            "dc_gain": orbit.dc_gain,
            "bound": orbit.bound,
            "margin": orbit.margin,
            "x0": orbit.x0,
            "z0": orbit.z0.tolist(),
        },
        cfg.out,
    )


def cmd_rfm(cfg: ExperimentConfig) -> None:
    """Full ribosome flow model versus its bottleneck-plus-chain reduction."""
    signal = _require_signal(cfg)
    if cfg.rfm is None:
        raise ConfigError("rfm needs an 'rfm' section with 'rates'")
    sec = cfg.section("rfm")
    step = sec.get("step")
    report = compare_reduction(cfg.rfm, signal, step=None if step is None else float(step))
    doc = {
        "n": cfg.rfm.n,
        "rate_ratio": report.rate_ratio,
        "average_output_full": report.average_output_full,
        "average_output_reduced": report.average_output_reduced,
        "output_discrepancy": report.output_discrepancy,
        "relative_output_discrepancy": report.relative_output_discrepancy,
        "site_average_full": report.site_average_full.tolist(),
        "site_average_reduced": report.site_average_reduced.tolist(),
        "switch_discrepancy": report.switch_discrepancy.tolist(),
    }
    if "csv" in sec:
        sim = simulate_rfm(cfg.rfm, signal, np.zeros(cfg.rfm.n),
                           step=None if step is None else float(step))
        write_trajectory_csv(cfg.base_dir / sec["csv"], sim.times, sim.states)
    _emit_json(doc, cfg.out)


def cmd_optimize(cfg: ExperimentConfig) -> None:
    """Search balanced switching schedules for the largest gain."""
    sec = cfg.section("optimize")
    budget = int(sec.get("budget", 200))
    if budget < 1:
        raise ConfigError("budget must be >= 1")
    res = search_schedule(
        cfg.params,
        float(sec.get("period", DEFAULT_PERIOD)),
        int(sec.get("n_pairs", DEFAULT_PAIRS)),
        budget,
        seed=cfg.seed,
    )
    _emit_json(
        {
            "best_gain": res.best_gain,
            "evaluations": res.evaluations,
            "restarts": res.restarts,
            "best_signal": res.best_signal.to_dict(),
            "trace": res.trace.tolist(),
        },
        cfg.out,
    )


COMMANDS = {
    "orbit": cmd_orbit,
    "gain": cmd_gain,
    "histogram": cmd_histogram,
    "sweep": cmd_sweep,
    "cascade": cmd_cascade,
    "rfm": cmd_rfm,
    "optimize": cmd_optimize,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bottleflow", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or name).strip().split("\n")[0])
        p.add_argument("--config", help="JSON configuration document")
        p.add_argument("--out", help="output path (default: standard output)")
        p.add_argument("--seed", type=int, help="base random seed")
        p.add_argument("--samples", type=int, help="number of random samples")
    return parser


def _fail(code: int, message) -> int:
    print(f"bottleflow: error: {message}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args)
        COMMANDS[args.command](cfg)
    except (ConfigError, OSError) as exc:
        return _fail(EXIT_CONFIG, exc)
    except InadmissibleSignalError as exc:
        return _fail(EXIT_INADMISSIBLE, exc)
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        return _fail(EXIT_NUMERIC, f"numerical failure: {exc}")
    except DomainError as exc:
        return _fail(EXIT_CONFIG, exc)
    return EXIT_OK

if __name__ == "__main__":
    sys.exit(main())
