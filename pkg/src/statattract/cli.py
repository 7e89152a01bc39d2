"""Command-line front end.

Subcommands: ``simulate``, ``bowen``, ``attractor``, ``decompose``,
``limits``.  Options come from a flat ``key = value`` config file, every key
overridable by the command-line flag of the same name.  Outputs are CSV with
a header row (floats at 17 significant digits, so parsing them back is
lossless) plus JSON for nested reports, and a rendered PNG figure per report
unless ``--no-figures`` is given.

Exit codes: 0 success, 2 config error, 3 numeric-range error,
4 alpha unreachable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional

import numpy as np

from . import attractor as attractor_mod
from . import bowen as bowen_mod
from . import dynamics, empirical
from .space import Grid, sample_lebesgue

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_ALPHA = 4


class ConfigError(ValueError):
    pass


def _fmt(x: float) -> str:
    return f"{x:.17g}"


@dataclass(frozen=True)
class RunConfig:
    """Fully serializable run options; config + seed reproduce every output."""

    map: str = "doubling"
    params: tuple = ()
    grid: int = 1024
    ics: int = 200
    seed: int = 1
    steps: int = 1_000_000
    alpha: float = 0.5
    eps_ladder: Optional[tuple] = None
    delta_tol: float = 0.05
    out: str = "out"
    workers: int = 1
    figures: bool = True
    sigma1: float = 2.0
    sigma2: float = 4.0
    regime: str = "B"
    cycles: int = 10_000
    transit_k: int = 10
    l0_prime: float = 3.0

    def validate(self) -> "RunConfig":
        if self.grid < 1:
            raise ConfigError("grid must be a positive integer")
        if self.ics < 1:
            raise ConfigError("ics must be at least 1")
        if self.steps < 1:
            raise ConfigError("steps must be at least 1")
        if not (0.0 < self.alpha <= 1.0):
            raise ConfigError("alpha must lie in (0, 1]")
        if not (0.0 < self.delta_tol < 1.0):
            raise ConfigError("delta_tol must lie in (0, 1)")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.regime not in ("A", "B", "C"):
            raise ConfigError("regime must be A, B or C")
        if self.cycles < 1:
            raise ConfigError("cycles must be at least 1")
        if not (self.sigma1 > 1.0 and self.sigma2 > 1.0):
            raise ConfigError("sigma1 and sigma2 must exceed 1")
        return self

    def resolved_lines(self) -> list:
        d = asdict(self)
        d["params"] = ",".join(f"{k}={_fmt(v)}" for k, v in self.params)
        d["eps_ladder"] = ("" if self.eps_ladder is None
                           else ",".join(_fmt(e) for e in self.eps_ladder))
        return [f"{k} = {d[k]}" for k in sorted(d)]


_BOOL_KEYS = {"figures"}
_INT_KEYS = {"grid", "ics", "seed", "steps", "workers", "cycles", "transit_k"}
_FLOAT_KEYS = {"alpha", "delta_tol", "sigma1", "sigma2", "l0_prime"}
_STR_KEYS = {"map", "out", "regime"}


def _parse_params(text: str) -> tuple:
    pairs = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        if "=" not in item:
            raise ConfigError(f"map parameter {item!r} is not of the form k=v")
        k, v = item.split("=", 1)
        try:
            pairs.append((k.strip(), float(v)))
        except ValueError as exc:
            raise ConfigError(f"bad map parameter value in {item!r}") from exc
    return tuple(pairs)


def _parse_ladder(text: str) -> Optional[tuple]:
    text = text.strip()
    if not text:
        return None
    try:
        return tuple(float(s) for s in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad eps-ladder value {text!r}") from exc


def _coerce(key: str, raw: str):
    raw = raw.strip()
    try:
        if key in _BOOL_KEYS:
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _STR_KEYS:
            return raw
        if key == "params":
            return _parse_params(raw)
        if key == "eps_ladder":
            return _parse_ladder(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for config key {key}: {raw!r}") from exc
    raise ConfigError(f"unknown config key: {key}")


def load_config_file(path: str) -> dict:
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key = value")
                key, raw = line.split("=", 1)
                key = key.strip()
                values[key] = _coerce(key, raw)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return values


def build_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg = replace(cfg, **load_config_file(args.config))
    overrides = {}
    for f in fields(RunConfig):
        if f.name in ("params", "eps_ladder", "figures"):
            continue
        val = getattr(args, f.name, None)
        if val is not None:
            overrides[f.name] = val
    if getattr(args, "param", None):
        merged = dict(cfg.params)
        for item in args.param:
            merged.update(dict(_parse_params(item)))
        overrides["params"] = tuple(sorted(merged.items()))
    if getattr(args, "eps_ladder", None) is not None:
        overrides["eps_ladder"] = _parse_ladder(args.eps_ladder)
    if getattr(args, "no_figures", False):
        overrides["figures"] = False
    return replace(cfg, **overrides).validate()


def _write_lines(path: str, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")


def _write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _prepare_out(cfg: RunConfig) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    if not os.access(cfg.out, os.W_OK):
        raise ConfigError(f"output path not writable: {cfg.out}")
    _write_lines(os.path.join(cfg.out, "config_resolved.txt"),
                 cfg.resolved_lines())
    return cfg.out


def _make_system(cfg: RunConfig) -> dynamics.MapSystem:
    try:
        return dynamics.make_map(cfg.map, dict(cfg.params))
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _make_traces(cfg: RunConfig, sys_map: dynamics.MapSystem):
    grid = Grid(sys_map.space, cfg.grid)
    x0s = sample_lebesgue(grid, cfg.ics, cfg.seed)
    traces = dynamics.run_orbits(sys_map, x0s, cfg.steps, grid,
                                 workers=cfg.workers)
    return grid, traces


def _require_dyadic_grid(cfg: RunConfig) -> None:
    if cfg.grid & (cfg.grid - 1) != 0:
        raise ConfigError("grid must be a power of two for weak* reports")


def cmd_simulate(cfg: RunConfig) -> int:
    _require_dyadic_grid(cfg)
    sys_map = _make_system(cfg)
    out = _prepare_out(cfg)
    grid, traces = _make_traces(cfg, sys_map)

    rows = ["ic_id,checkpoint_n,cell,count"]
    for ic, tr in enumerate(traces):
        for k, n in enumerate(tr.checkpoints):
            cells = np.nonzero(tr.counts[k])[0]
            rows.extend(f"{ic},{n},{c},{tr.counts[k][c]}" for c in cells)
    _write_lines(os.path.join(out, "orbits.csv"), rows)

    dist_rows = ["ic_id,checkpoint_n,weakstar_dist_to_final"]
    dists_per_ic = []
    for ic, tr in enumerate(traces):
        final = tr.snapshot_at(len(tr.checkpoints) - 1)
        dists = [empirical.weakstar_dist(tr.snapshot_at(k), final)
                 for k in range(len(tr.checkpoints))]
        dists_per_ic.append(dists)
        dist_rows.extend(
            f"{ic},{n},{_fmt(d)}" for n, d in zip(tr.checkpoints, dists))
    _write_lines(os.path.join(out, "snapshots.csv"), dist_rows)

    if cfg.figures:
        from . import figures

        figures.render_simulate(out, traces[0].checkpoints, dists_per_ic)
    return EXIT_OK


def _bowen_ledger(cfg: RunConfig):
    rule = {"A": bowen_mod.RULE_A, "B": bowen_mod.RULE_B,
            "C": bowen_mod.RULE_C}[cfg.regime]
    params = bowen_mod.default_saddle_params(
        rule, cfg.sigma1, cfg.sigma2, L0_prime=cfg.l0_prime,
        transit_k=cfg.transit_k)
    return params, rule, bowen_mod.run_cycles(params, rule, cfg.cycles)


def cmd_bowen(cfg: RunConfig) -> int:
    out = _prepare_out(cfg)
    params, rule, ledger = _bowen_ledger(cfg)

    rows = ["visit_index,stopping_n_log,omega_u1,omega_u2"]
    rows.extend(
        f"{v},{_fmt(ln_n)},{_fmt(w1)},{_fmt(w2)}"
        for v, ln_n, w1, w2 in zip(ledger.visit_index, ledger.ln_n,
                                   ledger.omega_u1, ledger.omega_u2))
    _write_lines(os.path.join(out, "ledger.csv"), rows)

    try:
        verdict = bowen_mod.classify_regime(ledger)
        classification = verdict.kind
        t_hat, lo, hi = verdict.t_hat, verdict.lo, verdict.hi
    except ValueError:
        classification, t_hat, lo, hi = "inconclusive", None, None, None
    _write_json(os.path.join(out, "verdict.json"), {
        "classification": classification,
        "t_hat": t_hat,
        "lo": lo,
        "hi": hi,
        "predicted_t": bowen_mod.predicted_t(cfg.sigma1, cfg.sigma2),
        "cycles_run": ledger.cycles_run,
        "truncated": ledger.truncated,
    })
    if cfg.figures:
        from . import figures

        figures.render_bowen(out, ledger)
    return EXIT_OK


def _report_json(report) -> dict:
    data = {
        "cells": report.cells.indices.tolist(),
        "alpha": report.alpha,
        "basin_fraction": report.fraction,
        "removal_trace": [[int(c), f] for c, f in report.removal_trace],
        "certificate": report.certificate,
        "diagnostics": report.diagnostics,
    }
    if report.support_cells is not None:
        data["support_cells"] = report.support_cells.indices.tolist()
        data["support_symmetric_difference"] = (
            report.support_symmetric_difference.indices.tolist())
    return data


def cmd_attractor(cfg: RunConfig) -> int:
    _require_dyadic_grid(cfg)
    sys_map = _make_system(cfg)
    out = _prepare_out(cfg)
    grid, traces = _make_traces(cfg, sys_map)
    report = attractor_mod.minimal_alpha_attractor(
        traces, cfg.alpha, grid, cfg.eps_ladder, cfg.delta_tol, sys_map)
    _write_json(os.path.join(out, "attractor.json"), _report_json(report))
    if cfg.figures:
        from . import figures

        occupation = np.stack(
            [t.occupancies()[t.tail_slice()].mean(axis=0) for t in traces]
        ).mean(axis=0)
        figures.render_attractor(out, report, grid, occupation)
    return EXIT_OK


def cmd_decompose(cfg: RunConfig) -> int:
    _require_dyadic_grid(cfg)
    sys_map = _make_system(cfg)
    out = _prepare_out(cfg)
    grid, traces = _make_traces(cfg, sys_map)
    deco = attractor_mod.decompose(traces, cfg.alpha, grid, cfg.eps_ladder,
                                   cfg.delta_tol, sys_map)
    _write_json(os.path.join(out, "decomposition.json"), {
        "alpha": cfg.alpha,
        "covered_fraction": deco.covered_fraction,
        "entries": [
            {
                "cells": e.report.cells.indices.tolist(),
                "alpha_i": e.alpha_i,
                "basin_fraction": e.basin_fraction,
                "residual_fraction": e.residual_fraction,
            }
            for e in deco.entries
        ],
    })
    if cfg.figures:
        from . import figures

        figures.render_decomposition(out, deco)
    return EXIT_OK


def cmd_limits(cfg: RunConfig) -> int:
    _require_dyadic_grid(cfg)
    sys_map = _make_system(cfg)
    out = _prepare_out(cfg)
    grid, traces = _make_traces(cfg, sys_map)
    classes = []
    per_ic = []
    for ic, tr in enumerate(traces):
        occ = tr.occupancies()
        tail_len = max(len(occ) - tr.tail_slice().start, min(8, len(occ)))
        snaps = [empirical.GriddedMeasure(grid, row / row.sum())
                 for row in occ[-tail_len:]]
        if len(snaps) >= 8:
            cls = empirical.limit_set_classify(snaps)
        else:
            cls = empirical.LimitSetClass("undetermined", (), tuple(snaps), {})
        classes.append(cls)
        per_ic.append({
            "ic_id": ic,
            "classification": cls.tag,
            "tail_dispersion": cls.diagnostics.get("tail_dispersion"),
        })
    reps = empirical.srb_like_estimate(classes)
    _write_json(os.path.join(out, "srb_like.json"), {
        "per_ic": per_ic,
        "representatives": [
            {"multiplicity": mult, "weights": m.weights.tolist()}
            for m, mult in reps
        ],
    })
    if cfg.figures:
        from . import figures

        figures.render_limits(out, grid, reps)
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "bowen": cmd_bowen,
    "attractor": cmd_attractor,
    "decompose": cmd_decompose,
    "limits": cmd_limits,
}


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="flat key = value config file")
    sub.add_argument("--map", help="map name")
    sub.add_argument("--param", action="append", metavar="K=V",
                     help="map parameter, repeatable")
    sub.add_argument("--grid", type=int, help="grid resolution")
    sub.add_argument("--ics", type=int, help="number of initial conditions")
    sub.add_argument("--seed", type=int, help="RNG seed")
    sub.add_argument("--steps", type=int, help="orbit length")
    sub.add_argument("--alpha", type=float, help="observability level")
    sub.add_argument("--eps-ladder", dest="eps_ladder",
                     help="comma-separated decreasing epsilons")
    sub.add_argument("--delta-tol", dest="delta_tol", type=float,
                     help="basin frequency tolerance")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--workers", type=int, help="worker count")
    sub.add_argument("--no-figures", dest="no_figures", action="store_true",
                     help="skip figure rendering")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="statattract",
        description="statistical attractors of discrete-time dynamical systems")
    subs = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "attractor", "decompose", "limits"):
        sub = subs.add_parser(name)
        _add_common(sub)
    sub = subs.add_parser("bowen")
    _add_common(sub)
    sub.add_argument("--sigma1", type=float, help="expanding eigenvalue at x1")
    sub.add_argument("--sigma2", type=float, help="expanding eigenvalue at x2")
    sub.add_argument("--regime", choices=("A", "B", "C"))
    sub.add_argument("--cycles", type=int, help="number of full cycles")
    sub.add_argument("--transit-k", dest="transit_k", type=int,
                     help="steps per half-transit")
    sub.add_argument("--l0-prime", dest="l0_prime", type=float,
                     help="initial -ln distance to x1")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        cfg = build_config(args)
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (dynamics.NumericRangeError, bowen_mod.CycleOverflowError) as exc:
        print(f"numeric range error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except attractor_mod.AlphaUnreachableError as exc:
        print(f"alpha unreachable: {exc}", file=sys.stderr)
        return EXIT_ALPHA


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
