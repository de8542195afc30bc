"""Command-line front end.

Exit status: 0 on success, 1 for configuration or I/O errors, 2 when
``validate`` finds a failing criterion.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from importlib import resources
from pathlib import Path

import jsonschema

from . import edpf, edvci
from .config import ConfigError, ExperimentConfig, load_config, parse_list
from .grid import Grid
from .levy_model import phi_inverse
from .mc_sim import TARGETS, SimConfig, estimate, record_count_frequencies, simulate
from .scale import default_grid, f1, ruin_probability, scale_function, scale_parts
from .validation import CRITERIA, report_text, run_validation

COMMANDS = ("phi", "ruin", "scale", "edpf", "edvci", "simulate", "validate")
SCHEMA_VERSION = 1


class UsageError(ValueError):
    pass


def _grid(cfg: ExperimentConfig, q: float, x: float) -> Grid:
    g = cfg.grid
    if g.delta is not None:
        grid = Grid(g.delta, int(round(g.x_max / g.delta)))
        try:
            grid.index(x)
        except ValueError as exc:
            raise UsageError(f"[grid] delta: {exc}") from None
        return grid
    return default_grid(cfg.model, q, x, cells=g.cells)


def _num(v):
    return None if v is None else float(v)


def cmd_phi(cfg: ExperimentConfig) -> list[dict]:
    return [{"q": q, "phi": phi_inverse(cfg.model, q)} for q in cfg.q]


def cmd_ruin(cfg: ExperimentConfig) -> list[dict]:
    rows = []
    for x in cfg.x:
        grid = _grid(cfg, 0.0, x)
        rows.append({"x": x, "ruin_probability": ruin_probability(cfg.model, grid).at(x)})
    return rows


def cmd_scale(cfg: ExperimentConfig) -> list[dict]:
    rows = []
    for q in cfg.q:
        for x in cfg.x:
            grid = _grid(cfg, q, x)
            i = grid.index(x)
            parts = scale_parts(cfg.model, q, grid)
            f = f1(cfg.model, q, grid)
            rows.append({
                "q": q,
                "x": x,
                "W_q": float(scale_function(cfg.model, q, grid).values[i]),
                "W_phi": float(parts.w_tilted[i]),
                "f1_density": float(f.values[i]),
                "f1_atom": float(f.atom0),
            })
    return rows


def cmd_edpf(cfg: ExperimentConfig) -> list[dict]:
    pen = edpf.named_penalty(cfg.penalty)
    pen.validate()
    rows = []
    for q in cfg.q:
        for x in cfg.x:
            grid = _grid(cfg, q, x)
            classic = edpf.classic_edpf(cfg.model, q, x, pen.first, grid)
            scale_form = edpf.edpf_scale_form(cfg.model, q, x, pen.first, grid)
            ext = edpf.extended_edpf(cfg.model, q, x, pen, grid) if x > 0 else None
            rows.append({
                "q": q,
                "x": x,
                "penalty": cfg.penalty,
                "classic": classic,
                "scale_form": scale_form,
                "extended": None if ext is None else ext.value,
                "truncation_bound": None if ext is None else ext.truncation_bound,
            })
    return rows


def cmd_edvci(cfg: ExperimentConfig) -> list[dict]:
    rows = []
    for q in cfg.q:
        for x in cfg.x:
            rep = edvci.edvci_value(cfg.model, q, x, _grid(cfg, q, x))
            row = rep.as_dict()
            row["classical_V"] = _num(row["classical_V"])
            rows.append(row)
    return rows


def cmd_simulate(cfg: ExperimentConfig) -> list[dict]:
    if cfg.target not in TARGETS:
        raise UsageError(f"[query] target: unknown target {cfg.target!r}; choose from {TARGETS}")
    pen = edpf.named_penalty(cfg.penalty) if cfg.target in ("classic_edpf", "extended_edpf") else None
    rows = []
    for q in cfg.q:
        for x in cfg.x:
            sim = SimConfig(cfg.model, x, q, cfg.paths, cfg.seed, cfg.t_max, cfg.bridge_correction)
            if cfg.target == "n_law":
                freq = record_count_frequencies(simulate(sim), cfg.n_max)
                for n, k in enumerate(freq):
                    rows.append({"target": f"n_law[{n}{'+' if n == cfg.n_max else ''}]", "q": q, "x": x,
                                 "estimate": k / cfg.paths, "se": (k / cfg.paths * (1 - k / cfg.paths) / cfg.paths) ** 0.5,
                                 "paths": cfg.paths, "seed": cfg.seed, "horizon_bias": 0.0})
                continue
            est = estimate(sim, cfg.target, penalty=pen)
            rows.append({"target": cfg.target, "q": q, "x": x, "estimate": est.value, "se": est.se,
                         "paths": cfg.paths, "seed": cfg.seed, "horizon_bias": est.horizon_bias})
    return rows


HANDLERS = {
    "phi": cmd_phi, "ruin": cmd_ruin, "scale": cmd_scale, "edpf": cmd_edpf,
    "edvci": cmd_edvci, "simulate": cmd_simulate,
}


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


def render_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    keys = list(rows[0])
    writer.writerow(keys)
    for row in rows:
        writer.writerow([_cell(row[k]) for k in keys])
    return buf.getvalue()


def load_schema(command: str) -> dict:
    text = resources.files("ruinkit").joinpath("schemas", f"{command}.json").read_text()
    return json.loads(text)


def render_json(command: str, rows: list[dict], extra: dict | None = None) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "command": command, "rows": rows}
    if extra:
        doc.update(extra)
    jsonschema.validate(doc, load_schema(command))
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _summary(rows: list[dict], limit: int = 20) -> str:
    if not rows:
        return "(no rows)"
    keys = list(rows[0])
    cells = [[k for k in keys]] + [
        [f"{v:.6g}" if isinstance(v, float) else ("" if v is None else str(v)) for v in (r[k] for k in keys)]
        for r in rows[:limit]
    ]
    widths = [max(len(row[i]) for row in cells) for i in range(len(keys))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]
    if len(rows) > limit:
        lines.append(f"... {len(rows) - limit} more rows")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ruinkit", description="Ruin-theory quantities for Brownian-perturbed subordinator models.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="experiment config file (INI, see README)")
    p.add_argument("--out", help="output file (default: [output] path of the config)")
    p.add_argument("--format", choices=("csv", "json"), help="output format")
    p.add_argument("--seed", type=int, help="simulation seed (unsigned 64-bit)")
    p.add_argument("--paths", type=int, help="number of simulated paths")
    p.add_argument("--q", help="comma-separated discount rates")
    p.add_argument("--x", help="comma-separated initial surplus values")
    p.add_argument("--penalty", help="named penalty, e.g. deficit or capped_deficit:2+capped_increment:2")
    p.add_argument("--target", help="simulation target for 'simulate'")
    p.add_argument("--criteria", help="comma-separated criterion numbers for 'validate'")
    return p


def _apply_flags(cfg: ExperimentConfig, args) -> ExperimentConfig:
    kw = {}
    if args.q is not None:
        kw["q"] = parse_list("flags", "--q", args.q)
    if args.x is not None:
        kw["x"] = parse_list("flags", "--x", args.x)
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("--seed: must be an unsigned 64-bit integer")
        kw["seed"] = args.seed
    if args.paths is not None:
        if args.paths < 2:
            raise ConfigError("--paths: need at least 2")
        kw["paths"] = args.paths
    kw["penalty"] = args.penalty
    kw["target"] = args.target
    kw["out_format"] = args.format
    kw["out_path"] = args.out
    return cfg.with_overrides(**kw)


def _write(path: str | None, text: str) -> None:
    if path is None:
        return
    try:
        Path(path).write_text(text, newline="")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot write output: {exc.strerror}") from None


def _run_validate(args) -> int:
    paths = args.paths if args.paths is not None else 100_000
    seed = args.seed if args.seed is not None else 0
    fmt = args.format or "csv"
    only = None
    if args.criteria:
        try:
            only = [int(s) for s in args.criteria.split(",") if s.strip()]
        except ValueError:
            raise ConfigError(f"--criteria: expected integers, got {args.criteria!r}") from None
        bad = [n for n in only if n not in CRITERIA]
        if bad:
            raise ConfigError(f"--criteria: unknown criterion {bad[0]}")
    results = run_validation(paths, seed, only)
    text = report_text(results, paths, seed)
    print(text, end="")
    rows = [
        {"criterion": r.number, "title": r.title, "passed": r.passed, "checks": len(r.details),
         "failed_checks": sum(not d["ok"] for d in r.details)}
        for r in results
    ]
    if args.out:
        if fmt == "json":
            details = {str(r.number): [{k: v for k, v in d.items()} for d in r.details] for r in results}
            _write(args.out, render_json("validate", rows, {"paths": paths, "seed": seed, "details": details}))
        else:
            _write(args.out, render_csv(rows))
    return 0 if all(r.passed for r in results) else 2


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "validate":
            return _run_validate(args)
        if args.config is None:
            raise ConfigError("--config: required for this command")
        cfg = _apply_flags(load_config(args.config), args)
        rows = HANDLERS[args.command](cfg)
        text = render_json(args.command, rows) if cfg.out_format == "json" else render_csv(rows)
        print(_summary(rows))
        if cfg.out_path is None:
            sys.stdout.write(text)
        else:
            _write(cfg.out_path, text)
            print(f"wrote {cfg.out_path}")
        return 0
    except ValueError as exc:
        # configuration, penalty and model errors all derive from ValueError
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
