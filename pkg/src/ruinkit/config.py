"""Experiment configuration files.

INI dialect read with :mod:`configparser` (``=`` or ``:`` separators,
``#``/``;`` comments, lists comma-separated).  Example::

    [ruinkit]
    version = 1

    [model]
    c = 1.5
    sigma = 1.0
    claims = exponential      ; exponential | gamma | uniform | tabulated
    lam = 1
    mu = 1

    [grid]                    ; optional
    cells = 8192              ; or delta + x_max

    [query]
    q = 0.5, 1
    x = 0.5, 1
    penalty = capped_deficit:2+capped_increment:2
    target = edvci
    paths = 100000
    seed = 12345
    t_max = 200

    [output]
    format = csv
    path = results.csv

Tabulated claims read ``tail_file``: a two-column CSV ``y,tail`` with header.
"""

from __future__ import annotations

import configparser
import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .levy_model import LevyMeasureSpec, LevyModel, ModelError

CONFIG_VERSION = 1

_CLAIM_PARAMS = {
    "exponential": ("lam", "mu"),
    "gamma": ("lam", "shape", "rate"),
    "uniform": ("lam", "a", "b"),
    "tabulated": ("tail_file",),
}
_ALLOWED = {
    "ruinkit": {"version"},
    "model": {"c", "sigma", "claims", "lam", "mu", "shape", "rate", "a", "b", "tail_file"},
    "grid": {"cells", "delta", "x_max"},
    "query": {"q", "x", "penalty", "target", "paths", "seed", "t_max", "n_max", "bridge_correction"},
    "output": {"format", "path"},
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the section and field."""


@dataclass(frozen=True)
class GridOverrides:
    cells: int | None = None
    delta: float | None = None
    x_max: float | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    model: LevyModel
    grid: GridOverrides = field(default_factory=GridOverrides)
    q: tuple[float, ...] = (1.0,)
    x: tuple[float, ...] = (1.0,)
    penalty: str = "deficit"
    target: str = "edvci"
    paths: int = 100_000
    seed: int = 0
    t_max: float | None = None
    n_max: int = 6
    bridge_correction: bool = True
    out_format: str = "csv"
    out_path: str | None = None
    source: str = "<memory>"

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _number(section: str, key: str, raw: str) -> float:
    try:
        val = float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected a number, got {raw!r}") from None
    if not math.isfinite(val):
        raise ConfigError(f"[{section}] {key}: must be finite, got {raw!r}")
    return val


def _integer(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected an integer, got {raw!r}") from None


def parse_list(section: str, key: str, raw: str) -> tuple[float, ...]:
    items = [s.strip() for s in raw.split(",") if s.strip()]
    if not items:
        raise ConfigError(f"[{section}] {key}: empty list")
    return tuple(_number(section, key, s) for s in items)


def _read_tail_table(path: Path) -> LevyMeasureSpec:
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"[model] tail_file: cannot read {path}: {exc.strerror}") from None
    if len(rows) < 4 or [h.strip() for h in rows[0]] != ["y", "tail"]:
        raise ConfigError(f"[model] tail_file: {path} needs a 'y,tail' header and at least 3 rows")
    try:
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    except ValueError as exc:
        raise ConfigError(f"[model] tail_file: {path}: {exc}") from None
    try:
        return LevyMeasureSpec.tabulated(data[:, 0], data[:, 1])
    except ModelError as exc:
        raise ConfigError(f"[model] tail_file: {exc}") from None


def _model(sec: configparser.SectionProxy, base: Path) -> LevyModel:
    for key in ("c", "sigma", "claims"):
        if key not in sec:
            raise ConfigError(f"[model] {key}: missing")
    kind = sec["claims"].strip()
    if kind not in _CLAIM_PARAMS:
        raise ConfigError(f"[model] claims: unknown kind {kind!r}; choose from {sorted(_CLAIM_PARAMS)}")
    for key in _CLAIM_PARAMS[kind]:
        if key not in sec:
            raise ConfigError(f"[model] {key}: missing (required by claims = {kind})")
    extra = set(sec) - {"c", "sigma", "claims", *_CLAIM_PARAMS[kind]}
    if extra:
        raise ConfigError(f"[model] {sorted(extra)[0]}: not a parameter of claims = {kind}")
    try:
        if kind == "tabulated":
            measure = _read_tail_table(base / sec["tail_file"].strip())
        else:
            params = [_number("model", k, sec[k]) for k in _CLAIM_PARAMS[kind]]
            measure = getattr(LevyMeasureSpec, kind)(*params)
        return LevyModel(_number("model", "c", sec["c"]), _number("model", "sigma", sec["sigma"]), measure)
    except ModelError as exc:
        raise ConfigError(f"[model] {exc}") from None


def parse_config(text: str, source: str = "<memory>", base: Path | None = None) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    base = base if base is not None else Path(".")
    for name in parser.sections():
        if name not in _ALLOWED:
            raise ConfigError(f"[{name}]: unknown section")
        unknown = set(parser[name]) - _ALLOWED[name]
        if unknown:
            raise ConfigError(f"[{name}] {sorted(unknown)[0]}: unknown key")
    if "ruinkit" not in parser or "version" not in parser["ruinkit"]:
        raise ConfigError("[ruinkit] version: missing (first section of every config file)")
    version = _integer("ruinkit", "version", parser["ruinkit"]["version"])
    if version != CONFIG_VERSION:
        raise ConfigError(f"[ruinkit] version: unsupported version {version}, expected {CONFIG_VERSION}")
    if "model" not in parser:
        raise ConfigError("[model]: missing section")
    model = _model(parser["model"], base)

    kw: dict = {"model": model, "source": source}
    if "grid" in parser:
        g = parser["grid"]
        cells = _integer("grid", "cells", g["cells"]) if "cells" in g else None
        delta = _number("grid", "delta", g["delta"]) if "delta" in g else None
        x_max = _number("grid", "x_max", g["x_max"]) if "x_max" in g else None
        if (delta is None) != (x_max is None):
            raise ConfigError("[grid] delta: delta and x_max must be given together")
        if cells is not None and delta is not None:
            raise ConfigError("[grid] cells: give either cells or delta + x_max")
        if cells is not None and cells < 16:
            raise ConfigError(f"[grid] cells: need at least 16, got {cells}")
        if delta is not None and not (0 < delta < x_max):
            raise ConfigError("[grid] delta: need 0 < delta < x_max")
        kw["grid"] = GridOverrides(cells, delta, x_max)
    if "query" in parser:
        qs = parser["query"]
        if "q" in qs:
            kw["q"] = parse_list("query", "q", qs["q"])
            if any(v < 0 for v in kw["q"]):
                raise ConfigError("[query] q: discount rates must be >= 0")
        if "x" in qs:
            kw["x"] = parse_list("query", "x", qs["x"])
            if any(v < 0 for v in kw["x"]):
                raise ConfigError("[query] x: initial surplus must be >= 0")
        for key in ("penalty", "target"):
            if key in qs:
                kw[key] = qs[key].strip()
        if "paths" in qs:
            kw["paths"] = _integer("query", "paths", qs["paths"])
            if kw["paths"] < 2:
                raise ConfigError("[query] paths: need at least 2")
        if "seed" in qs:
            kw["seed"] = _integer("query", "seed", qs["seed"])
            if not 0 <= kw["seed"] < 2**64:
                raise ConfigError("[query] seed: must be an unsigned 64-bit integer")
        if "t_max" in qs:
            kw["t_max"] = _number("query", "t_max", qs["t_max"])
            if kw["t_max"] <= 0:
                raise ConfigError("[query] t_max: must be positive")
        if "n_max" in qs:
            kw["n_max"] = _integer("query", "n_max", qs["n_max"])
        if "bridge_correction" in qs:
            try:
                kw["bridge_correction"] = qs.getboolean("bridge_correction")
            except ValueError:
                raise ConfigError("[query] bridge_correction: expected a boolean") from None
    if "output" in parser:
        o = parser["output"]
        if "format" in o:
            fmt = o["format"].strip()
            if fmt not in ("csv", "json"):
                raise ConfigError(f"[output] format: expected csv or json, got {fmt!r}")
            kw["out_format"] = fmt
        if "path" in o:
            kw["out_path"] = str(base / o["path"].strip())
    return ExperimentConfig(**kw)


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{p}: cannot read config: {exc.strerror}") from None
    return parse_config(text, str(p), p.parent)
