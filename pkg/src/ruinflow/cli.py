"""Config-driven experiment runner.

A single JSON document declares the model (claims, dependence, target or
ruin set, arrival process, return process), the experiment to run, the
simulation budget, and the output destination.  Each run writes

* the result table (``.csv`` or ``.json``),
* a fully resolved configuration echo (``.config.json``) whose re-run
  reproduces the outputs bit for bit, and
* a one-page plain-text report (``.report.txt``) naming the asymptotic mode
  applied and every hypothesis checked, with pass/fail.

Exit codes: 0 success, 2 hypothesis-gate failure, 3 configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np
import jsonschema

from . import __version__
from .dependence import ClaimModel, NoExceedanceError, UnsupportedModelError
from .estimators import (
    HypothesisError,
    ModelSpec,
    entrance_time_cdf,
    resolve_finite_mode,
    resolve_infinite_mode,
)
from .heavy_tails import (
    CubicSurvival,
    HarmonicSurvival,
    HeavyWeibull,
    Lognormal,
    Pareto,
)
from .montecarlo import (
    SimConfig,
    empirical_entrance,
    empirical_entrance_time,
    single_big_jump_check,
)
from .processes import (
    BrownianDrift,
    CompoundPoissonDrift,
    Deterministic,
    Erlang,
    ExponentialJumps,
    FixedJumps,
    Poisson,
    RenewalIID,
)
from .rare_sets import (
    AnyLineNegative,
    HalfSpace,
    MaxExceed,
    PolyhedralUnion,
    Ray,
    WeightedSumNegative,
)
from .ruin import PremiumSchedule, RuinModel, empirical_ruin

__all__ = ["run", "main", "CONFIG_SCHEMA"]

THREADS_ENV = "RUINFLOW_THREADS"

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_vec = {"type": "array", "items": _num, "minItems": 1}

_MARGIN_SCHEMA = {
    "type": "object",
    "oneOf": [
        {"properties": {"type": {"const": "pareto"}, "alpha": _pos, "scale": _pos},
         "required": ["type", "alpha"], "additionalProperties": False},
        {"properties": {"type": {"const": "heavy_weibull"}, "shape": _pos, "scale": _pos},
         "required": ["type", "shape"], "additionalProperties": False},
        {"properties": {"type": {"const": "lognormal"}, "mu": _num, "sigma": _pos},
         "required": ["type", "mu", "sigma"], "additionalProperties": False},
        {"properties": {"type": {"const": "cubic_survival"}},
         "required": ["type"], "additionalProperties": False},
        {"properties": {"type": {"const": "harmonic_survival"}},
         "required": ["type"], "additionalProperties": False},
    ],
}

_HALF_SPACE_SCHEMA = {
    "type": "object",
    "properties": {"type": {"const": "half_space"}, "l": _vec, "b": _pos},
    "required": ["type", "l", "b"],
    "additionalProperties": False,
}

_SET_SCHEMA = {
    "type": "object",
    "oneOf": [
        {"properties": {"type": {"const": "max_exceed"}, "b": _vec},
         "required": ["type", "b"], "additionalProperties": False},
        _HALF_SPACE_SCHEMA,
        {"properties": {"type": {"const": "ray"}, "b": _pos},
         "required": ["type", "b"], "additionalProperties": False},
        {"properties": {"type": {"const": "polyhedral_union"},
                        "parts": {"type": "array", "items": _HALF_SPACE_SCHEMA, "minItems": 1}},
         "required": ["type", "parts"], "additionalProperties": False},
    ],
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "model": {
            "type": "object",
            "properties": {
                "claim": {
                    "type": "object",
                    "properties": {
                        "dependence": {
                            "type": "object",
                            "oneOf": [
                                {"properties": {"type": {"const": "iid"}},
                                 "required": ["type"], "additionalProperties": False},
                                {"properties": {"type": {"const": "fgm_chain"},
                                                "theta": {"type": "number", "minimum": -1, "maximum": 1}},
                                 "required": ["type", "theta"], "additionalProperties": False},
                                {"properties": {"type": {"const": "cubic_pair"}},
                                 "required": ["type"], "additionalProperties": False},
                            ],
                        },
                        "margins": {"type": "array", "items": _MARGIN_SCHEMA, "minItems": 1},
                    },
                    "required": ["dependence"],
                    "additionalProperties": False,
                },
                "set": _SET_SCHEMA,
                "ruin": {
                    "type": "object",
                    "properties": {
                        "set": {
                            "type": "object",
                            "oneOf": [
                                {"properties": {"type": {"const": "any_line_negative"}},
                                 "required": ["type"], "additionalProperties": False},
                                {"properties": {"type": {"const": "weighted_sum_negative"},
                                                "weights": _vec},
                                 "required": ["type"], "additionalProperties": False},
                            ],
                        },
                        "alloc": _vec,
                        "premiums": {
                            "type": "object",
                            "properties": {
                                "breaks": _vec,
                                "rates": {"type": "array",
                                          "items": _vec, "minItems": 1},
                            },
                            "required": ["breaks", "rates"],
                            "additionalProperties": False,
                        },
                    },
                    "required": ["set", "alloc"],
                    "additionalProperties": False,
                },
                "renewal": {
                    "type": "object",
                    "oneOf": [
                        {"properties": {"type": {"const": "poisson"}, "rate": _pos},
                         "required": ["type", "rate"], "additionalProperties": False},
                        {"properties": {"type": {"const": "renewal_erlang"},
                                        "k": {"type": "integer", "minimum": 1}, "rate": _pos},
                         "required": ["type", "k", "rate"], "additionalProperties": False},
                    ],
                },
                "return": {
                    "type": "object",
                    "oneOf": [
                        {"properties": {"type": {"const": "deterministic"}, "rate": {"type": "number", "minimum": 0}},
                         "required": ["type", "rate"], "additionalProperties": False},
                        {"properties": {"type": {"const": "brownian"}, "mu": _num,
                                        "sigma": {"type": "number", "minimum": 0}},
                         "required": ["type", "mu", "sigma"], "additionalProperties": False},
                        {"properties": {"type": {"const": "compound_poisson"}, "drift": _num,
                                        "jump_rate": _pos,
                                        "jumps": {
                                            "type": "object",
                                            "oneOf": [
                                                {"properties": {"type": {"const": "exponential"}, "mean": _pos},
                                                 "required": ["type", "mean"], "additionalProperties": False},
                                                {"properties": {"type": {"const": "fixed"}, "size": _num},
                                                 "required": ["type", "size"], "additionalProperties": False},
                                            ],
                                        }},
                         "required": ["type", "drift", "jump_rate", "jumps"],
                         "additionalProperties": False},
                    ],
                },
            },
            "required": ["claim", "renewal", "return"],
            "additionalProperties": False,
        },
        "experiment": {"enum": ["entrance", "ruin", "entrance_time",
                                 "single_big_jump", "convergence_study",
                                 "assumption_report"]},
        "sim": {
            "type": "object",
            "properties": {
                "n_paths": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "workers": {"type": "integer", "minimum": 1},
                "x_grid": {"type": "array", "items": _num},
                "horizon": {"oneOf": [_pos, {"const": "inf"}]},
                "ci_level": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            },
            "required": ["n_paths", "seed", "horizon"],
            "additionalProperties": False,
        },
        "entrance_time": {
            "type": "object",
            "properties": {"x": _pos, "t_grid": _vec},
            "required": ["x", "t_grid"],
            "additionalProperties": False,
        },
        "big_jump": {
            "type": "object",
            "properties": {"weights": _vec},
            "required": ["weights"],
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {"path": {"type": "string"}, "format": {"enum": ["csv", "json"]}},
            "required": ["path"],
            "additionalProperties": False,
        },
        "unsafe": {"type": "boolean"},
    },
    "required": ["model", "experiment", "sim", "output"],
    "additionalProperties": False,
}

_SIM_DEFAULTS = {"workers": 1, "ci_level": 0.95, "x_grid": []}
_OUTPUT_DEFAULTS = {"format": "csv"}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config -> model objects


def _build_margin(spec: dict):
    kind = spec["type"]
    if kind == "pareto":
        return Pareto(alpha=spec["alpha"], scale=spec.get("scale", 1.0))
    if kind == "heavy_weibull":
        return HeavyWeibull(shape=spec["shape"], scale=spec.get("scale", 1.0))
    if kind == "lognormal":
        return Lognormal(mu=spec["mu"], sigma=spec["sigma"])
    if kind == "cubic_survival":
        return CubicSurvival()
    if kind == "harmonic_survival":
        return HarmonicSurvival()
    raise ConfigError(f"unknown margin type {kind!r}")


def _build_claim(spec: dict) -> ClaimModel:
    dep = spec["dependence"]
    kind = dep["type"]
    if kind == "cubic_pair":
        if "margins" in spec:
            raise ConfigError("cubic_pair fixes its margins; remove the margins block")
        return ClaimModel.cubic_pair()
    if "margins" not in spec:
        raise ConfigError("claim block needs margins")
    margins = tuple(_build_margin(m) for m in spec["margins"])
    if kind == "iid":
        return ClaimModel.iid(margins)
    if kind == "fgm_chain":
        if len(margins) != 2 or margins[0] != margins[1]:
            raise ConfigError("fgm_chain needs two identical margins")
        return ClaimModel.fgm_chain(dep["theta"], margins[0])
    raise ConfigError(f"unknown dependence type {kind!r}")


def _build_set(spec: dict):
    kind = spec["type"]
    if kind == "max_exceed":
        return MaxExceed(b=tuple(spec["b"]))
    if kind == "half_space":
        return HalfSpace(l=tuple(spec["l"]), b=spec["b"])
    if kind == "ray":
        return Ray(b=spec["b"])
    if kind == "polyhedral_union":
        return PolyhedralUnion(parts=tuple(_build_set(p) for p in spec["parts"]))
    raise ConfigError(f"unknown set type {kind!r}")


def _build_ruin_set(spec: dict):
    if spec["type"] == "any_line_negative":
        return AnyLineNegative()
    if spec["type"] == "weighted_sum_negative":
        w = spec.get("weights")
        return WeightedSumNegative(weights=tuple(w) if w is not None else None)
    raise ConfigError(f"unknown ruin set type {spec['type']!r}")


def _build_renewal(spec: dict):
    if spec["type"] == "poisson":
        return Poisson(rate=spec["rate"])
    return RenewalIID(interarrival=Erlang(k=spec["k"], rate=spec["rate"]))


def _build_return(spec: dict):
    kind = spec["type"]
    if kind == "deterministic":
        return Deterministic(rate=spec["rate"])
    if kind == "brownian":
        return BrownianDrift(mu=spec["mu"], sigma=spec["sigma"])
    jumps = spec["jumps"]
    jl = ExponentialJumps(mean=jumps["mean"]) if jumps["type"] == "exponential" \
        else FixedJumps(size=jumps["size"])
    return CompoundPoissonDrift(drift=spec["drift"], jump_rate=spec["jump_rate"], jumps=jl)


def _resolve_config(raw: dict, overrides: dict) -> dict:
    """Validate, fill defaults, apply command-line overrides."""
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config rejected: {exc.message} (at {list(exc.absolute_path)})")
    cfg = json.loads(json.dumps(raw))  # deep copy, JSON types only
    for key, default in _SIM_DEFAULTS.items():
        cfg["sim"].setdefault(key, default)
    for key, default in _OUTPUT_DEFAULTS.items():
        cfg["output"].setdefault(key, default)
    cfg.setdefault("unsafe", False)
    applied = {}
    if overrides.get("seed") is not None:
        cfg["sim"]["seed"] = applied["seed"] = overrides["seed"]
    if overrides.get("threads") is not None:
        cfg["sim"]["workers"] = applied["threads"] = overrides["threads"]
    if overrides.get("out") is not None:
        cfg["output"]["path"] = applied["out"] = overrides["out"]
    if overrides.get("format") is not None:
        cfg["output"]["format"] = applied["format"] = overrides["format"]
    if overrides.get("unsafe"):
        cfg["unsafe"] = applied["unsafe"] = True
    cfg["_overrides_applied"] = applied
    exp = cfg["experiment"]
    if exp == "entrance_time" and "entrance_time" not in cfg:
        raise ConfigError("entrance_time experiment needs an entrance_time block")
    if exp == "single_big_jump" and "big_jump" not in cfg:
        raise ConfigError("single_big_jump experiment needs a big_jump block")
    if exp in ("entrance", "ruin", "convergence_study", "single_big_jump") \
            and not cfg["sim"]["x_grid"]:
        raise ConfigError(f"{exp} experiment needs a nonempty sim.x_grid")
    if exp == "ruin" and "ruin" not in cfg["model"]:
        raise ConfigError("ruin experiment needs a model.ruin block")
    if "set" not in cfg["model"] and "ruin" not in cfg["model"]:
        raise ConfigError("model needs a set block or a ruin block")
    return cfg


def _sim_config(cfg: dict) -> SimConfig:
    sim = cfg["sim"]
    horizon = math.inf if sim["horizon"] == "inf" else float(sim["horizon"])
    return SimConfig(
        n_paths=sim["n_paths"], seed=sim["seed"], horizon=horizon,
        x_grid=tuple(sim["x_grid"]), n_workers=sim["workers"],
        ci_level=sim["ci_level"],
    )


def _model_spec(cfg: dict):
    model = cfg["model"]
    claim = _build_claim(model["claim"])
    renewal = _build_renewal(model["renewal"])
    ret = _build_return(model["return"])
    if "ruin" in model:
        rblock = model["ruin"]
        premiums = None
        if "premiums" in rblock:
            premiums = PremiumSchedule(breaks=tuple(rblock["premiums"]["breaks"]),
                                       rates=tuple(tuple(r) for r in rblock["premiums"]["rates"]))
        ruin_model = RuinModel(claim=claim, renewal=renewal, ret=ret,
                               alloc=tuple(rblock["alloc"]),
                               ruin_set=_build_ruin_set(rblock["set"]),
                               premiums=premiums)
        return ruin_model.entrance_model(), ruin_model
    if "set" not in model:
        raise ConfigError("model needs a set block for this experiment")
    spec = ModelSpec(claim=claim, rare_set=_build_set(model["set"]),
                     renewal=renewal, ret=ret)
    return spec, None


# ---------------------------------------------------------------------------
# report


def _mode_lines(model: ModelSpec, horizon: float) -> list[str]:
    lines = []
    if math.isinf(horizon):
        report = resolve_infinite_mode(model)
    else:
        report = resolve_finite_mode(model, horizon)
    lines.append(f"asymptotic mode: {report.mode or 'NONE AVAILABLE'}")
    for name, ok, detail in report.checks:
        lines.append(f"  [{'pass' if ok else 'FAIL'}] {name}: {detail}")
    return lines


def _write_rows(rows: list[dict], cols: list[str], path: Path, fmt: str) -> None:
    import csv as _csv

    if fmt == "json":
        with open(path, "w") as fh:
            json.dump(rows, fh, indent=1)
            fh.write("\n")
        return
    with open(path, "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(cols)
        for row in rows:
            w.writerow(["" if row[c] is None else row[c] for c in cols])


def run(config_path, overrides: dict | None = None) -> int:
    """Execute the experiment described by the config file.

    Returns the process exit code: 0 on success, 2 when an asymptotic-mode
    hypothesis fails, 3 on configuration errors.
    """
    overrides = overrides or {}
    t_start = time.monotonic()
    try:
        raw = json.loads(Path(config_path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    try:
        cfg = _resolve_config(raw, overrides)
        spec, ruin_model = _model_spec(cfg)
        sim = _sim_config(cfg)
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3

    out_base = Path(cfg["output"]["path"])
    out_base.parent.mkdir(parents=True, exist_ok=True)
    fmt = cfg["output"]["format"]
    unsafe = bool(cfg["unsafe"])
    exp = cfg["experiment"]
    report_lines = [
        f"ruinflow {__version__} experiment report",
        f"experiment: {exp}",
        f"config: {config_path}",
        f"overrides: {cfg['_overrides_applied'] or 'none'}",
        "",
    ]
    if unsafe:
        report_lines.append("*** hypotheses not verified (unsafe override) ***")

    table_path = out_base.with_suffix(f".{fmt}")
    try:
        if exp == "assumption_report":
            report_lines += _mode_lines(spec, sim.horizon)
            code = 0 if _gates_pass(spec, sim.horizon) else 2
        elif exp in ("entrance", "convergence_study"):
            table = empirical_entrance(spec, sim, unsafe=unsafe)
            report_lines += _mode_lines(spec, sim.horizon)
            report_lines.append(f"rows: {len(table.x)}  flagged (zero exceedances): "
                                f"{[float(v) for v in table.flagged]}")
            if exp == "convergence_study":
                finite = table.ratio[~np.isnan(table.ratio)]
                if finite.size >= 3:
                    spread = float(finite[-3:].max() - finite[-3:].min())
                    report_lines.append(f"final-three-point ratio spread: {spread:.4f}")
            if math.isinf(sim.horizon):
                report_lines.append(
                    f"truncation horizon: {table.meta['truncation_horizon']:.4g}; "
                    f"tail bound (relative): {table.meta['tail_bound_rel']:.3e}")
            table.to_csv(table_path) if fmt == "csv" else table.to_json(table_path)
            code = 0
        elif exp == "ruin":
            table = empirical_ruin(ruin_model, sim.x_grid, sim.horizon, sim, unsafe=unsafe)
            report_lines += _mode_lines(spec, sim.horizon)
            report_lines.append(f"ruin set: {ruin_model.ruin_set.name}")
            table.to_csv(table_path) if fmt == "csv" else table.to_json(table_path)
            code = 0
        elif exp == "entrance_time":
            block = cfg["entrance_time"]
            table = empirical_entrance_time(spec, block["x"], block["t_grid"], sim,
                                            unsafe=unsafe)
            rows = table.rows()
            if _entrance_time_limit_applies(spec):
                alpha = spec.claim.common_tail_index()
                for row in rows:
                    row["limit"] = entrance_time_cdf(alpha, spec.ret.rate, row["t"])
                cols = ["t", "cdf", "count", "limit"]
            else:
                cols = ["t", "cdf", "count"]
            report_lines += _mode_lines(spec, sim.horizon)
            report_lines.append(f"entered paths: {table.entered} of {table.n_paths}")
            _write_rows(rows, cols, table_path, fmt)
            code = 0
        elif exp == "single_big_jump":
            weights = cfg["big_jump"]["weights"]
            table = single_big_jump_check(spec.claim, spec.rare_set, weights,
                                          sim.x_grid, sim)
            rows = table.rows()
            _write_rows(rows, ["x", "sum_p", "marginal_p_total", "ratio",
                               "sum_count", "ci_lo", "ci_hi"], table_path, fmt)
            report_lines.append(f"weights: {list(weights)}")
            code = 0
        else:  # pragma: no cover - schema forbids
            raise ConfigError(f"unknown experiment {exp!r}")
    except HypothesisError as exc:
        for line in _mode_lines(spec, sim.horizon):
            report_lines.append(line)
        report_lines.append(f"gate failure: {exc}")
        _finish_report(out_base, report_lines, t_start)
        print(f"hypothesis gate failure: {exc}", file=sys.stderr)
        _echo_config(out_base, cfg)
        return 2
    except (UnsupportedModelError, NoExceedanceError, NotImplementedError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3

    _echo_config(out_base, cfg)
    report_lines.append(f"table: {table_path}" if exp != "assumption_report"
                        else "table: none (assumption report only)")
    _finish_report(out_base, report_lines, t_start)
    return code


def _gates_pass(spec: ModelSpec, horizon: float) -> bool:
    report = resolve_infinite_mode(spec) if math.isinf(horizon) \
        else resolve_finite_mode(spec, horizon)
    return report.mode is not None


def _entrance_time_limit_applies(spec: ModelSpec) -> bool:
    return (isinstance(spec.ret, Deterministic) and spec.ret.rate > 0
            and isinstance(spec.renewal, Poisson)
            and spec.claim.common_tail_index() is not None)


def _echo_config(out_base: Path, cfg: dict) -> None:
    echo = {k: v for k, v in cfg.items() if not k.startswith("_")}
    echo["_overrides_applied"] = cfg.get("_overrides_applied", {})
    with open(out_base.with_suffix(".config.json"), "w") as fh:
        json.dump(echo, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _finish_report(out_base: Path, lines: list[str], t_start: float) -> None:
    lines.append(f"elapsed: {time.monotonic() - t_start:.2f} s")
    out_base.with_suffix(".report.txt").write_text("\n".join(lines) + "\n")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ruinflow",
        description="Run entrance/ruin experiments from a JSON config.")
    parser.add_argument("--config", required=True, help="path to the JSON config")
    parser.add_argument("--seed", type=int, default=None, help="override sim.seed")
    parser.add_argument("--threads", type=int, default=None,
                        help=f"override sim.workers (falls back to ${THREADS_ENV})")
    parser.add_argument("--out", default=None, help="override output.path")
    parser.add_argument("--format", choices=["csv", "json"], default=None,
                        help="override output.format")
    parser.add_argument("--unsafe", action="store_true",
                        help="bypass hypothesis gates; outputs are watermarked")
    args = parser.parse_args(argv)
    threads = args.threads
    if threads is None and os.environ.get(THREADS_ENV):
        try:
            threads = int(os.environ[THREADS_ENV])
        except ValueError:
            print(f"config error: ${THREADS_ENV} is not an integer", file=sys.stderr)
            return 3
    return run(args.config, {
        "seed": args.seed,
        "threads": threads,
        "out": args.out,
        "format": args.format,
        "unsafe": args.unsafe,
    })


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
