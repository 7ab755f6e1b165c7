"""Command-line interface.

Subcommands: ``fit-gaussian``, ``fit-dictionary``, ``select``,
``sweep``, ``verify``. All configuration lives in a strict JSON config
file; a handful of flags override file fields. Outputs are
machine-readable (JSON, or CSV for sweep tables) and byte-stable for a
fixed config: floats are printed with 17 significant digits and timing
columns are zeroed unless explicitly requested.

Exit codes: 0 success, 2 usage or validation error, 3 numerical
failure, 4 output I/O failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass, field

import numpy as np

from .conjugate import OracleConfig
from .exceptions import NumericalError, UsageError
from .location_scale import fit_location_scale
from .potentials import Potential, potential_from_dict
from .semidual import EmpiricalPair, pgd_fit, select_finite
from .synthetic import (
    ExperimentSpec,
    GaussianSource,
    SWEEP_COLUMNS,
    UniformCubeSource,
    random_quadratic,
    rate_sweep,
    stability_check,
    substream,
)

__all__ = ["RunConfig", "parse_config", "run", "write_report", "main"]

logger = logging.getLogger("mongefit")

COMMANDS = ("fit-gaussian", "fit-dictionary", "select", "sweep", "verify")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

# Substream roles used by the verify subcommand.
_VERIFY_PAIR_STREAM = 7
_VERIFY_EVAL_STREAM = 8

_COMMON_KEYS = {"command", "oracle", "output", "format", "seed", "log_level"}
_FILE_KEYS = {"source_csv", "target_csv", "header"}
_ALLOWED_KEYS = {
    "fit-gaussian": _COMMON_KEYS | _FILE_KEYS | {"ridge"},
    "fit-dictionary": _COMMON_KEYS | _FILE_KEYS | {"dictionary", "step", "max_iter"},
    "select": _COMMON_KEYS | _FILE_KEYS | {"candidates"},
    "sweep": _COMMON_KEYS | {"experiment", "estimator", "estimator_args", "timings"},
    "verify": _COMMON_KEYS | {"experiment", "pairs"},
}
_ORACLE_KEYS = {"tolerance", "max_iterations"}
_EXPERIMENT_KEYS = {"source", "truth", "sample_sizes", "replicates", "seed",
                    "eval_points"}
_SOURCE_KEYS = {
    "gaussian": {"kind", "mean", "cov"},
    "uniform_cube": {"kind", "radius", "dim"},
}
_ESTIMATOR_ARG_KEYS = {
    "location_scale": {"ridge"},
    "finite_select": {"candidates"},
    "pgd_dictionary": {"atoms", "step", "max_iter"},
}


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration of one CLI invocation."""

    command: str
    source_csv: str | None = None
    target_csv: str | None = None
    header: bool = False
    experiment: ExperimentSpec | None = None
    oracle: OracleConfig = field(default_factory=OracleConfig)
    output: str | None = None
    format: str = "json"
    seed: int = 0
    log_level: str = "warning"
    ridge: float = 0.0
    dictionary: tuple[Potential, ...] | None = None
    candidates: tuple[Potential, ...] | None = None
    step: float | None = None
    max_iter: int = 500
    estimator: str | None = None
    estimator_args: dict = field(default_factory=dict)
    timings: bool = False
    pairs: int = 100


def _reject_unknown(obj: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise UsageError(f"unknown key {unknown[0]!r} in {where}")


def _parse_source(obj) -> GaussianSource | UniformCubeSource:
    if not isinstance(obj, dict):
        raise UsageError("experiment source must be a JSON object")
    kind = obj.get("kind")
    if kind not in _SOURCE_KEYS:
        raise UsageError(f"unknown source kind {kind!r}")
    _reject_unknown(obj, _SOURCE_KEYS[kind], f"{kind} source")
    if kind == "gaussian":
        if "mean" not in obj or "cov" not in obj:
            raise UsageError("gaussian source requires 'mean' and 'cov'")
        return GaussianSource(np.asarray(obj["mean"], dtype=float),
                              np.asarray(obj["cov"], dtype=float))
    if "radius" not in obj or "dim" not in obj:
        raise UsageError("uniform_cube source requires 'radius' and 'dim'")
    return UniformCubeSource(radius=float(obj["radius"]), dim=int(obj["dim"]))


def _parse_experiment(obj, seed_override: int | None) -> ExperimentSpec:
    if not isinstance(obj, dict):
        raise UsageError("experiment must be a JSON object")
    _reject_unknown(obj, _EXPERIMENT_KEYS, "experiment")
    for required in ("source", "truth", "sample_sizes"):
        if required not in obj:
            raise UsageError(f"experiment requires {required!r}")
    spec = ExperimentSpec(
        source=_parse_source(obj["source"]),
        truth=potential_from_dict(obj["truth"]),
        sample_sizes=tuple(int(n) for n in obj["sample_sizes"]),
        replicates=int(obj.get("replicates", 1)),
        seed=int(obj.get("seed", 0)),
        eval_points=int(obj.get("eval_points", 10_000)),
    )
    if seed_override is not None:
        spec = dataclasses.replace(spec, seed=int(seed_override))
    return spec


def _parse_potential_list(obj, where: str) -> tuple[Potential, ...]:
    if not isinstance(obj, list) or not obj:
        raise UsageError(f"{where} must be a nonempty list of potentials")
    return tuple(potential_from_dict(item) for item in obj)


def _parse_estimator_args(estimator: str, obj: dict) -> dict:
    if estimator not in _ESTIMATOR_ARG_KEYS:
        raise UsageError(f"unknown estimator {estimator!r}")
    if not isinstance(obj, dict):
        raise UsageError("estimator_args must be a JSON object")
    _reject_unknown(obj, _ESTIMATOR_ARG_KEYS[estimator], "estimator_args")
    args = dict(obj)
    if estimator == "finite_select":
        if "candidates" not in args:
            raise UsageError("finite_select requires estimator_args.candidates")
        args["candidates"] = list(_parse_potential_list(args["candidates"],
                                                        "candidates"))
    if estimator == "pgd_dictionary":
        if "atoms" not in args:
            raise UsageError("pgd_dictionary requires estimator_args.atoms")
        args["atoms"] = list(_parse_potential_list(args["atoms"], "atoms"))
    return args


def parse_config(path: str | None = None, overrides: dict | None = None,
                 command: str | None = None) -> RunConfig:
    """Build a validated RunConfig from a JSON file plus flag overrides.

    Flag values take precedence over file fields. Unknown keys anywhere
    in the file are rejected with the offending key named; JSON syntax
    errors carry line and column.
    """
    raw: dict = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as err:
            raise UsageError(f"cannot read config file: {err}") from err
        except json.JSONDecodeError as err:
            raise UsageError(
                f"config parse error at line {err.lineno}, column {err.colno}: "
                f"{err.msg}"
            ) from err
    if not isinstance(raw, dict):
        raise UsageError("config file must contain a JSON object")

    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    if command is not None:
        file_command = raw.get("command")
        if file_command is not None and file_command != command:
            raise UsageError(
                f"config command {file_command!r} conflicts with "
                f"subcommand {command!r}"
            )
        raw["command"] = command
    cmd = raw.get("command")
    if cmd not in COMMANDS:
        raise UsageError(f"unknown command {cmd!r}; expected one of {COMMANDS}")
    if ("source_csv" in raw or "target_csv" in raw) and "experiment" in raw:
        raise UsageError("config must use input paths or an embedded "
                         "experiment, not both")
    _reject_unknown(raw, _ALLOWED_KEYS[cmd], "config")

    seed_given = "seed" in raw or "seed" in overrides
    merged = dict(raw)
    merged.update({k: v for k, v in overrides.items()
                   if k in {"seed", "output", "format", "header"}})

    oracle_raw = merged.get("oracle", {})
    if not isinstance(oracle_raw, dict):
        raise UsageError("oracle must be a JSON object")
    _reject_unknown(oracle_raw, _ORACLE_KEYS, "oracle")
    oracle_raw = dict(oracle_raw)
    if overrides.get("tolerance") is not None:
        oracle_raw["tolerance"] = overrides["tolerance"]
    oracle = OracleConfig(
        tolerance=float(oracle_raw.get("tolerance", 1e-8)),
        max_iterations=int(oracle_raw.get("max_iterations", 10_000)),
    )

    fmt = merged.get("format", "csv" if cmd == "sweep" else "json")
    if fmt not in ("csv", "json"):
        raise UsageError(f"unknown format {fmt!r}; expected 'csv' or 'json'")
    if fmt == "csv" and cmd != "sweep":
        raise UsageError("csv format is only supported for sweep output")

    seed = int(merged.get("seed", 0))
    log_level = str(merged.get("log_level", "warning"))
    if log_level.lower() not in ("debug", "info", "warning", "error"):
        raise UsageError(f"unknown log_level {log_level!r}")

    kwargs: dict = {
        "command": cmd,
        "oracle": oracle,
        "output": merged.get("output"),
        "format": fmt,
        "seed": seed,
        "log_level": log_level.lower(),
    }

    if cmd in ("fit-gaussian", "fit-dictionary", "select"):
        if "source_csv" not in merged or "target_csv" not in merged:
            raise UsageError(f"{cmd} requires 'source_csv' and 'target_csv'")
        kwargs["source_csv"] = str(merged["source_csv"])
        kwargs["target_csv"] = str(merged["target_csv"])
        kwargs["header"] = bool(merged.get("header", False))
    else:
        if "experiment" not in merged:
            raise UsageError(f"{cmd} requires an embedded 'experiment'")
        kwargs["experiment"] = _parse_experiment(
            merged["experiment"], seed if seed_given else None
        )

    if cmd == "fit-gaussian":
        ridge = float(merged.get("ridge", 0.0))
        if ridge < 0:
            raise UsageError("ridge must be nonnegative")
        kwargs["ridge"] = ridge
    if cmd == "fit-dictionary":
        if "dictionary" not in merged:
            raise UsageError("fit-dictionary requires 'dictionary'")
        kwargs["dictionary"] = _parse_potential_list(merged["dictionary"],
                                                     "dictionary")
        if merged.get("step") is not None:
            kwargs["step"] = float(merged["step"])
        max_iter = overrides.get("max_iter", merged.get("max_iter", 500))
        kwargs["max_iter"] = int(max_iter)
    if cmd == "select":
        if "candidates" not in merged:
            raise UsageError("select requires 'candidates'")
        kwargs["candidates"] = _parse_potential_list(merged["candidates"],
                                                     "candidates")
    if cmd == "sweep":
        estimator = merged.get("estimator")
        if estimator is None:
            raise UsageError("sweep requires 'estimator'")
        kwargs["estimator"] = str(estimator)
        kwargs["estimator_args"] = _parse_estimator_args(
            str(estimator), merged.get("estimator_args", {})
        )
        kwargs["timings"] = bool(merged.get("timings", False))
    if cmd == "verify":
        pairs = int(merged.get("pairs", 100))
        if pairs < 1:
            raise UsageError("pairs must be at least 1")
        kwargs["pairs"] = pairs

    return RunConfig(**kwargs)


def _format_float(x: float) -> str:
    return format(float(x), ".17g")


def _stable_json(obj, indent: int = 0) -> str:
    """Deterministic JSON with floats at 17 significant digits."""
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f'{pad}  {json.dumps(str(k))}: {_stable_json(v, indent + 1)}'
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not len(obj):
            return "[]"
        items = [f"{pad}  {_stable_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(obj)
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def _sweep_csv(rows) -> str:
    lines = [",".join(SWEEP_COLUMNS)]
    for row in rows:
        lines.append(",".join([
            str(row.n), str(row.replicate), row.estimator,
            _format_float(row.map_error), _format_float(row.map_error_se),
            _format_float(row.excess), _format_float(row.excess_se),
            _format_float(row.wall_ms),
        ]))
    return "\n".join(lines) + "\n"


def _sweep_json(rows) -> list[dict]:
    return [dict(zip(SWEEP_COLUMNS, row.as_tuple())) for row in rows]


def write_report(result, cfg: RunConfig) -> None:
    """Serialize a result to the configured destination.

    Output is byte-stable for fixed inputs. ``result`` is either a JSON
    payload (dict) or a list of sweep rows (CSV format).
    """
    if cfg.format == "csv":
        text = _sweep_csv(result)
    else:
        payload = _sweep_json(result) if cfg.command == "sweep" else result
        text = _stable_json(payload) + "\n"
    if cfg.output is None:
        sys.stdout.write(text)
        return
    with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _load_csv(path: str, header: bool) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0,
                          ndmin=2, dtype=float)
    except OSError as err:
        raise UsageError(f"cannot read input CSV {path!r}: {err}") from err
    except ValueError as err:
        raise UsageError(f"malformed CSV {path!r}: {err}") from err
    return data


def _load_pair(cfg: RunConfig) -> EmpiricalPair:
    return EmpiricalPair(
        _load_csv(cfg.source_csv, cfg.header),
        _load_csv(cfg.target_csv, cfg.header),
    )


def _run_verify(cfg: RunConfig) -> dict:
    spec = cfg.experiment
    dim = spec.source.dim
    results = []
    failures = []
    for i in range(cfg.pairs):
        rng = substream(spec.seed, (i, _VERIFY_PAIR_STREAM))
        truth = random_quadratic(rng, dim)
        candidate = random_quadratic(rng, dim)
        report = stability_check(candidate, truth, spec,
                                 stream=(i, _VERIFY_EVAL_STREAM),
                                 cfg=cfg.oracle)
        results.append(report.to_dict())
        if not (report.lower_ok and report.upper_ok):
            failures.append(i)
    return {
        "pairs": cfg.pairs,
        "dimension": dim,
        "eval_points": spec.eval_points,
        "all_ok": not failures,
        "failures": failures,
        "results": results,
    }


def run(cfg: RunConfig) -> int:
    """Execute a validated configuration; returns the process exit code."""
    stage = "setup"
    try:
        if cfg.command == "fit-gaussian":
            stage = "load-input"
            pair = _load_pair(cfg)
            stage = "fit-location-scale"
            result = fit_location_scale(pair, ridge=cfg.ridge).to_dict()
        elif cfg.command == "fit-dictionary":
            stage = "load-input"
            pair = _load_pair(cfg)
            stage = "fit-dictionary-weights"
            report = pgd_fit(cfg.dictionary, pair, step=cfg.step,
                             max_iter=cfg.max_iter, cfg=cfg.oracle)
            result = report.to_dict()
        elif cfg.command == "select":
            stage = "load-input"
            pair = _load_pair(cfg)
            stage = "select-candidate"
            index, values = select_finite(cfg.candidates, pair, cfg.oracle)
            result = {"selected_index": index, "semidual_values": values}
        elif cfg.command == "sweep":
            stage = "rate-sweep"
            result = rate_sweep(cfg.experiment, cfg.estimator,
                                cfg.estimator_args, cfg.oracle,
                                measure_time=cfg.timings)
        else:
            stage = "stability-verification"
            result = _run_verify(cfg)
        stage = "write-report"
        write_report(result, cfg)
    except UsageError as err:
        _emit_error(cfg, stage, err)
        return EXIT_USAGE
    except NumericalError as err:
        _emit_error(cfg, stage, err)
        return EXIT_NUMERICAL
    except OSError as err:
        logger.error("I/O failure in stage %s: %s", stage, err)
        return EXIT_IO
    return EXIT_OK


def _emit_error(cfg: RunConfig | None, stage: str, err: Exception) -> None:
    payload = {
        "error": {
            "stage": stage,
            "type": type(err).__name__,
            "message": str(err),
        }
    }
    text = _stable_json(payload) + "\n"
    output = cfg.output if cfg is not None else None
    if output is not None:
        try:
            with open(output, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            return
        except OSError:
            pass
    sys.stderr.write(text)


def main(argv=None) -> int:
    """Entry point: parse flags, load config, dispatch."""
    parser = argparse.ArgumentParser(
        prog="mongefit",
        description="Estimate optimal transport maps from unpaired samples.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "fit-gaussian": "closed-form location-scale fit from two CSV samples",
        "fit-dictionary": "projected-gradient fit of dictionary weights",
        "select": "pick the best candidate potential by semidual value",
        "sweep": "rate-versus-sample-size sweep on synthetic data",
        "verify": "check the excess/map-error stability sandwich",
    }
    for name in COMMANDS:
        cmd = sub.add_parser(name, help=helps[name])
        cmd.add_argument("--config", default=None, help="JSON config file")
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--out", default=None, help="output file path")
        cmd.add_argument("--format", choices=["csv", "json"], default=None)
        cmd.add_argument("--tolerance", type=float, default=None,
                         help="conjugate oracle residual tolerance")
        cmd.add_argument("--max-iter", type=int, default=None, dest="max_iter",
                         help="projected gradient iteration cap")
        cmd.add_argument("--header", action="store_const", const=True,
                         default=None, help="skip the first CSV row")
    ns = parser.parse_args(argv)

    overrides = {
        "seed": ns.seed,
        "output": ns.out,
        "format": ns.format,
        "tolerance": ns.tolerance,
        "max_iter": ns.max_iter,
        "header": ns.header,
    }
    try:
        cfg = parse_config(ns.config, overrides, command=ns.command)
    except UsageError as err:
        _emit_error(None, "configuration", err)
        return EXIT_USAGE

    logging.basicConfig(level=getattr(logging, cfg.log_level.upper()))
    logger.info("running %s", cfg.command)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
