"""Command-line entry point: seeded experiments with manifest-stamped outputs.

Configs are flat ``key=value`` text files with dotted section prefixes
(``model.alpha=0.5``); ``#`` starts a comment.  Unknown keys are
rejected, and every numeric field is validated against the library
preconditions before any work starts.  The config digest is the SHA-256
of the canonical key-sorted resolution of the experiment content
(execution knobs — worker count, output directory — are excluded, so
reruns at any parallelism produce byte-identical outputs and manifests
that differ only in wall time).

Exit codes: 0 success, 2 config problem, 3 validation-suite failure,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .acceptance import CRITERIA, run_criteria
from .disorder import FAMILIES, DisorderSpec
from .free_energy import QuadratureRule, convergence_study, limiting_free_energy
from .model import (
    ModelParams,
    NumericalError,
    dump_model,
    finite_free_energy,
    load_model,
    log_det,
    ones_quadratic_form,
    sample_model,
)
from .parallel import default_workers, parallel_map
from .rde import delta_population, dump_population, solve_fixed_point
from .streams import stream

KINDS = ("simulate", "rde", "free-energy", "convergence", "validate", "dump", "load")


class ConfigError(ValueError):
    """Invalid or unreadable configuration; maps to exit code 2."""


# ---------------------------------------------------------------------------
# schema


def _float(raw):
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"not a number: {raw!r}") from exc


def _int(raw):
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"not an integer: {raw!r}") from exc


def _bool(raw):
    low = raw.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ConfigError(f"not a boolean: {raw!r}")


def _int_list(raw):
    return [_int(part) for part in raw.split(",") if part.strip()]


def _positive(x):
    return x > 0


def _nonnegative(x):
    return x >= 0


def _unit(x):
    return 0 < x <= 1


# key -> (parser, default or None if required-when-used, precondition, description)
KEY_SPECS = {
    "experiment.kind": (str, None, lambda v: v in KINDS, f"one of {KINDS}"),
    "experiment.seed": (_int, 0, lambda v: 0 <= v < 2**64, "unsigned 64-bit"),
    "model.alpha": (_float, None, _positive, "positive"),
    "model.beta": (_float, None, _nonnegative, "nonnegative"),
    "model.h": (_float, None, lambda v: math.isfinite(v), "finite"),
    "model.p": (_int, None, lambda v: v >= 1, "at least 1"),
    "disorder.family": (str, None, lambda v: v in FAMILIES, f"one of {FAMILIES}"),
    "disorder.param": (_float, 1.0, _positive, "positive"),
    "disorder.truncation": (_float, math.inf, _positive, "positive or inf"),
    "simulate.n_sites": (_int, None, lambda v: v >= 1, "at least 1"),
    "simulate.replicates": (_int, None, lambda v: v >= 1, "at least 1"),
    "rde.rate_scale": (_float, 1.0, _unit, "in (0, 1]"),
    "rde.pop_size": (_int, 100_000, lambda v: v >= 1, "at least 1"),
    "rde.tol": (_float, 1e-3, _positive, "positive"),
    "rde.max_gens": (_int, 500, lambda v: v >= 1, "at least 1"),
    "rde.init": (_float, 1.0, _unit, "in (0, 1]"),
    "quadrature.kind": (str, "gauss", lambda v: v in ("gauss", "midpoint"), "gauss|midpoint"),
    "quadrature.nodes": (_int, 16, lambda v: v >= 1, "at least 1"),
    "free_energy.n_mc": (_int, 200_000, lambda v: v >= 1, "at least 1"),
    "free_energy.warm_start": (_bool, True, lambda v: True, "boolean"),
    "convergence.n_grid": (_int_list, [250, 500, 1000], lambda v: len(v) >= 1 and all(n >= 1 for n in v), "comma list of sizes"),
    "convergence.seeds_per_n": (_int, 10, lambda v: v >= 2, "at least 2"),
    "validate.criteria": (str, "all", lambda v: True, "all or comma list like A1,A8"),
    "validate.scale": (_float, 1.0, _unit, "in (0, 1]"),
    "dump.n_sites": (_int, None, lambda v: v >= 1, "at least 1"),
    "load.path": (str, None, lambda v: bool(v), "nonempty path"),
}

_MODEL_KEYS = ("model.alpha", "model.beta", "model.h", "model.p", "disorder.family")
REQUIRED_BY_KIND = {
    "simulate": _MODEL_KEYS + ("simulate.n_sites", "simulate.replicates"),
    "rde": _MODEL_KEYS,
    "free-energy": _MODEL_KEYS,
    "convergence": _MODEL_KEYS,
    "validate": (),
    "dump": _MODEL_KEYS + ("dump.n_sites",),
    "load": ("load.path",),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """One validated experiment: kind, resolved options, execution knobs."""

    kind: str
    options: dict
    out_dir: Path
    workers: int

    @property
    def seed(self) -> int:
        return self.options["experiment.seed"]

    def digest(self) -> str:
        lines = []
        for key in sorted(self.options):
            value = self.options[key]
            if isinstance(value, float):
                text = format(value, ".17g")
            elif isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, list):
                text = ",".join(str(v) for v in value)
            else:
                text = str(value)
            lines.append(f"{key}={text}")
        payload = "\n".join([f"experiment.kind={self.kind}"] + lines)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def parse_config_text(text: str) -> dict:
    """Flat key=value lines into a raw string map; line-numbered errors."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key=value, got {line.strip()!r}")
        key, value = stripped.split("=", 1)
        key, value = key.strip(), value.strip()
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def build_config(
    kind: str,
    raw: dict,
    out_dir=None,
    seed=None,
    workers=None,
) -> ExperimentConfig:
    """Validate raw strings against the schema and kind requirements."""
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    unknown = sorted(set(raw) - set(KEY_SPECS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    if "experiment.kind" in raw and raw["experiment.kind"] != kind:
        raise ConfigError(
            f"config says experiment.kind={raw['experiment.kind']!r} "
            f"but the {kind!r} subcommand was invoked"
        )

    options = {}
    for key, (parser, default, check, description) in KEY_SPECS.items():
        if key == "experiment.kind":
            continue
        if key in raw:
            value = parser(raw[key]) if parser is not str else raw[key]
            if not check(value):
                raise ConfigError(f"{key}={raw[key]!r}: must be {description}")
            options[key] = value
        elif default is not None:
            options[key] = default
    if seed is not None:
        if not 0 <= int(seed) < 2**64:
            raise ConfigError("--seed: must be an unsigned 64-bit integer")
        options["experiment.seed"] = int(seed)
    missing = [k for k in REQUIRED_BY_KIND[kind] if k not in options]
    if missing:
        raise ConfigError(f"{kind}: missing required keys: {', '.join(missing)}")

    # cross-field preconditions, before any work starts
    if all(k in options for k in _MODEL_KEYS):
        try:
            _model_pieces(options)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if kind == "simulate" and options["simulate.n_sites"] < options["model.p"]:
        raise ConfigError("simulate.n_sites: must be at least model.p")
    if kind == "dump" and options["dump.n_sites"] < options["model.p"]:
        raise ConfigError("dump.n_sites: must be at least model.p")
    if kind == "validate":
        chosen = options.get("validate.criteria", "all")
        if chosen != "all":
            bad = [c for c in _criteria_list(chosen) if c not in CRITERIA]
            if bad:
                raise ConfigError(f"validate.criteria: unknown {', '.join(bad)}")

    return ExperimentConfig(
        kind,
        options,
        Path(out_dir) if out_dir is not None else Path("out"),
        int(workers) if workers is not None else default_workers(),
    )


def _criteria_list(raw):
    return [c.strip() for c in raw.split(",") if c.strip()]


def _model_pieces(options):
    params = ModelParams(
        options["model.alpha"], options["model.beta"],
        options["model.h"], options["model.p"],
    )
    spec = DisorderSpec(
        options["disorder.family"], options["disorder.param"],
        options["disorder.truncation"],
    )
    return params, spec


def _quadrature(options):
    if options["quadrature.kind"] == "gauss":
        return QuadratureRule.gauss_legendre(options["quadrature.nodes"])
    return QuadratureRule.midpoint(options["quadrature.nodes"])


# ---------------------------------------------------------------------------
# output helpers


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(cell) for cell in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _write_json(path: Path, payload) -> None:
    path.write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _write_manifest(out_dir: Path, digest: str, wall_time: float, files) -> None:
    outputs = []
    for name in sorted(files):
        data = (out_dir / name).read_bytes()
        outputs.append({"path": name, "sha256": hashlib.sha256(data).hexdigest()})
    _write_json(
        out_dir / "manifest.json",
        {
            "config_digest": digest,
            "tool_version": __version__,
            "wall_time_s": wall_time,
            "outputs": outputs,
        },
    )


# ---------------------------------------------------------------------------
# experiments


def _run_simulate(config: ExperimentConfig):
    params, spec = _model_pieces(config.options)
    n_sites = config.options["simulate.n_sites"]
    replicates = config.options["simulate.replicates"]
    seed = config.seed

    def one(i):
        model = sample_model(params, spec, n_sites, stream(seed, "simulate", i))
        ld = log_det(model)
        quad = ones_quadratic_form(model)
        f = params.h**2 / 2.0 * quad + ld / (2.0 * n_sites)
        return (i, model.n_clauses, ld, quad, f)

    rows = parallel_map(one, range(replicates), config.workers)
    _write_csv(
        config.out_dir / "simulate.csv",
        ("replicate", "n_clauses", "log_det", "ones_quadratic_form", "free_energy"),
        rows,
    )
    return ["simulate.csv"]


def _run_rde(config: ExperimentConfig):
    params, spec = _model_pieces(config.options)
    opts = config.options
    init = delta_population(
        opts["rde.init"], opts["rde.pop_size"],
        params.alpha * opts["rde.rate_scale"] * params.p,
    )
    report = solve_fixed_point(
        params, spec, opts["rde.rate_scale"], stream(config.seed, "rde"),
        pop_size=opts["rde.pop_size"], tol=opts["rde.tol"],
        max_gens=opts["rde.max_gens"], init=init,
    )
    _write_csv(
        config.out_dir / "rde_trajectory.csv",
        ("generation", "w1_gap"),
        [(i + 1, gap) for i, gap in enumerate(report.gaps)],
    )
    dump_population(report.population, config.out_dir / "population.txt")
    _write_json(
        config.out_dir / "rde_summary.json",
        {
            "converged": report.converged,
            "generations": report.generations,
            "tol": report.tol,
            "population_mean": report.population.mean(),
            "config_digest": config.digest(),
        },
    )
    return ["rde_trajectory.csv", "population.txt", "rde_summary.json"]


def _run_free_energy(config: ExperimentConfig):
    params, spec = _model_pieces(config.options)
    opts = config.options
    result = limiting_free_energy(
        params, spec, _quadrature(opts), stream(config.seed, "free-energy"),
        pop_size=opts["rde.pop_size"], tol=opts["rde.tol"],
        n_mc=opts["free_energy.n_mc"], max_gens=opts["rde.max_gens"],
        warm_start=opts["free_energy.warm_start"], workers=config.workers,
    )
    _write_json(
        config.out_dir / "free_energy.json",
        {
            "value": result.estimate.value,
            "std_error": result.estimate.std_error,
            "nodes": [
                {
                    "x": node.x,
                    "rate": node.rate,
                    "edge_term": node.edge_term,
                    "se": node.std_error,
                    "converged": node.converged,
                }
                for node in result.nodes
            ],
            "h_term": result.h_term,
            "config_digest": config.digest(),
        },
    )
    return ["free_energy.json"]


def _run_convergence(config: ExperimentConfig):
    params, spec = _model_pieces(config.options)
    opts = config.options
    study = convergence_study(
        params, spec, opts["convergence.n_grid"], opts["convergence.seeds_per_n"],
        _quadrature(opts), stream(config.seed, "convergence"),
        pop_size=opts["rde.pop_size"], tol=opts["rde.tol"],
        n_mc=opts["free_energy.n_mc"], workers=config.workers,
    )
    _write_csv(
        config.out_dir / "convergence.csv",
        ("N", "mean_F", "std_F", "limit", "gap"),
        [
            (row.n_sites, row.mean_f, row.std_f, study.limit.value, row.gap)
            for row in study.rows
        ],
    )
    return ["convergence.csv"]


def _run_validate(config: ExperimentConfig):
    opts = config.options
    chosen = opts.get("validate.criteria", "all")
    ids = None if chosen == "all" else _criteria_list(chosen)
    results = run_criteria(
        ids, seed=config.seed, scale=opts["validate.scale"], workers=config.workers
    )
    rows = [
        (r.cid, r.description, r.measured, r.threshold,
         "pass" if r.passed else "FAIL", r.detail)
        for r in results
    ]
    _write_csv(
        config.out_dir / "validate.csv",
        ("criterion", "description", "measured", "threshold", "status", "detail"),
        rows,
    )
    _write_json(
        config.out_dir / "validate.json",
        {
            "config_digest": config.digest(),
            "criteria": [
                {
                    "criterion": r.cid,
                    "description": r.description,
                    "measured": r.measured if math.isfinite(r.measured) else None,
                    "threshold": r.threshold if math.isfinite(r.threshold) else None,
                    "passed": r.passed,
                    "detail": r.detail,
                }
                for r in results
            ],
        },
    )
    width = max(len(r.description) for r in results) + 2
    for r in results:
        status = "pass" if r.passed else "FAIL"
        print(f"{r.cid:<4} {r.description:<{width}} "
              f"measured={r.measured:.6g} threshold={r.threshold:.6g} {status}")
    failed = [r.cid for r in results if not r.passed]
    if failed:
        print(f"FAILED: {', '.join(failed)}")
    return ["validate.csv", "validate.json"], (3 if failed else 0)


def _run_dump(config: ExperimentConfig):
    params, spec = _model_pieces(config.options)
    model = sample_model(
        params, spec, config.options["dump.n_sites"], stream(config.seed, "dump")
    )
    dump_model(model, config.out_dir / "model.txt")
    return ["model.txt"]


def _run_load(config: ExperimentConfig):
    model = load_model(config.options["load.path"])
    ld = log_det(model)
    quad = ones_quadratic_form(model)
    _write_csv(
        config.out_dir / "loaded.csv",
        ("n_sites", "n_clauses", "log_det", "ones_quadratic_form", "free_energy"),
        [(model.n_sites, model.n_clauses, ld, quad, finite_free_energy(model))],
    )
    return ["loaded.csv"]


_RUNNERS = {
    "simulate": _run_simulate,
    "rde": _run_rde,
    "free-energy": _run_free_energy,
    "convergence": _run_convergence,
    "validate": _run_validate,
    "dump": _run_dump,
    "load": _run_load,
}


def run(config: ExperimentConfig) -> int:
    """Execute one validated experiment; returns the process exit code."""
    started = time.perf_counter()
    config.out_dir.mkdir(parents=True, exist_ok=True)
    try:
        produced = _RUNNERS[config.kind](config)
    except NumericalError as exc:
        print(f"numerical failure in {config.kind}: {exc}", file=sys.stderr)
        return 4
    status = 0
    if isinstance(produced, tuple):
        produced, status = produced
    _write_manifest(
        config.out_dir, config.digest(), time.perf_counter() - started, produced
    )
    return status


def run_command(kind, config_path=None, out_dir=None, seed=None, workers=None) -> int:
    """Programmatic equivalent of one CLI invocation."""
    try:
        if config_path is not None:
            path = Path(config_path)
            try:
                text = path.read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            raw = parse_config_text(text)
        else:
            raw = {}
        config = build_config(kind, raw, out_dir=out_dir, seed=seed, workers=workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run(config)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="quadglass",
        description="Sparse rank-one ensemble experiments with seeded reproducibility.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument(
            "--config", type=Path, required=(kind != "validate"),
            help="flat key=value config file",
        )
        p.add_argument("--seed", type=int, help="override experiment.seed")
        p.add_argument("--out", type=Path, help="output directory (default ./out)")
        p.add_argument("--workers", type=int, help="parallelism cap (default: cores)")
    args = parser.parse_args(argv)
    return run_command(
        args.kind, args.config, out_dir=args.out, seed=args.seed, workers=args.workers
    )


if __name__ == "__main__":
    sys.exit(main())
