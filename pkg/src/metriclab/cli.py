"""Command-line front end.

Verbs
-----
space gen    write a space file from generator flags
field gen    sample a gallery field on a space file
run          run one experiment config (JSON report + CSV profile)
sweep        refinement sweep of one report scalar across sizes
oracle-diff  run with the naive reference enumerations and print the deltas

Exit codes: 0 success, 2 config error, 3 oracle disagreement, 4 sweep
failure.  The METRICLAB_OUT environment variable supplies the default
output directory when a verb does not receive one explicitly.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .harness import (
    ConfigError,
    ExperimentConfig,
    OracleDisagreement,
    SweepFailure,
    build_field,
    build_space,
    convergence_sweep,
    run_experiment,
    save_field,
    save_space,
    _validate_field,
    _validate_space,
    _write_json,
)

_SPACE_FLAG_KEYS = ("n", "a", "b", "dim", "seed", "level", "radius",
                    "edge_length")


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="metriclab",
                                  description=__doc__.splitlines()[0])
    sub = top.add_subparsers(dest="verb", required=True)

    space = sub.add_parser("space", help="space file utilities")
    space_sub = space.add_subparsers(dest="action", required=True)
    gen = space_sub.add_parser("gen", help="generate a space file")
    gen.add_argument("--kind", required=True,
                     choices=("grid1d", "grid2d", "cloud", "torus", "sphere",
                              "cycle"))
    gen.add_argument("--n", type=int)
    gen.add_argument("--a", type=float)
    gen.add_argument("--b", type=float)
    gen.add_argument("--dim", type=int)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--level", type=int)
    gen.add_argument("--radius", type=float)
    gen.add_argument("--periods", type=float, nargs=2)
    gen.add_argument("--edge-length", dest="edge_length", type=float)
    gen.add_argument("--weight-kind", choices=("constant", "power"))
    gen.add_argument("--weight-alpha", type=float)
    gen.add_argument("--weight-value", type=float)
    gen.add_argument("--out", required=True)

    field = sub.add_parser("field", help="field file utilities")
    field_sub = field.add_subparsers(dest="action", required=True)
    fgen = field_sub.add_parser("gen", help="sample a field on a space file")
    fgen.add_argument("--space", required=True)
    fgen.add_argument("--kind", required=True)
    fgen.add_argument("--center", type=float, nargs="*")
    fgen.add_argument("--center-index", dest="center_index", type=int)
    fgen.add_argument("--scale", type=float, default=1.0)
    fgen.add_argument("--amplitude", type=float, default=1.0)
    fgen.add_argument("--axis", type=int, default=0)
    fgen.add_argument("--out", required=True)

    run = sub.add_parser("run", help="run one experiment config")
    run.add_argument("--config", required=True)
    run.add_argument("--out-dir", dest="out_dir")
    run.add_argument("--threads", type=int)
    run.add_argument("--oracle", action="store_true")

    sweep = sub.add_parser("sweep", help="refinement sweep over sizes")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--sizes", type=int, nargs="+", required=True)
    sweep.add_argument("--selector", default="result.ratio")
    sweep.add_argument("--tol", type=float, required=True)
    sweep.add_argument("--out-dir", dest="out_dir")
    sweep.add_argument("--threads", type=int)

    diff = sub.add_parser("oracle-diff",
                          help="run with naive references and print deltas")
    diff.add_argument("--config", required=True)
    diff.add_argument("--threads", type=int)
    return top


def _space_spec_from_args(args) -> dict:
    spec = {"kind": args.kind}
    for key in _SPACE_FLAG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            spec[key] = val
    if args.periods is not None:
        spec["periods"] = list(args.periods)
    if args.weight_kind is not None:
        weight = {"kind": args.weight_kind}
        if args.weight_alpha is not None:
            weight["alpha"] = args.weight_alpha
        if args.weight_value is not None:
            weight["value"] = args.weight_value
        spec["weight"] = weight
    return _validate_space(spec, "space")


def _field_spec_from_args(args) -> dict:
    spec = {"kind": args.kind}
    if args.kind == "coordinate":
        spec["axis"] = args.axis
    else:
        if args.center_index is not None and args.center:
            raise ConfigError("field: give --center or --center-index, not both")
        if args.center_index is not None:
            spec["center"] = args.center_index
        elif args.center:
            spec["center"] = list(args.center) if len(args.center) > 1 \
                else args.center[0]
        spec["scale"] = args.scale
        spec["amplitude"] = args.amplitude
    return _validate_field(spec, "field")


def _load_config(path, threads=None, oracle: bool = False) -> ExperimentConfig:
    cfg = ExperimentConfig.load(path)
    if threads is not None:
        if threads < 1:
            raise ConfigError("--threads: must be >= 1")
        cfg.threads = threads
    if oracle:
        cfg.oracle = True
    return cfg


def _cmd_space_gen(args) -> int:
    spec = _space_spec_from_args(args)
    space = build_space(spec)
    save_space(space, args.out)
    print(f"wrote {args.out} ({space.kind}, n={space.n})")
    return 0


def _cmd_field_gen(args) -> int:
    from .harness import load_space
    space = load_space(args.space)
    spec = _field_spec_from_args(args)
    field = build_field(space, spec)
    save_field(field, args.out)
    print(f"wrote {args.out} ({field.name}, n={field.values.shape[0]})")
    return 0


def _cmd_run(args) -> int:
    cfg = _load_config(args.config, args.threads, args.oracle)
    report, paths = run_experiment(cfg, out_dir=args.out_dir)
    if paths:
        for kind in sorted(paths):
            print(f"{kind}: {paths[kind]}")
    else:
        json.dump(report, sys.stdout, sort_keys=True, indent=2)
        print()
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_config(args.config, args.threads)
    out_dir = args.out_dir or os.environ.get("METRICLAB_OUT")
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    result = convergence_sweep(cfg, args.sizes, args.selector, args.tol,
                               out_dir=out_dir)
    if out_dir is not None:
        _write_json(os.path.join(out_dir, "sweep.json"), result.as_dict())
        with open(os.path.join(out_dir, "sweep.csv"), "w",
                  encoding="utf-8") as fh:
            fh.write("size,scalar,delta\n")
            for k, (size, scalar) in enumerate(zip(result.sizes,
                                                   result.scalars)):
                delta = "" if k == 0 else repr(result.deltas[k - 1])
                fh.write(f"{size},{scalar!r},{delta}\n")
    json.dump(result.as_dict(), sys.stdout, sort_keys=True, indent=2)
    print()
    return 0 if result.passed else 4


def _cmd_oracle_diff(args) -> int:
    cfg = _load_config(args.config, args.threads, oracle=True)
    report, _ = run_experiment(cfg, write=False)
    json.dump(report.get("oracle", {}), sys.stdout, sort_keys=True, indent=2)
    print()
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.verb == "space":
            return _cmd_space_gen(args)
        if args.verb == "field":
            return _cmd_field_gen(args)
        if args.verb == "run":
            return _cmd_run(args)
        if args.verb == "sweep":
            return _cmd_sweep(args)
        return _cmd_oracle_diff(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OracleDisagreement as exc:
        print(f"oracle disagreement: {exc}", file=sys.stderr)
        return 3
    except SweepFailure as exc:
        print(f"sweep failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
