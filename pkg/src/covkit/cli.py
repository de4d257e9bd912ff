"""Command-line interface: ``covkit {eval,check-pd,verify,simulate,list-models}``.

Exit codes: 0 success, 1 indefinite kernel or failed verification,
2 configuration error, 3 kernel evaluation error.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import fieldsim, registry, validation
from .errors import CovkitError, NotPositiveDefinite
from .registry import ConfigError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_EVAL = 0, 1, 2, 3


def _default_seed():
    raw = os.environ.get("COVKIT_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"COVKIT_SEED must be an integer, got {raw!r}") from None


def _dump(doc, out):
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_row(text):
    parts = [p for p in text.replace(",", " ").split() if p]
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"cannot parse point {text!r}") from None


def _read_points(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                rows.append(_parse_row(line))
    return rows


def cmd_eval(args):
    K = registry.build(registry.load_config(args.config))
    rows = list(args.at or [])
    rows = [_parse_row(r) for r in rows]
    if args.points:
        rows.extend(_read_points(args.points))
    if not rows:
        raise ConfigError("no evaluation points given (use --at or --points)")
    d = K.d
    xs, ys = [], []
    for r in rows:
        if len(r) == 2 * d:
            xs.append(r[:d])
            ys.append(r[d:])
        elif len(r) == d and K.is_translation_invariant:
            xs.append(r)
            ys.append([0.0] * d)
        else:
            want = f"{d} (lag) or {2 * d} (pair)" if K.is_translation_invariant else f"{2 * d} (pair)"
            raise ConfigError(f"point {r} has {len(r)} values, expected {want}")
    out = []
    for x, y in zip(xs, ys):
        try:
            val = K(np.array(x), np.array(y))
        except CovkitError as exc:
            raise _EvalError(f"evaluation failed at x={x}, y={y}: {exc}") from exc
        out.append((x, y, np.asarray(val).ravel()))
    m = K.m
    head = [f"x{i + 1}" for i in range(d)] + [f"y{i + 1}" for i in range(d)]
    head += ["C"] if m == 1 else [f"C{j + 1}{k + 1}" for j in range(m) for k in range(m)]
    lines = [",".join(head)]
    for x, y, v in out:
        lines.append(",".join(repr(float(c)) for c in list(x) + list(y) + list(v)))
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


class _EvalError(Exception):
    pass


def cmd_check_pd(args):
    doc = registry.load_config(args.config)
    K = registry.build(doc)
    if args.dim is not None and args.dim != K.d:
        raise ConfigError(f"--dim {args.dim} does not match the model dimension {K.d}")
    cfg = registry.harness_config(
        doc, K.d, seed=args.seed, n_points=args.points, n_repetitions=args.reps,
        sampler=args.sampler, bounds=tuple(args.bounds) if args.bounds else None,
        scale=args.scale, spacing=args.spacing, tol_rel=args.tol)
    try:
        rep = validation.run_pd_harness(K, cfg)
    except CovkitError as exc:
        raise _EvalError(str(exc)) from exc
    doc_out = {"model": K.name, "config": os.path.basename(args.config),
               "harness": {"n_points": cfg.n_points, "n_repetitions": cfg.n_repetitions,
                           "sampler": cfg.sampler, "bounds": list(cfg.bounds),
                           "scale": cfg.scale, "spacing": cfg.spacing, "seed": cfg.seed,
                           "d": cfg.d},
               "report": rep.to_dict()}
    if rep.witness is not None:
        doc_out["witness_form"] = validation.witness_form(K, rep)
    _dump(doc_out, args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_verify(args):
    records = validation.run_suite(args.suite, args.seed)
    text = validation.report_json(records, args.suite, args.seed)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if all(r["pass"] for r in records) else EXIT_FAIL


def _parse_grid(spec):
    dims = []
    for part in spec.split(","):
        fields = part.split(":")
        if len(fields) != 3:
            raise ConfigError(f"grid axis {part!r} must be min:max:n")
        try:
            dims.append((float(fields[0]), float(fields[1]), int(fields[2])))
        except ValueError:
            raise ConfigError(f"grid axis {part!r} must be min:max:n") from None
    return dims


def _parse_slice(spec):
    if spec is None:
        return None
    axis, sep, value = spec.partition("=")
    if not sep:
        raise ConfigError("--slice must be AXIS=VALUE")
    try:
        return int(axis), float(value)
    except ValueError:
        raise ConfigError("--slice must be AXIS=VALUE with an integer axis") from None


def cmd_simulate(args):
    K = registry.build(registry.load_config(args.config))
    try:
        grid = fieldsim.GridSpec(_parse_grid(args.grid), _parse_slice(args.slice))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid grid: {exc}") from exc
    try:
        real = fieldsim.simulate(K, grid, args.seed)
    except NotPositiveDefinite as exc:
        sys.stderr.write(json.dumps({"error": str(exc), "gram_report": exc.context},
                                    indent=2, sort_keys=True, default=str) + "\n")
        return EXIT_EVAL
    except CovkitError as exc:
        raise _EvalError(str(exc)) from exc
    out_dir = os.path.dirname(args.out)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    paths = fieldsim.write_outputs(real, args.out)
    _dump({"kernel": real.kernel_name, "seed": real.seed, "n_points": grid.n_points,
           "min": float(real.values.min()), "max": float(real.values.max()),
           "jitter": real.jitter_used, "jitter_rel": real.extra["jitter_rel"],
           "files": paths}, None)
    return EXIT_OK


def cmd_list_models(args):
    for key, (desc, schema, _) in registry.MODELS.items():
        params = ", ".join(schema)
        sys.stdout.write(f"{key}\n    {desc}\n    params: {params}\n")
    return EXIT_OK


def build_parser(default_seed):
    p = argparse.ArgumentParser(prog="covkit", description="Covariance kernels from normal "
                                "scale mixtures: evaluation, validation and simulation.")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", help="evaluate a kernel; CSV on stdout")
    e.add_argument("config")
    e.add_argument("--at", action="append", metavar="VALUES",
                   help="comma-separated lag (translation invariant) or x,y pair; repeatable")
    e.add_argument("--points", metavar="FILE", help="file with one lag or pair per line")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("check-pd", help="positive definiteness harness; JSON report")
    c.add_argument("config")
    c.add_argument("--points", type=int, default=25)
    c.add_argument("--reps", type=int, default=20)
    c.add_argument("--seed", type=int, default=default_seed)
    c.add_argument("--dim", type=int)
    c.add_argument("--sampler", choices=validation.SAMPLERS)
    c.add_argument("--bounds", type=float, nargs=2, metavar=("LO", "HI"))
    c.add_argument("--scale", type=float)
    c.add_argument("--spacing", type=float)
    c.add_argument("--tol", type=float)
    c.add_argument("--out")
    c.set_defaults(func=cmd_check_pd)

    v = sub.add_parser("verify", help="run oracle suites; JSON report")
    v.add_argument("--suite", default="all", choices=["all", *validation.SUITES])
    v.add_argument("--seed", type=int, default=default_seed)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", help="simulate a Gaussian field on a grid")
    s.add_argument("config")
    s.add_argument("--grid", required=True, help="min:max:n per domain axis, comma separated")
    s.add_argument("--slice", help="AXIS=VALUE, pin a domain axis (0-based)")
    s.add_argument("--seed", type=int, default=default_seed)
    s.add_argument("--out", required=True, help="output path prefix")
    s.set_defaults(func=cmd_simulate)

    ls = sub.add_parser("list-models", help="list registry keys")
    ls.set_defaults(func=cmd_list_models)
    return p


_VALUE_FLAGS = ("--at", "--grid")


def _join_values(argv):
    """Attach values such as ``-1,0.5`` to their flag so argparse does not read them as options."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None):
    argv = _join_values(list(sys.argv[1:] if argv is None else argv))
    try:
        seed = _default_seed()
    except ConfigError as exc:
        sys.stderr.write(f"covkit: {exc}\n")
        return EXIT_CONFIG
    args = build_parser(seed).parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        sys.stderr.write(f"covkit: configuration error: {exc}\n")
        return EXIT_CONFIG
    except (_EvalError, CovkitError) as exc:
        sys.stderr.write(f"covkit: evaluation error: {exc}\n")
        return EXIT_EVAL


if __name__ == "__main__":
    sys.exit(main())
