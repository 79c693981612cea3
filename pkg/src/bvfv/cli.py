"""Command line: ``run``, ``list-cases`` and ``dump-mesh``.

A ``--config`` file holds ``key = value`` lines (``#`` starts a comment);
its keys are the long flag names without dashes and take precedence over
flags given on the command line.
"""
import argparse
import sys

from . import harness, mesh, physics
from .fv2d import CFLError


def read_config(path):
    """Flat ``key = value`` file as a dict of strings."""
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                raise harness.ConfigError(f"{path}:{n}: expected key = value")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def parse_rows(text, case):
    """``"3"`` keeps the first three preset rows; ``"0.5:0.25,0.25:0.125"`` lists them."""
    text = text.strip()
    if ":" not in text:
        try:
            n = int(text)
        except ValueError:
            raise harness.ConfigError(f"rows must be a count or h:delta pairs, got {text!r}")
        preset = harness.PRESETS[case]
        if not 1 <= n <= len(preset):
            raise harness.ConfigError(f"row count must be between 1 and {len(preset)}")
        return preset[:n]
    rows = []
    for item in text.split(","):
        h, _, d = item.partition(":")
        try:
            rows.append((float(h), float(d)))
        except ValueError:
            raise harness.ConfigError(f"bad row {item!r}; expected h:delta") from None
    return tuple(rows)


def _apply_config(args, parser):
    if not getattr(args, "config", None):
        return args
    known = {a.dest: a for a in parser._actions}
    for key, raw in read_config(args.config).items():
        if key not in known or key in ("help", "config", "command"):
            raise harness.ConfigError(f"unknown config key {key!r}")
        action = known[key]
        try:
            value = action.type(raw) if action.type else raw
        except ValueError:
            raise harness.ConfigError(f"bad value for {key}: {raw!r}") from None
        if action.choices and value not in action.choices:
            raise harness.ConfigError(f"{key} must be one of {list(action.choices)}")
        setattr(args, key, value)
    return args


def _print_table(rows, out):
    cols = ("h", "delta", "cells", "l1", "l1_rate", "bv", "bv_rate")
    out.write("  ".join(f"{c:>9}" for c in cols) + "\n")
    for r in rows:
        out.write("  ".join(f"{harness._fmt(c, getattr(r, c)):>9}" for c in cols) + "\n")


def cmd_run(args, stdout):
    if not args.case:
        raise harness.ConfigError("--case is required")
    if args.case not in physics.CASES:
        raise harness.ConfigError(f"unknown case {args.case!r}; choose from {sorted(physics.CASES)}")
    rows = parse_rows(args.rows, args.case) if args.rows else ()
    mesh_name = args.mesh or physics.get_case(args.case).meshes[0]
    config = harness.ExperimentConfig(case=args.case, mesh=mesh_name, rows=rows, T=args.T,
                                      seed=args.seed, out=args.out)
    result = harness.run_experiment(config)
    if args.out:
        harness.emit_csv(result, args.out, harness.metadata(config))
        stdout.write(f"wrote {len(result)} rows to {args.out}\n")
    else:
        _print_table(result, stdout)
    if args.snapshot:
        harness.write_snapshot(result[-1].extra["final"], args.snapshot)
        stdout.write(f"wrote final solution to {args.snapshot}\n")
    return 0


def cmd_list_cases(args, stdout):
    for name, case in sorted(physics.CASES.items()):
        kind = "fully nonlinear" if case.nonlinear is not None else case.flux.tag
        stdout.write(f"{name:16s} T={case.T:<5g} domain={case.domain} flux={kind} "
                     f"meshes={','.join(case.meshes)}\n")
    return 0


def cmd_dump_mesh(args, stdout):
    domain = tuple(float(v) for v in args.domain.split(","))
    if len(domain) != 4:
        raise harness.ConfigError("domain must be a,b,c,d")
    m = mesh.build_family(args.family, domain, args.h, seed=args.seed)
    mesh.dump_mesh(m, args.out)
    stdout.write(f"wrote {args.family} mesh with {m.n_cells} cells to {args.out}\n")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="python -m bvfv", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a refinement study")
    run.add_argument("--case", help="built-in case (see list-cases)")
    run.add_argument("--mesh", choices=mesh.FAMILIES, help="mesh family (default: the case's first)")
    run.add_argument("--rows", help="N preset rows, or h:delta,h:delta,...")
    run.add_argument("--out", help="CSV output path (default: table on stdout)")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--T", type=float, help="final time (default: the case's)")
    run.add_argument("--snapshot", help="write the finest final solution as x y value columns")
    run.add_argument("--config", help="key = value file overriding the flags")
    run.set_defaults(func=cmd_run)

    lst = sub.add_parser("list-cases", help="list built-in cases")
    lst.set_defaults(func=cmd_list_cases)

    dump = sub.add_parser("dump-mesh", help="write a mesh as plain text")
    dump.add_argument("--family", choices=mesh.FAMILIES, default="cartesian")
    dump.add_argument("--h", type=float, default=0.25, help="target mesh size")
    dump.add_argument("--domain", default="-1,1,-1,1")
    dump.add_argument("--seed", type=int, default=0)
    dump.add_argument("--out", required=True)
    dump.add_argument("--config", help="key = value file overriding the flags")
    dump.set_defaults(func=cmd_dump_mesh)
    return parser, {"run": run, "dump-mesh": dump, "list-cases": lst}


def main(argv=None, stdout=None):
    stdout = stdout or sys.stdout
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args, subs[args.command])
        return args.func(args, stdout)
    except (harness.ConfigError, CFLError, mesh.MeshError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
