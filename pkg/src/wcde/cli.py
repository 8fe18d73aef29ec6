"""Command-line interface.

Exit codes: 0 success (``check``: valid, ``dsep``: separated), 2 for a
negative answer (invalid set, d-connected), 1 for runtime errors and 64 for
usage errors.  Data goes to stdout and diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from collections.abc import Sequence

from . import io
from .adjustment import check_vas, enumerate_vas, split_adjustment
from .errors import WcdeError
from .estimators import Family, Method, fit_nuisances, one_step_estimate, plugin_estimate
from .experiment import ExperimentConfig, run_replications, summary_json
from .query import QuerySpec
from .scm import true_wcde
from .separation import find_active_path, is_d_separated
from .taxonomy import exposure_affects_outcome, oset

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with status 2
        raise UsageError(f"{self.prog}: {message}")


def parse_set(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


def parse_set_list(text: str) -> list[list[str]]:
    """``"G1,G2;B1,G1,G2"`` -> ``[["G1", "G2"], ["B1", "G1", "G2"]]``."""
    return [parse_set(chunk) for chunk in text.split(";") if chunk.strip()]


def _bins(text: str | None) -> dict[str, int] | None:
    if not text:
        return None
    out = {}
    for item in parse_set(text):
        name, _, k = item.partition("=")
        if not k.isdigit() or int(k) < 1:
            raise UsageError(f"--bins expects NAME=COUNT items, got {item!r}")
        out[name] = int(k)
    return out


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wcde", description="Adjustment sets and estimation for the weighted "
                                          "controlled direct effect.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def query_args(sp, required=True):
        sp.add_argument("--exposure", required=required)
        sp.add_argument("--outcome", required=required)

    sp = sub.add_parser("check", help="check one adjustment set; exit 0 valid, 2 invalid")
    sp.add_argument("--dag", required=True)
    query_args(sp)
    sp.add_argument("--adjust", required=True, help="comma-separated vertices (may be empty)")
    sp.add_argument("--literal-criterion2", action="store_true",
                    help="criterion 2 without conditioning on the exposure")
    sp.add_argument("--no-gac-clause", action="store_true",
                    help="drop the joint-treatment adjustment clause from criterion 1")

    sp = sub.add_parser("enumerate", help="list every valid adjustment set")
    sp.add_argument("--dag", required=True)
    query_args(sp)
    sp.add_argument("--max-size", type=int)
    sp.add_argument("--literal-criterion2", action="store_true")
    sp.add_argument("--no-gac-clause", action="store_true")

    sp = sub.add_parser("oset", help="print the optimal adjustment set, one name per line")
    sp.add_argument("--dag", required=True)
    query_args(sp)

    sp = sub.add_parser("truth", help="exact population WCDE of an SCM file")
    sp.add_argument("--scm", required=True)
    query_args(sp, required=False)
    sp.add_argument("--a", type=float)
    sp.add_argument("--astar", type=float)

    sp = sub.add_parser("estimate", help="estimate the WCDE from a CSV dataset")
    sp.add_argument("--data", required=True)
    sp.add_argument("--dag", required=True)
    query_args(sp)
    sp.add_argument("--adjust", required=True)
    sp.add_argument("--method", choices=[m.value for m in Method], default="onestep")
    sp.add_argument("--family", choices=[f.value for f in Family], default="discrete")
    sp.add_argument("--bins", help="quantile bins for weight terms, e.g. C=8,M=8")
    sp.add_argument("--no-interaction", action="store_true",
                    help="linear family: leave out the exposure x mediator columns")
    sp.add_argument("--a", type=float, default=1.0)
    sp.add_argument("--astar", type=float, default=0.0)

    sp = sub.add_parser("simulate", help="Monte Carlo variance table for several sets")
    sp.add_argument("--scm", required=True)
    query_args(sp, required=False)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--reps", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--adjust-sets", required=True, help='e.g. "G1,G2;B1,G1,G2"')
    sp.add_argument("--allow-invalid", action="store_true")
    sp.add_argument("--method", choices=[m.value for m in Method], default="onestep")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out", required=True, help="CSV output path")

    sp = sub.add_parser("dsep", help="d-separation test; exit 0 separated, 2 connected")
    sp.add_argument("--dag", required=True)
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    sp.add_argument("--given", default="")
    return p


def _query(args, fallback: QuerySpec | None = None) -> QuerySpec:
    exposure = args.exposure or (fallback.exposure if fallback else None)
    outcome = args.outcome or (fallback.outcome if fallback else None)
    if not exposure or not outcome:
        raise UsageError("--exposure and --outcome are required (the SCM file names none)")
    a = getattr(args, "a", None)
    astar = getattr(args, "astar", None)
    if a is None:
        a = fallback.a if fallback else 1.0
    if astar is None:
        astar = fallback.a_star if fallback else 0.0
    return QuerySpec(exposure, outcome, a, astar)


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2))


def _run(args) -> int:
    cmd = args.command
    if cmd in ("check", "enumerate"):
        g = io.parse_dag_file(args.dag)
        q = _query(args)
        opts = {"literal_criterion2": args.literal_criterion2, "gac_clause": not args.no_gac_clause}
        if cmd == "check":
            report = check_vas(g, q, parse_set(args.adjust), **opts)
            _emit(report.to_json())
            return EXIT_OK if report.valid else EXIT_NEGATIVE
        sets = enumerate_vas(g, q, args.max_size, **opts)
        _emit({"exposure": q.exposure, "outcome": q.outcome,
               "sets": [{"z": list(g.sort(s.z)), "z1": list(g.sort(s.z1)), "z2": list(g.sort(s.z2))}
                        for s in sets]})
        return EXIT_OK

    if cmd == "oset":
        g = io.parse_dag_file(args.dag)
        q = _query(args)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result = oset(g, q)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        for v in g.sort(result):
            print(v)
        return EXIT_OK

    if cmd == "truth":
        scm, q0 = io.load_scm(args.scm)
        q = _query(args, q0)
        if not exposure_affects_outcome(scm.dag, q):
            print(f"warning: {q.exposure} is not an ancestor of {q.outcome}; WCDE is 0",
                  file=sys.stderr)
        print(repr(true_wcde(scm, q)))
        return EXIT_OK

    if cmd == "estimate":
        bins = _bins(args.bins)  # flag syntax is checked before touching any file
        g = io.parse_dag_file(args.dag)
        q = _query(args)
        data = io.read_dataset(args.data)
        adj = split_adjustment(g, q, parse_set(args.adjust))
        nuis = fit_nuisances(data, q, adj, Family(args.family), bins=bins,
                             interaction=not args.no_interaction)
        fn = one_step_estimate if Method(args.method) is Method.ONESTEP else plugin_estimate
        _emit(fn(data, q, adj, nuis).to_json())
        return EXIT_OK

    if cmd == "simulate":
        scm, q0 = io.load_scm(args.scm)
        q = _query(args, q0)
        sets = parse_set_list(args.adjust_sets)
        cfg = ExperimentConfig(scm, q, tuple(frozenset(s) for s in sets), args.n, args.reps,
                               args.seed, method=Method(args.method),
                               allow_invalid=args.allow_invalid, workers=args.workers)
        table = run_replications(cfg)
        table.write_csv(args.out)
        print(summary_json(cfg, table))
        return EXIT_OK

    if cmd == "dsep":
        g = io.parse_dag_file(args.dag)
        xs, ys, z = parse_set(args.x), parse_set(args.y), parse_set(args.given)
        sep = is_d_separated(g, xs, ys, z)
        out = {"x": list(g.sort(xs)), "y": list(g.sort(ys)), "given": list(g.sort(z)),
               "separated": sep}
        if not sep:
            path = find_active_path(g, xs, ys, z)
            out["path"] = path.to_json() if path else None
        _emit(out)
        return EXIT_OK if sep else EXIT_NEGATIVE

    raise UsageError(f"unknown command {cmd!r}")  # pragma: no cover - argparse guards this


def run_cli(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return _run(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (WcdeError, OSError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
