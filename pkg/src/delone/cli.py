"""Command-line front end.

Every command prints one JSON report with sorted keys.  Rationals are
written as "p/q" strings, so reports are byte-identical across runs.

Exit codes: 0 success, 2 input error, 3 inconclusive regularity verdict,
4 unsupported dimension.
"""

from __future__ import annotations

import argparse
import csv
import enum
import hashlib
import io
import json
import sys
from dataclasses import fields, is_dataclass
from fractions import Fraction
from typing import Any, Optional, Sequence

from . import __version__, catalog, profiling, setfile
from .cluster import INFINITE, cluster_group, get_cluster
from .core import DeloneError, InvalidSetError, PeriodicSet, Radius, Site, as_fraction
from .metrics import UnsupportedDimensionError, metric_parameters, verify_declared_R
from .reachability import is_t_bonded, reachability_closure, reachable_set
from .regularity import (
    InconsistentParametersError,
    NotRegularError,
    Verdict,
    bounds_report,
    breakpoints,
    drop_sequence,
    local_criterion_scan,
    n_rho,
    oracle_is_regular,
    tower_check,
)

SCHEMA = 1
EXIT_OK, EXIT_INPUT, EXIT_INCONCLUSIVE, EXIT_DIMENSION = 0, 2, 3, 4
DEFAULT_SAMPLES = 2000


class InputError(Exception):
    pass


def to_json(obj: Any) -> Any:
    """Convert results to JSON-ready values; rationals become "p/q" strings."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, int):
        return obj
    if isinstance(obj, Fraction):
        return setfile.fmt(obj)
    if obj is INFINITE:
        return "infinite"
    if isinstance(obj, Radius):
        return {"sq": setfile.fmt(obj.sq)} if obj.is_rational_sq else {"sqrt_sum": [setfile.fmt(obj.a), setfile.fmt(obj.b)]}
    if isinstance(obj, Site):
        return {"motif_index": obj.motif_index, "translation": list(obj.translation)}
    if isinstance(obj, dict):
        return {str(k): to_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = [to_json(v) for v in obj]
        return sorted(items, key=json.dumps) if isinstance(obj, (set, frozenset)) else items
    if is_dataclass(obj):
        return {f.name: to_json(getattr(obj, f.name)) for f in fields(obj)}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dump(obj: Any) -> str:
    return json.dumps(to_json(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def input_digest(X: PeriodicSet, declared: Optional[Fraction]) -> str:
    doc = setfile.to_document(X, declared)
    doc.pop("name", None)
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canon.encode()).hexdigest()


# -- argument parsing ---------------------------------------------------------


def _rational_arg(text: str) -> Fraction:
    try:
        if "." in text or "e" in text.lower():
            raise ValueError
        return as_fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a rational like 3/4, got {text!r}") from None


def _nonneg_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        n = -1
    if n < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text!r}")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("file", nargs="?", help="set file (JSON)")
    src.add_argument("--catalog", "-c", metavar="NAME", help="use a catalog entry instead of a file")
    common.add_argument("--declared-R-sq", "--declared-R", dest="declared_R_sq", type=_rational_arg,
                        metavar="Q", help="declared squared covering radius (needed for d > 4)")
    common.add_argument("--samples", type=_nonneg_int, default=DEFAULT_SAMPLES,
                        help="random samples used to screen a declared R (default %(default)s)")
    common.add_argument("--seed", type=int, default=0, help="seed for declared-R screening")
    common.add_argument("--threads", type=int, default=1, help="worker threads")
    common.add_argument("--profile", action="store_true",
                        help="print search-kernel counters to stderr")

    parser = argparse.ArgumentParser(prog="delone", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("info", parents=[common], help="dimension, radii, motif size")
    p = sub.add_parser("nrho", parents=[common], help="cluster-counting step function")
    p.add_argument("--rho-max-sq", type=_rational_arg, required=True, metavar="Q")
    p.add_argument("--csv", action="store_true", help="emit CSV (rho_sq,N,min_group_order)")
    p = sub.add_parser("check-regular", parents=[common], help="regularity verdicts")
    p.add_argument("--method", choices=["tower", "local", "oracle", "all"], default="all")
    p.add_argument("--rho-max-sq", type=_rational_arg, metavar="Q",
                   help="local-criterion scan limit (default (2R)^2)")
    p = sub.add_parser("reach", parents=[common], help="t-reachable sets")
    p.add_argument("--t-sq", type=_rational_arg, required=True, metavar="Q")
    p.add_argument("--from", dest="origin", type=_nonneg_int, default=0, metavar="I",
                   help="motif index of the starting point")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--k", type=_nonneg_int, metavar="N", help="at most N steps")
    g.add_argument("--closure", action="store_true", help="the unbounded closure")
    p = sub.add_parser("bonded", parents=[common], help="t-bondedness")
    p.add_argument("--t-sq", type=_rational_arg, required=True, metavar="Q")
    p = sub.add_parser("drop", parents=[common], help="symmetry drop sequence")
    p.add_argument("--K", type=int, required=True, metavar="N")
    sub.add_parser("bounds", parents=[common], help="quantitative inequality battery")
    p = sub.add_parser("catalog", help="list or emit catalog entries")
    p.add_argument("action", choices=["list", "emit"])
    p.add_argument("name", nargs="?")
    return parser


# -- commands -------------------------------------------------------------------


class Session:
    """A loaded set plus lazily computed metric parameters."""

    def __init__(self, args):
        self.args = args
        if args.catalog:
            try:
                entry = catalog.entry(args.catalog)
            except KeyError as e:
                raise InputError(str(e.args[0])) from None
            self.X = entry.build()
            file_declared = entry.declared_R_sq
        elif args.file:
            self.X, file_declared = setfile.load(args.file)
        else:
            raise InputError("give a set file or --catalog NAME")
        self.declared = args.declared_R_sq if args.declared_R_sq is not None else file_declared
        self._params = None
        self.extra: dict = {}

    @property
    def params(self):
        if self._params is None:
            self._params = metric_parameters(self.X, self.declared)
            if self.declared is not None:
                check = verify_declared_R(self.X, self.declared, self.args.samples, self.args.seed)
                self.extra["declared_R_check"] = {
                    "samples": check.samples,
                    "seed": check.seed,
                    "max_observed_sq": check.max_observed_sq,
                    "status": check.status,
                }
                self.extra["seed"] = check.seed
                if not check.passed:
                    raise InputError(
                        f"declared R^2 = {setfile.fmt(self.declared)} is too small: a sampled point "
                        f"is at squared distance {setfile.fmt(check.max_observed_sq)} from the set")
        return self._params

    def report(self, command: str, results: Any) -> dict:
        rep = {
            "schema": SCHEMA,
            "command": command,
            "input_digest": input_digest(self.X, self.declared),
            "tool_version": __version__,
            "results": results,
        }
        rep.update(self.extra)
        return rep


def _radii(S: Session) -> dict:
    P = S.params
    return {
        "two_r_sq": P.two_r_sq,
        "r_sq": P.r_sq,
        "R_sq": P.R_sq,
        "R_source": "declared" if P.declared else "exact",
    }


def cmd_info(S: Session):
    X = S.X
    out = {"name": X.name, "dimension": X.d, "motif_size": len(X.motif),
           "gram": X.gram.entries, "motif": X.motif}
    out.update(_radii(S))
    return out, EXIT_OK


def _nrho_rows(S: Session, rho_max_sq: Fraction):
    X = S.X
    rows = []
    for q in [Fraction(0)] + breakpoints(X, rho_max_sq):
        rep = n_rho(X, q, S.args.threads)
        orders = [cluster_group(get_cluster(X, i, q)).euclidean_order
                  for i in rep.class_representatives]
        finite = [o for o in orders if o is not INFINITE]
        rows.append({"rho_sq": q, "N": rep.class_count,
                     "min_group_order": min(finite) if finite else INFINITE,
                     "classes": rep.classes})
    return rows


def cmd_nrho(S: Session):
    rows = _nrho_rows(S, S.args.rho_max_sq)
    if S.args.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rho_sq", "N", "min_group_order"])
        for r in rows:
            w.writerow([to_json(r["rho_sq"]), r["N"], to_json(r["min_group_order"])])
        return buf.getvalue(), EXIT_OK
    return {"rho_max_sq": S.args.rho_max_sq, "steps": rows}, EXIT_OK


def _verdict_json(v) -> dict:
    return {"method": v.method, "verdict": v.verdict, "certificate": v.certificate}


def cmd_check_regular(S: Session):
    method = S.args.method
    out, code = {}, EXIT_OK
    if method in ("tower", "all"):
        v = tower_check(S.X, S.params, S.args.threads)
        out["tower"] = _verdict_json(v)
        if v.verdict is Verdict.INCONCLUSIVE:
            code = EXIT_INCONCLUSIVE
    if method in ("local", "all"):
        v = local_criterion_scan(S.X, S.args.rho_max_sq, S.params, S.args.threads)
        out["local"] = _verdict_json(v)
        if v.verdict is Verdict.INCONCLUSIVE:
            code = EXIT_INCONCLUSIVE
    if method in ("oracle", "all"):
        out["oracle"] = _verdict_json(oracle_is_regular(S.X))
    return out, code


def cmd_reach(S: Session):
    X, a = S.X, S.args
    if a.origin >= len(X.motif):
        raise InputError(f"--from {a.origin}: motif has {len(X.motif)} points")
    if a.closure:
        R = reachability_closure(X, a.origin, a.t_sq)
        return {"t_sq": a.t_sq, "origin": R.origin, "rank": R.rank, "component": R.component,
                "potentials": R.potentials, "sublattice": R.sublattice,
                "whole_lattice": R.is_whole_lattice}, EXIT_OK
    R = reachable_set(X, Site(a.origin, (0,) * X.d), a.t_sq, a.k)
    return {"t_sq": a.t_sq, "k": a.k, "origin": R.origin, "rank": R.rank, "mu": R.mu,
            "sites": R.sites}, EXIT_OK


def cmd_bonded(S: Session):
    X, t_sq = S.X, S.args.t_sq
    closures = [reachability_closure(X, i, t_sq) for i in range(len(X.motif))]
    return {"t_sq": t_sq, "bonded": is_t_bonded(X, t_sq),
            "closure_ranks": [c.rank for c in closures],
            "component_of_0": closures[0].component,
            "sublattice_of_0": closures[0].sublattice}, EXIT_OK


def cmd_drop(S: Session):
    rep = drop_sequence(S.X, S.args.K, S.params)
    return {"K": S.args.K, "orders": rep.orders, "drop_count": rep.drop_count,
            "divisibility_chain": rep.divisibility_chain}, EXIT_OK


def cmd_bounds(S: Session):
    rep = bounds_report(S.X, S.params)
    out = to_json(rep)
    out["failures"] = len(rep.failures)
    out.update(_radii(S))
    return out, EXIT_OK


COMMANDS = {
    "info": cmd_info,
    "nrho": cmd_nrho,
    "check-regular": cmd_check_regular,
    "reach": cmd_reach,
    "bonded": cmd_bonded,
    "drop": cmd_drop,
    "bounds": cmd_bounds,
}


def cmd_catalog(args, out) -> int:
    if args.action == "list":
        rows = [{"name": e.name, "generator": e.generator, "params": e.params,
                 "expected_facts": {k: {"value": f.value, "source": f.source}
                                    for k, f in e.expected_facts.items()}}
                for e in (catalog.entry(n) for n in catalog.names())]
        out.write(dump({"schema": SCHEMA, "command": "catalog list", "tool_version": __version__,
                        "results": rows}))
        return EXIT_OK
    if not args.name:
        raise InputError("catalog emit needs an entry name")
    try:
        entry = catalog.entry(args.name)
    except KeyError as e:
        raise InputError(str(e.args[0])) from None
    out.write(setfile.dumps(entry.build(), entry.declared_R_sq))
    return EXIT_OK


def run(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INPUT
    try:
        if args.command == "catalog":
            return cmd_catalog(args, out)
        with profiling.collect() as counters:
            S = Session(args)
            results, code = COMMANDS[args.command](S)
        if isinstance(results, str):
            out.write(results)
        else:
            out.write(dump(S.report(args.command, results)))
        if args.profile:
            err.write(json.dumps({"profile": dict(sorted(counters.items()))}, sort_keys=True) + "\n")
        return code
    except UnsupportedDimensionError as e:
        err.write(f"error: {e}\n")
        return EXIT_DIMENSION
    except (InputError, InvalidSetError, InconsistentParametersError, NotRegularError, ValueError) as e:
        err.write(f"error: {e}\n")
        return EXIT_INPUT
    except DeloneError as e:
        err.write(f"error: {e}\n")
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
