"""Command-line entry point: ``capelli <subcommand> ...``.

Exit codes: 0 success / identity holds, 1 identity or property fails,
2 unreadable input, 3 memory budget exceeded (checkpoint kept).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import signal
import sys
import time
from pathlib import Path

from . import __version__, kernels
from .action_engine import BudgetExceeded
from .capelli_verifier import Interrupted
from .division_algebra import (BUILTIN_TABLES, TableError, build_algebra, check_alternative,
                               check_anticommutation, check_properties, check_skew_products,
                               enumerate_admissible, is_normalized, load_builtin, norm_multiplicative,
                               normalize, parse_table, table_to_text)

log = logging.getLogger("capelli")

CHECKPOINT_ENV = "CAPELLI_CHECKPOINT_DIR"
# test hook: SIGKILL this process after that many checkpointed chunks
KILL_ENV = "CAPELLI_KILL_AFTER_CHUNKS"
EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


class InputError(Exception):
    pass


def load_table(source: str):
    """Built-in name or path to a table file; returns (name, TableMatrix)."""
    if source in BUILTIN_TABLES:
        return source, load_builtin(source)
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read table {source!r}: {exc}") from exc
    try:
        return path.stem, parse_table(text)
    except (TableError, ValueError) as exc:
        raise InputError(f"cannot parse {source}: {exc}") from exc


def parse_ints(text: str, what: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(" ", "").split(",") if v != ""]
    except ValueError as exc:
        raise InputError(f"bad {what} {text!r}: expected comma-separated integers") from exc


def parse_size(text: str | None) -> int | None:
    """Byte count with an optional K/M/G suffix."""
    if text is None:
        return None
    units = {"K": 1 << 10, "M": 1 << 20, "G": 1 << 30}
    t = text.strip().upper().rstrip("B")
    scale = 1
    if t and t[-1] in units:
        scale, t = units[t[-1]], t[:-1]
    try:
        return int(float(t) * scale)
    except ValueError as exc:
        raise InputError(f"bad memory size {text!r}") from exc


def checkpoint_path(args, kind: str, config: dict) -> Path | None:
    root = args.checkpoint_dir or os.environ.get(CHECKPOINT_ENV)
    if not root:
        return None
    digest = hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()[:16]
    return Path(root) / f"{kind}-{digest}.json"


def write_report(args, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.report:
        Path(args.report).parent.mkdir(parents=True, exist_ok=True)
        Path(args.report).write_text(text)
    if not args.quiet:
        sys.stdout.write(text)


# -- subcommands ----------------------------------------------------------------------------

def cmd_check_table(args) -> int:
    name, t = load_table(args.table)
    rep = check_properties(t)
    print(f"table {name} (n={t.n})")
    print(f"  rows/columns signed permutations: {rep.prop_i}")
    print(f"  2x2 pairing rule:                 {rep.prop_ii}")
    print(f"  constant diagonal:                {rep.prop_iii}")
    for v in rep.violations:
        print(f"  violation: {v}")
    if not rep.admissible:
        return EXIT_FAIL
    nt, _ = normalize(t)
    alg = build_algebra(nt)
    checks = {
        "anticommutation": check_anticommutation(nt),
        "skew products": check_skew_products(nt, seed=args.seed),
        "norm multiplicative": norm_multiplicative(alg, seed=args.seed),
        "alternative/Moufang": check_alternative(alg, seed=args.seed),
    }
    if not is_normalized(t):
        print("  (lemma checks run on the normalized form)")
    for k, v in checks.items():
        print(f"  {k + ':':33s}{v}")
    return EXIT_OK if all(checks.values()) else EXIT_FAIL


def _common_kwargs(args) -> dict:
    kill = os.environ.get(KILL_ENV)
    return dict(engine=args.engine, mode=args.product, mem_cap=parse_size(args.mem_cap),
                stop_after=int(kill) if kill else None)


def cmd_verify(args) -> int:
    from .capelli_verifier import verify_identity
    name, t = load_table(args.table)
    d = parse_ints(args.diag, "diag")
    if len(d) != t.n:
        raise InputError(f"diag has {len(d)} entries, table has dimension {t.n}")
    cfg = dict(table=[list(r) for r in t.entries], diag=d, mode=args.product)
    rep = verify_identity(t, d, name=name, order=args.order, threads=args.threads_used,
                          checkpoint=checkpoint_path(args, "verify", cfg), **_common_kwargs(args))
    write_report(args, rep.to_dict())
    return EXIT_OK if rep.identity_holds else EXIT_FAIL


def cmd_search_diag(args) -> int:
    from .capelli_verifier import search_diag
    name, t = load_table(args.table)
    ms = parse_ints(args.multiset, "multiset")
    if len(ms) != t.n:
        raise InputError(f"multiset has {len(ms)} entries, table has dimension {t.n}")
    cfg = dict(table=[list(r) for r in t.entries], multiset=ms, mode=args.product, seed=args.seed)
    res = search_diag(t, ms, name=name, seed=args.seed, threads=args.threads_used,
                      checkpoint=checkpoint_path(args, "search", cfg), **_common_kwargs(args))
    write_report(args, res.to_dict())
    return EXIT_OK


def cmd_enumerate(args) -> int:
    tables = enumerate_admissible(args.n, normalized_only=not args.all)
    payload = dict(n=args.n, normalized_only=not args.all, count=len(tables),
                   tables=[[list(r) for r in t.entries] for t in tables])
    if args.report:
        write_report(argparse.Namespace(report=args.report, quiet=True), payload)
    print(f"n={args.n}: {len(tables)} {'normalized ' if not args.all else ''}admissible tables")
    if args.show:
        for t in tables:
            print(table_to_text(t))
    return EXIT_OK


def cmd_action_report(args) -> int:
    from .capelli_verifier import action_report
    name, t = load_table(args.table)
    rows = action_report(t, parse_ints(args.s, "s values"))
    payload = dict(table_name=name, checks=[dict(s=c.s, factor=c.laplacian_factor,
                                                 laplacian=c.laplacian_ok, diagonal=c.diagonal_ok,
                                                 off_diagonal=c.off_diagonal_ok) for c in rows])
    write_report(args, payload)
    return EXIT_OK if all(c.ok for c in rows) else EXIT_FAIL


def cmd_selftest(args) -> int:
    from .selftest import run_selftest
    return EXIT_OK if run_selftest(seed=args.seed) else EXIT_FAIL


def cmd_bench(args) -> int:
    from .bench import run_bench
    results = run_bench(sizes=parse_ints(args.sizes, "sizes"), repeats=args.repeats,
                        columns=args.columns)
    for r in results:
        print(json.dumps(r, sort_keys=True))
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="capelli", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp, table=True):
        if table:
            sp.add_argument("--table", required=True, help="built-in name or table file")
        sp.add_argument("--threads", type=int, default=0, help="worker threads (0 = all cores)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--report", help="write the JSON report here")
        sp.add_argument("--quiet", action="store_true", help="do not echo the report")

    def engine_opts(sp):
        sp.add_argument("--engine", choices=("auto", "weyl", "action"), default="auto")
        sp.add_argument("--mem-cap", help="memory budget for the action engine, e.g. 4G")
        sp.add_argument("--checkpoint-dir", help=f"resumable progress (default ${CHECKPOINT_ENV})")
        sp.add_argument("--product", choices=("matrix", "algebra", "conjugate"), default="matrix",
                        help="experimental: right-hand-side matrix (default A B)")

    sp = sub.add_parser("check-table", help="admissibility and lemma checks")
    common(sp)
    sp.set_defaults(func=cmd_check_table)

    sp = sub.add_parser("verify", help="check the identity for one diagonal")
    common(sp)
    engine_opts(sp)
    sp.add_argument("--diag", required=True)
    sp.add_argument("--order", choices=("column", "row"), default="column",
                    help="experimental: determinant factor order (weyl engine)")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("search-diag", help="all permutations of a multiset that satisfy the identity")
    common(sp)
    engine_opts(sp)
    sp.add_argument("--multiset", required=True)
    sp.set_defaults(func=cmd_search_diag)

    sp = sub.add_parser("enumerate", help="admissible tables of a dimension")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--all", action="store_true", help="include non-normalized tables")
    sp.add_argument("--show", action="store_true")
    sp.add_argument("--report")
    sp.set_defaults(func=cmd_enumerate)

    sp = sub.add_parser("action-report", help="actions on powers of the invariant quartic")
    common(sp)
    sp.add_argument("--s", default="0,1,2,3,4")
    sp.set_defaults(func=cmd_action_report)

    sp = sub.add_parser("selftest", help="oracle cross-checks")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--threads", type=int, default=0)
    sp.set_defaults(func=cmd_selftest)

    sp = sub.add_parser("bench", help="numba vs numpy kernels")
    sp.add_argument("--sizes", default="4,6,8")
    sp.add_argument("--repeats", type=int, default=3)
    sp.add_argument("--columns", type=int, default=64)
    sp.add_argument("--threads", type=int, default=0)
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    args.threads_used = kernels.set_threads(getattr(args, "threads", 0))
    t0 = time.perf_counter()
    try:
        code = args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except Interrupted:
        os.kill(os.getpid(), signal.SIGKILL)
        raise
    except BudgetExceeded as exc:
        print(f"memory budget exceeded: {exc}; progress kept in the checkpoint directory",
              file=sys.stderr)
        return EXIT_BUDGET
    except RuntimeError as exc:
        # checkpoint mismatch and similar refusals
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    log.info("%s finished in %.1f s", args.cmd, time.perf_counter() - t0)
    return code


if __name__ == "__main__":
    sys.exit(main())
