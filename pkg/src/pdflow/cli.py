"""Command-line driver.

Exit codes: 0 success, 1 unreadable or malformed program, 2 open program,
3 conflicting configuration, 4 step budget exhausted, 5 differential check
failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import corpus as corpus_mod
from .concrete import OpenProgram
from .config import FORMATS, GC_MODES, MACHINE_NAMES, Config, ConfigError, check_config
from .diff import diff
from .emit import to_dot, to_json
from .engine import BudgetExceeded, analyze
from .pushdown import Unsupported
from .report import make_report
from .syntax import ParseError, closed, free_vars, parse

__all__ = ["main", "cmd_analyze", "cmd_diff", "cmd_corpus", "CORPUS_FIELDS"]

EXIT_PARSE, EXIT_OPEN, EXIT_CONFIG, EXIT_BUDGET, EXIT_DIFF = 1, 2, 3, 4, 5

CORPUS_FIELDS = [
    "program", "machine", "alloc", "gc", "memo", "status", "states", "edges",
    "kstore", "cstore", "memo_size", "results", "facts", "seconds",
]


class CliError(Exception):
    def __init__(self, code: int, msg: str):
        super().__init__(msg)
        self.code = code


def _load(path: str):
    try:
        prog = corpus_mod.load(path)
    except OSError as exc:
        raise CliError(EXIT_PARSE, f"cannot read {path}: {exc.strerror or exc}") from None
    try:
        e = parse(prog.source)
    except ParseError as exc:
        raise CliError(EXIT_PARSE, f"{path}: {exc}") from None
    return prog, e


def _config(args, prog) -> Config:
    machine = args.machine or prog.header.get("machine", "pushdown")
    return Config(machine=machine, alloc=args.alloc, gc=args.gc, memo=args.memo,
                  budget=args.budget, format=getattr(args, "format", "summary"))


def _checked(config, e):
    try:
        return check_config(config, e)
    except ConfigError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from None


def _run(e, config):
    try:
        t0 = time.perf_counter()
        system = analyze(e, config.machine, config.policy(), config.gc, config.memo, config.budget)
        return system, time.perf_counter() - t0
    except OpenProgram as exc:
        raise CliError(EXIT_OPEN, str(exc)) from None
    except BudgetExceeded as exc:
        raise CliError(EXIT_BUDGET, str(exc)) from None
    except Unsupported as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from None


def _closed(e):
    if not closed(e):
        names = ", ".join(sorted(free_vars(e)))
        raise CliError(EXIT_OPEN, f"program has free variables: {names}")


def cmd_analyze(path: str, config: Config, out: str | None = None, stdout=None):
    """Analyze one file; returns the report.  Raises :class:`CliError`."""
    stdout = stdout or sys.stdout
    _, e = _load(path)
    _closed(e)
    config = _checked(config, e)
    system, secs = _run(e, config)
    report = make_report(system, secs)
    graph = None
    if config.format == "json":
        graph = to_json(system)
    elif config.format == "dot":
        graph = to_dot(system)
    if graph is not None and out is None:
        stdout.write(graph if graph.endswith("\n") else graph + "\n")
        print(report.text(), file=sys.stderr)
        return report
    if graph is not None:
        Path(out).write_text(graph, encoding="utf-8")
    print(report.text(), file=stdout)
    return report


def cmd_diff(path: str, config: Config, fuel: int = 10_000, stdout=None):
    stdout = stdout or sys.stdout
    _, e = _load(path)
    _closed(e)
    config = _checked(config, e)
    try:
        verdict = diff(e, config, fuel)
    except ConfigError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from None
    except BudgetExceeded as exc:
        raise CliError(EXIT_BUDGET, str(exc)) from None
    print(verdict.summary(), file=stdout)
    if not verdict.passed:
        print(f"  state: {verdict.state!r}"[:2000], file=stdout)
    return verdict


def _corpus_row(job) -> dict:
    path, machine, alloc, gc, memo, budget = job
    row = {"program": Path(path).stem, "alloc": alloc, "gc": gc, "memo": memo}
    try:
        prog, e = _load(path)
        _closed(e)
        config = Config(machine=machine or prog.machine, alloc=alloc, gc=gc, memo=memo, budget=budget)
        row["machine"] = config.machine
        config = _checked(config, e)
        system, secs = _run(e, config)
    except CliError as exc:
        row.setdefault("machine", machine or "")
        row["status"] = f"error {exc.code}: {exc}"
        return row
    rep = make_report(system, secs)
    row.update(status="ok", states=rep.states, edges=rep.edges, kstore=rep.kstore,
               cstore=rep.cstore, memo_size=rep.memo, results=" ".join(rep.results),
               facts=rep.facts, seconds=f"{secs:.3f}")
    return row


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("AAM_THREADS", "1")))
    except ValueError:
        return 1


def cmd_corpus(directory, machines=(None,), allocs=("mono",), gcs=("none",), memos=(False,),
               budget=None) -> list:
    """Run every ``*.scm`` file under every configuration; one row per run.

    A machine of ``None`` means the machine named in the file's header.
    Per-file failures are recorded in the ``status`` column.
    """
    paths = sorted(Path(directory).glob("*.scm"))
    jobs = [(str(p), m, a, g, mm, budget)
            for p in paths for m in machines for a in allocs for g in gcs for mm in memos]
    n = _workers()
    if n > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(n) as pool:
            return list(pool.map(_corpus_row, jobs))
    return [_corpus_row(j) for j in jobs]


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CORPUS_FIELDS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def _add_config_flags(p, formats=True):
    p.add_argument("--machine", choices=MACHINE_NAMES, default=None,
                   help="abstract machine (default: the file's '; machine:' header, else pushdown)")
    p.add_argument("--alloc", default="mono", help="fresh, mono or kcfa:<k>")
    p.add_argument("--gc", choices=GC_MODES, default="none")
    p.add_argument("--memo", action="store_true", help="memoize function entries")
    p.add_argument("--budget", type=int, default=None, help="maximum number of state visits")
    if formats:
        p.add_argument("--format", choices=FORMATS, default="summary")
        p.add_argument("--out", default=None, help="write the graph here")


def _split(text):
    return [x for x in text.split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdflow", description="Pushdown control-flow analysis.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="analyze a program")
    p.add_argument("path")
    _add_config_flags(p)

    p = sub.add_parser("diff", help="check the analysis against a concrete run")
    p.add_argument("path")
    _add_config_flags(p, formats=False)
    p.add_argument("--fuel", type=int, default=10_000, help="concrete steps to check")

    p = sub.add_parser("corpus", help="run a directory of programs and print CSV")
    p.add_argument("dir", nargs="?", default=None, help="default: the bundled programs")
    p.add_argument("--machines", default="", help="comma-separated; default: each file's header")
    p.add_argument("--allocs", default="mono")
    p.add_argument("--gcs", default="none")
    p.add_argument("--memo", choices=("off", "on", "both"), default="off")
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--out", default=None, help="write the CSV here")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "analyze":
            prog, _ = _load(args.path)
            cmd_analyze(args.path, _config(args, prog), args.out)
        elif args.command == "diff":
            prog, _ = _load(args.path)
            verdict = cmd_diff(args.path, _config(args, prog), args.fuel)
            if not verdict.passed:
                return EXIT_DIFF
        else:
            memos = {"off": (False,), "on": (True,), "both": (False, True)}[args.memo]
            machines = tuple(_split(args.machines)) or (None,)
            for m in machines:
                if m is not None and m not in MACHINE_NAMES:
                    raise CliError(EXIT_CONFIG, f"unknown machine '{m}'")
            directory = args.dir or corpus_mod.bundled_dir()
            rows = cmd_corpus(directory, machines, tuple(_split(args.allocs)),
                              tuple(_split(args.gcs)), memos, args.budget)
            text = rows_to_csv(rows)
            if args.out:
                Path(args.out).write_text(text, encoding="utf-8")
            else:
                sys.stdout.write(text)
    except CliError as exc:
        print(f"pdflow: {exc}", file=sys.stderr)
        return exc.code
    return 0


if __name__ == "__main__":
    sys.exit(main())
