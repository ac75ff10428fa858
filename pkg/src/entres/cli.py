"""Command line pipeline: ingest tabular data against a declared schema,
materialize similarity scores, run any resolution operation, and write the
results as plain files.

    entres --spec music.er --data data/music --sim table:data/music/simtable.tsv \
           --mode maximal --out out/

Modes: validate, sim, lb, ub, loose-ub, solve-one, enumerate[:n],
maximal[:n], pm, cm, levels, explain:a,b, eval. Merge sets are written as
TSV (left, right), levels as (left, right, level), metrics as JSON,
explanations as DOT and JSON. Exit codes: 0 success, 1 usage, 2
specification error, 3 data error, 4 no solution where one is required.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Iterable

from . import engine
from .errors import (
    DataError,
    HeaderMismatch,
    MissingFile,
    MissingSimScore,
    NotInSolution,
    RaggedRow,
    SpecError,
    UnknownConstant,
)
from .explain import proof_tree, rule_depth, to_dot, to_json
from .model import NULL, Constant, Database, Fact, MergePair, entity, value
from .rules import Schema, Specification, load_spec, validate_sim_safety
from .simkit import (
    SimStore,
    SimTable,
    StrictResolver,
    TableResolver,
    sim_all,
    sim_cs,
    sim_functions,
    sim_opt,
)

_MODES = (
    "validate", "sim", "lb", "ub", "loose-ub", "solve-one",
    "enumerate", "maximal", "pm", "cm", "levels", "explain", "eval",
)

_PAIR_HEADER = ["left", "right"]
_CLUSTER_HEADER = ["constant", "cluster"]


# ----------------------------------------------------------------- ingest


def _cell(text: str, hint: str, null_token: str) -> Constant:
    if text == null_token:
        return NULL
    return entity(text) if hint == "id" else value(text)


def ingest(data_dir: str, schema: Schema, null_token: str = "") -> Database:
    """Load one `<Relation>.tsv` or `<Relation>.csv` per declared relation.
    The header row must equal the declared attribute names; cells equal to
    the null token become the null constant; id-hinted columns become
    entity references, all others values. Duplicate rows collapse."""
    facts: list[Fact] = []
    root = Path(data_dir)
    for decl in schema.relations:
        path = None
        for ext in (".tsv", ".csv"):
            cand = root / f"{decl.name}{ext}"
            if cand.is_file():
                path = cand
                break
        if path is None:
            raise MissingFile(
                f"no {decl.name}.tsv or {decl.name}.csv under {root}"
            )
        delim = "\t" if path.suffix == ".tsv" else ","
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh, delimiter=delim)
            header = next(reader, None)
            if header != list(decl.attributes):
                raise HeaderMismatch(
                    f"{path}: header {header!r} does not match declared "
                    f"attributes {list(decl.attributes)!r}"
                )
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(decl.attributes):
                    raise RaggedRow(
                        f"{path}:{lineno}: {len(row)} cells for "
                        f"{len(decl.attributes)} attributes"
                    )
                facts.append(Fact(decl.name, tuple(
                    _cell(c, h, null_token)
                    for c, h in zip(row, decl.hints)
                )))
    return Database(facts)


# ------------------------------------------------------- pairs and truth


def write_pairs(path: Path, pairs: Iterable[MergePair]) -> None:
    rows = sorted((p.left.text, p.right.text) for p in pairs)
    lines = ["\t".join(_PAIR_HEADER)] + ["\t".join(r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_truth(path: str) -> frozenset[MergePair]:
    """Read ground truth as either an explicit pair list (header
    left/right) or cluster assignments (header constant/cluster), expanded
    to all within-cluster pairs."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh, delimiter="\t") if r]
    if not rows:
        raise DataError(f"{path}: empty ground truth file")
    header, body = rows[0], rows[1:]
    pairs: set[MergePair] = set()
    if header == _PAIR_HEADER:
        for lineno, row in enumerate(body, start=2):
            if len(row) != 2:
                raise RaggedRow(f"{path}:{lineno}: expected 2 cells")
            if row[0] != row[1]:
                pairs.add(MergePair.of(entity(row[0]), entity(row[1])))
    elif header == _CLUSTER_HEADER:
        clusters: dict[str, list[str]] = {}
        for lineno, row in enumerate(body, start=2):
            if len(row) != 2:
                raise RaggedRow(f"{path}:{lineno}: expected 2 cells")
            clusters.setdefault(row[1], []).append(row[0])
        for members in clusters.values():
            uniq = sorted(set(members))
            for i, a in enumerate(uniq):
                for b in uniq[i + 1:]:
                    pairs.add(MergePair.of(entity(a), entity(b)))
    else:
        raise HeaderMismatch(
            f"{path}: ground truth header must be "
            f"{'/'.join(_PAIR_HEADER)} or {'/'.join(_CLUSTER_HEADER)}, "
            f"got {header!r}"
        )
    return frozenset(pairs)


def evaluate(
    result: Iterable[MergePair], truth: Iterable[MergePair]
) -> dict[str, Fraction]:
    """Exact precision, recall and F1 over canonical pair sets. Precision
    of an empty result and recall against an empty truth are 1 by
    convention; F1 is 0 when both P and R are 0."""
    rset, tset = frozenset(result), frozenset(truth)
    hit = len(rset & tset)
    p = Fraction(1) if not rset else Fraction(hit, len(rset))
    r = Fraction(1) if not tset else Fraction(hit, len(tset))
    f1 = Fraction(0) if p + r == 0 else 2 * p * r / (p + r)
    return {"precision": p, "recall": r, "f1": f1}


# ------------------------------------------------------------- run pipeline


class _Timing:
    def __init__(self) -> None:
        self.preprocess = 0.0
        self.fixpoint = 0.0
        self.solve = 0.0

    def line(self) -> str:
        return (
            f"timing: preprocess={self.preprocess:.3f}s "
            f"fixpoint={self.fixpoint:.3f}s solve={self.solve:.3f}s"
        )


class _ArgParser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; this tool reserves 2
    for specification errors, so remap to 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> argparse.ArgumentParser:
    p = _ArgParser(
        prog="entres",
        description="Collective entity resolution over rule specifications.",
    )
    p.add_argument("--spec", required=True, help="specification file")
    p.add_argument("--data", help="directory with one TSV/CSV per relation")
    p.add_argument(
        "--sim", default="opt", metavar="{all|cs|opt|table:FILE}",
        help="similarity strategy (default: opt)",
    )
    p.add_argument(
        "--mode", required=True, metavar="MODE",
        help="one of validate, sim, lb, ub, loose-ub, solve-one, "
             "enumerate[:n], maximal[:n], pm, cm, levels, explain:a,b, eval",
    )
    p.add_argument("--out", default=".", help="output directory (default: .)")
    p.add_argument("--truth", help="ground truth file for metrics")
    p.add_argument(
        "--null-token", default="",
        help="cell text read as the null constant (default: empty string)",
    )
    p.add_argument(
        "--levels-scope", choices=("solution", "ub"), default="solution",
        help="admit only in-solution rule answers to the level chain, or all",
    )
    p.add_argument(
        "--null-inequality", choices=("distinct", "fail"), default="distinct",
        help="treat null as a regular distinct constant in inequalities, "
             "or falsify any inequality touching it",
    )
    p.add_argument(
        "--seed", type=int, default=0,
        help="reserved; the pipeline is deterministic and ignores it",
    )
    return p


def _parse_mode(text: str, parser: argparse.ArgumentParser):
    base, _, arg = text.partition(":")
    if base not in _MODES:
        parser.error(f"unknown mode {text!r}")
    if base in ("enumerate", "maximal"):
        if not arg:
            return base, None
        try:
            n = int(arg)
        except ValueError:
            parser.error(f"mode {base} needs an integer bound, got {arg!r}")
        if n <= 0:
            parser.error(f"mode {base} needs a positive bound")
        return base, n
    if base == "explain":
        left, sep, right = arg.partition(",")
        if not sep or not left or not right:
            parser.error("mode explain needs a pair: explain:a,b")
        return base, (left, right)
    if arg:
        parser.error(f"mode {base} takes no argument")
    return base, None


def _safety_line(spec: Specification) -> str:
    verdict = "yes" if not validate_sim_safety(spec) else "no"
    return (
        f"sim-safe: {verdict}; {len(spec.hard)} hard, "
        f"{len(spec.soft)} soft, {len(spec.dcs)} DC"
    )


def _sim_filename(func: str) -> str:
    safe = "".join(ch if ch.isalnum() else "_" for ch in func)
    return f"sim_{safe}.tsv"


def _export_store(store: SimStore, out: Path) -> list[Path]:
    written = []
    for func in store.funcs():
        path = out / _sim_filename(func)
        lines = ["left\tright\tscore"]
        for a, b, s in store.rows(func):
            lines.append(f"{a.text}\t{b.text}\t{s / 100:.2f}")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(path)
    return written


def _prepare_sims(
    args, spec: Specification, db: Database
) -> tuple[object | None, SimStore | None]:
    """Resolver for the engine plus the materialized store (None for the
    table strategy, which serves lookups directly)."""
    if not sim_functions(spec):
        return None, None
    if args.sim.startswith("table:"):
        table = SimTable.load(args.sim[len("table:"):])
        return TableResolver(table), None
    knobs = {"null_inequality": args.null_inequality}
    if args.sim == "all":
        store = sim_all(db, spec)
    elif args.sim == "cs":
        store = sim_cs(db, spec)
    elif args.sim == "opt":
        store, _ = sim_opt(db, spec, **knobs)
    else:
        raise DataError(
            f"unknown similarity strategy {args.sim!r}; "
            f"expected all, cs, opt or table:FILE"
        )
    return StrictResolver(store), store


def _entity_by_text(db: Database, text: str) -> Constant:
    c = entity(text)
    if c not in db.domain:
        raise UnknownConstant(f"no entity reference {text!r} in the data")
    return c


def _metrics_io(
    pairs: Iterable[MergePair], truth_path: str, out: Path
) -> None:
    truth = load_truth(truth_path)
    m = evaluate(pairs, truth)
    payload = {k: float(v) for k, v in m.items()}
    payload.update({f"{k}_exact": str(v) for k, v in m.items()})
    dest = out / "metrics.json"
    dest.write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    print(
        f"metrics: P={float(m['precision']):.4f} "
        f"R={float(m['recall']):.4f} F1={float(m['f1']):.4f} -> {dest}"
    )


def run(args, parser: argparse.ArgumentParser) -> int:
    mode, mode_arg = _parse_mode(args.mode, parser)
    spec = load_spec(args.spec)

    if mode == "validate":
        print(_safety_line(spec))
        for v in validate_sim_safety(spec):
            print(
                f"  rule {v.rule_label}: merge position "
                f"{v.relation}.{v.attribute} feeds a similarity atom"
            )
        return 0

    if not args.data:
        parser.error(f"mode {mode} requires --data")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    timing = _Timing()
    knobs = {"null_inequality": args.null_inequality}

    t0 = time.perf_counter()
    db = ingest(args.data, spec.schema, args.null_token)
    sims, store = _prepare_sims(args, spec, db)
    timing.preprocess = time.perf_counter() - t0

    code = 0
    if mode == "sim":
        if store is None:
            print("sim: nothing to materialize (table strategy or no "
                  "similarity atoms)")
        else:
            files = _export_store(store, out)
            print(
                f"sim: {len(store)} scores from {store.calls} calls -> "
                + ", ".join(str(f) for f in files)
            )
    elif mode in ("lb", "ub", "loose-ub"):
        t0 = time.perf_counter()
        if mode == "lb":
            e = engine.lb(db, spec, sims, **knobs)
        elif mode == "ub":
            e = engine.ub(db, spec, sims, **knobs)
        else:
            e = engine.loose_ub(db, spec, **knobs)
        timing.fixpoint = time.perf_counter() - t0
        pairs = e.nontrivial_pairs()
        dest = out / f"{mode}.tsv"
        write_pairs(dest, pairs)
        print(f"{mode}: {len(pairs)} merges -> {dest}")
        if args.truth:
            _metrics_io(pairs, args.truth, out)
    elif mode in ("enumerate", "maximal"):
        t0 = time.perf_counter()
        if mode == "enumerate":
            sols = engine.enumerate_solutions(db, spec, sims, n=mode_arg, **knobs)
        else:
            sols = engine.maximal_solutions(db, spec, sims, n=mode_arg, **knobs)
        timing.solve = time.perf_counter() - t0
        if not sols:
            print("no solution exists", file=sys.stderr)
            code = 4
        for k, sol in enumerate(sols, start=1):
            dest = out / f"{mode}_{k}.tsv"
            write_pairs(dest, sol.pairs())
            print(f"{mode} {k}: {len(sol.pairs())} merges -> {dest}")
    elif mode in ("solve-one", "pm", "cm", "eval", "levels", "explain"):
        t0 = time.perf_counter()
        sol = engine.solve_one(db, spec, sims, **knobs)
        timing.solve = time.perf_counter() - t0
        if sol is None:
            print("no solution exists", file=sys.stderr)
            code = 4
        elif mode == "solve-one":
            dest = out / "solve-one.tsv"
            write_pairs(dest, sol.pairs())
            print(f"solve-one: {len(sol.pairs())} merges -> {dest}")
            if args.truth:
                _metrics_io(sol.pairs(), args.truth, out)
        elif mode in ("pm", "cm"):
            t0 = time.perf_counter()
            if mode == "pm":
                pairs = engine.possible_merges(db, spec, sims, **knobs)
            else:
                pairs = engine.certain_merges(db, spec, sims, **knobs)
            timing.solve += time.perf_counter() - t0
            dest = out / f"{mode}.tsv"
            write_pairs(dest, pairs)
            print(f"{mode}: {len(pairs)} merges -> {dest}")
            if args.truth:
                _metrics_io(pairs, args.truth, out)
        elif mode == "eval":
            if not args.truth:
                parser.error("mode eval requires --truth")
            _metrics_io(sol.pairs(), args.truth, out)
        elif mode == "levels":
            t0 = time.perf_counter()
            lm = engine.levels(
                db, spec, sims, sol, scope=args.levels_scope, **knobs
            )
            timing.fixpoint += time.perf_counter() - t0
            dest = out / "levels.tsv"
            lines = ["left\tright\tlevel"] + [
                f"{p.left.text}\t{p.right.text}\t{lv}" for p, lv in lm.items()
            ]
            dest.write_text("\n".join(lines) + "\n", encoding="utf-8")
            print(f"levels: {len(lm)} merges -> {dest}")
        else:
            a = _entity_by_text(db, mode_arg[0])
            b = _entity_by_text(db, mode_arg[1])
            tree = proof_tree(db, spec, sims, sol, (a, b), **knobs)
            dot_dest = out / "explain.dot"
            dot_dest.write_text(to_dot(tree, spec), encoding="utf-8")
            json_dest = out / "explain.json"
            json_dest.write_text(to_json(tree) + "\n", encoding="utf-8")
            print(
                f"explain ({a.text}, {b.text}): rule-depth "
                f"{rule_depth(tree)} -> {dot_dest}, {json_dest}"
            )
    print(timing.line())
    return code


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return run(args, parser)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    except SpecError as exc:
        print(f"specification error: {exc}", file=sys.stderr)
        return 2
    except (DataError, MissingSimScore, UnknownConstant) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NotInSolution as exc:
        print(f"no solution contains the pair: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
