"""Command-line entry point: convert, validate, diff, stats and frames.

Exit status is 0 when clean, 1 when there are findings (or differences,
for ``diff``) and 2 on any operational error.
"""
from __future__ import annotations

import argparse
import os
import sys
import warnings
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .conllu import ConlluError, DependencyTree, check_wellformed, iter_document, serialize_tree
from .lexicon import Lexicon, LexiconError, load_lexicon
from .rules import PASS_NAMES, ConversionConfig, PipelineError, run_pipeline
from .sejong import (SEJONG_LABELS, SejongMappingError, audit_with_frames, check_right_headed,
                     load_mapping, map_sejong_to_ud)
from .validate import RULES, GuidelineRuleSet, ValidationSummary, validate_sentence

EXIT_OK, EXIT_FINDINGS, EXIT_ERROR = 0, 1, 2


class CliError(Exception):
    """Operational failure reported on stderr with exit status 2."""


@dataclass
class RunConfig:
    subcommand: str
    inputs: list[str] = field(default_factory=lambda: ["-"])
    output: str | None = None
    lexicon: str | None = None
    mapping: str | None = None
    passes: tuple[str, ...] = PASS_NAMES
    fmt: str = "text"
    report: str | None = None
    lax: bool = False
    sejong: bool = False
    jobs: int = 1
    severities: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.jobs < 1:
            raise CliError("--jobs must be at least 1")
        for path in self.inputs:
            if path != "-" and not Path(path).is_file():
                raise CliError(f"{path}: no such file")


# -- reading and parallel mapping ----------------------------------------------

def read_trees(path: str, *, lax: bool = False, sejong: bool = False) -> list[DependencyTree]:
    labels = SEJONG_LABELS if sejong else None
    try:
        if path == "-":
            return list(iter_document(sys.stdin, lax=lax, labels=labels))
        with open(path, encoding="utf-8") as f:
            return list(iter_document(f, lax=lax, labels=labels))
    except ConlluError as exc:
        raise CliError(f"{'<stdin>' if path == '-' else path}:{exc}") from None
    except UnicodeDecodeError as exc:
        raise CliError(f"{path}: not UTF-8 ({exc.reason})") from None


def read_all(config: RunConfig) -> list[DependencyTree]:
    trees = []
    for path in config.inputs:
        trees.extend(read_trees(path, lax=config.lax, sejong=config.sejong))
    return trees


_WORKER_STATE: dict = {}


def _init_worker(state: dict):
    _WORKER_STATE.clear()
    _WORKER_STATE.update(state)


def _call_worker(tree):
    return _WORKER_STATE["fn"](tree, _WORKER_STATE)


def ordered_map(fn: Callable, trees: Sequence[DependencyTree], state: dict, jobs: int,
                *, cap: bool = True) -> list:
    """``fn(tree, state)`` for every tree, results in input order.

    The pool never exceeds the CPU count unless ``cap`` is false; extra
    processes on fewer cores only add pickling cost.
    """
    state = dict(state, fn=fn)
    if cap:
        jobs = min(jobs, os.cpu_count() or 1)
    if jobs == 1 or len(trees) < 2:
        return [fn(t, state) for t in trees]
    chunk = max(1, len(trees) // (jobs * 4))
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(state,)) as pool:
        return list(pool.map(_call_worker, trees, chunksize=chunk))


def _open_output(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline="\n"), True


def _write(path: str | None, text: str):
    out, close = _open_output(path)
    try:
        out.write(text)
    finally:
        if close:
            out.close()


def _lexicon(config: RunConfig) -> Lexicon:
    try:
        return load_lexicon(config.lexicon)
    except (OSError, LexiconError) as exc:
        raise CliError(f"cannot load lexicon {config.lexicon}: {exc}") from None


# -- convert -------------------------------------------------------------------

def _convert_one(tree, state):
    try:
        out, reports = run_pipeline(tree, state["conversion"])
    except (ValueError, PipelineError) as exc:
        return None, str(exc)
    records = [line for r in reports for line in r.records(tree.sentence_id)]
    return serialize_tree(out), records


def _map_one(tree, state):
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # unmapped labels are reported once, below
            return serialize_tree(map_sejong_to_ud(tree, state["mapping"], lax=state["lax"])), []
    except SejongMappingError as exc:
        return None, str(exc)


def _mapping(config: RunConfig):
    try:
        return load_mapping(Path(config.mapping) if config.mapping else None)
    except (OSError, SejongMappingError) as exc:
        raise CliError(f"cannot load mapping {config.mapping}: {exc}") from None


def cmd_convert(config: RunConfig) -> int:
    """Revised-scheme conversion, or Sejong-to-UD relabelling with ``--sejong``."""
    trees = read_all(config)
    if config.sejong:
        mapping = _mapping(config)
        if config.lax:
            unmapped = sorted({t.deprel for tree in trees for t in tree.tokens
                               if t.head and t.deprel not in mapping})
            for label in unmapped:
                print(f"warning: no UD mapping for {label!r}, using dep", file=sys.stderr)
        results = ordered_map(_map_one, trees, {"mapping": mapping, "lax": config.lax}, config.jobs)
        for text, err in results:
            if text is None:
                raise CliError(err)
        _write(config.output, "".join(text for text, _ in results))
        return EXIT_OK
    conversion = ConversionConfig(passes=config.passes, lexicon=_lexicon(config))
    results = ordered_map(_convert_one, trees, {"conversion": conversion}, config.jobs)
    for text, err in results:
        if text is None:
            raise CliError(err)
    _write(config.output, "".join(text for text, _ in results))
    if config.report:
        _write(config.report, "".join(line + "\n" for _, records in results for line in records))
    return EXIT_OK


# -- validate ------------------------------------------------------------------

def _validate_one(tree, state):
    if state["sejong"]:
        return sorted(check_wellformed(tree, root_label=None) + check_right_headed(tree),
                      key=lambda d: d.sort_key())
    return validate_sentence(tree, state["ruleset"], state["lexicon"])


def _emit_diagnostics(diags, fmt: str) -> str:
    if fmt == "records":
        return "".join(d.as_record() + "\n" for d in diags)
    return "".join(d.as_text() + "\n" for d in diags)


def cmd_validate(config: RunConfig) -> int:
    trees = read_all(config)
    try:
        ruleset = GuidelineRuleSet(overrides=config.severities)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    state = {"ruleset": ruleset, "lexicon": _lexicon(config), "sejong": config.sejong}
    per_sentence = ordered_map(_validate_one, trees, state, config.jobs)
    summary = ValidationSummary()
    for diags in per_sentence:
        summary.add(diags)
    text = _emit_diagnostics(summary.diagnostics, config.fmt)
    if config.fmt == "text":
        counts = ", ".join(f"{code}={n}" for code, n in sorted(summary.counts.items())) or "no findings"
        text += f"{summary.sentences} sentences: {counts}\n"
    _write(config.output, text)
    return summary.exit_status


# -- diff ------------------------------------------------------------------------

@dataclass
class DiffSummary:
    tokens: int = 0
    changed: int = 0
    same_head: int = 0
    same_edge: int = 0

    @property
    def uas(self) -> float:
        return 100.0 * self.same_head / self.tokens if self.tokens else 100.0

    @property
    def las(self) -> float:
        return 100.0 * self.same_edge / self.tokens if self.tokens else 100.0


def diff_corpora(a: Sequence[DependencyTree], b: Sequence[DependencyTree]):
    """Edge differences ``(sid, token, headA, headB, relA, relB)`` and a summary.

    Raises CliError naming the first sentence where the corpora diverge.
    """
    if len(a) != len(b):
        first = min(len(a), len(b)) + 1
        raise CliError(f"corpora are misaligned: {len(a)} vs {len(b)} sentences (first divergent: #{first})")
    changes = []
    summary = DiffSummary()
    for k, (ta, tb) in enumerate(zip(a, b), 1):
        if [t.form for t in ta.tokens] != [t.form for t in tb.tokens]:
            raise CliError(f"corpora are misaligned at sentence #{k} ({ta.sentence_id})")
        for x, y in zip(ta.tokens, tb.tokens):
            summary.tokens += 1
            summary.same_head += x.head == y.head
            summary.same_edge += (x.head, x.deprel) == (y.head, y.deprel)
            if (x.head, x.deprel) != (y.head, y.deprel):
                summary.changed += 1
                changes.append((ta.sentence_id, x.index, x.head, y.head, x.deprel, y.deprel))
    return changes, summary


def cmd_diff(config: RunConfig) -> int:
    if len(config.inputs) != 2:
        raise CliError("diff needs exactly two inputs")
    a = read_trees(config.inputs[0], lax=config.lax, sejong=config.sejong)
    b = read_trees(config.inputs[1], lax=config.lax, sejong=config.sejong)
    changes, summary = diff_corpora(a, b)
    lines = []
    for sid, tok, ha, hb, ra, rb in changes:
        if config.fmt == "records":
            lines.append(f"{sid}\t{tok}\t{ha}\t{hb}\t{ra}\t{rb}")
        else:
            lines.append(f"{sid} token {tok}: {ha}->{hb} {ra}->{rb}")
    if config.fmt == "records":
        lines.append(f"summary\tchanged\t{summary.changed}")
        lines.append(f"summary\tuas\t{summary.uas:.2f}")
        lines.append(f"summary\tlas\t{summary.las:.2f}")
    else:
        lines.append(f"changed edges: {summary.changed} of {summary.tokens}")
        lines.append(f"unlabeled agreement: {summary.uas:.2f}%")
        lines.append(f"labeled agreement: {summary.las:.2f}%")
    _write(config.output, "\n".join(lines) + "\n")
    return EXIT_FINDINGS if summary.changed else EXIT_OK


# -- stats -------------------------------------------------------------------------

def corpus_stats(trees: Sequence[DependencyTree]) -> dict:
    deprels: Counter = Counter()
    left = right = 0
    for tree in trees:
        for t in tree.tokens:
            deprels[t.deprel] += 1
            if t.head == 0:
                continue
            if t.head > t.index:
                right += 1
            else:
                left += 1
    edges = left + right
    return {
        "sentences": len(trees),
        "tokens": sum(len(t) for t in trees),
        "deprels": dict(sorted(deprels.items())),
        "leftward": left,
        "rightward": right,
        "rightward_pct": 100.0 * right / edges if edges else 0.0,
    }


def cmd_stats(config: RunConfig) -> int:
    stats = corpus_stats(read_all(config))
    if config.fmt == "records":
        lines = [f"sentences\t{stats['sentences']}", f"tokens\t{stats['tokens']}"]
        lines += [f"deprel\t{rel}\t{n}" for rel, n in stats["deprels"].items()]
        lines += [f"leftward\t{stats['leftward']}", f"rightward\t{stats['rightward']}",
                  f"rightward_pct\t{stats['rightward_pct']:.2f}"]
    else:
        rows = [("sentences", stats["sentences"]), ("tokens", stats["tokens"])]
        rows += [(f"  {rel}", n) for rel, n in stats["deprels"].items()]
        rows += [("leftward edges", stats["leftward"]), ("rightward edges", stats["rightward"]),
                 ("rightward %", f"{stats['rightward_pct']:.2f}")]
        width = max(len(k) for k, _ in rows)
        lines = [f"{k:<{width}}  {v:>8}" for k, v in rows]
    _write(config.output, "\n".join(lines) + "\n")
    return EXIT_OK


# -- frames --------------------------------------------------------------------------

def _audit_one(tree, state):
    return audit_with_frames(tree, state["lexicon"])


def cmd_frames(config: RunConfig) -> int:
    if not config.lexicon:
        raise CliError("frames needs --lexicon")
    lexicon = _lexicon(config)
    trees = read_all(config)
    diags = [d for ds in ordered_map(_audit_one, trees, {"lexicon": lexicon}, config.jobs) for d in ds]
    text = _emit_diagnostics(diags, config.fmt)
    if config.fmt == "text":
        text += f"{len(trees)} sentences: {len(diags)} frame mismatch(es)\n"
    _write(config.output, text)
    return EXIT_FINDINGS if diags else EXIT_OK


COMMANDS = {"convert": cmd_convert, "validate": cmd_validate, "diff": cmd_diff,
            "stats": cmd_stats, "frames": cmd_frames}


# -- argument parsing ------------------------------------------------------------

def _passes(value: str) -> tuple[str, ...]:
    names = tuple(p.strip() for p in value.split(",") if p.strip())
    unknown = [p for p in names if p not in PASS_NAMES]
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown pass(es) {', '.join(unknown)}; choose from {', '.join(PASS_NAMES)}")
    return names


def _severity(value: str) -> tuple[str, str]:
    code, sep, level = value.partition("=")
    if not sep or code not in RULES or level not in ("error", "warning", "info"):
        raise argparse.ArgumentTypeError(f"want CODE=error|warning|info, got {value!r}")
    return code, level


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="korean-ud", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", help="output file (default: standard output)")
    common.add_argument("--lexicon", help="frame file, or directory with frames.txt/inventory.txt")
    common.add_argument("--mapping", help="Sejong-to-UD mapping table")
    common.add_argument("--format", dest="fmt", choices=("text", "records"), default="text")
    common.add_argument("--lax", action="store_true", help="warn about unknown labels instead of failing")
    common.add_argument("--sejong", action="store_true", help="read Sejong-style labels")
    common.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("convert", parents=[common], help="rewrite to the revised scheme")
    p.add_argument("inputs", nargs="*", default=["-"])
    p.add_argument("--passes", type=_passes, default=PASS_NAMES, help="comma-separated pass names")
    p.add_argument("--report", help="write per-pass edge changes here")

    p = sub.add_parser("validate", parents=[common], help="lint against the revised guidelines")
    p.add_argument("inputs", nargs="*", default=["-"])
    p.add_argument("--severity", type=_severity, action="append", default=[],
                   metavar="CODE=LEVEL", help="override a rule's severity")

    p = sub.add_parser("diff", parents=[common], help="compare the edges of two aligned corpora")
    p.add_argument("inputs", nargs=2)

    p = sub.add_parser("stats", parents=[common], help="sentence, token, relation and direction counts")
    p.add_argument("inputs", nargs="*", default=["-"])

    p = sub.add_parser("frames", parents=[common], help="audit argument relations against frames")
    p.add_argument("inputs", nargs="*", default=["-"])
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    try:
        config = RunConfig(
            subcommand=args.subcommand, inputs=list(args.inputs), output=args.output,
            lexicon=args.lexicon, mapping=args.mapping, passes=getattr(args, "passes", PASS_NAMES),
            fmt=args.fmt, report=getattr(args, "report", None), lax=args.lax, sejong=args.sejong,
            jobs=args.jobs, severities=dict(getattr(args, "severity", [])))
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            return COMMANDS[config.subcommand](config)
    except CliError as exc:
        print(f"korean-ud {args.subcommand}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"korean-ud {args.subcommand}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
