"""Command-line front end: ``skilltree gen | oracle | score | analyze``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .analysis import correlation_table, load_accuracies
from .io import MANIFEST_VERSION, atomic_write_text, sha256_file, write_manifest
from .lang import ARITH, STRING, ProgramError, parse_program, render_value, split_digits, trace, evaluate
from .metrics import (
    CurveError,
    ScoringError,
    WAConfig,
    format_report,
    ingest_curve,
    read_predictions,
    score_report,
)
from .taskgen import (
    DOMAINS,
    ExhaustionError,
    GenConfig,
    answer_magnitude,
    augment_primitives,
    build_split,
    get_setting,
    read_jsonl,
    substitutize,
    write_jsonl,
)

logger = logging.getLogger("skilltree")

EXIT_OK = 0
EXIT_PARSE = 3
EXIT_INFEASIBLE = 4
EXIT_IO = 5
EXIT_DATA = 6

OUTPUT_ENV = "SKILLTREE_OUTPUT"


def _domain_list(text: str) -> list[int]:
    try:
        ids = sorted({int(x) for x in text.split(",") if x.strip()})
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad domain list {text!r}") from None
    for d in ids:
        if d not in DOMAINS:
            raise argparse.ArgumentTypeError(f"unknown domain {d}")
    return ids


def _range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected LO,HI") from None
    return lo, hi


def cmd_gen(args) -> int:
    out = Path(args.out or os.environ.get(OUTPUT_ENV, "skilltree_data"))
    cfg = GenConfig(
        train_size=args.train_size,
        valid_size=args.valid_size,
        test_size=args.test_size,
        seed=args.seed,
        number_range=args.number_range,
        answer_cap=args.answer_cap,
        cap_to_train=not args.no_cap,
        digit_split=args.digit_split,
    )
    mode = STRING if args.string_ops else ARITH
    setting = None
    if args.setting:
        try:
            setting = get_setting(args.setting, substitutivity=args.subst)
        except KeyError as e:
            logger.error("%s", e.args[0])
            return EXIT_DATA
        train_domains = sorted(setting.train_domains)
        if not args.no_augment:
            train_domains = sorted(augment_primitives(setting))
        test_domains = [setting.test_domain]
    else:
        train_domains, test_domains = [], args.domains

    def spec_for(d):
        return DOMAINS[d].with_options(mode=mode, scratchpad=args.scratchpad)

    files = []

    def emit(ds, suffix=""):
        for split in ("train", "valid", "test"):
            examples = ds.splits[split]
            if not examples:
                continue
            rel = Path(f"d{ds.domain}") / f"{split}{suffix}.jsonl"
            write_jsonl(out / rel, examples)
            files.append({
                "path": rel.as_posix(),
                "domain": ds.domain,
                "split": split,
                "substituted": bool(suffix),
                "count": len(examples),
                "sha256": sha256_file(out / rel),
            })

    try:
        cap = None
        for d in train_domains:
            ds = build_split(spec_for(d), cfg, shards=args.shards)
            if ds.train and mode == ARITH and not args.no_cap:
                top = max(answer_magnitude(ex.answer) for ex in ds.train)
                cap = top if cap is None else max(cap, top)
            emit(ds)
        for d in test_domains:
            ds = build_split(spec_for(d), cfg, answer_cap=cap, shards=args.shards)
            emit(ds)
            if args.subst:
                emit(substitutize(ds, cfg), suffix=".subst")
    except ExhaustionError as e:
        logger.error("infeasible configuration: %s", e)
        return EXIT_INFEASIBLE
    except OSError as e:
        logger.error("cannot write output: %s", e)
        return EXIT_IO

    run_config = {k: v for k, v in vars(args).items() if k != "func"}
    manifest = {
        "version": MANIFEST_VERSION,
        "tool_version": __version__,
        "run_config": run_config,
        "gen_config": {**asdict(cfg), "sizes": cfg.sizes},
        "mode": mode,
        "seed": cfg.seed,
        "setting": setting.label if setting else None,
        "setting_type": setting.type if setting else None,
        "train_domains": sorted(setting.train_domains) if setting else [],
        "augmented_train_domains": train_domains,
        "added_primitives": sorted(set(train_domains) - set(setting.train_domains)) if setting else [],
        "test_domains": test_domains,
        "test_answer_cap": cap,
        "files": files,
    }
    try:
        write_manifest(out / "manifest.json", manifest)
    except OSError as e:
        logger.error("cannot write manifest: %s", e)
        return EXIT_IO
    print(f"wrote {len(files)} files to {out}")
    return EXIT_OK


def _read_lines(path: str) -> list[str]:
    if path == "-":
        return sys.stdin.read().splitlines()
    with open(path, encoding="utf-8") as f:
        return f.read().splitlines()


def cmd_oracle(args) -> int:
    try:
        lines = _read_lines(args.input)
    except OSError as e:
        logger.error("cannot read %s: %s", args.input, e)
        return EXIT_IO
    mode = None if args.mode == "auto" else args.mode
    results, failed = [], 0
    for lineno, line in enumerate(lines, start=1):
        question = line
        if line.lstrip().startswith("{"):
            try:
                question = json.loads(line)["question"]
            except (json.JSONDecodeError, KeyError, TypeError):
                print(f"line {lineno}: not a question record", file=sys.stderr)
                failed += 1
                continue
        try:
            p = parse_program(question, mode=mode)
        except ProgramError as e:
            print(f"line {lineno}: {e}", file=sys.stderr)
            failed += 1
            continue
        text = trace(p).text if args.scratchpad else render_value(evaluate(p))
        results.append(split_digits(text) if args.digit_split else text)
    body = "".join(r + "\n" for r in results)
    try:
        if args.output:
            atomic_write_text(args.output, body)
        else:
            sys.stdout.write(body)
    except OSError as e:
        logger.error("cannot write output: %s", e)
        return EXIT_IO
    return EXIT_PARSE if failed else EXIT_OK


def cmd_score(args) -> int:
    try:
        gold = read_jsonl(args.gold)
        preds = read_predictions(args.preds)
        curve = ingest_curve(args.curve) if args.curve else None
    except OSError as e:
        logger.error("%s", e)
        return EXIT_IO
    except (ScoringError, CurveError, ValueError, KeyError) as e:
        logger.error("malformed input: %s", e)
        return EXIT_PARSE
    try:
        report = score_report(
            preds,
            gold,
            setting=args.setting,
            scratchpad_mode=args.scratchpad,
            curve=curve,
            wa_cfg=WAConfig(args.alpha, args.n_steps),
            strict=args.strict,
        )
    except ScoringError as e:
        logger.error("%s", e)
        return EXIT_DATA
    print(format_report(report))
    text = json.dumps(report, ensure_ascii=False)
    try:
        if args.json:
            atomic_write_text(args.json, text + "\n")
        else:
            print(text)
    except OSError as e:
        logger.error("cannot write report: %s", e)
        return EXIT_IO
    return EXIT_OK


def cmd_analyze(args) -> int:
    try:
        acc = load_accuracies(args.fixture)
    except OSError as e:
        logger.error("%s", e)
        return EXIT_IO
    except (ValueError, KeyError) as e:
        logger.error("bad fixture: %s", e)
        return EXIT_PARSE
    try:
        table = correlation_table(acc, variables=args.variables, count_query=args.count_query)
    except KeyError as e:
        logger.error("%s", e.args[0])
        return EXIT_DATA
    print(table.to_text())
    if args.csv:
        try:
            atomic_write_text(args.csv, table.to_csv())
        except OSError as e:
            logger.error("cannot write %s: %s", args.csv, e)
            return EXIT_IO
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skilltree", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate datasets")
    target = g.add_mutually_exclusive_group(required=True)
    target.add_argument("--setting", help="train->test setting, e.g. 2,3-5")
    target.add_argument("--domains", type=_domain_list, help="comma-separated domain ids")
    g.add_argument("--train-size", type=int, default=100_000)
    g.add_argument("--valid-size", type=int, default=None, help="defaults to --test-size")
    g.add_argument("--test-size", type=int, default=3_200)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--number-range", type=_range, default=(0, 99), metavar="LO,HI")
    g.add_argument("--answer-cap", type=int, default=None)
    g.add_argument("--no-cap", action="store_true", help="do not cap held-out answers by training answers")
    g.add_argument("--no-augment", action="store_true", help="skip primitive-domain augmentation")
    g.add_argument("--string-ops", action="store_true")
    g.add_argument("--scratchpad", action="store_true")
    g.add_argument("--subst", action="store_true", help="also write renamed valid/test sets for test domains")
    g.add_argument("--digit-split", action="store_true")
    g.add_argument("--shards", type=int, default=1)
    g.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./skilltree_data)")
    g.set_defaults(func=cmd_gen)

    o = sub.add_parser("oracle", help="answer questions with the interpreter")
    o.add_argument("input", help="question file, one per line ('-' for stdin)")
    o.add_argument("--scratchpad", action="store_true")
    o.add_argument("--mode", choices=("auto", ARITH, STRING), default="auto")
    o.add_argument("--digit-split", action="store_true")
    o.add_argument("-o", "--output")
    o.set_defaults(func=cmd_oracle)

    s = sub.add_parser("score", help="score predictions against a gold split")
    s.add_argument("--gold", required=True)
    s.add_argument("--preds", required=True)
    s.add_argument("--scratchpad", action="store_true")
    s.add_argument("--strict", action="store_true")
    s.add_argument("--curve", help="CSV with header step,accuracy")
    s.add_argument("--alpha", type=float, default=1000.0)
    s.add_argument("--n-steps", type=int, default=100)
    s.add_argument("--setting")
    s.add_argument("--json", help="write the JSON report here instead of stdout")
    s.set_defaults(func=cmd_score)

    a = sub.add_parser("analyze", help="complexity/accuracy rank correlations")
    a.add_argument("--fixture", help="setting,model,metric,value CSV (default: bundled T5 results)")
    a.add_argument("--variables", choices=("distinct", "total"), default="distinct")
    a.add_argument("--count-query", action="store_true")
    a.add_argument("--csv")
    a.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
