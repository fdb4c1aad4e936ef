"""Command-line surface: condition checks, system solving, corpus generation.

Exit codes: 0 pass/found, 1 fail/not-found (exhausted), 2 unknown (bounds),
3 input error, 4 fatal cross-check inconsistency.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .checkers import (
    CheckOutcome,
    check_bergman,
    check_ddrr,
    check_image_meet_preservation,
    check_majority_selecting_all,
    check_pixley_congruences,
    check_pixley_reflexive,
    cross_check,
)
from .clone import find_majority_term
from .config import RunConfig
from .corpus import write_corpus
from .crt import check_pcrt, parse_system, solve_brute, solve_constructive
from .errors import GuardError, MajlabError, ParseError, ValidationError
from .algebra import parse_algebra

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_UNKNOWN = 2
EXIT_INPUT = 3
EXIT_FATAL = 4

CHECK_SUBCOMMANDS = (
    "majority",
    "pixley",
    "bergman",
    "pcrt",
    "ddrr",
    "image-meet",
    "selecting",
    "cross",
)


def _dump(payload: dict, cfg: RunConfig) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if cfg.format == "text":
        text = _render_text(payload)
    sys.stdout.write(text)
    if cfg.out:
        Path(cfg.out).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )


def _render_text(payload: dict) -> str:
    lines = []
    if "conditions" in payload:
        lines.append(f"algebra: {payload.get('algebra', '?')}")
        maj = payload.get("majority")
        if maj is not None:
            status = "found" if maj["found"] else (
                "absent (exhausted)" if maj["exhausted"] else "unknown (budget)"
            )
            lines.append(f"majority term: {status}")
            if maj["found"]:
                lines.append(f"  term: {maj['term']}")
        for cond in payload["conditions"]:
            lines.append(f"{cond['id']}: {cond['verdict']}")
            if cond["witness"] is not None:
                lines.append(f"  witness: {json.dumps(cond['witness'], sort_keys=True)}")
        consistency = payload.get("consistency")
        if consistency:
            lines.append(f"fatal: {consistency['fatal']}")
            for note in consistency["notes"]:
                lines.append(f"note: {note}")
    else:
        lines.append(json.dumps(payload, sort_keys=True))
    return "\n".join(lines) + "\n"


def _outcome_exit(outcomes: list[CheckOutcome]) -> int:
    verdicts = [o.verdict for o in outcomes]
    if "fail" in verdicts:
        return EXIT_FAIL
    if "unknown" in verdicts:
        return EXIT_UNKNOWN
    return EXIT_PASS


def _load_algebra(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return parse_algebra(text)


def cmd_check(args, cfg: RunConfig) -> int:
    algebra = _load_algebra(args.algebra)
    sub = args.condition
    if sub == "majority":
        report = find_majority_term(
            algebra, cfg.clone_coord_budget, cfg.clone_size_budget
        )
        _dump(dict(report.to_json_dict(), algebra=algebra.name), cfg)
        if report.found is not None:
            return EXIT_PASS
        return EXIT_FAIL if report.exhausted else EXIT_UNKNOWN
    if sub == "cross":
        matrix = cross_check(algebra, cfg)
        _dump(matrix.to_json_dict(), cfg)
        if matrix.fatal:
            return EXIT_FATAL
        code = _outcome_exit(list(matrix.outcomes))
        if code == EXIT_PASS and matrix.majority.found is None:
            return EXIT_UNKNOWN if not matrix.majority.exhausted else EXIT_FAIL
        return code
    if sub == "pixley":
        out_ii, out_iii = check_pixley_reflexive(algebra, None, cfg)
        out_cong = check_pixley_congruences(algebra, None, cfg)
        outcomes = [out_cong, out_ii, out_iii]
        _dump(
            {
                "algebra": algebra.name,
                "conditions": [o.to_json_dict() for o in outcomes],
            },
            cfg,
        )
        return _outcome_exit(outcomes)
    runner = {
        "bergman": lambda: check_bergman(algebra, None, cfg),
        "pcrt": lambda: check_pcrt(algebra, None, cfg),
        "ddrr": lambda: check_ddrr(algebra, cfg),
        "image-meet": lambda: check_image_meet_preservation(algebra, None, cfg),
        "selecting": lambda: check_majority_selecting_all(algebra, None, cfg),
    }[sub]
    outcome = runner()
    _dump(
        {"algebra": algebra.name, "conditions": [outcome.to_json_dict()]}, cfg
    )
    return _outcome_exit([outcome])


def cmd_solve(args, cfg: RunConfig) -> int:
    algebra = _load_algebra(args.algebra)
    try:
        text = Path(args.system).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {args.system}: {exc}") from exc
    system = parse_system(text, algebra)
    if args.constructive:
        report = find_majority_term(
            algebra, cfg.clone_coord_budget, cfg.clone_size_budget
        )
        if report.found is None:
            reason = (
                "no majority term (clone exhausted)"
                if report.exhausted
                else "majority term unknown (clone budget exceeded)"
            )
            _dump({"error": reason, "algebra": algebra.name}, cfg)
            return EXIT_UNKNOWN
        brute = solve_brute(system)
        if not brute.pairwise_solvable:
            _dump(dict(brute.to_json_dict(), algebra=algebra.name), cfg)
            return EXIT_FAIL
        result = solve_constructive(system, report.found)
    else:
        result = solve_brute(system)
    _dump(dict(result.to_json_dict(), algebra=algebra.name), cfg)
    return EXIT_PASS if result.solution is not None else EXIT_FAIL


def cmd_gen_corpus(args, cfg: RunConfig) -> int:
    paths = write_corpus(args.out_dir)
    _dump({"written": [str(p) for p in paths]}, cfg)
    return EXIT_PASS


def _parse_powers(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise ParseError(f"bad --powers value {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="majlab",
        description="Finite universal-algebra workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_bounds(p):
        p.add_argument("--powers", default="1,2", help="comma-separated powers")
        p.add_argument("--factors", type=int, default=3, help="product arity")
        p.add_argument("--gen-cap", type=int, default=3, help="subpower generator cap")
        p.add_argument("--clone-coord-budget", type=int, default=64)
        p.add_argument("--clone-size-budget", type=int, default=100_000)
        p.add_argument("--cong-size-guard", type=int, default=12)
        p.add_argument("--sys-len", type=int, default=3)
        p.add_argument("--format", choices=("json", "text"), default="json")
        p.add_argument("--out", default=None, help="also write the report here")

    check_p = sub.add_parser("check", help="run a condition check")
    check_p.add_argument("condition", choices=CHECK_SUBCOMMANDS)
    check_p.add_argument("algebra", help="algebra JSON file")
    add_bounds(check_p)

    solve_p = sub.add_parser("solve", help="solve a congruence system")
    solve_p.add_argument("algebra", help="algebra JSON file")
    solve_p.add_argument("system", help="system JSON file")
    solve_p.add_argument("--constructive", action="store_true")
    add_bounds(solve_p)

    gen_p = sub.add_parser("gen-corpus", help="write the built-in corpus")
    gen_p.add_argument("out_dir")
    add_bounds(gen_p)
    return parser


def _config_from_args(args) -> RunConfig:
    threads = 1
    env = os.environ.get("MAJLAB_THREADS")
    if env:
        try:
            threads = max(1, int(env))
        except ValueError:
            raise ParseError(f"bad MAJLAB_THREADS value {env!r}")
    return RunConfig(
        powers=_parse_powers(args.powers),
        n_factors=args.factors,
        gen_cap=args.gen_cap,
        clone_coord_budget=args.clone_coord_budget,
        clone_size_budget=args.clone_size_budget,
        cong_size_guard=args.cong_size_guard,
        sys_len=args.sys_len,
        threads=threads,
        out=args.out,
        format=args.format,
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "check":
            return cmd_check(args, cfg)
        if args.command == "solve":
            return cmd_solve(args, cfg)
        if args.command == "gen-corpus":
            return cmd_gen_corpus(args, cfg)
        raise ParseError(f"unknown command {args.command!r}")
    except GuardError as exc:
        sys.stderr.write(f"bounds exceeded: {exc}\n")
        return EXIT_UNKNOWN
    except (ParseError, ValidationError, MajlabError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
