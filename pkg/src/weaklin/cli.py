"""Command-line interface.

Exit codes: 0 on success, 1 when a program fails a type check, a signature
is unprotected or an emitted program differs from its golden rendering, and
2 on usage errors (bad arguments, unreadable or unparsable files).
File arguments that do not exist on disk are looked up in the bundled
corpus, a program named without extension gets ``.l1``, and an omitted
qualification list defaults to the ``.qlin`` or ``.qglo`` file beside the
program.  So ``weaklin eval fib1 --mode li --param n=5`` works anywhere.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import corpus
from .analysis import DEFAULT_SAMPLES, classify, protects_sig
from .emit import emit_program, normalize_layout
from .errors import AlignmentError, L1Error, MachineError, ParseError, TypeCheckError
from .globalize import GlobSeed, glob_program
from .globaltypes import check_program_global
from .linear import check_program
from .linearize import lin_program, rank
from .machine import DEFAULT_FUEL, MODES, Arr, run
from .parser import optype_from_text, parse_program, parse_quals, print_quals, type_from_text

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ helpers


def _resolve(path: str, ext: str = "") -> Path:
    p = Path(path)
    tries = [p] + ([p.with_name(p.name + ext)] if ext and not p.suffix else [])
    for t in tries:
        if t.is_file():
            return t
        bundled = corpus.corpus_dir() / t.name
        if bundled.is_file():
            return Path(str(bundled))
    raise UsageError(f"no such file: {path}")


def _read(path: str, ext: str = "") -> str:
    return _resolve(path, ext).read_text()


def _program(path: str):
    return parse_program(_read(path, ".l1"))


def _sibling(program: str, quals: Optional[str], ext: str) -> str:
    """``quals`` if given, else the file with extension ``ext`` beside ``program``."""
    if quals:
        return quals
    return str(_resolve(program, ".l1").with_suffix(ext))


def _stem(program: str) -> str:
    return _resolve(program, ".l1").stem


def _quals(path: str, system: Optional[str] = None):
    return parse_quals(_read(path), system)


def _params(items: Sequence[str]) -> Dict[str, int]:
    out: Dict[str, int] = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or not value.lstrip("-").isdigit():
            raise UsageError(f"--param expects NAME=INT, got {item!r}")
        out[name] = int(value)
    return out


def _samples(text: str) -> List[int]:
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--samples expects integers, got {text!r}") from None
    if len(values) < 3 or len(set(values)) != len(values):
        raise UsageError("--samples needs at least three distinct sizes")
    return values


def jsonable(v):
    """Turn readback data into JSON-friendly values."""
    if isinstance(v, Arr):
        return {"array": list(v.items)}
    if isinstance(v, tuple):
        return {"tuple": [jsonable(x) for x in v]}
    if isinstance(v, list):
        return [jsonable(x) for x in v]
    if isinstance(v, Fraction):
        return str(v)
    return v


def show(v) -> str:
    if isinstance(v, Arr):
        return "{" + ", ".join(map(str, v.items)) + "}"
    if isinstance(v, tuple):
        return "<" + ", ".join(show(x) for x in v) + ">"
    if isinstance(v, list):
        return "[" + ", ".join(show(x) for x in v) + "]"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _emit(args, payload: Dict[str, object], lines: Sequence[str]) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, default=str))
    else:
        for line in lines:
            print(line)


def _type_failure(args, exc: TypeCheckError, extra: Optional[Dict[str, object]] = None) -> int:
    payload = {"ok": False, "error": str(exc), "rule": exc.rule, "occ": exc.occ}
    payload.update(extra or {})
    _emit(args, payload, [f"type error: {exc}"])
    return EXIT_FAIL


# ----------------------------------------------------------------- commands


def _check_linear_command(args) -> int:
    prog, quals = _program(args.program), _quals(_sibling(args.program, args.quals, ".qlin"), "linear")
    try:
        res = check_program(prog, quals)
    except TypeCheckError as exc:
        return _type_failure(args, exc)
    _emit(args, {"ok": True, "type": str(res.type)}, [f"ok : {res.type}"])
    return EXIT_OK


def _check_global_command(args) -> int:
    prog, quals = _program(args.program), _quals(_sibling(args.program, args.quals, ".qglo"), "global")
    try:
        res = check_program_global(prog, quals)
    except TypeCheckError as exc:
        return _type_failure(args, exc)
    _emit(args, {"ok": True, "type": str(res.type)}, [f"ok : {res.type}"])
    return EXIT_OK


def _eval_command(args) -> int:
    prog = _program(args.program)
    params = _params(args.param)
    missing = [p for p in prog.params if p not in params]
    if missing:
        raise UsageError(f"missing --param for {', '.join(missing)}")
    mode = args.mode
    globals_ = ()
    if mode != "un":
        want = "linear" if mode == "li" else "global"
        quals = _quals(_sibling(args.program, args.quals, ".qlin" if mode == "li" else ".qglo"))
        if quals.system != want:
            raise UsageError(f"--mode {mode} needs a {want} qualification list")
        try:
            if mode == "li":
                prog = check_program(prog, quals).program
            elif mode == "gl":
                prog = check_program_global(prog, quals).program
            else:
                imp = emit_program(prog, quals)
                prog, globals_ = imp.program, imp.globals
        except TypeCheckError as exc:
            return _type_failure(args, exc)
    try:
        res = run(prog, mode, params, fuel=args.fuel, globals_=globals_, trace=args.trace)
        value = res.readback()
    except MachineError as exc:
        _emit(args, {"ok": False, "error": str(exc), "kind": exc.kind}, [f"machine error: {exc}"])
        return EXIT_FAIL
    rep = res.report
    payload = {
        "ok": True,
        "mode": mode,
        "params": params,
        "result": jsonable(value),
        "cost": rep.cost,
        **rep.as_dict(),
    }
    lines = [f"result: {show(value)}", f"cost: {rep.cost} (alloc {rep.alloc_units}, dealloc {rep.dealloc_units}, steps {rep.steps})"]
    if args.trace:
        payload["trace"] = [t.__dict__ for t in res.trace]
        lines[:0] = [
            f"{i:5d} {t.rule:4s} occ={t.occ} store={t.store_size} +{t.alloc_units} -{t.dealloc_units}"
            for i, t in enumerate(res.trace, 1)
        ]
    _emit(args, payload, lines)
    return EXIT_OK


def _load_constraints(path: Optional[str]):
    """JSON constraints: {"fixed": [occ, ...], "ops": {occ: entry}, "ctx": {name: type}}."""
    if not path:
        return None, None
    try:
        data = json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: {exc}") from None
    cons = {int(k): "fixed" for k in data.get("fixed", [])}
    for k, text in data.get("ops", {}).items():
        cons[int(k)] = optype_from_text(text)
    ctx = {name: type_from_text(text) for name, text in data.get("ctx", {}).items()}
    return cons or None, ctx or None


def _linearize_command(args) -> int:
    prog = _program(args.program)
    cons, ctx_fixed = _load_constraints(args.constraints)
    cap = None if args.cap <= 0 else args.cap
    found = lin_program(prog, cons, cap=cap, count_only=args.count_only, ctx_fixed=ctx_fixed)
    payload: Dict[str, object] = {
        "count": found.count,
        "truncated": found.truncated,
        "rejected": found.rejected,
    }
    lines = [f"linearizations: {found.count}" + (" (truncated)" if found.truncated else "")]
    if not args.count_only:
        ranked = rank(found.candidates, prog, sample_n=args.sample_n)
        payload["candidates"] = [{"cost": c, "quals": print_quals(q)} for c, q in ranked]
        for i, (c, q) in enumerate(ranked[: args.show], 1):
            lines.append(f"-- candidate {i}, cost {c} at n={args.sample_n}")
            lines.append(print_quals(q).rstrip())
    _emit(args, payload, lines)
    return EXIT_OK if found.count else EXIT_FAIL


def _globalize_command(args) -> int:
    prog = _program(args.program)
    env = dict(_quals(args.env, "global").ctx) if args.env else {}
    target = type_from_text(args.target) if args.target else None
    cap = None if args.cap <= 0 else args.cap
    seed = GlobSeed(target=target, env=env, cap=cap) if (env or target) else None
    found = glob_program(prog, seed=seed, cap=cap, mode=args.search)
    payload = {
        "count": len(found.candidates),
        "truncated": found.truncated,
        "rejected": found.rejected,
        "candidates": [print_quals(q) for q in found.candidates],
    }
    lines = [f"globalizations: {len(found.candidates)}" + (" (truncated)" if found.truncated else "")]
    for i, q in enumerate(found.candidates[: args.show], 1):
        lines.append(f"-- candidate {i}")
        lines.append(print_quals(q).rstrip())
    _emit(args, payload, lines)
    return EXIT_OK if found.candidates else EXIT_FAIL


def _protect_command(args) -> int:
    if args.qglo is None:
        # A single argument names a program whose two lists sit beside it.
        args.qglo = _sibling(args.qlin, None, ".qglo")
        args.qlin = _sibling(args.qlin, None, ".qlin")
    qlin, qglo = _quals(args.qlin, "linear"), _quals(args.qglo, "global")
    rep = protects_sig(qlin.entries, qglo.entries)
    failing = [
        {"position": i, "linear": str(qlin.entries[i]), "global": str(qglo.entries[i])}
        for i in rep.failing
    ]
    lines = []
    for i, (a, b) in enumerate(zip(qlin.entries, qglo.entries)):
        mark = "FAIL" if i in rep.failing else "ok"
        lines.append(f"{i:3d} {mark:4s} {a}  |>  {b}")
    if rep.protected:
        lines.append("protected")
    else:
        lines.append(f"not protected: first failing position {rep.first_failing} ({qglo.entries[rep.first_failing].name})")
    payload = {"protected": rep.protected, "first_failing": rep.first_failing, "failing": failing}
    _emit(args, payload, lines)
    return EXIT_OK if rep.protected else EXIT_FAIL


def _classify_command(args) -> int:
    prog = _program(args.program)
    qlin = _quals(_sibling(args.program, args.qlin, ".qlin"), "linear")
    qglo = _quals(_sibling(args.program, args.qglo, ".qglo"), "global")
    list_adjust = args.list_adjust
    if list_adjust is None:
        entry = corpus.expected_table().get(_stem(args.program), {})
        list_adjust = bool(entry.get("list_adjust", False))
    try:
        c = classify(prog, qlin, qglo, _samples(args.samples), list_adjust)
    except TypeCheckError as exc:
        return _type_failure(args, exc)
    report = c.report(_stem(args.program))
    lines = [f"{k}: {v}" for k, v in report.items()]
    _emit(args, report, lines)
    return EXIT_OK


def _emit_command(args) -> int:
    prog, qglo = _program(args.program), _quals(_sibling(args.program, args.qglo, ".qglo"), "global")
    try:
        imp = emit_program(prog, qglo)
    except TypeCheckError as exc:
        return _type_failure(args, exc)
    text = imp.text()
    payload: Dict[str, object] = {"text": text, "globals": sorted(imp.globals)}
    lines = [text.rstrip()]
    code = EXIT_OK
    if args.golden:
        golden_path = _sibling(args.program, None, ".imp") if args.golden == "auto" else args.golden
        same = normalize_layout(text) == normalize_layout(_read(golden_path))
        payload["golden_match"] = same
        lines.append(f"golden {golden_path}: {'match' if same else 'MISMATCH'}")
        code = EXIT_OK if same else EXIT_FAIL
    _emit(args, payload, lines)
    return code


def _corpus_command(args) -> int:
    table = corpus.expected_table()
    payload = {"directory": str(corpus.corpus_dir()), "entries": {n: table.get(n, {}) for n in corpus.NAMES}}
    lines = [f"corpus directory: {corpus.corpus_dir()}"]
    lines += [f"  {n:7s} {table.get(n, {}).get('label', '')}" for n in corpus.NAMES]
    _emit(args, payload, lines)
    return EXIT_OK


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weaklin", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-linear", parents=[common], help="check a program against a linear list")
    p.add_argument("program")
    p.add_argument("quals", nargs="?", help="qualification list (default: beside the program)")
    p.set_defaults(func=_check_linear_command)

    p = sub.add_parser("check-global", parents=[common], help="check a program against a global list")
    p.add_argument("program")
    p.add_argument("quals", nargs="?", help="qualification list (default: beside the program)")
    p.set_defaults(func=_check_global_command)

    p = sub.add_parser("eval", parents=[common], help="run the abstract machine")
    p.add_argument("program")
    p.add_argument("--quals")
    p.add_argument("--mode", choices=MODES, default="un")
    p.add_argument("--param", action="append", default=[], metavar="NAME=INT")
    p.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    p.add_argument("--trace", action="store_true")
    p.set_defaults(func=_eval_command)

    p = sub.add_parser("linearize", parents=[common], help="enumerate linear qualifications")
    p.add_argument("program")
    p.add_argument("--cap", type=int, default=1000, help="candidate cap (0 for none)")
    p.add_argument("--constraints", help="JSON file with fixed occurrences, exact entries and store types")
    p.add_argument("--count-only", action="store_true")
    p.add_argument("--sample-n", type=int, default=6, help="size used to rank candidates by cost")
    p.add_argument("--show", type=int, default=3, help="candidates to print")
    p.set_defaults(func=_linearize_command)

    p = sub.add_parser("globalize", parents=[common], help="enumerate global qualifications")
    p.add_argument("program")
    p.add_argument("--target", help="type expected for the main phrase")
    p.add_argument("--env", help="global qualification file whose ctx lines seed store types")
    p.add_argument("--cap", type=int, default=1000, help="candidate cap (0 for none)")
    p.add_argument("--search", choices=("complete", "forced"), default="complete")
    p.add_argument("--show", type=int, default=3, help="candidates to print")
    p.set_defaults(func=_globalize_command)

    p = sub.add_parser("protect", parents=[common], help="compare a linear and a global list")
    p.add_argument("qlin", help="linear list, or a program whose two lists sit beside it")
    p.add_argument("qglo", nargs="?")
    p.set_defaults(func=_protect_command)

    p = sub.add_parser("classify", parents=[common], help="measure costs and derive category flags")
    p.add_argument("program")
    p.add_argument("qlin", nargs="?")
    p.add_argument("qglo", nargs="?")
    p.add_argument("--samples", default=",".join(map(str, DEFAULT_SAMPLES)))
    p.add_argument(
        "--list-adjust",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="subtract 2n for list-building programs (default: as recorded for corpus entries)",
    )
    p.set_defaults(func=_classify_command)

    p = sub.add_parser("emit", parents=[common], help="print the imperative form")
    p.add_argument("program")
    p.add_argument("qglo", nargs="?")
    p.add_argument("--golden", nargs="?", const="auto", help="compare with a rendering (default: PROGRAM.imp)")
    p.set_defaults(func=_emit_command)

    p = sub.add_parser("corpus", parents=[common], help="list the bundled case studies")
    p.set_defaults(func=_corpus_command)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ParseError, FileNotFoundError) as exc:
        print(f"weaklin: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AlignmentError as exc:
        print(f"weaklin: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except L1Error as exc:
        print(f"weaklin: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
