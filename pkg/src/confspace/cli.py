"""Command-line front end: ``confspace run`` and ``confspace list-suites``.

Exit codes: 0 when every asserted check passes, 1 when one fails (named on
stderr), 2 for unreadable or invalid experiment files.
"""

from __future__ import annotations

import argparse
import csv
import difflib
import hashlib
import json
import math
import sys
from json.decoder import scanstring
from pathlib import Path

from pydantic import ValidationError

from . import __version__
from .suites import (
    PARAMS, SCHEMA_TAG, SUITE_DOCS, SUITES, ExperimentSpec, SpecError, compile_spec,
    run_suite, spec_json_schema,
)

_WS = " \t\n\r"


# --------------------------------------------------------------------------
# JSON path -> line locator
# --------------------------------------------------------------------------

def locate_paths(text: str) -> dict[tuple, int]:
    """Character offset of every key and array item in a valid JSON document."""
    dec = json.JSONDecoder()
    out: dict[tuple, int] = {}

    def skip(i: int) -> int:
        while i < len(text) and text[i] in _WS:
            i += 1
        return i

    def value(i: int, path: tuple) -> int:
        i = skip(i)
        out.setdefault(path, i)
        c = text[i]
        if c == "{":
            i = skip(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                i = skip(i)
                start = i
                key, i = scanstring(text, i + 1)
                out[path + (key,)] = start
                i = skip(i) + 1  # ':'
                i = value(i, path + (key,))
                out[path + (key,)] = start
                i = skip(i)
                if text[i] == "}":
                    return i + 1
                i += 1  # ','
        if c == "[":
            i = skip(i + 1)
            if text[i] == "]":
                return i + 1
            k = 0
            while True:
                i = value(i, path + (k,))
                i = skip(i)
                k += 1
                if text[i] == "]":
                    return i + 1
                i += 1
        _, end = dec.raw_decode(text, i)
        return end

    value(0, ())
    return out


def line_of(text: str, offsets: dict[tuple, int], path: tuple) -> int:
    """1-based line of the deepest located prefix of ``path``."""
    path = tuple(path)
    while path and path not in offsets:
        path = path[:-1]
    pos = offsets.get(path, 0)
    return text.count("\n", 0, pos) + 1


def _fmt_path(path) -> str:
    return ".".join(str(p) for p in path) or "<root>"


# --------------------------------------------------------------------------
# loading
# --------------------------------------------------------------------------

class SchemaFailure(Exception):
    def __init__(self, lines: list[str]):
        super().__init__("\n".join(lines))
        self.lines = lines


def load_spec(path: Path):
    """Read, parse, validate and compile an experiment file.

    Returns ``(raw bytes, spec, experiment)``; raises :class:`SchemaFailure`
    carrying ``file:line: message`` diagnostics.
    """
    try:
        raw = path.read_bytes()
        text = raw.decode("utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise SchemaFailure([f"{path}: cannot read spec: {exc}"]) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaFailure([f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}"]) \
            from exc
    offsets = locate_paths(text)
    if not isinstance(data, dict):
        raise SchemaFailure([f"{path}:1: the spec must be a JSON object"])
    try:
        spec = ExperimentSpec.model_validate(data)
    except ValidationError as exc:
        lines = _diagnostics(path, text, offsets, exc.errors(), ())
        params = data.get("params")
        if data.get("suite") in PARAMS and isinstance(params, dict):
            try:
                PARAMS[data["suite"]].model_validate(params)
            except ValidationError as pexc:
                lines += _diagnostics(path, text, offsets, pexc.errors(), ("params",))
        raise SchemaFailure(lines) from exc
    try:
        exp = compile_spec(spec)
    except ValidationError as exc:
        raise SchemaFailure(_diagnostics(path, text, offsets, exc.errors(), ("params",))) \
            from exc
    except SpecError as exc:
        ln = line_of(text, offsets, exc.path)
        raise SchemaFailure([f"{path}:{ln}: {_fmt_path(exc.path)}: {exc.message}"]) from exc
    return raw, spec, exp


def _diagnostics(path, text, offsets, errors, prefix: tuple) -> list[str]:
    out = []
    for e in errors:
        loc = prefix + tuple(e["loc"])
        ln = line_of(text, offsets, loc)
        out.append(f"{path}:{ln}: {_fmt_path(loc)}: {e['msg']}")
    return out


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------

def _clean(x):
    """JSON-safe, deterministic rendering of report values."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if hasattr(x, "item") and not isinstance(x, (str, bytes)):
        x = x.item()  # numpy scalars
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return str(x)


def _cell(x) -> str:
    x = _clean(x)
    return repr(x) if isinstance(x, float) else str(x)


def build_report(raw: bytes, spec: ExperimentSpec, result, shards: int) -> dict:
    return _clean({
        "schema": SCHEMA_TAG,
        "version": __version__,
        "spec_sha256": hashlib.sha256(raw).hexdigest(),
        "suite": spec.suite,
        "seed": spec.seed,
        "shards": shards,
        "passed": result.passed,
        "checks": [c.to_json() for c in result.checks],
        "verdicts": result.verdicts,
        "tables": sorted(f"{name}.csv" for name in result.tables),
    })


def write_outputs(out: Path, report: dict, tables: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for name, (header, rows) in sorted(tables.items()):
        with open(out / f"{name}.csv", "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_cell(v) for v in r])


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_run(args) -> int:
    if args.shards < 1:
        print("error: --shards must be >= 1", file=sys.stderr)
        return 2
    try:
        raw, spec, exp = load_spec(Path(args.spec))
    except SchemaFailure as exc:
        for line in exc.lines:
            print(line, file=sys.stderr)
        return 2
    if args.seed_override is not None:
        if args.seed_override < 0:
            print("error: --seed-override must be >= 0", file=sys.stderr)
            return 2
        spec = spec.model_copy(update={"seed": args.seed_override})
        exp.spec = spec
    result = run_suite(exp, args.shards)
    report = build_report(raw, spec, result, args.shards)
    write_outputs(Path(args.out), report, result.tables)
    for c in result.checks:
        tag = "PASS" if c.passed else ("SOFT-FAIL" if c.soft else "FAIL")
        print(f"{tag:9s} {c.name}")
    if result.failures:
        for c in result.failures:
            print(f"failed check: {c.name} (value {_cell(c.value)}, target {_cell(c.target)})",
                  file=sys.stderr)
        return 1
    return 0


def cmd_list_suites(args) -> int:
    if args.name is not None and args.name not in SUITES:
        hint = difflib.get_close_matches(args.name, SUITES, n=1)
        msg = f"unknown suite {args.name!r}"
        if hint:
            msg += f"; did you mean {hint[0]!r}?"
        print(msg, file=sys.stderr)
        return 2
    names = SUITES if args.name is None else (args.name,)
    if args.json:
        doc = spec_json_schema()
        if args.name is not None:
            doc["suites"] = {args.name: doc["suites"][args.name]}
        json.dump(doc, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
        return 0
    for name in names:
        print(f"{name}: {SUITE_DOCS[name]}")
        for fname, f in PARAMS[name].model_fields.items():
            default = "required" if f.is_required() else f"default {f.get_default(call_default_factory=True)!r}"
            desc = f" - {f.description}" if f.description else ""
            print(f"    params.{fname} ({default}){desc}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="confspace", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"confspace {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the suite described by an experiment file")
    run.add_argument("spec", help="experiment JSON file")
    run.add_argument("--out", required=True, help="output directory for report.json and CSVs")
    run.add_argument("--shards", type=int, default=1, help="independent RNG shards")
    run.add_argument("--seed-override", type=int, default=None, help="replace the spec seed")
    run.set_defaults(func=cmd_run)
    ls = sub.add_parser("list-suites", help="describe the suites and their parameters")
    ls.add_argument("name", nargs="?", help="a single suite")
    ls.add_argument("--json", action="store_true", help="emit the schema as JSON")
    ls.set_defaults(func=cmd_list_suites)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
