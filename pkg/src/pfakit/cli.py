"""``pfakit`` command line: build, analyze, search, verify, eval.

Every command prints one JSON report.  Exit codes: 0 success or witness
found, 1 usage or parse error, 2 bounded search exhausted, 3 verification
counterexample.
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__
from .ambiguity import classify
from .diophantine import (
    PolySyntaxError,
    ReductionBundle,
    binary_encode,
    binary_word,
    closed_form_value,
    compile_pfa,
    exponent_tuples,
    exponent_word,
    geq_transform,
    parse_poly,
    separation_report,
    strict_epsilon,
    strict_transform,
    z_power_is_identity,
)
from .freeness import (
    FreenessBundle,
    MmpcpInstance,
    SubsetSumInstance,
    compile_mmpcp_pfa,
    compile_subsetsum_pfa,
    decode_mmpcp_word,
    is_equal_sum_pair,
    is_mmpcp_solution,
    minimal_k,
    subset_of_word,
    subset_value,
)
from .linalg import is_upper_triangular
from .pfa import (
    PFA,
    Evaluator,
    LanguageSpec,
    UnknownLetter,
    accept_prob,
    collision_search,
    cutpoint_search,
    enumerate_words,
    format_word,
    is_commutative_pfa,
    normalize_relation,
    parse_word,
    validate_pfa,
)
from .serialize import DocumentError, dump_obj, instance_from_dict, load_any, qstr, read_json, write_text

EXIT_OK, EXIT_USAGE, EXIT_ABSENT, EXIT_COUNTEREXAMPLE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- report plumbing --------------------------------------------------------


def _report(args, results: dict, extra_input: dict | None = None) -> dict:
    skip = ("func", "timing", "output", "report")
    cmd = {k: v for k, v in sorted(vars(args).items()) if k not in skip and not k.startswith("_")}
    if isinstance(cmd.get("threshold"), Fraction):
        cmd["threshold"] = qstr(cmd["threshold"])
    rep = {"tool": "pfakit", "version": __version__, "command": cmd}
    if extra_input:
        rep["input"] = extra_input
    rep["results"] = results
    return rep


def _emit(args, rep: dict, started: float) -> None:
    if getattr(args, "timing", False):
        rep["timing"] = {"seconds": round(time.perf_counter() - started, 3)}
    text = json.dumps(rep, ensure_ascii=False, indent=2) + "\n"
    out = getattr(args, "report", None)
    if out:
        write_text(out, text)
    else:
        sys.stdout.write(text)


def _load(path: str):
    raw = Path(path).read_bytes() if Path(path).is_file() else None
    if raw is None:
        raise DocumentError(f"cannot read {path}")
    obj = load_any(read_json(path))
    info = {"path": path, "sha256": hashlib.sha256(raw).hexdigest()}
    if isinstance(obj, PFA):
        info.update(kind="pfa", n=obj.n, alphabet=list(obj.alphabet))
    else:
        info.update(kind=_bundle_kind(obj), n=obj.pfa.n, alphabet=list(obj.pfa.alphabet))
        if isinstance(obj, ReductionBundle):
            info.update(transform=obj.transform, source=obj.meta.get("source"))
    return obj, info


def _bundle_kind(b) -> str:
    return "diophantine" if isinstance(b, ReductionBundle) else b.kind


def _parts(obj) -> tuple[PFA, LanguageSpec | None]:
    if isinstance(obj, PFA):
        return obj, None
    return obj.pfa, obj.lang


def _word_info(p: PFA, w, value: Fraction | None = None) -> dict:
    value = accept_prob(p, w) if value is None else value
    return {"word": format_word(w), "letters": list(w), "length": len(w), "value": qstr(value)}


# -- build ------------------------------------------------------------------


def _read_source(args) -> str:
    if args.source is not None and args.input is not None:
        raise UsageError("give either an inline source or --input, not both")
    if args.source is not None:
        return args.source
    if args.input is None:
        raise UsageError("missing instance: pass it inline or with --input PATH")
    try:
        return Path(args.input).read_text(encoding="utf-8")
    except OSError as e:
        raise DocumentError(f"cannot read {args.input}: {e.strerror}") from None


def cmd_build(args) -> int:
    text = _read_source(args)
    if args.kind == "diophantine":
        if args.binary and args.strict:
            raise UsageError("--binary cannot be combined with --strict")
        src = text.strip()
        if src.startswith("{"):
            src = json.loads(src).get("polynomial", "")
        p = parse_poly(src)
        b = compile_pfa(p, fold_x0=not args.binary)
        if args.strict:
            b = strict_transform(b)
        if args.geq:
            b = geq_transform(b)
        if args.binary:
            b = binary_encode(b)
        summary = {
            "bundle": "diophantine",
            "transform": b.transform,
            "lambda": qstr(b.cutpoint),
            "relation": b.relation,
            "dimension": b.pfa.n,
            "alphabet": list(b.pfa.alphabet),
        }
    else:
        if args.strict or args.geq or args.binary:
            raise UsageError("--strict, --geq and --binary apply to diophantine bundles only")
        try:
            inst = instance_from_dict(json.loads(text))
        except json.JSONDecodeError as e:
            raise DocumentError(f"invalid JSON instance: {e}") from None
        if args.kind == "mmpcp":
            if not isinstance(inst, MmpcpInstance):
                raise DocumentError("expected an MMPCP instance {n, h, g}")
            b = compile_mmpcp_pfa(inst)
        else:
            if not isinstance(inst, SubsetSumInstance):
                raise DocumentError("expected a subset-sum instance {S}")
            b = compile_subsetsum_pfa(inst)
        summary = {"bundle": b.kind, "dimension": b.pfa.n, "alphabet": list(b.pfa.alphabet), "scale": qstr(b.scale)}
    doc = dump_obj(b)
    if args.output:
        write_text(args.output, doc)
        summary["output"] = args.output
        args._report = summary
    else:
        sys.stdout.write(doc)
        args._report = None
    return EXIT_OK


# -- analyze ----------------------------------------------------------------


def cmd_analyze(args) -> int:
    obj, info = _load(args.input)
    p, lang = _parts(obj)
    diags = validate_pfa(p)
    rep = classify(p, lang)
    args._info = info
    args._report = {
        "valid": not diags,
        "diagnostics": diags,
        "commutative": is_commutative_pfa(p),
        "upper_triangular": all(is_upper_triangular(p.transitions[a]) for a in p.alphabet),
        "ambiguity": rep.to_dict(),
    }
    return EXIT_OK


# -- search -----------------------------------------------------------------


def cmd_search(args) -> int:
    obj, info = _load(args.input)
    p, lang = _parts(obj)
    lang = lang or LanguageSpec.full(p.alphabet)
    args._info = info
    ev = Evaluator(p)
    bound = f"absent within bound {args.max_len}"
    if args.mode == "cutpoint":
        thr, rel = args.threshold, args.relation
        if isinstance(obj, ReductionBundle):
            thr = obj.cutpoint if thr is None else thr
            rel = obj.relation if rel is None else rel
        if thr is None or rel is None:
            raise UsageError("cutpoint search needs --threshold and --relation")
        thr = Fraction(thr)
        rel = normalize_relation(rel)
        w = cutpoint_search(p, thr, rel, lang, args.max_len, evaluator=ev)
        res = {"mode": "cutpoint", "threshold": qstr(thr), "relation": rel, "max_len": args.max_len}
        if w is None:
            res.update(witness=None, status=bound)
            args._report = res
            return EXIT_ABSENT
        res.update(witness=_word_info(p, w, ev(w)), status="witness found")
        args._report = res
        return EXIT_OK

    pair = collision_search(p, lang, args.max_len, evaluator=ev)
    res = {"mode": "collision", "max_len": args.max_len}
    if pair is None:
        res.update(witness=None, status=bound)
        args._report = res
        return EXIT_ABSENT
    w1, w2 = pair
    res.update(witness=[_word_info(p, w1, ev(w1)), _word_info(p, w2, ev(w2))], status="witness found")
    res["replay"] = _replay_collision(obj, w1, w2)
    args._report = res
    return EXIT_OK


def _replay_collision(obj, w1, w2) -> dict | None:
    if not isinstance(obj, FreenessBundle):
        return None
    if obj.kind == "subsetsum":
        inst = SubsetSumInstance.from_dict(obj.instance)
        s1, s2 = sorted(subset_of_word(w1)), sorted(subset_of_word(w2))
        return {
            "subsets": [[inst.S[i - 1] for i in s1], [inst.S[i - 1] for i in s2]],
            "indices": [s1, s2],
            "equal_sum": is_equal_sum_pair(inst, w1, w2),
        }
    inst = MmpcpInstance.from_dict(obj.instance)
    d1, d2 = decode_mmpcp_word(inst, w1), decode_mmpcp_word(inst, w2)
    return {
        "source": ["".join(f"x{i}" for i in d1[0]), "".join(f"x{i}" for i in d2[0])],
        "choices": ["".join(d1[1]), "".join(d2[1])],
        "images": ["".join(f"x{i}" for i in d1[2]), "".join(f"x{i}" for i in d2[2])],
        "mmpcp_solution": is_mmpcp_solution(inst, w1, w2),
    }


# -- verify -----------------------------------------------------------------


def _values_from_source(b: ReductionBundle, fold_x0: bool):
    """The unmodified base bundle rebuilt from the recorded source polynomial."""
    return compile_pfa(
        parse_poly(b.meta["source"]), fold_x0=fold_x0, commutative=b.meta.get("commutative_embedding", True)
    )


def _verify_diophantine(b: ReductionBundle, args) -> tuple[list, dict]:
    p = b.pfa
    tr = b.transform
    checks: dict = {}
    failures: list = []
    comp = b.meta.get("complemented", False)

    def fail(name, detail):
        failures.append({"check": name, **detail})

    diags = validate_pfa(p)
    checks["stochastic"] = not diags
    for d in diags:
        fail("stochastic", {"detail": d})
    tri = all(is_upper_triangular(p.transitions[a]) for a in p.alphabet) if tr != "binary" else None
    checks["upper_triangular"] = tri
    if tri is False:
        fail("upper_triangular", {"detail": "a transition matrix has a nonzero entry below the diagonal"})

    if tr == "base":
        comm = is_commutative_pfa(p)
        checks["commutative"] = comm
        if not comm:
            fail("commutative", {"detail": "two letter matrices do not commute"})
    else:
        checks["commutative"] = "not applicable to this transform"

    ev = Evaluator(p)
    n_checked = 0
    if tr == "base":
        t = b.meta["t"]
        folded = b.meta["x0_folded"]
        for xs in exponent_tuples(t, args.max_total):
            w = exponent_word(xs) if folded else exponent_word((1, *xs), with_x0=True)
            want = closed_form_value(b, xs if folded else (1, *xs))
            if comp:
                want = 1 - want
            got = ev(w)
            n_checked += 1
            if got != want:
                fail("closed_form", {"exponents": list(xs), "expected": qstr(want), "actual": qstr(got)})
                break
        checks["closed_form"] = {"tuples_checked": n_checked, "max_total": args.max_total}
        if args.seed is not None:
            checks["permutation"] = _permutation_check(b, ev, args, fail)
    elif tr == "strict":
        base = _values_from_source(b, b.meta["x0_folded"])
        bev = Evaluator(base.pfa)
        eps = strict_epsilon(b)
        lead = p.alphabet[0]
        for xs in exponent_tuples(b.meta["t"], args.max_total):
            w = exponent_word(xs) if b.meta["x0_folded"] else exponent_word((1, *xs), with_x0=True)
            want = bev(w) / 2 + (1 - eps) ** len(w) / 2
            if comp:
                want = 1 - want
            got = ev((lead, *w))
            n_checked += 1
            if got != want:
                fail("strict_identity", {"exponents": list(xs), "expected": qstr(want), "actual": qstr(got)})
                break
        checks["strict_identity"] = {"tuples_checked": n_checked, "max_total": args.max_total}
        if not comp:
            checks["separation"] = separation_report(b, args.max_total)
    elif tr == "binary":
        zi = z_power_is_identity(b)
        checks["z_power_identity"] = zi
        if not zi:
            fail("z_power_identity", {"detail": "Z^(t+1) is not the identity"})
        if b.meta.get("source_transform") != "base":
            raise UsageError("binary verification supports bundles encoded from a base bundle")
        direct = _values_from_source(b, False)
        dp = geq_transform(direct).pfa if comp else direct.pfa
        dev = Evaluator(dp)
        t = len(dp.alphabet) - 1
        for length in range(args.max_len + 1):
            for idx in itertools.product(range(t + 1), repeat=length):
                want = dev(tuple(str(i) for i in idx))
                got = ev(binary_word(idx, t))
                n_checked += 1
                if got != want:
                    fail("binary_embedding", {"indices": list(idx), "expected": qstr(want), "actual": qstr(got)})
                    break
            if failures:
                break
        checks["binary_embedding"] = {"sequences_checked": n_checked, "max_len": args.max_len}
    return failures, checks


def _permutation_check(b, ev, args, fail) -> dict:
    rng = random.Random(args.seed)
    letters = list(b.pfa.alphabet)
    trials = 20
    for _ in range(trials):
        w = [rng.choice(letters) for _ in range(rng.randint(0, 6))]
        v = w[:]
        rng.shuffle(v)
        if ev(tuple(w)) != ev(tuple(v)):
            fail("permutation", {"word": format_word(w), "permuted": format_word(v)})
            break
    return {"trials": trials, "seed": args.seed}


def _verify_freeness(b: FreenessBundle, args) -> tuple[list, dict]:
    p = b.pfa
    failures: list = []
    diags = validate_pfa(p)
    checks: dict = {"stochastic": not diags}
    failures += [{"check": "stochastic", "detail": d} for d in diags]
    if b.kind == "subsetsum":
        inst = SubsetSumInstance.from_dict(b.instance)
        n = 0
        for w in enumerate_words(b.lang, len(inst.S)):
            n += 1
            got, want = accept_prob(p, w), subset_value(inst, w)
            if got != want:
                failures.append({"check": "value_law", "word": format_word(w), "expected": qstr(want), "actual": qstr(got)})
                break
        checks["value_law"] = {"words_checked": n}
    else:
        inst = MmpcpInstance.from_dict(b.instance)
        pairs = [((i,), m[i]) for i in inst.sources for m in (inst.h, inst.g)]
        k = minimal_k(pairs, inst.n)
        checks["k"] = {"recorded": b.meta.get("k"), "minimal": k}
        if b.meta.get("k") != k:
            failures.append({"check": "k", "detail": f"recorded k={b.meta.get('k')} but minimal k={k}"})
    return failures, checks


def cmd_verify(args) -> int:
    obj, info = _load(args.input)
    args._info = info
    if isinstance(obj, ReductionBundle):
        failures, checks = _verify_diophantine(obj, args)
    elif isinstance(obj, FreenessBundle):
        failures, checks = _verify_freeness(obj, args)
    else:
        raise UsageError("verify expects a bundle, not a bare PFA")
    args._report = {"passed": not failures, "checks": checks, "counterexamples": failures}
    return EXIT_OK if not failures else EXIT_COUNTEREXAMPLE


# -- eval -------------------------------------------------------------------


def cmd_eval(args) -> int:
    obj, info = _load(args.input)
    p, lang = _parts(obj)
    args._info = info
    w = parse_word(args.word, p.alphabet)
    res = _word_info(p, w)
    if lang is not None:
        res["in_language"] = lang.contains(w)
    args._report = res
    return EXIT_OK


# -- entry point ------------------------------------------------------------


def _fraction(text: str) -> Fraction:
    try:
        if "." in text or "e" in text.lower():
            raise ValueError
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected an exact rational p/q, got {text!r}") from None


def _relation(text: str) -> str:
    try:
        return normalize_relation(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="pfakit", description="Exact PFA constructions, ambiguity analysis and bounded searches.")
    ap.add_argument("--version", action="version", version=f"pfakit {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, output_help="write the report to PATH instead of stdout"):
        sp.add_argument("--timing", action="store_true", help="add wall-clock timing to the report")
        sp.add_argument("--output", "-o", metavar="PATH", help=output_help)

    b = sub.add_parser("build", help="compile an instance into a PFA bundle")
    b.add_argument("kind", choices=["diophantine", "mmpcp", "subsetsum"])
    b.add_argument("source", nargs="?", help="inline polynomial or JSON instance")
    b.add_argument("--input", "-i", metavar="PATH", help="read the instance from PATH")
    b.add_argument("--strict", action="store_true", help="apply the strict cut-point transform")
    b.add_argument("--geq", action="store_true", help="complement final states")
    b.add_argument("--binary", action="store_true", help="encode over the two-letter alphabet {y, z}")
    common(b, "write the bundle to PATH (a summary report goes to stdout)")
    b.set_defaults(func=cmd_build)

    a = sub.add_parser("analyze", help="validity, commutativity and ambiguity of a PFA")
    a.add_argument("--input", "-i", metavar="PATH", required=True)
    common(a)
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("search", help="bounded cut-point or collision search")
    s.add_argument("mode", choices=["cutpoint", "collision"])
    s.add_argument("--input", "-i", metavar="PATH", required=True)
    s.add_argument("--max-len", type=int, default=8, metavar="N")
    s.add_argument("--threshold", type=_fraction, metavar="P/Q")
    s.add_argument("--relation", type=_relation, metavar="{lt,le,gt,ge}")
    common(s)
    s.set_defaults(func=cmd_search)

    v = sub.add_parser("verify", help="check a bundle's value identities and invariants")
    v.add_argument("--input", "-i", metavar="PATH", required=True)
    v.add_argument("--max-total", type=int, default=6, metavar="N", help="exponent-sum bound for identity checks")
    v.add_argument("--max-len", type=int, default=4, metavar="N", help="index-sequence bound for binary bundles")
    v.add_argument("--seed", type=int, default=None, metavar="N", help="also run a seeded letter-permutation check")
    common(v)
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("eval", help="acceptance probability of one word")
    e.add_argument("--input", "-i", metavar="PATH", required=True)
    e.add_argument("--word", "-w", required=True, help='word text such as "1^3" or "a1 b2"')
    common(e)
    e.set_defaults(func=cmd_eval)
    return ap


def main(argv=None) -> int:
    started = time.perf_counter()
    ap = build_parser()
    args = ap.parse_args(argv)
    for flag in ("max_len", "max_total"):
        if getattr(args, flag, 0) is not None and getattr(args, flag, 0) < 0:
            ap.error(f"--{flag.replace('_', '-')} must be >= 0")
    args._info = None
    args._report = None
    try:
        code = args.func(args)
    except (UsageError, DocumentError, PolySyntaxError, UnknownLetter, ValueError) as e:
        msg = str(e)
        if isinstance(e, UnknownLetter):
            msg = str(e.args[0]) if " " in str(e.args[0]) else f"unknown letter {e.args[0]!r}"
        sys.stderr.write(f"pfakit: error: {msg}\n")
        return EXIT_USAGE
    if args._report is not None:
        args.report = args.output if args.command != "build" else None
        res = args._report
        _emit(args, _report(args, res, args._info), started)
    return code


if __name__ == "__main__":
    sys.exit(main())
