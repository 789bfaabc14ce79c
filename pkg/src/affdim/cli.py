"""Command-line front end.

Every subcommand reads one IFS document (a path or a bundled name such as
``sierpinski``), prints a short human-readable summary and, with
``--json-out``, writes a structured report. Exit codes: 0 success,
2 invalid input, 3 budget exceeded, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .document import IFSDocument, bundled_names, load_document
from .errors import (
    BudgetExceeded,
    InadmissibleForm,
    NoSignChange,
    NotContracting,
    SingularMatrix,
    ValidationError,
)
from .gibbs import defect_witness_search, det_equilibrium_weights, det_potential_pressure, gibbs_audit
from .linalg import WeightVector, is_conformal
from .measures import BernoulliMeasure, gamma_sup
from .pressure import affinity_dimension, pressure_bracket
from .render import render_attractor, render_measure, self_cover_stats, write_pgm, write_ppm
from .structure import hypothesis_report
from .words import DEFAULT_BUDGET, auto_depth, format_word

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BUDGET = 3
EXIT_NUMERIC = 4


@dataclass
class RunReport:
    command: str
    document: str
    inputs_digest: str
    settings: dict
    results: dict = field(default_factory=dict)
    wall_time: float = 0.0
    version: str = __version__


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _dimension(dv) -> dict:
    return {
        "value": dv.value,
        "bracket": list(dv.bracket),
        "enclosure": list(dv.enclosure) if dv.enclosure else None,
        "depth": dv.depth,
        "tol": dv.tol,
    }


def _depth(args, doc: IFSDocument) -> int:
    return args.depth if args.depth is not None else auto_depth(doc.N)


def _settings(args, doc) -> dict:
    return {
        "depth": _depth(args, doc),
        "tol": args.tol,
        "seed": args.seed,
        "threads": args.threads,
        "budget": args.budget,
    }


def _fmt_interval(iv) -> str:
    return f"[{iv[0]:.6f}, {iv[1]:.6f}]"


# --------------------------------------------------------------------------
# subcommands


def cmd_dimaff(args, doc, out) -> dict:
    n = _depth(args, doc)
    dv = affinity_dimension(doc.linear, n, args.tol, budget=args.budget, threads=args.threads)
    out(f"dimaff = {dv.value:.6f}  bracket {_fmt_interval(dv.bracket)}  "
        f"enclosure {_fmt_interval(dv.enclosure)}  (depth {n}, tol {args.tol:g})")
    return {"dimaff": _dimension(dv)}


def _hypotheses(rep) -> dict:
    return {
        "hypotheses": rep.hypotheses,
        "applies": rep.applies,
        "contraction": {"certified": rep.contraction.certified, "length": rep.contraction.length,
                        "rate": rep.contraction.rate, "rates": rep.contraction.rates},
        "det_sum": rep.det_sum,
        "irreducibility": {"status": rep.irreducibility.status, "span_trace": rep.irreducibility.span_trace,
                           "witness": rep.irreducibility.witness, "depth": rep.irreducibility.depth},
        "similitude": {"status": rep.similitude.status, "inner_product": rep.similitude.inner_product,
                       "counterexample_word": rep.similitude.counterexample_word,
                       "method": rep.similitude.method, "depth": rep.similitude.depth},
        "dimaff": _dimension(rep.dimaff) if rep.dimaff else None,
        "notes": rep.notes,
    }


def _print_hypotheses(rep, out):
    labels = {
        "contracting": "(i)   contraction certificate",
        "dimaff_strictly_between": "(ii)  0 < dimaff < d",
        "irreducible": "(iii) irreducible",
        "not_similitude": "(iv)  no invariant inner product",
    }
    detail = {
        "irreducible": rep.irreducibility.status,
        "not_similitude": rep.similitude.status,
    }
    for key, text in labels.items():
        mark = "yes" if rep.hypotheses[key] else "no"
        extra = f" ({detail[key]})" if key in detail else ""
        out(f"{text:34s} {mark}{extra}")
    if rep.similitude.counterexample_word is not None:
        out(f"      witness word {format_word(rep.similitude.counterexample_word)}")
    out("gap predicted" if rep.applies else "gap not predicted: a hypothesis fails or is undecided")
    for note in rep.notes:
        out(f"note: {note}")


def cmd_check(args, doc, out) -> dict:
    rep = hypothesis_report(doc.linear, _depth(args, doc), args.scan_depth,
                            budget=args.budget, threads=args.threads)
    _print_hypotheses(rep, out)
    return _hypotheses(rep)


def cmd_gap(args, doc, out) -> dict:
    n = _depth(args, doc)
    rep = hypothesis_report(doc.linear, n, args.scan_depth, budget=args.budget, threads=args.threads)
    _print_hypotheses(rep, out)
    if rep.dimaff is None:
        raise NotContracting("cannot compute the gap without a contraction certificate")
    g = gamma_sup(doc.linear, n, args.tol, seed=args.seed, threads=args.threads,
                  budget=args.budget, assume_contracting=True,
                  dimaff=affinity_dimension(doc.linear, n, args.tol, assume_contracting=True,
                                            budget=args.budget, threads=args.threads))
    out(f"dimaff = {g.dimaff.value:.6f}  enclosure {_fmt_interval(g.dimaff.enclosure)}")
    out(f"gamma  = {g.gamma:.6f}  maximizer ({', '.join(f'{x:.4f}' for x in g.maximizer.p)})")
    out(f"gap    = {g.gap:.6f}  (same depth {n})")
    out(f"dimaff_lower - gamma_upper = {g.dimaff_lower - g.gamma_upper:.6f}: "
        + ("gap detected" if g.gap_detected else "not significant"))
    if not rep.applies:
        out("caveat: hypotheses of the gap theorem are not all certified; the figure is descriptive only")
    return {
        "check": _hypotheses(rep),
        "dimaff": _dimension(g.dimaff),
        "gamma": g.gamma,
        "maximizer": list(g.maximizer.p),
        "gap": g.gap,
        "dimaff_lower": g.dimaff_lower,
        "gamma_upper": g.gamma_upper,
        "gap_detected": g.gap_detected,
        "depth": g.depth,
        "tol": args.tol,
        "diagnostics": g.diagnostics,
    }


def _measure(args, doc, s, d) -> BernoulliMeasure:
    choice = args.measure
    if choice is None:
        return doc.measure() or BernoulliMeasure.uniform(doc.N)
    if choice == "uniform":
        return BernoulliMeasure.uniform(doc.N)
    if choice == "hutchinson":
        if not all(is_conformal(A) for A in doc.linear):
            raise ValidationError("Hutchinson weights need conformal maps")
        r = np.array([np.linalg.svd(A, compute_uv=False)[0] for A in doc.linear])
        return BernoulliMeasure.from_weights(r**s)
    if choice == "det":
        return det_equilibrium_weights(doc.linear, WeightVector.canonical(min(s, d), d))
    try:
        probs = [float(x) for x in choice.split(",")]
    except ValueError:
        raise ValidationError(f"bad --measure {choice!r}") from None
    if len(probs) != doc.N:
        raise ValidationError(f"--measure has {len(probs)} entries for {doc.N} maps")
    return BernoulliMeasure(tuple(probs))


def cmd_audit(args, doc, out) -> dict:
    n = _depth(args, doc)
    d = doc.dim
    G = doc.linear
    dv = None
    if args.s is None:
        dv = affinity_dimension(G, n, args.tol, budget=args.budget, threads=args.threads)
        s = dv.value
    else:
        s = args.s
    w = WeightVector.canonical(s, d)
    br = pressure_bracket(G, w, n, budget=args.budget, threads=args.threads)
    mu = _measure(args, doc, s, d)
    ga = gibbs_audit(G, w, mu, br.upper, n, budget=args.budget, threads=args.threads)
    wit = defect_witness_search(G, w, args.defect_depth)
    pdet = det_potential_pressure(G, w)
    out(f"s = {s:.6f}  pressure bracket {_fmt_interval((br.lower, br.upper))} at depth {n}")
    out(f"Gibbs ratios at depth {n}: C_min = {ga.C_min:.6g}, C_max = {ga.C_max:.6g}, "
        f"C_max/C_min = {ga.spread:.6g} (skipped {ga.skipped})")
    if wit is None:
        out(f"no multiplicativity defect above threshold up to length {args.defect_depth}")
    else:
        out(f"defect witness: i = {format_word(wit.i)}, j = {format_word(wit.j)}, defect = {wit.defect:.6g}")
    rel = "within" if br.contains(pdet) else ("below" if pdet < br.lower else "above")
    out(f"determinant pressure {pdet:.6f}: {rel} the bracket")
    return {
        "s": s,
        "dimaff": _dimension(dv) if dv else None,
        "bracket": {"lower": br.lower, "upper": br.upper, "depth": n},
        "measure": list(mu.p),
        "gibbs": {"C_min": ga.C_min, "C_max": ga.C_max, "ratio": ga.spread, "depth": n,
                  "skipped": ga.skipped, "argmin": ga.argmin, "argmax": ga.argmax},
        "defect": None if wit is None else {"i": wit.i, "j": wit.j, "defect": wit.defect,
                                            "depth": args.defect_depth},
        "det_pressure": pdet,
        "det_relation": rel,
    }


def cmd_render(args, doc, out) -> dict:
    ifs = doc.ifs()
    axes = tuple(int(a) for a in args.axes.split(","))
    if args.mode == "attractor":
        img = render_attractor(ifs, args.render_depth, args.size, axes=axes, budget=args.budget)
    else:
        d = doc.dim
        mu = _measure(args, doc, min(d, 1.0), d)
        img = render_measure(ifs, mu, args.samples, args.size, seed=args.seed,
                             threads=args.threads, axes=axes)
    path = Path(args.out)
    if path.suffix.lower() == ".ppm":
        write_ppm(img, path)
    else:
        write_pgm(img, path)
    res = {"path": str(path), "mode": args.mode, "size": args.size,
           "hits": int(img.hits.sum()), "meta": img.meta}
    if ifs.dim == 2:
        res["self_cover"] = self_cover_stats(ifs, img)
    out(f"wrote {path} ({args.size}x{args.size}, {res['hits']} lit pixels)")
    return res


COMMANDS = {
    "dimaff": cmd_dimaff,
    "gap": cmd_gap,
    "check": cmd_check,
    "audit": cmd_audit,
    "render": cmd_render,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="affdim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file", help=f"IFS document path or bundled name ({', '.join(bundled_names())})")
    common.add_argument("--depth", type=int, default=None, help="word length n (default: 12, reduced for large N)")
    common.add_argument("--tol", type=float, default=1e-3, help="bisection tolerance on s")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="maximum words per level")
    common.add_argument("--json-out", type=Path, default=None, help="write the structured report here")
    common.add_argument("--quiet", action="store_true")

    sub.add_parser("dimaff", parents=[common], help="affinity dimension")
    for name, text in (("gap", "dimension gap against Bernoulli measures"), ("check", "hypotheses of the gap theorem")):
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.add_argument("--scan-depth", type=int, default=6, help="word length L for the structural scans")
    sp = sub.add_parser("audit", parents=[common], help="Gibbs audit, defect witnesses, determinant pressure")
    sp.add_argument("--s", type=float, default=None, help="exponent (default: the affinity dimension)")
    sp.add_argument("--measure", default=None, help="uniform | hutchinson | det | comma-separated probabilities")
    sp.add_argument("--defect-depth", type=int, default=3)
    sp = sub.add_parser("render", parents=[common], help="draw the attractor or a self-affine measure")
    sp.add_argument("--mode", choices=("attractor", "measure"), default="attractor")
    sp.add_argument("--out", required=True, help="output .pgm or .ppm")
    sp.add_argument("--size", type=int, default=512)
    sp.add_argument("--render-depth", type=int, default=10, help="word length for attractor mode")
    sp.add_argument("--samples", type=int, default=1_000_000, help="chaos-game points for measure mode")
    sp.add_argument("--axes", default="0,1", help="coordinate plane for d > 2")
    sp.add_argument("--measure", default=None, help="uniform | det | comma-separated probabilities")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = (lambda s: None) if args.quiet else print
    t0 = time.perf_counter()
    try:
        doc = load_document(args.file)
        if args.depth is not None and args.depth < 1:
            raise ValidationError("--depth must be >= 1")
        if args.tol <= 0:
            raise ValidationError("--tol must be positive")
        if args.threads < 1:
            raise ValidationError("--threads must be >= 1")
        report = RunReport(args.command, doc.name or str(args.file), doc.digest(), _settings(args, doc))
        report.results = COMMANDS[args.command](args, doc, out)
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (NoSignChange, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValidationError, SingularMatrix, NotContracting, InadmissibleForm, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    report.wall_time = time.perf_counter() - t0
    if args.json_out is not None:
        args.json_out.write_text(json.dumps(_jsonable(asdict(report)), indent=2) + "\n")
    out(f"({report.wall_time:.2f} s)")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
