"""Command line front end: ``aperiodic-spectra <command> [options]``.

Every option can also come from a JSON file given with ``--config``; command-line
flags win over the file. Exit codes: 0 success, 1 computation failure (no
convergence, unresolved refinement), 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io as _stdio
import json
import os
import sys
from pathlib import Path
from typing import Any, Callable

import numba
import numpy as np

from . import acceptance, diffraction, eigenvalues, gaplabel
from .errors import ComputationError, ConfigurationError
from .io import clean, dumps, fmt, parse_list, parse_mapping
from .pointset import from_substitution, weights as point_weights
from .presets import Preset, get_preset
from .spectra import bands, luck
from .spectra.tightbinding import TightBindingModel
from .substitution import (Substitution, iterate, patch_frequency, pf_data, is_pisot,
                           substitution_matrix, two_sided_word, word_symbols)

THREADS_ENV = "APERIODIC_SPECTRA_THREADS"
GLOBAL_OPTIONS = ("config", "out", "format", "threads", "seed")

# command -> option -> default (None: required or optional without default)
DEFAULTS: dict[str, dict[str, Any]] = {
    "seq": {"preset": None, "substitution": None, "order": 0, "two_sided": False, "sep": ""},
    "freq": {"preset": None, "substitution": None, "pattern": None, "tol": 1e-8, "max_order": 40},
    "diffract": {"preset": None, "substitution": None, "order": None, "weights": None, "k": None,
                 "windows": None, "window_exponents": "7:15", "theta": diffraction.BRAGG_THRESHOLD,
                 "stability": diffraction.STABILITY_TOL, "center": 0.0},
    "eig": {"preset": None, "substitution": None, "order": None, "k": None, "radii": None,
            "tol": eigenvalues.DEFAULT_TOL, "max_pairs": 256},
    "spectrum": {"preset": None, "substitution": None, "potential": None, "coupling": 1.0,
                 "orders": None, "order": None, "method": "aperiodic", "tol": None, "window": None,
                 "min_width": None, "edge_tol": 1e-3, "module": None, "coeff_bound": None},
    "beta": {"k": None, "n": 2000},
    "label": {"x": None, "module": None, "index": None, "bragg": None, "tol": 1e-9,
              "coeff_bound": gaplabel.RELATION_BOUND},
    "verify": {"preset": None, "strict": False},
}


# -- parser -----------------------------------------------------------------------

def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    g = parser.add_argument_group("global options")
    g.add_argument("--config", metavar="PATH", default=d, help="JSON file with option values")
    g.add_argument("--out", metavar="PATH", default=d, help="output file (default: stdout)")
    g.add_argument("--format", choices=("csv", "json"), default=d, help="output format")
    g.add_argument("--threads", type=int, metavar="N", default=d,
                   help=f"worker threads (fallback: ${THREADS_ENV})")
    g.add_argument("--seed", type=int, metavar="N", default=d, help="seed for randomized sampling")


def _source_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", help="thue-morse, fibonacci, period-doubling or periodic:p")
    p.add_argument("--substitution", metavar="PATH", help="substitution JSON file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aperiodic-spectra", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    def add(name: str, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help, argument_default=S)
        _global_flags(p, suppress=True)
        return p

    p = add("seq", "write a substitution iterate")
    _source_flags(p)
    p.add_argument("--order", type=int)
    p.add_argument("--two-sided", action="store_true", help="mirror-completed two-sided word")
    p.add_argument("--sep", help="separator between symbols")

    p = add("freq", "patch frequency, or letter frequencies without --pattern")
    _source_flags(p)
    p.add_argument("--pattern", help="symbols, space separated (or concatenated)")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-order", type=int)

    p = add("diffract", "Bombieri-Taylor intensities and Bragg-peak verdicts")
    _source_flags(p)
    p.add_argument("--order", type=int, help="substitution order of the point set")
    p.add_argument("--weights", help="symbol=weight,...")
    p.add_argument("--k", help="comma-separated wave numbers, e.g. 2*pi/3,pi")
    p.add_argument("--windows", help="comma-separated window half-widths")
    p.add_argument("--window-exponents", help="half-widths 2^a..2^b given as a:b")
    p.add_argument("--theta", type=float, help="Bragg intensity threshold")
    p.add_argument("--stability", type=float, help="relative stability tolerance")
    p.add_argument("--center", type=float)

    p = add("eig", "topological eigenvalue test")
    _source_flags(p)
    p.add_argument("--order", type=int)
    p.add_argument("--k", help="comma-separated wave numbers")
    p.add_argument("--radii", help="comma-separated patch radii")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-pairs", type=int)

    p = add("spectrum", "gap labels of the tight-binding operator")
    _source_flags(p)
    p.add_argument("--potential", help="symbol=value,... (required with --substitution)")
    p.add_argument("--coupling", type=float)
    p.add_argument("--orders", help="approximant orders, a:b or comma separated")
    p.add_argument("--order", type=int, help="single order for --method approximant")
    p.add_argument("--method", choices=("aperiodic", "approximant"))
    p.add_argument("--tol", type=float)
    p.add_argument("--window", type=int, help="sites in the Sturm window")
    p.add_argument("--min-width", type=float)
    p.add_argument("--edge-tol", type=float)
    p.add_argument("--module", help="label module: dyadic:q, golden or a module JSON file")
    p.add_argument("--coeff-bound", type=int)

    p = add("beta", "Luck exponent of prod sin^2(pi 2^l k)")
    p.add_argument("--k", help="comma-separated rationals, e.g. 1/3,1/5")
    p.add_argument("-N", "--n", type=int, help="number of doubling steps")

    p = add("label", "module membership, subgroup index and Bragg-to-gap values")
    p.add_argument("--x", help="comma-separated numbers to test for membership")
    p.add_argument("--module", help="dyadic:q, golden or a module JSON file")
    p.add_argument("--index", nargs=2, metavar=("A", "B"), help="index of module A in module B")
    p.add_argument("--bragg", help="vectors k_1;k_2;... with comma-separated components")
    p.add_argument("--tol", type=float)
    p.add_argument("--coeff-bound", type=int)

    p = add("verify", "run the acceptance checks for a preset")
    p.add_argument("--preset", help="thue-morse, fibonacci, period-doubling, periodic:p or all")
    p.add_argument("--strict", action="store_true", help="exit with 1 if any check fails")
    return parser


def resolve_options(ns: argparse.Namespace) -> dict[str, Any]:
    """Merge defaults, the ``--config`` file and command-line flags."""
    command = ns.command
    given = {k: v for k, v in vars(ns).items() if k != "command" and v is not None}
    opts = {k: None for k in GLOBAL_OPTIONS}
    opts.update(DEFAULTS[command])
    path = given.get("config")
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigurationError(f"config file {path} does not exist") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: top level must be an object")
        for key, value in data.items():
            k = key.replace("-", "_")
            if k not in opts or k == "config":
                raise ConfigurationError(f"{path}: unknown field {key!r} for command {command!r}")
            opts[k] = value
    opts.update(given)
    if opts["threads"] is None and os.environ.get(THREADS_ENV):
        try:
            opts["threads"] = int(os.environ[THREADS_ENV])
        except ValueError:
            raise ConfigurationError(f"{THREADS_ENV} must be an integer") from None
    if opts["threads"] is not None and opts["threads"] < 1:
        raise ConfigurationError("threads must be at least 1")
    if opts["seed"] is None:
        opts["seed"] = 0
    opts["command"] = command
    return opts


# -- shared helpers ---------------------------------------------------------------

def _load_source(opts) -> tuple[Preset | None, Substitution | None]:
    if opts.get("preset") and opts.get("substitution"):
        raise ConfigurationError("give either --preset or --substitution, not both")
    if opts.get("preset"):
        preset = get_preset(opts["preset"])
        return preset, preset.substitution
    if opts.get("substitution"):
        path = Path(opts["substitution"])
        if not path.exists():
            raise ConfigurationError(f"substitution file {path} does not exist")
        return None, Substitution.load(path)
    raise ConfigurationError("a word source is required: --preset or --substitution")


def _require_substitution(preset, sub) -> Substitution:
    if sub is None:
        raise ConfigurationError(f"preset {preset.name!r} has no substitution for this command")
    return sub


def _tokenize(sub: Substitution, text: str) -> list[str]:
    if " " in text.strip():
        return text.split()
    symbols = sorted(sub.alphabet, key=len, reverse=True)
    out, i = [], 0
    while i < len(text):
        for s in symbols:
            if text.startswith(s, i):
                out.append(s)
                i += len(s)
                break
        else:
            raise ConfigurationError(f"pattern {text!r}: no symbol matches at position {i}")
    return out


def _module(spec, default: gaplabel.RealModule | None = None) -> gaplabel.RealModule:
    if spec is None:
        if default is None:
            raise ConfigurationError("a module is required (--module)")
        return default
    if isinstance(spec, dict):
        return gaplabel.RealModule.from_dict(spec)
    spec = str(spec)
    if spec == "golden":
        return gaplabel.golden_module()
    if spec.startswith("dyadic:"):
        try:
            return gaplabel.dyadic_module(int(spec.split(":", 1)[1]))
        except ValueError:
            raise ConfigurationError(f"bad module {spec!r}") from None
    path = Path(spec)
    if not path.exists():
        raise ConfigurationError(f"module {spec!r} is neither dyadic:q, golden nor an existing file")
    return gaplabel.RealModule.from_json(path.read_text(encoding="utf-8"))


def _header(opts) -> dict:
    return {"command": opts["command"], "seed": opts["seed"]}


def _csv_text(header: dict, rows: list[list], columns: list[str]) -> str:
    buf = _stdio.StringIO()
    buf.write("# " + " ".join(f"{k}={v}" for k, v in header.items()) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _threads(opts) -> int | None:
    n = opts.get("threads")
    if n:
        numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))
    return n


# -- commands -------------------------------------------------------------------

def cmd_seq(opts) -> str:
    preset, sub = _load_source(opts)
    sub = _require_substitution(preset, sub)
    n = int(opts["order"])
    if opts["two_sided"]:
        w = two_sided_word(sub, n)
        letters, origin = w.letters, w.origin
    else:
        letters, origin = iterate(sub, n), 0
    symbols = word_symbols(sub, letters)
    if opts["format"] == "json":
        return dumps({"order": n, "origin": origin, "word": opts["sep"].join(symbols)}) + "\n"
    if opts["format"] == "csv":
        return _csv_text({"command": "seq", "order": n}, [[i - origin, s] for i, s in enumerate(symbols)],
                         ["site", "symbol"])
    return opts["sep"].join(symbols) + "\n"


def cmd_freq(opts) -> str:
    preset, sub = _load_source(opts)
    sub = _require_substitution(preset, sub)
    if opts["pattern"]:
        pattern = _tokenize(sub, str(opts["pattern"]))
        est = patch_frequency(sub, pattern, float(opts["tol"]), int(opts["max_order"]))
        rows = [[" ".join(pattern), est.value, est.achieved_tol, est.order]]
        result = {"pattern": pattern, "frequency": est.value, "achieved_tol": est.achieved_tol,
                  "order": est.order}
        columns = ["pattern", "frequency", "achieved_tol", "order"]
    else:
        M = substitution_matrix(sub)
        lam, v = pf_data(M)
        rows = [[a, float(f)] for a, f in zip(sub.alphabet, v)]
        result = {"pf_eigenvalue": lam, "pisot": is_pisot(M),
                  "letters": {a: float(f) for a, f in zip(sub.alphabet, v)}}
        columns = ["symbol", "frequency"]
    if opts["format"] == "csv":
        return _csv_text(_header(opts), rows, columns)
    return dumps({"header": _header(opts), **result}) + "\n"


def _point_set(preset, sub, order):
    if preset is not None:
        return preset.point_set(order)
    return from_substitution(sub, 16 if order is None else int(order))


def cmd_diffract(opts) -> str:
    preset, sub = _load_source(opts)
    ks = parse_list(opts["k"])
    if not ks:
        raise ConfigurationError("the k list is empty")
    if opts["windows"] is not None:
        Ls = parse_list(opts["windows"])
    else:
        Ls = [2.0 ** j for j in parse_list(opts["window_exponents"], int)]
    if len(Ls) < 3 or any(b <= a for a, b in zip(Ls, Ls[1:])):
        raise ConfigurationError("window schedule needs at least 3 increasing half-widths")
    ps = _point_set(preset, sub, opts["order"])
    if opts["weights"] is not None:
        letter_map = parse_mapping(opts["weights"])
    elif preset is not None:
        letter_map = dict(preset.weights)
    else:
        raise ConfigurationError("--weights is required with --substitution")
    w = point_weights(ps, letter_map)
    center = float(opts["center"])
    samples = [diffraction.diffraction_sample(ps, w, k, Ls, center) for k in ks]
    peaks = diffraction.peak_scan(ps, w, ks, Ls, float(opts["theta"]), float(opts["stability"]),
                                  center, _threads(opts))
    if opts["format"] == "json":
        return dumps({"header": _header(opts),
                      "samples": [{"k": s.k, "window": (2 * s.window_sizes).tolist(),
                                   "intensity": s.intensities.tolist()} for s in samples],
                      "peaks": [p.to_dict() for p in peaks]}) + "\n"
    rows = [[s.k, 2 * L, a.real, a.imag, abs(a) ** 2]
            for s in samples for L, a in zip(s.window_sizes, s.amplitudes)]
    text = _csv_text(_header(opts), rows, ["k", "window", "amplitude_re", "amplitude_im", "intensity"])
    opts["_peaks"] = json.dumps(clean([p.to_dict() for p in peaks]), ensure_ascii=False)
    return text


def cmd_eig(opts) -> str:
    preset, sub = _load_source(opts)
    ks = parse_list(opts["k"])
    if not ks:
        raise ConfigurationError("the k list is empty")
    if opts["radii"] is not None:
        radii = parse_list(opts["radii"])
    else:
        radii = list(preset.radii) if preset is not None else list(eigenvalues.DEFAULT_RADII)
    ps = _point_set(preset, sub, opts["order"])
    reports = eigenvalues.eigenvalue_scan(ps, ks, radii, float(opts["tol"]),
                                          int(opts["max_pairs"]), int(opts["seed"]))
    if opts["format"] == "csv":
        rows = [[r.k, R, d, n, r.verdict] for r in reports
                for R, d, n in zip(r.radii, r.discrepancies, r.n_pairs)]
        return _csv_text(_header(opts), rows, ["k", "radius", "discrepancy", "pairs", "verdict"])
    return dumps({"header": _header(opts), "results": [r.to_dict() for r in reports]}) + "\n"


def _spectrum_model(opts, preset, sub) -> TightBindingModel:
    coupling = float(opts["coupling"])
    if opts["potential"] is not None:
        pot = parse_mapping(opts["potential"])
        if preset is not None:
            return TightBindingModel(pot, coupling, preset.substitution, preset.period_word)
        return TightBindingModel(pot, coupling, sub)
    if preset is None:
        raise ConfigurationError("--potential is required with --substitution")
    return preset.model(coupling)


def cmd_spectrum(opts) -> str:
    preset, sub = _load_source(opts)
    model = _spectrum_model(opts, preset, sub)
    _threads(opts)

    def pick(key, fallback):
        return opts[key] if opts[key] is not None else fallback

    if opts["method"] == "approximant":
        order = pick("order", preset.orders[-1] if preset else None)
        if order is None:
            raise ConfigurationError("--order is required for --method approximant")
        report = bands.band_structure(model, int(order))
    else:
        orders = parse_list(pick("orders", list(preset.orders) if preset else None), int)
        if not orders:
            raise ConfigurationError("--orders is required with --substitution")
        report = bands.aperiodic_gap_labels(
            model, orders, tol=float(pick("tol", preset.label_tol if preset else 1e-4)),
            window=int(pick("window", preset.window if preset else 2 ** 16)),
            edge_tol=float(opts["edge_tol"]),
            min_width=float(pick("min_width", preset.min_width if preset else 1e-3)))
    if opts["format"] == "csv":
        rows = [[b.order, b.index, b.e_low, b.e_high] for b in report.bands]
        return _csv_text(_header(opts), rows, ["order", "band_index", "e_low", "e_high"])
    module = _module(opts["module"], preset.gap_module if preset else None) \
        if (opts["module"] is not None or preset is not None) else None
    tol = float(pick("tol", preset.label_tol if preset else 1e-4))
    bound = int(pick("coeff_bound", 50 if module is not None and module.rank > 1 else 1024))
    gaps = []
    for g in report.gaps:
        entry = g.to_dict()
        if g.note:
            entry["note"] = g.note
        if module is not None:
            entry["membership"] = gaplabel.membership(g.label, module, tol, bound).to_dict()
        gaps.append(entry)
    out = {"header": {**_header(opts), "orders": report.orders, "coupling": model.coupling},
           "gaps": gaps}
    if module is not None:
        out["header"]["module"] = module.to_dict()
    return dumps(out) + "\n"


def cmd_beta(opts) -> str:
    ks = parse_list(opts["k"], str)
    if not ks:
        raise ConfigurationError("the k list is empty")
    N = int(opts["n"])
    rows = []
    for k in ks:
        try:
            value = luck.luck_beta(k, N)
        except (ValueError, ZeroDivisionError):
            raise ConfigurationError(f"cannot read {k!r} as a rational number") from None
        rows.append([k, value])
    if opts["format"] == "csv":
        return _csv_text(_header(opts), rows, ["k", "beta"])
    return dumps({"header": _header(opts), "N": N,
                  "results": [{"k": k, "beta": v} for k, v in rows]}) + "\n"


def cmd_label(opts) -> str:
    out: dict[str, Any] = {"header": _header(opts)}
    did = False
    if opts["x"] is not None:
        module = _module(opts["module"])
        out["membership"] = [{"x": x, **gaplabel.membership(x, module, float(opts["tol"]),
                                                           int(opts["coeff_bound"])).to_dict()}
                             for x in parse_list(opts["x"])]
        did = True
    if opts["index"] is not None:
        a, b = (_module(s) for s in opts["index"])
        out["index"] = gaplabel.subgroup_index(a, b)
        did = True
    if opts["bragg"] is not None:
        vectors = [parse_list(v) for v in str(opts["bragg"]).split(";")]
        out["bragg_to_gap"] = (gaplabel.bragg_to_gap_1d(vectors[0][0]) if len(vectors) == 1
                               and len(vectors[0]) == 1 else gaplabel.bragg_to_gap_d(*vectors))
        did = True
    if not did:
        raise ConfigurationError("label needs --x with --module, --index A B or --bragg")
    return dumps(out) + "\n"


def _preset_label_check(preset: Preset) -> acceptance.CriterionResult:
    def run():
        rep = bands.aperiodic_gap_labels(preset.model(1.0), preset.orders, tol=preset.label_tol,
                                         window=preset.window, min_width=preset.min_width)
        stable = rep.stable_gaps()
        misses = [g.label for g in stable
                  if not gaplabel.membership(g.label, preset.gap_module, preset.label_tol, 1024)]
        # periodic chains may have closed gaps (periodic:1 has none)
        expected = 0 if preset.period_word else 1
        return len(stable) >= expected and not misses, {"stable_gaps": len(stable),
                                                        "unmatched_labels": misses}
    return acceptance._timed(run, 0, f"{preset.name} labels in the expected module")


VERIFY_KEYS = {1: "selection_rule", 2: "index_check", 3: "luck_exponents", 4: "diffraction_beta",
               5: "eigenvalues", 6: "mathieu_first_gap", 7: "bragg_to_gap", 8: "oracles",
               9: "label_stability"}


def cmd_verify(opts) -> tuple[str, bool]:
    name = opts["preset"]
    if not name:
        raise ConfigurationError("--preset is required")
    if name in acceptance.PRESET_CHECKS:
        results = [acceptance.CHECKS[n]() for n in acceptance.PRESET_CHECKS[name]]
        keyed = {VERIFY_KEYS[r.number]: r for r in results}
    else:
        preset = get_preset(name)
        keyed = {"label_module": _preset_label_check(preset)}
    summary = {"header": {**_header(opts), "preset": name}}
    for key, r in keyed.items():
        d = r.to_dict()
        for drop in ("criterion", "name", "elapsed"):      # timings would break reproducibility
            d.pop(drop)
        summary[key] = {"pass": d.pop("pass"), **d}
    summary["all_pass"] = all(r.passed for r in keyed.values())
    return dumps(summary) + "\n", summary["all_pass"]


COMMANDS: dict[str, Callable] = {
    "seq": cmd_seq, "freq": cmd_freq, "diffract": cmd_diffract, "eig": cmd_eig,
    "spectrum": cmd_spectrum, "beta": cmd_beta, "label": cmd_label,
}


def run(argv: list[str] | None = None) -> tuple[int, str, dict[str, Any]]:
    """Execute a command without writing anything; returns the exit code, the
    output text and the resolved options."""
    ns = build_parser().parse_args(argv)
    opts = resolve_options(ns)
    if opts["command"] == "verify":
        text, ok = cmd_verify(opts)
        return (0 if ok or not opts["strict"] else 1), text, opts
    return 0, COMMANDS[opts["command"]](opts), opts


def _write(text: str, opts: dict[str, Any]) -> None:
    out = opts.get("out")
    peaks = opts.get("_peaks")
    if not out:
        sys.stdout.write(text)
        if peaks is not None:
            sys.stdout.write(f"# peaks={peaks}\n")
        return
    Path(out).write_text(text, encoding="utf-8")
    if peaks is not None:
        Path(f"{out}.peaks.json").write_text(peaks + "\n", encoding="utf-8")


def main(argv: list[str] | None = None) -> int:
    try:
        code, text, opts = run(argv)
        _write(text, opts)
        return code
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ComputationError as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
