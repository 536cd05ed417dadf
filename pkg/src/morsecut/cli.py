"""Command-line surface for the matching, homology, persistence, scalar
and pruning pipelines.

Exit codes: 0 ok, 2 input error, 3 oracle mismatch under --oracle strict,
4 solver failure.  Reports echo the configuration and seed; with the same
command line and seed the output is byte-identical (timings are opt-in
because they never are).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .complexes import ComplexError, euler_characteristic, parse_complex
from .cuts import CutError
from .gadget import GadgetError, recover_matching, reduce_mmup_to_pop
from .homology import homology_via_mmup, simplicial_homology
from .morse import extract_dgvf, morse_summary
from .persistence import (FiltrationError, emit_diagram, parse_filtration,
                          persist_incremental, persist_naive)
from .popsolve import SolverConfig, solve_min_pop
from .pruning import check_core, prune_boundary
from .scalar import ScalarField, ScalarFieldError, solve_compatible, \
    validate_compatibility

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_ORACLE = 3
EXIT_SOLVER = 4


class _Report:
    def __init__(self, command: str, cfg: SolverConfig, extra: dict):
        self.lines = [f"command: {command}"]
        echo = {"solver": cfg.solver, "seed": cfg.seed,
                "balance_c": round(cfg.balance_c, 6),
                "max_exact_size": cfg.max_exact_size, **extra}
        self.lines.append("config: " + json.dumps(echo, sort_keys=True))
        self.timings: list[str] = []

    def add(self, key: str, value):
        self.lines.append(f"{key}: {value}")

    def emit(self, show_timings: bool):
        print("\n".join(self.lines))
        if show_timings:
            for t in self.timings:
                print(t)


def _common_flags(p: argparse.ArgumentParser):
    p.add_argument("--solver", choices=["exact", "arv", "mwum"], default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--balance-c", type=float, default=None)
    p.add_argument("--gadget", choices=["mr", "fft"], default="fft")
    p.add_argument("--oracle", choices=["off", "report", "strict"], default="off")
    p.add_argument("--config", type=Path, default=None,
                   help="JSON file with solver config keys")
    p.add_argument("--timings", action="store_true")


def _config_from(args) -> SolverConfig:
    cfg = SolverConfig()
    if args.config is not None:
        cfg = SolverConfig.from_mapping(json.loads(args.config.read_text()))
    if args.solver is not None:
        cfg.solver = args.solver
    elif args.config is None:
        cfg.solver = "arv"  # default: exact below size thresholds, else rounding
    if args.seed is not None:
        cfg.seed = args.seed
    if args.balance_c is not None:
        cfg.balance_c = args.balance_c
    return cfg


def _read(path: Path) -> str:
    try:
        return path.read_text()
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def cmd_morse(args) -> int:
    cfg = _config_from(args)
    try:
        K = parse_complex(_read(args.complex_file))
    except ComplexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    rep = _Report("morse", cfg, {"gadget": args.gadget})
    t0 = time.perf_counter()
    try:
        if len(K) == 1:
            dgvf = extract_dgvf(K, [])
            critical_count = 1
        else:
            inst = reduce_mmup_to_pop(K, mode=args.gadget)
            sol, trace = solve_min_pop(inst, cfg)
            matching, critical_count = recover_matching(inst, sol, K)
            dgvf = extract_dgvf(K, sorted(matching))
            rep.add("solver_trace", " | ".join(trace.lines()))
    except (GadgetError, CutError) as exc:
        print(f"error: solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    rep.timings.append(f"timing_solve_s: {time.perf_counter() - t0:.3f}")
    summary = morse_summary(K, dgvf)
    rep.add("cells", " ".join(str(c) for c in K.counts()))
    rep.add("morse_numbers", " ".join(str(c) for c in summary["morse_numbers"]))
    rep.add("critical_count", critical_count)
    rep.add("euler_characteristic", summary["euler_characteristic"])
    rep.emit(args.timings)
    return EXIT_OK


def cmd_homology(args) -> int:
    cfg = _config_from(args)
    try:
        K = parse_complex(_read(args.complex_file))
    except ComplexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    rep = _Report("homology", cfg, {"coeff": args.coeff, "gadget": args.gadget,
                                    "prune": args.prune})
    try:
        groups = homology_via_mmup(K, cfg, gadget_mode=args.gadget,
                                   coeff=args.coeff, prune=args.prune)
    except (GadgetError, CutError) as exc:
        print(f"error: solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    for line in groups.report().strip().splitlines():
        rep.add("group", line)
    if args.oracle != "off":
        oracle = simplicial_homology(K, coeff=args.coeff)
        match = groups == oracle
        rep.add("oracle_match", str(match).lower())
        if not match and args.oracle == "strict":
            rep.emit(args.timings)
            return EXIT_ORACLE
    rep.emit(args.timings)
    return EXIT_OK


def cmd_persist(args) -> int:
    cfg = _config_from(args)
    try:
        F = parse_filtration(_read(args.filtration_file))
    except FiltrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    rep = _Report("persist", cfg, {"reopt_every": args.reopt_every})
    pairs = persist_incremental(F, reopt_every=args.reopt_every)
    finite = sum(1 for p in pairs if p.death_index is not None)
    rep.add("pairs_total", len(pairs))
    rep.add("pairs_finite", finite)
    if args.oracle != "off":
        oracle = persist_naive(F)
        match = [p.key() for p in pairs] == [p.key() for p in oracle]
        rep.add("oracle_match", str(match).lower())
        if not match and args.oracle == "strict":
            rep.emit(args.timings)
            return EXIT_ORACLE
    if args.svg is not None:
        args.svg.write_text(emit_diagram(pairs, fmt="svg", size=args.svg_size))
        rep.add("svg", str(args.svg))
    rep.add("diagram", "")
    rep.lines.extend("  " + ln for ln in
                     emit_diagram(pairs, fmt="text").strip().splitlines())
    rep.emit(args.timings)
    return EXIT_OK


def cmd_scalar(args) -> int:
    cfg = _config_from(args)
    try:
        K = parse_complex(_read(args.complex_file))
        F = ScalarField.parse(_read(args.field_file))
    except (ComplexError, ScalarFieldError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    rep = _Report("scalar", cfg, {"gadget": args.gadget})
    try:
        dgvf, info = solve_compatible(K, F, cfg, gadget_mode=args.gadget,
                                      perturb_ties=args.perturb_ties)
    except ScalarFieldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (GadgetError, CutError) as exc:
        print(f"error: solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    violations = validate_compatibility(K, F, dgvf,
                                        perturb_ties=args.perturb_ties)
    rep.add("critical_count", info["critical_count"])
    rep.add("gradient_pairs", len(dgvf.pair_up))
    rep.add("compatibility_violations", len(violations))
    for v in violations:
        rep.add("violation", v)
    rep.emit(args.timings)
    return EXIT_ORACLE if violations and args.oracle == "strict" else EXIT_OK


def cmd_prune(args) -> int:
    cfg = _config_from(args)
    try:
        K = parse_complex(_read(args.complex_file))
    except ComplexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    rep = _Report("prune", cfg, {})
    core, trace, seed_pairs = prune_boundary(K)
    rep.add("cells_before", " ".join(str(c) for c in K.counts()))
    rep.add("cells_after", " ".join(str(c) for c in core.counts()))
    rep.add("collapse_pairs", len(trace.pairs))
    rep.add("euler_before", euler_characteristic(K))
    rep.add("euler_after", euler_characteristic(core))
    problems = check_core(core)
    rep.add("core_check", "pass" if not problems else "fail")
    for p in problems:
        rep.add("core_problem", p)
    if args.oracle != "off":
        match = (simplicial_homology(K) == simplicial_homology(core))
        rep.add("oracle_match", str(match).lower())
        if args.oracle == "strict" and (problems or not match):
            rep.emit(args.timings)
            return EXIT_ORACLE
    rep.emit(args.timings)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="morsecut",
        description="Discrete Morse matchings via balanced-cut solvers")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("morse", help="near-minimal gradient field")
    p.add_argument("complex_file", type=Path)
    _common_flags(p)
    p.set_defaults(func=cmd_morse)

    p = sub.add_parser("homology", help="homology groups via the pipeline")
    p.add_argument("complex_file", type=Path)
    p.add_argument("--coeff", choices=["Z", "Z2", "Z3", "Z5"], default="Z")
    p.add_argument("--prune", action="store_true")
    _common_flags(p)
    p.set_defaults(func=cmd_homology)

    p = sub.add_parser("persist", help="persistence pairs of a filtration")
    p.add_argument("filtration_file", type=Path)
    p.add_argument("--svg", type=Path, default=None)
    p.add_argument("--svg-size", type=int, default=360)
    p.add_argument("--reopt-every", type=int, default=16)
    _common_flags(p)
    p.set_defaults(func=cmd_persist)

    p = sub.add_parser("scalar", help="field-compatible gradient field")
    p.add_argument("complex_file", type=Path)
    p.add_argument("field_file", type=Path)
    p.add_argument("--perturb-ties", action="store_true")
    _common_flags(p)
    p.set_defaults(func=cmd_scalar)

    p = sub.add_parser("prune", help="collapse to the core")
    p.add_argument("complex_file", type=Path)
    _common_flags(p)
    p.set_defaults(func=cmd_prune)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
