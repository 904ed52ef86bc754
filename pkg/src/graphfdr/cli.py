"""Command-line interface: ``graphfdr {select,khan,simulate,rank}``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
degeneracy.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import warnings
from dataclasses import fields
from pathlib import Path

from . import __version__
from .errors import BudgetExceeded, CholeskyFailure, DegenerateDenominator, DegenerateVariance, NonConvergence
from .estimators import ggm_edge_statistics, ising_edge_statistics
from .features import parse_shape, select_features
from .homology import cycle_rank
from .io import read_edge_csv, read_samples, write_json
from .persistence import barcode, barcode_csv, khan, resolve_jbar
from .simulation import (
    TABLE1_BLOCKS,
    GgmDesign,
    IsingDesign,
    homology_design,
    run_feature_experiment,
    run_homology_experiment,
    table1_design,
)

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
SEED_ENV = "KHAN_SEED"

logger = logging.getLogger("graphfdr")

SAMPLE_FORMATS = """sample files: CSV with one observation per row and no header, or
binary (.bin/.dat): little-endian int32 n, int32 d, then n*d float64
values in row-major order. Ising data must contain only -1 and +1."""

EDGE_FORMAT = """edge files: CSV rows "u,v[,weight]" with 0-based vertex ids, an
optional "u,v,weight" header and '#' comment lines."""

SHAPES = """shapes: triangle | cycle:K | clique:K | star:K (K vertices) | path:K |
spider | template:FILE (FILE is an edge CSV on vertices 0..m-1)."""

EXIT_CODES = "exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical degeneracy."


class ConfigError(Exception):
    pass


class DataError(Exception):
    pass


def _q(text):
    q = float(text)
    if not 0.0 < q < 1.0:
        raise argparse.ArgumentTypeError(f"q must lie in (0, 1), got {text}")
    return q


def _mu(text):
    if text.strip().lower() in ("inf", "+inf", "infinity"):
        return math.inf
    return float(text)


def _jbar(text):
    if text in ("exact", "closed"):
        return text
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("jbar must be exact, closed or a positive integer") from None


class _Formatter(argparse.ArgumentDefaultsHelpFormatter, argparse.RawDescriptionHelpFormatter):
    pass


def _add_model_flags(p):
    p.add_argument("--data", required=True, metavar="FILE", help="sample matrix (see file formats below)")
    p.add_argument("--format", default="auto", choices=["auto", "csv", "bin"],
                   help="sample file format; auto picks bin for .bin/.dat suffixes")
    p.add_argument("--model", required=True, choices=["ggm", "ising"], help="graphical model family")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="graphical-lasso penalty for ggm (default: 0.1*mean(diag S)*sqrt(log d/n))")
    p.add_argument("--theta", type=float, default=None, help="correlation threshold tanh(theta) for ising (required)")
    p.add_argument("--q", type=_q, required=True, help="target FDR level in (0, 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphfdr",
        description="FDR-controlled selection of graph features and persistent cycle groups.",
        epilog=EXIT_CODES,
        formatter_class=_Formatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (-vv for debug)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{select,khan,simulate,rank}")

    p = sub.add_parser("select", help="select graph features with FDR control",
                       description="Estimate edge statistics from samples and select all placements of a shape.",
                       epilog="\n\n".join([SHAPES, SAMPLE_FORMATS, "output: SelectionResult JSON "
                                           "{q, total_J, alpha_hat, n_candidates, selected:[{vertices, edges, pvalue}], "
                                           "config}.", EXIT_CODES]),
                       formatter_class=_Formatter)
    _add_model_flags(p)
    p.add_argument("--shape", required=True, help="feature shape (see below)")
    p.add_argument("--out", default="-", metavar="FILE", help="JSON output path, '-' for standard output")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("khan", help="select persistent cycle groups along the filtration",
                       description="Run the adaptive persistence selector over [mu0, mu1] and write its barcode.",
                       epilog="\n\n".join([SAMPLE_FORMATS, "outputs: PersistenceResult JSON (--out) and a barcode CSV "
                                           "birth,death,multiplicity,censored (--barcode); the change-point table is "
                                           "printed to standard output.", EXIT_CODES]),
                       formatter_class=_Formatter)
    _add_model_flags(p)
    p.add_argument("--K", type=int, required=True, help="highest cycle dimension, K >= 1")
    p.add_argument("--mu0", type=_mu, default=0.0, help="start of the filtration")
    p.add_argument("--mu1", type=_mu, required=True, help="end of the filtration; 'inf' runs until the rank reaches 0")
    p.add_argument("--jbar", type=_jbar, default="closed",
                   help="BH denominator: exact (full clique-complex cycle rank), closed (sum (d-k)(d-k-1)/2) or an integer")
    p.add_argument("--out", default="khan_result.json", metavar="FILE", help="PersistenceResult JSON path")
    p.add_argument("--barcode", default="khan_barcode.csv", metavar="FILE", help="barcode CSV path")
    p.set_defaults(func=cmd_khan)

    p = sub.add_parser("simulate", help="run a synthetic experiment",
                       description="Repeated generate/sample/estimate/select/score runs. Flags override --config, "
                                   "which overrides --preset.",
                       epilog="\n\n".join([
                           "presets: table1 (Gaussian triangles/four-cycles/five-cycles blocks, weights U(0.85,1), "
                           f"v=0.1, d in {sorted(TABLE1_BLOCKS)}), table2 (Ising forest of random trees of size 6..10, "
                           "weights U(0.9,1), theta=0.45), homology (Gaussian triangle/four-clique/five-clique blocks, "
                           "weights U(0,10), v=0.25, (m1,m2,m3)=(10,30,10), K=2, mu in [0,1]).",
                           "config file: JSON object with keys experiment (features|homology), model (ggm|ising), "
                           "preset, design (GgmDesign or IsingDesign fields), n, q, K, mu0, mu1, reps, seed, shape "
                           "(string or list), lambda, theta, power_c, parallelism.",
                           SHAPES,
                           "outputs: OUT.json (config echo, per-rep metrics, aggregates, errors, wall time) and "
                           "OUT.csv (one row per repetition).",
                           f"seeding: --seed, else ${SEED_ENV}, else 0; repetition i uses "
                           "Philox(SeedSequence(seed, spawn_key=(i,))).",
                           EXIT_CODES]),
                       formatter_class=_Formatter)
    p.add_argument("--preset", choices=["table1", "table2", "homology"], default=None, help="named design")
    p.add_argument("--config", metavar="FILE", default=None, help="JSON configuration file")
    p.add_argument("--d", type=int, default=None, help="dimension (table1: picks (m1,m2,m3); table2: forest size)")
    p.add_argument("--m1", type=int, default=None, help="number of 3-vertex blocks")
    p.add_argument("--m2", type=int, default=None, help="number of 4-vertex blocks")
    p.add_argument("--m3", type=int, default=None, help="number of 5-vertex blocks")
    p.add_argument("--n", type=int, default=None, help="sample size (default 400)")
    p.add_argument("--q", type=_q, default=None, help="target FDR level (default 0.05)")
    p.add_argument("--shape", default=None, help="comma-separated shapes for feature experiments (default triangle, "
                                                 "path:5 for table2)")
    p.add_argument("--K", type=int, default=None, help="cycle dimension for homology (default 2)")
    p.add_argument("--mu0", type=_mu, default=None, help="filtration start for homology (default 0)")
    p.add_argument("--mu1", type=_mu, default=None, help="filtration end for homology (default 1)")
    p.add_argument("--reps", type=int, default=None, help="repetitions (default 100)")
    p.add_argument("--seed", type=int, default=None, help=f"master seed (overrides ${SEED_ENV})")
    p.add_argument("--theta", type=float, default=None, help="Ising threshold (default 0.45)")
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="graphical-lasso penalty (default: data-scaled)")
    p.add_argument("--power-c", dest="power_c", type=float, default=None,
                   help="homology power proxy offset constant c in delta = c*sqrt(log d/n) (default 1)")
    p.add_argument("--parallelism", type=int, default=None, help="worker processes (default: logical cores)")
    p.add_argument("--out", default="report", metavar="PREFIX", help="writes PREFIX.json and PREFIX.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("rank", help="cycle rank of a graph's clique complex",
                       description="Print rank Z(E) up to dimension K and its per-dimension breakdown.",
                       epilog="\n\n".join([EDGE_FORMAT + " Weights are ignored.", EXIT_CODES]),
                       formatter_class=_Formatter)
    p.add_argument("--edges", required=True, metavar="FILE", help="edge CSV")
    p.add_argument("--d", type=int, required=True, help="number of vertices")
    p.add_argument("--K", type=int, required=True, help="highest cycle dimension, 1 <= K <= d-1")
    p.add_argument("--json", action="store_true", help="print JSON instead of text")
    p.set_defaults(func=cmd_rank)
    return parser


# ------------------------------------------------------------------ helpers


def _edge_statistics(args):
    if args.model == "ising" and args.theta is None:
        raise ConfigError("--theta is required for --model ising")
    if args.model == "ising" and args.theta < 0:
        raise ConfigError(f"--theta must be nonnegative, got {args.theta}")
    if args.lam is not None and args.lam < 0:
        raise ConfigError(f"--lambda must be nonnegative, got {args.lam}")
    if not Path(args.data).is_file():
        raise DataError(f"sample file not found: {args.data}")
    try:
        X = read_samples(args.data, args.format)
    except (ValueError, OSError) as exc:
        raise DataError(f"cannot read {args.data}: {exc}") from exc
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 2:
        raise DataError(f"need at least 2 samples of at least 2 variables, got shape {X.shape}")
    try:
        if args.model == "ggm":
            return ggm_edge_statistics(X, args.lam)
        return ising_edge_statistics(X, args.theta)
    except (DegenerateDenominator, DegenerateVariance, CholeskyFailure):
        raise
    except ValueError as exc:
        raise DataError(str(exc)) from exc


def _emit(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _check_K(K, d=None):
    if K < 1:
        raise ConfigError(f"K must be at least 1, got {K}")
    if d is not None and K > d - 1:
        raise ConfigError(f"K must not exceed d - 1 = {d - 1}, got {K}")


# ------------------------------------------------------------------ commands


def cmd_select(args) -> int:
    try:
        shape = parse_shape(args.shape)
    except (ValueError, OSError) as exc:
        raise ConfigError(f"bad --shape {args.shape!r}: {exc}") from exc
    stats = _edge_statistics(args)
    if stats.d < shape.m:
        raise ConfigError(f"shape needs {shape.m} vertices but data has d={stats.d}")
    res = select_features(stats, shape, args.q)
    out = res.to_dict()
    out["config"] = {"command": "select", "data": args.data, "model": args.model, "shape": shape.name,
                     "q": args.q, "lambda": args.lam if args.lam is not None else "default", "theta": args.theta,
                     "d": stats.d, "n": stats.n, "scenario": stats.scenario.value}
    _emit(json.dumps(out, indent=2) + "\n", args.out)
    logger.info("selected %d of %d candidates", len(res.selected), len(res.candidates))
    return EXIT_OK


def cmd_khan(args) -> int:
    _check_K(args.K)
    if not args.mu0 < args.mu1:
        raise ConfigError(f"need mu0 < mu1, got {args.mu0} and {args.mu1}")
    if not math.isfinite(args.mu0):
        raise ConfigError("mu0 must be finite")
    stats = _edge_statistics(args)
    _check_K(args.K, stats.d)
    try:
        jbar = resolve_jbar(stats.d, args.K, args.jbar)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    res = khan(stats, args.mu0, args.mu1, args.q, args.K, jbar)
    obj = res.to_dict()
    obj["config"] = {"command": "khan", "data": args.data, "model": args.model, "q": args.q, "K": args.K,
                     "mu0": args.mu0, "mu1": obj["mu1"], "jbar_rule": args.jbar, "jbar": res.jbar,
                     "lambda": args.lam if args.lam is not None else "default", "theta": args.theta,
                     "d": stats.d, "n": stats.n}
    write_json(args.out, obj)
    Path(args.barcode).write_text(barcode_csv(barcode(res)), encoding="utf-8")
    print(f"{'mu':>14}  {'rank':>6}  {'edges':>6}")
    for step in res.steps:
        print(f"{step.mu:14.8g}  {step.rank:6d}  {len(step.edges):6d}")
    return EXIT_OK


def _load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    return cfg


def _design_from(kind, base, overrides):
    cls = IsingDesign if kind == "ising" else GgmDesign
    names = {f.name for f in fields(cls)}
    unknown = set(overrides) - names
    if unknown:
        raise ConfigError(f"unknown design fields for {kind}: {sorted(unknown)}")
    values = {f.name: getattr(base, f.name) for f in fields(cls)} if base is not None else {}
    values.update(overrides)
    if kind == "ising" and values.get("templates") is not None:
        values["templates"] = tuple(tuple(tuple(e) for e in t) for t in values["templates"])
    try:
        return cls(**values)
    except TypeError as exc:
        raise ConfigError(f"incomplete design: {exc}") from exc


def resolve_simulation(args) -> dict:
    """Merge preset, config file and flags into one experiment description."""
    cfg = _load_config(args.config) if args.config else {}
    flags = {k: getattr(args, k) for k in ("d", "m1", "m2", "m3", "n", "q", "K", "mu0", "mu1", "reps", "seed",
                                             "theta", "power_c", "parallelism")}
    flags["lambda"] = args.lam
    flags["shape"] = args.shape.split(",") if args.shape else None
    flags = {k: v for k, v in flags.items() if v is not None}
    preset = args.preset or cfg.get("preset")
    merged = {**cfg, **flags}
    if preset not in (None, "table1", "table2", "homology"):
        raise ConfigError(f"unknown preset {preset!r}")
    experiment = merged.get("experiment") or ("homology" if preset == "homology" else "features")
    model = merged.get("model") or ("ising" if preset == "table2" else "ggm")
    if experiment not in ("features", "homology") or model not in ("ggm", "ising"):
        raise ConfigError(f"bad experiment/model combination {experiment!r}/{model!r}")
    if experiment == "homology" and model != "ggm":
        raise ConfigError("the homology experiment uses the Gaussian model")
    design_over = dict(merged.get("design") or {})
    for k in ("m1", "m2", "m3"):
        if k in merged:
            design_over[k] = merged[k]
    if model == "ising":
        if "d" in merged:
            design_over["d"] = merged["d"]
        if "theta" in merged:
            design_over["theta"] = merged["theta"]
        base = IsingDesign() if preset in (None, "table2") else None
    elif preset == "homology" or (preset is None and experiment == "homology"):
        base = homology_design()
    elif preset == "table1" or preset is None:
        d = merged.get("d", 200)
        if d in TABLE1_BLOCKS:
            base = table1_design(d)
        elif not all(k in design_over for k in ("m1", "m2", "m3")):
            raise ConfigError(f"table1 defines d in {sorted(TABLE1_BLOCKS)}; pass --m1 --m2 --m3 for other sizes")
        else:
            base = GgmDesign(0, 0, 0)
    else:
        raise ConfigError(f"preset {preset!r} does not fit model {model!r}")
    design = _design_from(model, base, design_over)
    if model == "ggm" and "d" in merged and "m1" in design_over and design.d != merged["d"]:
        raise ConfigError(f"d={merged['d']} disagrees with 3*m1 + 4*m2 + 5*m3 = {design.d}")
    seed = merged.get("seed")
    if seed is None:
        env = os.environ.get(SEED_ENV)
        try:
            seed = int(env) if env else 0
        except ValueError as exc:
            raise ConfigError(f"${SEED_ENV} must be an integer, got {env!r}") from exc
    out = {
        "experiment": experiment,
        "model": model,
        "preset": preset,
        "design": design,
        "n": int(merged.get("n", 400)),
        "q": float(merged.get("q", 0.05)),
        "reps": int(merged.get("reps", 100)),
        "seed": int(seed),
        "parallelism": int(merged.get("parallelism") or os.cpu_count() or 1),
        "lambda": merged.get("lambda"),
    }
    if not 0.0 < out["q"] < 1.0:
        raise ConfigError(f"q must lie in (0, 1), got {out['q']}")
    if out["reps"] < 1 or out["n"] < 2:
        raise ConfigError("reps must be >= 1 and n >= 2")
    if experiment == "homology":
        out.update(K=int(merged.get("K", 2)), mu0=float(merged.get("mu0", 0.0)), mu1=float(merged.get("mu1", 1.0)),
                   power_c=float(merged.get("power_c", 1.0)))
        _check_K(out["K"], design.d)
        if not out["mu0"] < out["mu1"] or not math.isfinite(out["mu1"]):
            raise ConfigError("the homology experiment needs finite mu0 < mu1")
    else:
        shape = merged.get("shape") or (["path:5"] if model == "ising" else ["triangle"])
        shape = [shape] if isinstance(shape, str) else list(shape)
        try:
            out["shapes"] = [parse_shape(s) for s in shape]
        except (ValueError, OSError) as exc:
            raise ConfigError(f"bad shape: {exc}") from exc
    return out


def cmd_simulate(args) -> int:
    cfg = resolve_simulation(args)
    if cfg["experiment"] == "homology":
        report = run_homology_experiment(cfg["design"], cfg["n"], cfg["q"], cfg["K"], cfg["mu0"], cfg["mu1"],
                                         cfg["reps"], cfg["seed"], cfg["parallelism"], lam=cfg["lambda"],
                                         power_c=cfg["power_c"])
    else:
        report = run_feature_experiment(cfg["design"], cfg["shapes"], cfg["n"], cfg["q"], cfg["reps"], cfg["seed"],
                                        cfg["parallelism"], model=cfg["model"], lam=cfg["lambda"])
    report.config["preset"] = cfg["preset"]
    report.config["parallelism"] = cfg["parallelism"]
    prefix = args.out
    Path(prefix + ".json").write_text(report.to_json() + "\n", encoding="utf-8")
    Path(prefix + ".csv").write_text(report.to_csv(), encoding="utf-8")
    for name, row in report.summary().items():
        print(name + ": " + ", ".join(f"{k}={v:.4f}" for k, v in row.items()))
    if report.errors:
        print(f"{len(report.errors)} repetition(s) failed; see {prefix}.json", file=sys.stderr)
    return EXIT_OK


def cmd_rank(args) -> int:
    if args.d < 1:
        raise ConfigError(f"d must be positive, got {args.d}")
    _check_K(args.K, args.d)
    if not Path(args.edges).is_file():
        raise DataError(f"edge file not found: {args.edges}")
    try:
        rows = read_edge_csv(args.edges)
    except (ValueError, IndexError, OSError) as exc:
        raise DataError(f"cannot read {args.edges}: {exc}") from exc
    edges = set()
    for u, v, _ in rows:
        if u == v or not (0 <= u < args.d and 0 <= v < args.d):
            raise DataError(f"edge ({u}, {v}) is not a pair of distinct vertices in 0..{args.d - 1}")
        edges.add((min(u, v), max(u, v)))
    per_dim = cycle_rank(edges, args.d, args.K, per_dim=True)
    total = sum(per_dim)
    if args.json:
        print(json.dumps({"d": args.d, "K": args.K, "rank": total, "per_dimension": per_dim}))
    else:
        print(total)
        for k, r in enumerate(per_dim, start=1):
            print(f"dim {k}: {r}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always", NonConvergence)
            return args.func(args)
    except ConfigError as exc:
        print(f"graphfdr {args.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"graphfdr {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DegenerateDenominator, DegenerateVariance, CholeskyFailure, BudgetExceeded, ArithmeticError) as exc:
        print(f"graphfdr {args.command}: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
