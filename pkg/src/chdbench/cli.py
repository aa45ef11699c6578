"""Command-line front end.

Every command writes into a fresh ``<out>/<command>-<timestamp>/`` directory
holding its CSV outputs and a ``manifest.json`` that is enough to reproduce
them. Settings come from built-in defaults, then an optional JSON config
file, then command-line flags (flags win).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .cutoff import MODEL_KINDS, equilibrium_sampling
from .dataset import DataError, Dataset, filter_by_sex, ingest_csv, prevalence, project, select
from .harness import (
    ALGORITHMS,
    LOGISTIC_VARIANTS,
    ExperimentSpec,
    HarnessError,
    default_workers,
    logistic_variants_study,
    ratio_study,
    result_row,
    run,
    significance_study,
)
from .hierarchy import HIERARCHY_METRICS, Scorer, exhaustive_search, greedy_search
from .metrics import matrix_csv, render_table
from .splitter import SCENARIOS, InfeasibleSplit

log = logging.getLogger("chdbench")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_COMPUTE = 4

DATA_ENV = "CHD_DATA"
REPORT_VARS = (1, 2, 4, 5, 6, 7)

DEFAULTS: dict[str, Any] = {
    "data": None,
    "column_map": None,
    "scenario": "all",
    "tau": 0.8,
    "tau_list": None,
    "algos": None,
    "sims": None,
    "seed": 2024,
    "metric": "tpr",
    "sex": "all",
    "vars": None,
    "exhaustive": False,
    "out": "runs",
    "workers": None,
    "model": "both",
    "alpha": [0.01, 0.05, 0.10],
}

# per-command sim counts: comparisons use 100, significance/hierarchy studies 1000
DEFAULT_SIMS = {"cutoff": 100, "compare": 100, "hierarchy": 1000, "report": 1000,
                "significance": 1000, "variants": 1000}


class ConfigError(Exception):
    def __init__(self, problems: Sequence[str]):
        super().__init__("; ".join(problems))
        self.problems = list(problems)


@dataclass
class RunConfig:
    command: str
    data: str
    column_map: dict | None
    scenarios: list[str]
    taus: list[float]
    algorithms: list[str]
    n_sims: int
    seed: int
    metric: str
    sex: str
    vars: list[int] | None
    exhaustive: bool
    out: str
    workers: int
    model: str
    alphas: list[float]

    def manifest(self) -> dict:
        d = dict(self.__dict__)
        d.pop("out")
        d.pop("workers")
        return d


def _parse_list(value, cast, name, problems):
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        items = list(value)
    else:
        items = [v for v in str(value).replace(";", ",").split(",") if v.strip()]
    try:
        return [cast(v.strip() if isinstance(v, str) else v) for v in items]
    except (TypeError, ValueError):
        problems.append(f"{name}: cannot parse {value!r}")
        return None


def _parse_vars(value, problems):
    if value is None:
        return None
    if isinstance(value, str) and value.isdigit() and "," not in value:
        value = list(value)
    out = _parse_list(value, int, "vars", problems)
    if out is not None and (not out or any(v < 1 or v > 7 for v in out)):
        problems.append(f"vars: indices must be within 1..7, got {value!r}")
    return sorted(set(out)) if out else out


def build_config(command: str, args: argparse.Namespace) -> RunConfig:
    """Merge defaults, config file and flags, and validate everything at once."""
    merged = dict(DEFAULTS)
    if command == "report":
        merged["scenario"] = "eq-prop"
    problems: list[str] = []
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
            if not isinstance(loaded, dict):
                raise ValueError("top level must be an object")
            merged.update({k.replace("-", "_"): v for k, v in loaded.items()})
        except (OSError, ValueError) as exc:
            problems.append(f"config: cannot read {args.config}: {exc}")
    for key, value in vars(args).items():
        if key not in ("config", "command", "verbose") and value is not None:
            merged[key] = value

    data = merged["data"] or os.environ.get(DATA_ENV)
    if not data:
        problems.append(f"data: no data path (use --data or set {DATA_ENV})")

    scen = str(merged["scenario"])
    scenarios = list(SCENARIOS) if scen == "all" else [s for s in scen.split(",") if s]
    bad = [s for s in scenarios if s not in SCENARIOS]
    if bad:
        problems.append(f"scenario: unknown {bad}; expected one of {list(SCENARIOS)} or 'all'")

    taus = _parse_list(merged["tau_list"], float, "tau-list", problems) if merged["tau_list"] else None
    if taus is None:
        try:
            taus = [float(merged["tau"])]
        except (TypeError, ValueError):
            problems.append(f"tau: cannot parse {merged['tau']!r}")
            taus = []
    if any(not 0 < t < 1 for t in taus):
        problems.append(f"tau: values must lie in (0, 1), got {taus}")

    algos = _parse_list(merged["algos"], str, "algos", problems)
    if algos is None:
        algos = ["DDS1"] if command in ("hierarchy", "report") else list(ALGORITHMS)
    unknown = [a for a in algos if a not in ALGORITHMS]
    if unknown:
        problems.append(f"algos: unknown {unknown}; expected from {list(ALGORITHMS)}")
    if command == "hierarchy" and len(algos) != 1:
        problems.append("algos: hierarchy search takes exactly one algorithm")

    sims = merged["sims"] if merged["sims"] is not None else DEFAULT_SIMS.get(command, 100)
    try:
        sims = int(sims)
        if sims < 1:
            raise ValueError
    except (TypeError, ValueError):
        problems.append(f"sims: must be a positive integer, got {merged['sims']!r}")
        sims = 0

    try:
        seed = int(merged["seed"])
    except (TypeError, ValueError):
        problems.append(f"seed: must be an integer, got {merged['seed']!r}")
        seed = 0

    metric = merged["metric"]
    if metric not in HIERARCHY_METRICS:
        problems.append(f"metric: expected one of {HIERARCHY_METRICS}, got {metric!r}")
    sex = merged["sex"]
    if sex not in ("all", "male", "female"):
        problems.append(f"sex: expected all, male or female, got {sex!r}")
    model = merged["model"]
    if model not in (*MODEL_KINDS, "both"):
        problems.append(f"model: expected logistic, forest or both, got {model!r}")
    alphas = _parse_list(merged["alpha"], float, "alpha", problems) or []
    if any(not 0 < a < 1 for a in alphas):
        problems.append(f"alpha: levels must lie in (0, 1), got {alphas}")
    column_map = merged["column_map"]
    if isinstance(column_map, str):
        try:
            column_map = json.loads(column_map)
        except ValueError:
            problems.append("column-map: must be a JSON object")
    workers = merged["workers"]
    try:
        workers = default_workers() if workers is None else int(workers)
        if workers < 1:
            raise ValueError
    except (TypeError, ValueError):
        problems.append(f"workers: must be a positive integer, got {merged['workers']!r}")
        workers = 1
    vars_ = _parse_vars(merged["vars"], problems)
    if command == "report" and vars_ is None:
        vars_ = list(REPORT_VARS)

    if problems:
        raise ConfigError(problems)
    return RunConfig(command, data, column_map, scenarios, taus, algos, sims, seed, metric, sex, vars_,
                     bool(merged["exhaustive"]), str(merged["out"]), workers, model, alphas)


# --- output helpers --------------------------------------------------------

def _run_dir(out: str, command: str) -> Path:
    stamp = time.strftime("%Y%m%d-%H%M%S")
    base = Path(out) / f"{command}-{stamp}"
    path, k = base, 1
    while path.exists():
        path = Path(f"{base}-{k}")
        k += 1
    path.mkdir(parents=True)
    return path


def _write_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        path.write_text("")
        return
    fields: list[str] = []
    for r in rows:
        fields.extend(k for k in r if k not in fields)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in fields})


def _write_manifest(path: Path, cfg: RunConfig, d: Dataset, **extra) -> None:
    manifest = {
        "tool": "chdbench",
        "version": __version__,
        "command": cfg.command,
        "config": cfg.manifest(),
        "dataset": {"fingerprint": d.fingerprint(), "N": d.n, "N1": d.n1, "N2": d.n2},
        **extra,
    }
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")


def _pct(v) -> str:
    return "undef" if v is None else f"{100 * v:.2f}%"


def _load(cfg: RunConfig) -> Dataset:
    return ingest_csv(cfg.data, cfg.column_map)


def _data_note(d: Dataset) -> list[str]:
    if (d.n, d.n1, d.n2) != (4142, 622, 3520):
        return [f"complete-case counts N={d.n} N1={d.n1} N2={d.n2} differ from the published 4142/622/3520"]
    return []


# --- commands ---------------------------------------------------------------

def cmd_ingest(cfg: RunConfig) -> int:
    d = _load(cfg)
    shown = select(d, cfg.sex)
    lines = []
    if shown.n:
        lines.append(f"N={shown.n} N1={shown.n1} N2={shown.n2} prevalence={_pct(prevalence(shown))}")
    else:
        lines.append("N=0 N1=0 N2=0 prevalence=undef")
    if cfg.sex == "all":
        for sex in ("male", "female"):
            part = filter_by_sex(d, sex)
            prev = _pct(prevalence(part)) if part.n else "undef"
            lines.append(f"{sex}: N={part.n} N1={part.n1} N2={part.n2} prevalence={prev}")
        missing = sum(s is None for s in d.sex)
        if missing:
            lines.append(f"rows without sex: {missing}")
    print("\n".join(lines))
    return EXIT_OK


def cmd_cutoff(cfg: RunConfig) -> int:
    d = select(_load(cfg), cfg.sex)
    if cfg.vars:
        d = project(d, cfg.vars)
    out = _run_dir(cfg.out, "cutoff")
    kinds = list(MODEL_KINDS) if cfg.model == "both" else [cfg.model]
    curve_rows, summary = [], []
    for kind in kinds:
        for sc in cfg.scenarios:
            for tau in cfg.taus:
                res = equilibrium_sampling(d, SCENARIOS[sc], tau, kind, cfg.n_sims, cfg.seed)
                for rec in res.records:
                    for c, tp, fp, fn, tn in rec.curves.rows():
                        curve_rows.append({"model": kind, "scenario": sc, "tau": tau, "sim": rec.sim,
                                           "cutoff": c, "tp": tp, "fp": fp, "fn": fn, "tn": tn})
                row = {"model": kind, "scenario": sc, "tau": tau, "n_sims": cfg.n_sims,
                       "failed_sims": len(res.failures)}
                for name, pt in res.pair_points.items():
                    row[f"{name}_x"] = None if pt is None else pt[0]
                    row[f"{name}_y"] = None if pt is None else pt[1]
                row["centroid_x"], row["centroid_y"] = res.centroid
                row["equilibrium_cutoff"] = res.equilibrium_cutoff
                summary.append(row)
                print(f"{kind:8s} {sc:9s} tau={tau:g}  equilibrium cutoff = {100 * res.equilibrium_cutoff:.2f}%")
    _write_csv(out / "curves.csv", curve_rows)
    _write_csv(out / "summary.csv", summary)
    _write_manifest(out, cfg, d, notes=_data_note(d))
    print(f"wrote {out}")
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    data = _load(cfg)
    out = _run_dir(cfg.out, "compare")
    rows = ratio_study(data, cfg.taus, cfg.scenarios, cfg.algorithms, cfg.n_sims, cfg.seed, cfg.sex,
                       cfg.vars, cfg.workers)
    _write_csv(out / "compare.csv", rows)
    print(f"{'algo':6s} {'scenario':9s} {'tau':>4s} {'Acc%':>7s} {'TPR%':>7s} {'TNR%':>7s}")
    for r in rows:
        print(f"{r['algorithm']:6s} {r['scenario']:9s} {r['tau']:4.2g} {_pct(r['acc'])[:-1]:>7s} "
              f"{_pct(r['tpr'])[:-1]:>7s} {_pct(r['tnr'])[:-1]:>7s}")
    d = select(data, cfg.sex)
    _write_manifest(out, cfg, d, notes=_data_note(d))
    print(f"wrote {out}")
    return EXIT_OK


def cmd_hierarchy(cfg: RunConfig) -> int:
    data = _load(cfg)
    d = select(data, cfg.sex)
    if cfg.vars:
        d = project(d, cfg.vars)
    out = _run_dir(cfg.out, "hierarchy")
    algo = cfg.algorithms[0]
    trace_rows, subset_rows, traces = [], [], {}
    for sc in cfg.scenarios:
        for tau in cfg.taus:
            scorer = Scorer(d, sc, tau, algo, cfg.metric, cfg.n_sims, cfg.seed, "all", cfg.workers)
            trace = greedy_search(d, sc, tau, algo, cfg.metric, cfg.n_sims, cfg.seed, scorer=scorer)
            for r in trace.rows():
                trace_rows.append({"scenario": sc, "tau": tau, "metric": cfg.metric, **r})
            traces[f"{sc}@{tau:g}"] = {
                "order": trace.order,
                "prefix_scores": trace.prefix_scores,
                "evaluations": trace.evaluations,
                "stopped_because": trace.stopped_because,
            }
            print(f"{sc:9s} tau={tau:g}  order={tuple(trace.order)}  "
                  f"scores={[round(100 * s, 2) for s in trace.prefix_scores]}  evaluations={trace.evaluations}")
            if cfg.exhaustive:
                ranked = exhaustive_search(d, sc, tau, algo, cfg.metric, cfg.n_sims, cfg.seed, scorer=scorer)
                for rank, s in enumerate(ranked, start=1):
                    subset_rows.append({"scenario": sc, "tau": tau, "rank": rank,
                                        "vars": "-".join(map(str, s.vars)), "size": len(s.vars),
                                        "mean_metric": s.mean_metric})
                print(f"{'':9s} exhaustive: {len(ranked)} subsets, best {ranked[0].vars} "
                      f"= {100 * ranked[0].mean_metric:.2f}%")
    _write_csv(out / "trace.csv", trace_rows)
    (out / "trace.json").write_text(json.dumps(traces, indent=2, sort_keys=True) + "\n")
    if cfg.exhaustive:
        _write_csv(out / "subsets.csv", subset_rows)
    _write_manifest(out, cfg, d, notes=_data_note(d))
    print(f"wrote {out}")
    return EXIT_OK


def cmd_report(cfg: RunConfig) -> int:
    data = _load(cfg)
    out = _run_dir(cfg.out, "report")
    texts, rows = [], []
    for sc in cfg.scenarios:
        for tau in cfg.taus:
            spec = ExperimentSpec(sc, tau, tuple(cfg.algorithms), cfg.n_sims, cfg.seed, cfg.sex, tuple(cfg.vars))
            res = run(spec, data, workers=cfg.workers)
            for algo in spec.algorithms:
                m = res.means[algo]
                title = (f"{algo}, vars {tuple(cfg.vars)}, {SCENARIOS[sc].label}, tau={tau:g}, "
                         f"sex={cfg.sex}, {cfg.n_sims} sims")
                texts.append(render_table(m, title))
                (out / f"matrix_{algo}_{sc}_{tau:g}.csv").write_text(matrix_csv(m))
                rows.append(result_row(res, algo))
    text = "\n".join(texts)
    (out / "matrix.txt").write_text(text)
    _write_csv(out / "summary.csv", rows)
    print(text, end="")
    d = select(data, cfg.sex)
    _write_manifest(out, cfg, d, notes=_data_note(d))
    print(f"wrote {out}")
    return EXIT_OK


def cmd_significance(cfg: RunConfig) -> int:
    data = _load(cfg)
    out = _run_dir(cfg.out, "significance")
    rows = []
    for sc in cfg.scenarios:
        res = significance_study(data, sc, cfg.taus[0], cfg.alphas, cfg.n_sims, cfg.seed, cfg.sex)
        rows.extend(res.rows())
    _write_csv(out / "significance.csv", rows)
    for r in rows:
        counts = " ".join(f"{k}={v}" for k, v in r.items() if k.startswith("X"))
        print(f"alpha={r['alpha']:<5g} {r['scenario']:9s} {counts}  unconverged={r['unconverged']}")
    d = select(data, cfg.sex)
    _write_manifest(out, cfg, d, notes=_data_note(d))
    print(f"wrote {out}")
    return EXIT_OK


def cmd_variants(cfg: RunConfig) -> int:
    data = _load(cfg)
    out = _run_dir(cfg.out, "variants")
    rows = []
    for sc in cfg.scenarios:
        res = logistic_variants_study(data, sc, cfg.taus[0], cfg.n_sims, cfg.seed, LOGISTIC_VARIANTS, cfg.sex)
        row = {"scenario": sc}
        for vs, m in res.items():
            row["tp_" + "".join(map(str, vs))] = m.counts.tp
        rows.append(row)
        print(f"{sc:9s} " + "  ".join(f"{k}={v:.2f}" for k, v in row.items() if k != "scenario"))
    _write_csv(out / "variants.csv", rows)
    d = select(data, cfg.sex)
    _write_manifest(out, cfg, d, notes=_data_note(d))
    print(f"wrote {out}")
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "cutoff": cmd_cutoff,
    "compare": cmd_compare,
    "hierarchy": cmd_hierarchy,
    "report": cmd_report,
    "significance": cmd_significance,
    "variants": cmd_variants,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--data", help=f"Framingham CSV (default: ${DATA_ENV})")
    common.add_argument("--column-map", dest="column_map", help="JSON object mapping internal keys to CSV headers")
    common.add_argument("--scenario", help="prop-prop, eq-prop, prop-eq, eq-eq or all")
    common.add_argument("--tau", type=float, help="training ratio (default 0.8)")
    common.add_argument("--tau-list", dest="tau_list", help="comma-separated training ratios")
    common.add_argument("--algos", help=f"comma-separated subset of {','.join(ALGORITHMS)}")
    common.add_argument("--sims", type=int, help="number of simulations")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--metric", help="tpr, tnr, acc or pprec")
    common.add_argument("--sex", help="all, male or female")
    common.add_argument("--vars", help="variable indices, e.g. 1,2,4 or 124")
    common.add_argument("--exhaustive", action="store_true", default=None, help="score all 2^p-1 subsets too")
    common.add_argument("--out", help="output root directory (default ./runs)")
    common.add_argument("--workers", type=int, help="parallel worker processes")
    common.add_argument("--model", help="cutoff: logistic, forest or both")
    common.add_argument("--alpha", help="significance: comma-separated levels")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="chdbench", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "ingest": "load the CSV and print group counts and prevalence",
        "cutoff": "sweep classifier cutoffs and estimate the equilibrium cutoff",
        "compare": "paired comparison of classification algorithms",
        "hierarchy": "greedy (and optionally exhaustive) variable hierarchy search",
        "report": "mean classification performance matrix",
        "significance": "Wald significance counts for logistic regression",
        "variants": "mean true positives of three logistic variable sets",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args.command, args)
    except ConfigError as exc:
        for p in exc.problems:
            print(f"config error: {p}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (InfeasibleSplit, HarnessError, ValueError, ArithmeticError) as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
