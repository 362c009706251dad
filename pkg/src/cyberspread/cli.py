"""Command-line entry point: ``cyberspread <command> ...``.

Every command first resolves its arguments and config files into one plain
mapping, then executes from that mapping alone. The mapping is written as a
JSON manifest next to the primary output; ``cyberspread replay`` runs it
again and reproduces the outputs byte for byte.

Exit codes: 0 success, 2 configuration or input error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import (FULL_FORMULA, PRICING_FORMULA, CoefficientFileError, DomainError,
                        LinearFit, CountFit, covariance_path, drop_one, fit_boxcox_model,
                        fit_negbin_model, overdispersion_test, quote, read_coefficients,
                        read_scenarios, write_coefficients, write_quotes, design_matrix)
from .engine import (EventLogError, SimConfig, read_event_log, run_trajectory,
                     trajectory_rng, write_event_log, write_snapshots)
from .experiment import (TABLE1_CASES, DatasetSchemaError, DesignRanges, SweepConfig,
                         graph_rng, read_dataset, run_sweep, write_dataset)
from .gausscop import CopulaSpec
from .graphgen import GraphError, NetworkSpec, read_edge_list, sample_scale_free, write_edge_list
from .plotdata import (SummaryFormatError, log_histogram, read_summary, step_counts,
                       write_histogram, write_step_counts, write_summary)
from .waiting import MomentSpec, weibull_from_moments

__all__ = ["main", "ConfigError", "EXIT_OK", "EXIT_CONFIG", "EXIT_RUNTIME",
           "manifest_path", "execute", "replay"]

logger = logging.getLogger("cyberspread")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

_INPUT_ERRORS = (DatasetSchemaError, CoefficientFileError, EventLogError, SummaryFormatError,
                 DomainError, FileNotFoundError, IsADirectoryError)


class ConfigError(ValueError):
    """Bad arguments, config contents or input files."""


# --------------------------------------------------------------------------
# config documents


def _read_document(path) -> tuple[dict, str]:
    """Parse a TOML or JSON file; syntax errors carry the line number."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from None
    if path.suffix.lower() == ".toml":
        import tomli

        try:
            data = tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a table/object")
    return data, text


def _line_of(text: str, key: str, section: str | None = None) -> int | None:
    """First line defining ``key`` (inside table ``section`` when given)."""
    lines = text.splitlines()
    start = 0
    if section is not None:
        head = re.compile(r'^\s*\[\s*"?' + re.escape(section) + r'"?\s*\]')
        hits = [i for i, ln in enumerate(lines) if head.search(ln)]
        if hits:
            start = hits[0] + 1
        else:
            # JSON: search after the opening of the section object
            hits = [i for i, ln in enumerate(lines) if f'"{section}"' in ln]
            start = hits[0] if hits else 0
    pat = re.compile(r'^\s*[{,]?\s*(\[\s*)?"?' + re.escape(key) + r'"?\s*[\]=:]')
    for i in range(start, len(lines)):
        if pat.search(lines[i]) or (start and f'"{key}"' in lines[i]):
            return i + 1
    return None


def _config_error(path, text, key, msg, section=None) -> ConfigError:
    line = _line_of(text, key, section) if key else None
    where = f"{path}:{line}" if line else str(path)
    return ConfigError(f"{where}: {msg}")


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _inputs(*paths) -> dict:
    out = {}
    for p in paths:
        if p is None:
            continue
        if not Path(p).exists():
            raise ConfigError(f"{p}: no such file")
        out[str(p)] = _digest(p)
    return out


def _check_inputs(params: dict) -> None:
    for path, digest in params.get("inputs", {}).items():
        if not Path(path).exists():
            raise ConfigError(f"{path}: input file is missing")
        if _digest(path) != digest:
            raise ConfigError(f"{path}: input file changed since the manifest was written")


# --------------------------------------------------------------------------
# manifests


def manifest_path(output) -> Path:
    return Path(str(output) + ".manifest.json")


def _write_manifest(command: str, params: dict) -> Path:
    doc = {
        "command": command,
        "version": __version__,
        "seed": params.get("seed"),
        "config": params,
        "outputs": {k: params[k] for k in params["output_keys"] if params.get(k)},
    }
    path = manifest_path(params[params["output_keys"][0]])
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def replay(manifest, out_dir=None, threads: int | None = None) -> dict:
    """Execute a manifest again, optionally writing outputs under ``out_dir``."""
    doc, _ = _read_document(manifest)
    try:
        command, params = doc["command"], dict(doc["config"])
    except KeyError as exc:
        raise ConfigError(f"{manifest}: missing field {exc}") from None
    if command not in _EXECUTORS:
        raise ConfigError(f"{manifest}: unknown command {command!r}")
    if doc.get("version") != __version__:
        logger.warning("manifest written by version %s, running %s", doc.get("version"),
                       __version__)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for key in params["output_keys"]:
            if params.get(key):
                params[key] = str(out_dir / Path(params[key]).name)
    if threads is not None and "threads" in params:
        params["threads"] = threads
    execute(command, params)
    return params


def execute(command: str, params: dict) -> None:
    """Run a resolved command and write its manifest."""
    _check_inputs(params)
    _EXECUTORS[command](params)
    _write_manifest(command, params)


# --------------------------------------------------------------------------
# gen-network


def _resolve_gen_network(args) -> dict:
    try:
        NetworkSpec(args.nodes, args.edges, args.gamma)
    except GraphError as exc:
        raise ConfigError(str(exc)) from None
    return {
        "nodes": args.nodes, "edges": args.edges, "gamma": args.gamma, "seed": args.seed,
        "max_rejections": args.max_rejections, "out": args.out, "output_keys": ["out"],
    }


def _run_gen_network(p: dict) -> None:
    spec = NetworkSpec(p["nodes"], p["edges"], p["gamma"])
    g = sample_scale_free(spec, graph_rng(p["seed"]), p["max_rejections"])
    write_edge_list(g, p["out"], p["gamma"])


# --------------------------------------------------------------------------
# simulate

_SIM_KEYS = {"network", "infection", "recovery", "rho", "horizon", "initial", "max_events",
             "runs", "seed"}


def _case_config(name: str) -> dict:
    r = TABLE1_CASES[name]
    return {
        "network": {"nodes": r.Nnode[0], "edges": r.Nedge[0], "gamma": r.Gam[0],
                    "resample": False},
        "infection": {"mean": r.mean_inf[0], "variance": r.var_inf[0]},
        "recovery": {"mean": r.mean_rec[0], "variance": r.var_rec[0]},
        "rho": r.par_cop[0], "horizon": 12.0, "initial": {"count": r.Ninf0[0]},
    }


def _moments(block, name, path, text) -> dict:
    if not isinstance(block, dict):
        raise _config_error(path, text, name, f"[{name}] must be a table")
    extra = set(block) - {"mean", "variance", "sd"}
    if extra:
        key = sorted(extra)[0]
        raise _config_error(path, text, key, f"unknown key in [{name}]: {key!r}", name)
    if "mean" not in block or ("variance" in block) == ("sd" in block):
        raise _config_error(path, text, name,
                            f"[{name}] needs 'mean' and exactly one of 'variance' or 'sd'")
    values = {}
    for key in block:
        try:
            values[key] = float(block[key])
        except (TypeError, ValueError):
            raise _config_error(path, text, key, f"[{name}] {key} must be a number",
                                name) from None
        if not (np.isfinite(values[key]) and values[key] > 0):
            raise _config_error(path, text, key, f"[{name}] {key} must be positive, "
                                f"got {block[key]}", name)
    var = values["variance"] if "variance" in values else values["sd"] ** 2
    return {"mean": values["mean"], "variance": var}


_NETWORK_FIELDS = (("gamma", "gamma"), ("node", "nodes"), ("edge", "edges"))


def _resolve_sim_document(doc: dict, path, text) -> tuple[dict, list]:
    unknown = set(doc) - _SIM_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise _config_error(path, text, key, f"unknown key {key!r}")
    for key in ("network", "infection", "recovery"):
        if key not in doc:
            raise ConfigError(f"{path}: missing [{key}] section")
    net = doc["network"]
    if not isinstance(net, dict):
        raise _config_error(path, text, "network", "[network] must be a table")
    inputs = []
    if "edge_list" in net:
        extra = set(net) - {"edge_list"}
        if extra:
            raise _config_error(path, text, "edge_list",
                                f"edge_list excludes {sorted(extra)} in [network]")
        el = Path(net["edge_list"])
        if not el.is_absolute() and path is not None:
            el = Path(path).parent / el
        try:
            g, _ = read_edge_list(el)
        except (OSError, GraphError) as exc:
            raise _config_error(path, text, "edge_list", str(exc)) from None
        network = {"edge_list": str(el), "nodes": g.n}
        inputs.append(el)
    else:
        extra = set(net) - {"nodes", "edges", "gamma", "resample"}
        if extra:
            key = sorted(extra)[0]
            raise _config_error(path, text, key, f"unknown key in [network]: {key!r}", "network")
        try:
            spec = NetworkSpec(int(net["nodes"]), int(net["edges"]), float(net["gamma"]))
        except KeyError as exc:
            raise _config_error(path, text, "network", f"[network] is missing {exc}") from None
        except (TypeError, ValueError) as exc:
            key = next((k for word, k in _NETWORK_FIELDS if word in str(exc)), "network")
            raise _config_error(path, text, key, str(exc), "network") from None
        network = {"nodes": spec.n, "edges": spec.m, "gamma": spec.gamma,
                   "resample": bool(net.get("resample", False))}
    init = doc.get("initial", {"count": 1})
    if not isinstance(init, dict) or len(init) != 1 or not set(init) <= {"count", "nodes"}:
        raise _config_error(path, text, "initial",
                            "[initial] needs exactly one of 'count' or 'nodes'")
    if "count" in init:
        initial = {"count": int(init["count"])}
        if not 0 <= initial["count"] <= network["nodes"]:
            raise _config_error(path, text, "count",
                                f"initial count must lie in 0..{network['nodes']}")
    else:
        nodes = sorted(set(int(i) for i in init["nodes"]))
        if any(not 0 <= i < network["nodes"] for i in nodes):
            raise _config_error(path, text, "nodes", "initial nodes must be valid node ids")
        initial = {"nodes": nodes}
    try:
        rho = float(doc.get("rho", 0.5))
        CopulaSpec(rho)
    except (TypeError, ValueError) as exc:
        raise _config_error(path, text, "rho", str(exc)) from None
    horizon = float(doc.get("horizon", 12.0))
    if not (np.isfinite(horizon) and horizon > 0):
        raise _config_error(path, text, "horizon", "horizon must be positive")
    out = {
        "network": network,
        "infection": _moments(doc["infection"], "infection", path, text),
        "recovery": _moments(doc["recovery"], "recovery", path, text),
        "rho": rho, "horizon": horizon, "initial": initial,
        "max_events": int(doc.get("max_events", 10_000_000)),
        "runs": int(doc.get("runs", 1)), "seed": int(doc.get("seed", 0)),
    }
    return out, inputs


def _resolve_simulate(args) -> dict:
    if (args.config is None) == (args.case is None):
        raise ConfigError("simulate needs exactly one of --config or --case")
    if args.case is not None:
        doc, path, text = _case_config(args.case), None, ""
    else:
        path = args.config
        doc, text = _read_document(path)
    p, inputs = _resolve_sim_document(doc, path, text)
    if args.runs is not None:
        p["runs"] = args.runs
    if args.seed is not None:
        p["seed"] = args.seed
    if p["runs"] < 0 or p["seed"] < 0:
        raise ConfigError("runs and seed must be nonnegative")
    p.update(threads=args.threads, case=args.case, out_summary=args.out_summary,
             out_events=args.out_events, out_snapshots=args.out_snapshots,
             output_keys=["out_summary", "out_events", "out_snapshots"],
             inputs=_inputs(*inputs))
    return p


@dataclass(frozen=True)
class _SimPlan:
    """A ready-made config (shared graph) or the recipe for one graph per run."""

    config: SimConfig | None
    spec: NetworkSpec | None
    options: dict
    record: bool


def _sim_plan(p: dict) -> _SimPlan:
    init = p["initial"]
    options = {
        "infection": weibull_from_moments(MomentSpec(**p["infection"])),
        "recovery": weibull_from_moments(MomentSpec(**p["recovery"])),
        "rho": p["rho"], "horizon": p["horizon"], "max_events": p["max_events"],
        "initial_infected": tuple(init["nodes"]) if "nodes" in init else None,
        "n_initial": init.get("count", 1),
    }
    record = bool(p.get("out_events") or p.get("out_snapshots"))
    net = p["network"]
    if "edge_list" in net:
        g, _ = read_edge_list(net["edge_list"])
        return _SimPlan(SimConfig(g, **options), None, options, record)
    spec = NetworkSpec(net["nodes"], net["edges"], net["gamma"])
    if net["resample"]:
        return _SimPlan(None, spec, options, record)
    g = sample_scale_free(spec, graph_rng(p["seed"]))
    return _SimPlan(SimConfig(g, **options), None, options, record)


def _simulate_one(plan: _SimPlan, seed: int, index: int):
    rng = trajectory_rng(seed, index)
    cfg = plan.config
    if cfg is None:
        cfg = SimConfig(sample_scale_free(plan.spec, rng), **plan.options)
    return run_trajectory(cfg, rng, record_events=plan.record)


def _run_simulate(p: dict) -> None:
    plan = _sim_plan(p)
    runs = p["runs"]
    work = partial(_simulate_one, plan, p["seed"])
    threads = p.get("threads", 1)
    for key in ("out_events", "out_snapshots"):
        if p.get(key):
            Path(p[key]).mkdir(parents=True, exist_ok=True)
    if threads <= 1 or runs < 2:
        results = map(work, range(runs))
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=threads)
        results = pool.map(work, range(runs), chunksize=max(1, runs // (8 * threads)))
    summaries = []
    try:
        for i, s in enumerate(results):
            if p.get("out_events"):
                write_event_log(s.events, Path(p["out_events"]) / f"run_{i:05d}.csv")
            if p.get("out_snapshots"):
                write_snapshots(s, Path(p["out_snapshots"]) / f"run_{i:05d}.txt")
            summaries.append(s)
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    write_summary(summaries, p["out_summary"])


# --------------------------------------------------------------------------
# sweep


def _resolve_sweep(args) -> dict:
    if args.ranges is not None:
        doc, text = _read_document(args.ranges)
        try:
            cfg = SweepConfig.from_mapping(doc)
        except (TypeError, ValueError) as exc:
            m = re.search(r"'(\w+)'", str(exc))
            raise _config_error(args.ranges, text, m.group(1) if m else None, str(exc)) from None
    else:
        try:
            ranges = DesignRanges.from_mapping({"preset": args.preset})
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        cfg = SweepConfig(ranges)
    over = {}
    if args.n is not None:
        over["sample_size"] = args.n
    if args.seed is not None:
        over["seed"] = args.seed
    try:
        cfg = SweepConfig.from_mapping({**cfg.to_mapping(), **over})
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    p = cfg.to_mapping()
    p.update(threads=args.threads, on_error=args.on_error, out=args.out, output_keys=["out"])
    return p


def _run_sweep(p: dict) -> None:
    keys = ("ranges", "sample_size", "replications", "horizon", "seed", "fixed_graph")
    cfg = SweepConfig.from_mapping({k: p[k] for k in keys})
    data = run_sweep(cfg, threads=p.get("threads", 1), on_error=p.get("on_error", "raise"))
    for f in data.failures:
        print(f"row {f.row} failed: {f.message}", file=sys.stderr)
    write_dataset(data, p["out"])


# --------------------------------------------------------------------------
# fit

_RESPONSES = {"tinf": "Tinf", "nrec": "Nrec"}


def _resolve_fit(args) -> dict:
    return {
        "dataset": args.dataset, "model": args.model, "formula": args.formula,
        "lambda": args.lam, "out_coeffs": args.out_coeffs, "out_anova": args.out_anova,
        "output_keys": ["out_coeffs", "out_anova"], "inputs": _inputs(args.dataset),
    }


def _write_anova(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("term,df,change,criterion,statistic,pvalue\n")
        for r in rows:
            vals = [r.change, r.criterion, r.statistic, r.pvalue]
            fh.write(f"{r.term},{r.df}," + ",".join(f"{v:.10g}" for v in vals) + "\n")


def _run_fit(p: dict) -> None:
    data = read_dataset(p["dataset"])
    if not data.rows:
        raise ConfigError(f"{p['dataset']}: dataset has no rows")
    response = _RESPONSES[p["model"]]
    formula = (FULL_FORMULA if p["formula"] == "full" else PRICING_FORMULA)[response]
    if p["model"] == "tinf":
        fit = fit_boxcox_model(data, formula, lam=p["lambda"])
        print(f"lambda = {fit.lam:.6g}")
    else:
        fit = fit_negbin_model(data, formula)
        X, y = design_matrix(data, formula)
        t, pval = overdispersion_test(X, y)
        print(f"theta = {fit.theta:.6g}; overdispersion t = {t:.4g} (one-sided p = {pval:.3g})")
    write_coefficients(fit, p["out_coeffs"])
    if p.get("out_anova"):
        _write_anova(drop_one(fit, data), p["out_anova"])


# --------------------------------------------------------------------------
# price


def _resolve_price(args) -> dict:
    if args.omega < 0 or args.eta < 0:
        raise ConfigError("--omega and --eta must be nonnegative")
    sidecars = [covariance_path(c) for c in (args.coeffs_tinf, args.coeffs_nrec)]
    return {
        "coeffs_tinf": args.coeffs_tinf, "coeffs_nrec": args.coeffs_nrec,
        "scenarios": args.scenarios, "omega": args.omega, "eta": args.eta,
        "decimals": args.decimals, "out": args.out, "output_keys": ["out"],
        "inputs": _inputs(args.coeffs_tinf, args.coeffs_nrec, args.scenarios,
                          *[s for s in sidecars if s.exists()]),
    }


def _run_price(p: dict) -> None:
    tinf_fit = read_coefficients(p["coeffs_tinf"])
    nrec_fit = read_coefficients(p["coeffs_nrec"])
    if not isinstance(tinf_fit, LinearFit) or not isinstance(nrec_fit, CountFit):
        raise ConfigError("--coeffs-tinf needs a lambda= file and --coeffs-nrec a theta= file")
    try:
        scen = read_scenarios(p["scenarios"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    n = len(next(iter(scen.values()))) if scen else 0
    if n == 0:
        write_quotes([], p["out"], decimals=p["decimals"])
        return
    # published coefficients carry no covariance; then the scenario file may supply s.e.
    se_t, se_n = scen.pop("se_tinf", None), scen.pop("se_nrec", None)
    if tinf_fit.cov is not None:
        se_t = None
    if nrec_fit.cov is not None:
        se_n = None
    try:
        quotes = quote(tinf_fit, nrec_fit, scen, p["omega"], p["eta"], se_t, se_n)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{p['scenarios']}: {exc}") from None
    write_quotes(quotes, p["out"], decimals=p["decimals"])


# --------------------------------------------------------------------------
# plotdata


def _resolve_plotdata(args) -> dict:
    allowed = {("summary", "histogram"), ("events", "trajectories")}
    if (args.source, args.kind) not in allowed:
        raise ConfigError(f"--kind {args.kind} cannot be built from --from {args.source}; "
                          "use summary/histogram or events/trajectories")
    src = Path(args.input)
    if not src.exists():
        raise ConfigError(f"{src}: no such file or directory")
    files = sorted(src.glob("*.csv")) if src.is_dir() else [src]
    if args.bins < 1:
        raise ConfigError("--bins must be positive")
    return {
        "source": args.source, "kind": args.kind, "input": str(src), "bins": args.bins,
        "initial": args.initial, "horizon": args.horizon, "out": args.out,
        "output_keys": ["out"], "inputs": _inputs(*files),
    }


def _run_plotdata(p: dict) -> None:
    if p["source"] == "summary":
        tinf = read_summary(p["input"])["Tinf"] if Path(p["input"]).stat().st_size else []
        edges, counts, dropped = log_histogram(tinf, p["bins"])
        if dropped:
            print(f"{dropped} runs with Tinf = 0 left out of the log histogram", file=sys.stderr)
        write_histogram(edges, counts, p["out"])
        return
    files = sorted(p["inputs"])
    many = Path(p["input"]).is_dir()
    write_step_counts([], [], p["out"], run=0 if many else None)
    for k, f in enumerate(files):
        if Path(f).stat().st_size == 0:
            continue
        times, counts = step_counts(read_event_log(f), p["initial"], p["horizon"])
        write_step_counts(times, counts, p["out"], run=k if many else None, append=True)


_EXECUTORS = {
    "gen-network": _run_gen_network,
    "simulate": _run_simulate,
    "sweep": _run_sweep,
    "fit": _run_fit,
    "price": _run_price,
    "plotdata": _run_plotdata,
}

_RESOLVERS = {
    "gen-network": _resolve_gen_network,
    "simulate": _resolve_simulate,
    "sweep": _resolve_sweep,
    "fit": _resolve_fit,
    "price": _resolve_price,
    "plotdata": _resolve_plotdata,
}


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cyberspread", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-network", help="sample a scale-free graph to an edge list")
    g.add_argument("--nodes", type=int, required=True)
    g.add_argument("--edges", type=int, required=True)
    g.add_argument("--gamma", type=float, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--max-rejections", type=int, default=None)
    g.add_argument("--out", required=True)

    s = sub.add_parser("simulate", help="run trajectories on one network")
    s.add_argument("--config", help="TOML or JSON simulation config")
    s.add_argument("--case", choices=sorted(TABLE1_CASES), help="built-in small-network case")
    s.add_argument("--runs", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--out-summary", required=True)
    s.add_argument("--out-events", help="directory for per-run event logs")
    s.add_argument("--out-snapshots", help="directory for per-run infected-set dumps")

    w = sub.add_parser("sweep", help="random-design sweep to a dataset CSV")
    w.add_argument("--ranges", help="TOML or JSON sweep config")
    w.add_argument("--preset", choices=("defaults", "case_study"), default="defaults",
                   help="ranges to use without --ranges")
    w.add_argument("--n", type=int, help="sample size (overrides the config)")
    w.add_argument("--seed", type=int)
    w.add_argument("--threads", type=int, default=1)
    w.add_argument("--on-error", choices=("raise", "record"), default="raise")
    w.add_argument("--out", required=True)

    f = sub.add_parser("fit", help="fit the Tinf (Box-Cox OLS) or Nrec (NB) model")
    f.add_argument("--dataset", required=True)
    f.add_argument("--model", choices=sorted(_RESPONSES), required=True)
    f.add_argument("--formula", choices=("full", "pricing"), default="full")
    f.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="fixed Box-Cox parameter (default: profile likelihood)")
    f.add_argument("--out-coeffs", required=True)
    f.add_argument("--out-anova", help="drop-one table")

    p = sub.add_parser("price", help="expected-loss quotes for scenarios")
    p.add_argument("--coeffs-tinf", required=True)
    p.add_argument("--coeffs-nrec", required=True)
    p.add_argument("--scenarios", required=True)
    p.add_argument("--omega", type=float, required=True)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--decimals", type=int, default=6)
    p.add_argument("--out", required=True)

    d = sub.add_parser("plotdata", help="plot-ready tables from simulation outputs")
    d.add_argument("--from", dest="source", choices=("summary", "events"), required=True)
    d.add_argument("--kind", choices=("trajectories", "histogram"), required=True)
    d.add_argument("--input", required=True, help="summary CSV, event log, or event directory")
    d.add_argument("--bins", type=int, default=30)
    d.add_argument("--initial", type=int, default=1, help="infected count at time 0")
    d.add_argument("--horizon", type=float, default=None)
    d.add_argument("--out", required=True)

    r = sub.add_parser("replay", help="re-run a command from its manifest")
    r.add_argument("manifest")
    r.add_argument("--out-dir", help="write outputs here instead of the recorded paths")
    r.add_argument("--threads", type=int)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        if args.command == "replay":
            replay(args.manifest, args.out_dir, args.threads)
        else:
            params = _RESOLVERS[args.command](args)
            execute(args.command, params)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # every other failure is a runtime failure
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
