"""Randomized parameter sweeps producing synthetic regression datasets.

Every row draws a covariate vector, samples a graph and runs one or more
trajectories. Row ``i`` owns the random stream ``SeedSequence(seed,
spawn_key=(i,))``, so a row's content never depends on which other rows were
run, in which order, or on how many workers were used.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from functools import partial
from pathlib import Path

import numpy as np

from .engine import SimConfig, SimulationError, run_trajectory
from .graphgen import Graph, NetworkSpec, sample_scale_free
from .waiting import MomentSpec, weibull_from_moments

__all__ = [
    "DesignRanges",
    "DatasetRow",
    "Dataset",
    "RowFailure",
    "SweepConfig",
    "SweepError",
    "DatasetSchemaError",
    "COLUMNS",
    "TABLE1_CASES",
    "draw_design",
    "row_config",
    "run_row",
    "run_sweep",
    "write_dataset",
    "read_dataset",
    "graph_rng",
]

logger = logging.getLogger(__name__)

COLUMNS = ("par_cop", "mean_rec", "var_rec", "mean_inf", "var_inf",
           "Nnode", "Nedge", "Gam", "Ninf0", "Tinf", "Nrec")
_INT_COLUMNS = {"Nnode", "Nedge", "Ninf0", "Nrec"}
_REAL_FMT = "{:.12g}"
_MAX_REDRAWS = 10_000


class SweepError(RuntimeError):
    """A row of a sweep failed; ``row`` is its index."""

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class DatasetSchemaError(ValueError):
    """A dataset file does not have the expected layout."""


Interval = tuple[float, float]
IntRange = tuple[int, int]


def _interval(v, name, integer=False):
    lo, hi = (v, v) if np.isscalar(v) else tuple(v)
    if integer:
        if int(lo) != lo or int(hi) != hi:
            raise ValueError(f"{name} bounds must be integers, got {v!r}")
        lo, hi = int(lo), int(hi)
    else:
        lo, hi = float(lo), float(hi)
    if not lo <= hi:
        raise ValueError(f"{name} interval is empty: {v!r}")
    return lo, hi


@dataclass(frozen=True)
class DesignRanges:
    """Sampling box for the nine sweep covariates.

    Continuous covariates are drawn uniformly on closed intervals and the
    integer ones uniformly on inclusive ranges; a point interval pins the
    covariate. ``spread`` says whether ``var_rec`` / ``var_inf`` bounds are
    variances or standard deviations (the dataset always stores variances).
    """

    par_cop: Interval = (0.1, 0.9)
    mean_rec: Interval = (0.1, 1.0)
    var_rec: Interval = (0.1, 1.0)
    mean_inf: Interval = (0.1, 6.0)
    var_inf: Interval = (0.1, 6.0)
    Nnode: IntRange = (20, 100)
    Nedge: IntRange = (80, 400)
    Gam: Interval = (2.0, 3.0)
    Ninf0: IntRange = (1, 5)
    spread: str = "variance"

    def __post_init__(self):
        for f in fields(self):
            if f.name == "spread":
                continue
            val = _interval(getattr(self, f.name), f.name, f.name in _INT_COLUMNS)
            object.__setattr__(self, f.name, val)
        if self.spread not in ("variance", "sd"):
            raise ValueError(f"spread must be 'variance' or 'sd', got {self.spread!r}")
        if not (0.0 <= self.par_cop[0] and self.par_cop[1] < 1.0):
            raise ValueError(f"par_cop must lie in [0, 1), got {self.par_cop}")
        for name in ("mean_rec", "var_rec", "mean_inf", "var_inf"):
            if getattr(self, name)[0] <= 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.Gam[0] <= 1.0:
            raise ValueError(f"Gam must exceed 1, got {self.Gam}")
        if self.Nnode[0] < 2 or self.Nedge[0] < 1 or self.Ninf0[0] < 0:
            raise ValueError("Nnode >= 2, Nedge >= 1 and Ninf0 >= 0 are required")
        n_hi = self.Nnode[1]
        if self.Nedge[0] > n_hi * (n_hi - 1) // 2 or self.Ninf0[0] > n_hi:
            raise ValueError("no (Nnode, Nedge, Ninf0) combination in these ranges is feasible")

    @classmethod
    def defaults(cls) -> "DesignRanges":
        """Ranges of the small-network effects study."""
        return cls()

    @classmethod
    def case_study(cls) -> "DesignRanges":
        """Ranges of the large-network pricing study (spreads given as sd)."""
        r6 = math.sqrt(6.0)
        return cls(mean_rec=(0.1, 1.0), var_rec=(0.1, 1.0), mean_inf=(0.1, r6),
                   var_inf=(0.1, r6), Nnode=(100, 5000), Nedge=(400, 20000),
                   spread="sd")

    @classmethod
    def point(cls, **values) -> "DesignRanges":
        """Degenerate ranges fixing every covariate to the given value."""
        return cls(**{k: v if k == "spread" else (v, v) for k, v in values.items()})

    def to_mapping(self) -> dict:
        out = {k: list(v) for k, v in asdict(self).items() if k != "spread"}
        out["spread"] = self.spread
        return out

    @classmethod
    def from_mapping(cls, data: dict) -> "DesignRanges":
        data = dict(data)
        preset = data.pop("preset", "defaults")
        base = {"defaults": cls.defaults, "case_study": cls.case_study}
        if preset not in base:
            raise ValueError(f"unknown preset {preset!r}")
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown range keys: {sorted(unknown)}")
        return replace(base[preset](), **data)


@dataclass(frozen=True)
class DatasetRow:
    par_cop: float
    mean_rec: float
    var_rec: float
    mean_inf: float
    var_inf: float
    Nnode: int
    Nedge: int
    Gam: float
    Ninf0: int
    Tinf: float = float("nan")
    Nrec: int = -1

    def covariates(self) -> dict:
        d = asdict(self)
        del d["Tinf"], d["Nrec"]
        return d


@dataclass(frozen=True)
class RowFailure:
    row: int
    message: str


@dataclass
class Dataset:
    rows: list[DatasetRow] = field(default_factory=list)
    failures: list[RowFailure] = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        if name not in COLUMNS:
            raise KeyError(name)
        dtype = np.int64 if name in _INT_COLUMNS else float
        return np.array([getattr(r, name) for r in self.rows], dtype=dtype)

    def columns(self) -> dict[str, np.ndarray]:
        return {c: self.column(c) for c in COLUMNS}


def _uniform(rng, iv):
    lo, hi = iv
    return lo if lo == hi else float(rng.uniform(lo, hi))


def _open_uniform(rng, iv):
    # uniform on the open interval when it has width, to keep transforms finite
    lo, hi = iv
    if lo == hi:
        return lo
    for _ in range(_MAX_REDRAWS):
        x = float(rng.uniform(lo, hi))
        if lo < x < hi:
            return x
    raise ValueError(f"cannot draw from the interior of {iv}")


def _integer(rng, iv):
    lo, hi = iv
    return lo if lo == hi else int(rng.integers(lo, hi + 1))


def draw_design(ranges: DesignRanges, rng: np.random.Generator) -> DatasetRow:
    """Draw one covariate vector (responses left unset).

    ``(Nnode, Nedge, Ninf0)`` are redrawn jointly until the graph is simple
    and the initial infected set fits.
    """
    par_cop = _uniform(rng, ranges.par_cop)
    mean_rec = _uniform(rng, ranges.mean_rec)
    var_rec = _uniform(rng, ranges.var_rec)
    mean_inf = _uniform(rng, ranges.mean_inf)
    var_inf = _uniform(rng, ranges.var_inf)
    if ranges.spread == "sd":
        var_rec, var_inf = var_rec ** 2, var_inf ** 2
    gam = _open_uniform(rng, ranges.Gam)
    for _ in range(_MAX_REDRAWS):
        n = _integer(rng, ranges.Nnode)
        m = _integer(rng, ranges.Nedge)
        k = _integer(rng, ranges.Ninf0)
        if m <= n * (n - 1) // 2 and k <= n:
            break
    else:
        raise ValueError("could not draw a feasible (Nnode, Nedge, Ninf0)")
    return DatasetRow(par_cop, mean_rec, var_rec, mean_inf, var_inf, n, m, gam, k)


def row_config(row: DatasetRow, graph: Graph, horizon: float) -> SimConfig:
    """Engine configuration for a covariate row on a given graph."""
    return SimConfig(
        graph=graph,
        infection=weibull_from_moments(MomentSpec(row.mean_inf, row.var_inf)),
        recovery=weibull_from_moments(MomentSpec(row.mean_rec, row.var_rec)),
        rho=row.par_cop,
        horizon=horizon,
        n_initial=row.Ninf0,
    )


@dataclass(frozen=True)
class SweepConfig:
    """Everything that determines a sweep's output."""

    ranges: DesignRanges = field(default_factory=DesignRanges)
    sample_size: int = 800
    replications: int = 1
    horizon: float = 12.0
    seed: int = 0
    fixed_graph: bool = False

    def __post_init__(self):
        if self.sample_size < 0:
            raise ValueError("sample_size must be nonnegative")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise ValueError("horizon must be positive")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")

    def to_mapping(self) -> dict:
        return {
            "ranges": self.ranges.to_mapping(),
            "sample_size": self.sample_size,
            "replications": self.replications,
            "horizon": self.horizon,
            "seed": self.seed,
            "fixed_graph": self.fixed_graph,
        }

    @classmethod
    def from_mapping(cls, data: dict) -> "SweepConfig":
        data = dict(data)
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "ranges" in data:
            data["ranges"] = DesignRanges.from_mapping(data["ranges"])
        return cls(**data)

    @classmethod
    def load(cls, path) -> "SweepConfig":
        """Read a JSON or TOML config (chosen by file extension)."""
        path = Path(path)
        if path.suffix.lower() == ".toml":
            import tomli

            with open(path, "rb") as fh:
                data = tomli.load(fh)
        else:
            with open(path) as fh:
                data = json.load(fh)
        return cls.from_mapping(data)


def _row_rng(seed: int, row: int, *extra: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(row, *extra)))


GRAPH_STREAM = 2**32


def graph_rng(seed: int) -> np.random.Generator:
    """Stream for a graph shared by all runs under master ``seed``.

    The spawn key lies outside the range of row indices, so it never
    collides with a per-row stream.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(GRAPH_STREAM,)))


def _shared_graph(cfg: SweepConfig) -> Graph | None:
    if not cfg.fixed_graph:
        return None
    r = cfg.ranges
    if r.Nnode[0] != r.Nnode[1] or r.Nedge[0] != r.Nedge[1] or r.Gam[0] != r.Gam[1]:
        raise ValueError("a fixed graph needs point ranges for Nnode, Nedge and Gam")
    return sample_scale_free(NetworkSpec(r.Nnode[0], r.Nedge[0], r.Gam[0]), graph_rng(cfg.seed))


def run_row(cfg: SweepConfig, index: int, graph: Graph | None = None) -> list[DatasetRow]:
    """Rows produced by design point ``index`` (one per replication)."""
    rng = _row_rng(cfg.seed, index)
    design = draw_design(cfg.ranges, rng)
    if graph is None:
        graph = sample_scale_free(NetworkSpec(design.Nnode, design.Nedge, design.Gam), rng)
    sim = row_config(design, graph, cfg.horizon)
    out = []
    for rep in range(cfg.replications):
        traj = run_trajectory(sim, _row_rng(cfg.seed, index, rep + 1), record_events=False)
        out.append(replace(design, Tinf=traj.tinf, Nrec=traj.nrec))
    return out


def _guarded_row(cfg, graph, index):
    try:
        return index, run_row(cfg, index, graph), None
    except (SimulationError, ValueError, FloatingPointError) as exc:
        return index, [], f"{type(exc).__name__}: {exc}"


def run_sweep(cfg: SweepConfig, *, threads: int = 1, on_error: str = "raise",
              rows: range | None = None) -> Dataset:
    """Run a sweep and assemble its dataset in row order.

    With ``on_error="raise"`` the first failing row aborts the sweep with a
    :class:`SweepError`; with ``"record"`` failures are collected in
    ``Dataset.failures`` and the remaining rows are kept.
    """
    if on_error not in ("raise", "record"):
        raise ValueError(f"on_error must be 'raise' or 'record', got {on_error!r}")
    graph = _shared_graph(cfg)
    indices = range(cfg.sample_size) if rows is None else rows
    work = partial(_guarded_row, cfg, graph)
    if threads <= 1 or len(indices) < 2:
        results = map(work, indices)
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=threads)
        results = pool.map(work, indices, chunksize=1)
    data = Dataset()
    try:
        for index, got, err in results:
            if err is not None:
                if on_error == "raise":
                    raise SweepError(index, err)
                logger.warning("row %d failed: %s", index, err)
                data.failures.append(RowFailure(index, err))
            data.rows.extend(got)
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    return data


def _format(name, value):
    if name in _INT_COLUMNS:
        return str(int(value))
    return _REAL_FMT.format(float(value))


def write_dataset(data: Dataset | list[DatasetRow], path) -> None:
    """Write rows as CSV with a fixed header and 12 significant digits."""
    rows = data.rows if isinstance(data, Dataset) else data
    with open(path, "w", newline="") as fh:
        fh.write(",".join(COLUMNS) + "\n")
        for r in rows:
            fh.write(",".join(_format(c, getattr(r, c)) for c in COLUMNS) + "\n")


def read_dataset(path) -> Dataset:
    """Read a dataset written by :func:`write_dataset`."""
    out = Dataset()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetSchemaError(f"{path}: empty file") from None
        if tuple(header) != COLUMNS:
            raise DatasetSchemaError(
                f"{path}: header {','.join(header)!r} does not match {','.join(COLUMNS)!r}"
            )
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(COLUMNS):
                raise DatasetSchemaError(f"{path}:{lineno}: expected {len(COLUMNS)} fields")
            try:
                vals = {c: (int(v) if c in _INT_COLUMNS else float(v))
                        for c, v in zip(COLUMNS, rec)}
            except ValueError as exc:
                raise DatasetSchemaError(f"{path}:{lineno}: {exc}") from None
            out.rows.append(DatasetRow(**vals))
    return out


def _case(gam, rec):
    return DesignRanges.point(par_cop=0.5, mean_rec=rec, var_rec=rec, mean_inf=1.0,
                              var_inf=1.0, Nnode=50, Nedge=200, Gam=gam, Ninf0=1)


# Small-network cases contrasting topology (A-C) and recovery speed (C-E).
TABLE1_CASES = {
    "A": _case(2.1, 0.25),
    "B": _case(2.9, 0.25),
    "C": _case(2.5, 0.25),
    "D": _case(2.5, 0.5),
    "E": _case(2.5, 1.0),
}
