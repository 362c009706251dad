"""Event-driven infection and recovery on a graph with dependent waiting times.

Each infected node runs a recovery clock; each active link (infected node to
susceptible neighbour) runs an infection clock. The infection clocks leaving
one infected node are tied together by an exchangeable Gaussian copula on
their survival margins, so the process is neither Markov nor independent
across links.

Between events the joint no-event probability over the next ``tau`` months
is the product of the recovery survival ratios and, per infected node, the
ratio of copula values at the advanced and current elapsed times. The next
event time is obtained by inverting that probability against a uniform draw;
which event fires is drawn in proportion to the per-process intensities at
that time.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from . import _kernels, gausscop
from .graphgen import Graph
from .waiting import WeibullParams, hazard, log_density, log_survival

__all__ = [
    "INFECTION",
    "RECOVERY",
    "SimulationError",
    "SimConfig",
    "SimState",
    "EventRecord",
    "Intensities",
    "TrajectorySummary",
    "no_event_survival",
    "solve_next_event_time",
    "event_intensities",
    "select_event",
    "apply_event",
    "run_trajectory",
    "run_many",
    "trajectory_rng",
    "EventLogError",
    "write_event_log",
    "read_event_log",
    "write_snapshots",
]

logger = logging.getLogger(__name__)

INFECTION = "I"
RECOVERY = "R"

_GROWTH = np.log(4.0)
_MAX_STEP = 5.0
_MAX_ITER = 500
_XTOL = 1e-12


class SimulationError(RuntimeError):
    """Raised when a trajectory cannot be continued."""


@dataclass(frozen=True)
class SimConfig:
    """Everything needed to run trajectories on one graph.

    Give either ``initial_infected`` (explicit node ids, used for every run)
    or ``n_initial`` (drawn uniformly without replacement per run).
    """

    graph: Graph
    infection: WeibullParams
    recovery: WeibullParams
    rho: float = 0.5
    horizon: float = 12.0
    initial_infected: tuple[int, ...] | None = None
    n_initial: int = 1
    max_events: int = 10_000_000

    def __post_init__(self):
        if not (np.isfinite(self.horizon) and self.horizon > 0):
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        gausscop.CopulaSpec(self.rho)
        if self.initial_infected is not None:
            init = tuple(sorted(set(int(i) for i in self.initial_infected)))
            if any(not 0 <= i < self.graph.n for i in init):
                raise ValueError("initial infected nodes must be valid node ids")
            object.__setattr__(self, "initial_infected", init)
        elif not 0 <= self.n_initial <= self.graph.n:
            raise ValueError(
                f"cannot start with {self.n_initial} infected nodes on {self.graph.n}"
            )

    def draw_initial(self, rng: np.random.Generator) -> tuple[int, ...]:
        if self.initial_infected is not None:
            return self.initial_infected
        picked = rng.choice(self.graph.n, size=self.n_initial, replace=False)
        return tuple(sorted(int(i) for i in picked))


@dataclass(frozen=True)
class EventRecord:
    time: float
    kind: str
    node: int


class SimState:
    """Node statuses, elapsed clocks and active links of one trajectory.

    Clocks are stored as the epoch at which they started, so moving the
    system clock forward advances every elapsed time at once.
    """

    __slots__ = ("graph", "clock", "_since", "_links")

    def __init__(self, graph: Graph, infected=(), clock: float = 0.0):
        self.graph = graph
        self.clock = float(clock)
        self._since: dict[int, float] = {}
        self._links: dict[int, dict[int, float]] = {}
        for j in infected:
            self._since[int(j)] = self.clock
        for j in self._since:
            self._links[j] = {v: self.clock for v in graph.adjacency[j]
                              if v not in self._since}

    def copy(self) -> "SimState":
        new = SimState.__new__(SimState)
        new.graph = self.graph
        new.clock = self.clock
        new._since = dict(self._since)
        new._links = {j: dict(d) for j, d in self._links.items()}
        return new

    @property
    def infected(self) -> list[int]:
        return sorted(self._since)

    @property
    def n_infected(self) -> int:
        return len(self._since)

    def is_infected(self, node: int) -> bool:
        return node in self._since

    def status(self) -> np.ndarray:
        s = np.zeros(self.graph.n, dtype=bool)
        s[list(self._since)] = True
        return s

    def infected_elapsed(self, node: int) -> float:
        return self.clock - self._since[node]

    def active_links(self) -> list[tuple[int, int, float]]:
        """``(infected, susceptible, elapsed)`` for every active link."""
        return [(j, v, self.clock - t0)
                for j in sorted(self._links)
                for v, t0 in sorted(self._links[j].items())]

    @property
    def n_active(self) -> int:
        return sum(len(d) for d in self._links.values())

    def set_elapsed(self, node: int, elapsed: float, links: dict[int, float] | None = None):
        """Overwrite the elapsed clocks of an infected node and its links (testing aid)."""
        self._since[node] = self.clock - elapsed
        for v, t in (links or {}).items():
            if v not in self._links[node]:
                raise KeyError(f"({node}, {v}) is not an active link")
            self._links[node][v] = self.clock - t

    def advance(self, tau: float) -> None:
        if tau < 0:
            raise ValueError("cannot move the clock backwards")
        self.clock += tau


class _Frame:
    """Array view of a state, fixed for one inter-event interval."""

    def __init__(self, state: SimState, infection: WeibullParams,
                 recovery: WeibullParams, rho: float):
        self.infection = infection
        self.recovery = recovery
        self.rho = rho
        clock = state.clock
        nodes = sorted(state._since)
        self.nodes = np.array(nodes, dtype=np.intp)
        self.r = clock - np.array([state._since[j] for j in nodes], dtype=float)
        src, dst, t, starts = [], [], [], []
        for j in nodes:
            d = state._links[j]
            if d:
                starts.append(len(t))
                for v, t0 in d.items():
                    src.append(j)
                    dst.append(v)
                    t.append(clock - t0)
        self.src = np.array(src, dtype=np.intp)
        self.dst = np.array(dst, dtype=np.intp)
        self.t = np.array(t, dtype=float)
        self.starts = np.array(starts, dtype=np.int64)
        self.ends = np.append(self.starts[1:], len(t)).astype(np.int64)
        self._x, self._lw = gausscop._hermite(gausscop.DEFAULT_NODES)
        self.base = 0.0
        self.base = self._evaluate(0.0, want_grad=False)[0]

    @property
    def n_links(self) -> int:
        return len(self.t)

    def _args(self):
        return (self.r, self.t, self.starts, self.ends, self.infection.shape,
                self.infection.rate, self.recovery.shape, self.recovery.rate,
                float(self.rho), self._x, self._lw)

    def _evaluate(self, tau: float, want_grad: bool = True) -> tuple[float, float]:
        """``log_phi(tau)`` and its derivative in ``tau``."""
        val, slope = _kernels.log_phi_slope(float(tau), *self._args(), want_grad)
        val -= self.base
        if np.isnan(val) or np.isnan(slope):
            raise SimulationError(f"no-event probability is NaN at tau={tau}")
        return min(val, 0.0), slope

    def log_phi(self, tau: float) -> float:
        return self._evaluate(tau, want_grad=False)[0]

    def solve(self, log_u: float, tmax: float = np.inf) -> float | None:
        """Root of ``log_phi(tau) = log_u``; None if it lies beyond ``tmax``.

        Safeguarded Newton iteration in ``log tau``: a step that leaves the
        current bracket is replaced by bisection, or by a fixed geometric
        move while the bracket is still open on one side.
        """
        tau, status = _kernels.solve_log_tau(
            float(log_u), float(tmax), self.base, *self._args(),
            _GROWTH, _MAX_STEP, _XTOL, _MAX_ITER)
        if status == 1:
            return None
        if status == 2:
            raise SimulationError("next event time did not converge")
        if status == 3:
            raise SimulationError(f"no-event probability is NaN near tau={tau}")
        return float(tau)

    def intensities(self, tau: float) -> tuple[np.ndarray, np.ndarray]:
        """Per-link infection intensities and per-node recovery intensities at ``tau``."""
        node_rates = hazard(self.recovery, self.r + tau)
        if self.n_links == 0:
            link_rates = np.zeros(0)
        else:
            tt = self.t + tau
            if self.rho == 0.0:
                link_rates = hazard(self.infection, tt)
            else:
                log_u = log_survival(self.infection, tt)
                log_d = gausscop.log_cond_grouped(log_u, self.starts, self.rho)
                log_c = gausscop.log_copula_grouped(log_u, self.starts, self.rho)
                owner = np.repeat(np.arange(len(self.starts)),
                                  np.diff(np.append(self.starts, self.n_links)))
                link_rates = np.exp(log_d + log_density(self.infection, tt) - log_c[owner])
        bad = ~np.isfinite(link_rates) | (link_rates < 0)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise SimulationError(
                f"infection intensity {link_rates[i]} on link "
                f"{self.src[i]}->{self.dst[i]} (elapsed {self.t[i] + tau})"
            )
        if not np.all(np.isfinite(node_rates)):
            raise SimulationError(f"recovery intensity not finite at tau={tau}")
        return link_rates, node_rates


@dataclass(frozen=True)
class Intensities:
    """Event intensities at the epoch ``time``.

    ``links`` is an array of ``(infected, susceptible)`` pairs aligned with
    ``link_rates``; ``nodes`` is aligned with ``node_rates``.
    """

    time: float
    links: np.ndarray
    link_rates: np.ndarray
    nodes: np.ndarray
    node_rates: np.ndarray

    @property
    def total(self) -> float:
        return float(self.link_rates.sum() + self.node_rates.sum())

    def probabilities(self) -> tuple[np.ndarray, np.ndarray]:
        tot = self.total
        if not tot > 0:
            raise SimulationError("all event intensities are zero")
        return self.link_rates / tot, self.node_rates / tot


def _frame(state: SimState, config_or_params) -> _Frame:
    if state.n_infected == 0:
        raise SimulationError("no infected nodes: the process is absorbed")
    c = config_or_params
    return _Frame(state, c.infection, c.recovery, c.rho)


def no_event_survival(state: SimState, tau: float, config: SimConfig) -> float:
    """Probability that neither an infection nor a recovery occurs in ``tau`` months."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    return float(np.exp(_frame(state, config).log_phi(tau)))


def solve_next_event_time(state: SimState, u: float, config: SimConfig) -> float:
    """The ``tau`` with ``no_event_survival(state, tau) == u``."""
    if not 0.0 < u < 1.0:
        raise ValueError(f"u must lie in (0, 1), got {u}")
    return _frame(state, config).solve(np.log(u))


def event_intensities(state: SimState, tau: float, config: SimConfig) -> Intensities:
    fr = _frame(state, config)
    link_rates, node_rates = fr.intensities(tau)
    return Intensities(state.clock + tau, np.column_stack([fr.src, fr.dst]),
                       link_rates, fr.nodes.copy(), node_rates)


def select_event(intens: Intensities, rng: np.random.Generator) -> EventRecord:
    """Draw which process fires, in proportion to its intensity."""
    rates = np.concatenate([intens.link_rates, intens.node_rates])
    cum = np.cumsum(rates)
    if not cum.size or not cum[-1] > 0:
        raise SimulationError("all event intensities are zero")
    i = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    i = min(i, len(rates) - 1)
    nl = len(intens.link_rates)
    if i < nl:
        return EventRecord(intens.time, INFECTION, int(intens.links[i, 1]))
    return EventRecord(intens.time, RECOVERY, int(intens.nodes[i - nl]))


def apply_event(state: SimState, event: EventRecord) -> SimState:
    """Apply an infection or recovery in place at the current clock.

    Every link that becomes active starts its clock at zero, including links
    reopened when a neighbour recovers.
    """
    v = event.node
    adj = state.graph.adjacency[v]
    now = state.clock
    if event.kind == INFECTION:
        if v in state._since:
            raise SimulationError(f"node {v} is already infected")
        sources = [j for j in adj if j in state._since]
        if not sources:
            raise SimulationError(f"node {v} has no infected neighbour")
        for j in sources:
            del state._links[j][v]
        state._since[v] = now
        state._links[v] = {w: now for w in adj if w not in state._since}
    elif event.kind == RECOVERY:
        if v not in state._since:
            raise SimulationError(f"node {v} is not infected")
        del state._since[v]
        del state._links[v]
        for j in adj:
            if j in state._since:
                state._links[j][v] = now
    else:
        raise SimulationError(f"unknown event kind {event.kind!r}")
    return state


def expected_links(state: SimState) -> set[tuple[int, int]]:
    """Active links recomputed from node statuses alone."""
    inf = state._since
    return {(j, v) for j in inf for v in state.graph.adjacency[j] if v not in inf}


@dataclass(frozen=True)
class TrajectorySummary:
    tinf: float
    nrec: int
    final_infected: int
    initial_infected: tuple[int, ...]
    events: tuple[EventRecord, ...] = field(repr=False, default=())

    @property
    def n_events(self) -> int:
        return len(self.events)

    def snapshots(self):
        """Yield ``(time, infected ids)`` at time 0 and after every event."""
        cur = set(self.initial_infected)
        yield 0.0, sorted(cur)
        for ev in self.events:
            if ev.kind == INFECTION:
                cur.add(ev.node)
            else:
                cur.discard(ev.node)
            yield ev.time, sorted(cur)

    def infected_path(self):
        """Step function of the infected count: arrays of times and counts."""
        times, counts = [], []
        for t, ids in self.snapshots():
            times.append(t)
            counts.append(len(ids))
        return np.array(times), np.array(counts)


def run_trajectory(config: SimConfig, rng: np.random.Generator, *,
                   record_events: bool = True, audit: bool = False) -> TrajectorySummary:
    """Simulate one trajectory on ``[0, horizon]``.

    ``tinf`` is the exact integral of the infected count up to the horizon
    or absorption, ``nrec`` the number of recoveries. With ``audit`` the
    active-link set and the monotonicity of the no-event probability are
    checked after every event.
    """
    initial = config.draw_initial(rng)
    state = SimState(config.graph, initial)
    T = config.horizon
    tinf = 0.0
    nrec = 0
    events = []
    n_events = 0
    while state.n_infected and state.clock < T:
        frame = _Frame(state, config.infection, config.recovery, config.rho)
        u = rng.random()
        while u == 0.0:
            u = rng.random()
        remaining = T - state.clock
        tau = frame.solve(np.log(u), remaining)
        m = state.n_infected
        if tau is None:
            tinf += m * remaining
            state.clock = T
            break
        if audit:
            grid = np.linspace(0.0, tau, 7)
            vals = [frame.log_phi(x) for x in grid]
            if vals[0] != 0.0 or np.any(np.diff(vals) > 1e-12):
                raise SimulationError("no-event probability is not decreasing from 1")
        link_rates, node_rates = frame.intensities(tau)
        tinf += m * tau
        state.advance(tau)
        intens = Intensities(state.clock, np.column_stack([frame.src, frame.dst]),
                             link_rates, frame.nodes, node_rates)
        ev = select_event(intens, rng)
        apply_event(state, ev)
        if ev.kind == RECOVERY:
            nrec += 1
        n_events += 1
        if record_events:
            events.append(ev)
        if audit:
            have = {(j, v) for j, v, _ in state.active_links()}
            if have != expected_links(state):
                raise SimulationError(f"active-link set out of sync after {ev}")
        if n_events >= config.max_events and state.n_infected and state.clock < T:
            raise SimulationError(
                f"iteration limit of {config.max_events} events reached at "
                f"t={state.clock:.6g}"
            )
    return TrajectorySummary(tinf, nrec, state.n_infected, initial, tuple(events))


def trajectory_rng(seed: int, index: int, *extra: int) -> np.random.Generator:
    """Independent stream for trajectory ``index`` under master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index, *extra)))


def _run_indexed(config, seed, record_events, index):
    return run_trajectory(config, trajectory_rng(seed, index),
                          record_events=record_events)


def run_many(config: SimConfig, runs: int, seed: int, *, threads: int = 1,
             record_events: bool = False) -> list[TrajectorySummary]:
    """Run ``runs`` trajectories; run ``i`` uses stream ``(seed, i)``."""
    work = partial(_run_indexed, config, seed, record_events)
    if threads <= 1 or runs < 2:
        return [work(i) for i in range(runs)]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, range(runs), chunksize=max(1, runs // (4 * threads))))


class EventLogError(ValueError):
    pass


EVENT_HEADER = "time,kind,node"


def write_event_log(events, path) -> None:
    """One trajectory as ``time,kind,node`` with times to 9 decimals."""
    with open(path, "w", newline="") as fh:
        fh.write(EVENT_HEADER + "\n")
        for ev in events:
            fh.write(f"{ev.time:.9f},{ev.kind},{ev.node}\n")


def read_event_log(path) -> list[EventRecord]:
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != EVENT_HEADER:
        raise EventLogError(f"{path}: expected header '{EVENT_HEADER}'")
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3 or parts[1] not in (INFECTION, RECOVERY):
            raise EventLogError(f"{path}:{lineno}: malformed event {line!r}")
        try:
            out.append(EventRecord(float(parts[0]), parts[1], int(parts[2])))
        except ValueError:
            raise EventLogError(f"{path}:{lineno}: malformed event {line!r}") from None
    return out


def write_snapshots(summary: TrajectorySummary, path) -> None:
    """Per-event lines of ``time`` followed by the infected node ids."""
    with open(path, "w", newline="") as fh:
        for t, ids in summary.snapshots():
            fh.write(" ".join([f"{t:.9f}"] + [str(i) for i in ids]) + "\n")
