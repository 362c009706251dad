"""Static-model scale-free graphs.

Node ``i`` (1-based, after a random relabelling) carries weight
``i ** (-1 / (gamma - 1))``. Endpoints are drawn independently in proportion
to these weights and a pair becomes an edge unless it is a self-pair or
already present. The expected degree sequence then has a power-law tail with
exponent ``gamma``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "NetworkSpec",
    "Graph",
    "GraphError",
    "sample_scale_free",
    "degree_histogram",
    "tail_exponent_estimate",
    "write_edge_list",
    "read_edge_list",
]

REJECTION_FACTOR = 1000


class GraphError(ValueError):
    """Infeasible network parameters or failed sampling."""


@dataclass(frozen=True)
class NetworkSpec:
    n: int
    m: int
    gamma: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise GraphError(f"node count must be an integer >= 2, got {self.n}")
        if int(self.m) != self.m or self.m < 1:
            raise GraphError(f"edge count must be an integer >= 1, got {self.m}")
        if self.m > self.max_edges:
            raise GraphError(
                f"{self.m} edges do not fit in a simple graph on {self.n} nodes "
                f"(max {self.max_edges})"
            )
        if not self.gamma > 1:
            raise GraphError(f"gamma must exceed 1, got {self.gamma}")

    @property
    def max_edges(self) -> int:
        return self.n * (self.n - 1) // 2

    @property
    def weight_exponent(self) -> float:
        return 1.0 / (self.gamma - 1.0)

    def weights(self) -> np.ndarray:
        """Static-model weights for ranks 1..n, normalized to sum to one."""
        w = np.arange(1, self.n + 1, dtype=float) ** (-self.weight_exponent)
        return w / w.sum()

    def degree_law_constant(self, k_max: int | None = None) -> float:
        """Normalizing constant ``a`` of ``p_k = a k**(-gamma)`` on ``1..k_max``."""
        k_max = self.n - 1 if k_max is None else k_max
        k = np.arange(1, k_max + 1, dtype=float)
        return float(1.0 / np.sum(k ** (-self.gamma)))


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on nodes ``0..n-1``."""

    n: int
    edges: tuple[tuple[int, int], ...]
    adjacency: tuple[tuple[int, ...], ...] = field(repr=False, compare=False)

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        seen = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise GraphError(f"self-loop on node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) outside node range 0..{n - 1}")
            e = (u, v) if u < v else (v, u)
            if e in seen:
                raise GraphError(f"duplicate edge {e}")
            seen.add(e)
        ordered = tuple(sorted(seen))
        nbrs = [[] for _ in range(n)]
        for u, v in ordered:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return cls(n, ordered, tuple(tuple(sorted(x)) for x in nbrs))

    @property
    def m(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=int)


def sample_scale_free(spec: NetworkSpec, rng: np.random.Generator,
                      max_rejections: int | None = None) -> Graph:
    """Sample a simple graph with exactly ``spec.m`` edges from the static model.

    Raises GraphError once more than ``max_rejections`` consecutive candidate
    pairs are rejected (default ``1000 * m``).
    """
    n, m = spec.n, spec.m
    cap = REJECTION_FACTOR * m if max_rejections is None else max_rejections
    perm = rng.permutation(n)
    cdf = np.cumsum(spec.weights())
    edges: set[tuple[int, int]] = set()
    rejected = 0
    while len(edges) < m:
        batch = max(1024, 2 * (m - len(edges)))
        ends = np.searchsorted(cdf, rng.random((batch, 2)) * cdf[-1], side="right")
        ends = perm[np.minimum(ends, n - 1)]
        for a, b in ends.tolist():
            if a == b:
                rejected += 1
            else:
                e = (a, b) if a < b else (b, a)
                if e in edges:
                    rejected += 1
                else:
                    edges.add(e)
                    rejected = 0
                    if len(edges) == m:
                        break
            if rejected > cap:
                raise GraphError(
                    f"gave up after {rejected} consecutive rejected pairs with "
                    f"{len(edges)} of {m} edges placed"
                )
    return Graph.from_edges(n, edges)


def degree_histogram(g: Graph) -> dict[int, int]:
    return dict(sorted(Counter(g.degrees().tolist()).items()))


def tail_exponent_estimate(g_or_degrees, k_min: int, min_tail: int = 50) -> float:
    """Discrete Hill-type estimate of the power-law exponent of the degree tail.

    Uses ``1 + n_tail / sum(log(k / (k_min - 1/2)))`` over degrees ``k >= k_min``.
    Accepts a Graph or a degree array.
    """
    if isinstance(g_or_degrees, Graph):
        k = g_or_degrees.degrees()
    else:
        k = np.asarray(g_or_degrees)
    if k_min < 1:
        raise ValueError("k_min must be at least 1")
    tail = k[k >= k_min].astype(float)
    if len(tail) < min_tail:
        raise ValueError(
            f"only {len(tail)} degrees >= {k_min}; need at least {min_tail}"
        )
    if np.all(tail == tail[0]):
        raise ValueError("degenerate tail: all tail degrees are equal")
    return float(1.0 + len(tail) / np.sum(np.log(tail / (k_min - 0.5))))


def write_edge_list(g: Graph, path, gamma: float) -> None:
    lines = [f"{g.n} {g.m} {gamma!r}"]
    lines += [f"{u} {v}" for u, v in g.edges]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path) -> tuple[Graph, float]:
    """Read the ``n m gamma`` + ``u v`` format; returns the graph and gamma."""
    rows = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not rows or len(rows[0]) != 3:
        raise GraphError(f"{path}: header must be 'n m gamma'")
    try:
        n, m, gamma = int(rows[0][0]), int(rows[0][1]), float(rows[0][2])
        edges = [(int(a), int(b)) for a, b in rows[1:]]
    except ValueError as exc:
        raise GraphError(f"{path}: malformed edge list ({exc})") from None
    if len(edges) != m:
        raise GraphError(f"{path}: header declares {m} edges, found {len(edges)}")
    return Graph.from_edges(n, edges), gamma
