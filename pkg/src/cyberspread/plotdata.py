"""Plot-ready tables: run summaries, infected-count paths and log-Tinf histograms.

Nothing here draws; every function returns or writes the numbers a plotting
tool would need.
"""

from __future__ import annotations

import csv

import numpy as np

from .engine import INFECTION, RECOVERY, EventRecord, TrajectorySummary

__all__ = [
    "SUMMARY_HEADER",
    "SummaryFormatError",
    "write_summary",
    "read_summary",
    "step_counts",
    "write_step_counts",
    "log_histogram",
    "write_histogram",
    "local_maxima",
]

SUMMARY_HEADER = ("run", "Tinf", "Nrec", "final_infected")


class SummaryFormatError(ValueError):
    pass


def write_summary(summaries, path) -> None:
    """One ``run,Tinf,Nrec,final_infected`` line per trajectory."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(SUMMARY_HEADER) + "\n")
        for i, s in enumerate(summaries):
            fh.write(f"{i},{s.tinf:.12g},{s.nrec},{s.final_infected}\n")


def read_summary(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows or tuple(rows[0]) != SUMMARY_HEADER:
        raise SummaryFormatError(f"{path}: expected header '{','.join(SUMMARY_HEADER)}'")
    body = rows[1:]
    try:
        cols = {
            "run": np.array([int(r[0]) for r in body], dtype=int),
            "Tinf": np.array([float(r[1]) for r in body], dtype=float),
            "Nrec": np.array([int(r[2]) for r in body], dtype=int),
            "final_infected": np.array([int(r[3]) for r in body], dtype=int),
        }
    except (ValueError, IndexError) as exc:
        raise SummaryFormatError(f"{path}: {exc}") from None
    return cols


def step_counts(events, initial: int, horizon: float | None = None):
    """Infected count as a right-continuous step function.

    Parameters
    ----------
    events : sequence of EventRecord, or a TrajectorySummary
        Events in time order. A summary supplies its own initial count.
    initial : int
        Infected count at time 0 (ignored for a summary).
    horizon : float, optional
        If given, a final point closes the path at this time.

    Returns
    -------
    times, counts : ndarray
        ``counts[i]`` holds on ``[times[i], times[i+1])``. Empty arrays for
        an empty event list with no initial infections and no horizon.
    """
    if isinstance(events, TrajectorySummary):
        initial = len(events.initial_infected)
        events = events.events
    events = list(events)
    if not events and initial == 0 and horizon is None:
        return np.zeros(0), np.zeros(0, dtype=int)
    times, counts = [0.0], [int(initial)]
    cur = int(initial)
    for ev in events:
        if ev.kind == INFECTION:
            cur += 1
        elif ev.kind == RECOVERY:
            cur -= 1
        else:
            raise ValueError(f"unknown event kind {ev.kind!r}")
        if cur < 0:
            raise ValueError(f"infected count went negative at t={ev.time}")
        times.append(float(ev.time))
        counts.append(cur)
    if horizon is not None and horizon > times[-1]:
        times.append(float(horizon))
        counts.append(cur)
    return np.array(times), np.array(counts, dtype=int)


def write_step_counts(times, counts, path, *, run: int | None = None, append=False) -> None:
    """Write ``time,infected`` (or ``run,time,infected`` when ``run`` is set)."""
    header = "time,infected" if run is None else "run,time,infected"
    with open(path, "a" if append else "w", newline="") as fh:
        if not append:
            fh.write(header + "\n")
        lead = "" if run is None else f"{run},"
        for t, c in zip(times, counts):
            fh.write(f"{lead}{t:.9f},{int(c)}\n")


def log_histogram(values, bins=30):
    """Histogram of ``log(values)`` over the positive entries.

    Returns ``(edges, counts, dropped)`` where ``dropped`` is the number of
    nonpositive values left out. No positive values give empty arrays.
    """
    v = np.asarray(values, dtype=float)
    pos = v[v > 0]
    dropped = int(v.size - pos.size)
    if pos.size == 0:
        return np.zeros(0), np.zeros(0, dtype=int), dropped
    counts, edges = np.histogram(np.log(pos), bins=bins)
    return edges, counts.astype(int), dropped


def write_histogram(edges, counts, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("bin_left,bin_right,count\n")
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            fh.write(f"{lo:.9f},{hi:.9f},{int(c)}\n")


def local_maxima(counts) -> list[int]:
    """Start indices of bins (or flat runs of bins) higher than both neighbours.

    The ends count as having a zero neighbour outside the range.
    """
    c = np.concatenate([[-1], np.asarray(counts, dtype=float), [-1]])
    peaks = []
    i = 1
    while i < len(c) - 1:
        j = i
        while j + 1 < len(c) - 1 and c[j + 1] == c[i]:
            j += 1
        if c[i] > c[i - 1] and c[i] > c[j + 1]:
            peaks.append(i - 1)
        i = j + 1
    return peaks
