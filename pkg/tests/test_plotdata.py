import numpy as np
import pytest

from cyberspread.engine import EventRecord, TrajectorySummary
from cyberspread.plotdata import (SummaryFormatError, local_maxima, log_histogram,
                                  read_summary, step_counts, write_histogram, write_summary)


def test_step_counts_from_events():
    ev = [EventRecord(0.5, "I", 3), EventRecord(1.0, "I", 4), EventRecord(2.0, "R", 0)]
    t, c = step_counts(ev, 1, horizon=12.0)
    assert t.tolist() == [0.0, 0.5, 1.0, 2.0, 12.0]
    assert c.tolist() == [1, 2, 3, 2, 2]


def test_step_counts_from_summary():
    s = TrajectorySummary(0.5, 1, 0, (2,), (EventRecord(0.5, "R", 2),))
    t, c = step_counts(s, 99)
    assert t.tolist() == [0.0, 0.5] and c.tolist() == [1, 0]


def test_step_counts_rejects_negative():
    with pytest.raises(ValueError):
        step_counts([EventRecord(0.1, "R", 0)], 0)


def test_empty_inputs():
    t, c = step_counts([], 0)
    assert t.size == 0 and c.size == 0
    edges, counts, dropped = log_histogram([])
    assert edges.size == 0 and counts.size == 0 and dropped == 0


def test_log_histogram_drops_zeros():
    edges, counts, dropped = log_histogram([0.0, 1.0, np.e, np.e ** 2], bins=2)
    assert dropped == 1 and counts.sum() == 3
    assert edges[0] == pytest.approx(0.0) and edges[-1] == pytest.approx(2.0)


def test_local_maxima():
    assert local_maxima([1, 5, 2, 2, 7, 1]) == [1, 4]
    assert local_maxima([3, 3, 1, 4, 4]) == [0, 3]
    assert local_maxima([]) == []
    assert local_maxima([2, 2, 2]) == [0]


def test_summary_round_trip(tmp_path):
    runs = [TrajectorySummary(1.25, 3, 2, (0,)), TrajectorySummary(0.0, 0, 0, ())]
    path = tmp_path / "s.csv"
    write_summary(runs, path)
    assert path.read_text().splitlines()[0] == "run,Tinf,Nrec,final_infected"
    cols = read_summary(path)
    assert cols["Tinf"].tolist() == [1.25, 0.0] and cols["Nrec"].tolist() == [3, 0]
    path.write_text("run,Tinf\n0,1\n")
    with pytest.raises(SummaryFormatError):
        read_summary(path)


def test_histogram_file(tmp_path):
    edges, counts, _ = log_histogram([1.0, 2.0, 3.0], bins=2)
    write_histogram(edges, counts, tmp_path / "h.csv")
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "bin_left,bin_right,count" and len(lines) == 3
