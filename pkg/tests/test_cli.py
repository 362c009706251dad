import json
import subprocess
import sys

import pytest

from cyberspread.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main, manifest_path
from cyberspread.graphgen import read_edge_list

SIM_TOML = """\
horizon = 4.0
rho = 0.5
runs = 5

[network]
nodes = 30
edges = 80
gamma = 2.5

[infection]
mean = 1.0
variance = 1.0

[recovery]
mean = 0.5
sd = 0.4

[initial]
count = 2
"""


def run(*args):
    return main([str(a) for a in args])


def test_gen_network(tmp_path):
    out = tmp_path / "g.txt"
    assert run("gen-network", "--nodes", 50, "--edges", 200, "--gamma", 2.5, "--seed", 1,
               "--out", out) == EXIT_OK
    g, gamma = read_edge_list(out)
    assert (g.n, g.m, gamma) == (50, 200, 2.5)
    assert len(out.read_text().splitlines()) == 201
    again = tmp_path / "h.txt"
    run("gen-network", "--nodes", 50, "--edges", 200, "--gamma", 2.5, "--seed", 1, "--out", again)
    assert again.read_bytes() == out.read_bytes()
    doc = json.loads(manifest_path(out).read_text())
    assert doc["command"] == "gen-network" and doc["seed"] == 1
    assert doc["outputs"] == {"out": str(out)}


def test_gen_network_trivial_and_infeasible(tmp_path):
    out = tmp_path / "g.txt"
    assert run("gen-network", "--nodes", 2, "--edges", 1, "--gamma", 2.5, "--out", out) == 0
    assert out.read_text().splitlines()[1:] == ["0 1"]
    assert run("gen-network", "--nodes", 3, "--edges", 4, "--gamma", 2.5,
               "--out", tmp_path / "x.txt") == EXIT_CONFIG


def test_simulate_outputs(tmp_path):
    cfg = tmp_path / "sim.toml"
    cfg.write_text(SIM_TOML)
    s = tmp_path / "s.csv"
    assert run("simulate", "--config", cfg, "--seed", 3, "--out-summary", s,
               "--out-events", tmp_path / "ev", "--out-snapshots", tmp_path / "snap") == 0
    lines = s.read_text().splitlines()
    assert lines[0] == "run,Tinf,Nrec,final_infected" and len(lines) == 6
    assert len(list((tmp_path / "ev").glob("*.csv"))) == 5
    assert len(list((tmp_path / "snap").glob("*.txt"))) == 5
    zero = tmp_path / "z.csv"
    assert run("simulate", "--config", cfg, "--runs", 0, "--out-summary", zero) == 0
    assert zero.read_text() == "run,Tinf,Nrec,final_infected\n"


def test_simulate_flags_override_and_threads(tmp_path):
    cfg = tmp_path / "sim.toml"
    cfg.write_text(SIM_TOML)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run("simulate", "--config", cfg, "--runs", 4, "--seed", 9, "--out-summary", a)
    run("simulate", "--config", cfg, "--runs", 4, "--seed", 9, "--threads", 2, "--out-summary", b)
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 5


def test_simulate_with_edge_list(tmp_path):
    net = tmp_path / "net.txt"
    run("gen-network", "--nodes", 20, "--edges", 40, "--gamma", 2.5, "--out", net)
    cfg = tmp_path / "sim.json"
    cfg.write_text(json.dumps({
        "network": {"edge_list": "net.txt"}, "infection": {"mean": 1, "variance": 1},
        "recovery": {"mean": 0.3, "variance": 0.1}, "initial": {"nodes": [0, 5]}, "runs": 3,
    }))
    assert run("simulate", "--config", cfg, "--out-summary", tmp_path / "s.csv") == 0
    net.write_text(net.read_text() + "")  # unchanged content keeps the digest
    assert run("replay", manifest_path(tmp_path / "s.csv"), "--out-dir", tmp_path / "r") == 0
    net.write_text("20 1 2.5\n0 1\n")
    assert run("replay", manifest_path(tmp_path / "s.csv"), "--out-dir", tmp_path / "r2") \
        == EXIT_CONFIG


@pytest.mark.parametrize("edit,line", [
    (("rho = 0.5", "rho = 1.5"), 2),
    (("rho = 0.5", "rhoo = 0.5"), 2),
    (("gamma = 2.5", "gamma = 0.5"), 8),
    (("sd = 0.4", "sd = -0.4"), 16),
    (("mean = 0.5", "mean = 0"), 15),
    (("count = 2", "count = 99"), 19),
])
def test_config_errors_name_the_line(tmp_path, capsys, edit, line):
    cfg = tmp_path / "bad.toml"
    cfg.write_text(SIM_TOML.replace(*edit))
    assert run("simulate", "--config", cfg, "--out-summary", tmp_path / "s.csv") == EXIT_CONFIG
    err = capsys.readouterr().err
    assert f"bad.toml:{line}:" in err or f"line {line}" in err


def test_config_syntax_errors(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("rho = \n")
    assert run("simulate", "--config", cfg, "--out-summary", tmp_path / "s.csv") == EXIT_CONFIG
    assert "line 1" in capsys.readouterr().err
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"rho": 0.5,\n "network": }')
    assert run("simulate", "--config", cfg, "--out-summary", tmp_path / "s.csv") == EXIT_CONFIG
    assert "bad.json:2:" in capsys.readouterr().err


def test_runtime_error_exit_code(tmp_path):
    cfg = tmp_path / "sim.toml"
    cfg.write_text(SIM_TOML.replace("runs = 5", "runs = 5\nmax_events = 1"))
    assert run("simulate", "--config", cfg, "--out-summary", tmp_path / "s.csv") == EXIT_RUNTIME


def test_sweep_fit_price_pipeline(tmp_path, data_dir):
    d = tmp_path / "d.csv"
    assert run("sweep", "--n", 40, "--seed", 2, "--out", d) == 0
    assert len(d.read_text().splitlines()) == 41
    c = tmp_path / "t.csv"
    assert run("fit", "--dataset", d, "--model", "tinf", "--formula", "pricing",
               "--out-coeffs", c, "--out-anova", tmp_path / "a.csv") == 0
    assert c.read_text().startswith("# lambda=")
    assert (tmp_path / "t.cov.csv").exists()
    n = tmp_path / "n.csv"
    assert run("fit", "--dataset", d, "--model", "nrec", "--formula", "pricing",
               "--out-coeffs", n) == 0
    q = tmp_path / "q.csv"
    assert run("price", "--coeffs-tinf", c, "--coeffs-nrec", n, "--scenarios",
               data_dir / "table10.csv", "--omega", 50, "--eta", 20, "--out", q) == 0
    assert len(q.read_text().splitlines()) == 21
    assert run("sweep", "--n", 0, "--out", tmp_path / "e.csv") == 0
    assert len((tmp_path / "e.csv").read_text().splitlines()) == 1


def test_price_edge_cases(tmp_path, data_dir):
    args = ["price", "--coeffs-tinf", data_dir / "tinf_coefficients.csv",
            "--coeffs-nrec", data_dir / "nrec_coefficients.csv"]
    empty = tmp_path / "s.csv"
    empty.write_text((data_dir / "table10.csv").read_text().splitlines()[0] + "\n")
    q = tmp_path / "q.csv"
    assert run(*args, "--scenarios", empty, "--omega", 50, "--eta", 20, "--out", q) == 0
    assert len(q.read_text().splitlines()) == 1
    assert run(*args, "--scenarios", data_dir / "table10.csv", "--omega", 0, "--eta", 0,
               "--out", q) == 0
    assert all(float(r.split(",")[9]) == 0.0 for r in q.read_text().splitlines()[1:])
    assert run(*args, "--scenarios", data_dir / "table10.csv", "--omega", -1, "--eta", 0,
               "--out", q) == EXIT_CONFIG


def test_bad_dataset_exit_code(tmp_path):
    d = tmp_path / "d.csv"
    d.write_text("a,b\n1,2\n")
    assert run("fit", "--dataset", d, "--model", "tinf", "--out-coeffs",
               tmp_path / "c.csv") == EXIT_CONFIG


def test_plotdata(tmp_path):
    cfg = tmp_path / "sim.toml"
    cfg.write_text(SIM_TOML)
    s = tmp_path / "s.csv"
    run("simulate", "--config", cfg, "--out-summary", s, "--out-events", tmp_path / "ev")
    h = tmp_path / "h.csv"
    assert run("plotdata", "--from", "summary", "--kind", "histogram", "--input", s,
               "--bins", 5, "--out", h) == 0
    rows = h.read_text().splitlines()
    assert rows[0] == "bin_left,bin_right,count" and len(rows) == 6
    t = tmp_path / "t.csv"
    assert run("plotdata", "--from", "events", "--kind", "trajectories", "--input",
               tmp_path / "ev" / "run_00000.csv", "--initial", 2, "--out", t) == 0
    lines = t.read_text().splitlines()
    assert lines[:2] == ["time,infected", "0.000000000,2"]
    assert run("plotdata", "--from", "events", "--kind", "trajectories", "--input",
               tmp_path / "ev", "--initial", 2, "--out", tmp_path / "all.csv") == 0
    assert (tmp_path / "all.csv").read_text().startswith("run,time,infected\n0,0.0")
    (tmp_path / "none").mkdir()
    assert run("plotdata", "--from", "events", "--kind", "trajectories", "--input",
               tmp_path / "none", "--out", tmp_path / "e.csv") == 0
    assert (tmp_path / "e.csv").read_text() == "run,time,infected\n"
    assert run("plotdata", "--from", "summary", "--kind", "trajectories", "--input", s,
               "--out", tmp_path / "x.csv") == EXIT_CONFIG


def test_console_script_entry():
    res = subprocess.run([sys.executable, "-m", "cyberspread.cli", "--version"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "cyberspread" in res.stdout
    res = subprocess.run([sys.executable, "-m", "cyberspread.cli", "simulate"],
                         capture_output=True, text=True)
    assert res.returncode == EXIT_CONFIG
