import csv
import json

import pytest

from sandpile.cli import collapse_boundary, main
from sandpile.graph import build_graph, path_graph


def read_csv(path):
    with open(path) as f:
        return list(csv.DictReader(f))


def test_sample_histogram(tmp_path):
    out = tmp_path / "hist.csv"
    assert main(["sample", "--graph", "complete:4", "--threshold", "2", "--seed", "7",
                 "--reps", "1000", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert list(rows[0]) == ["total_particles", "probability"]
    assert abs(sum(float(r["probability"]) for r in rows) - 1) < 1e-12
    meta = json.loads((tmp_path / "hist.csv.meta.json").read_text())
    assert meta["seed"] == 7 and meta["reps"] == 1000


def test_sample_reproducible_across_workers(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["sample", "--graph", "path:3", "--seed", "1", "--reps", "500", "--out", str(a)])
    main(["sample", "--graph", "path:3", "--seed", "1", "--reps", "500", "--workers", "3", "--out", str(b)])
    assert a.read_text() == b.read_text()


def test_seed_required(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["sample", "--graph", "complete:4", "--reps", "3"])
    assert exc.value.code == 2
    assert "--seed" in capsys.readouterr().err


def test_verify_exact_sampling(capsys):
    assert main(["verify", "exact-sampling", "--suite", "small"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report[0]["test"] == "exact-sampling" and report[0]["pass"] is True
    assert set(report[0]) >= {"test", "parameters", "statistic", "threshold", "pass", "seed"}


def test_verify_randomized_needs_seed(capsys):
    assert main(["verify", "abelian"]) == 2
    assert "--seed" in capsys.readouterr().err
    assert main(["verify", "abelian", "--seed", "3", "--cases", "50"]) == 0


def test_drive_trace(tmp_path):
    out = tmp_path / "trace.csv"
    assert main(["drive", "--complete", "100", "--steps", "1000", "--burnin", "200", "--init", "0",
                 "--seed", "1", "--record-every", "10", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert list(rows[0]) == ["step", "xi", "sink_exits"] and len(rows) == 100
    assert rows[0]["step"] == "210"


def test_drive_general_and_errors(tmp_path, capsys):
    out = tmp_path / "t.csv"
    assert main(["drive", "--graph", "grid:3x3", "--threshold", "3", "--steps", "50", "--init", "4",
                 "--seed", "2", "--out", str(out)]) == 0
    assert len(read_csv(out)) == 50
    assert main(["drive", "--complete", "10", "--steps", "5", "--init", "10", "--seed", "1"]) == 2
    assert "--init" in capsys.readouterr().err
    assert main(["drive", "--graph", "blob:3", "--steps", "5", "--seed", "1"]) == 2
    assert "--graph" in capsys.readouterr().err


def test_micro(tmp_path):
    out = tmp_path / "m.csv"
    assert main(["micro", "--N", "50", "--x0", "10", "--y0", "1", "--trials", "20", "--seed", "3",
                 "--out", str(out)]) == 0
    rows = read_csv(out)
    assert list(rows[0]) == ["trial", "x", "tau0", "sink_exits", "peak_y"] and len(rows) == 20
    assert main(["micro", "--N", "5", "--x0", "10", "--y0", "1", "--trials", "2", "--seed", "3"]) == 2


def test_oracle_targets(capsys):
    assert main(["oracle", "stationary", "--graph", "complete:2"]) == 0
    pi = json.loads(capsys.readouterr().out)
    assert pi == [[[0], pytest.approx(0.25)], [[1], pytest.approx(0.75)]]
    assert main(["oracle", "qmatrix", "--graph", "complete:2"]) == 0
    q = json.loads(capsys.readouterr().out)
    assert q["matrix"][1] == [pytest.approx(1 / 6), pytest.approx(5 / 6)]
    assert main(["oracle", "micro-absorption", "--N", "2", "--x0", "2", "--y0", "2"]) == 0
    assert json.loads(capsys.readouterr().out)[0] == [0, pytest.approx(1 / 3)]
    assert main(["oracle", "sampler-dist", "--graph", "path:2", "--threshold", "3"]) == 0


def test_oracle_state_cap_env(monkeypatch, capsys):
    monkeypatch.setenv("SANDPILE_STATE_CAP", "2")
    assert main(["oracle", "sampler-dist", "--graph", "path:3"]) == 2
    assert "StateCapExceeded" in capsys.readouterr().err


def test_validate_and_collapse(tmp_path, capsys):
    assert main(["validate", "--graph", "cycle:4"]) == 0
    assert json.loads(capsys.readouterr().out)["n"] == 4
    # path a-b-c with both ends on the boundary
    spec = {"n_total": 5, "edges": [[0, 1], [1, 2], [2, 3], [3, 4]], "boundary": [0, 4]}
    f = tmp_path / "multi.json"
    f.write_text(json.dumps(spec))
    out = tmp_path / "g.json"
    assert main(["validate", "--collapse", str(f), "--out", str(out)]) == 0
    g = json.loads(out.read_text())
    got = build_graph(g["n"], g["edges"]).adjacency
    assert [sorted(a) for a in got] == [sorted(a) for a in path_graph(3, both_ends=True).adjacency]
    assert g["old_ids"] == [1, 2, 3]


def test_collapse_drops_boundary_boundary_edges():
    n, edges, _ = collapse_boundary(3, [(0, 1), (1, 2), (0, 2)], [1, 2])
    assert n == 1 and edges == [(0, 1), (0, 1)]
