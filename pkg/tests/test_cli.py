from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectral_shrink.cli import main, parse_grid
from spectral_shrink.matrix_io import MatrixParseError, read_matrix, write_csv_rows, write_matrix

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _sidecar(path: Path) -> dict:
    return json.loads(Path(str(path) + ".json").read_text())


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def spike_input(tmp_path):
    path = tmp_path / "s.csv"
    write_matrix(path, np.diag([1.26] + [1.0] * 9))
    return path


def test_shrink_identity_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    a = rng.standard_normal((6, 12))
    s = a @ a.T / 12
    src, out = tmp_path / "in.csv", tmp_path / "out.csv"
    write_matrix(src, s)
    before = _digest(src)
    assert main(["shrink", str(src), "-o", str(out), "--rule", "identity"]) == 0
    assert np.max(np.abs(read_matrix(out) - s)) < 1e-8
    assert _digest(src) == before


def test_shrink_optimal_example(tmp_path, spike_input):
    out = tmp_path / "out.csv"
    code = main(["shrink", str(spike_input), "-o", str(out), "--rule", "optimal", "--loss", "F",
                 "--framework", "dzero", "--gamma", "0.01", "--rank", "1"])
    assert code == 0
    m = read_matrix(out)
    assert abs(m[0, 0] - 1.15) < 1e-12
    side = _sidecar(out)
    assert abs(side["shrunk_eigenvalues"][0] - 1.15) < 1e-12
    assert side["original_eigenvalues"][0] == 1.26
    assert side["estimated_spikes"]["scale"] == "hat"
    assert abs(side["estimated_spikes"]["values"][0] - 2.0) < 1e-12
    assert side["sigma2"] is None


def test_shrink_auto_uses_agnostic_rule(tmp_path, spike_input):
    out = tmp_path / "out.csv"
    assert main(["shrink", str(spike_input), "-o", str(out), "--framework", "auto", "--n", "1000", "--rank", "1"]) == 0
    side = _sidecar(out)
    assert side["rule"] == "agnostic(F)"
    assert side["framework"] == "auto"
    assert abs(side["gamma_n"] - 0.01) < 1e-15


def test_shrink_calibrate(tmp_path):
    src, out = tmp_path / "in.csv", tmp_path / "out.csv"
    write_matrix(src, 4.0 * np.diag([1.26] + [1.0] * 9))
    assert main(["shrink", str(src), "-o", str(out), "--gamma", "0.01", "--rank", "1", "--calibrate"]) == 0
    side = _sidecar(out)
    assert side["sigma2"] == 4.0
    assert abs(read_matrix(out)[0, 0] - 4.6) < 1e-12


def test_shrink_from_data(tmp_path):
    rng = np.random.default_rng(4)
    x = rng.standard_normal((5, 200))
    src, out = tmp_path / "x.csv", tmp_path / "out.csv"
    write_matrix(src, x)
    assert main(["shrink", str(src), "-o", str(out), "--from-data", "--rule", "optimal", "--loss", "N", "--rank", "2"]) == 0
    assert _sidecar(out)["gamma_n"] == 5 / 200


def test_shrink_header_flag(tmp_path):
    src, out = tmp_path / "in.csv", tmp_path / "out.csv"
    src.write_text("a,b\n2.0,0.0\n0.0,1.0\n")
    assert main(["shrink", str(src), "-o", str(out), "--header", "--rule", "identity"]) == 0
    assert main(["shrink", str(src), "-o", str(out), "--rule", "identity"]) == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["--rule", "optimal", "--gamma", "0.01"],
        ["--rule", "optimal", "--rank", "1"],
        ["--rule", "optimal", "--rank", "1", "--gamma", "0.01", "--framework", "wigner"],
        ["--rule", "optimal", "--rank", "1", "--gamma", "0.01", "--framework", "bogus"],
        ["--rule", "optimal", "--rank", "11", "--gamma", "0.01"],
        ["--rule", "optimal", "--rank", "1", "--gamma", "0.01", "--loss", "X"],
    ],
    ids=["no-rank", "no-gamma", "wigner-framework", "bad-framework", "rank-too-big", "bad-loss"],
)
def test_shrink_usage_errors(tmp_path, spike_input, argv):
    assert main(["shrink", str(spike_input), "-o", str(tmp_path / "o.csv"), *argv]) == 2


def test_shrink_parse_error_location(tmp_path, capsys):
    src = tmp_path / "bad.csv"
    src.write_text("1.0,2.0\n3.0,x\n")
    assert main(["shrink", str(src), "-o", str(tmp_path / "o.csv"), "--rule", "identity"]) == 2
    assert "bad.csv:2:2" in capsys.readouterr().err


def test_shrink_ragged_and_missing(tmp_path, capsys):
    src = tmp_path / "ragged.csv"
    src.write_text("1.0,2.0\n3.0\n")
    assert main(["shrink", str(src), "-o", str(tmp_path / "o.csv"), "--rule", "identity"]) == 2
    assert "ragged.csv:2" in capsys.readouterr().err
    assert main(["shrink", str(tmp_path / "missing.csv"), "-o", str(tmp_path / "o.csv"), "--rule", "identity"]) == 2


def test_shrink_asymmetric_is_domain_error(tmp_path):
    src = tmp_path / "asym.csv"
    write_matrix(src, np.array([[1.0, 0.5], [0.0, 1.0]]))
    assert main(["shrink", str(src), "-o", str(tmp_path / "o.csv"), "--rule", "identity"]) == 3


def test_wigner_examples(tmp_path, capsys):
    zero, out = tmp_path / "zero.csv", tmp_path / "out.csv"
    write_matrix(zero, np.zeros((4, 4)))
    assert main(["wigner", str(zero), "-o", str(out), "--rank-plus", "1", "--rank-minus", "1"]) == 0
    assert np.array_equal(read_matrix(out), np.zeros((4, 4)))

    y = tmp_path / "y.csv"
    write_matrix(y, np.diag([2.5, 0.1, -2.5]))
    assert main(["wigner", str(y), "-o", str(out), "--loss", "F", "--rank-plus", "1", "--rank-minus", "1"]) == 0
    assert np.max(np.abs(read_matrix(out) - np.diag([1.5, 0.0, -1.5]))) < 1e-12

    asym = tmp_path / "asym.csv"
    write_matrix(asym, np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert main(["wigner", str(asym), "-o", str(out)]) == 3
    assert "not symmetric" in capsys.readouterr().err


def _tables(capsys, *argv) -> list[dict]:
    assert main(["tables", *argv]) == 0
    lines = capsys.readouterr().out.splitlines()
    return list(csv.DictReader(lines))


def test_tables_thresholds(capsys):
    rows = {r["norm"]: float(r["threshold"]) for r in _tables(capsys, "--which", "thresholds", "--framework", "dzero")}
    assert abs(rows["F"] - 4 / math.sqrt(3)) < 1e-15
    assert abs(rows["O"] - 2.197368) < 1e-6
    assert abs(rows["N"] - 6 / math.sqrt(5)) < 1e-15
    rows = {r["norm"]: float(r["threshold"]) for r in _tables(capsys, "--which", "thresholds", "--framework", "prop:1")}
    assert abs(rows["F"] - 5.6056) < 1e-3


def test_tables_regret(capsys):
    rows = _tables(capsys, "--which", "regret", "--framework", "dzero", "--grid", "1")
    f = next(r for r in rows if r["norm"] == "F")
    assert abs(float(f["regret"]) - (math.sqrt(5) - 1)) < 1e-15
    assert round(100 * float(f["improvement"]), 1) == 55.3


def test_tables_losses(capsys):
    rows = _tables(capsys, "--which", "losses", "--framework", "dinf", "--grid", "1")
    f = next(r for r in rows if r["norm"] == "F")
    assert abs(float(f["rank_aware"]) - math.sqrt(3)) < 1e-15
    assert abs(float(f["optimal"]) - math.sqrt(3) / 2) < 1e-15


def test_tables_shrinkers_to_file(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["tables", "--which", "shrinkers", "--framework", "wigner", "--grid=-3:3:7", "-o", str(out)]) == 0
    rows = _read_csv(out)
    assert len(rows) == 7 and float(rows[0]["eta_F"]) == -float(rows[-1]["eta_F"])


def test_tables_errors():
    assert main(["tables", "--which", "nonsense"]) == 2
    assert main(["tables", "--which", "losses", "--grid", "1:2"]) == 2
    assert main(["tables", "--which", "thresholds", "--framework", "nope"]) == 2


def test_parse_grid():
    assert np.array_equal(parse_grid("0:1:3"), [0.0, 0.5, 1.0])
    assert np.array_equal(parse_grid("1,2.5"), [1.0, 2.5])


def _small_config(tmp_path, **overrides) -> Path:
    doc = {
        "name": "small",
        "model": {"kind": "spiked_covariance", "n": 400, "p": 40, "seed": 2024, "replicates": 6},
        "framework": "dzero",
        "spike_scale": "hat",
        "points": [[0.5], [2.0]],
        "rules": [{"kind": "rank_aware"}, {"kind": "optimal", "norm": "F"}, {"kind": "threshold", "norm": "F"}],
        "losses": ["F1", "N3"],
        "assertions": [
            {"kind": "dominance", "point": 1, "rule": "optimal(F)", "baseline": "rank_aware", "loss": "F1", "label": "dominance"},
        ],
    }
    doc.update(overrides)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return path


def test_simulate_outputs(tmp_path, capsys):
    cfg = _small_config(tmp_path)
    before = _digest(cfg)
    out = tmp_path / "run"
    assert main(["simulate", str(cfg), "--outdir", str(out), "--assert"]) == 0
    assert "PASS dominance" in capsys.readouterr().out
    curves = _read_csv(out / "curves.csv")
    assert list(curves[0]) == ["spike", "rule", "norm", "mean_loss", "stderr", "theory_loss"]
    assert len(curves) == 2 * 3 * 2
    reps = _read_csv(out / "replicates.csv")
    assert len(reps) == 2 * 3 * 2 * 6
    report = json.loads((out / "report.json").read_text())
    assert report["seeds"]["base"] == 2024 and len(report["seeds"]["replicates"]) == 6
    assert report["assertions"][0]["passed"] is True
    assert _digest(cfg) == before


def test_simulate_byte_identical(tmp_path):
    cfg = _small_config(tmp_path)
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert main(["simulate", str(cfg), "--outdir", str(a)]) == 0
    assert main(["simulate", str(cfg), "--outdir", str(b)]) == 0
    assert main(["simulate", str(cfg), "--outdir", str(c), "--threads", "4"]) == 0
    for name in ("curves.csv", "replicates.csv", "spectra.csv", "report.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes() == (c / name).read_bytes()


def test_simulate_assertion_failure_exit(tmp_path, capsys):
    cfg = _small_config(tmp_path, assertions=[
        {"kind": "range", "point": 1, "metric": "eigenvalue", "lo": 100, "hi": 200, "label": "impossible"},
    ])
    assert main(["simulate", str(cfg), "--outdir", str(tmp_path / "o"), "--assert"]) == 4
    assert "FAIL impossible" in capsys.readouterr().out
    # without --assert failures are reported but not fatal
    assert main(["simulate", str(cfg), "--outdir", str(tmp_path / "o")]) == 0


def test_simulate_config_errors_reported_together(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({
        "model": {"kind": "spiked_covariance", "n": 0, "p": 10, "colour": "red"},
        "points": [[1.0]],
        "losses": ["Q1"],
        "typo": 1,
    }))
    assert main(["simulate", str(cfg), "--outdir", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert err.count("\n  ") >= 4
    for fragment in ("typo", "colour", "Q1", "model/n"):
        assert fragment in err


def test_simulate_semantic_errors_reported_together(tmp_path, capsys):
    cfg = _small_config(tmp_path, framework="dinf", losses=["F2"], rules=[{"kind": "optimal"}])
    assert main(["simulate", str(cfg), "--outdir", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "needs a norm" in err and "pivot" in err and "baseline" in err


def test_simulate_malformed_json(tmp_path, capsys):
    cfg = tmp_path / "broken.json"
    cfg.write_text("{\n  \"model\": \n")
    assert main(["simulate", str(cfg)]) == 2
    assert "broken.json:3" in capsys.readouterr().err


def test_bundled_configs_validate():
    from spectral_shrink.config import load_config

    names = sorted(p.name for p in CONFIGS.glob("*.json"))
    assert {"dzero_fig.json", "dinf_fig.json", "spn_transition.json", "wigner_demo.json", "cov_maps.json"} <= set(names)
    for name in names:
        load_config(CONFIGS / name)


def test_simulate_signal_plus_noise_config_exit_code(tmp_path, capsys):
    # exit 0 exactly when every configured tolerance holds
    code = main(["simulate", str(CONFIGS / "spn_transition.json"), "--outdir", str(tmp_path / "o"), "--assert"])
    lines = [l for l in capsys.readouterr().out.splitlines() if l.startswith(("PASS", "FAIL"))]
    assert len(lines) == 5
    assert code == (0 if all(l.startswith("PASS") for l in lines) else 4)


@pytest.mark.criterion(8)
@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=3, max_size=3),
        min_size=1,
        max_size=5,
    )
)
def test_matrix_serialization_round_trip(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("rt") / "m.csv"
    m = np.array(rows, dtype=float)
    write_matrix(path, m)
    back = read_matrix(path)
    assert back.shape == m.shape
    assert np.all(np.abs(back - m) <= 1e-15 * np.abs(m))


@pytest.mark.criterion(8)
@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=20))
def test_csv_rows_round_trip(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("rows") / "r.csv"
    rows = [{"k": i, "v": v, "empty": None} for i, v in enumerate(values)]
    write_csv_rows(path, ["k", "v", "empty"], rows)
    back = _read_csv(path)
    assert [float(r["v"]) for r in back] == values
    assert all(r["empty"] == "" for r in back)


@pytest.mark.criterion(8)
def test_cli_outputs_round_trip(tmp_path, spike_input):
    out = tmp_path / "out.csv"
    assert main(["shrink", str(spike_input), "-o", str(out), "--gamma", "0.01", "--rank", "1"]) == 0
    first = read_matrix(out)
    write_matrix(tmp_path / "again.csv", first)
    assert (tmp_path / "again.csv").read_bytes() == out.read_bytes()


def test_matrix_parse_error_type(tmp_path):
    p = tmp_path / "nan.csv"
    p.write_text("1,nan\n")
    with pytest.raises(MatrixParseError) as info:
        read_matrix(p)
    assert (info.value.line, info.value.column) == (1, 2)
