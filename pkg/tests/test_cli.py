import json

import pytest

from app.core.config import settings
from app.core.storage import read_grid
from app.core.utils import parse_range
from app.main import main
from app.models.internal import Ensemble, SimConfig
from app.services.tomography import extract_contour, simulate_grid

SMALL_SIM = ["--n", "30:300:3log", "--g", "0.7:1.0:4", "--trials", "6", "--seed", "42"]


def run(capsys, *argv: str) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def data_rows(text: str) -> list[list[str]]:
    return [line.split(",") for line in text.splitlines() if line and not line.startswith("#")]


def as_json(text: str) -> dict:
    record = json.loads(text)
    assert set(record) == {"schema_version", "params", "payload"}
    assert record["schema_version"] == settings.SCHEMA_VERSION
    return record


def test_qcb_curve_table(capsys):
    code, out, _ = run(capsys, "curve", "--task", "qcb", "--ref", "1000,0.75", "--g", "0.6:1.0:41")
    assert code == 0
    assert out.startswith(f"# schema_version={settings.SCHEMA_VERSION}\n# command=curve\n# params=")
    rows = data_rows(out)
    assert rows[0] == ["g", "m"]
    assert len(rows) == 42
    assert float(rows[-1][0]) == 1.0
    assert float(rows[-1][1]) == pytest.approx(100.03, rel=1e-4)


def test_rtp_curve_single_point(capsys):
    code, out, _ = run(capsys, "curve", "--task", "rtp", "--ref", "1000,0.75", "--d", "2", "--g", "0.75:0.75:1")
    assert code == 0
    rows = data_rows(out)
    assert len(rows) == 2
    assert [float(v) for v in rows[1]] == pytest.approx([0.75, 1000.0])


def test_all_curves_emit_band(capsys):
    code, out, _ = run(capsys, "curve", "--task", "all", "--ref", "1000,0.75", "--g", "0.6:1.0:9")
    assert code == 0
    blocks = [line for line in out.splitlines() if line.startswith("# block=")]
    assert blocks == ["# block=rtp", "# block=qcb", "# block=purification", "# block=qst", "# block=band"]


def test_curve_reports_truncation_without_failing(capsys):
    code, out, _ = run(capsys, "curve", "--task", "qst", "--ref", "1000,0.75", "--g", "0.5:1.0:6")
    assert code == 0
    assert "# truncated g=0.5 m=inf singular=true" in out
    assert len(data_rows(out)) == 6


def test_curve_json(capsys):
    code, out, _ = run(capsys, "curve", "--task", "qst", "--ref", "1000,0.75", "--g", "0.65:1.0:3", "--format", "json")
    assert code == 0
    record = as_json(out)
    assert record["params"]["ref"] == [1000.0, 0.75]
    assert record["payload"]["task"] == "QST"
    assert [row["m"] for row in record["payload"]["rows"]][-1] == pytest.approx(250.0)


@pytest.mark.parametrize(
    "offer, overall",
    [("10000,0.65", "accept"), ("100,0.90", "reject"), ("2900,0.65", "task-dependent")],
)
def test_trade_overall(capsys, offer, overall):
    code, out, _ = run(capsys, "trade", "--ref", "1000,0.75", "--offer", offer, "--format", "json")
    assert code == 0
    assert as_json(out)["payload"]["overall"] == overall


def test_trade_with_itself(capsys):
    code, out, _ = run(capsys, "trade", "--ref", "1000,0.75", "--offer", "1000,0.75")
    assert code == 0
    rows = data_rows(out)
    assert rows[0] == ["task", "verdict", "m_required", "m_offered", "copies_required"]
    assert {row[1] for row in rows[1:5]} == {"equivalent"}
    assert rows[5] == ["overall", "indifferent", "region", "region_strength"]
    assert rows[6][:2] == ["accept", "true"]


@pytest.mark.parametrize(
    "query, region",
    [("10000,0.65", "II"), ("2000,0.80", "III"), ("100,0.90", "V")],
)
def test_region(capsys, query, region):
    code, out, _ = run(capsys, "region", "--ref", "1000,0.75", "--query", query, "--format", "json")
    assert code == 0
    assert as_json(out)["payload"]["region"] == region


def test_region_on_reference(capsys):
    code, out, _ = run(capsys, "region", "--ref", "1000,0.75", "--query", "1000,0.75")
    assert code == 0
    header, row = data_rows(out)
    flags = dict(zip(header, row))
    assert (flags["on_copies"], flags["on_fidelity"], flags["on_separation"]) == ("true", "true", "true")


def test_rank(capsys):
    code, out, _ = run(capsys, "rank", "--ens", "1000,0.75", "--ens", "10000,0.65", "--ens", "100,0.90", "--format", "json")
    assert code == 0
    rows = as_json(out)["payload"]["rows"]
    assert rows[1]["ranks"] == {"RTP": 1, "QCB": 1, "PURIFICATION": 1, "QST": 1}


def test_simulate_is_byte_identical(capsys, tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "simulate", *SMALL_SIM, "--out", str(first))[0] == 0
    assert run(capsys, "simulate", *SMALL_SIM, "--out", str(second), "--threads", "3")[0] == 0
    assert first.read_bytes() == second.read_bytes()


def test_simulate_single_cell(capsys, tmp_path):
    out_path = tmp_path / "tiny.csv"
    code, out, _ = run(capsys, "simulate", "--trials", "1", "--n", "100", "--g", "0.75", "--out", str(out_path), "--format", "json")
    assert code == 0
    summary = as_json(out)["payload"]
    assert (summary["n_count"], summary["g_count"], summary["seed"]) == (1, 1, 0)
    assert len(data_rows(out_path.read_text())) == 2


def test_simulate_uses_configured_output_directory(capsys, monkeypatch, tmp_path):
    monkeypatch.setattr(settings, "OUTPUT_DIR", str(tmp_path / "env"))
    code, _, _ = run(capsys, "simulate", "--trials", "1", "--n", "30", "--g", "0.9", "--seed", "5")
    assert code == 0
    assert (tmp_path / "env" / "grid_seed5.csv").exists()


def test_contour_matches_in_process_result(capsys, tmp_path):
    path = tmp_path / "grid.csv"
    assert run(capsys, "simulate", *SMALL_SIM, "--out", str(path))[0] == 0
    code, out, _ = run(capsys, "contour", "--grid", str(path), "--ref", "95,0.8", "--format", "json")
    assert code == 0

    config = SimConfig(
        n_grid=parse_range("30:300:3log", "--n", integer=True),
        g_grid=parse_range("0.7:1.0:4"),
        trials=6,
        master_seed=42,
    )
    expected = extract_contour(simulate_grid(config), Ensemble(n=95, f=0.8))
    payload = as_json(out)["payload"]
    assert [(row["g"], row["m"]) for row in payload["rows"]] == [(p.g, p.m) for p in expected.points]
    assert payload["gaps"] == expected.gaps
    assert read_grid(path).master_seed == 42


def test_contour_table_marks_gaps(capsys, tmp_path):
    path = tmp_path / "grid.csv"
    run(capsys, "simulate", *SMALL_SIM, "--out", str(path))
    code, out, _ = run(capsys, "contour", "--grid", str(path), "--ref", "95,0.8")
    assert code == 0
    rows = data_rows(out)
    assert rows[0] == ["g", "m", "gap"]
    assert all(row[2] in ("true", "false") for row in rows[1:])


@pytest.mark.parametrize(
    "argv",
    [
        ["curve", "--task", "rtp", "--ref", "1000,0.4", "--g", "0.6:1.0:3"],
        ["curve", "--task", "teleport", "--ref", "1000,0.75"],
        ["curve", "--task", "qcb", "--ref", "1000,0.75", "--g", "0.6:1.0"],
        ["curve", "--task", "qcb", "--ref", "1000,0.75", "--theta", "0"],
        ["trade", "--ref", "1000,0.75", "--offer", "abc"],
        ["trade", "--ref", "1000,0.75"],
        ["region", "--ref", "1000,0.75", "--query", "10,0.3"],
        ["simulate", "--n", "100", "--g", "0.75", "--trials", "0"],
        ["simulate", "--n", "100", "--g", "0.75", "--seed", "-1"],
        ["simulate", "--n", "2", "--g", "0.75"],
        ["rank"],
        [],
    ],
)
def test_usage_and_domain_errors_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_domain_error_names_the_flag(capsys):
    code, _, err = run(capsys, "trade", "--ref", "1000,0.75", "--offer", "1000,0.4")
    assert code == 2
    assert "--offer" in err


def test_contour_outside_grid_exits_2(capsys, tmp_path):
    path = tmp_path / "grid.csv"
    run(capsys, "simulate", *SMALL_SIM, "--out", str(path))
    assert run(capsys, "contour", "--grid", str(path), "--ref", "5000,0.8")[0] == 2


def test_missing_grid_exits_3(capsys, tmp_path):
    assert run(capsys, "contour", "--grid", str(tmp_path / "absent.csv"), "--ref", "100,0.8")[0] == 3


def test_unwritable_output_exits_3(capsys, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code = run(capsys, "simulate", "--trials", "1", "--n", "30", "--g", "0.9", "--out", str(blocker / "grid.csv"))[0]
    assert code == 3
