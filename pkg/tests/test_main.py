import csv
import io
import json
from types import SimpleNamespace

import pytest

import main
from main import EXIT_OK, EXIT_ORACLE, EXIT_USAGE, EXIT_VALIDATION, number, run
from path_network import FIXTURE_DIR, build_network, serialize_instance

FIXTURE_A = str(FIXTURE_DIR / "fixture_a.json")
FIXTURE_B = str(FIXTURE_DIR / "fixture_b.json")


def invoke(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_instance(tmp_path, name, positions, intervals, **extra):
    path = tmp_path / name
    path.write_text(json.dumps({
        "tau": 1.0,
        "capacity": 1.0,
        "vertices": [
            {"position": p, "weight_min": low, "weight_max": high}
            for p, (low, high) in zip(positions, intervals)
        ],
        **extra,
    }))
    return str(path)


def test_solve_fixture_a(capsys):
    code, out, _ = invoke(capsys, "solve", FIXTURE_A)
    assert code == EXIT_OK
    document = json.loads(out)
    assert document["x_star"] == {"coordinate": 3.0, "kind": "vertex", "index": 2}
    assert document["value"] == 0.0
    assert document["witness"]["weights"] == [1.0, 1.0, 1.0]
    assert document["witness"]["ref"] == 0
    assert [v["r_max"] for v in document["vertices"]] == [3.0, 0.0, 1.0]
    assert [e["index"] for e in document["edges"]] == [1, 2]


def test_solve_reports_original_coordinates(capsys, tmp_path):
    path = write_instance(tmp_path, "shifted.json", [10.0, 13.0, 14.0], [(1.0, 1.0)] * 3)
    code, out, _ = invoke(capsys, "solve", path)
    assert code == EXIT_OK
    document = json.loads(out)
    assert document["x_star"]["coordinate"] == 13.0
    assert [e["x"] for e in document["edges"]] == [13.0, 13.0]


def test_solve_is_reproducible(capsys):
    first = invoke(capsys, "solve", FIXTURE_B)
    second = invoke(capsys, "solve", FIXTURE_B, "--lp-method", "envelope")
    assert first[0] == EXIT_OK
    assert first[1] == second[1]


def test_solve_streaming_matches(capsys):
    _, table, _ = invoke(capsys, "solve", FIXTURE_B)
    _, streaming, _ = invoke(capsys, "solve", FIXTURE_B, "--streaming")
    assert table == streaming


def test_solve_single_vertex(capsys, tmp_path):
    path = write_instance(tmp_path, "single.json", [2.0], [(1.0, 2.0)])
    code, out, _ = invoke(capsys, "solve", path)
    assert code == EXIT_OK
    document = json.loads(out)
    assert document["x_star"] == {"coordinate": 2.0, "kind": "vertex", "index": 1}
    assert document["witness"] == {"ref": None, "weights": [1.0]}
    assert document["vertices"] == [{"index": 1, "r_max": 0.0, "witness_ref": None}]
    assert document["edges"] == []


def test_validate_names_the_vertex(capsys, tmp_path):
    path = write_instance(tmp_path, "bad.json", [0.0, 3.0, 4.0], [(1.0, 1.0), (0.0, 1.0), (1.0, 1.0)])
    code, out, err = invoke(capsys, "validate", path)
    assert code == EXIT_VALIDATION
    assert out == ""
    assert "vertex 2" in err


def test_validate_good_instance(capsys):
    code, out, _ = invoke(capsys, "validate", FIXTURE_A)
    assert code == EXIT_OK
    assert json.loads(out) == {"valid": True, "n": 3, "length": 4.0}


def test_validate_broken_json(capsys, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{")
    assert invoke(capsys, "validate", str(path))[0] == EXIT_VALIDATION


def test_curve_fixture_a(capsys):
    code, out, _ = invoke(capsys, "curve", FIXTURE_A, "--samples", "5")
    assert code == EXIT_OK
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["x", "r_max"]
    body = [(float(x), float(r)) for x, r in rows[1:]]
    assert len(body) == 5
    assert all(r >= 0 for _, r in body)
    assert min(body, key=lambda row: row[1])[0] == 3.0
    assert rows[1:] == [["0", "3"], ["1", "2.5"], ["2", "1.5"], ["3", "0"], ["4", "1"]]


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_curve_is_reproducible(capsys, fmt):
    first = invoke(capsys, "curve", FIXTURE_B, "--samples", "51", "--format", fmt)
    second = invoke(capsys, "curve", FIXTURE_B, "--samples", "51", "--format", fmt)
    assert first[0] == second[0] == EXIT_OK
    assert first[1] == second[1]


def test_curve_as_json(capsys):
    code, out, _ = invoke(capsys, "curve", FIXTURE_A, "--samples", "3", "--format", "json")
    assert code == EXIT_OK
    assert [row["x"] for row in json.loads(out)["curve"]] == [0.0, 2.0, 3.0, 4.0]


def test_cost(capsys):
    code, out, _ = invoke(capsys, "cost", FIXTURE_A, "--scenario", "1,1,1", "--at", "3.5")
    assert code == EXIT_OK
    assert json.loads(out) == {"x": 3.5, "cost": 6.0}


def test_cost_at_the_printed_median(capsys, tmp_path):
    path = write_instance(tmp_path, "offset.json", [0.0, 0.2, 0.4], [(1.0, 1.0)] * 3, offset=0.1)
    _, out, _ = invoke(capsys, "median", path, "--scenario", "1,1,1")
    median = json.loads(out)
    assert median == {"vertex": 2, "coordinate": 0.3, "cost": 1.4}
    code, out, _ = invoke(capsys, "cost", path, "--scenario", "1,1,1", "--at", str(median["coordinate"]))
    assert code == EXIT_OK
    assert json.loads(out) == {"x": 0.3, "cost": median["cost"]}


def test_cost_outside_the_path(capsys):
    code, _, err = invoke(capsys, "cost", FIXTURE_A, "--scenario", "1,1,1", "--at", "4.1")
    assert code == EXIT_VALIDATION
    assert "outside" in err


def test_cost_with_inadmissible_scenario(capsys):
    code, _, err = invoke(capsys, "cost", FIXTURE_B, "--scenario", "1,2.5,1", "--at", "1")
    assert code == EXIT_VALIDATION
    assert "vertex 2" in err


def test_median(capsys):
    code, out, _ = invoke(capsys, "median", FIXTURE_A, "--scenario", "1,1,1")
    assert code == EXIT_OK
    assert json.loads(out) == {"vertex": 2, "coordinate": 3.0, "cost": 5.0}


def test_median_as_csv(capsys):
    code, out, _ = invoke(capsys, "median", FIXTURE_A, "--scenario", "1,1,1", "--format", "csv")
    assert code == EXIT_OK
    assert out == "vertex,coordinate,cost\n2,3,5\n"


def test_scenarios(capsys):
    code, out, _ = invoke(capsys, "scenarios", FIXTURE_B)
    assert code == EXIT_OK
    document = json.loads(out)
    assert document["size"] == len(document["scenarios"])
    first = document["scenarios"][0]
    assert first == {
        "anchor": 1, "side": "left", "intermediate": 2, "weight": 0.5, "weights": [1.0, 0.5, 1.0]
    }


def test_oracle_check(capsys):
    code, out, _ = invoke(capsys, "oracle-check", FIXTURE_B, "--grid", "40")
    assert code == EXIT_OK
    assert json.loads(out)["passed"] is True


def test_oracle_violation_exit_code(capsys, monkeypatch):
    from models import OracleCheck, OracleReport
    failing = OracleReport(checks=(OracleCheck(name="end_to_end", passed=False, detail="forced"),))
    monkeypatch.setattr(main, "run_checks", lambda *args, **kwargs: failing)
    code, out, _ = invoke(capsys, "oracle-check", FIXTURE_A)
    assert code == EXIT_ORACLE
    assert json.loads(out)["passed"] is False


def test_output_file(capsys, tmp_path):
    target = tmp_path / "solution.json"
    code, out, _ = invoke(capsys, "solve", FIXTURE_A, "--output", str(target))
    assert code == EXIT_OK
    assert out == ""
    assert json.loads(target.read_text())["value"] == 0.0


def test_serialized_instance_solves_the_same(capsys, tmp_path):
    net = build_network([2.0, 4.5, 5.0], [(1.0, 1.0), (0.5, 2.0), (1.0, 1.0)], 1.0, 1.0)
    path = tmp_path / "instance.json"
    path.write_text(serialize_instance(net))
    code, out, _ = invoke(capsys, "solve", str(path))
    assert code == EXIT_OK
    assert 2.0 <= json.loads(out)["x_star"]["coordinate"] <= 5.0


def test_bench(capsys):
    code, out, _ = invoke(capsys, "bench", "--n", "3,5", "--repeat", "2", "--seed", "11")
    assert code == EXIT_OK
    table, summary = out.split("\n\n")
    rows = list(csv.reader(io.StringIO(table)))
    assert rows[0] == ["n", "seed", "universe_size", "seconds"]
    assert [(row[0], row[1]) for row in rows[1:]] == [("3", "11"), ("3", "12"), ("5", "11"), ("5", "12")]
    assert summary.splitlines()[0] == "n,median_seconds"


def test_bench_times_scenario_construction(capsys, monkeypatch):
    clock = [0.0]
    build = main.universe

    def universe_taking_five_seconds(net, *args):
        clock[0] += 5.0
        return build(net, *args)

    monkeypatch.setattr(main, "time", SimpleNamespace(perf_counter=lambda: clock[0]))
    monkeypatch.setattr(main, "universe", universe_taking_five_seconds)
    code, out, _ = invoke(capsys, "bench", "--n", "3", "--repeat", "1")
    assert code == EXIT_OK
    table, _ = out.split("\n\n")
    (row,) = csv.DictReader(io.StringIO(table))
    assert float(row["seconds"]) == 5.0


@pytest.mark.parametrize("argv", [
    [],
    ["solve"],
    ["frobnicate", FIXTURE_A],
    ["cost", FIXTURE_A, "--at", "1"],
    ["cost", FIXTURE_A, "--scenario", "1,x,1", "--at", "1"],
    ["solve", FIXTURE_A, "--lp-method", "simplex"],
    ["solve", FIXTURE_A, "--workers", "0"],
    ["curve", FIXTURE_A, "--samples", "0"],
    ["bench", "--n", "3,zero"],
])
def test_usage_errors(capsys, argv):
    code, out, _ = invoke(capsys, *argv)
    assert code == EXIT_USAGE
    assert out == ""


def test_number_formatting():
    assert number(1 / 3) == 0.333333333333
    assert number(-0.0) == 0.0
    assert str(number(-0.0)) == "0.0"
    assert number(2.0) == 2.0
