import io
import json
import math

import pytest

from thermoforge.cli import RunConfig, main, run
from thermoforge.gibbs_maps import GibbsMap
from thermoforge.io import InputError, parse_system, round_report, state_to_json

QUBIT = {"beta": 1.0, "levels": [{"energy": 0.0, "degeneracy": 1}, {"energy": 1.0, "degeneracy": 1}]}


def write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else json.dumps(data))
    return str(path)


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def files(tmp_path):
    state = dict(QUBIT, probabilities=[0.3, 0.7])
    return {
        "gibbs": write(tmp_path, "gibbs.json", QUBIT),
        "excited": write(tmp_path, "excited.json", state),
        "single": write(tmp_path, "single.json", {"beta": 1.0, "levels": [{"energy": 0.0}]}),
        "bad": write(tmp_path, "bad.json", '{"beta": 1.0,\n "levels": [}'),
    }


def test_feasible_to_gibbs(files):
    code, out, _ = call("feasible", files["excited"], files["gibbs"])
    assert code == 0
    assert json.loads(out)["feasible"] is True


def test_infeasible_exit_code(files):
    code, out, _ = call("feasible", files["gibbs"], files["excited"])
    assert code == 2
    assert json.loads(out)["verdict"] == "infeasible"


def test_curve_of_gibbs_is_two_points(files):
    code, out, _ = call("curve", files["gibbs"], "--format=csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "x,y,x_normalized"
    assert len(lines) == 3
    assert lines[2].split(",")[2] == "1.0"


def test_switch_thermal(files):
    code, out, _ = call("switch", files["single"], files["gibbs"])
    rep = json.loads(out)
    assert code == 0
    assert rep["W"] == pytest.approx(math.log(1 + math.exp(-1)), abs=1e-9)
    assert rep["thermal"] == pytest.approx(math.log(1 + math.exp(-1)), abs=1e-12)


def test_work_report(files):
    code, out, _ = call("work", files["excited"])
    rep = json.loads(out)
    assert code == 0
    assert list(rep["distill"]) == ["value", "epsilon", "mode", "exact", "certificate_margin"]
    assert rep["form"]["value"] >= rep["distill"]["value"]


def test_lp_check_emits_round_trippable_map(files):
    code, out, _ = call("lp-check", files["excited"], files["gibbs"], "--exact")
    rep = json.loads(out)
    assert code == 0 and rep["method"] == "exact"
    G = GibbsMap.from_json(rep["map"])
    assert GibbsMap.from_json(json.loads(json.dumps(G.to_json()))) == G


def test_db_check_negative(files):
    code, out, _ = call("db-check", files["gibbs"], files["excited"])
    assert code == 2
    assert json.loads(out)["map"] is None


def test_oracle_command(tmp_path):
    sys3 = {"beta": math.log(2), "levels": [{"energy": 0}, {"energy": 1}, {"energy": 2}]}
    a = write(tmp_path, "a.json", dict(sys3, probabilities=[0.2, 0.5, 0.3]))
    b = write(tmp_path, "b.json", dict(sys3, probabilities=[0.6, 0.3, 0.1]))
    code, out, _ = call("oracle", a, b, "--bath-emax=12")
    rep = json.loads(out)
    assert code == 0
    assert rep["bath"]["exact"] and rep["oplus_distance"] == 0.0
    assert all(row["agree"] for row in rep["agreement"])


def test_info_state_round_trips(files):
    code, out, _ = call("info", files["excited"])
    state = json.loads(out)["state"]
    spec = parse_system(json.dumps(state))
    assert spec.probabilities == (0.3, 0.7)


def test_malformed_json_reports_position(files):
    code, _, err = call("info", files["bad"])
    assert code == 1
    assert "line 2" in err and "column" in err


def test_dimension_mismatch_named(files):
    code, _, err = call("feasible", files["excited"], files["single"])
    assert code == 1
    assert "dimension mismatch" in err


def test_bad_flags_are_input_errors(files):
    assert call("work", files["excited"], "--epsilon=1.5")[0] == 1
    assert call("work", files["excited"], "--format=csv")[0] == 1
    assert call("feasible", files["excited"])[0] == 1


def test_reports_are_deterministic(files):
    first = call("work", files["excited"])[1]
    assert call("work", files["excited"])[1] == first


def test_run_with_config(files, capsys):
    assert run(RunConfig("feasible", [files["excited"], files["gibbs"]], tolerance=1e-9)) == 0
    assert json.loads(capsys.readouterr().out)["feasible"]


def test_schema_errors():
    with pytest.raises(InputError, match="levels\\[0\\].degeneracy"):
        parse_system('{"beta": 1, "levels": [{"energy": 0, "degeneracy": 0}]}')
    with pytest.raises(InputError, match="2 entries for 1 microstates"):
        parse_system('{"beta": 1, "levels": [{"energy": 0}], "probabilities": [0.5, 0.5]}')
    with pytest.raises(InputError, match="unknown field"):
        parse_system('{"beta": 1, "levels": [{"energy": 0}], "temp": 3}')
    with pytest.raises(InputError, match="beta"):
        parse_system('{"beta": -1, "levels": [{"energy": 0}]}')


def test_rational_probabilities():
    text = '{"beta": 1, "levels": [{"energy": 0}, {"energy": 1}], "probabilities": ["1/3", "2/3"]}'
    spec = parse_system(text)
    assert spec.probabilities == (1 / 3, 2 / 3)


def test_state_json_round_trip():
    spec = parse_system(json.dumps(dict(QUBIT, probabilities=[0.1234567890123456, 0.8765432109876544])))
    p = spec.state()
    assert parse_system(state_to_json(p, 1.0)).state() == p


def test_report_rounding():
    assert round_report({"a": [1 / 3, -0.0]}) == {"a": [0.333333333333, 0.0]}
