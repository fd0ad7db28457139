import json
import math

import numpy as np
import pytest

from certbound import cli
from certbound.cli import ConfigError, main, parse_angle, parse_int_list, parse_lab_spec, parse_state_spec
from certbound.errors import DivergenceError
from certbound.qstate import StateVector, make_ghz


def run_json(capsys, *argv):
    assert main(list(argv)) == 0
    return json.loads(capsys.readouterr().out)


@pytest.mark.parametrize("text, value", [("pi", math.pi), ("2pi", 2 * math.pi), ("pi/2", math.pi / 2),
                                         ("0.5", 0.5), ("3*pi/4", 0.75 * math.pi)])
def test_parse_angle(text, value):
    assert parse_angle(text) == pytest.approx(value)


def test_parse_angle_rejects_garbage():
    with pytest.raises(ConfigError):
        parse_angle("tau")


def test_parse_state_spec(tmp_path):
    np.testing.assert_allclose(parse_state_spec("ghz:3").amplitudes, make_ghz(3).amplitudes)
    np.testing.assert_allclose(parse_state_spec("ghz:2:phi=pi").amplitudes, make_ghz(2, math.pi).amplitudes)
    assert parse_state_spec("basis:0110").amplitudes[6] == 1
    a, b = parse_state_spec("haar:3:7"), parse_state_spec("haar:3:7")
    np.testing.assert_array_equal(a.amplitudes, b.amplitudes)
    path = tmp_path / "psi.json"
    path.write_text(make_ghz(2).to_json())
    np.testing.assert_allclose(parse_state_spec(f"file:{path}").amplitudes, make_ghz(2).amplitudes)


@pytest.mark.parametrize("spec", ["ghz", "ghz:x", "basis:012", "nope:1", "file:/does/not/exist", "haar:2"])
def test_bad_state_specs(spec):
    with pytest.raises(ConfigError):
        parse_state_spec(spec)


def test_non_normalized_file_is_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n_qubits": 1, "amplitudes": [[1, 0], [1, 0]]}))
    with pytest.raises(ConfigError):
        parse_state_spec(f"file:{path}")


def test_parse_lab_spec():
    psi = make_ghz(2)
    assert parse_lab_spec("target", psi, None).entries[0, 3] == pytest.approx(0.5)
    dep = parse_lab_spec("depolarized:0.5", psi, None)
    assert dep.entries[1, 1] == pytest.approx(0.125)
    assert parse_lab_spec("mixed", None, 3).n_qubits == 3
    with pytest.raises(ConfigError):
        parse_lab_spec("depolarized:2", psi, None)
    with pytest.raises(ConfigError):
        parse_lab_spec("target", None, 2)


def test_parse_int_list():
    assert parse_int_list("2,3") == [2, 3]
    assert parse_int_list("2-4") == [2, 3, 4]


def test_size_bound_command(capsys):
    doc = run_json(capsys, "size-bound", "--state", "basis:00")
    assert doc["schema"] == "certbound/1"
    assert doc["result"]["value"] == pytest.approx(math.sqrt(0.9375))
    doc = run_json(capsys, "size-bound", "--state", "ghz:2")
    # |GHZ><GHZ| on 2 qubits: norm_sq 1/4 with probs (1/4, 0, 3/4)
    assert doc["result"]["value"] == pytest.approx(math.sqrt(27 / 16))


def test_size_dist_command(capsys):
    doc = run_json(capsys, "size-dist", "--state", "basis:00", "--observable", "pauli:XZ")
    assert doc["result"]["probs"] == pytest.approx([0, 0, 1])


def test_ghz_bound_command_csv(capsys):
    assert main(["ghz-bound", "--n-min", "2", "--n-max", "4"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# certbound/1 {")
    assert lines[1] == "N,value"
    for line in lines[2:]:
        n, val = line.split(",")
        assert float(val) == pytest.approx(1.5 ** (int(n) / 2) / math.sqrt(2), rel=1e-9)


def test_haar_scaling_command(capsys):
    doc = run_json(capsys, "haar-fidelity-scaling", "--n-max", "3", "--format", "json")
    vals = [r["value_sq"] for r in doc["result"]["series"]]
    assert vals == pytest.approx([(10**n - 1) / (4**n * (2**n + 1)) for n in (1, 2, 3)])


def test_table1_command_csv(capsys):
    assert main(["table1", "--n", "2", "--states", "3", "--unitaries", "20", "--seed", "5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# certbound/1 ")
    assert lines[1] == "N,t_mean,t_std,M,n_unitaries,seed"
    assert lines[2].split(",")[0] == "2"
    assert lines[2].split(",")[-1] == "7"


def test_json_output_is_reproducible(tmp_path, capsys):
    path = tmp_path / "run.json"
    outs = []
    for _ in range(2):
        assert main(["simulate", "--state", "haar:2:1", "--lab", "mixed", "--samples", "500",
                     "--seed", "11", "--output", str(path)]) == 0
        text = path.read_text()
        outs.append("".join(line for line in text.splitlines(True) if '"created"' not in line))
    assert outs[0] == outs[1]
    assert capsys.readouterr().out == ""


def test_simulate_csv_rows(capsys):
    assert main(["simulate", "--state", "ghz:2", "--samples", "50", "--format", "csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1] == "shot,n1x,n1y,n1z,n2x,n2y,n2z,estimate"
    assert len(lines) == 52


def test_confront_command(capsys):
    doc = run_json(capsys, "confront", "--state", "haar:2:3", "--samples", "20000")
    assert doc["result"]["satisfied"] is True
    assert doc["result"]["fidelity"] == pytest.approx(0.25)


def test_kfactor_command(capsys):
    doc = run_json(capsys, "kfactor", "--n", "2", "--samples", "2000")
    assert doc["result"]["K"]["value"] == pytest.approx(4.0)


def test_exit_code_for_bad_config(capsys):
    assert main(["size-bound", "--state", "bogus:1"]) == 2
    assert main(["kfactor", "--state", "basis:0", "--lab", "target", "--alpha", "4", "--samples", "2000"]) == 2
    assert "error" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def test_exit_code_for_divergence(monkeypatch, capsys):
    def diverge(*args, **kwargs):
        raise DivergenceError("unstable")

    monkeypatch.setattr(cli, "k_factor_mc", diverge)
    assert main(["kfactor", "--n", "1", "--samples", "2000"]) == 3
    assert "divergence" in capsys.readouterr().err


def test_thread_count_does_not_change_output(capsys):
    docs = []
    for t in ("1", "3"):
        doc = run_json(capsys, "confront", "--state", "haar:2:3", "--samples", "20000", "--threads", t)
        doc.pop("created")
        docs.append(doc["result"])
    assert docs[0] == docs[1]
