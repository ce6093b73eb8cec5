import json
import math

import numpy as np
import pytest

from renyimps import cli, gallery
from renyimps.channels import QuantumChannel
from renyimps.errors import InvariantViolation, SchemaError
from renyimps.io import digest, parse_tensor_file, parse_text, payload_text, serialize, write_tensor_file
from renyimps.mps import MpsTensor

LOG2 = math.log(2)


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out)


class TestFormat:
    @pytest.mark.parametrize("obj", [gallery.tprime(), gallery.random_mps(3, 2, 5), gallery.beta_mps(0.5)])
    def test_round_trip_is_byte_exact(self, obj):
        text = serialize(obj)
        again = parse_text(text)
        assert type(again) is type(obj) and serialize(again) == text

    def test_random_values_survive(self):
        A = gallery.random_mps(2, 3, 11)
        assert parse_text(serialize(A)).matrices.tobytes() == A.matrices.tobytes()

    def test_example_channel_keeps_zero_singular_gap(self, tmp_path):
        path = tmp_path / "tprime.json"
        write_tensor_file(path, gallery.tprime())
        ch = parse_tensor_file(path)
        assert isinstance(ch, QuantumChannel)
        assert ch.transfer().spectral.singular_gap == pytest.approx(0.0, abs=1e-12)

    def test_mismatched_matrix_names_index_and_line(self):
        doc = json.loads(serialize(gallery.random_mps(3, 2, 0)))
        doc["matrices"][1] = doc["matrices"][1][:1]
        text = serialize(gallery.random_mps(3, 2, 0))
        lines = text.splitlines()
        # drop the second row of matrix 1 while keeping the JSON well formed
        start = lines.index("    [", lines.index("    ],") )
        del lines[start + 2]
        lines[start + 1] = lines[start + 1].rstrip(",")
        with pytest.raises(SchemaError) as info:
            parse_text("\n".join(lines))
        assert info.value.field == "matrices[1]" and info.value.line == start + 1

    @pytest.mark.parametrize("patch, field", [
        ({"version": "v2"}, "version"),
        ({"kind": "mps"}, "kind"),
        ({"d": 0}, "d"),
        ({"D": "2"}, "D"),
        ({"boundary": "open"}, "boundary"),
        ({"matrices": 3}, "matrices"),
    ])
    def test_schema_fields(self, patch, field):
        doc = json.loads(serialize(gallery.beta_mps(0.5)))
        doc.update(patch)
        with pytest.raises(SchemaError) as info:
            parse_text(json.dumps(doc))
        assert info.value.field == field

    def test_bad_complex_entry(self):
        doc = json.loads(serialize(gallery.beta_mps(0.5)))
        doc["matrices"][0][1][0] = [1.0]
        with pytest.raises(SchemaError) as info:
            parse_text(json.dumps(doc))
        assert info.value.field == "matrices[0][1][0]"

    def test_invalid_json_has_line(self):
        with pytest.raises(SchemaError) as info:
            parse_text('{\n  "version": "v1",\n  oops\n}')
        assert info.value.line == 3

    def test_all_zero_is_invariant_violation(self):
        doc = json.loads(serialize(gallery.beta_mps(0.5)))
        doc["matrices"] = [[[[0, 0]] * 2] * 2] * 2
        with pytest.raises(InvariantViolation):
            parse_text(json.dumps(doc))

    def test_missing_file(self, tmp_path):
        with pytest.raises(SchemaError):
            parse_tensor_file(tmp_path / "absent.json")

    def test_payload_is_canonical(self):
        a = payload_text({"b": np.float64(0.5), "a": [1 + 2j, np.int64(3)]})
        assert a == '{"a":[[1.0,2.0],3],"b":0.5}'
        assert digest(a).startswith("sha256:")


class TestEntropyCommand:
    def test_example_grid(self, capsys):
        code, rep = run_cli(capsys, "entropy", "--gallery", "tprime", "--k", "3,4", "--l", "2")
        assert code == 0
        assert all(abs(row["density"] - LOG2) <= 1e-9 for row in rep["results"]["grid"])
        assert rep["results"]["units"] == "nats"

    def test_bits(self, capsys):
        _, rep = run_cli(capsys, "entropy", "--gallery", "tprime", "--k", "3", "--log2")
        assert rep["results"]["grid"][0]["density"] == pytest.approx(1.0, abs=1e-9)

    def test_beta_zeros(self, capsys):
        code, rep = run_cli(capsys, "entropy", "--gallery", "beta:0.5", "--k", "2,3,4")
        assert code == 0 and all(row["density"] == 0.0 for row in rep["results"]["grid"])

    def test_one_dimensional_zeros(self, capsys):
        code, rep = run_cli(capsys, "entropy", "--gallery", "random:2:1:3", "--k", "2,3", "--l", "2,3")
        assert code == 0 and all(row["density"] == 0.0 for row in rep["results"]["grid"])

    def test_finite_sequence(self, capsys):
        _, rep = run_cli(capsys, "entropy", "--gallery", "random:2:2:7", "--n", "8,16")
        seq = rep["results"]["finite_n"][0]["sequence"]
        assert [n for n, _ in seq] == [8, 16]

    def test_file_input(self, capsys, tmp_path):
        path = tmp_path / "t.json"
        assert cli.main(["export", "--gallery", "tprime", "--out", str(path)]) == 0
        code, rep = run_cli(capsys, "entropy", str(path), "--k", "3")
        assert code == 0 and rep["input_digest"] == digest(path.read_bytes())
        assert rep["results"]["grid"][0]["density"] == pytest.approx(LOG2, abs=1e-9)


class TestVerifyCommand:
    def test_random_instance(self, capsys):
        code, rep = run_cli(capsys, "verify", "--gallery", "random:2:2:7", "--n", "8")
        assert code == 0 and rep["results"]["max_residual"] <= 1e-10

    def test_ghz(self, capsys):
        code, rep = run_cli(capsys, "verify", "--gallery", "beta:1.0", "--n", "6", "--alpha", "2")
        row = rep["results"]["rows"][0]
        assert code == 0
        assert row["oracle"] == pytest.approx(0.5, abs=1e-12) and row["transfer"] == pytest.approx(0.5, abs=1e-12)
        assert row["oracle_renyi_alpha"] == pytest.approx(LOG2, abs=1e-10)

    def test_one_dimensional(self, capsys):
        _, rep = run_cli(capsys, "verify", "--gallery", "random:2:1:3", "--n", "6", "--k", "2,3")
        assert all(r["oracle"] == pytest.approx(1.0, abs=1e-14) and r["transfer"] == pytest.approx(1.0, abs=1e-14)
                   for r in rep["results"]["rows"])


class TestBoundsCommand:
    def test_example(self, capsys):
        code, rep = run_cli(capsys, "bounds", "--gallery", "tprime")
        assert code == 0 and rep["results"]["violations"] == []
        assert rep["results"]["rank_chain"][1] == pytest.approx(0.5, abs=1e-12)

    def test_depolarizing(self, capsys):
        _, rep = run_cli(capsys, "bounds", "--gallery", "depolarizing:2")
        assert rep["results"]["t_hat"] == pytest.approx(0.25, abs=1e-12)
        assert rep["results"]["lower"] == pytest.approx(0.25, abs=1e-12)

    def test_sweep(self, capsys):
        code, rep = run_cli(capsys, "bounds", "--sweep", "100", "--dim", "2")
        assert code == 0 and rep["results"]["violation_count"] == 0


class TestExitCodes:
    def test_k_must_divide_n(self, capsys):
        code = cli.main(["verify", "--gallery", "tprime", "--n", "7", "--k", "2"])
        assert code == 2 and json.loads(capsys.readouterr().out)["error"] == "SchemaError"

    def test_bad_gallery_name(self, capsys):
        assert cli.main(["entropy", "--gallery", "nope"]) == 2

    def test_missing_input(self, capsys):
        assert cli.main(["entropy"]) == 2

    def test_all_zero_file(self, capsys, tmp_path):
        doc = json.loads(serialize(gallery.beta_mps(0.5)))
        doc["matrices"] = [[[[0, 0]] * 2] * 2] * 2
        path = tmp_path / "zero.json"
        path.write_text(json.dumps(doc))
        assert cli.main(["entropy", str(path)]) == 3

    def test_residual_above_tolerance(self, capsys, monkeypatch):
        monkeypatch.setattr(cli, "purity_via_transfer", lambda *a: 0.0)
        assert cli.main(["verify", "--gallery", "tprime", "--n", "6"]) == 3

    def test_budget(self, capsys):
        assert cli.main(["verify", "--gallery", "tprime", "--n", "8", "--budget", "16"]) == 4

    def test_not_gapped(self, capsys):
        code = cli.main(["entropy", "--gallery", "beta:1.0"])
        rep = json.loads(capsys.readouterr().out)
        assert code == 5 and rep["leading_moduli"][:2] == pytest.approx([1.0, 1.0])

    def test_not_primitive(self, capsys, tmp_path):
        path = tmp_path / "u.json"
        write_tensor_file(path, QuantumChannel(np.eye(2)[None]))
        assert cli.main(["bounds", str(path)]) == 5


class TestReport:
    def test_deterministic_payload(self, capsys):
        _, a = run_cli(capsys, "entropy", "--gallery", "random:3:2:11", "--k", "2,3")
        _, b = run_cli(capsys, "entropy", "--gallery", "random:3:2:11", "--k", "2,3")
        assert a["payload_digest"] == b["payload_digest"]
        assert a["payload_digest"] == digest(payload_text(a["results"]))

    def test_fields(self, capsys):
        _, rep = run_cli(capsys, "tprime", "--n", "8")
        assert {"version", "artifact_version", "command", "input_digest", "results",
                "payload_digest", "exit_code", "timings"} <= set(rep)
        assert rep["command"]["command"] == "tprime" and rep["exit_code"] == 0

    def test_out_file(self, capsys, tmp_path):
        path = tmp_path / "report.json"
        assert cli.main(["bounds", "--gallery", "tprime", "--out", str(path)]) == 0
        assert capsys.readouterr().out == ""
        assert json.loads(path.read_text())["exit_code"] == 0

    def test_module_entry_point(self):
        import subprocess
        import sys

        proc = subprocess.run([sys.executable, "-m", "renyimps", "bounds", "--gallery", "tprime"],
                              capture_output=True, text=True)
        assert proc.returncode == 0 and json.loads(proc.stdout)["exit_code"] == 0
