import json
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from bellchsh import linalg
from bellchsh.behavior import Behavior, behavior_from_scenario
from bellchsh.cli import main
from bellchsh.models import get_preset
from bellchsh.scenario_file import format_behavior_file

SQRT8 = 2 * np.sqrt(2)


@pytest.fixture
def emit(tmp_path, capsys):
    def _emit(name):
        path = tmp_path / f"{name}.scn"
        assert main(["presets", "emit", name, str(path)]) == 0
        capsys.readouterr()
        return str(path)

    return _emit


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--json")
    assert code == 0, err
    return json.loads(out)


class TestAnalyze:
    def test_classical(self, emit, capsys):
        r = run_json(capsys, "analyze", emit("classical"))
        assert r["chsh"] == pytest.approx(2, abs=1e-9)
        assert r["embeddability"]["verdict"] == "feasible"
        assert len(r["embeddability"]["certificate"]) == 16

    def test_singlet(self, emit, capsys):
        r = run_json(capsys, "analyze", emit("singlet-tsirelson"))
        assert r["chsh"] == pytest.approx(SQRT8, abs=1e-9)
        assert r["chsh_expectation"] == pytest.approx(SQRT8, abs=1e-9)
        assert r["chsh_spectral_bound"] == pytest.approx(SQRT8, abs=1e-9)
        assert r["square_identity_residual"] <= 1e-9
        assert len(r["commutators"]) == 6
        assert r["marginal_laws"]["satisfied"] is True
        assert r["embeddability"]["witness"]["type"] == "fine"

    def test_beyond(self, emit, capsys):
        r = run_json(capsys, "analyze", emit("beyond-tsirelson"))
        assert r["chsh"] == 4
        assert r["square_identity_residual"] is None
        assert r["marginal_laws"]["max_discrepancy"] == 2
        assert r["embeddability"]["witness"]["type"] == "marginal"
        assert r["embeddability"]["fine_violation"]["value"] == 4

    def test_human_output(self, emit, capsys):
        code, out, _ = run(capsys, "analyze", emit("singlet-tsirelson"))
        assert code == 0
        assert "CHSH from behavior: 2.82843" in out
        assert "INFEASIBLE" in out

    def test_json_has_every_field(self, emit, capsys):
        r = run_json(capsys, "analyze", emit("classical"))
        for key in (
            "scenario", "square_identity_residual", "local_commutator_norms", "commutators",
            "chsh_expectation", "chsh_spectral_bound", "behavior", "correlators", "chsh",
            "fine_values", "marginal_laws", "embeddability",
        ):
            assert key in r

    def test_malformed_row(self, tmp_path, capsys):
        path = tmp_path / "bad.scn"
        path.write_text("[dimensions]\nalice 2\nbob 2\n[state]\nsinglet\n[observables]\nA = matrix\n  1 0\n  0\n")
        code, out, err = run(capsys, "analyze", str(path))
        assert code == 1 and "line 9" in err and out == ""

    def test_missing_file(self, tmp_path, capsys):
        code, _, err = run(capsys, "analyze", str(tmp_path / "nope.scn"))
        assert code == 1 and "cannot read" in err

    def test_numerical_failure(self, emit, capsys, monkeypatch):
        path = emit("singlet-tsirelson")
        monkeypatch.setattr(linalg, "JACOBI_MAX_SWEEPS", 0)
        code, _, err = run(capsys, "analyze", path)
        assert code == 2 and "numerical failure" in err

    def test_usage_error(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["analyze"])
        assert info.value.code == 1


class TestMarginals:
    def test_beyond(self, emit, capsys):
        code, out, _ = run(capsys, "marginals", emit("beyond-tsirelson"))
        assert code == 0
        assert out.startswith("marginal laws: VIOLATED, max discrepancy 2")

    def test_singlet(self, emit, capsys):
        _, out, _ = run(capsys, "marginals", emit("singlet-tsirelson"))
        assert "SATISFIED" in out

    def test_behavior_only(self, tmp_path, capsys):
        path = tmp_path / "uniform.beh"
        path.write_text(format_behavior_file(Behavior.uniform()))
        r = run_json(capsys, "marginals", str(path))
        assert r["satisfied"] is True and r["max_discrepancy"] == 0


class TestEmbed:
    def test_classical_certificate(self, emit, capsys):
        code, out, _ = run(capsys, "embed", emit("classical"))
        lines = out.splitlines()
        assert code == 0 and len(lines) == 16
        assert lines[0] == "+1 +1 +1 +1 1.0"

    def test_singlet_witness(self, emit, capsys):
        _, out, _ = run(capsys, "embed", emit("singlet-tsirelson"))
        assert out.startswith("witness: Fine inequality #1 = 2.82843 > 2")

    def test_exact_rejects_irrational(self, emit, capsys):
        code, _, err = run(capsys, "embed", "--exact", emit("singlet-tsirelson"))
        assert code == 1 and "--exact" in err

    def test_exact_classical(self, emit, capsys):
        r = run_json(capsys, "embed", "--exact", emit("classical"))
        assert r["exact"] is True
        assert r["certificate"][0]["weight"] == "1"

    def test_exact_behavior_file(self, tmp_path, capsys):
        path = tmp_path / "uniform.beh"
        path.write_text(format_behavior_file(Behavior.uniform()))
        code, out, _ = run(capsys, "embed", "--exact", str(path))
        assert code == 0
        assert sum(Fraction(l.split()[-1]) for l in out.splitlines()) == 1


class TestSample:
    def test_singlet(self, emit, capsys):
        r = run_json(capsys, "sample", emit("singlet-tsirelson"), "--shots", "1000000", "--seed", "3")
        assert abs(r["chsh"]["value"] - SQRT8) <= 3 * r["chsh"]["standard_error"]
        assert r["within_3_standard_errors"] is True

    def test_insufficient(self, emit, capsys):
        code, out, _ = run(capsys, "sample", emit("classical"), "--shots", "10")
        assert code == 0 and "insufficient statistics" in out
        r = run_json(capsys, "sample", emit("classical"), "--shots", "10")
        assert r["insufficient_statistics"] is True
        assert r["marginal_laws"]["satisfied"] is None

    def test_byte_identical(self, emit, capsys, tmp_path):
        path = emit("singlet-tsirelson")
        outs = []
        for k in range(2):
            dump = tmp_path / f"dump{k}.txt"
            _, out, _ = run(capsys, "sample", path, "--seed", "99", "--dump", str(dump))
            outs.append((out, dump.read_bytes()))
        assert outs[0] == outs[1]
        assert outs[0][1].startswith(b"# seed=99 shots=10000\n")

    def test_bad_shots(self, emit, capsys):
        code, _, _ = run(capsys, "sample", emit("classical"), "--shots", "0")
        assert code == 1


class TestPresets:
    def test_list(self, capsys):
        code, out, _ = run(capsys, "presets", "list")
        lines = out.splitlines()
        assert code == 0 and len(lines) == 3
        assert "2.82843" in out and " 4 " in out

    def test_emit_unwritable(self, tmp_path, capsys):
        code, _, err = run(capsys, "presets", "emit", "classical", str(tmp_path / "missing" / "x.scn"))
        assert code == 1 and "cannot write" in err

    def test_emit_unknown(self, tmp_path, capsys):
        code, _, _ = run(capsys, "presets", "emit", "pr-box", str(tmp_path / "x.scn"))
        assert code == 1

    @pytest.mark.parametrize("name", ["classical", "singlet-tsirelson", "beyond-tsirelson"])
    def test_round_trip(self, name, emit, capsys):
        p = get_preset(name)
        r = run_json(capsys, "analyze", emit(name))
        assert r["chsh"] == pytest.approx(p.expected_chsh, abs=1e-9)
        assert (r["marginal_laws"]["satisfied"] is True) == (p.expected_marginal_laws == "satisfied")
        direct = behavior_from_scenario(p.scenario).tables
        assert r["behavior"]["A B"]["+1,+1"] == pytest.approx(direct[0, 0, 0, 0], abs=1e-15)


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "bellchsh", "presets", "list"], capture_output=True, text=True, check=True)
    assert "beyond-tsirelson" in out.stdout
