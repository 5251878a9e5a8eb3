from __future__ import annotations

import io
import json
from importlib import resources

import numpy as np
import pytest

from qhm import checks
from qhm.cli import THREAD_VARS, UsageError, apply_thread_cap, main
from qhm.core import Grid, ManifoldParams, loads, random_element


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def elem(tmp_path):
    path = tmp_path / "a.json"
    assert run("gen", "--seed", "3", "--out", str(path))[0] == 0
    return str(path)


def test_trace_of_identity_fixture():
    assert run("trace", "@identity") == (0, "1.0+0.0i\n", "")


def test_fourier_roundtrips_p2_fixture(tmp_path):
    out = tmp_path / "f.json"
    assert run("fourier", "@slice_p2", "--n", "2", "--out", str(out))[0] == 0
    src = json.loads((resources.files("qhm") / "fixtures" / "slice_p2.json").read_text())
    assert json.loads(out.read_text())["data"] == src["data"]


def test_gen_is_deterministic_and_embeds_config(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run("gen", "--seed", "5", "--out", str(a))
    run("gen", "--seed", "5", "--out", str(b))
    doc = json.loads(a.read_text())
    assert doc["config"]["seed"] == 5
    assert doc["config"]["params"] == ManifoldParams().to_dict()
    assert doc["config"]["grid"] == Grid().to_dict()
    e = loads(a.read_text())
    assert np.array_equal(e.values, random_element(ManifoldParams(), Grid(), 5).values)
    assert json.loads(b.read_text())["data"] == doc["data"]


def test_gen_respects_flags(tmp_path):
    path = tmp_path / "s.json"
    code, _, _ = run("gen", "--kind", "state", "--hbar", "0.5", "--nx", "8", "--ny", "8", "--p-max", "2",
                     "--out", str(path))
    assert code == 0
    doc = json.loads(path.read_text())
    assert doc["kind"] == "state" and doc["params"]["hbar"] == 0.5 and doc["grid"]["p_max"] == 2


@pytest.mark.parametrize(
    "argv",
    [
        ("adjoint",),
        ("cesaro", "--N", "4"),
        ("act", "--r", "0.3", "--s", "0.2", "--t", "1"),
        ("smooth", "--m", "4"),
        ("deriv", "--which", "1"),
        ("deriv", "--which", "2"),
        ("laplacian",),
        ("heat", "--t", "0.5"),
        ("fourier", "--n", "1", "--nt", "16"),
    ],
)
def test_element_commands_emit_loadable_elements(elem, argv):
    code, out, err = run(argv[0], elem, *argv[1:])
    assert code == 0, err
    doc = json.loads(out)
    assert doc["command"].startswith(argv[0])
    assert "config" in doc
    assert loads(out).kind == "element"


def test_star_and_apply(elem, tmp_path):
    xi = tmp_path / "xi.json"
    run("gen", "--kind", "state", "--out", str(xi))
    code, out, _ = run("star", elem, elem)
    assert code == 0 and "clipped_mass" in json.loads(out)
    code, out, _ = run("apply", elem, str(xi))
    assert code == 0 and loads(out).kind == "state"
    assert run("apply", str(xi), elem)[0] == 2


@pytest.mark.parametrize(
    "argv, key",
    [
        (("norm",), "norm"),
        (("norm", "--method", "power"), "norm"),
        (("lipnorm",), "lip_norm"),
        (("holder", "--A", "1", "--B", "1", "--C", "0.5", "--t-points", "6"), "value"),
        (("trace",), "re"),
    ],
)
def test_report_commands(elem, argv, key):
    code, human, _ = run(argv[0], elem, *argv[1:])
    assert code == 0 and human.strip()
    if argv[0] != "trace":
        float(human.split()[0])
    code, out, _ = run(argv[0], elem, *argv[1:], "--format", "json")
    doc = json.loads(out)
    assert doc["command"] == argv[0] and key in doc["result"] and "config" in doc


def test_csv_output(elem, tmp_path):
    out = tmp_path / "n.csv"
    code, human, _ = run("norm", elem, "--format", "csv", "--out", str(out))
    assert code == 0 and human.strip()
    lines = out.read_text().splitlines()
    assert lines[0] == "key,value" and lines[1].startswith("norm,")
    code, text, _ = run("adjoint", elem, "--format", "csv")
    assert text.splitlines()[0] == "p,ix,iy,re,im"
    assert len(text.splitlines()) == 1 + 9 * 16 * 16


def test_classical_commands():
    code, out, _ = run("classical-distance", "--to", "1", "0", "0", "--restarts", "2")
    assert code == 0 and abs(float(out) - 1) < 1e-3
    code, out, _ = run("classical-lip", "sin-x", "--pairs", "3", "--restarts", "1", "--format", "json")
    assert code == 0 and json.loads(out)["result"]["pass"] is True


def test_classical_lip_rejects_quantum_element(elem):
    code, _, err = run("classical-lip", elem)
    assert code == 2 and "hbar" in err


def test_verify_filter_and_report(tmp_path):
    out = tmp_path / "v.json"
    code, human, _ = run("verify", "--filter", "core.", "--out", str(out))
    assert code == 0
    assert human.splitlines()[-1] == "3/3 checks passed"
    doc = json.loads(out.read_text())
    assert doc["passed"] is True
    assert [c["check"] for c in doc["checks"]] == ["core.covariance_wrap", "core.shift_roundtrip", "core.state_norm"]
    for c in doc["checks"]:
        assert set(c) >= {"check", "paper_ref", "margin", "pass"}
        assert "time" not in json.dumps(c)


def test_verify_thm19_filter():
    code, human, _ = run("verify", "--filter", "thm19", "--quick")
    assert code == 0
    assert human.startswith("PASS  metric.thm19")


def test_verify_failure_exit_code(monkeypatch):
    reg = [("demo.fails", "a check that cannot pass", lambda ctx: (1.0, 0.0), "upper")]
    monkeypatch.setattr(checks, "_REGISTRY", reg)
    code, human, _ = run("verify")
    assert code == 1 and human.startswith("FAIL  demo.fails")
    code, out, _ = run("verify", "--format", "csv")
    assert code == 1 and out.splitlines()[1].startswith("demo.fails,a check that cannot pass,-1.0,false")


def test_usage_and_io_errors(tmp_path):
    assert run("trace")[0] == 2
    assert run("bogus")[0] == 2
    assert run("trace", str(tmp_path / "missing.json"))[0] == 2
    assert run("trace", "@nope")[0] == 2
    assert run("verify", "--filter", "no-such-check")[0] == 2
    assert run("gen", "--nx", "7")[0] == 2
    assert run("gen", "--tol", "lipschitz=-1")[0] == 2
    assert run("gen", "--tol", "oops")[0] == 2
    assert run("smooth", "@identity", "--m", "99")[0] == 2


def test_malformed_file_names_field(tmp_path):
    doc = json.loads(run("gen", "--format", "json")[1])
    del doc["params"]["mu"]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code, _, err = run("trace", str(bad))
    assert code == 2 and "'mu'" in err
    bad.write_text("{broken")
    code, _, err = run("trace", str(bad))
    assert code == 2 and "invalid JSON" in err


def test_state_file_rejected_as_element(tmp_path):
    xi = tmp_path / "xi.json"
    run("gen", "--kind", "state", "--out", str(xi))
    code, _, err = run("trace", str(xi))
    assert code == 2 and "kind" in err


def test_thread_cap():
    env = {"QHM_THREADS": "2"}
    assert apply_thread_cap(env) == 2
    assert all(env[v] == "2" for v in THREAD_VARS)
    assert apply_thread_cap({}) is None
    for bad in ("0", "x", "-3"):
        with pytest.raises(UsageError):
            apply_thread_cap({"QHM_THREADS": bad})


def test_invalid_thread_env_exits_2(monkeypatch):
    monkeypatch.setenv("QHM_THREADS", "many")
    code, _, err = run("trace", "@identity")
    assert code == 2 and "QHM_THREADS" in err
