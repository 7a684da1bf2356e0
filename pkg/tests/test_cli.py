import json
from pathlib import Path

import numpy as np
import pytest

from mlfuse import cli, graphir


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Fixture containers plus one compiled artifact, shared per module."""
    root = tmp_path_factory.mktemp("cli")
    for name in ("identity", "mlp"):
        assert cli.main(["build-fixture", name, "--out", str(root)]) == 0
    art = root / "mlp_build"
    assert cli.main(["codegen", str(root / "mlp.mlg"), str(root / "mlp.mlw"),
                     "--out", str(art)]) == 0
    return root


def _paths(workdir, name):
    return str(workdir / f"{name}.mlg"), str(workdir / f"{name}.mlw")


# -- usage and loading --------------------------------------------------------

def test_no_arguments_is_a_usage_error(capsys):
    assert cli.main([]) == 2
    capsys.readouterr()


def test_unknown_fixture_name_is_a_usage_error(capsys):
    assert cli.main(["build-fixture", "resnet"]) == 2
    capsys.readouterr()


def test_missing_container_maps_to_exit_2(tmp_path, capsys):
    missing = str(tmp_path / "nope.mlg")
    assert cli.main(["inspect", missing, missing]) == 2
    assert "error:" in capsys.readouterr().err


def test_build_fixture_json_names_both_files(tmp_path, capsys):
    assert cli.main(["build-fixture", "identity", "--out", str(tmp_path),
                     "--json"]) == 0
    obj = json.loads(capsys.readouterr().out)
    assert Path(obj["graph"]).is_file() and Path(obj["weights"]).is_file()


# -- inspect ------------------------------------------------------------------

def test_inspect_reports_structure(workdir, capsys):
    g, w = _paths(workdir, "mlp")
    assert cli.main(["inspect", g, w, "--json"]) == 0
    obj = json.loads(capsys.readouterr().out)
    assert obj["tensor_count"] == 8
    assert [op["op"] for op in obj["operators"]] == \
        ["FULLY_CONNECTED", "FULLY_CONNECTED", "SOFTMAX"]


def test_inspect_plain_output_lists_operators(workdir, capsys):
    g, w = _paths(workdir, "mlp")
    assert cli.main(["inspect", g, w]) == 0
    out = capsys.readouterr().out
    assert "FULLY_CONNECTED" in out and "[0]" in out


# -- run ----------------------------------------------------------------------

def test_run_round_trips_identity(workdir, tmp_path, capsys):
    g, w = _paths(workdir, "identity")
    x = np.linspace(-1, 1, 4, dtype="<f4")
    ip, op = tmp_path / "in.raw", tmp_path / "out.raw"
    ip.write_bytes(x.tobytes())
    assert cli.main(["run", g, w, str(ip), str(op), "--json"]) == 0
    obj = json.loads(capsys.readouterr().out)
    assert obj["values"] == 4
    assert obj["load_bytes"] > 0 and obj["peak_bytes"] > 0
    assert np.array_equal(np.frombuffer(op.read_bytes(), dtype="<f4"), x)


def test_run_rejects_wrong_input_size(workdir, tmp_path, capsys):
    g, w = _paths(workdir, "identity")
    ip, op = tmp_path / "in.raw", tmp_path / "out.raw"
    ip.write_bytes(b"\x00" * 8)  # two values, the model takes four
    assert cli.main(["run", g, w, str(ip), str(op)]) == 2
    assert "input file holds" in capsys.readouterr().err


# -- codegen ------------------------------------------------------------------

def test_codegen_emits_manifest_and_program(workdir, tmp_path, capsys):
    g, w = _paths(workdir, "identity")
    out = tmp_path / "build"
    assert cli.main(["codegen", g, w, "--out", str(out), "--json"]) == 0
    obj = json.loads(capsys.readouterr().out)
    assert (out / "build_manifest.json").is_file()
    assert obj["max_diff"] == 0.0
    assert (out / obj["executable"]).is_file()


def test_codegen_strip_toggle_changes_shipped_sources(workdir, tmp_path,
                                                      capsys):
    g, w = _paths(workdir, "identity")
    out = tmp_path / "plain"
    assert cli.main(["codegen", g, w, "--out", str(out), "--no-strip"]) == 0
    capsys.readouterr()
    manifest = json.loads((out / "build_manifest.json").read_text())
    assert manifest["strip"] is False


# -- verify and bench ---------------------------------------------------------

def test_verify_passes_fresh_build(workdir, capsys):
    g, w = _paths(workdir, "mlp")
    assert cli.main(["verify", g, w, str(workdir / "mlp_build"),
                     "--json"]) == 0
    obj = json.loads(capsys.readouterr().out)
    assert obj["passed"] is True and obj["max_error"] == 0.0


def test_verify_fails_after_weight_drift(workdir, tmp_path, capsys):
    # reweight the container after the build; the program no longer matches
    g, w = _paths(workdir, "mlp")
    bundle = graphir.load_bundle(g, w)
    key = sorted(bundle.weights.entries)[0]
    arr = bundle.weights.as_array(key).copy()
    arr.reshape(-1)[0] += 0.1
    del bundle.weights.entries[key]
    bundle.weights.put_array(key, arr)
    g2, w2 = tmp_path / "m.mlg", tmp_path / "m.mlw"
    graphir.save_bundle(bundle, g2, w2)
    assert cli.main(["verify", str(g2), str(w2),
                     str(workdir / "mlp_build")]) == 1
    capsys.readouterr()


def test_bench_reports_both_deployments(workdir, capsys):
    g, w = _paths(workdir, "mlp")
    assert cli.main(["bench", g, w, str(workdir / "mlp_build"),
                     "--reps", "3", "--json"]) == 0
    obj = json.loads(capsys.readouterr().out)
    assert obj["repetitions"] == 3
    assert obj["generated_counters"]["load_bytes"] == 0


# -- sniff --------------------------------------------------------------------

def test_sniff_findings_set_exit_code(tmp_path, capsys):
    (tmp_path / "model.tflite").write_bytes(b"\x00")
    assert cli.main(["sniff", str(tmp_path)]) == 1
    capsys.readouterr()
    clean = tmp_path / "clean"
    clean.mkdir()
    (clean / "notes.txt").write_text("hi", encoding="utf-8")
    assert cli.main(["sniff", str(clean)]) == 0
    capsys.readouterr()


def test_sniff_writes_json_report(tmp_path, capsys):
    (tmp_path / "net.mlw").write_bytes(b"MLW0rest")
    out = tmp_path / "report.json"
    assert cli.main(["sniff", str(tmp_path), "--json", str(out)]) == 1
    capsys.readouterr()
    obj = json.loads(out.read_text(encoding="utf-8"))
    assert obj["scanned_files"] == 1
    assert {f["kind"] for f in obj["findings"]} == {"filename", "magic"}


def test_sniff_strings_mode(tmp_path, capsys):
    target = tmp_path / "blob.bin"
    target.write_bytes(b"\x7fELF" + b"\x00" * 6 + b"org.tensorflow\x00")
    assert cli.main(["sniff", str(target), "--strings"]) == 1
    capsys.readouterr()


def test_sniff_custom_signatures(tmp_path, capsys):
    sigs = tmp_path / "sigs.json"
    sigs.write_text(json.dumps({"extensions": [".qqq"], "filenames": [],
                                "magics": [], "keywords": []}),
                    encoding="utf-8")
    (tmp_path / "weights.qqq").write_bytes(b"\x00")
    (tmp_path / "model.tflite").write_bytes(b"\x00")
    assert cli.main(["sniff", str(tmp_path), "--sigs", str(sigs),
                     "--json", str(tmp_path / "r.json")]) == 1
    capsys.readouterr()
    obj = json.loads((tmp_path / "r.json").read_text(encoding="utf-8"))
    # the custom set fully replaces the default one
    assert [f["token"] for f in obj["findings"]] == [".qqq"]
