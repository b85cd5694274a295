"""Conformance of the shim against the engine, driven end to end through
the engine's command-line interface and the shared wire formats. Each
test prints a PASS/FAIL line, mirroring the engine's acceptance suite."""

import base64
import functools
import json
import pickle
import shlex
import subprocess
import sys
from pathlib import Path

import pytest

from shim_support import ENGINE_CLI, FIXTURES, SHIM, make_manifest, read_error, run_shim, write_json_envelope

SHIM_COMMAND = shlex.join(SHIM)


def criterion(description):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                print(f"FAIL: {description}")
                raise
            print(f"PASS: {description}")
            return result

        return wrapper

    return decorate


def engine_run(document, workdir, *extra):
    result = subprocess.run(
        [
            *ENGINE_CLI,
            "run",
            str(document),
            "--workdir",
            str(workdir),
            "--runner",
            SHIM_COMMAND,
            "--module-dir",
            str(FIXTURES),
            *extra,
        ],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0, result.stderr
    return json.loads(result.stdout)


@criterion("shim conformance: arithmetic end-to-end gives 6.25 and, with x=2 y=2, 25.0")
def test_arithmetic_end_to_end(tmp_path):
    report = engine_run(FIXTURES / "arithmetic.json", tmp_path / "w1")
    assert report["succeeded"] is True
    assert report["outputs"]["result"]["payload"] == pytest.approx(6.25, abs=1e-12)

    report = engine_run(
        FIXTURES / "arithmetic.json", tmp_path / "w2", "--set", "x=2", "--set", "y=2"
    )
    assert report["outputs"]["result"]["payload"] == pytest.approx(25.0, abs=1e-12)


@criterion("shim conformance: non-JSON value comes back as a binary envelope")
def test_binary_envelope_for_non_json_value(tmp_path):
    document = tmp_path / "complex.json"
    document.write_text(
        json.dumps(
            {
                "version": "1.0.0",
                "nodes": [
                    {"id": 0, "type": "function", "value": "oddballs.make_complex"},
                    {"id": 1, "type": "output", "name": "z"},
                ],
                "edges": [
                    {"source": 0, "sourcePort": None, "target": 1, "targetPort": None}
                ],
            }
        )
    )
    report = engine_run(document, tmp_path / "w")
    entry = report["outputs"]["z"]
    assert entry["encoding"] == "binary"
    envelope = json.loads(Path(entry["path"]).read_text())
    assert pickle.loads(base64.b64decode(envelope["payload"])) == complex(2.0, 3.0)


@criterion("shim conformance: port-mismatch manifest produces MissingSourcePort")
def test_missing_source_port_error(tmp_path):
    producer = write_json_envelope(tmp_path / "p.json", {"only": 1})
    manifest = make_manifest(tmp_path / "n", "workflow.get_square", [("x", producer, "prod")])
    assert run_shim(manifest).returncode == 1
    assert read_error(manifest)["type"] == "MissingSourcePort"


@criterion("file-based workflow: 3-node generate/transform/consume run leaves the final file")
def test_file_based_workflow(tmp_path):
    tools_dir = FIXTURES / "tools"
    report = engine_run(
        FIXTURES / "filebased.json",
        tmp_path / "w",
        "--set",
        f"tools_dir={tools_dir}",
    )
    assert report["succeeded"] is True
    final_path = Path(report["outputs"]["report"]["payload"])
    assert final_path.exists()
    # size=5 -> 1..5 doubled -> 2+4+6+8+10
    assert final_path.read_text() == "total: 30\n"
    # the path string itself traveled over the edges, not the file
    assert report["outputs"]["report"]["encoding"] == "json"
