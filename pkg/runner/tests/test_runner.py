import base64
import json
import pickle

import pytest

from shim_support import (
    FIXTURES,
    make_manifest,
    read_error,
    read_output,
    run_shim,
    write_json_envelope,
)


class TestHappyPath:
    def test_get_sum(self, tmp_path):
        x = write_json_envelope(tmp_path / "x.json", 2.0)
        y = write_json_envelope(tmp_path / "y.json", 0.5)
        manifest = make_manifest(
            tmp_path / "n", "workflow.get_sum", [("x", x, None), ("y", y, None)]
        )
        assert run_shim(manifest).returncode == 0
        assert read_output(manifest) == {"encoding": "json", "payload": 2.5}

    def test_get_prod_and_div(self, tmp_path):
        x = write_json_envelope(tmp_path / "x.json", 1)
        y = write_json_envelope(tmp_path / "y.json", 2)
        manifest = make_manifest(
            tmp_path / "n", "workflow.get_prod_and_div", [("x", x, None), ("y", y, None)]
        )
        assert run_shim(manifest).returncode == 0
        assert read_output(manifest)["payload"] == {"prod": 2, "div": 0.5}

    def test_source_port_selects_map_key(self, tmp_path):
        producer = write_json_envelope(tmp_path / "p.json", {"prod": 7, "div": 0.1})
        manifest = make_manifest(
            tmp_path / "n", "workflow.get_square", [("x", producer, "prod")]
        )
        assert run_shim(manifest).returncode == 0
        assert read_output(manifest)["payload"] == 49

    def test_null_function_is_identity(self, tmp_path):
        producer = write_json_envelope(tmp_path / "p.json", {"prod": 7})
        manifest = make_manifest(tmp_path / "n", None, [("value", producer, "prod")])
        assert run_shim(manifest).returncode == 0
        assert read_output(manifest)["payload"] == 7

    def test_unwired_parameters_use_function_defaults(self, tmp_path):
        x = write_json_envelope(tmp_path / "x.json", 3)
        manifest = make_manifest(tmp_path / "n", "oddballs.with_default", [("x", x, None)])
        assert run_shim(manifest).returncode == 0
        assert read_output(manifest)["payload"] == 30

    def test_function_runs_in_manifest_workdir(self, tmp_path):
        manifest = make_manifest(tmp_path / "n", "oddballs.drop_marker", [])
        assert run_shim(manifest).returncode == 0
        assert (tmp_path / "n" / "marker.txt").read_text() == "here"

    def test_no_temp_files_left_behind(self, tmp_path):
        manifest = make_manifest(tmp_path / "n", "oddballs.make_complex", [])
        run_shim(manifest)
        leftovers = [p for p in (tmp_path / "n").iterdir() if p.name.startswith(".envelope-")]
        assert leftovers == []


class TestEncodings:
    @pytest.mark.parametrize(
        "value",
        [None, True, False, 0, -17, 2.5, "häh ✓", [1, [2, "x"], None], {"a": {"b": [1.5]}}],
    )
    def test_json_values_round_trip(self, tmp_path, value):
        env = write_json_envelope(tmp_path / "v.json", value)
        manifest = make_manifest(tmp_path / "n", "oddballs.echo", [("value", env, None)])
        assert run_shim(manifest).returncode == 0
        output = read_output(manifest)
        assert output["encoding"] == "json"
        assert output["payload"] == value
        assert type(output["payload"]) is type(value)

    def test_non_json_result_uses_binary_encoding(self, tmp_path):
        manifest = make_manifest(tmp_path / "n", "oddballs.make_complex", [])
        assert run_shim(manifest).returncode == 0
        output = read_output(manifest)
        assert output["encoding"] == "binary"
        assert pickle.loads(base64.b64decode(output["payload"])) == complex(2.0, 3.0)

    def test_tuple_survives_as_tuple(self, tmp_path):
        x = write_json_envelope(tmp_path / "x.json", 3)
        produce = make_manifest(tmp_path / "a", "oddballs.make_pair", [("x", x, None)])
        assert run_shim(produce).returncode == 0
        pair_env = produce.parent / "output.json"
        assert read_output(produce)["encoding"] == "binary"

        expected = write_json_envelope(tmp_path / "e.json", [3, 4])
        # equals() receives the real tuple, not a list coercion
        check = make_manifest(
            tmp_path / "b",
            "oddballs.equals",
            [("expected", expected, None), ("actual", pair_env, None)],
        )
        assert run_shim(check).returncode == 0
        assert read_output(check)["payload"] is False

        produce2 = make_manifest(tmp_path / "c", "oddballs.make_pair", [("x", x, None)])
        run_shim(produce2)
        check2 = make_manifest(
            tmp_path / "d",
            "oddballs.equals",
            [("expected", produce2.parent / "output.json", None), ("actual", pair_env, None)],
        )
        assert run_shim(check2).returncode == 0
        assert read_output(check2)["payload"] is True

    def test_encoding_choice_is_deterministic(self, tmp_path):
        env = write_json_envelope(tmp_path / "v.json", {"k": [1, 2.5, "s"]})
        first = make_manifest(tmp_path / "a", "oddballs.echo", [("value", env, None)])
        second = make_manifest(tmp_path / "b", "oddballs.echo", [("value", env, None)])
        run_shim(first)
        run_shim(second)
        assert (first.parent / "output.json").read_bytes() == (
            second.parent / "output.json"
        ).read_bytes()


class TestFailures:
    def test_missing_module(self, tmp_path):
        manifest = make_manifest(tmp_path / "n", "no_such_module.fn", [])
        result = run_shim(manifest)
        assert result.returncode == 1
        assert read_error(manifest)["type"] == "ImportFailure"
        assert not (tmp_path / "n" / "output.json").exists()

    def test_missing_attribute(self, tmp_path):
        manifest = make_manifest(tmp_path / "n", "workflow.not_there", [])
        assert run_shim(manifest).returncode == 1
        assert read_error(manifest)["type"] == "ImportFailure"

    def test_missing_source_port(self, tmp_path):
        producer = write_json_envelope(tmp_path / "p.json", {"div": 0.5})
        manifest = make_manifest(
            tmp_path / "n", "workflow.get_square", [("x", producer, "prod")]
        )
        assert run_shim(manifest).returncode == 1
        error = read_error(manifest)
        assert error["type"] == "MissingSourcePort"
        assert "prod" in error["message"]

    def test_source_port_against_scalar_value(self, tmp_path):
        producer = write_json_envelope(tmp_path / "p.json", 42)
        manifest = make_manifest(
            tmp_path / "n", "workflow.get_square", [("x", producer, "prod")]
        )
        assert run_shim(manifest).returncode == 1
        assert read_error(manifest)["type"] == "MissingSourcePort"

    def test_call_failure(self, tmp_path):
        x = write_json_envelope(tmp_path / "x.json", 1)
        y = write_json_envelope(tmp_path / "y.json", 0)
        manifest = make_manifest(
            tmp_path / "n", "workflow.get_prod_and_div", [("x", x, None), ("y", y, None)]
        )
        assert run_shim(manifest).returncode == 1
        error = read_error(manifest)
        assert error["type"] == "CallFailure"
        assert "ZeroDivisionError" in error["message"]

    def test_serialization_failure(self, tmp_path):
        manifest = make_manifest(tmp_path / "n", "oddballs.unpicklable", [])
        assert run_shim(manifest).returncode == 1
        assert read_error(manifest)["type"] == "SerializationFailure"

    def test_unknown_input_encoding(self, tmp_path):
        weird = tmp_path / "w.json"
        weird.write_text(json.dumps({"encoding": "yaml", "payload": "x"}))
        manifest = make_manifest(tmp_path / "n", "oddballs.echo", [("value", weird, None)])
        assert run_shim(manifest).returncode == 1
        assert read_error(manifest)["type"] == "SerializationFailure"

    def test_wrong_protocol(self, tmp_path):
        manifest = make_manifest(tmp_path / "n", "workflow.get_square", [], protocol=2)
        assert run_shim(manifest).returncode == 1
        assert read_error(manifest)["type"] == "ProtocolViolation"

    def test_unreadable_manifest(self, tmp_path):
        manifest = tmp_path / "manifest.json"
        manifest.write_text("{broken")
        assert run_shim(manifest).returncode == 1
        assert read_error(manifest)["type"] == "ProtocolViolation"

    def test_call_failure_with_binding_mismatch(self, tmp_path):
        # a port that is not a parameter of the callable surfaces at call time
        x = write_json_envelope(tmp_path / "x.json", 1)
        manifest = make_manifest(tmp_path / "n", "workflow.get_square", [("z", x, None)])
        assert run_shim(manifest).returncode == 1
        assert read_error(manifest)["type"] == "CallFailure"
