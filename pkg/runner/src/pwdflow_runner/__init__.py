"""Runner shim: executes exactly one workflow function per process.

The engine hands this process a manifest file describing which callable
to import, where the serialized inputs live, and where to put the
serialized result. The shim deserializes each input envelope (applying
``source_port`` extraction: a non-null port selects that key from a
map-valued producer result, a null port passes the whole value), binds
the inputs as keyword arguments named by their target ports, calls the
function, and writes the result envelope atomically. Parameters not
wired in the graph fall back to the function's own defaults.

Values that survive a JSON round-trip are stored as ``json`` envelopes;
everything else is pickled and base64-wrapped as a ``binary`` envelope,
so every artifact stays a single self-describing JSON file. A null
``function`` in the manifest is the identity task over the single input,
used by engines to apply output-side port extraction.

On any failure the shim writes ``error.json`` (``{"type", "message"}``)
beside the manifest and exits 1. Error types: ImportFailure,
MissingSourcePort, CallFailure, SerializationFailure, plus
ProtocolViolation for malformed manifests.

The shim reads only the manifest, the artifacts the manifest lists, and
the imported module files; it writes only inside its working directory
and the output artifact path.
"""

from __future__ import annotations

import argparse
import base64
import importlib
import json
import math
import os
import pickle
import sys
import tempfile
from collections.abc import Mapping

__version__ = "0.1.0"

PROTOCOL_VERSION = 1


class RunnerFailure(Exception):
    """Internal control flow: carries the error type for error.json."""

    def __init__(self, err_type: str, message: str):
        self.err_type = err_type
        super().__init__(message)


def is_json_value(value: object) -> bool:
    """True if ``value`` round-trips through JSON unchanged."""
    if value is None or type(value) in (bool, int, str):
        return True
    if type(value) is float:
        return math.isfinite(value)
    if type(value) is list:
        return all(is_json_value(v) for v in value)
    if type(value) is dict:
        return all(type(k) is str and is_json_value(v) for k, v in value.items())
    return False


def decode_envelope(obj: dict) -> object:
    encoding = obj.get("encoding")
    if encoding == "json":
        return obj["payload"]
    if encoding == "binary":
        return pickle.loads(base64.b64decode(obj["payload"]))
    raise RunnerFailure("SerializationFailure", f"unknown envelope encoding {encoding!r}")


def encode_envelope(value: object) -> bytes:
    """Serialize a function result; json when possible, pickle otherwise."""
    if is_json_value(value):
        obj = {"encoding": "json", "payload": value}
    else:
        try:
            blob = pickle.dumps(value)
        except Exception as exc:
            raise RunnerFailure(
                "SerializationFailure", f"result cannot be pickled: {exc}"
            ) from exc
        obj = {"encoding": "binary", "payload": base64.b64encode(blob).decode("ascii")}
    return json.dumps(
        obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


def _atomic_write(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".envelope-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _import_callable(dotted: str):
    module_path, _, function_name = dotted.rpartition(".")
    if not module_path:
        raise RunnerFailure(
            "ImportFailure", f"function reference {dotted!r} has no module part"
        )
    try:
        module = importlib.import_module(module_path)
    except Exception as exc:
        raise RunnerFailure(
            "ImportFailure", f"cannot import module {module_path!r}: {exc}"
        ) from exc
    try:
        return getattr(module, function_name)
    except AttributeError as exc:
        raise RunnerFailure(
            "ImportFailure",
            f"module {module_path!r} has no attribute {function_name!r}",
        ) from exc


def _load_inputs(manifest: dict) -> dict:
    kwargs = {}
    for entry in manifest.get("inputs", []):
        try:
            with open(entry["artifact"], encoding="utf-8") as fh:
                envelope = json.load(fh)
        except (OSError, ValueError) as exc:
            raise RunnerFailure(
                "ProtocolViolation", f"cannot read input envelope {entry['artifact']!r}: {exc}"
            ) from exc
        value = decode_envelope(envelope)
        source_port = entry.get("source_port")
        if source_port is not None:
            if not isinstance(value, Mapping) or source_port not in value:
                raise RunnerFailure(
                    "MissingSourcePort",
                    f"value for port {entry['port']!r} has no key {source_port!r}",
                )
            value = value[source_port]
        kwargs[entry["port"]] = value
    return kwargs


def _execute(manifest: dict) -> None:
    if manifest.get("protocol") != PROTOCOL_VERSION:
        raise RunnerFailure(
            "ProtocolViolation",
            f"unsupported manifest protocol {manifest.get('protocol')!r}",
        )

    for directory in reversed(manifest.get("module_search_paths", [])):
        resolved = os.path.abspath(directory)
        if resolved not in sys.path:
            sys.path.insert(0, resolved)

    workdir = manifest.get("workdir") or "."
    os.makedirs(workdir, exist_ok=True)
    os.chdir(workdir)

    dotted = manifest.get("function")
    function = _import_callable(dotted) if dotted is not None else None
    kwargs = _load_inputs(manifest)

    if function is None:
        if len(kwargs) != 1:
            raise RunnerFailure(
                "ProtocolViolation",
                f"identity task expects exactly one input, got {len(kwargs)}",
            )
        (result,) = kwargs.values()
    else:
        try:
            result = function(**kwargs)
        except Exception as exc:
            raise RunnerFailure("CallFailure", f"{type(exc).__name__}: {exc}") from exc

    _atomic_write(manifest["output_artifact"], encode_envelope(result))


def run_manifest(manifest_path: str) -> int:
    """Process one manifest; returns the process exit status."""
    manifest_dir = os.path.dirname(os.path.abspath(manifest_path))
    try:
        with open(manifest_path, encoding="utf-8") as fh:
            manifest = json.load(fh)
        if not isinstance(manifest, dict):
            raise RunnerFailure("ProtocolViolation", "manifest must be a JSON object")
        _execute(manifest)
    except RunnerFailure as failure:
        _write_error(manifest_dir, failure.err_type, str(failure))
        return 1
    except (OSError, ValueError, KeyError) as exc:
        _write_error(manifest_dir, "ProtocolViolation", f"{type(exc).__name__}: {exc}")
        return 1
    return 0


def _write_error(manifest_dir: str, err_type: str, message: str) -> None:
    payload = json.dumps({"type": err_type, "message": message})
    try:
        with open(os.path.join(manifest_dir, "error.json"), "w", encoding="utf-8") as fh:
            fh.write(payload)
    except OSError:
        pass
    print(f"{err_type}: {message}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="pwdflow-runner",
        description="Execute one workflow function described by a manifest file.",
    )
    parser.add_argument("--manifest", required=True, help="Path to the manifest JSON file.")
    args = parser.parse_args(argv)
    return run_manifest(args.manifest)
