"""Reading and writing workflow documents as JSON.

The on-disk schema is a top-level object with ``version``, ``nodes`` and
``edges``. Output is canonical: fixed key order, two-space indentation,
UTF-8 without BOM, explicit ``null`` for absent ports. Unknown keys are
tolerated on input (the format is extensible) but flagged with a warning
and not carried into the model.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from .diagnostics import DiagnosticSet, DocumentError
from .model import (
    NO_DEFAULT,
    CallableRef,
    Edge,
    Function,
    Input,
    Node,
    Output,
    Version,
    WorkflowDocument,
    build_document,
    is_port_name,
)

SUPPORTED_MAJOR = 1

_VERSION_RE = re.compile(r"^(0|[1-9][0-9]*)\.(0|[1-9][0-9]*)\.(0|[1-9][0-9]*)$")

_NODE_KEYS = {"id", "type", "value", "name"}
_EDGE_KEYS = {"source", "sourcePort", "target", "targetPort"}
_TOP_KEYS = {"version", "nodes", "edges"}


def check_version(version_text: str) -> Version:
    """Parse a strict ``X.Y.Z`` version string and gate on the supported major.

    Any ``1.y.z`` is accepted (minor/patch changes are backwards
    compatible); other majors are rejected.
    """
    diags = DiagnosticSet()
    if not isinstance(version_text, str) or not _VERSION_RE.match(version_text):
        diags.error(
            "MalformedVersion",
            f"version must be three non-negative integers 'X.Y.Z', got {version_text!r}",
            "version",
        )
        raise DocumentError(diags)
    major, minor, patch = (int(p) for p in version_text.split("."))
    if major != SUPPORTED_MAJOR:
        diags.error(
            "UnsupportedMajorVersion",
            f"major version {major} is not supported (this reader handles {SUPPORTED_MAJOR}.y.z)",
            "version",
        )
        raise DocumentError(diags)
    return Version(major, minor, patch)


def _reject_constant(name: str):
    raise ValueError(f"non-finite number {name} is not representable")


def parse_document(
    text: str | bytes, *, diagnostics: DiagnosticSet | None = None
) -> WorkflowDocument:
    """Parse PWD JSON into a validated :class:`WorkflowDocument`.

    Collects every problem it can find before raising
    :class:`DocumentError`. Pass ``diagnostics`` to also receive warnings
    when parsing succeeds.
    """
    diags = DiagnosticSet()
    try:
        doc = _parse(text, diags)
    finally:
        if diagnostics is not None:
            diagnostics.extend(diags)
    return doc


def _parse(text: str | bytes, diags: DiagnosticSet) -> WorkflowDocument:
    if isinstance(text, bytes):
        text = text.decode("utf-8-sig")
    try:
        raw = json.loads(text, parse_constant=_reject_constant)
    except (ValueError, UnicodeDecodeError) as exc:
        location = None
        if isinstance(exc, json.JSONDecodeError):
            location = f"line {exc.lineno}, column {exc.colno}"
        diags.error("MalformedJson", f"not valid JSON: {exc}", location or "document")
        raise DocumentError(diags) from exc

    if not isinstance(raw, dict):
        diags.error("WrongFieldType", "top level must be a JSON object", "document")
        raise DocumentError(diags)

    for key in sorted(set(raw) - _TOP_KEYS):
        diags.warning("UnknownKey", f"unknown top-level key {key!r} ignored", key)

    version: Version | None = None
    if "version" not in raw:
        diags.error("MissingField", "missing 'version'", "version")
    elif not isinstance(raw["version"], str):
        diags.error("WrongFieldType", "'version' must be a string", "version")
    else:
        try:
            version = check_version(raw["version"])
        except DocumentError as exc:
            diags.extend(exc.diagnostics)

    nodes = _parse_nodes(raw, diags)
    edges = _parse_edges(raw, diags)

    if diags.has_errors:
        raise DocumentError(diags)
    assert version is not None
    try:
        return build_document(version, nodes, edges, diagnostics=diags)
    except DocumentError as exc:
        # build_document already merged its findings into diags
        raise DocumentError(diags) from exc


def _field(
    obj: dict, key: str, types: type | tuple, loc: str, diags: DiagnosticSet, required: bool = True
):
    """Fetch a typed field or record why it could not be fetched."""
    if key not in obj:
        if required:
            diags.error("MissingField", f"missing {key!r}", loc)
        return None
    value = obj[key]
    if isinstance(value, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
        diags.error("WrongFieldType", f"{key!r} must not be a boolean", f"{loc}.{key}")
        return None
    if not isinstance(value, types):
        diags.error("WrongFieldType", f"{key!r} has the wrong type", f"{loc}.{key}")
        return None
    return value


def _parse_nodes(raw: dict, diags: DiagnosticSet) -> list[Node]:
    nodes: list[Node] = []
    if "nodes" not in raw:
        diags.error("MissingField", "missing 'nodes'", "nodes")
        return nodes
    raw_nodes = raw["nodes"]
    if not isinstance(raw_nodes, list):
        diags.error("WrongFieldType", "'nodes' must be a list", "nodes")
        return nodes

    for i, obj in enumerate(raw_nodes):
        loc = f"nodes[{i}]"
        if not isinstance(obj, dict):
            diags.error("WrongFieldType", "node must be an object", loc)
            continue
        node_id = _field(obj, "id", int, loc, diags)
        node_type = _field(obj, "type", str, loc, diags)
        if node_id is not None and node_id < 0:
            diags.error("WrongFieldType", "'id' must be a non-negative integer", f"{loc}.id")
            node_id = None
        if node_id is None or node_type is None:
            continue

        known = {"id", "type"}
        kind = None
        if node_type == "function":
            known.add("value")
            value = _field(obj, "value", str, loc, diags)
            if value is not None:
                try:
                    kind = Function(CallableRef.from_string(value))
                except ValueError as exc:
                    diags.error("WrongFieldType", str(exc), f"{loc}.value")
        elif node_type == "input":
            known.update(("value", "name"))
            name = _field(obj, "name", str, loc, diags)
            if name is not None and not name:
                diags.error("WrongFieldType", "input 'name' must be non-empty", f"{loc}.name")
                name = None
            if name is not None:
                default = obj["value"] if "value" in obj else NO_DEFAULT
                kind = Input(name=name, default=default)
        elif node_type == "output":
            known.add("name")
            name = _field(obj, "name", str, loc, diags)
            if name is not None and not name:
                diags.error("WrongFieldType", "output 'name' must be non-empty", f"{loc}.name")
                name = None
            if name is not None:
                kind = Output(name=name)
        else:
            diags.error("UnknownNodeType", f"unknown node type {node_type!r}", f"{loc}.type")

        for key in sorted(set(obj) - known):
            diags.warning("UnknownKey", f"unknown node key {key!r} ignored", f"{loc}.{key}")
        if kind is not None:
            nodes.append(Node(id=node_id, kind=kind))
    return nodes


def _parse_edges(raw: dict, diags: DiagnosticSet) -> list[Edge]:
    edges: list[Edge] = []
    if "edges" not in raw:
        diags.error("MissingField", "missing 'edges'", "edges")
        return edges
    raw_edges = raw["edges"]
    if not isinstance(raw_edges, list):
        diags.error("WrongFieldType", "'edges' must be a list", "edges")
        return edges

    for i, obj in enumerate(raw_edges):
        loc = f"edges[{i}]"
        if not isinstance(obj, dict):
            diags.error("WrongFieldType", "edge must be an object", loc)
            continue
        source = _field(obj, "source", int, loc, diags)
        target = _field(obj, "target", int, loc, diags)
        ports: dict[str, str | None] = {}
        ok = source is not None and target is not None
        for key in ("sourcePort", "targetPort"):
            value = obj.get(key)
            if value is not None and not isinstance(value, str):
                diags.error("WrongFieldType", f"{key!r} must be a string or null", f"{loc}.{key}")
                ok = False
            else:
                ports[key] = value
        for key in sorted(set(obj) - _EDGE_KEYS):
            diags.warning("UnknownKey", f"unknown edge key {key!r} ignored", f"{loc}.{key}")
        if ok:
            edges.append(
                Edge(
                    source=source,
                    source_port=ports["sourcePort"],
                    target=target,
                    target_port=ports["targetPort"],
                )
            )
    return edges


def write_document(doc: WorkflowDocument) -> str:
    """Serialize to canonical JSON text.

    Deterministic: fixed key order (version, nodes, edges; id/type/value/
    name; source/sourcePort/target/targetPort), document element order,
    two-space indentation, explicit nulls for absent ports, trailing
    newline.
    """
    obj: dict = {"version": str(doc.version), "nodes": [], "edges": []}
    for node in doc.nodes:
        kind = node.kind
        if isinstance(kind, Function):
            entry = {"id": node.id, "type": "function", "value": kind.callable.dotted()}
        elif isinstance(kind, Input):
            entry = {"id": node.id, "type": "input"}
            if kind.has_default:
                entry["value"] = kind.default
            entry["name"] = kind.name
        else:
            entry = {"id": node.id, "type": "output", "name": kind.name}
        obj["nodes"].append(entry)
    for edge in doc.edges:
        obj["edges"].append(
            {
                "source": edge.source,
                "sourcePort": edge.source_port,
                "target": edge.target,
                "targetPort": edge.target_port,
            }
        )
    return json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def load_document(path: str | Path, *, diagnostics: DiagnosticSet | None = None) -> WorkflowDocument:
    """Read and parse a document file (UTF-8)."""
    data = Path(path).read_bytes()
    return parse_document(data, diagnostics=diagnostics)


def save_document(doc: WorkflowDocument, path: str | Path) -> None:
    """Write canonical JSON to ``path`` as UTF-8 without BOM."""
    Path(path).write_bytes(write_document(doc).encode("utf-8"))
