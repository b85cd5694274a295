"""One-way exports: Graphviz DOT rendering and CWL v1.2 generation.

Both exporters are deterministic (document order) and never mutate the
document. The CWL conversion has no inverse; importing CWL is out of
scope.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import yaml

from .diagnostics import PwdError
from .model import Function, Input, Output, WorkflowDocument


@dataclass(frozen=True)
class DotStyle:
    """Node colors for the graph rendering: red inputs, orange outputs,
    blue functions. Green is reserved for nodes wrapping external
    executables and is unused by default."""

    input_color: str = "red"
    output_color: str = "orange"
    function_color: str = "blue"
    external_color: str = "green"


class UnsupportedFeatureError(PwdError):
    """The document uses a construct the target format cannot express."""


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(doc: WorkflowDocument, style: DotStyle = DotStyle()) -> str:
    """Render the workflow graph as a DOT digraph.

    One node statement per workflow node (label = callable or name,
    filled with the style color) and one edge statement per edge,
    labeled ``sourcePort→targetPort`` with null ports left out.
    """
    lines = ["digraph pwd {"]
    for node in doc.nodes:
        kind = node.kind
        if isinstance(kind, Input):
            label, color = kind.name, style.input_color
        elif isinstance(kind, Output):
            label, color = kind.name, style.output_color
        else:
            label, color = kind.callable.dotted(), style.function_color
        lines.append(
            f'  n{node.id} [label="{_dot_escape(label)}" shape=box style=filled '
            f'fillcolor={color}];'
        )
    for edge in doc.edges:
        ports = ""
        if edge.source_port is not None or edge.target_port is not None:
            label = f"{edge.source_port or ''}→{edge.target_port or ''}"
            ports = f' [label="{_dot_escape(label)}"]'
        lines.append(f"  n{edge.source} -> n{edge.target}{ports};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _envelope_literal(value: object) -> dict:
    """A CWL File literal holding a json envelope, used for input defaults."""
    contents = json.dumps(
        {"encoding": "json", "payload": value}, sort_keys=True, separators=(",", ":")
    )
    return {"class": "File", "contents": contents, "basename": "default.json"}


def _manifest_template(function: str, inputs: list, workdir_rel: str = ".") -> str:
    """Manifest contents with CWL parameter references for staged paths."""
    entries = []
    for port, source_port in inputs:
        entries.append(
            {
                "port": port,
                "artifact": f"$(inputs.{port}.path)",
                "source_port": source_port,
            }
        )
    manifest = {
        "protocol": 1,
        "function": function,
        "module_search_paths": ["$(inputs.module_dir.path)"],
        "inputs": entries,
        "output_artifact": "output.json",
        "workdir": workdir_rel,
    }
    return json.dumps(manifest)


def to_cwl(
    doc: WorkflowDocument,
    out_dir: str | Path,
    runner_command: list[str] | None = None,
) -> list[Path]:
    """Write CWL v1.2 files: one CommandLineTool per function node plus
    one Workflow wiring them together.

    Every tool wraps the manifest-driven runner; values travel between
    steps as envelope Files, and ``source_port`` extraction stays inside
    the runner exactly as in direct execution. Input defaults are
    embedded as File literals so the export is self-contained. Returns
    the written paths, workflow file first.

    Raises :class:`UnsupportedFeatureError` if an output node's edge
    carries a source port (that extraction has no CWL step to live in).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    runner = runner_command or ["python3", "-m", "pwdflow_runner"]

    for edge in doc.edges:
        target = doc.node(edge.target)
        if isinstance(target.kind, Output) and edge.source_port is not None:
            raise UnsupportedFeatureError(
                f"output node {edge.target} selects source port {edge.source_port!r}; "
                "CWL export cannot express output-side extraction"
            )
        if edge.target_port == "module_dir":
            raise UnsupportedFeatureError(
                "port name 'module_dir' is reserved by the CWL export"
            )
    for node in doc.input_nodes():
        if node.kind.name == "module_dir":
            raise UnsupportedFeatureError(
                "input name 'module_dir' is reserved by the CWL export"
            )

    functions = doc.function_nodes()
    in_edges: dict[int, list] = {}
    for edge in doc.edges:
        in_edges.setdefault(edge.target, []).append(edge)
    input_names = {n.id: n.kind.name for n in doc.input_nodes()}

    written: list[Path] = []
    steps: dict[str, dict] = {}
    wf_inputs: dict[str, dict] = {}
    for node in doc.input_nodes():
        entry: dict = {"type": "File"}
        if node.kind.has_default:
            entry["default"] = _envelope_literal(node.kind.default)
        wf_inputs[node.kind.name] = entry
    if functions:
        wf_inputs["module_dir"] = {
            "type": "Directory",
            "doc": "Directory containing the workflow function modules.",
        }

    for node in functions:
        step_id = f"step_{node.id}"
        tool_path = out_dir / f"{step_id}.cwl"
        edges = sorted(in_edges.get(node.id, []), key=lambda e: e.target_port)
        ports = [(e.target_port, e.source_port) for e in edges]

        tool = {
            "cwlVersion": "v1.2",
            "class": "CommandLineTool",
            "id": step_id,
            "label": node.kind.callable.dotted(),
            "requirements": {
                "InitialWorkDirRequirement": {
                    "listing": [
                        {
                            "entryname": "manifest.json",
                            "entry": _manifest_template(node.kind.callable.dotted(), ports),
                        }
                    ]
                }
            },
            "baseCommand": list(runner),
            "arguments": ["--manifest", "manifest.json"],
            "inputs": {port: "File" for port, _ in ports} | {"module_dir": "Directory"},
            "outputs": {"output": {"type": "File", "outputBinding": {"glob": "output.json"}}},
        }
        tool_path.write_text(
            yaml.safe_dump(tool, sort_keys=False, default_flow_style=False), "utf-8"
        )
        written.append(tool_path)

        step_in: dict[str, str] = {}
        for edge in edges:
            if edge.source in input_names:
                step_in[edge.target_port] = input_names[edge.source]
            else:
                step_in[edge.target_port] = f"step_{edge.source}/output"
        step_in["module_dir"] = "module_dir"
        steps[step_id] = {"run": f"{step_id}.cwl", "in": step_in, "out": ["output"]}

    wf_outputs: dict[str, dict] = {}
    for node in doc.output_nodes():
        edges = in_edges.get(node.id, [])
        if not edges:
            continue
        source = edges[0].source
        if source in input_names:
            source_ref = input_names[source]
        else:
            source_ref = f"step_{source}/output"
        wf_outputs[node.kind.name] = {"type": "File", "outputSource": source_ref}

    workflow = {
        "cwlVersion": "v1.2",
        "class": "Workflow",
        "id": "pwd_workflow",
        "inputs": wf_inputs,
        "outputs": wf_outputs,
        "steps": steps,
    }
    wf_path = out_dir / "workflow.cwl"
    wf_path.write_text(yaml.safe_dump(workflow, sort_keys=False, default_flow_style=False), "utf-8")
    return [wf_path] + written
