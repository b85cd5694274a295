"""pwdflow: reader, validator, execution engine, and exporters for PWD
workflow graphs.

The format stores a workflow as a JSON document of typed nodes (inputs,
module-qualified Python functions, outputs) connected by ported edges.
This package parses and writes that document, checks its structural
rules, derives schedules, executes it through isolated runner processes
with content-addressed caching, and exports it to Graphviz DOT and CWL.
"""

from .convert import DotStyle, UnsupportedFeatureError, to_cwl, to_dot
from .diagnostics import (
    Diagnostic,
    DiagnosticSet,
    DocumentError,
    PwdError,
    Severity,
    UnknownNodeIdError,
)
from .engine import (
    ArtifactRef,
    CacheKey,
    CacheMode,
    Phase,
    RunConfig,
    RunReport,
    TaskState,
    ValueEnvelope,
    compute_cache_key,
    execute,
    read_envelope,
    resolve_inputs,
    write_envelope,
    write_manifest,
)
from .graph import downstream_closure, ready_schedule, topo_sort, upstream_closure
from .io import (
    check_version,
    load_document,
    parse_document,
    save_document,
    write_document,
)
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
    node_lookup,
    validate_document,
)

__version__ = "0.1.0"

__all__ = [
    "ArtifactRef",
    "CacheKey",
    "CacheMode",
    "CallableRef",
    "Diagnostic",
    "DiagnosticSet",
    "DocumentError",
    "DotStyle",
    "Edge",
    "Function",
    "Input",
    "NO_DEFAULT",
    "Node",
    "Output",
    "Phase",
    "PwdError",
    "RunConfig",
    "RunReport",
    "Severity",
    "TaskState",
    "UnknownNodeIdError",
    "UnsupportedFeatureError",
    "ValueEnvelope",
    "Version",
    "WorkflowDocument",
    "build_document",
    "check_version",
    "compute_cache_key",
    "downstream_closure",
    "execute",
    "load_document",
    "node_lookup",
    "parse_document",
    "read_envelope",
    "ready_schedule",
    "resolve_inputs",
    "save_document",
    "to_cwl",
    "to_dot",
    "topo_sort",
    "upstream_closure",
    "validate_document",
    "write_document",
    "write_envelope",
    "write_manifest",
]
