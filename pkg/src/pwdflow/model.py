"""In-memory model of a PWD workflow graph.

A workflow document is a directed acyclic graph of three node types:

* ``input`` nodes carry a workflow-level parameter name and an optional
  default value,
* ``function`` nodes reference a module-qualified callable,
* ``output`` nodes expose one produced value under a workflow-level name.

Edges move data from a source node (optionally selecting one key of a
map-valued result via ``source_port``) into a named parameter of the
target (``target_port``). Documents are immutable once built and safe to
share between threads.
"""

from __future__ import annotations

import heapq
import math
import re
from dataclasses import dataclass, field

from .diagnostics import DiagnosticSet, DocumentError, UnknownNodeIdError

_PORT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def is_port_name(name: object) -> bool:
    """True if ``name`` is a legal port identifier (letters/digits/underscore,
    not starting with a digit)."""
    return isinstance(name, str) and bool(_PORT_RE.match(name))


def is_data_value(value: object) -> bool:
    """True if ``value`` survives a JSON round-trip unchanged.

    Accepts null, bool, int, finite float, str, and lists/string-keyed
    dicts thereof. Non-finite floats are rejected because they have no
    interchange representation.
    """
    if value is None or isinstance(value, (bool, int, str)):
        return True
    if isinstance(value, float):
        return math.isfinite(value)
    if isinstance(value, list):
        return all(is_data_value(v) for v in value)
    if isinstance(value, dict):
        return all(isinstance(k, str) and is_data_value(v) for k, v in value.items())
    return False


class _NoDefault:
    """Sentinel distinguishing "no default" from an explicit null default."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NO_DEFAULT"


NO_DEFAULT = _NoDefault()


@dataclass(frozen=True, order=True)
class Version:
    """Semantic document version ``major.minor.patch``."""

    major: int
    minor: int
    patch: int

    def __post_init__(self) -> None:
        for part in (self.major, self.minor, self.patch):
            if not isinstance(part, int) or isinstance(part, bool) or part < 0:
                raise ValueError(f"version parts must be non-negative integers, got {part!r}")

    def __str__(self) -> str:
        return f"{self.major}.{self.minor}.{self.patch}"


@dataclass(frozen=True)
class CallableRef:
    """Module-qualified function reference, e.g. ``workflow.get_prod_and_div``."""

    module: str
    function: str

    def __post_init__(self) -> None:
        segments = self.module.split(".") + [self.function]
        if not all(is_port_name(s) for s in segments):
            raise ValueError(f"invalid callable reference {self.dotted()!r}")

    @classmethod
    def from_string(cls, dotted: str) -> CallableRef:
        """Split a dotted path; everything before the last segment is the module."""
        parts = dotted.split(".")
        if len(parts) < 2:
            raise ValueError(f"callable reference needs at least two segments: {dotted!r}")
        return cls(module=".".join(parts[:-1]), function=parts[-1])

    def dotted(self) -> str:
        return f"{self.module}.{self.function}"

    def __str__(self) -> str:
        return self.dotted()


@dataclass(frozen=True)
class Input:
    """Workflow parameter node payload."""

    name: str
    default: object = NO_DEFAULT

    def __post_init__(self) -> None:
        if self.default is not NO_DEFAULT and not is_data_value(self.default):
            raise TypeError(f"default for input {self.name!r} is not a JSON-safe value")

    @property
    def has_default(self) -> bool:
        return self.default is not NO_DEFAULT


@dataclass(frozen=True)
class Function:
    """Callable node payload."""

    callable: CallableRef


@dataclass(frozen=True)
class Output:
    """Exposed-result node payload."""

    name: str


Kind = Input | Function | Output


@dataclass(frozen=True)
class Node:
    id: int
    kind: Kind

    def __post_init__(self) -> None:
        if not isinstance(self.id, int) or isinstance(self.id, bool) or self.id < 0:
            raise ValueError(f"node id must be a non-negative integer, got {self.id!r}")


@dataclass(frozen=True)
class Edge:
    """Data connection between two nodes.

    A null ``source_port`` transfers the producer's entire return value;
    a non-null one selects that key from a map-valued result. The
    ``target_port`` names the consumer's parameter and is null only when
    the target is an output node.
    """

    source: int
    source_port: str | None
    target: int
    target_port: str | None


@dataclass(frozen=True)
class WorkflowDocument:
    """A validated workflow graph. Construct through :func:`build_document`."""

    version: Version
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    _by_id: dict[int, Node] = field(repr=False, compare=False, hash=False, default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_by_id", {n.id: n for n in self.nodes})

    def node(self, node_id: int) -> Node:
        """Look up a node by id; raises :class:`UnknownNodeIdError` if absent."""
        try:
            return self._by_id[node_id]
        except KeyError:
            raise UnknownNodeIdError(node_id) from None

    def has_node(self, node_id: int) -> bool:
        return node_id in self._by_id

    def input_nodes(self) -> list[Node]:
        return [n for n in self.nodes if isinstance(n.kind, Input)]

    def function_nodes(self) -> list[Node]:
        return [n for n in self.nodes if isinstance(n.kind, Function)]

    def output_nodes(self) -> list[Node]:
        return [n for n in self.nodes if isinstance(n.kind, Output)]


def node_lookup(doc: WorkflowDocument, node_id: int) -> Node:
    """Module-level alias for :meth:`WorkflowDocument.node`."""
    return doc.node(node_id)


def validate_document(
    version: Version, nodes: list[Node], edges: list[Edge]
) -> DiagnosticSet:
    """Check every structural invariant; returns the full set of findings.

    Never stops at the first problem. Errors make the document unusable;
    warnings flag suspicious but legal constructs (e.g. an input that
    feeds nothing).
    """
    diags = DiagnosticSet()

    by_id: dict[int, Node] = {}
    for i, node in enumerate(nodes):
        if node.id in by_id:
            diags.error(
                "DuplicateNodeId",
                f"node id {node.id} is used more than once",
                f"nodes[{i}]",
            )
        else:
            by_id[node.id] = node

    for label, kind_type in (("input", Input), ("output", Output)):
        seen: dict[str, int] = {}
        for i, node in enumerate(nodes):
            if not isinstance(node.kind, kind_type):
                continue
            name = node.kind.name
            if name in seen:
                diags.error(
                    "DuplicateIoName",
                    f"{label} name {name!r} is used by nodes {seen[name]} and {node.id}",
                    f"nodes[{i}]",
                )
            else:
                seen[name] = node.id

    # Port rules, endpoint existence, and per-(target, port) uniqueness.
    taken_ports: dict[tuple[int, str | None], int] = {}
    for i, edge in enumerate(edges):
        loc = f"edges[{i}]"
        src = by_id.get(edge.source)
        dst = by_id.get(edge.target)
        if src is None:
            diags.error("UnknownEndpoint", f"edge source {edge.source} does not exist", loc)
        if dst is None:
            diags.error("UnknownEndpoint", f"edge target {edge.target} does not exist", loc)

        for port in (edge.source_port, edge.target_port):
            if port is not None and not is_port_name(port):
                diags.error("IllegalPort", f"port {port!r} is not a valid identifier", loc)

        if src is not None:
            if isinstance(src.kind, Input) and edge.source_port is not None:
                diags.error(
                    "IllegalPort",
                    f"input node {src.id} has no ports; sourcePort must be null",
                    loc,
                )
            if isinstance(src.kind, Output):
                diags.error(
                    "IllegalPort",
                    f"output node {src.id} cannot be an edge source",
                    loc,
                )
        if dst is not None:
            if isinstance(dst.kind, Output) and edge.target_port is not None:
                diags.error(
                    "IllegalPort",
                    f"output node {dst.id} takes the whole value; targetPort must be null",
                    loc,
                )
            if isinstance(dst.kind, Function) and edge.target_port is None:
                diags.error(
                    "IllegalPort",
                    f"edge into function node {dst.id} must name a targetPort",
                    loc,
                )
            if isinstance(dst.kind, Input):
                diags.error(
                    "IllegalPort",
                    f"input node {dst.id} cannot be an edge target",
                    loc,
                )

        key = (edge.target, edge.target_port)
        if dst is not None:
            if key in taken_ports:
                what = (
                    f"output node {edge.target}"
                    if isinstance(dst.kind, Output)
                    else f"port {edge.target_port!r} of node {edge.target}"
                )
                diags.error(
                    "DuplicateTargetPort",
                    f"{what} is fed by edges {taken_ports[key]} and {i}",
                    loc,
                )
            else:
                taken_ports[key] = i

    node_index = {node.id: i for i, node in enumerate(nodes) if node.id in by_id}
    _check_function_cycles(by_id, edges, node_index, diags)

    fed_sources = {e.source for e in edges}
    for i, node in enumerate(nodes):
        if isinstance(node.kind, Input) and node.id not in fed_sources:
            diags.warning(
                "UnusedInput",
                f"input node {node.id} ({node.kind.name!r}) has no outgoing edges",
                f"nodes[{i}]",
            )
        if isinstance(node.kind, Output) and not any(e.target == node.id for e in edges):
            diags.warning(
                "UnconnectedOutput",
                f"output node {node.id} ({node.kind.name!r}) has no incoming edge",
                f"nodes[{i}]",
            )

    return diags


def _check_function_cycles(
    by_id: dict[int, Node],
    edges: list[Edge],
    node_index: dict[int, int],
    diags: DiagnosticSet,
) -> None:
    """Kahn's algorithm over the function-node subgraph; any remainder is cyclic."""
    fn_ids = {nid for nid, n in by_id.items() if isinstance(n.kind, Function)}
    succs: dict[int, list[int]] = {nid: [] for nid in fn_ids}
    indeg: dict[int, int] = {nid: 0 for nid in fn_ids}
    for edge in edges:
        if edge.source in fn_ids and edge.target in fn_ids:
            succs[edge.source].append(edge.target)
            indeg[edge.target] += 1

    heap = [nid for nid, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    emitted = 0
    while heap:
        nid = heapq.heappop(heap)
        emitted += 1
        for succ in succs[nid]:
            indeg[succ] -= 1
            if indeg[succ] == 0:
                heapq.heappush(heap, succ)

    if emitted != len(fn_ids):
        stuck = sorted(nid for nid, d in indeg.items() if d > 0)
        diags.error(
            "CycleDetected",
            f"function nodes {stuck} form at least one cycle",
            f"nodes[{node_index[stuck[0]]}]",
        )


def build_document(
    version: Version,
    nodes: list[Node],
    edges: list[Edge],
    *,
    diagnostics: DiagnosticSet | None = None,
) -> WorkflowDocument:
    """Validate and assemble a document.

    Raises :class:`DocumentError` carrying every violation if any check
    fails. Pass a :class:`DiagnosticSet` as ``diagnostics`` to also
    collect warnings on success.
    """
    diags = validate_document(version, nodes, edges)
    if diagnostics is not None:
        diagnostics.extend(diags)
    if diags.has_errors:
        raise DocumentError(diags)
    return WorkflowDocument(version=version, nodes=tuple(nodes), edges=tuple(edges))
