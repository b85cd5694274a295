"""Parse a workflow document, check its structure, and look around.

Run from the demos directory:  python3 01_validate_and_inspect.py
"""

from pathlib import Path

from pwdflow import (
    DiagnosticSet,
    DocumentError,
    Edge,
    load_document,
    ready_schedule,
    topo_sort,
    upstream_closure,
    validate_document,
)

HERE = Path(__file__).resolve().parent

# Parsing validates everything at once: schema, version gate, port
# rules, and the DAG property. Warnings (unknown keys, unused inputs)
# land in the diagnostics collector without failing the parse.
diags = DiagnosticSet()
doc = load_document(HERE / "arithmetic" / "workflow.json", diagnostics=diags)
print(f"loaded version {doc.version}: {len(doc.nodes)} nodes, {len(doc.edges)} edges")
for diag in diags:
    print(f"  note: {diag}")

for node in doc.nodes:
    print(f"  node {node.id}: {node.kind}")

# Derived structure: execution order, parallel levels, reachability.
print("topological order of the function nodes:", topo_sort(doc))
print("ready levels (what could run in parallel):", ready_schedule(doc))
print("everything feeding the output node:", sorted(upstream_closure(doc, 5)))

# Invalid documents report every violation, not just the first.
bad_edges = list(doc.edges) + [Edge(2, None, 0, "x")]
problems = validate_document(doc.version, list(doc.nodes), bad_edges)
print("adding a back edge 2->0 is rejected with:")
for diag in problems.errors:
    print(f"  {diag.code}: {diag.message}")

try:
    load_document(HERE / "arithmetic" / "workflow.py")
except DocumentError as exc:
    print(f"feeding it a Python file fails cleanly: {exc.diagnostics.errors[0].code}")
