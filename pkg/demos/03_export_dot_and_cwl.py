"""Export a workflow to Graphviz DOT and to CWL v1.2.

Run from the demos directory:  python3 03_export_dot_and_cwl.py
"""

import tempfile
from pathlib import Path

from pwdflow import load_document, to_cwl, to_dot

HERE = Path(__file__).resolve().parent

doc = load_document(HERE / "arithmetic" / "workflow.json")

# DOT: inputs red, outputs orange, functions blue; edge labels show the
# transferred ports. Pipe the text to `dot -Tpng` to render it.
print(to_dot(doc))

# CWL: one CommandLineTool per function node wrapping the runner shim,
# plus a workflow file wiring the steps. One-way only; there is no CWL
# importer.
out_dir = Path(tempfile.mkdtemp(prefix="pwdflow-cwl-"))
for path in to_cwl(doc, out_dir):
    print(f"wrote {path}")
print()
print((out_dir / "workflow.cwl").read_text())
