"""Execute a workflow with the runner shim, then rerun with overrides.

Needs the pwdflow-runner package installed (see runner/ in the repo
root). Run from the demos directory:  python3 02_run_workflow.py
"""

import sys
import tempfile
from pathlib import Path

from pwdflow import RunConfig, execute, load_document, read_envelope

HERE = Path(__file__).resolve().parent
RUNNER = [sys.executable, "-m", "pwdflow_runner"]

doc = load_document(HERE / "arithmetic" / "workflow.json")
workdir = Path(tempfile.mkdtemp(prefix="pwdflow-demo-"))

# The engine spawns one isolated runner process per function node and
# moves values through envelope files; it never imports workflow code.
config = RunConfig(
    workdir=workdir / "defaults",
    runner_command=RUNNER,
    module_search_paths=[HERE / "arithmetic"],
)
report = execute(doc, config)
result = read_envelope(report.outputs["result"].path)
print(f"defaults (x=1, y=2): result = {result.payload}")  # (1*2 + 1/2)**2 = 6.25

for nid, task in sorted(report.tasks.items()):
    print(f"  node {nid}: {task.phase.value}")
print(f"  events logged to {report.event_log}")

# Input values can be overridden per run without touching the document.
config = RunConfig(
    workdir=workdir / "overridden",
    runner_command=RUNNER,
    module_search_paths=[HERE / "arithmetic"],
    input_overrides={"x": 2, "y": 2},
)
report = execute(doc, config)
print(f"overridden (x=2, y=2): result = {read_envelope(report.outputs['result'].path).payload}")

# The same run is available from the command line:
print("CLI equivalent:")
print(f"  pwdflow run arithmetic/workflow.json --set x=2 --set y=2 \\")
print(f"      --runner '{sys.executable} -m pwdflow_runner'")
