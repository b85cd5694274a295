"""Content-addressed caching and parallel scheduling.

Needs the pwdflow-runner package installed. Run from the demos
directory:  python3 04_caching_and_parallelism.py
"""

import sys
import tempfile
import time
from pathlib import Path

from pwdflow import CacheMode, RunConfig, execute, load_document

HERE = Path(__file__).resolve().parent
RUNNER = [sys.executable, "-m", "pwdflow_runner"]

doc = load_document(HERE / "arithmetic" / "workflow.json")
base = Path(tempfile.mkdtemp(prefix="pwdflow-cache-demo-"))


def run(workdir, cache_mode=CacheMode.ENABLED, **kwargs):
    config = RunConfig(
        workdir=base / workdir,
        runner_command=RUNNER,
        module_search_paths=[HERE / "arithmetic"],
        cache_dir=base / "cache",
        cache_mode=cache_mode,
        **kwargs,
    )
    started = time.perf_counter()
    report = execute(doc, config)
    elapsed = time.perf_counter() - started
    print(
        f"{workdir}: executed={report.executed_count} cache_hits={report.cache_hit_count} "
        f"({elapsed:.2f}s)"
    )
    return report


# A node's cache key is the SHA-256 of its callable plus the digests of
# its resolved input artifacts, so the second run does no work at all.
first = run("first")
second = run("second")
assert second.cache_hit_count == len(doc.function_nodes())
assert first.outputs["result"].digest == second.outputs["result"].digest
print("second run reused every envelope, byte for byte")

# Changing an input changes the keys of everything downstream of it.
run("changed", input_overrides={"x": 3})

# Independent branches run concurrently up to max_parallel; results are
# identical to a serial run because data flow, not timing, decides them.
# (cache disabled here so both runs really execute)
serial = run("serial", cache_mode=CacheMode.DISABLED, input_overrides={"x": 5}, max_parallel=1)
parallel = run("parallel", cache_mode=CacheMode.DISABLED, input_overrides={"x": 5}, max_parallel=8)
assert serial.outputs["result"].digest == parallel.outputs["result"].digest
print("serial and 8-way parallel runs produced identical digests")
