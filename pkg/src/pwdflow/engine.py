"""Workflow execution over isolated per-node runner processes.

The engine never imports or calls workflow functions itself. For every
function node it writes a manifest file, spawns the configured runner
command with ``--manifest <path>``, and reads back a value envelope. All
data flow happens through envelope files on disk, addressed by SHA-256
digest, which doubles as the unit of caching: a node whose callable and
resolved input artifacts are unchanged is served from the cache without
spawning anything.

Wire formats (all JSON, UTF-8):

* manifest: ``{"protocol": 1, "function": "<dotted>"|null,
  "module_search_paths": [...], "inputs": [{"port", "artifact",
  "source_port"}...], "output_artifact": <path>, "workdir": <path>}``.
  A null function is the identity task the engine schedules to apply a
  ``source_port`` extraction feeding an output node.
* envelope: ``{"encoding": "json", "payload": <value>}`` or
  ``{"encoding": "binary", "payload": "<base64>"}``. Binary payloads are
  opaque to the engine; port extraction is therefore always performed by
  the consumer-side runner, driven by ``source_port`` in the manifest.
* error file: ``error.json`` beside the manifest, ``{"type", "message"}``,
  written by the runner on nonzero exit.

Events are appended to ``events.jsonl`` in the working directory, one
``{"node", "phase", "t"}`` record per task phase transition.
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
import subprocess
import tempfile
import time
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from datetime import datetime, timezone
from heapq import heappop, heappush
from pathlib import Path
from typing import Mapping

from .diagnostics import DiagnosticSet, DocumentError
from .graph import function_predecessors
from .model import (
    CallableRef,
    Function,
    Node,
    WorkflowDocument,
    is_data_value,
)

PROTOCOL_VERSION = 1

_STDERR_TAIL = 4000


class CacheMode(enum.Enum):
    ENABLED = "enabled"
    DISABLED = "disabled"
    READ_ONLY = "readonly"

    @classmethod
    def from_string(cls, text: str) -> CacheMode:
        normalized = text.replace("-", "").replace("_", "").lower()
        for mode in cls:
            if mode.value == normalized:
                return mode
        raise ValueError(f"unknown cache mode {text!r}")


class Phase(enum.Enum):
    PENDING = "pending"
    READY = "ready"
    RUNNING = "running"
    SUCCEEDED = "succeeded"
    FAILED = "failed"
    SKIPPED = "skipped"


_LEGAL_TRANSITIONS = {
    Phase.PENDING: {Phase.READY, Phase.SKIPPED},
    Phase.READY: {Phase.RUNNING, Phase.SKIPPED},
    Phase.RUNNING: {Phase.SUCCEEDED, Phase.FAILED},
}


@dataclass
class RunConfig:
    """Everything the engine needs besides the document itself."""

    workdir: Path
    runner_command: list[str]
    module_search_paths: list[Path] = field(default_factory=list)
    max_parallel: int = 1
    input_overrides: dict = field(default_factory=dict)
    cache_dir: Path | None = None
    cache_mode: CacheMode = CacheMode.DISABLED
    timeout: float | None = None

    def __post_init__(self) -> None:
        if self.max_parallel < 1:
            raise ValueError("max_parallel must be >= 1")
        if not self.runner_command or not all(isinstance(a, str) for a in self.runner_command):
            raise ValueError("runner_command must be a non-empty list of strings")
        self.workdir = Path(self.workdir)


@dataclass(frozen=True)
class ValueEnvelope:
    """Self-describing serialized value, the unit of transfer and caching."""

    encoding: str
    payload: object

    def __post_init__(self) -> None:
        if self.encoding == "json":
            if not is_data_value(self.payload):
                raise ValueError("json envelope payload must be a JSON-safe value")
        elif self.encoding == "binary":
            if not isinstance(self.payload, str):
                raise ValueError("binary envelope payload must be a base64 string")
        else:
            raise ValueError(f"unknown envelope encoding {self.encoding!r}")

    def to_json_obj(self) -> dict:
        return {"encoding": self.encoding, "payload": self.payload}

    @classmethod
    def from_json_obj(cls, obj: object) -> ValueEnvelope:
        if not isinstance(obj, dict) or set(obj) != {"encoding", "payload"}:
            raise ValueError("envelope must be an object with 'encoding' and 'payload'")
        return cls(encoding=obj["encoding"], payload=obj["payload"])


@dataclass(frozen=True)
class ArtifactRef:
    """Pointer to an envelope file plus the SHA-256 of its bytes."""

    digest: str
    path: Path


@dataclass(frozen=True)
class CacheKey:
    digest: str


@dataclass
class TaskState:
    node: int
    phase: Phase = Phase.PENDING
    output: ArtifactRef | None = None
    error: dict | None = None
    cache_hit: bool = False


@dataclass
class RunReport:
    outputs: dict[str, ArtifactRef]
    tasks: dict[int, TaskState]
    executed_count: int
    cache_hit_count: int
    wall_time: float
    workdir: Path
    event_log: Path

    @property
    def succeeded(self) -> bool:
        return all(t.phase is Phase.SUCCEEDED for t in self.tasks.values())


def canonical_json_bytes(obj: object) -> bytes:
    """Canonical JSON: sorted keys, no whitespace, UTF-8. Digest input."""
    return json.dumps(
        obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False
    ).encode("utf-8")


def digest_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
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


def write_envelope(envelope: ValueEnvelope, path: Path) -> ArtifactRef:
    """Persist an envelope canonically and return its content address."""
    data = canonical_json_bytes(envelope.to_json_obj())
    _atomic_write(path, data)
    return ArtifactRef(digest=digest_bytes(data), path=path)


def read_envelope(path: Path) -> ValueEnvelope:
    return ValueEnvelope.from_json_obj(json.loads(Path(path).read_text("utf-8")))


def resolve_inputs(doc: WorkflowDocument, overrides: Mapping[str, object]) -> dict[int, ValueEnvelope]:
    """Pick a value for every input node: override first, then default.

    Raises :class:`DocumentError` listing every input that cannot be
    resolved and every override that names no input.
    """
    diags = DiagnosticSet()
    input_nodes = doc.input_nodes()
    known = {n.kind.name for n in input_nodes}
    for name in sorted(overrides):
        if name not in known:
            diags.error("UnknownOverrideName", f"no input named {name!r}", f"override:{name}")
        elif not is_data_value(overrides[name]):
            raise TypeError(f"override for {name!r} is not a JSON-safe value")

    resolved: dict[int, ValueEnvelope] = {}
    for node in input_nodes:
        name = node.kind.name
        if name in overrides:
            value = overrides[name]
        elif node.kind.has_default:
            value = node.kind.default
        else:
            diags.error(
                "MissingInputValue",
                f"input {name!r} has no default value and no override",
                f"input:{name}",
            )
            continue
        resolved[node.id] = ValueEnvelope(encoding="json", payload=value)
    if diags.has_errors:
        raise DocumentError(diags)
    return resolved


def compute_cache_key(
    callable_ref: CallableRef | None,
    inputs: Mapping[str, tuple[ArtifactRef, str | None]],
) -> CacheKey:
    """Content address of a node invocation.

    The digest covers the dotted callable (null for identity/extraction
    tasks) and, per target port in lexicographic order, the input
    artifact digest and source port. Insertion order cannot influence
    the result.
    """
    obj = {
        "callable": callable_ref.dotted() if callable_ref is not None else None,
        "inputs": {
            port: {"artifact_digest": art.digest, "source_port": source_port}
            for port, (art, source_port) in inputs.items()
        },
    }
    return CacheKey(digest=digest_bytes(canonical_json_bytes(obj)))


def write_manifest(
    node: Node,
    resolved: Mapping[str, tuple[ArtifactRef, str | None]],
    out_path: Path,
    config: RunConfig,
) -> Path:
    """Write the runner instruction file for a function node."""
    if not isinstance(node.kind, Function):
        raise ValueError(f"node {node.id} is not a function node")
    return _write_manifest(node.kind.callable.dotted(), resolved, Path(out_path), config)


def _write_manifest(
    function: str | None,
    resolved: Mapping[str, tuple[ArtifactRef, str | None]],
    out_path: Path,
    config: RunConfig,
) -> Path:
    node_dir = out_path.parent
    manifest = {
        "protocol": PROTOCOL_VERSION,
        "function": function,
        "module_search_paths": [str(Path(p).resolve()) for p in config.module_search_paths],
        "inputs": [
            {"port": port, "artifact": str(art.path), "source_port": source_port}
            for port, (art, source_port) in sorted(resolved.items())
        ],
        "output_artifact": str(node_dir / "output.json"),
        "workdir": str(node_dir),
    }
    _atomic_write(out_path, (json.dumps(manifest, indent=2, ensure_ascii=False) + "\n").encode("utf-8"))
    return out_path


class _EventLog:
    def __init__(self, path: Path):
        self.path = path
        self._fh = path.open("w", encoding="utf-8")

    def record(self, node: int, phase: Phase) -> None:
        stamp = datetime.now(timezone.utc).isoformat()
        self._fh.write(json.dumps({"node": node, "phase": phase.value, "t": stamp}) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


@dataclass
class _Outcome:
    node: int
    artifact: ArtifactRef | None = None
    cache_hit: bool = False
    error: dict | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


class _Run:
    """One workflow execution. All task-table mutations happen on the
    coordinating thread; worker threads only spawn processes and touch
    their own node directory plus the cache."""

    def __init__(self, doc: WorkflowDocument, config: RunConfig):
        self.doc = doc
        self.config = config
        self.workdir = Path(config.workdir).resolve()
        self.nodes_dir = self.workdir / "nodes"
        self.cache_dir = Path(config.cache_dir).resolve() if config.cache_dir else self.workdir / "cache"
        self.tasks: dict[int, TaskState] = {}
        self.artifacts: dict[int, ArtifactRef] = {}
        self.extraction: dict[int, tuple[int, str]] = {}  # output node -> (source, source_port)
        self.in_edges: dict[int, list] = {}
        self.executed = 0
        self.hits = 0

    def execute(self) -> RunReport:
        start = time.monotonic()
        self.workdir.mkdir(parents=True, exist_ok=True)
        self.nodes_dir.mkdir(exist_ok=True)
        if self.config.cache_mode is not CacheMode.DISABLED:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
        events = _EventLog(self.workdir / "events.jsonl")
        try:
            self._materialize_inputs()
            self._plan()
            self._schedule(events)
        finally:
            events.close()
        outputs = self._collect_outputs()
        return RunReport(
            outputs=outputs,
            tasks=self.tasks,
            executed_count=self.executed,
            cache_hit_count=self.hits,
            wall_time=time.monotonic() - start,
            workdir=self.workdir,
            event_log=events.path,
        )

    # -- setup ---------------------------------------------------------

    def _materialize_inputs(self) -> None:
        envelopes = resolve_inputs(self.doc, self.config.input_overrides)
        for node_id, envelope in envelopes.items():
            node_dir = self.nodes_dir / str(node_id)
            node_dir.mkdir(exist_ok=True)
            self.artifacts[node_id] = write_envelope(envelope, node_dir / "output.json")

    def _plan(self) -> None:
        in_edges = self.in_edges
        for edge in self.doc.edges:
            in_edges.setdefault(edge.target, []).append(edge)

        self.preds: dict[int, set[int]] = {}
        fn_preds = function_predecessors(self.doc)
        for node in self.doc.function_nodes():
            self.tasks[node.id] = TaskState(node=node.id)
            self.preds[node.id] = set(fn_preds[node.id])
        # Output edges carrying a source port need a runner-side
        # extraction pass; schedule it as a task keyed by the output node.
        for node in self.doc.output_nodes():
            edges = in_edges.get(node.id, [])
            if edges and edges[0].source_port is not None:
                edge = edges[0]
                self.tasks[node.id] = TaskState(node=node.id)
                self.extraction[node.id] = (edge.source, edge.source_port)
                self.preds[node.id] = {edge.source} if edge.source in self.tasks else set()

        self.succs: dict[int, set[int]] = {nid: set() for nid in self.tasks}
        for nid, preds in self.preds.items():
            for pred in preds:
                self.succs[pred].add(nid)

    # -- scheduling ----------------------------------------------------

    def _schedule(self, events: _EventLog) -> None:
        remaining = {nid: len(preds) for nid, preds in self.preds.items()}
        ready_heap: list[int] = []

        def transition(nid: int, phase: Phase) -> None:
            task = self.tasks[nid]
            assert phase in _LEGAL_TRANSITIONS.get(task.phase, ()), (
                f"illegal phase transition {task.phase} -> {phase} for node {nid}"
            )
            task.phase = phase
            events.record(nid, phase)

        for nid in sorted(remaining):
            if remaining[nid] == 0:
                transition(nid, Phase.READY)
                heappush(ready_heap, nid)

        pool = ThreadPoolExecutor(max_workers=self.config.max_parallel)
        inflight: dict[Future, int] = {}
        try:
            while True:
                while len(inflight) < self.config.max_parallel and ready_heap:
                    nid = heappop(ready_heap)
                    if self.tasks[nid].phase is not Phase.READY:
                        continue
                    transition(nid, Phase.RUNNING)
                    future = pool.submit(self._attempt, nid, self._resolve_node_inputs(nid))
                    inflight[future] = nid
                if not inflight:
                    break
                done, _ = wait(inflight, return_when=FIRST_COMPLETED)
                for future in done:
                    nid = inflight.pop(future)
                    outcome = future.result()
                    task = self.tasks[nid]
                    if outcome.failed:
                        task.error = outcome.error
                        transition(nid, Phase.FAILED)
                        if nid not in self.extraction:
                            self.executed += 1
                        self._skip_downstream(nid, transition)
                        continue
                    task.output = outcome.artifact
                    task.cache_hit = outcome.cache_hit
                    self.artifacts[nid] = outcome.artifact
                    transition(nid, Phase.SUCCEEDED)
                    if nid not in self.extraction:
                        if outcome.cache_hit:
                            self.hits += 1
                        else:
                            self.executed += 1
                    for succ in self.succs[nid]:
                        remaining[succ] -= 1
                        if remaining[succ] == 0 and self.tasks[succ].phase is Phase.PENDING:
                            transition(succ, Phase.READY)
                            heappush(ready_heap, succ)
        finally:
            pool.shutdown(wait=True)

    def _skip_downstream(self, failed_id: int, transition) -> None:
        queue = list(self.succs[failed_id])
        while queue:
            nid = queue.pop()
            task = self.tasks[nid]
            if task.phase in (Phase.PENDING, Phase.READY):
                transition(nid, Phase.SKIPPED)
                queue.extend(self.succs[nid])

    def _resolve_node_inputs(self, nid: int) -> dict[str, tuple[ArtifactRef, str | None]]:
        if nid in self.extraction:
            source, source_port = self.extraction[nid]
            return {"value": (self.artifacts[source], source_port)}
        resolved: dict[str, tuple[ArtifactRef, str | None]] = {}
        for edge in self.in_edges.get(nid, []):
            resolved[edge.target_port] = (self.artifacts[edge.source], edge.source_port)
        return resolved

    # -- per-node attempt (worker thread) -------------------------------

    def _attempt(self, nid: int, resolved: dict[str, tuple[ArtifactRef, str | None]]) -> _Outcome:
        if nid in self.extraction:
            ref = None
        else:
            kind = self.doc.node(nid).kind
            assert isinstance(kind, Function)
            ref = kind.callable
        key = compute_cache_key(ref, resolved)

        if self.config.cache_mode is not CacheMode.DISABLED:
            hit = self._cache_lookup(nid, key)
            if hit is not None:
                return hit

        node_dir = self.nodes_dir / str(nid)
        node_dir.mkdir(exist_ok=True)
        manifest_path = _write_manifest(
            ref.dotted() if ref is not None else None,
            resolved,
            node_dir / "manifest.json",
            self.config,
        )
        outcome = self._spawn_runner(nid, node_dir, manifest_path)
        if outcome.failed:
            return outcome
        if self.config.cache_mode is CacheMode.ENABLED:
            self._cache_store(key, outcome.artifact)
        return outcome

    def _cache_lookup(self, nid: int, key: CacheKey) -> _Outcome | None:
        entry = self.cache_dir / key.digest
        sidecar = self.cache_dir / (key.digest + ".sha256")
        if not (entry.exists() and sidecar.exists()):
            return None
        data = entry.read_bytes()
        expected = sidecar.read_text("utf-8").strip()
        actual = digest_bytes(data)
        if actual == expected:
            try:
                ValueEnvelope.from_json_obj(json.loads(data.decode("utf-8")))
            except (ValueError, UnicodeDecodeError):
                return self._corrupt_cache(nid, entry)
            return _Outcome(node=nid, artifact=ArtifactRef(actual, entry), cache_hit=True)
        return self._corrupt_cache(nid, entry)

    def _corrupt_cache(self, nid: int, entry: Path) -> _Outcome | None:
        if self.config.cache_mode is CacheMode.READ_ONLY:
            return _Outcome(
                node=nid,
                error={
                    "type": "CacheCorruption",
                    "message": f"cache entry {entry} does not match its recorded digest",
                },
            )
        return None  # enabled: treat as a miss and recompute

    def _cache_store(self, key: CacheKey, artifact: ArtifactRef) -> None:
        data = artifact.path.read_bytes()
        entry = self.cache_dir / key.digest
        _atomic_write(entry, data)
        _atomic_write(self.cache_dir / (key.digest + ".sha256"), (digest_bytes(data) + "\n").encode())

    def _spawn_runner(self, nid: int, node_dir: Path, manifest_path: Path) -> _Outcome:
        command = list(self.config.runner_command) + ["--manifest", str(manifest_path)]
        stdout_path = node_dir / "stdout.txt"
        stderr_path = node_dir / "stderr.txt"
        try:
            with stdout_path.open("wb") as out, stderr_path.open("wb") as err:
                proc = subprocess.Popen(command, stdout=out, stderr=err, cwd=node_dir)
                try:
                    returncode = proc.wait(timeout=self.config.timeout)
                except subprocess.TimeoutExpired:
                    proc.kill()
                    proc.wait()
                    return _Outcome(
                        node=nid,
                        error={
                            "type": "NodeExecutionFailure",
                            "error": {"type": "Timeout", "message": f"runner exceeded {self.config.timeout}s"},
                            "command": command,
                        },
                    )
        except OSError as exc:
            return _Outcome(
                node=nid,
                error={"type": "RunnerSpawnFailure", "message": str(exc), "command": command},
            )

        if returncode != 0:
            error_file = None
            error_path = node_dir / "error.json"
            if error_path.exists():
                try:
                    error_file = json.loads(error_path.read_text("utf-8"))
                except ValueError:
                    error_file = {"type": "Unknown", "message": "unreadable error.json"}
            stderr_tail = stderr_path.read_bytes()[-_STDERR_TAIL:].decode("utf-8", "replace")
            return _Outcome(
                node=nid,
                error={
                    "type": "NodeExecutionFailure",
                    "exit_code": returncode,
                    "error": error_file,
                    "stderr": stderr_tail,
                },
            )

        output_path = node_dir / "output.json"
        if not output_path.exists():
            return _Outcome(
                node=nid,
                error={
                    "type": "ProtocolViolation",
                    "message": "runner exited 0 without writing the output envelope",
                },
            )
        data = output_path.read_bytes()
        try:
            ValueEnvelope.from_json_obj(json.loads(data.decode("utf-8")))
        except (ValueError, UnicodeDecodeError) as exc:
            return _Outcome(
                node=nid,
                error={"type": "ProtocolViolation", "message": f"output envelope is invalid: {exc}"},
            )
        return _Outcome(node=nid, artifact=ArtifactRef(digest_bytes(data), output_path))

    # -- outputs ---------------------------------------------------------

    def _collect_outputs(self) -> dict[str, ArtifactRef]:
        outputs: dict[str, ArtifactRef] = {}
        for node in self.doc.output_nodes():
            edges = self.in_edges.get(node.id, [])
            if not edges:
                continue
            if node.id in self.extraction:
                task = self.tasks[node.id]
                if task.phase is Phase.SUCCEEDED and task.output is not None:
                    outputs[node.kind.name] = task.output
            else:
                artifact = self.artifacts.get(edges[0].source)
                if artifact is not None:
                    outputs[node.kind.name] = artifact
        return outputs


def execute(doc: WorkflowDocument, config: RunConfig) -> RunReport:
    """Run every function node of ``doc`` and collect the workflow outputs.

    Nodes run in an order consistent with the topological sort, at most
    ``config.max_parallel`` runner processes at a time. A node failure
    marks its transitive downstream as skipped while independent branches
    keep running; the report's ``succeeded`` flag is False afterwards
    (fail-at-end). The per-node outcome, including cache hits and error
    details, is available in ``report.tasks``.
    """
    return _Run(doc, config).execute()
