"""Structured problem reports shared by parsing and validation."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterable, Iterator


class Severity(enum.Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    """One problem found in a workflow document.

    ``location`` points at the offending element, e.g. ``"nodes[3].id"``,
    ``"edges[0]"`` or ``"version"``.
    """

    severity: Severity
    code: str
    message: str
    location: str | None = None

    def to_json_obj(self) -> dict:
        return {
            "severity": self.severity.value,
            "code": self.code,
            "message": self.message,
            "location": self.location,
        }

    def __str__(self) -> str:
        loc = f"{self.location}: " if self.location else ""
        return f"{loc}{self.severity.value}: {self.code}: {self.message}"


class DiagnosticSet:
    """Ordered collection of diagnostics raised while reading or checking a document."""

    def __init__(self, items: Iterable[Diagnostic] = ()) -> None:
        self.items: list[Diagnostic] = list(items)

    def error(self, code: str, message: str, location: str | None = None) -> None:
        self.items.append(Diagnostic(Severity.ERROR, code, message, location))

    def warning(self, code: str, message: str, location: str | None = None) -> None:
        self.items.append(Diagnostic(Severity.WARNING, code, message, location))

    def extend(self, other: DiagnosticSet) -> None:
        self.items.extend(other.items)

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.items if d.severity is Severity.ERROR]

    @property
    def warnings(self) -> list[Diagnostic]:
        return [d for d in self.items if d.severity is Severity.WARNING]

    @property
    def has_errors(self) -> bool:
        return any(d.severity is Severity.ERROR for d in self.items)

    def codes(self) -> set[str]:
        return {d.code for d in self.items}

    def to_json_lines(self) -> str:
        return "\n".join(json.dumps(d.to_json_obj()) for d in self.items)

    def __iter__(self) -> Iterator[Diagnostic]:
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __bool__(self) -> bool:
        return bool(self.items)

    def __repr__(self) -> str:
        return f"DiagnosticSet({self.items!r})"


class PwdError(Exception):
    """Base class for all errors raised by this package."""


class DocumentError(PwdError):
    """A document failed parsing or validation.

    Carries the complete :class:`DiagnosticSet`, never just the first
    problem found.
    """

    def __init__(self, diagnostics: DiagnosticSet):
        self.diagnostics = diagnostics
        summary = "; ".join(str(d) for d in diagnostics.errors[:5])
        extra = len(diagnostics.errors) - 5
        if extra > 0:
            summary += f" (+{extra} more)"
        super().__init__(summary or "document error")


class UnknownNodeIdError(PwdError, KeyError):
    """A node id was looked up that does not exist in the document."""

    def __init__(self, node_id: int):
        self.node_id = node_id
        super().__init__(f"no node with id {node_id}")
