"""Canonical record types shared by all pipeline stages.

A corpus is a JSONL file with one object per line:

    {"id","source","text","conclusion","topic","targets","aspects","stance"}

``topic`` is optional and omitted when absent. ``text`` and ``conclusion``
are stored verbatim; whitespace normalization is applied only when
validating or counting words, never to the stored strings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable

from .errors import SchemaError
from .text import normalize_ws

__all__ = [
    "SourceKind",
    "StanceLabel",
    "CorpusVariant",
    "ArgConclusionRecord",
    "validate_record",
    "read_records",
    "write_records",
]


class SourceKind(str, Enum):
    CMV_POST = "cmv_post"
    CMV_COMMENT = "cmv_comment"
    KIALO = "kialo"
    ARGSME = "argsme"
    ARGSKP = "argskp"

    @property
    def is_cmv(self) -> bool:
        return self in (SourceKind.CMV_POST, SourceKind.CMV_COMMENT)

    @property
    def is_debate(self) -> bool:
        return not self.is_cmv


class StanceLabel(str, Enum):
    PRO = "pro"
    CON = "con"
    UNKNOWN = "unknown"


class CorpusVariant(str, Enum):
    """The six dataset configurations: three plain, three knowledge-encoded."""

    ALL = "all"
    CMV = "cmv"
    DEBATES = "debates"
    TOPIC = "topic"
    ASPECTS = "aspects"
    TARGETS = "targets"

    @property
    def is_plain(self) -> bool:
        return self in (CorpusVariant.ALL, CorpusVariant.CMV, CorpusVariant.DEBATES)


@dataclass(frozen=True)
class ArgConclusionRecord:
    """One argumentative text paired with its conclusion and annotations.

    Immutable after construction; list-valued fields are stored as tuples.
    """

    id: str
    source: SourceKind
    text: str
    conclusion: str
    topic: str | None = None
    targets: tuple[str, ...] = ()
    aspects: tuple[str, ...] = ()
    stance: StanceLabel = StanceLabel.UNKNOWN

    def to_json_dict(self) -> dict:
        out: dict = {
            "id": self.id,
            "source": self.source.value,
            "text": self.text,
            "conclusion": self.conclusion,
        }
        if self.topic is not None:
            out["topic"] = self.topic
        out["targets"] = list(self.targets)
        out["aspects"] = list(self.aspects)
        out["stance"] = self.stance.value
        return out

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ArgConclusionRecord":
        try:
            return cls(
                id=str(obj["id"]),
                source=SourceKind(obj["source"]),
                text=obj["text"],
                conclusion=obj["conclusion"],
                topic=obj.get("topic"),
                targets=tuple(obj.get("targets", ())),
                aspects=tuple(obj.get("aspects", ())),
                stance=StanceLabel(obj.get("stance", "unknown")),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise SchemaError(f"bad record object: {exc}") from exc

    def with_knowledge(
        self, targets: Iterable[str] | None = None, aspects: Iterable[str] | None = None
    ) -> "ArgConclusionRecord":
        """Copy with replaced annotation lists (used by fallback extractors)."""
        out = self
        if targets is not None:
            out = replace(out, targets=tuple(targets))
        if aspects is not None:
            out = replace(out, aspects=tuple(aspects))
        return out


def _list_violations(values: tuple[str, ...], kind: str) -> list[str]:
    codes = []
    if any(v == "" for v in values):
        codes.append(f"empty_{kind}")
    if len(set(values)) != len(values):
        codes.append(f"duplicate_{kind}")
    return codes


def validate_record(record: ArgConclusionRecord) -> list[str]:
    """Return the codes of every violated invariant; an empty list means ok.

    Violations are data, not errors: callers decide whether to reject.
    Uniqueness of ids is a corpus-file property checked by ``read_records``.
    """
    codes: list[str] = []
    if not record.id:
        codes.append("empty_id")
    if not normalize_ws(record.text):
        codes.append("empty_text")
    if not normalize_ws(record.conclusion):
        codes.append("empty_conclusion")
    codes += _list_violations(record.targets, "target")
    codes += _list_violations(record.aspects, "aspect")
    return codes


def read_records(path: str | Path, validate: bool = True) -> list[ArgConclusionRecord]:
    """Load a clean-corpus JSONL file.

    Raises SchemaError (with the line number) on malformed lines, invariant
    violations, or duplicated ids.
    """
    records: list[ArgConclusionRecord] = []
    seen_ids: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", line=line_no) from exc
            try:
                record = ArgConclusionRecord.from_json_dict(obj)
            except SchemaError as exc:
                raise SchemaError(str(exc), line=line_no) from exc
            if validate:
                violations = validate_record(record)
                if violations:
                    raise SchemaError(
                        f"record {record.id!r} violates: {', '.join(violations)}",
                        line=line_no,
                    )
            if record.id in seen_ids:
                raise SchemaError(f"duplicate id {record.id!r}", line=line_no)
            seen_ids.add(record.id)
            records.append(record)
    return records


def write_records(records: Iterable[ArgConclusionRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json_dict(), ensure_ascii=False) + "\n")
