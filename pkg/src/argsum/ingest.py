"""Raw-dump ingestion: filtering heuristics, dedup policy, corpus statistics.

Raw-dump JSONL schemas (one object per line, UTF-8):

* ``cmv_post`` dumps: ``{"id"?, "title", "selftext", "targets"?, "aspects"?}``.
  The title must carry the forum tag (a leading ``CMV:``, case-insensitive);
  with the tag stripped it becomes the conclusion, the selftext becomes the
  argumentative text. Stance is pro by construction (a post supports its
  own title).
* all other sources: ``{"id"?, "conclusion", "premise", "stance"?, "topic"?,
  "portal"?, "targets"?, "aspects"?}``. ``premise`` is the argumentative
  text; ``stance`` defaults to unknown (only an explicit con is filtered).

Records missing an ``id`` get ``<source>-<line number>``. ``targets`` and
``aspects`` are sanitized on read: empty strings and exact duplicates are
dropped, order preserved.

Filters are applied in a fixed order (cheapest first) and each rejected
record reports only the first violated rule, so diagnostics are reproducible:

    excluded_portal, missing_cmv_tag, con_stance, text_too_short,
    conclusion_too_short, conclusion_equals_topic, text_shorter_than_conclusion
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import EmptyCorpusError, SchemaError
from .metrics import novelty
from .records import ArgConclusionRecord, SourceKind, StanceLabel
from .text import normalize_ws, word_count

RULE_ORDER = (
    "excluded_portal",
    "missing_cmv_tag",
    "con_stance",
    "text_too_short",
    "conclusion_too_short",
    "conclusion_equals_topic",
    "text_shorter_than_conclusion",
)

_CMV_TAG_RE = re.compile(r"^\s*cmv\s*:\s*", re.IGNORECASE)


@dataclass(frozen=True)
class FilterConfig:
    """Filtering thresholds; defaults reproduce the published heuristics.

    "longer than ten words" and "longer than two words" translate to the
    inclusive minimums 11 and 3.
    """

    min_text_words: int = 11
    min_conclusion_words: int = 3
    require_cmv_tag: bool = True
    drop_con_stance: bool = True
    drop_conclusion_equals_topic: bool = True
    drop_text_shorter_than_conclusion: bool = True
    excluded_portals: tuple[str, ...] = ("debate.org",)

    def __post_init__(self):
        if self.min_text_words < 1 or self.min_conclusion_words < 1:
            raise ValueError("word-count minimums must be >= 1")
        object.__setattr__(
            self, "excluded_portals", tuple(p.lower() for p in self.excluded_portals)
        )


@dataclass(frozen=True)
class SourceStats:
    n_records: int
    avg_text_words: float
    avg_conclusion_words: float
    avg_novelty_pct: float

    def to_json_dict(self) -> dict:
        return {
            "n_records": self.n_records,
            "avg_text_words": self.avg_text_words,
            "avg_conclusion_words": self.avg_conclusion_words,
            "avg_novelty_pct": self.avg_novelty_pct,
        }


@dataclass(frozen=True)
class CorpusStats:
    n_records: int
    avg_text_words: float
    avg_conclusion_words: float
    avg_novelty_pct: float
    per_source: dict[str, SourceStats] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "n_records": self.n_records,
            "avg_text_words": self.avg_text_words,
            "avg_conclusion_words": self.avg_conclusion_words,
            "avg_novelty_pct": self.avg_novelty_pct,
            "per_source": {k: v.to_json_dict() for k, v in self.per_source.items()},
        }


def _sanitize_list(values) -> tuple[str, ...]:
    seen = set()
    out = []
    for value in values or ():
        value = str(value)
        if not value or value in seen:
            continue
        seen.add(value)
        out.append(value)
    return tuple(out)


@dataclass(frozen=True)
class _ParsedLine:
    record: ArgConclusionRecord
    portal: str | None
    cmv_tag_present: bool


def _parse_raw(obj: dict, source: SourceKind, line_no: int) -> _ParsedLine:
    record_id = str(obj["id"]) if "id" in obj else f"{source.value}-{line_no}"
    targets = _sanitize_list(obj.get("targets"))
    aspects = _sanitize_list(obj.get("aspects"))
    if source == SourceKind.CMV_POST:
        try:
            title, selftext = str(obj["title"]), str(obj["selftext"])
        except KeyError as exc:
            raise SchemaError(f"cmv_post line missing field {exc}", line=line_no) from exc
        tag_present = bool(_CMV_TAG_RE.match(title))
        conclusion = _CMV_TAG_RE.sub("", title, count=1).strip() if tag_present else title
        record = ArgConclusionRecord(
            id=record_id,
            source=source,
            text=selftext,
            conclusion=conclusion,
            topic=obj.get("topic"),
            targets=targets,
            aspects=aspects,
            stance=StanceLabel.PRO,
        )
        return _ParsedLine(record=record, portal=None, cmv_tag_present=tag_present)
    try:
        conclusion, premise = str(obj["conclusion"]), str(obj["premise"])
    except KeyError as exc:
        raise SchemaError(f"{source.value} line missing field {exc}", line=line_no) from exc
    try:
        stance = StanceLabel(obj.get("stance", "unknown"))
    except ValueError as exc:
        raise SchemaError(f"bad stance {obj.get('stance')!r}", line=line_no) from exc
    record = ArgConclusionRecord(
        id=record_id,
        source=source,
        text=premise,
        conclusion=conclusion,
        topic=obj.get("topic"),
        targets=targets,
        aspects=aspects,
        stance=stance,
    )
    portal = obj.get("portal")
    return _ParsedLine(record=record, portal=str(portal).lower() if portal else None, cmv_tag_present=True)


def _first_violation(parsed: _ParsedLine, config: FilterConfig) -> str | None:
    record = parsed.record
    if parsed.portal and parsed.portal in config.excluded_portals:
        return "excluded_portal"
    if (
        record.source == SourceKind.CMV_POST
        and config.require_cmv_tag
        and not parsed.cmv_tag_present
    ):
        return "missing_cmv_tag"
    if config.drop_con_stance and record.stance == StanceLabel.CON:
        return "con_stance"
    text_words = word_count(record.text)
    conclusion_words = word_count(record.conclusion)
    if text_words < config.min_text_words:
        return "text_too_short"
    if conclusion_words < config.min_conclusion_words:
        return "conclusion_too_short"
    if (
        config.drop_conclusion_equals_topic
        and record.topic is not None
        and normalize_ws(record.conclusion).lower() == normalize_ws(record.topic).lower()
    ):
        return "conclusion_equals_topic"
    # Kept texts must be strictly longer than their conclusion.
    if config.drop_text_shorter_than_conclusion and text_words <= conclusion_words:
        return "text_shorter_than_conclusion"
    return None


def ingest(
    path: str | Path, source: SourceKind, config: FilterConfig | None = None
) -> tuple[list[ArgConclusionRecord], list[tuple[ArgConclusionRecord, str]]]:
    """Read one raw dump, returning (kept, rejected) in input order.

    ``kept`` and ``rejected`` partition the file's records; each rejected
    entry carries the first violated rule. Malformed lines raise SchemaError
    with their line number; they are never silently skipped.
    """
    config = config or FilterConfig()
    kept: list[ArgConclusionRecord] = []
    rejected: list[tuple[ArgConclusionRecord, str]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", line=line_no) from exc
            if not isinstance(obj, dict):
                raise SchemaError("line is not a JSON object", line=line_no)
            parsed = _parse_raw(obj, source, line_no)
            rule = _first_violation(parsed, config)
            if rule is None:
                kept.append(parsed.record)
            else:
                rejected.append((parsed.record, rule))
    return kept, rejected


def dedup_policy(records: Sequence[ArgConclusionRecord]) -> list[ArgConclusionRecord]:
    """Drop records whose text AND conclusion both duplicate an earlier record.

    Duplicate conclusions with distinct texts are deliberately preserved:
    the same conclusion drawn from different arguments is signal, not noise.
    """
    seen: set[tuple[str, str]] = set()
    out = []
    for record in records:
        key = (record.text, record.conclusion)
        if key in seen:
            continue
        seen.add(key)
        out.append(record)
    return out


def _mean(values: list[float]) -> float:
    return sum(values) / len(values)


def _stats_of(records: Sequence[ArgConclusionRecord]) -> tuple[float, float, float]:
    text_words = [float(word_count(r.text)) for r in records]
    conclusion_words = [float(word_count(r.conclusion)) for r in records]
    novelties = [novelty(r.conclusion, r.text) for r in records]
    return _mean(text_words), _mean(conclusion_words), _mean(novelties)


def corpus_stats(records: Sequence[ArgConclusionRecord]) -> CorpusStats:
    """Averages over included records only; novelty via ``metrics.novelty``."""
    if not records:
        raise EmptyCorpusError("cannot compute statistics of an empty corpus")
    avg_text, avg_conclusion, avg_novelty = _stats_of(records)
    per_source: dict[str, SourceStats] = {}
    for kind in SourceKind:
        subset = [r for r in records if r.source == kind]
        if not subset:
            continue
        sub_text, sub_conclusion, sub_novelty = _stats_of(subset)
        per_source[kind.value] = SourceStats(
            n_records=len(subset),
            avg_text_words=sub_text,
            avg_conclusion_words=sub_conclusion,
            avg_novelty_pct=sub_novelty,
        )
    return CorpusStats(
        n_records=len(records),
        avg_text_words=avg_text,
        avg_conclusion_words=avg_conclusion,
        avg_novelty_pct=avg_novelty,
        per_source=per_source,
    )
