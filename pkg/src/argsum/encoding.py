"""Control-code sequence encoding, corpus variants, splits, seq2seq export.

Knowledge-encoded source sequences have the fixed shape

    <|TOPIC|>topic-or-NA<|ARGUMENT|>text[<|ASPECTS|>a, b | <|TARGETS|>x, y]<|CONCLUSION|>

with no whitespace inserted around control tokens; field values are used
verbatim, joined by ", " for list fields. Plain variants (all/cmv/debates)
emit the bare text with no control tokens. Aspects and targets are never
co-encoded.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    ControlTokenInValueError,
    CorpusTooSmallError,
    MalformedSequenceError,
    MissingKnowledgeError,
)
from .records import ArgConclusionRecord, CorpusVariant, SourceKind

TOPIC_TOKEN = "<|TOPIC|>"
ARGUMENT_TOKEN = "<|ARGUMENT|>"
ASPECTS_TOKEN = "<|ASPECTS|>"
TARGETS_TOKEN = "<|TARGETS|>"
CONCLUSION_TOKEN = "<|CONCLUSION|>"
CONTROL_TOKENS = (TOPIC_TOKEN, ARGUMENT_TOKEN, ASPECTS_TOKEN, TARGETS_TOKEN, CONCLUSION_TOKEN)

MISSING_TOPIC = "NA"
LIST_SEPARATOR = ", "

# Word-count truncation defaults for export; knowledge variants get headroom
# for the appended annotation block.
MAX_SOURCE_WORDS_PLAIN = 512
MAX_SOURCE_WORDS_KNOWLEDGE = 750


@dataclass(frozen=True)
class EncodedExample:
    """One training pair. ``source`` is carried for split balancing."""

    source_sequence: str
    target_sequence: str
    variant: CorpusVariant
    record_id: str
    source: SourceKind


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.9
    valid_fraction: float = 0.1
    test_count: int = 1000
    seed: int = 5153

    def __post_init__(self):
        if abs(self.train_fraction + self.valid_fraction - 1.0) > 1e-9:
            raise ValueError("train_fraction and valid_fraction must sum to 1.0")
        if self.test_count < 0:
            raise ValueError("test_count must be >= 0")


def _fields_in_play(record: ArgConclusionRecord, variant: CorpusVariant) -> list[str]:
    values = [record.text, record.conclusion]
    if not variant.is_plain:
        values.append(record.topic or "")
        if variant == CorpusVariant.ASPECTS:
            values.extend(record.aspects)
        if variant == CorpusVariant.TARGETS:
            values.extend(record.targets)
    return values


def _check_control_tokens(record: ArgConclusionRecord, variant: CorpusVariant) -> None:
    for value in _fields_in_play(record, variant):
        for token in CONTROL_TOKENS:
            if token in value:
                raise ControlTokenInValueError(
                    f"record {record.id!r} embeds {token} in a field value"
                )


def encode_example(record: ArgConclusionRecord, variant: CorpusVariant) -> EncodedExample:
    """Render one record as a (source, target) training sequence."""
    _check_control_tokens(record, variant)
    if variant.is_plain:
        source = record.text
    else:
        topic = record.topic if record.topic else MISSING_TOPIC
        parts = [TOPIC_TOKEN, topic, ARGUMENT_TOKEN, record.text]
        if variant == CorpusVariant.ASPECTS:
            if not record.aspects:
                raise MissingKnowledgeError(f"record {record.id!r} has no aspects")
            parts += [ASPECTS_TOKEN, LIST_SEPARATOR.join(record.aspects)]
        elif variant == CorpusVariant.TARGETS:
            if not record.targets:
                raise MissingKnowledgeError(f"record {record.id!r} has no targets")
            parts += [TARGETS_TOKEN, LIST_SEPARATOR.join(record.targets)]
        parts.append(CONCLUSION_TOKEN)
        source = "".join(parts)
    return EncodedExample(
        source_sequence=source,
        target_sequence=record.conclusion,
        variant=variant,
        record_id=record.id,
        source=record.source,
    )


def parse_encoded(source_sequence: str) -> dict[str, str]:
    """Invert ``encode_example`` for knowledge variants.

    Returns {"topic", "text"} plus "aspects" or "targets" when present; list
    fields come back as their verbatim ", "-joined block (splitting them is
    ambiguous when a value itself contains ", ").
    """
    counts = {token: source_sequence.count(token) for token in CONTROL_TOKENS}
    for token in (TOPIC_TOKEN, ARGUMENT_TOKEN, CONCLUSION_TOKEN):
        if counts[token] != 1:
            raise MalformedSequenceError(f"expected exactly one {token}")
    if counts[ASPECTS_TOKEN] > 1 or counts[TARGETS_TOKEN] > 1:
        raise MalformedSequenceError("repeated knowledge token")
    if counts[ASPECTS_TOKEN] and counts[TARGETS_TOKEN]:
        raise MalformedSequenceError("aspects and targets are never co-encoded")
    if not source_sequence.startswith(TOPIC_TOKEN):
        raise MalformedSequenceError(f"sequence must begin with {TOPIC_TOKEN}")
    if not source_sequence.endswith(CONCLUSION_TOKEN):
        raise MalformedSequenceError(f"sequence must end with {CONCLUSION_TOKEN}")

    body = source_sequence[len(TOPIC_TOKEN) : -len(CONCLUSION_TOKEN)]
    topic, sep, rest = body.partition(ARGUMENT_TOKEN)
    if not sep:
        raise MalformedSequenceError(f"missing {ARGUMENT_TOKEN}")
    out = {"topic": topic}
    for token, key in ((ASPECTS_TOKEN, "aspects"), (TARGETS_TOKEN, "targets")):
        if counts[token]:
            text, sep, block = rest.partition(token)
            if not sep:  # token sits before <|ARGUMENT|>: out of order
                raise MalformedSequenceError(f"{token} out of order")
            out["text"] = text
            out[key] = block
            return out
    out["text"] = rest
    return out


def variant_drop_reason(record: ArgConclusionRecord, variant: CorpusVariant) -> str | None:
    """Why ``build_variant`` would drop this record, or None if it is kept.

    Source-kind mismatches for the cmv/debates variants are selection, not
    drops, and are reported separately.
    """
    if variant == CorpusVariant.ASPECTS and not record.aspects:
        return "missing_aspects"
    if variant == CorpusVariant.TARGETS and not record.targets:
        return "missing_targets"
    try:
        _check_control_tokens(record, variant)
    except ControlTokenInValueError:
        return "control_token_in_value"
    return None


def _selected(record: ArgConclusionRecord, variant: CorpusVariant) -> bool:
    if variant == CorpusVariant.CMV:
        return record.source.is_cmv
    if variant == CorpusVariant.DEBATES:
        return record.source.is_debate
    return True


def build_variant(
    corpus: Sequence[ArgConclusionRecord], variant: CorpusVariant
) -> list[EncodedExample]:
    """Encode every eligible record; ineligible ones are silently dropped.

    Records failing the variant's knowledge precondition (or embedding a
    control token) are skipped, which is what shrinks the aspect/target
    variants relative to the topic variant.
    """
    out = []
    for record in corpus:
        if not _selected(record, variant):
            continue
        if variant_drop_reason(record, variant) is not None:
            continue
        out.append(encode_example(record, variant))
    return out


def _balanced_test_positions(
    shuffled: Sequence[EncodedExample], test_count: int
) -> list[int]:
    cmv = [i for i, example in enumerate(shuffled) if example.source.is_cmv]
    debate = [i for i, example in enumerate(shuffled) if example.source.is_debate]
    if not cmv or not debate or test_count == 0:
        return list(range(test_count))
    want_cmv = test_count // 2
    want_debate = test_count - want_cmv
    take_cmv = cmv[:want_cmv]
    take_debate = debate[:want_debate]
    # Backfill from the other pool when one side is too small.
    if len(take_cmv) < want_cmv:
        take_debate = debate[: want_debate + want_cmv - len(take_cmv)]
    elif len(take_debate) < want_debate:
        take_cmv = cmv[: want_cmv + want_debate - len(take_debate)]
    return sorted(take_cmv + take_debate)


def split_corpus(
    examples: Sequence[EncodedExample], spec: SplitSpec | None = None
) -> tuple[list[EncodedExample], list[EncodedExample], list[EncodedExample]]:
    """Deterministic (train, valid, test) split.

    The input is shuffled with ``spec.seed``, the test set is drawn first
    (50/50 by source kind when both CMV and debate examples are present),
    and the remainder is split by the fractions: valid gets the floor,
    train the rest.
    """
    spec = spec or SplitSpec()
    if len(examples) <= spec.test_count:
        raise CorpusTooSmallError(
            f"{len(examples)} examples cannot cover a test set of {spec.test_count}"
        )
    shuffled = list(examples)
    random.Random(spec.seed).shuffle(shuffled)
    test_positions = _balanced_test_positions(shuffled, spec.test_count)
    test = [shuffled[i] for i in test_positions]
    in_test = set(test_positions)
    remaining = [example for i, example in enumerate(shuffled) if i not in in_test]
    n_valid = math.floor(len(remaining) * spec.valid_fraction)
    valid = remaining[:n_valid]
    train = remaining[n_valid:]
    return train, valid, test


_NEWLINE_RE = re.compile(r"[\r\n]")


def _export_line(text: str, max_words: int | None) -> str:
    from .text import truncate_words

    flat = _NEWLINE_RE.sub(" ", text)
    if max_words is not None:
        flat = truncate_words(flat, max_words)
    return flat


def export_seq2seq(
    examples: Iterable[EncodedExample],
    path_prefix: str | Path,
    max_source_tokens: int = MAX_SOURCE_WORDS_PLAIN,
) -> tuple[Path, Path]:
    """Write aligned ``<prefix>.source`` / ``<prefix>.target`` files.

    Line i of each file belongs to example i. Sources are truncated to
    ``max_source_tokens`` whitespace words (truncation is word-based, not
    model-tokenizer-based; downstream finetuning may re-truncate). Embedded
    newlines are replaced by spaces so alignment survives.
    """
    prefix = Path(path_prefix)
    source_path = prefix.with_name(prefix.name + ".source")
    target_path = prefix.with_name(prefix.name + ".target")
    with open(source_path, "w", encoding="utf-8") as src, open(
        target_path, "w", encoding="utf-8"
    ) as tgt:
        for example in examples:
            src.write(_export_line(example.source_sequence, max_source_tokens) + "\n")
            tgt.write(_export_line(example.target_sequence, None) + "\n")
    return source_path, target_path


def default_max_source_tokens(variant: CorpusVariant) -> int:
    return MAX_SOURCE_WORDS_PLAIN if variant.is_plain else MAX_SOURCE_WORDS_KNOWLEDGE
