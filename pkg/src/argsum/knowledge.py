"""Heuristic fallback extractors for targets and aspects.

The real annotations are expected as precomputed fields in the raw dumps
(produced by dedicated neural models upstream). These fallbacks exist so the
knowledge-encoded variants can be exercised end-to-end when those fields are
missing; they are crude, deterministic, and clearly labeled as such.
"""

from __future__ import annotations

from collections import Counter

from .text import tokenize

# Small closed-class list; only used to keep phrase candidates contentful.
_STOPWORDS = frozenset(
    """
    a an the this that these those it its they them their we our you your i my
    is are was were be been being am do does did has have had will would can
    could should shall may might must and or but nor so yet if then than as of
    in on at by for with about into over after before between out against to
    from up down not no
    """.split()
)

_COPULAS = frozenset({"is", "are", "was", "were", "be", "has", "have", "should", "must", "can", "will"})


def fallback_aspects(text: str, max_aspects: int = 10) -> list[str]:
    """Most frequent content unigrams and bigrams, most frequent first.

    Ties break alphabetically so repeated runs agree byte-for-byte.
    """
    tokens = tokenize(text)
    content = [t for t in tokens if t not in _STOPWORDS and len(t) > 2]
    candidates: Counter = Counter(content)
    for left, right in zip(tokens, tokens[1:]):
        if left not in _STOPWORDS and right not in _STOPWORDS and min(len(left), len(right)) > 2:
            candidates[f"{left} {right}"] += 1
    # prefer the longer phrase on count ties so bigrams absorb their unigrams
    ranked = sorted(candidates.items(), key=lambda item: (-item[1], -len(item[0].split()), item[0]))
    out: list[str] = []
    for phrase, count in ranked:
        if count < 2 and len(out) >= max_aspects // 2:
            break
        if any(phrase in kept or kept in phrase for kept in out):
            continue
        out.append(phrase)
        if len(out) >= max_aspects:
            break
    return out


def fallback_targets(text: str, max_targets: int = 3) -> list[str]:
    """Leading noun-ish spans of sentences, approximated without a parser.

    Takes the words of each sentence start up to the first copula-like verb
    (looking at most 8 words ahead); deduplicates case-insensitively.
    """
    out: list[str] = []
    seen: set[str] = set()
    for raw_sentence in text.replace("\n", " ").split(". "):
        words = raw_sentence.split()
        if not words:
            continue
        span: list[str] = []
        for word in words[:8]:
            if word.lower().strip(".,;:!?") in _COPULAS:
                break
            span.append(word)
        else:
            continue  # no verb found: too unreliable, skip the sentence
        if not span:
            continue
        candidate = " ".join(span).strip(".,;:!? ")
        key = candidate.lower()
        if candidate and key not in seen and key not in _STOPWORDS:
            seen.add(key)
            out.append(candidate)
        if len(out) >= max_targets:
            break
    return out
