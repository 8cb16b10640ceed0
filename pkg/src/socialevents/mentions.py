"""Person-ID token rules shared by trace scoring, QA validation, and ID remapping.

Two token forms are recognized: "Person N" (case-insensitive) and "PN"
(uppercase P), each with N a non-negative integer at a word boundary.
"""

from __future__ import annotations

import re
from collections import Counter

PERSON_WORD_RE = re.compile(r"\bperson\s+(\d+)\b", re.IGNORECASE)
PERSON_SHORT_RE = re.compile(r"\bP(\d+)\b")


def extract_person_ids(text: str) -> set[int]:
    """All person IDs mentioned in text via either token form."""
    ids = {int(m.group(1)) for m in PERSON_WORD_RE.finditer(text)}
    ids.update(int(m.group(1)) for m in PERSON_SHORT_RE.finditer(text))
    return ids


def person_id_counts(text: str) -> Counter:
    """Mention counts per person ID (both token forms pooled)."""
    counts: Counter = Counter()
    for m in PERSON_WORD_RE.finditer(text):
        counts[int(m.group(1))] += 1
    for m in PERSON_SHORT_RE.finditer(text):
        counts[int(m.group(1))] += 1
    return counts


def replace_person_ids(text: str, mapping: dict[int, int]) -> str:
    """Rewrite every person token through mapping, preserving the token style.

    Raises KeyError if the text mentions an ID absent from the mapping.
    """

    def _sub(match: re.Match) -> str:
        old = int(match.group(1))
        prefix = match.group(0)[: match.start(1) - match.start(0)]
        return prefix + str(mapping[old])

    text = PERSON_WORD_RE.sub(_sub, text)
    return PERSON_SHORT_RE.sub(_sub, text)
