"""Diagnostics over scored traces and QA corpora.

Covers grounding precision, participant-ID corruption for shortcut probing,
Pearson correlation, reasoning-length statistics, and a reference "ID echo"
answerer that picks options purely by repeating question IDs.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
import random
import statistics
from dataclasses import dataclass

from .errors import ContractError
from .mentions import extract_person_ids, person_id_counts, replace_person_ids
from .qa import LETTERS, QAItem
from .reward import ReasoningTrace, parse_trace


@dataclass(frozen=True)
class IdRemap:
    """A permutation over the person IDs appearing in one QA item."""

    mapping: dict[int, int]

    def __post_init__(self):
        domain = set(self.mapping)
        image = set(self.mapping.values())
        if len(image) != len(self.mapping) or domain != image:
            raise ContractError(f"remap is not a permutation: {self.mapping}")

    def inverse(self) -> "IdRemap":
        return IdRemap({v: k for k, v in self.mapping.items()})

    def is_identity(self) -> bool:
        return all(k == v for k, v in self.mapping.items())


@dataclass(frozen=True)
class LengthStats:
    count: int
    mean: float
    median: float
    malformed: int


@dataclass(frozen=True)
class GroundingStats:
    """Per-model grounding aggregates over scored rollouts."""

    rollouts: int
    accuracy: float
    precision_macro: float | None  # mean over rollouts with a defined precision
    precision_micro: float | None  # pooled correct mentions / pooled mentions
    mean_novel_participants: float


def grounding_precision(pred: set[int], gt: set[int]) -> float | None:
    """Fraction of predicted participants that are correct; None (excluded
    from aggregates) when nothing was predicted."""
    if not gt:
        raise ContractError("gt participants must be non-empty")
    if not pred:
        return None
    return len(set(pred) & set(gt)) / len(pred)


def novel_participants(pred: set[int], question: str) -> int:
    """Predicted IDs that the question text never mentions."""
    return len(set(pred) - extract_person_ids(question))


def item_person_ids(item: QAItem) -> set[int]:
    texts = [item.question, item.answer_text]
    if item.options:
        texts.extend(item.options)
    ids: set[int] = set()
    for text in texts:
        ids.update(extract_person_ids(text))
    return ids


def corrupt_ids(item: QAItem, remap: IdRemap) -> QAItem:
    """Rewrite person tokens in the item text through the remap.

    The answer letter, source event IDs, and time range stay untouched; only
    the textual ID references move.
    """
    present = item_person_ids(item)
    missing = present - set(remap.mapping)
    if missing:
        raise ContractError(f"remap does not cover IDs {sorted(missing)}")

    mapping = remap.mapping
    question = replace_person_ids(item.question, mapping)
    answer_text = replace_person_ids(item.answer_text, mapping)
    options = item.options
    if options is not None:
        options = tuple(replace_person_ids(o, mapping) for o in options)
    answer = item.answer if item.format == "mcq" else answer_text
    return dataclasses.replace(
        item, question=question, options=options, answer=answer, answer_text=answer_text
    )


def seeded_remap(ids: list[int], key: str) -> IdRemap:
    """Deterministic permutation of ids keyed by an arbitrary string; always
    non-identity when two or more IDs are present."""
    ids = sorted(ids)
    if len(ids) < 2:
        return IdRemap({pid: pid for pid in ids})
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    rng = random.Random(int.from_bytes(digest[:8], "big"))
    shuffled = ids[:]
    rng.shuffle(shuffled)
    if shuffled == ids:
        shuffled = ids[1:] + ids[:1]
    return IdRemap(dict(zip(ids, shuffled)))


def pearson(xs: list[float], ys: list[float]) -> float:
    """Sample Pearson correlation; raises on degenerate series."""
    if len(xs) != len(ys):
        raise ContractError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise ContractError("need at least 2 points")
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    syy = math.fsum((y - my) ** 2 for y in ys)
    if sxx == 0.0 or syy == 0.0:
        raise ContractError("correlation undefined for a constant series")
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return sxy / math.sqrt(sxx * syy)


def reasoning_length(trace: ReasoningTrace) -> tuple[int, bool]:
    """Whitespace-token count of the think block; malformed traces are counted
    over the raw text and flagged."""
    if trace.well_formed and trace.think_block is not None:
        return len(trace.think_block.split()), False
    return len(trace.raw.split()), True


def length_stats(traces_by_model: dict[str, list[str]]) -> dict[str, LengthStats]:
    report = {}
    for model, raws in sorted(traces_by_model.items()):
        if not raws:
            continue
        lengths = []
        malformed = 0
        for raw in raws:
            n, flagged = reasoning_length(parse_trace(raw))
            lengths.append(n)
            malformed += int(flagged)
        report[model] = LengthStats(
            count=len(lengths),
            mean=math.fsum(lengths) / len(lengths),
            median=float(statistics.median(lengths)),
            malformed=malformed,
        )
    return report


def grounding_stats(rollouts) -> GroundingStats:
    """Aggregate (pred, gt, correct, question) tuples for one model."""
    rollouts = list(rollouts)
    if not rollouts:
        raise ContractError("no rollouts to aggregate")
    precisions = []
    pooled_pred = 0
    pooled_hits = 0
    novel_total = 0
    correct_total = 0
    for pred, gt, correct, question in rollouts:
        p = grounding_precision(pred, gt)
        if p is not None:
            precisions.append(p)
        pooled_pred += len(pred)
        pooled_hits += len(set(pred) & set(gt))
        novel_total += novel_participants(pred, question)
        correct_total += int(correct)
    n = len(rollouts)
    return GroundingStats(
        rollouts=n,
        accuracy=correct_total / n,
        precision_macro=math.fsum(precisions) / len(precisions) if precisions else None,
        precision_micro=pooled_hits / pooled_pred if pooled_pred else None,
        mean_novel_participants=novel_total / n,
    )


def id_echo_answer(item: QAItem) -> str | None:
    """Reference shortcut answerer: take the most frequent person ID in the
    question (ties to the smallest ID) and pick the first option mentioning
    it. Used to demonstrate that ID corruption breaks text-only shortcuts."""
    if item.format != "mcq" or not item.options:
        return None
    counts = person_id_counts(item.question)
    if not counts:
        return None
    top = max(counts.values())
    echo_id = min(pid for pid, c in counts.items() if c == top)
    for index, option in enumerate(item.options):
        if echo_id in extract_person_ids(option):
            return LETTERS[index]
    return None
