"""Social gaze event detection over interpolated tracks and frame features.

Five detectors, each a pure function of its inputs:

    sudden_gaze_shift   per-person velocity above 0.7, clustered, 0.5-1.5 s
    joint_attention     convergence >= 0.6, contributor-set chaining at 70%
                        overlap, peripheral contributors dropped, >= 0.5 s
    gaze_following      follower hits a leader's measured gaze point within
                        0.03 at a lag of 1.0-2.0 s
    attention_capture   >= 3 persons above velocity 0.4 inside one window
    mutual_gaze         bidirectional measured-gaze hits on face boxes with a
                        2% margin, >= 1.0 s
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable

from .config import DEFAULT_CONFIG, EngineConfig
from .errors import ValidationError
from .gaze import PROV_MEASURED, FrameFeatures, GazeSample, GazeTrack
from .ingest import dumps_canonical

SOURCE_GAZE = "gaze"
SOURCE_GESTURE = "gesture"

GAZE_EVENT_TYPES = (
    "sudden_gaze_shift",
    "joint_attention",
    "gaze_following",
    "attention_capture",
    "mutual_gaze",
)


@dataclass(frozen=True)
class SocialEvent:
    event_id: int
    source: str
    event_type: str
    participants: frozenset[int]
    roles: dict[str, int] = field(default_factory=dict)
    start_time: float = 0.0
    end_time: float = 0.0
    confidence: float = 0.0
    attributes: dict = field(default_factory=dict)

    @property
    def duration(self) -> float:
        return self.end_time - self.start_time


@dataclass(frozen=True)
class IntervalCluster:
    start_t: float
    end_t: float
    member_times: tuple[float, ...]


def cluster_intervals(flagged_times: list[float], max_gap: float) -> list[IntervalCluster]:
    """Maximal runs of sorted times whose consecutive gaps stay within max_gap."""
    clusters = []
    run: list[float] = []
    for t in flagged_times:
        if run and t - run[-1] > max_gap:
            clusters.append(IntervalCluster(run[0], run[-1], tuple(run)))
            run = []
        run.append(t)
    if run:
        clusters.append(IntervalCluster(run[0], run[-1], tuple(run)))
    return clusters


def score_event_confidence(event: SocialEvent, samples: list[GazeSample]) -> float:
    """Mean supporting-sample confidence, discounted by interpolated support."""
    if not samples:
        raise ValidationError(f"event {event.event_type} has no supporting samples")
    mean_conf = sum(s.confidence for s in samples) / len(samples)
    measured = sum(1 for s in samples if s.provenance == PROV_MEASURED)
    return mean_conf * (0.5 + 0.5 * measured / len(samples))


def detect_sudden_shifts(
    track: GazeTrack,
    features: list[FrameFeatures],
    config: EngineConfig = DEFAULT_CONFIG,
) -> list[SocialEvent]:
    flagged = [
        f.t for f in features
        if track.person_id in f.velocities and f.velocities[track.person_id] > config.sudden_velocity
    ]
    events = []
    for cluster in cluster_intervals(flagged, config.sudden_cluster_gap):
        duration = cluster.end_t - cluster.start_t
        if not config.sudden_min_duration <= duration <= config.sudden_max_duration:
            continue
        support = _samples_in(track, cluster.start_t - config.sample_period, cluster.end_t)
        members = set(cluster.member_times)
        peak = max(f.velocities[track.person_id] for f in features if f.t in members)
        events.append(_event(
            "sudden_gaze_shift", {track.person_id}, cluster.start_t, cluster.end_t,
            support, attributes={"peak_velocity": peak},
        ))
    return events


def detect_joint_attention(
    tracks: list[GazeTrack],
    features: list[FrameFeatures],
    config: EngineConfig = DEFAULT_CONFIG,
) -> list[SocialEvent]:
    by_id = {track.person_id: track for track in tracks}

    eligible: list[tuple[float, frozenset[int], float]] = []  # (t, retained set, score)
    for f in features:
        if f.convergence is None or f.convergence < config.ja_convergence:
            continue
        retained = _retain_central(f, by_id, config)
        if len(retained) >= 2:
            eligible.append((f.t, retained, f.convergence))

    events = []
    run: list[tuple[float, frozenset[int], float]] = []
    for entry in eligible:
        if run:
            prev_t, prev_set, _ = run[-1]
            adjacent = entry[0] - prev_t == config.sample_period
            if not (adjacent and _jaccard(prev_set, entry[1]) >= config.ja_set_overlap):
                events.extend(_finish_ja(run, by_id, config))
                run = []
        run.append(entry)
    events.extend(_finish_ja(run, by_id, config))
    return events


def _retain_central(
    f: FrameFeatures, by_id: dict[int, GazeTrack], config: EngineConfig
) -> frozenset[int]:
    """Drop contributors farther than mult x median distance from the centroid."""
    dists = {}
    for pid in f.contributors:
        sample = by_id[pid].sample_at(f.t)
        dists[pid] = math.hypot(
            sample.gaze_point[0] - f.centroid[0], sample.gaze_point[1] - f.centroid[1]
        )
    ordered = sorted(dists.values())
    k = len(ordered)
    median = ordered[k // 2] if k % 2 else (ordered[k // 2 - 1] + ordered[k // 2]) / 2.0
    cutoff = config.ja_peripheral_mult * median
    return frozenset(pid for pid, d in dists.items() if d <= cutoff)


def _finish_ja(
    run: list[tuple[float, frozenset[int], float]],
    by_id: dict[int, GazeTrack],
    config: EngineConfig,
) -> list[SocialEvent]:
    if not run:
        return []
    start, end = run[0][0], run[-1][0]
    if end - start < config.ja_min_duration:
        return []
    participants: set[int] = set()
    support = []
    scores = []
    for t, retained, score in run:
        participants.update(retained)
        scores.append(score)
        for pid in sorted(retained):
            support.append(by_id[pid].sample_at(t))
    return [_event(
        "joint_attention", participants, start, end, support,
        attributes={
            "mean_convergence": sum(scores) / len(scores),
            "peak_convergence": max(scores),
        },
    )]


def detect_gaze_following(
    tracks: list[GazeTrack], config: EngineConfig = DEFAULT_CONFIG
) -> list[SocialEvent]:
    lags = _lag_grid(config)
    measured = {
        tr.person_id: {
            s.t: s for s in tr.samples
            if s.provenance == PROV_MEASURED and s.gaze_point is not None
        }
        for tr in tracks
    }
    events = []
    for follower in tracks:
        for cur in follower.samples:
            if cur.gaze_point is None:
                continue
            for leader in tracks:
                if leader.person_id == follower.person_id:
                    continue
                history = measured[leader.person_id]
                for lag in lags:
                    past = history.get(cur.t - lag)
                    if past is None:
                        continue
                    d = math.hypot(
                        cur.gaze_point[0] - past.gaze_point[0],
                        cur.gaze_point[1] - past.gaze_point[1],
                    )
                    if d < config.follow_distance:
                        events.append(_event(
                            "gaze_following",
                            {leader.person_id, follower.person_id},
                            cur.t - lag, cur.t, [past, cur],
                            roles={"leader": leader.person_id, "follower": follower.person_id},
                            attributes={"lag": lag, "distance": d},
                        ))
                        break  # earliest qualifying lag wins for this (leader, follower, t)
    return events


def detect_attention_capture(
    tracks: list[GazeTrack],
    features: list[FrameFeatures],
    config: EngineConfig = DEFAULT_CONFIG,
) -> list[SocialEvent]:
    flags: list[tuple[float, int]] = []
    for f in features:
        for pid, v in f.velocities.items():
            if v > config.capture_velocity:
                flags.append((f.t, pid))
    if not flags:
        return []

    # Slide the window over every grid start that could contain a flag.
    candidates = []  # (window_start, participants, span)
    width = config.capture_window
    step = config.sample_period
    first_flag = min(t for t, _ in flags)
    last_flag = max(t for t, _ in flags)
    w = first_flag - math.ceil(width / step - 1e-9) * step
    while w <= last_flag:
        in_window = [(t, pid) for t, pid in flags if w <= t <= w + width]
        persons = frozenset(pid for _, pid in in_window)
        if len(persons) >= config.capture_min_persons:
            times = [t for t, _ in in_window]
            candidates.append((w, persons, min(times), max(times)))
        w += step

    # Merge candidates whose windows intersect and participant sets match.
    merged: list[list] = []  # [persons, span_lo, span_hi, win_lo, win_hi]
    for w, persons, lo, hi in candidates:
        target = None
        for group in merged:
            if group[0] == persons and w <= group[4] and w + width >= group[3]:
                target = group
                break
        if target is None:
            merged.append([persons, lo, hi, w, w + width])
        else:
            target[1] = min(target[1], lo)
            target[2] = max(target[2], hi)
            target[3] = min(target[3], w)
            target[4] = max(target[4], w + width)

    by_id = {track.person_id: track for track in tracks}
    events = []
    for persons, lo, hi, win_lo, win_hi in merged:
        support = []
        peak = 0.0
        for t, pid in flags:
            if pid in persons and win_lo <= t <= win_hi:
                for at in (t - config.sample_period, t):
                    sample = by_id[pid].sample_at(at)
                    if sample is not None and sample not in support:
                        support.append(sample)
        for f in features:
            if win_lo <= f.t <= win_hi:
                for pid, v in f.velocities.items():
                    if pid in persons and v > config.capture_velocity:
                        peak = max(peak, v)
        events.append(_event(
            "attention_capture", persons, lo, hi, support,
            attributes={"peak_velocity": peak},
        ))
    return events


def detect_mutual_gaze(
    tracks: list[GazeTrack], config: EngineConfig = DEFAULT_CONFIG
) -> list[SocialEvent]:
    events = []
    for i, a in enumerate(tracks):
        for b in tracks[i + 1:]:
            b_by_t = {s.t: s for s in b.samples}
            hits = []
            for sa in a.samples:
                sb = b_by_t.get(sa.t)
                if sb is not None and _mutual_hit(sa, sb, config.mutual_margin):
                    hits.append(sa.t)
            for cluster in cluster_intervals(hits, config.sample_period):
                if cluster.end_t - cluster.start_t < config.mutual_min_duration:
                    continue
                support = []
                for t in cluster.member_times:
                    support.append(a.sample_at(t))
                    support.append(b_by_t[t])
                events.append(_event(
                    "mutual_gaze", {a.person_id, b.person_id},
                    cluster.start_t, cluster.end_t, support,
                ))
    return events


def _mutual_hit(sa: GazeSample, sb: GazeSample, margin: float) -> bool:
    if sa.provenance != PROV_MEASURED or sb.provenance != PROV_MEASURED:
        return False
    if sa.gaze_point is None or sb.gaze_point is None:
        return False
    if sa.face_box is None or sb.face_box is None:
        return False
    return sb.face_box.expand(margin).contains(sa.gaze_point) and \
        sa.face_box.expand(margin).contains(sb.gaze_point)


def detect_all(
    tracks: list[GazeTrack],
    features: list[FrameFeatures],
    config: EngineConfig = DEFAULT_CONFIG,
) -> list[SocialEvent]:
    """Run every detector and return ID-assigned events in canonical order."""
    events: list[SocialEvent] = []
    for track in tracks:
        events.extend(detect_sudden_shifts(track, features, config))
    events.extend(detect_joint_attention(tracks, features, config))
    events.extend(detect_gaze_following(tracks, config))
    events.extend(detect_attention_capture(tracks, features, config))
    events.extend(detect_mutual_gaze(tracks, config))
    events.sort(key=event_sort_key)
    return [replace(e, event_id=i) for i, e in enumerate(events)]


def event_sort_key(event: SocialEvent):
    return (
        event.start_time,
        event.end_time,
        event.source,
        event.event_type,
        sorted(event.participants),
        sorted(event.roles.items()),
    )


def serialize_event(event: SocialEvent, video_id: str | None = None) -> str:
    return dumps_canonical(event_record(event, video_id))


def event_record(event: SocialEvent, video_id: str | None = None) -> dict:
    record: dict = {}
    if video_id is not None:
        record["video_id"] = video_id
    record.update({
        "event_id": event.event_id,
        "source": event.source,
        "event_type": event.event_type,
        "participants": sorted(event.participants),
        "roles": dict(sorted(event.roles.items())),
        "start_time": event.start_time,
        "end_time": event.end_time,
        "confidence": event.confidence,
        "attributes": dict(sorted(event.attributes.items())),
    })
    return record


def parse_event(record: dict, line: int | None = None) -> SocialEvent:
    try:
        return SocialEvent(
            event_id=int(record["event_id"]),
            source=str(record["source"]),
            event_type=str(record["event_type"]),
            participants=frozenset(int(p) for p in record["participants"]),
            roles={str(k): int(v) for k, v in record.get("roles", {}).items()},
            start_time=float(record["start_time"]),
            end_time=float(record["end_time"]),
            confidence=float(record["confidence"]),
            attributes=dict(record.get("attributes", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad event record: {exc}", line) from exc


def _event(
    event_type: str,
    participants: Iterable[int],
    start: float,
    end: float,
    support: list[GazeSample],
    roles: dict[str, int] | None = None,
    attributes: dict | None = None,
) -> SocialEvent:
    event = SocialEvent(
        event_id=-1,
        source=SOURCE_GAZE,
        event_type=event_type,
        participants=frozenset(participants),
        roles=roles or {},
        start_time=start,
        end_time=end,
        attributes=attributes or {},
    )
    return replace(event, confidence=score_event_confidence(event, [s for s in support if s]))


def _samples_in(track: GazeTrack, lo: float, hi: float) -> list[GazeSample]:
    return [s for s in track.samples if lo <= s.t <= hi]


def _jaccard(a: frozenset[int], b: frozenset[int]) -> float:
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


def _lag_grid(config: EngineConfig) -> list[float]:
    lags = []
    lag = config.follow_lag_min
    while lag <= config.follow_lag_max + 1e-9:
        lags.append(round(lag / config.sample_period) * config.sample_period)
        lag += config.sample_period
    return lags
