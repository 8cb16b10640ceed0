"""Line-delimited readers and writers for frame observations and gestures.

Canonical record shapes (one JSON object per line):

observations.jsonl
    {"video_id": str, "t": float, "persons": [{"id": int, "box": [x1,y1,x2,y2]}],
     "faces": [{"box": [x1,y1,x2,y2], "det_conf": float,
                "gaze": [gx,gy] | null, "in_frame": bool}]}

gestures.jsonl
    {"video_id": str, "gesture_type": str, "initiator_id": int,
     "target_type": "person"|"object", "target_person_id": int | null,
     "start_time": float, "end_time": float, "confidence": float}

Unknown fields are ignored for forward compatibility. Serializing a parsed
record reproduces the canonical bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .config import DEFAULT_CONFIG
from .errors import OrderingError, ParseError, ValidationError

SAMPLE_PERIOD = DEFAULT_CONFIG.sample_period
GESTURE_TYPES = ("pointing", "showing", "giving", "reaching")

_GRID_TOL = 1e-9


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle in normalized frame coordinates."""

    x1: float
    y1: float
    x2: float
    y2: float

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)

    def expand(self, margin: float) -> "Box":
        return Box(self.x1 - margin, self.y1 - margin, self.x2 + margin, self.y2 + margin)

    def contains(self, point: tuple[float, float]) -> bool:
        x, y = point
        return self.x1 <= x <= self.x2 and self.y1 <= y <= self.y2

    def as_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]


@dataclass(frozen=True)
class PersonBox:
    person_id: int
    box: Box


@dataclass(frozen=True)
class FaceMeasurement:
    box: Box
    det_confidence: float
    gaze_point: tuple[float, float] | None
    gaze_in_frame: bool


@dataclass(frozen=True)
class FrameObservation:
    video_id: str
    t: float
    persons: tuple[PersonBox, ...]
    faces: tuple[FaceMeasurement, ...]


@dataclass(frozen=True)
class GestureAnnotation:
    video_id: str
    gesture_type: str
    initiator_id: int
    target_type: str
    target_person_id: int | None
    start_time: float
    end_time: float
    confidence: float


@dataclass(frozen=True)
class GestureRejection:
    line: int
    reason: str


def snap_to_grid(t: float) -> float:
    """Nearest grid multiple of the sample period; exact halves round up."""
    return math.floor(t / SAMPLE_PERIOD + 0.5) * SAMPLE_PERIOD


def is_on_grid(t: float) -> bool:
    steps = t / SAMPLE_PERIOD
    return abs(steps - round(steps)) <= _GRID_TOL


def dumps_canonical(obj) -> str:
    return json.dumps(obj, separators=(",", ":"))


# ---------------------------------------------------------------------------
# frame observations


def parse_frame(record: dict, line: int | None = None) -> FrameObservation:
    """Validate one decoded observation record."""
    video_id = _require(record, "video_id", str, line)
    if not video_id:
        raise ValidationError("video_id must be non-empty", line)

    t = _number(record, "t", line)
    if t < 0:
        raise ValidationError(f"t must be non-negative, got {t}", line)
    if not is_on_grid(t):
        raise ValidationError(f"t={t} is not a multiple of {SAMPLE_PERIOD}", line)
    t = round(t / SAMPLE_PERIOD) * SAMPLE_PERIOD

    persons = []
    seen_ids: set[int] = set()
    for i, entry in enumerate(_require(record, "persons", list, line)):
        if not isinstance(entry, dict):
            raise ValidationError(f"persons[{i}] must be an object", line)
        pid = entry.get("id")
        if isinstance(pid, bool) or not isinstance(pid, int) or pid < 0:
            raise ValidationError(f"persons[{i}].id must be a non-negative integer", line)
        if pid in seen_ids:
            raise ValidationError(f"persons[{i}].id={pid} repeated in frame", line)
        seen_ids.add(pid)
        persons.append(PersonBox(pid, _box(entry.get("box"), f"persons[{i}].box", line)))

    faces = []
    for i, entry in enumerate(_require(record, "faces", list, line)):
        if not isinstance(entry, dict):
            raise ValidationError(f"faces[{i}] must be an object", line)
        box = _box(entry.get("box"), f"faces[{i}].box", line)
        conf = entry.get("det_conf")
        if isinstance(conf, bool) or not isinstance(conf, (int, float)) or not 0.0 <= conf <= 1.0:
            raise ValidationError(f"faces[{i}].det_conf out of range [0,1]: {conf!r}", line)
        gaze = entry.get("gaze")
        point: tuple[float, float] | None = None
        if gaze is not None:
            if not (isinstance(gaze, list) and len(gaze) == 2):
                raise ValidationError(f"faces[{i}].gaze must be [x, y] or null", line)
            for axis, value in enumerate(gaze):
                if isinstance(value, bool) or not isinstance(value, (int, float)) \
                        or not 0.0 <= value <= 1.0:
                    raise ValidationError(
                        f"faces[{i}].gaze[{axis}] out of range [0,1]: {value!r}", line)
            point = (float(gaze[0]), float(gaze[1]))
        in_frame = entry.get("in_frame")
        if not isinstance(in_frame, bool):
            raise ValidationError(f"faces[{i}].in_frame must be a boolean", line)
        faces.append(FaceMeasurement(box, float(conf), point, in_frame))

    return FrameObservation(video_id, t, tuple(persons), tuple(faces))


def serialize_frame(frame: FrameObservation) -> str:
    record = {
        "video_id": frame.video_id,
        "t": frame.t,
        "persons": [{"id": p.person_id, "box": p.box.as_list()} for p in frame.persons],
        "faces": [
            {
                "box": f.box.as_list(),
                "det_conf": f.det_confidence,
                "gaze": list(f.gaze_point) if f.gaze_point is not None else None,
                "in_frame": f.gaze_in_frame,
            }
            for f in frame.faces
        ],
    }
    return dumps_canonical(record)


def load_observations(path: str | Path) -> Iterator[FrameObservation]:
    """Stream frames from a JSONL file, enforcing per-video time ordering."""
    last_t: dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line_no) from exc
            if not isinstance(record, dict):
                raise ParseError("record must be a JSON object", line_no)
            frame = parse_frame(record, line_no)
            prev = last_t.get(frame.video_id)
            if prev is not None and frame.t <= prev:
                raise OrderingError(
                    f"t={frame.t} not after t={prev} for video {frame.video_id!r}",
                    line_no,
                )
            last_t[frame.video_id] = frame.t
            yield frame


def group_by_video(frames: Iterable[FrameObservation]) -> dict[str, list[FrameObservation]]:
    """Bucket a frame stream per video, preserving first-appearance order."""
    grouped: dict[str, list[FrameObservation]] = {}
    for frame in frames:
        grouped.setdefault(frame.video_id, []).append(frame)
    return grouped


# ---------------------------------------------------------------------------
# gesture annotations


def parse_gesture(record: dict, line: int | None = None) -> GestureAnnotation:
    video_id = _require(record, "video_id", str, line)
    if not video_id:
        raise ValidationError("video_id must be non-empty", line)

    gesture_type = record.get("gesture_type")
    if gesture_type not in GESTURE_TYPES:
        raise ValidationError(
            f"unknown gesture_type {gesture_type!r}; expected one of {GESTURE_TYPES}", line
        )
    initiator = _int_field(record, "initiator_id", "initiator_id", line)
    if initiator < 0:
        raise ValidationError("initiator_id must be non-negative", line)

    target_type = record.get("target_type")
    if target_type not in ("person", "object"):
        raise ValidationError(f"target_type must be 'person' or 'object', got {target_type!r}", line)
    target_pid = record.get("target_person_id")
    if target_type == "person":
        if not isinstance(target_pid, int) or isinstance(target_pid, bool) or target_pid < 0:
            raise ValidationError("target_person_id required for person targets", line)
    elif target_pid is not None:
        raise ValidationError("target_person_id must be null for object targets", line)

    start = _number(record, "start_time", line)
    end = _number(record, "end_time", line)
    if start < 0:
        raise ValidationError("start_time must be non-negative", line)
    if end <= start:
        raise ValidationError(f"end_time {end} must exceed start_time {start}", line)
    conf = _unit(record.get("confidence"), "confidence", line)

    return GestureAnnotation(
        video_id, gesture_type, initiator, target_type,
        target_pid if target_type == "person" else None, start, end, conf,
    )


def serialize_gesture(gesture: GestureAnnotation) -> str:
    record = {
        "video_id": gesture.video_id,
        "gesture_type": gesture.gesture_type,
        "initiator_id": gesture.initiator_id,
        "target_type": gesture.target_type,
        "target_person_id": gesture.target_person_id,
        "start_time": gesture.start_time,
        "end_time": gesture.end_time,
        "confidence": gesture.confidence,
    }
    return dumps_canonical(record)


def load_gestures(path: str | Path) -> tuple[list[GestureAnnotation], list[GestureRejection]]:
    """Read gesture records; invalid records become rejections, not failures."""
    accepted: list[GestureAnnotation] = []
    rejected: list[GestureRejection] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line_no) from exc
            if not isinstance(record, dict):
                raise ParseError("record must be a JSON object", line_no)
            try:
                accepted.append(parse_gesture(record, line_no))
            except ValidationError as exc:
                rejected.append(GestureRejection(line_no, str(exc)))
    return accepted, rejected


# ---------------------------------------------------------------------------
# field helpers


def _require(record: dict, key: str, kind, line):
    value = record.get(key)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ValidationError(f"{key} must be of type {kind.__name__}", line)
    return value


def _number(record: dict, key: str, line) -> float:
    value = record.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{key} must be a number", line)
    if not math.isfinite(value):
        raise ValidationError(f"{key} must be finite", line)
    return float(value)


def _int_field(record: dict, key: str, label: str, line) -> int:
    value = record.get(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{label} must be an integer", line)
    return value


def _unit(value, label: str, line) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{label} must be a number", line)
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValidationError(f"{label} out of range [0,1]: {value}", line)
    return value


def _box(value, label: str, line) -> Box:
    if not (isinstance(value, list) and len(value) == 4):
        raise ValidationError(f"{label} must be [x1, y1, x2, y2]", line)
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not 0.0 <= v <= 1.0:
            raise ValidationError(f"{label}[{i}] out of range [0,1]: {v!r}", line)
    x1, y1, x2, y2 = (float(v) for v in value)
    if x1 >= x2 or y1 >= y2:
        raise ValidationError(f"{label} is degenerate: {value}", line)
    return Box(x1, y1, x2, y2)
