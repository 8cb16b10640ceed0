"""Command-line front end chaining the pipeline stages over JSONL files.

Subcommands:

    detect    observations.jsonl        -> events.jsonl, videos.jsonl
    graph     events.jsonl + gestures   -> graph.jsonl
    qagen     graph.jsonl               -> qa.jsonl
    reward    qa.jsonl + traces.jsonl   -> rewards.jsonl
    analyze   rewards.jsonl             -> report.json
    corrupt   qa.jsonl                  -> qa.corrupted.jsonl

Exit codes: 0 success, 2 missing input, 3 schema/validation error (with the
offending line in the message). Identical inputs, seed, and parameters give
byte-identical artifacts at any thread count.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import statistics
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import analytics, events, gaze, graph as graph_mod, ingest, qa, reward as reward_mod
from .config import EngineConfig, add_config_arguments, config_from_args
from .errors import ContractError, EngineError, ParseError, ValidationError

THREADS_ENV = "GRASP_ENGINE_THREADS"

EXIT_OK = 0
EXIT_MISSING_INPUT = 2
EXIT_SCHEMA = 3


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    config = _effective_config(args)
    if getattr(args, "print_config", False):
        print(json.dumps(config.to_dict(), indent=2, sort_keys=True))
        return EXIT_OK
    try:
        return args.handler(args, config)
    except FileNotFoundError as exc:
        print(f"error: missing input: {exc.filename or exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except (ParseError, ValidationError, ContractError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="socialevents",
        description="Deterministic social gaze/gesture event engine.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, needs_seed: bool = False) -> None:
        p.add_argument("--input", required=True, help="primary input JSONL file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help=f"worker threads (default: ${THREADS_ENV} or 1)")
        if needs_seed:
            p.add_argument("--seed", type=int, default=0)
        p.add_argument("--print-config", action="store_true",
                       help="print the effective parameter set and exit")
        p.add_argument("--weights", type=str, default=None, metavar="ACC,FMT,STR,GND",
                       help="reward weight override")
        p.add_argument("--k", type=int, default=None, help="rollouts per query")
        add_config_arguments(p)

    p = sub.add_parser("detect", help="observations to gaze events")
    common(p)
    p.add_argument("--dump-features", action="store_true",
                   help="also write per-frame features.jsonl")
    p.set_defaults(handler=_cmd_detect)

    p = sub.add_parser("graph", help="events + gestures to unified graphs")
    common(p)
    p.add_argument("--gestures", required=True, help="gestures.jsonl")
    p.add_argument("--videos", default=None, help="videos.jsonl manifest from detect")
    p.set_defaults(handler=_cmd_graph)

    p = sub.add_parser("qagen", help="graphs to QA items")
    common(p, needs_seed=True)
    p.add_argument("--budget", type=int, default=25, help="max items per graph")
    p.set_defaults(handler=_cmd_qagen)

    p = sub.add_parser("reward", help="QA + reasoning traces to rewards")
    common(p)
    p.add_argument("--traces", required=True, help="traces.jsonl")
    p.add_argument("--graphs", required=True, help="graph.jsonl for participant lookup")
    p.set_defaults(handler=_cmd_reward)

    p = sub.add_parser("analyze", help="rewards to a summary report")
    common(p)
    p.add_argument("--tsv", action="store_true", help="also write per-rollout report.tsv")
    p.set_defaults(handler=_cmd_analyze)

    p = sub.add_parser("corrupt", help="QA to participant-ID corrupted QA")
    common(p, needs_seed=True)
    p.set_defaults(handler=_cmd_corrupt)
    return parser


def _effective_config(args: argparse.Namespace) -> EngineConfig:
    config = config_from_args(args)
    overrides = {}
    if getattr(args, "weights", None):
        parts = args.weights.split(",")
        if len(parts) != 4:
            raise SystemExit("--weights needs four comma-separated values: acc,fmt,str,gnd")
        overrides.update(zip(
            ("weight_acc", "weight_fmt", "weight_str", "weight_gnd"),
            (float(p) for p in parts),
        ))
    if getattr(args, "k", None) is not None:
        overrides["rollouts_per_query"] = args.k
    return dataclasses.replace(config, **overrides) if overrides else config


def _thread_count(args: argparse.Namespace) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parallel_map(fn, items, threads: int):
    """Order-preserving map so parallelism never changes output bytes."""
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _read_jsonl(path: str | Path):
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if raw.strip():
                try:
                    yield line_no, json.loads(raw)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"invalid JSON: {exc.msg}", line_no) from exc


# ---------------------------------------------------------------------------
# detect


def _cmd_detect(args: argparse.Namespace, config: EngineConfig) -> int:
    out = _out_dir(args)
    by_video = ingest.group_by_video(ingest.load_observations(args.input))

    def process(entry):
        video_id, frames = entry
        tracks = [gaze.interpolate_track(t, config) for t in gaze.build_tracks(frames, config)]
        features = gaze.compute_features(tracks, config)
        detected = events.detect_all(tracks, features, config)
        duration = frames[-1].t + config.sample_period
        person_ids = sorted({p.person_id for f in frames for p in f.persons})
        return video_id, duration, person_ids, detected, features

    results = _parallel_map(process, list(by_video.items()), _thread_count(args))

    with open(out / "events.jsonl", "w", encoding="utf-8") as fh:
        for video_id, _, _, detected, _ in results:
            for event in detected:
                fh.write(events.serialize_event(event, video_id) + "\n")
    with open(out / "videos.jsonl", "w", encoding="utf-8") as fh:
        for video_id, duration, person_ids, _, _ in results:
            fh.write(ingest.dumps_canonical(
                {"video_id": video_id, "duration": duration, "person_ids": person_ids}
            ) + "\n")
    if args.dump_features:
        with open(out / "features.jsonl", "w", encoding="utf-8") as fh:
            for video_id, _, _, _, features in results:
                for f in features:
                    fh.write(ingest.dumps_canonical(_feature_record(video_id, f)) + "\n")
    return EXIT_OK


def _feature_record(video_id: str, f: gaze.FrameFeatures) -> dict:
    record = {
        "video_id": video_id,
        "t": f.t,
        "velocities": {str(pid): f.velocities[pid] for pid in sorted(f.velocities)},
    }
    if f.convergence is None:
        record["convergence"] = None
    else:
        record["convergence"] = {
            "s": f.convergence,
            "centroid": list(f.centroid),
            "contributors": list(f.contributors),
        }
    return record


# ---------------------------------------------------------------------------
# graph


def _cmd_graph(args: argparse.Namespace, config: EngineConfig) -> int:
    out = _out_dir(args)

    gaze_by_video: dict[str, list[events.SocialEvent]] = {}
    for line_no, record in _read_jsonl(args.input):
        video_id = record.get("video_id")
        if not isinstance(video_id, str):
            raise ValidationError("event record missing video_id", line_no)
        gaze_by_video.setdefault(video_id, []).append(events.parse_event(record, line_no))

    gestures, rejections = ingest.load_gestures(args.gestures)
    for rej in rejections:
        print(f"warning: gesture rejected at line {rej.line}: {rej.reason}", file=sys.stderr)
    gestures_by_video: dict[str, list[ingest.GestureAnnotation]] = {}
    for gesture in gestures:
        gestures_by_video.setdefault(gesture.video_id, []).append(gesture)

    durations: dict[str, float] = {}
    if args.videos:
        for line_no, record in _read_jsonl(args.videos):
            try:
                durations[str(record["video_id"])] = float(record["duration"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"bad video manifest record: {exc}", line_no) from exc

    video_ids = list(dict.fromkeys(list(gaze_by_video) + list(gestures_by_video)))

    def process(video_id):
        gaze_events = gaze_by_video.get(video_id, [])
        video_gestures = gestures_by_video.get(video_id, [])
        duration = durations.get(video_id)
        if duration is None:
            ends = [e.end_time for e in gaze_events] + [g.end_time for g in video_gestures]
            duration = math.ceil(max(ends, default=0.0) / config.sample_period) * config.sample_period
        return graph_mod.build_graph(video_id, duration, gaze_events, video_gestures, config)

    graphs = _parallel_map(process, video_ids, _thread_count(args))
    with open(out / "graph.jsonl", "w", encoding="utf-8") as fh:
        for g in graphs:
            fh.write(graph_mod.serialize_graph(g) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# qagen


def _cmd_qagen(args: argparse.Namespace, config: EngineConfig) -> int:
    out = _out_dir(args)
    graphs = graph_mod.load_graphs(args.input)

    def process(g):
        return qa.generate_qa(g, budget=args.budget, seed=args.seed, config=config)

    batches = _parallel_map(process, graphs, _thread_count(args))
    with open(out / "qa.jsonl", "w", encoding="utf-8") as fh:
        for batch in batches:
            for item in batch:
                fh.write(qa.serialize_qa_item(item) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# reward


def _cmd_reward(args: argparse.Namespace, config: EngineConfig) -> int:
    out = _out_dir(args)
    items = {item.qa_id: item for item in qa.load_qa_items(args.input)}
    graphs = {g.video_id: g for g in graph_mod.load_graphs(args.graphs)}
    weights = reward_mod.RewardWeights(
        acc=config.weight_acc, fmt=config.weight_fmt,
        structure=config.weight_str, grounding=config.weight_gnd,
    )

    groups = []
    for line_no, record in _read_jsonl(args.traces):
        try:
            group = reward_mod.RolloutGroup(
                query_id=str(record["query_id"]),
                qa_id=str(record["qa_id"]),
                rollouts=tuple(str(r) for r in record["rollouts"]),
                model=str(record.get("model", "default")),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad trace record: {exc}", line_no) from exc
        if len(group.rollouts) != config.rollouts_per_query:
            raise ValidationError(
                f"expected {config.rollouts_per_query} rollouts, got {len(group.rollouts)}",
                line_no,
            )
        if group.qa_id not in items:
            raise ValidationError(f"unknown qa_id {group.qa_id!r}", line_no)
        groups.append((line_no, group))

    def process(entry):
        line_no, group = entry
        item = items[group.qa_id]
        g = graphs.get(item.video_id)
        if g is None:
            raise ValidationError(f"no graph for video {item.video_id!r}", line_no)
        gt: set[int] = set()
        for eid in item.source_event_ids:
            event = g.event_by_id(eid)
            if event is None:
                raise ValidationError(
                    f"qa {item.qa_id} cites unknown event {eid}", line_no)
            gt.update(event.participants)
        aliases = (item.answer_text,) if item.format == "mcq" else ()
        scored = reward_mod.score_group(
            group.rollouts, item.answer, gt,
            weights=weights, answer_aliases=aliases,
            expected_k=config.rollouts_per_query,
            clip=config.advantage_clip, mode=config.advantage_mode,
        )
        per_rollout = []
        for s in scored:
            pred = s.breakdown.pred_participants
            tokens, flagged = analytics.reasoning_length(s.trace)
            per_rollout.append({
                "r_acc": s.breakdown.r_acc,
                "r_fmt": s.breakdown.r_fmt,
                "r_str": s.breakdown.r_str,
                "r_gnd": s.breakdown.r_gnd,
                "total": s.breakdown.total,
                "advantage": s.advantage,
                "pred_participants": sorted(pred),
                "n_pred": len(pred),
                "n_correct": len(pred & gt),
                "grounding_precision": analytics.grounding_precision(pred, gt),
                "novel_participants": analytics.novel_participants(pred, item.question),
                "think_tokens": tokens,
                "well_formed": not flagged,
            })
        return {
            "query_id": group.query_id,
            "qa_id": group.qa_id,
            "model": group.model,
            "per_rollout": per_rollout,
        }

    results = _parallel_map(process, groups, _thread_count(args))
    with open(out / "rewards.jsonl", "w", encoding="utf-8") as fh:
        for record in results:
            fh.write(ingest.dumps_canonical(record) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# analyze


def _cmd_analyze(args: argparse.Namespace, config: EngineConfig) -> int:
    out = _out_dir(args)
    per_model: dict[str, dict[str, list]] = {}
    rows = []
    for line_no, record in _read_jsonl(args.input):
        try:
            model = str(record.get("model", "default"))
            rollouts = record["per_rollout"]
            bucket = per_model.setdefault(model, {
                "acc": [], "precision": [], "n_pred": [], "n_correct": [],
                "novel": [], "length": [], "malformed": [], "total": [], "queries": [],
            })
            bucket["queries"].append(record.get("query_id"))
            for i, r in enumerate(rollouts):
                bucket["acc"].append(float(r["r_acc"]))
                if r.get("grounding_precision") is not None:
                    bucket["precision"].append(float(r["grounding_precision"]))
                bucket["n_pred"].append(int(r.get("n_pred", 0)))
                bucket["n_correct"].append(int(r.get("n_correct", 0)))
                bucket["novel"].append(float(r.get("novel_participants", 0)))
                bucket["length"].append(float(r.get("think_tokens", 0)))
                bucket["malformed"].append(0 if r.get("well_formed", True) else 1)
                bucket["total"].append(float(r["total"]))
                rows.append((record.get("query_id"), record.get("qa_id"), model, i, r))
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ValidationError(f"bad rewards record: {exc}", line_no) from exc

    models = {}
    for model, b in sorted(per_model.items()):
        n_pred = sum(b["n_pred"])
        models[model] = {
            "queries": len(b["queries"]),
            "rollouts": len(b["acc"]),
            "accuracy": _mean(b["acc"]),
            "grounding_precision_macro": _mean(b["precision"]) if b["precision"] else None,
            "grounding_precision_micro": (sum(b["n_correct"]) / n_pred) if n_pred else None,
            "mean_novel_participants": _mean(b["novel"]),
            "mean_reasoning_length": _mean(b["length"]),
            "median_reasoning_length": float(statistics.median(b["length"])) if b["length"] else None,
            "malformed_traces": sum(b["malformed"]),
            "mean_total_reward": _mean(b["total"]),
        }

    report = {"models": models, "cross_model": _cross_model(models)}
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")

    if args.tsv:
        columns = ("query_id", "qa_id", "model", "rollout", "r_acc", "r_fmt", "r_str",
                   "r_gnd", "total", "advantage", "grounding_precision",
                   "novel_participants", "think_tokens", "well_formed")
        with open(out / "report.tsv", "w", encoding="utf-8") as fh:
            fh.write("\t".join(columns) + "\n")
            for query_id, qa_id, model, i, r in rows:
                fh.write("\t".join(str(v) for v in (
                    query_id, qa_id, model, i, r.get("r_acc"), r.get("r_fmt"),
                    r.get("r_str"), r.get("r_gnd"), r.get("total"), r.get("advantage"),
                    r.get("grounding_precision"), r.get("novel_participants"),
                    r.get("think_tokens"), r.get("well_formed"),
                )) + "\n")
    return EXIT_OK


def _mean(values) -> float | None:
    values = list(values)
    if not values:
        return None
    return math.fsum(values) / len(values)


def _cross_model(models: dict) -> dict:
    cross: dict = {}
    names = sorted(models)
    accs = [models[m]["accuracy"] for m in names]
    for key, label in (
        ("grounding_precision_macro", "accuracy_vs_grounding_precision"),
        ("mean_reasoning_length", "accuracy_vs_reasoning_length"),
    ):
        series = [models[m][key] for m in names]
        if len(names) >= 2 and None not in series and None not in accs:
            try:
                cross[label] = analytics.pearson(accs, series)
            except ContractError:
                cross[label] = None
        else:
            cross[label] = None
    return cross


# ---------------------------------------------------------------------------
# corrupt


def _cmd_corrupt(args: argparse.Namespace, config: EngineConfig) -> int:
    out = _out_dir(args)
    items = qa.load_qa_items(args.input)

    def process(item):
        ids = sorted(analytics.item_person_ids(item))
        remap = analytics.seeded_remap(ids, f"{args.seed}:{item.qa_id}")
        corrupted = analytics.corrupt_ids(item, remap)
        record = qa.qa_item_record(corrupted)
        record["id_remap"] = {str(k): v for k, v in sorted(remap.mapping.items())}
        return record

    records = _parallel_map(process, items, _thread_count(args))
    with open(out / "qa.corrupted.jsonl", "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(ingest.dumps_canonical(record) + "\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
