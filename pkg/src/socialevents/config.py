"""Engine configuration.

All tunables live in one frozen dataclass so a run can be reproduced from a
single dumped parameter set. Defaults are the published operating points of
the detection, graph-construction, and reward stages.
"""

from __future__ import annotations

import argparse
import dataclasses
from dataclasses import dataclass, field, fields


@dataclass(frozen=True)
class EngineConfig:
    # timeline
    sample_period: float = 0.5

    # gaze gap repair
    linear_max_gap: int = 3
    carry_max_gap: int = 10
    linear_conf_slope: float = 0.1
    carry_conf_base: float = 0.5
    carry_conf_decay: float = 0.2
    block_temporal_gap: float = 3.0
    block_face_displacement: float = 0.30

    # group gaze features
    convergence_alpha: float = 3.0
    convergence_measured_only: bool = False

    # gaze event detectors
    sudden_velocity: float = 0.7
    sudden_cluster_gap: float = 0.6
    sudden_min_duration: float = 0.5
    sudden_max_duration: float = 1.5
    ja_convergence: float = 0.6
    ja_min_duration: float = 0.5
    ja_set_overlap: float = 0.7
    ja_peripheral_mult: float = 2.0
    follow_distance: float = 0.03
    follow_lag_min: float = 1.0
    follow_lag_max: float = 2.0
    capture_velocity: float = 0.4
    capture_min_persons: int = 3
    capture_window: float = 1.0
    mutual_margin: float = 0.02
    mutual_min_duration: float = 1.0

    # unified graph
    gaze_conf_min: float = 0.9
    gesture_conf_min: float = 0.85
    pair_max_distance: float = 3.0
    max_graph_events: int = 25

    # qa generation density gates
    qa_medium_min_events: int = 4
    qa_hard_min_events: int = 10

    # reward and advantages
    weight_acc: float = 1.0
    weight_fmt: float = 0.1
    weight_str: float = 0.05
    weight_gnd: float = 0.2
    rollouts_per_query: int = 8
    advantage_clip: float = 5.0
    advantage_mode: str = "zscore"  # "zscore" or "mean_center"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


DEFAULT_CONFIG = EngineConfig()

# Fields that get their own CLI flag (all of them; flag name is the field
# name with underscores swapped for dashes).
_FLAGGABLE = [f for f in fields(EngineConfig)]


def add_config_arguments(parser: argparse.ArgumentParser) -> None:
    """Attach one override flag per config field to an argparse parser."""
    group = parser.add_argument_group("engine parameters")
    for f in _FLAGGABLE:
        flag = "--" + f.name.replace("_", "-")
        if f.type == "bool" or isinstance(f.default, bool):
            group.add_argument(flag, type=_parse_bool, default=None, metavar="BOOL")
        elif isinstance(f.default, int):
            group.add_argument(flag, type=int, default=None, metavar="N")
        elif isinstance(f.default, float):
            group.add_argument(flag, type=float, default=None, metavar="X")
        else:
            group.add_argument(flag, type=str, default=None)


def config_from_args(args: argparse.Namespace) -> EngineConfig:
    """Build a config from parsed args, keeping defaults for absent flags."""
    overrides = {}
    for f in _FLAGGABLE:
        value = getattr(args, f.name, None)
        if value is not None:
            overrides[f.name] = value
    return dataclasses.replace(DEFAULT_CONFIG, **overrides)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")
