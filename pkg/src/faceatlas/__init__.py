"""Facial acupoint localization engine.

Compiles declarative acupoint atlases and evaluates them against streamed
468-vertex face-landmark frames using the proportional (B-cun) method, with
a backpressured real-time pipeline, benchmarks, a pose-sweep accuracy
harness, and a frame-in/atlas-out service.
"""

from .atlas import (
    AcupointDef,
    AtlasProgram,
    Census,
    Complexity,
    census,
    compile_atlas,
    parse_atlas,
)
from .channels import (
    ChannelRegistry,
    ChannelSpec,
    bind_channels,
    channel_polylines,
    parse_channels,
    select_channels,
)
from .errors import AtlasError, DegenerateFace
from .evaluator import EvaluatedAtlas, EvaluatedPoint, evaluate_atlas
from .expr import Axis, PointId, Side, parse_expression, serialize
from .geometry import (
    AlignedFrame,
    Confidence,
    CunUnit,
    LandmarkFrame,
    ReferencePoints,
    SemanticsConfig,
    align_frame,
    extract_hairline,
    extract_reference_points,
    mirror_point,
    unit_cun,
)
from .pipeline import FlowLimiter, StageTiming, StreamSummary, bench, run_stream, simulate_stream
from .experiment import PoseSweepReport, accuracy_experiment, pose_transform

__version__ = "0.1.0"

__all__ = [
    "AcupointDef",
    "AlignedFrame",
    "AtlasError",
    "AtlasProgram",
    "Axis",
    "Census",
    "ChannelRegistry",
    "ChannelSpec",
    "Complexity",
    "Confidence",
    "CunUnit",
    "DegenerateFace",
    "EvaluatedAtlas",
    "EvaluatedPoint",
    "FlowLimiter",
    "LandmarkFrame",
    "PointId",
    "PoseSweepReport",
    "ReferencePoints",
    "SemanticsConfig",
    "Side",
    "StageTiming",
    "StreamSummary",
    "accuracy_experiment",
    "align_frame",
    "bench",
    "bind_channels",
    "census",
    "channel_polylines",
    "compile_atlas",
    "evaluate_atlas",
    "extract_hairline",
    "extract_reference_points",
    "mirror_point",
    "parse_atlas",
    "parse_channels",
    "parse_expression",
    "pose_transform",
    "run_stream",
    "select_channels",
    "serialize",
    "simulate_stream",
    "unit_cun",
]
