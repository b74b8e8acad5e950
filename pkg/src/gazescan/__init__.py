"""Deterministic simulator of a gaze-guided robotic ultrasound scan loop."""

from .attention import (
    AttentionHeatmap,
    GazeSample,
    HeatmapParams,
    box_diffuse,
    gaze_to_heatmap,
    generate_pseudo_heatmap,
    label_centroid,
    pseudo_heatmap_batch,
    zero_heatmap,
)
from .control import (
    ControlParams,
    ProbeState,
    centerline_offset,
    confidence_centroid,
    correction_angle,
    step,
)
from .errors import (
    DomainError,
    GazeScanError,
    RecordCorruptError,
    RecordVersionError,
    ReplayMismatchError,
    ScenarioValidationError,
)
from .geometry import ImageGeometry
from .imaging import (
    BModeFrame,
    ConfidenceMap,
    ContactModel,
    NoiseParams,
    confidence_map,
    render_bmode,
)
from .intention import HistoryBuffer, IntentParams, IntentState, TickEntry
from .phantom import (
    CrossSection,
    Lumen,
    SurfaceProfile,
    VesselBranch,
    VesselTree,
    contact_gaps,
    cross_section,
    rasterize_labels,
    surface_height,
    validate_phantom,
)
from .runtime import RunRecord, SimulationLoop, metrics, reconstruct, replay, run
from .scenario import Scenario, load_scenario, preset, save_scenario, scenario_from_dict
from .segmentation import (
    Candidate,
    CandidateTracker,
    SegmentationParams,
    SegmentationResult,
    detect_candidates,
    dice,
    segment,
)

__version__ = "0.1.0"

__all__ = [
    "AttentionHeatmap",
    "BModeFrame",
    "Candidate",
    "CandidateTracker",
    "ConfidenceMap",
    "ContactModel",
    "ControlParams",
    "CrossSection",
    "DomainError",
    "GazeSample",
    "GazeScanError",
    "HeatmapParams",
    "HistoryBuffer",
    "ImageGeometry",
    "IntentParams",
    "IntentState",
    "Lumen",
    "NoiseParams",
    "ProbeState",
    "RecordCorruptError",
    "RecordVersionError",
    "ReplayMismatchError",
    "RunRecord",
    "Scenario",
    "ScenarioValidationError",
    "SegmentationParams",
    "SegmentationResult",
    "SimulationLoop",
    "SurfaceProfile",
    "TickEntry",
    "VesselBranch",
    "VesselTree",
    "box_diffuse",
    "centerline_offset",
    "confidence_centroid",
    "confidence_map",
    "contact_gaps",
    "correction_angle",
    "cross_section",
    "detect_candidates",
    "dice",
    "gaze_to_heatmap",
    "generate_pseudo_heatmap",
    "label_centroid",
    "load_scenario",
    "metrics",
    "preset",
    "pseudo_heatmap_batch",
    "rasterize_labels",
    "reconstruct",
    "render_bmode",
    "replay",
    "run",
    "save_scenario",
    "scenario_from_dict",
    "segment",
    "step",
    "surface_height",
    "validate_phantom",
    "zero_heatmap",
]
