"""Oriented bounding boxes through area ratios.

A numpy-based toolkit for the area-ratio box representation: geometry kernel
(rotated IoU via convex clipping, minimum-area rectangles), the seven-parameter
encoding and its inverse, IoU-family regression losses, rotated NMS with
horizontal/oriented selection, VOC-style evaluation, and DOTA-format ingestion.
"""

from .arp import (
    ArpBox,
    KRatios,
    NearHorizontalError,
    ObliquityLabel,
    ParallelogramProfile,
    arp_from_hbox,
    arp_from_vector,
    decode_vertices,
    encode_arp,
    encode_arp_lenient,
    is_rectangular,
    k_ratios,
    obliquity_label,
    parallelogram_dims,
    parallelogram_profile,
    quad_to_rect,
    rect_to_quad,
    vector_from_arp,
)
from .config import PROFILES, Config, FitConfig, config_from_profile, load_config
from .dataio import (
    AnnotationRecord,
    ParseError,
    TileSpec,
    parse_detections,
    parse_dota,
    tile_annotations,
    write_detections,
    write_dota,
)
from .evaluation import (
    APMetric,
    ClassEval,
    EvalReport,
    GroundTruth,
    PRCurve,
    ap_voc07,
    ap_voc12,
    evaluate,
    f_measure,
    match_detections,
)
from .fitting import FitResult, FitTrace, fit_box, random_arp_box, run_fit_runs, shape_iou
from .geometry import (
    EPS_GEOM,
    DegenerateBoxError,
    GeometryError,
    HBox,
    InvalidPolygonError,
    OrientedRect,
    Point2,
    QuadBox,
    aabb_of,
    clip_convex,
    convex_hull,
    hbox_iou,
    min_area_rect,
    polygon_area,
    rotated_iou,
)
from .losses import (
    BoxLossKind,
    BoxPair,
    LossBreakdown,
    LossSample,
    LossWeights,
    bce_obliquity,
    box_loss_smooth,
    ciou_loss,
    five_param_smooth_l1,
    multitask_loss,
    numeric_gradient,
    r_eiou_loss,
    smooth_l1,
)
from .postprocess import Detection, FinalBox, detection_shape, r_nms, select_final

__version__ = "0.1.0"
