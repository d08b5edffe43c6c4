"""Python interface to the tubekit action-tube toolkit.

Geometry, motion labelling, evaluation, linking, feature pooling and the
synthetic fixture generator are implemented natively; this package adds thin
conveniences such as decoding evaluation reports into dictionaries.
"""

import json as _json

from ._tubekit import (
    Error,
    InvalidInput,
    ParseError,
    ValidationError,
    average_precision,
    build_tubes,
    classify_motion,
    conv1d,
    filter_detections,
    iou2d,
    load_tensors,
    motion_bins,
    motion_iou,
    optimal_labeling,
    random_tfa_weights,
    roi_align,
    save_tensors,
    st_iou,
    synth,
    tfa_forward,
    trim_path,
)

__version__ = "0.1.0"


def eval_frames(gt, det, iou=0.5, dataset=None, config=None, jobs=1):
    """Frame-level evaluation; returns the report as a dict."""
    from ._tubekit import eval_frames_json

    return _json.loads(eval_frames_json(str(gt), str(det), iou, dataset, None if config is None else str(config), jobs))


def eval_videos(gt, tubes, st_iou=0.5, dataset=None, config=None, jobs=1):
    """Video-level evaluation; returns the report as a dict."""
    from ._tubekit import eval_videos_json

    return _json.loads(
        eval_videos_json(str(gt), str(tubes), st_iou, dataset, None if config is None else str(config), jobs)
    )


__all__ = [
    "Error",
    "InvalidInput",
    "ParseError",
    "ValidationError",
    "average_precision",
    "build_tubes",
    "classify_motion",
    "conv1d",
    "eval_frames",
    "eval_videos",
    "filter_detections",
    "iou2d",
    "load_tensors",
    "motion_bins",
    "motion_iou",
    "optimal_labeling",
    "random_tfa_weights",
    "roi_align",
    "save_tensors",
    "st_iou",
    "synth",
    "tfa_forward",
    "trim_path",
]
