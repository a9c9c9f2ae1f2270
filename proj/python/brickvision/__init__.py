"""Rotated-box brick detection targets, metrics and point-cloud pose estimation."""

from ._core import (
    BrickVisionError,
    RotatedBox,
    clutter_scene,
    decode,
    detection_recall,
    encode,
    estimate_pose,
    euler_xyz,
    frontal_scene,
    ground_truth_boxes,
    identify_surface,
    map_score,
    mask_box,
    min_area_rect,
    pixel_precision,
    placement_check,
    pose_error,
    rotated_iou,
    rotated_nms,
    simulate_wall,
    single_brick_scene,
    upright_bbox,
)

__all__ = [
    "BrickVisionError",
    "RotatedBox",
    "clutter_scene",
    "decode",
    "detection_recall",
    "encode",
    "estimate_pose",
    "euler_xyz",
    "frontal_scene",
    "ground_truth_boxes",
    "identify_surface",
    "map_score",
    "mask_box",
    "min_area_rect",
    "pixel_precision",
    "placement_check",
    "pose_error",
    "rotated_iou",
    "rotated_nms",
    "simulate_wall",
    "single_brick_scene",
    "upright_bbox",
]
