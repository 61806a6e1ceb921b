"""Column-wise room layout estimation from panoramas and perspective images.

Angles are radians unless a name ends in ``_deg``. Images are float32
arrays of shape (H, W, 3) with values in [0, 1].
"""

import json

from . import _core
from ._core import (
    ConfigError,
    DataError,
    Error,
    Model,
    NumericError,
    Patch,
    floor_depth,
    floorplan,
    image_region_iou,
    informative_span,
    iou_3d,
    polygon_iou,
    project,
    reproject,
    room_to_boundaries,
    vertical_shift,
)

__all__ = [
    "ConfigError", "DataError", "Error", "Model", "NumericError", "Patch",
    "count_flops", "evaluate", "floor_depth", "floorplan", "image_region_iou",
    "informative_span", "iou_3d", "loss_pano", "loss_pp", "polygon_iou",
    "project", "reproject", "room_to_boundaries", "score_pano", "synthesize",
    "train", "vertical_shift",
]


def _dump(x):
    return x if isinstance(x, str) else json.dumps(x)


def count_flops(config="full", branch="pano"):
    """Analytic FLOPs of the feature extractor for a preset name or config dict."""
    return _core.count_flops(_dump(config), branch)


def loss_pano(pred, gt, weights=None, cam_height=1.6):
    return _core.loss_pano(pred, gt, _dump(weights or {}), cam_height)


def loss_pp(pred, gt, mask, weights=None):
    return _core.loss_pp(pred, gt, mask, _dump(weights or {}))


def score_pano(pred, gt, cam_height=1.6):
    return json.loads(_core.score_pano(pred, gt, cam_height))


def synthesize(spec, out_dir):
    """Renders a synthetic dataset; returns the manifest path."""
    _core.synthesize(_dump(spec), str(out_dir))
    return f"{out_dir}/manifest.json"


def train(manifest, config, out_dir=""):
    """Trains and returns the per-step loss log."""
    return json.loads(_core.train(str(manifest), _dump(config), str(out_dir)))


def evaluate(manifest, checkpoint, split="test"):
    return json.loads(_core.evaluate(str(manifest), str(checkpoint), split))
