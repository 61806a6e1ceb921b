import math

import numpy as np
import pytest

import roomlayout as rl

ROOM = np.array([[-2.0, -1.5], [2.5, -1.5], [2.5, 1.0], [1.0, 1.0], [1.0, 3.0], [-2.0, 3.0]])


def smooth(h, w):
    y, x = np.mgrid[0:h, 0:w]
    img = np.stack([0.5 + 0.3 * np.sin(2 * np.pi * (x / w + c / 3)) * np.cos(np.pi * y / h) for c in range(3)], -1)
    return img.astype(np.float32)


def test_span():
    assert rl.informative_span(90.0, 1024) == (384, 640)


def test_project_round_trip():
    img = smooth(128, 128)
    patch = rl.project(img, 90.0, pitch=0.0, width=512)
    assert patch.pixels.shape == (256, 512, 3)
    assert patch.mask.shape == (256, 512)
    assert not patch.mask[:, : patch.span[0]].any()
    back = rl.reproject(patch, 90.0, 128, 128)
    assert np.abs(back[4:-4, 4:-4] - img[4:-4, 4:-4]).max() < 0.02


def test_vertical_shift_moves_content_down():
    patch = rl.project(smooth(64, 64), 90.0, width=256)
    rows = np.nonzero(patch.mask.any(axis=1))[0]
    shifted = rl.vertical_shift(patch, -math.pi / 8)
    moved = np.nonzero(shifted.mask.any(axis=1))[0]
    assert moved[0] == rows[0] + 16


def test_translate_pitch_bound():
    with pytest.raises(rl.DataError):
        rl.project(smooth(64, 64), 120.0, pitch=math.radians(40), width=256)


def test_boundaries_and_floorplan():
    b = rl.room_to_boundaries(ROOM, 1.6, 2.9, 256)
    assert b["floor"].shape == (256,)
    assert (b["ceiling"] > 0).all() and (b["floor"] < 0).all()
    pts = rl.floorplan(b["floor"], 1.6)
    assert pts.shape == (256, 2)
    assert rl.polygon_iou(pts, ROOM) > 0.97
    assert rl.score_pano(b, b)["iou2d"] == pytest.approx(1.0)


def test_metrics():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    assert rl.polygon_iou(sq, sq) == 1.0
    assert rl.polygon_iou(sq, sq + [0.5, 0]) == pytest.approx(1 / 3, abs=1e-9)
    assert rl.iou_3d(sq, 2.0, sq, 4.0) == pytest.approx(0.5)
    lat = np.full(8, 0.3)
    assert rl.image_region_iou("ceiling", lat, lat, 64) == pytest.approx(1.0)
    with pytest.raises(rl.DataError):
        rl.polygon_iou(sq[:2], sq)


def test_losses():
    gt = rl.room_to_boundaries(ROOM, 1.6, 2.9, 64)
    pred = dict(gt, floor=gt["floor"] - 0.05, ceiling=gt["ceiling"] + 0.05)
    zero = rl.loss_pano(gt, gt)
    assert zero["l_pano"] == 0.0
    terms = rl.loss_pano(pred, gt)
    assert terms["l_b"] == pytest.approx(0.05)
    assert terms["l_pano"] == pytest.approx(terms["l_b"] + 0.1 * terms["l_d"] + 0.01 * (terms["l_n"] + terms["l_g"]))
    mask = np.zeros(64, np.uint8)
    mask[24:40] = 1
    assert rl.loss_pp(pred, gt, mask, {"delta": 2.0})["l_pp"] == pytest.approx(0.1)
    with pytest.raises(rl.ConfigError):
        rl.loss_pano(pred, gt, {"mu": -1})


def test_flops_ratio():
    pano = rl.count_flops("full", "pano")
    pp = rl.count_flops("full", "pp")
    assert pp["backbone_flops"] / pano["backbone_flops"] == pytest.approx(0.25, abs=0.01)
    assert pp["conv1d_flops"] / pano["conv1d_flops"] == pytest.approx(0.25, abs=0.01)


def test_model_forward():
    model = rl.Model("tiny", seed=3)
    assert model.parameter_count > 0
    ceiling, floor = model.forward(smooth(32, 128), "pano")
    assert ceiling.shape == floor.shape == (16,)
    assert (ceiling > 0).all() and (floor < 0).all()
    again = rl.Model("tiny", seed=3).forward(smooth(32, 128), "pano")
    np.testing.assert_array_equal(ceiling, again[0])
    with pytest.raises(rl.DataError):
        model.forward(smooth(32, 64), "pano")


def test_synth_train_evaluate(tmp_path):
    manifest = rl.synthesize({"rooms": 2, "pp_views": 1, "pano_width": 128, "pp_size": 32, "supersample": 1, "seed": 1},
                             tmp_path / "data")
    config = {
        "model": {"preset": "tiny", "input_height": 64, "compress_strides": [2, 1, 1]},
        "batch_size": 2,
        "steps": 2,
        "seed": 4,
    }
    log = rl.train(manifest, config, tmp_path / "run")
    assert len(log) == 2
    report = rl.evaluate(manifest, tmp_path / "run" / "checkpoint.bin", split="train")
    assert report["pano"]["count"] == 2
    assert 0.0 <= report["pano"]["iou2d"] <= 1.0
    with pytest.raises(rl.ConfigError):
        rl.train(manifest, dict(config, learning_rate=1.0))
