#pragma once

#include <string>
#include <vector>

#include "roomlayout/dataset.hpp"
#include "roomlayout/metrics.hpp"

namespace roomlayout {

/// 2D and 3D IoU of panorama layouts after projecting both floors to the
/// bird's-eye plane with `cam_height`.
IoUReport score_pano(const BoundaryPair& pred, const BoundaryPair& gt, double cam_height = 1.6);

/// Ceiling and floor image-region IoU on the columns valid in gt (kinds
/// without valid columns are omitted). iou2d pools both kinds.
IoUReport score_pp(const BoundaryPair& pred, const BoundaryPair& gt, int height);

Json to_json(const IoUReport& r);

struct SampleScore {
  std::string id;
  Branch domain = Branch::kPano;
  IoUReport report;
};

struct EvalReport {
  int pano_count = 0;
  int pp_count = 0;
  double pano_iou2d = 0, pano_iou3d = 0;
  double pp_iou2d = 0;
  std::optional<double> pp_ceiling_iou, pp_floor_iou;
  std::vector<SampleScore> samples;
};

Json to_json(const EvalReport& r);

struct EvalOptions {
  std::string split = "test";
  bool vertical_shift = true;  // must match how the model was trained
  double cam_height = 1.6;
  std::string overlay_dir;     // when set, writes <id>.png overlays
};

/// Perspective samples are scored in the pitch-shifted frame whatever the
/// model's input frame.
EvalReport evaluate(const Manifest& manifest, const Model<float>& model, const EvalOptions& options);

/// Draws gt (red) and prediction (cyan) boundary polylines over `image`,
/// whose width spans the given boundary columns [lo, hi).
Image draw_overlay(const Image& image, const BoundaryPair& gt, const BoundaryPair& pred, int lo, int hi);

}  // namespace roomlayout
