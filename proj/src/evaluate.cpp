#include "roomlayout/evaluate.hpp"

#include <filesystem>
#include <opencv2/imgproc.hpp>

#include "roomlayout/errors.hpp"

namespace roomlayout {

namespace fs = std::filesystem;

IoUReport score_pano(const BoundaryPair& pred, const BoundaryPair& gt, double cam_height) {
  const HorizonDepth dp = floor_boundary_to_depth(pred.floor, cam_height);
  const HorizonDepth dg = floor_boundary_to_depth(gt.floor, cam_height);
  const auto pp = boundaries_to_floorplan(dp);
  const auto pg = boundaries_to_floorplan(dg);
  IoUReport r;
  r.iou2d = polygon_iou_2d(pp, pg);
  const double hp = ceiling_height_from_boundaries(pred.ceiling, dp, cam_height);
  const double hg = ceiling_height_from_boundaries(gt.ceiling, dg, cam_height);
  r.iou3d = iou_3d(pp, hp, pg, hg);
  return r;
}

IoUReport score_pp(const BoundaryPair& pred, const BoundaryPair& gt, int height) {
  IoUReport r;
  int kinds = 0;
  double sum = 0;
  if (gt.ceiling.valid_count() > 0) {
    r.ceiling_iou = image_region_iou(BoundaryKind::kCeiling, pred.ceiling, gt.ceiling, height);
    sum += *r.ceiling_iou, ++kinds;
  }
  if (gt.floor.valid_count() > 0) {
    r.floor_iou = image_region_iou(BoundaryKind::kFloor, pred.floor, gt.floor, height);
    sum += *r.floor_iou, ++kinds;
  }
  if (kinds == 0) throw DataError("score_pp: ground truth has no valid columns");
  r.iou2d = sum / kinds;
  return r;
}

Json to_json(const IoUReport& r) {
  Json j = {{"iou2d", r.iou2d}};
  if (r.iou3d) j["iou3d"] = *r.iou3d;
  if (r.ceiling_iou) j["ceiling_iou"] = *r.ceiling_iou;
  if (r.floor_iou) j["floor_iou"] = *r.floor_iou;
  return j;
}

Json to_json(const EvalReport& r) {
  Json pp = {{"count", r.pp_count}, {"iou2d", r.pp_iou2d}};
  if (r.pp_ceiling_iou) pp["ceiling_iou"] = *r.pp_ceiling_iou;
  if (r.pp_floor_iou) pp["floor_iou"] = *r.pp_floor_iou;
  Json samples = Json::array();
  for (const auto& s : r.samples) {
    Json j = to_json(s.report);
    j["id"] = s.id;
    j["domain"] = to_string(s.domain);
    samples.push_back(j);
  }
  return {{"pano", {{"count", r.pano_count}, {"iou2d", r.pano_iou2d}, {"iou3d", r.pano_iou3d}}},
          {"pp", pp},
          {"samples", samples}};
}

namespace {

cv::Mat to_bgr(const Image& img) {
  cv::Mat m(img.height, img.width, CV_8UC3);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        m.at<cv::Vec3b>(y, x)[2 - c] = cv::saturate_cast<std::uint8_t>(std::lround(std::clamp(img.at(y, x, c), 0.f, 1.f) * 255));
  return m;
}

Image from_bgr(const cv::Mat& m) {
  Image img(m.rows, m.cols);
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = m.at<cv::Vec3b>(y, x)[2 - c] / 255.0f;
  return img;
}

void polyline(cv::Mat& canvas, const ColumnBoundary& b, int lo, int hi, int height, const cv::Scalar& color, int scale) {
  const double step = static_cast<double>(canvas.cols) / (hi - lo);
  std::optional<cv::Point> prev;
  for (int j = lo; j < hi; ++j) {
    if (!b.valid[j] || std::abs(b.lat[j]) > kPi / 2) {
      prev.reset();
      continue;
    }
    const cv::Point p(static_cast<int>(std::lround((j - lo + 0.5) * step)),
                      static_cast<int>(std::lround(row_from_latitude(b.lat[j], height) * scale)));
    if (prev) cv::line(canvas, *prev, p, color, 1, cv::LINE_AA);
    prev = p;
  }
}

}  // namespace

Image draw_overlay(const Image& image, const BoundaryPair& gt, const BoundaryPair& pred, int lo, int hi) {
  constexpr int kScale = 2;
  cv::Mat canvas;
  cv::resize(to_bgr(image), canvas, cv::Size(image.width * kScale, image.height * kScale), 0, 0, cv::INTER_NEAREST);
  const cv::Scalar red(0, 0, 255), cyan(255, 255, 0);
  for (const auto* b : {&gt.ceiling, &gt.floor}) polyline(canvas, *b, lo, hi, image.height, red, kScale);
  for (const auto* b : {&pred.ceiling, &pred.floor}) polyline(canvas, *b, lo, hi, image.height, cyan, kScale);
  return from_bgr(canvas);
}

EvalReport evaluate(const Manifest& manifest, const Model<float>& model, const EvalOptions& opt) {
  const ModelConfig& cfg = model.config();
  EvalReport report;
  if (!opt.overlay_dir.empty()) fs::create_directories(opt.overlay_dir);
  int n_ceiling = 0, n_floor = 0;
  double sum_ceiling = 0, sum_floor = 0;
  for (const auto& rec : manifest.split(opt.split)) {
    const Sample s = load_sample(manifest, rec);
    const BatchItem item = prepare_item(s, cfg, opt.vertical_shift);
    BoundaryPair pred = as_boundaries(model.forward(item.input, item.domain));
    SampleScore score{rec.id, rec.domain, {}};
    if (rec.domain == Branch::kPano) {
      score.report = score_pano(pred, item.gt, opt.cam_height);
      report.pano_iou2d += score.report.iou2d;
      report.pano_iou3d += *score.report.iou3d;
      ++report.pano_count;
      if (!opt.overlay_dir.empty())
        save_image((fs::path(opt.overlay_dir) / (rec.id + ".png")).string(),
                   draw_overlay(item.input, item.gt, pred, 0, cfg.pano_feature_width));
    } else {
      pred.ceiling.valid = item.mask;
      pred.floor.valid = item.mask;
      if (!opt.overlay_dir.empty())
        save_image((fs::path(opt.overlay_dir) / (rec.id + ".png")).string(),
                   draw_overlay(item.input, item.gt, pred, cfg.pp_offset(), cfg.pp_offset() + cfg.pp_feature_width));
      // Score in the pitch-shifted frame.
      const double delta = item.pitch - item.applied_shift;
      const auto shift = [&](const BoundaryPair& b) {
        return BoundaryPair{vertical_shift_rows(b.ceiling, delta), vertical_shift_rows(b.floor, delta)};
      };
      score.report = score_pp(shift(pred), shift(item.gt), cfg.input_height);
      report.pp_iou2d += score.report.iou2d;
      if (score.report.ceiling_iou) sum_ceiling += *score.report.ceiling_iou, ++n_ceiling;
      if (score.report.floor_iou) sum_floor += *score.report.floor_iou, ++n_floor;
      ++report.pp_count;
    }
    report.samples.push_back(std::move(score));
  }
  if (report.pano_count) report.pano_iou2d /= report.pano_count, report.pano_iou3d /= report.pano_count;
  if (report.pp_count) report.pp_iou2d /= report.pp_count;
  if (n_ceiling) report.pp_ceiling_iou = sum_ceiling / n_ceiling;
  if (n_floor) report.pp_floor_iou = sum_floor / n_floor;
  if (report.samples.empty()) throw DataError("no samples in split '" + opt.split + "'");
  return report;
}

}  // namespace roomlayout
