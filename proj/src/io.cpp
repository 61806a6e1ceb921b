#include "roomlayout/io.hpp"

#include <filesystem>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "roomlayout/errors.hpp"

namespace roomlayout {

namespace fs = std::filesystem;

Image load_image(const std::string& path) {
  const cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
  if (bgr.empty()) throw DataError("cannot read image " + path);
  Image img(bgr.rows, bgr.cols);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = row[x][2 - c] / 255.0f;
  }
  return img;
}

void save_image(const std::string& path, const Image& img) {
  if (img.channels != 3) throw DataError("save_image: expected 3 channels");
  cv::Mat bgr(img.height, img.width, CV_8UC3);
  for (int y = 0; y < img.height; ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        row[x][2 - c] = cv::saturate_cast<std::uint8_t>(std::lround(std::clamp(img.at(y, x, c), 0.f, 1.f) * 255.f));
  }
  if (!cv::imwrite(path, bgr)) throw DataError("cannot write image " + path);
}

void save_mask(const std::string& path, const std::vector<std::uint8_t>& mask, int height, int width) {
  if (mask.size() != static_cast<std::size_t>(height) * width) throw DataError("save_mask: size mismatch");
  cv::Mat m(height, width, CV_8UC1);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) m.at<std::uint8_t>(y, x) = mask[static_cast<std::size_t>(y) * width + x] ? 255 : 0;
  if (!cv::imwrite(path, m)) throw DataError("cannot write mask " + path);
}

std::vector<std::uint8_t> load_mask(const std::string& path, int height, int width) {
  const cv::Mat m = cv::imread(path, cv::IMREAD_GRAYSCALE);
  if (m.empty()) throw DataError("cannot read mask " + path);
  if (m.rows != height || m.cols != width) throw DataError("mask " + path + " has the wrong size");
  std::vector<std::uint8_t> out(static_cast<std::size_t>(height) * width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) out[static_cast<std::size_t>(y) * width + x] = m.at<std::uint8_t>(y, x) >= 128;
  return out;
}

void save_patch(const std::string& dir, const EquirectPatch& patch) {
  fs::create_directories(dir);
  save_image((fs::path(dir) / "pixels.png").string(), patch.pixels);
  save_mask((fs::path(dir) / "mask.png").string(), patch.mask, patch.height(), patch.width());
  write_json_file((fs::path(dir) / "patch.json").string(),
                  {{"height", patch.height()},
                   {"width", patch.width()},
                   {"full_width", patch.full_width},
                   {"col_offset", patch.col_offset},
                   {"span", {patch.span.lo, patch.span.hi}},
                   {"pitch_deg", rad2deg(patch.pitch)},
                   {"hfov_deg", patch.hfov_deg},
                   {"pixels", "pixels.png"},
                   {"mask", "mask.png"}});
}

EquirectPatch load_patch(const std::string& dir) {
  const Json j = read_json_file((fs::path(dir) / "patch.json").string());
  EquirectPatch p;
  try {
    p.pixels = load_image((fs::path(dir) / j.value("pixels", "pixels.png")).string());
    const int h = j.at("height").get<int>(), w = j.at("width").get<int>();
    if (p.pixels.height != h || p.pixels.width != w) throw DataError("patch pixels do not match patch.json size");
    p.mask = load_mask((fs::path(dir) / j.value("mask", "mask.png")).string(), h, w);
    p.full_width = j.at("full_width").get<int>();
    p.col_offset = j.at("col_offset").get<int>();
    p.span = {j.at("span").at(0).get<int>(), j.at("span").at(1).get<int>()};
    p.pitch = deg2rad(j.at("pitch_deg").get<double>());
    p.hfov_deg = j.at("hfov_deg").get<double>();
  } catch (const Json::exception& e) {
    throw DataError("malformed patch.json in " + dir + ": " + e.what());
  }
  return p;
}

Json to_json(const ColumnBoundary& b) {
  std::vector<int> valid(b.valid.begin(), b.valid.end());
  return {{"kind", to_string(b.kind)}, {"lat", b.lat}, {"valid", valid}};
}

ColumnBoundary boundary_from_json(const Json& j) {
  try {
    ColumnBoundary b;
    b.kind = boundary_kind_from_string(j.at("kind").get<std::string>());
    b.lat = j.at("lat").get<std::vector<double>>();
    if (j.contains("valid")) {
      for (const auto& v : j.at("valid")) b.valid.push_back(v.is_boolean() ? v.get<bool>() : v.get<int>() != 0);
    } else {
      b.valid.assign(b.lat.size(), 1);
    }
    if (b.valid.size() != b.lat.size()) throw DataError("boundary valid mask has the wrong length");
    for (std::size_t i = 0; i < b.lat.size(); ++i)
      if (b.valid[i] && !(std::abs(b.lat[i]) <= kPi / 2)) throw DataError("boundary latitude out of range");
    return b;
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed boundary: ") + e.what());
  }
}

BoundaryPair Annotation::pair() const {
  const auto empty = [&](BoundaryKind k) {
    return ColumnBoundary(k, std::vector<double>(columns, 0.0), std::vector<std::uint8_t>(columns, 0));
  };
  return {ceiling ? *ceiling : empty(BoundaryKind::kCeiling), floor ? *floor : empty(BoundaryKind::kFloor)};
}

Json to_json(const Annotation& a) {
  Json j = {{"columns", a.columns}, {"shifted", a.shifted}, {"pitch_deg", rad2deg(a.pitch)}};
  Json list = Json::array();
  if (a.ceiling) list.push_back(to_json(*a.ceiling));
  if (a.floor) list.push_back(to_json(*a.floor));
  j["boundaries"] = list;
  if (a.room) {
    Json poly = Json::array();
    for (const auto& p : a.room->floorplan) poly.push_back({p.x, p.y});
    j["room"] = {{"polygon", poly}, {"cam_height", a.room->cam_height}, {"ceil_height", a.room->ceil_height}};
  }
  return j;
}

namespace {

RoomModel room_from_json(const Json& j) {
  RoomModel r;
  for (const auto& p : j.at("polygon")) r.floorplan.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  r.cam_height = j.value("cam_height", 1.6);
  r.ceil_height = j.at("ceil_height").get<double>();
  r.validate();
  return r;
}

}  // namespace

Annotation annotation_from_json(const Json& j) {
  Annotation a;
  try {
    a.columns = j.at("columns").get<int>();
    if (a.columns <= 0) throw DataError("annotation column count must be positive");
    a.shifted = j.value("shifted", false);
    a.pitch = deg2rad(j.value("pitch_deg", 0.0));
    if (j.contains("room")) a.room = room_from_json(j.at("room"));
    if (j.contains("corners")) {
      const RoomModel r = room_from_json(j.at("corners"));
      const BoundaryPair b = corners_to_boundary(r.floorplan, r.cam_height, r.ceil_height,
                                                 {a.columns, std::max(1, a.columns / 2)});
      a.ceiling = b.ceiling;
      a.floor = b.floor;
      a.room = r;
    }
    if (j.contains("boundaries")) {
      for (const auto& bj : j.at("boundaries")) {
        ColumnBoundary b = boundary_from_json(bj);
        if (b.columns() != a.columns) throw DataError("boundary length differs from 'columns'");
        (b.kind == BoundaryKind::kCeiling ? a.ceiling : a.floor) = std::move(b);
      }
    }
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed annotation: ") + e.what());
  }
  if (!a.ceiling && !a.floor) throw DataError("annotation has no boundaries");
  return a;
}

Annotation load_annotation(const std::string& path) {
  try {
    return annotation_from_json(read_json_file(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void save_annotation(const std::string& path, const Annotation& a) { write_json_file(path, to_json(a)); }

}  // namespace roomlayout
