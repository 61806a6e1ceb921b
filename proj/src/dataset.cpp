#include "roomlayout/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <set>

#include "roomlayout/errors.hpp"

namespace roomlayout {

namespace fs = std::filesystem;

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

ColumnBoundary slice(const ColumnBoundary& b, int lo, int n) {
  ColumnBoundary out(b.kind, std::vector<double>(b.lat.begin() + lo, b.lat.begin() + lo + n),
                     std::vector<std::uint8_t>(b.valid.begin() + lo, b.valid.begin() + lo + n));
  return out;
}

BoundaryPair map_pair(const BoundaryPair& p, const auto& f) { return {f(p.ceiling), f(p.floor)}; }

// Boundary point of column i on the bird's-eye plane, up to the unknown
// height of the boundary above or below the camera.
bool boundary_point(const ColumnBoundary& b, int i, Point2& out) {
  const int n = b.columns();
  i = ((i % n) + n) % n;
  if (!b.valid[i]) return false;
  const double t = std::tan(b.kind == BoundaryKind::kCeiling ? b.lat[i] : -b.lat[i]);
  if (!(t > 0)) return false;
  const double lon = column_longitude(i, n);
  out = {std::sin(lon) / t, std::cos(lon) / t};
  return true;
}

// Distance along bearing phi to the line through p and q.
double ray_line(double phi, const Point2& p, const Point2& q) {
  const Point2 e{q.x - p.x, q.y - p.y};
  const double denom = std::sin(phi) * e.y - std::cos(phi) * e.x;
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double d = (p.x * e.y - p.y * e.x) / denom;
  return d > 0 ? d : std::numeric_limits<double>::quiet_NaN();
}

double cross2(const Point2& a, const Point2& b) { return a.x * b.y - a.y * b.x; }

// Latitude at bearing phi between columns a and a + 1, assuming
// straight walls: the ray is intersected with the wall through the two
// points, or, when a corner falls between them, with the wall extended from
// the matching side. NaN when the neighbourhood is not usable.
double interpolate_wall(const ColumnBoundary& b, int a, double phi) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Point2 pa, pb;
  if (!boundary_point(b, a, pa) || !boundary_point(b, a + 1, pb)) return nan;
  double d = ray_line(phi, pa, pb);
  Point2 p0, p3;
  if (boundary_point(b, a - 1, p0) && boundary_point(b, a + 2, p3)) {
    const Point2 u{pa.x - p0.x, pa.y - p0.y}, v{p3.x - pb.x, p3.y - pb.y}, w{pb.x - pa.x, pb.y - pa.y};
    const double nu = std::hypot(u.x, u.y), nw = std::hypot(w.x, w.y);
    const bool straight = std::abs(cross2(u, w)) <= 1e-9 * nu * nw;
    const double det = cross2(u, v);
    if (!straight && det != 0.0) {
      // Corner c = pa + s u = pb + r v.
      const double s = cross2({pb.x - pa.x, pb.y - pa.y}, v) / det;
      const Point2 c{pa.x + s * u.x, pa.y + s * u.y};
      const double ca = cross2(pa, c), cb = cross2(c, pb);
      if (s > 0 && ca * cb > 0 && ca * cross2(pa, pb) > 0) {
        const Point2 r{std::sin(phi), std::cos(phi)};
        const bool before = cross2(pa, r) * ca >= 0 && cross2(r, c) * ca >= 0;
        const double e = before ? ray_line(phi, p0, pa) : ray_line(phi, pb, p3);
        if (std::isfinite(e)) d = e;
      }
    }
  }
  if (!std::isfinite(d)) return nan;
  const double lat = std::atan(1.0 / d);
  return b.kind == BoundaryKind::kCeiling ? lat : -lat;
}

}  // namespace

// ---------------------------------------------------------------------------
// Manifest

void Manifest::validate() const {
  std::set<std::string> ids;
  for (const auto& r : records) {
    if (r.id.empty()) throw DataError("manifest record without id");
    if (!ids.insert(r.id).second) throw DataError("duplicate manifest id " + r.id);
    if (r.split != "train" && r.split != "val" && r.split != "test")
      throw DataError("record " + r.id + ": unknown split " + r.split);
    if (r.domain == Branch::kPerspective && !(r.hfov_deg > 0 && r.hfov_deg < 180))
      throw DataError("record " + r.id + ": perspective records need hfov_deg in (0, 180)");
    if (r.image.empty() || r.annotation.empty()) throw DataError("record " + r.id + ": missing image or annotation");
  }
}

std::vector<SampleRecord> Manifest::split(const std::string& name) const {
  std::vector<SampleRecord> out;
  for (const auto& r : records)
    if (r.split == name) out.push_back(r);
  return out;
}

std::string Manifest::resolve(const std::string& path) const {
  const fs::path p(path);
  return p.is_absolute() || root.empty() ? p.string() : (fs::path(root) / p).string();
}

Json to_json(const Manifest& m) {
  Json recs = Json::array();
  for (const auto& r : m.records) {
    Json j = {{"id", r.id}, {"domain", to_string(r.domain)}, {"image", r.image}, {"annotation", r.annotation},
              {"split", r.split}};
    if (r.domain == Branch::kPerspective) {
      j["pitch_deg"] = rad2deg(r.pitch);
      j["hfov_deg"] = r.hfov_deg;
    }
    recs.push_back(j);
  }
  return {{"records", recs}};
}

Manifest manifest_from_json(const Json& j, const std::string& root) {
  Manifest m;
  m.root = root;
  try {
    for (const auto& rj : j.at("records")) {
      SampleRecord r;
      r.id = rj.at("id").get<std::string>();
      r.domain = branch_from_string(rj.at("domain").get<std::string>());
      r.image = rj.at("image").get<std::string>();
      r.annotation = rj.at("annotation").get<std::string>();
      r.split = rj.value("split", "train");
      if (r.domain == Branch::kPerspective) {
        if (!rj.contains("pitch_deg") || !rj.contains("hfov_deg"))
          throw DataError("perspective record " + r.id + " needs pitch_deg and hfov_deg");
        r.pitch = deg2rad(rj.at("pitch_deg").get<double>());
        r.hfov_deg = rj.at("hfov_deg").get<double>();
      }
      m.records.push_back(std::move(r));
    }
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
  m.validate();
  return m;
}

Manifest load_manifest(const std::string& path) {
  return manifest_from_json(read_json_file(path), fs::path(path).parent_path().string());
}

void save_manifest(const std::string& path, const Manifest& m) { write_json_file(path, to_json(m)); }

Sample load_sample(const Manifest& manifest, const SampleRecord& r) {
  Sample s;
  s.id = r.id;
  s.domain = r.domain;
  s.image = load_image(manifest.resolve(r.image));
  const Annotation a = load_annotation(manifest.resolve(r.annotation));
  s.gt = a.pair();
  s.pitch = r.pitch;
  s.hfov_deg = r.hfov_deg;
  s.gt_shifted = a.shifted;
  if (r.domain == Branch::kPano) {
    if (!a.ceiling || !a.floor) throw DataError("panorama " + r.id + " needs both boundaries");
    s.gt = map_pair(s.gt, [&](const ColumnBoundary& b) { return resample_columns(b, s.image.width); });
    s.gt.ceiling.validate();
    s.gt.floor.validate();
    if (s.gt.floor.valid_count() != s.gt.floor.columns())
      throw DataError("panorama " + r.id + ": floor boundary must be valid on every column");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Augmentation

std::uint64_t sample_seed(std::uint64_t seed, const std::string& id, std::int64_t epoch) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : id) h = (h ^ c) * 0x100000001b3ULL;
  return splitmix(splitmix(seed ^ splitmix(h)) ^ static_cast<std::uint64_t>(epoch));
}

Sample flip_sample(const Sample& s) {
  Sample out = s;
  out.image = flip_columns(s.image);
  out.gt = map_pair(s.gt, [](const ColumnBoundary& b) { return flip_columns(b); });
  return out;
}

Sample rotate_sample(const Sample& s, int columns) {
  if (s.domain != Branch::kPano) throw DataError("rotation applies to panoramas only");
  Sample out = s;
  out.image = roll_columns(s.image, columns);
  out.gt = map_pair(s.gt, [&](const ColumnBoundary& b) { return roll_columns(b, columns); });
  return out;
}

Sample scale_luminance(const Sample& s, double factor) {
  Sample out = s;
  const float k = static_cast<float>(factor);
  for (auto& v : out.image.data) v = std::clamp(v * k, 0.0f, 1.0f);
  return out;
}

Sample pano_stretch(const Sample& s, double kx, double kz) {
  if (s.domain != Branch::kPano) throw DataError("pano-stretch applies to panoramas only");
  if (!(kx > 0 && kz > 0)) throw DataError("pano-stretch factors must be positive");
  if (kx == 1.0 && kz == 1.0) return s;
  // A stretched bearing phi' looks along phi in the original room, where
  // horizontal distances grow by r(phi) = |(kx sin phi, kz cos phi)|.
  const auto source = [&](double phi_out, double& scale) {
    const double phi = std::atan2(std::sin(phi_out) / kx, std::cos(phi_out) / kz);
    scale = std::hypot(kx * std::sin(phi), kz * std::cos(phi));
    return phi;
  };
  Sample out = s;
  const int w = s.image.width, h = s.image.height;
  for (int x = 0; x < w; ++x) {
    double scale;
    const double phi = source(column_longitude(x, w), scale);
    const double u = (phi / (2 * kPi) + 0.5) * w;
    for (int y = 0; y < h; ++y) {
      const double lat_out = row_latitude(y, h);
      const double lat = std::atan(std::tan(lat_out) * scale);
      sample_equirect(s.image, u, (0.5 - lat / kPi) * h, &out.image.at(y, x, 0));
    }
  }
  const auto warp = [&](const ColumnBoundary& b) {
    const int n = b.columns();
    ColumnBoundary r(b.kind, std::vector<double>(n, 0.0), std::vector<std::uint8_t>(n, 0));
    for (int j = 0; j < n; ++j) {
      double scale;
      const double phi = source(column_longitude(j, n), scale);
      const double c = (phi / (2 * kPi) + 0.5) * n - 0.5;
      const int i0 = static_cast<int>(std::floor(c));
      const double t = c - i0;
      const int a = ((i0 % n) + n) % n, bcol = (a + 1) % n;
      if (!b.valid[a] || !b.valid[bcol]) continue;
      const double interp = interpolate_wall(b, a, phi);
      const double lat = std::isfinite(interp) ? interp : (1 - t) * b.lat[a] + t * b.lat[bcol];
      r.lat[j] = std::atan(std::tan(lat) / scale);
      r.valid[j] = 1;
    }
    return r;
  };
  out.gt = map_pair(s.gt, warp);
  return out;
}

Sample augment(const Sample& sample, const AugmentToggles& t, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Sample s = sample;
  const bool pano = s.domain == Branch::kPano;
  if (pano && t.stretch) {
    const auto draw = [&] {
      const double k = 1.0 + unit(rng);
      return unit(rng) < 0.5 ? k : 1.0 / k;
    };
    const double kx = draw(), kz = draw();
    s = pano_stretch(s, kx, kz);
  }
  if (pano && t.rotate) s = rotate_sample(s, std::uniform_int_distribution<int>(0, s.image.width - 1)(rng));
  if (t.flip && unit(rng) < 0.5) s = flip_sample(s);
  if (t.luminance) s = scale_luminance(s, 0.5 + 1.5 * unit(rng));
  return s;
}

// ---------------------------------------------------------------------------
// Horizon

Horizon horizon_from_gt(const ColumnBoundary& ceiling, const ColumnBoundary& floor, int height) {
  if (ceiling.valid_count() == 0 || floor.valid_count() == 0)
    throw DataError("horizon_from_gt: both ceiling and floor boundaries are required");
  double lowest_ceiling = -1, highest_floor = height + 1;
  for (int i = 0; i < ceiling.columns(); ++i)
    if (ceiling.valid[i]) lowest_ceiling = std::max(lowest_ceiling, row_from_latitude(ceiling.lat[i], height));
  for (int i = 0; i < floor.columns(); ++i)
    if (floor.valid[i]) highest_floor = std::min(highest_floor, row_from_latitude(floor.lat[i], height));
  Horizon h;
  h.row = 0.5 * (lowest_ceiling + highest_floor);
  h.pitch = -latitude_from_row(h.row, height);
  return h;
}

// ---------------------------------------------------------------------------
// Model inputs

BatchItem prepare_item(const Sample& s, const ModelConfig& config, bool vertical_shift) {
  BatchItem item;
  item.id = s.id;
  item.domain = s.domain;
  item.pitch = s.pitch;
  const int n = config.pano_feature_width;
  if (s.domain == Branch::kPano) {
    item.input = (s.image.height == config.input_height && s.image.width == config.pano_width)
                     ? s.image
                     : resize_bilinear(s.image, config.input_height, config.pano_width);
    item.gt = map_pair(s.gt, [&](const ColumnBoundary& b) { return resample_columns(b, n); });
    item.mask.assign(n, 1);
    return item;
  }

  const EquirectSpec spec{config.pano_width, config.input_height};
  spec.validate();
  const PinholeSpec pinhole{s.hfov_deg, s.image.width, s.image.height};
  const double shift = vertical_shift ? s.pitch : 0.0;
  item.applied_shift = shift;
  const EquirectPatch full = project_perspective_to_equirect(s.image, pinhole, shift, spec, ShiftMode::kTranslate);
  const int lo = (config.pano_width - config.pp_width) / 2;
  const EquirectPatch patch = crop_columns(full, {lo, lo + config.pp_width});
  item.input = patch.pixels;
  for (int y = 0; y < patch.height(); ++y)
    for (int x = 0; x < patch.width(); ++x)
      if (!patch.masked(y, x))
        for (int c = 0; c < 3; ++c) item.input.at(y, x, c) = 0.0f;

  const double current = s.gt_shifted ? s.pitch : 0.0;
  const int off = config.pp_offset();
  const int m = config.pp_feature_width;
  const auto to_grid = [&](const ColumnBoundary& b) {
    ColumnBoundary full_b = b.columns() == config.pano_width ? b : resample_columns(b, config.pano_width);
    if (shift != current) full_b = vertical_shift_rows(full_b, shift - current);
    const ColumnBoundary window = resample_columns(slice(full_b, lo, config.pp_width), m);
    ColumnBoundary out(b.kind, std::vector<double>(n, 0.0), std::vector<std::uint8_t>(n, 0));
    for (int j = 0; j < m; ++j) {
      out.lat[off + j] = window.lat[j];
      out.valid[off + j] = window.valid[j];
    }
    return out;
  };
  item.gt = map_pair(s.gt, to_grid);
  item.mask.assign(n, 0);
  for (int j = 0; j < m; ++j) item.mask[off + j] = 1;
  return item;
}

}  // namespace roomlayout
