#include "roomlayout/synth.hpp"

#include <cmath>
#include <filesystem>
#include <set>

#include "roomlayout/errors.hpp"

namespace roomlayout {

namespace fs = std::filesystem;

namespace {

constexpr double kWallMargin = 0.5;  // metres between camera and any wall

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::vector<Point2> translate(const std::vector<Point2>& poly, double dx, double dy) {
  std::vector<Point2> out = poly;
  for (auto& p : out) p.x -= dx, p.y -= dy;
  return out;
}

bool inside_with_margin(const std::vector<Point2>& poly, double x, double y) {
  RoomModel r{translate(poly, x, y), 1.0, 2.0};
  try {
    r.validate();
  } catch (const DataError&) {
    return false;
  }
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % n];
    const double ex = b.x - a.x, ey = b.y - a.y;
    const double t = std::clamp(((x - a.x) * ex + (y - a.y) * ey) / (ex * ex + ey * ey), 0.0, 1.0);
    if (std::hypot(x - a.x - t * ex, y - a.y - t * ey) < kWallMargin) return false;
  }
  return true;
}

/// Places the camera at a random interior point (rejection sampling over
/// the bounding box) and re-centres the polygon on it.
std::vector<Point2> place_camera(const std::vector<Point2>& poly, std::mt19937_64& rng) {
  double x0 = 1e30, x1 = -1e30, y0 = 1e30, y1 = -1e30;
  for (const auto& p : poly) x0 = std::min(x0, p.x), x1 = std::max(x1, p.x), y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    // Bias towards the middle so views are not dominated by one wall.
    const double x = x0 + (x1 - x0) * uniform(rng, 0.25, 0.75);
    const double y = y0 + (y1 - y0) * uniform(rng, 0.25, 0.75);
    if (inside_with_margin(poly, x, y)) return translate(poly, x, y);
  }
  throw ConfigError("could not place the camera inside the room; increase size_min");
}

std::array<float, 3> hsv(double h, double s, double v) {
  const double c = v * s, hp = std::fmod(h, 1.0) * 6, x = c * (1 - std::abs(std::fmod(hp, 2.0) - 1));
  double r = 0, g = 0, b = 0;
  if (hp < 1) r = c, g = x;
  else if (hp < 2) r = x, g = c;
  else if (hp < 3) g = c, b = x;
  else if (hp < 4) g = x, b = c;
  else if (hp < 5) r = x, b = c;
  else r = c, b = x;
  const double m = v - c;
  return {static_cast<float>(r + m), static_cast<float>(g + m), static_cast<float>(b + m)};
}

}  // namespace

void SynthSpec::validate() const {
  const auto fail = [](const std::string& m) { throw ConfigError("SynthSpec: " + m); };
  if (rooms < 1) fail("rooms must be >= 1");
  if (families.empty()) fail("families must not be empty");
  for (const auto& f : families)
    if (f != "rectangle" && f != "l_shape" && f != "ngon") fail("unknown polygon family " + f);
  if (!(size_min > 2 * kWallMargin && size_max >= size_min)) fail("invalid size range");
  if (!(cam_height_min > 0 && cam_height_max >= cam_height_min)) fail("invalid camera height range");
  if (!(ceil_height_min > cam_height_max && ceil_height_max >= ceil_height_min)) fail("ceiling must be above the camera");
  if (pp_views < 0) fail("pp_views must be >= 0");
  if (!(hfov_min > 0 && hfov_max < 180 && hfov_max >= hfov_min)) fail("invalid hfov range");
  if (!(pitch_max >= pitch_min)) fail("invalid pitch range");
  if (pano_width <= 0 || pano_width % 2) fail("pano_width must be positive and even");
  if (pp_size <= 0) fail("pp_size must be positive");
  if (supersample < 1) fail("supersample must be >= 1");
  if (!(val_fraction >= 0 && test_fraction >= 0 && val_fraction + test_fraction < 1)) fail("invalid split fractions");
  // Translate-mode bound at the extreme pitch for square views.
  const double vfov = 2 * std::atan(std::tan(deg2rad(hfov_max) / 2));
  if (deg2rad(std::max(std::abs(pitch_min), std::abs(pitch_max))) + vfov / 2 > kPi / 2 + 1e-9)
    fail("pitch range violates |pitch| + vfov/2 <= 90 degrees");
}

Json to_json(const SynthSpec& s) {
  return {{"rooms", s.rooms},
          {"families", s.families},
          {"size_range", {s.size_min, s.size_max}},
          {"cam_height_range", {s.cam_height_min, s.cam_height_max}},
          {"ceil_height_range", {s.ceil_height_min, s.ceil_height_max}},
          {"pp_views", s.pp_views},
          {"hfov_range", {s.hfov_min, s.hfov_max}},
          {"pitch_range", {s.pitch_min, s.pitch_max}},
          {"pano_width", s.pano_width},
          {"pp_size", s.pp_size},
          {"supersample", s.supersample},
          {"val_fraction", s.val_fraction},
          {"test_fraction", s.test_fraction},
          {"seed", s.seed}};
}

SynthSpec synth_spec_from_json(const Json& j) {
  static const std::set<std::string> keys{"rooms", "families", "size_range", "cam_height_range",
                                          "ceil_height_range", "pp_views", "hfov_range", "pitch_range",
                                          "pano_width", "pp_size", "supersample", "val_fraction",
                                          "test_fraction", "seed"};
  if (!j.is_object()) throw ConfigError("synth spec must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!keys.count(k)) throw ConfigError("synth spec: unknown key '" + k + "'");
  SynthSpec s;
  try {
    const auto range = [&](const char* key, double& lo, double& hi) {
      if (!j.contains(key)) return;
      lo = j.at(key).at(0).get<double>();
      hi = j.at(key).at(1).get<double>();
    };
    s.rooms = j.value("rooms", s.rooms);
    s.families = j.value("families", s.families);
    range("size_range", s.size_min, s.size_max);
    range("cam_height_range", s.cam_height_min, s.cam_height_max);
    range("ceil_height_range", s.ceil_height_min, s.ceil_height_max);
    s.pp_views = j.value("pp_views", s.pp_views);
    range("hfov_range", s.hfov_min, s.hfov_max);
    range("pitch_range", s.pitch_min, s.pitch_max);
    s.pano_width = j.value("pano_width", s.pano_width);
    s.pp_size = j.value("pp_size", s.pp_size);
    s.supersample = j.value("supersample", s.supersample);
    s.val_fraction = j.value("val_fraction", s.val_fraction);
    s.test_fraction = j.value("test_fraction", s.test_fraction);
    s.seed = j.value("seed", s.seed);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("synth spec: ") + e.what());
  }
  s.validate();
  return s;
}

RoomModel sample_room(const std::string& family, const SynthSpec& spec, std::mt19937_64& rng) {
  std::vector<Point2> poly;
  if (family == "rectangle") {
    const double w = uniform(rng, spec.size_min, spec.size_max), d = uniform(rng, spec.size_min, spec.size_max);
    poly = {{0, 0}, {w, 0}, {w, d}, {0, d}};
  } else if (family == "l_shape") {
    const double w = uniform(rng, spec.size_min, spec.size_max), d = uniform(rng, spec.size_min, spec.size_max);
    const double cw = w * uniform(rng, 0.3, 0.5), cd = d * uniform(rng, 0.3, 0.5);
    // Notch removed from the (w, d) corner.
    poly = {{0, 0}, {w, 0}, {w, d - cd}, {w - cw, d - cd}, {w - cw, d}, {0, d}};
  } else if (family == "ngon") {
    const int n = std::uniform_int_distribution<int>(5, 8)(rng);
    const double r = uniform(rng, spec.size_min, spec.size_max) / 2;
    const double phase = uniform(rng, 0, 2 * kPi);
    for (int i = 0; i < n; ++i) {
      const double a = phase + 2 * kPi * i / n;
      poly.push_back({r * std::sin(a), r * std::cos(a)});
    }
  } else {
    throw ConfigError("unknown polygon family " + family);
  }
  // Counter-clockwise in (x right, y forward) for a consistent wall order.
  double area = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % poly.size()];
    area += a.x * b.y - b.x * a.y;
  }
  if (area < 0) std::reverse(poly.begin(), poly.end());
  RoomModel room;
  room.floorplan = place_camera(poly, rng);
  room.cam_height = uniform(rng, spec.cam_height_min, spec.cam_height_max);
  room.ceil_height = uniform(rng, spec.ceil_height_min, spec.ceil_height_max);
  room.validate();
  return room;
}

RoomStyle sample_style(const RoomModel& room, std::mt19937_64& rng) {
  RoomStyle s;
  const double base = uniform(rng, 0, 1);
  for (std::size_t i = 0; i < room.floorplan.size(); ++i)
    s.walls.push_back(hsv(base + 0.61803 * static_cast<double>(i), uniform(rng, 0.25, 0.6), uniform(rng, 0.45, 0.75)));
  s.floor_a = hsv(uniform(rng, 0.05, 0.12), 0.5, uniform(rng, 0.25, 0.35));
  s.floor_b = hsv(uniform(rng, 0.05, 0.12), 0.45, uniform(rng, 0.15, 0.22));
  const float c = static_cast<float>(uniform(rng, 0.85, 0.95));
  s.ceiling = {c, c, c * 0.97f};
  return s;
}

Image render_panorama(const RoomModel& room, const RoomStyle& style, int width, int ss) {
  room.validate();
  if (width <= 0 || width % 2) throw DataError("render_panorama: width must be positive and even");
  if (style.walls.size() != room.floorplan.size()) throw DataError("render_panorama: style does not match room");
  const int height = width / 2;
  const double h = room.cam_height, above = room.ceil_height - room.cam_height;
  const int sub_w = width * ss, sub_h = height * ss;
  std::vector<WallHit> hits(sub_w);
  std::vector<double> lons(sub_w);
  for (int x = 0; x < sub_w; ++x) {
    lons[x] = column_longitude((x + 0.5) / ss - 0.5, width);
    hits[x] = wall_hit(room.floorplan, lons[x]);
  }
  Image img(height, width);
  const float norm = 1.0f / static_cast<float>(ss * ss);
  for (int sy = 0; sy < sub_h; ++sy) {
    const double lat = row_latitude((sy + 0.5) / ss - 0.5, height);
    const double t = std::tan(lat);
    for (int sx = 0; sx < sub_w; ++sx) {
      const WallHit& hit = hits[sx];
      std::array<float, 3> col;
      const double z = t * hit.distance;  // height above the camera at the wall
      if (z >= above) {
        const double r = above / t;  // horizontal distance of the ceiling point
        const float shade = static_cast<float>(1.0 - 0.15 * std::min(1.0, r / 8.0));
        col = {style.ceiling[0] * shade, style.ceiling[1] * shade, style.ceiling[2] * shade};
      } else if (z <= -h) {
        const double r = -h / t;
        const double px = r * std::sin(lons[sx]), py = r * std::cos(lons[sx]);
        const bool odd = (static_cast<long>(std::floor(px / 0.5)) + static_cast<long>(std::floor(py / 0.5))) & 1;
        col = odd ? style.floor_a : style.floor_b;
      } else {
        const auto& w = style.walls[hit.edge];
        const double height_above_floor = z + h;
        const float stripe = (static_cast<long>(std::floor(hit.along / 0.4)) & 1) ? 1.0f : 0.93f;
        const float grad = static_cast<float>(0.85 + 0.15 * height_above_floor / room.ceil_height);
        const float base = height_above_floor < 0.12 ? 0.55f : 1.0f;  // skirting
        col = {w[0] * stripe * grad * base, w[1] * stripe * grad * base, w[2] * stripe * grad * base};
      }
      for (int c = 0; c < 3; ++c) img.at(sy / ss, sx / ss, c) += col[c] * norm;
    }
  }
  return img;
}

BoundaryPair perspective_gt(const RoomModel& room, int pano_width, const PinholeSpec& pinhole, double pitch,
                            double yaw) {
  room.validate();
  pinhole.validate();
  const double f = pinhole.focal();
  const Eigen::Matrix3d rot = pitch_rotation(pitch);
  const double h = room.cam_height, above = room.ceil_height - room.cam_height;
  enum Region { kFloor, kWall, kCeiling };
  const auto classify = [&](double lon, double lat) {
    const Eigen::Vector3d world = rot * direction_from_lonlat(LonLat(lon, lat));
    const LonLat w = lonlat_from_direction(world);
    const double d = wall_distance(room.floorplan, w.lon + yaw);
    const double z = std::tan(w.lat) * d;
    return z <= -h ? kFloor : (z >= above ? kCeiling : kWall);
  };
  // Bisects the transition of `pred` along latitude on [lo, hi]; pred(lo) true.
  const auto bisect = [&](double lon, double lo, double hi, auto pred) {
    for (int it = 0; it < 200 && std::abs(hi - lo) > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi);
      (pred(lon, mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  BoundaryPair out{ColumnBoundary(BoundaryKind::kCeiling, std::vector<double>(pano_width, 0.0),
                                  std::vector<std::uint8_t>(pano_width, 0)),
                   ColumnBoundary(BoundaryKind::kFloor, std::vector<double>(pano_width, 0.0),
                                  std::vector<std::uint8_t>(pano_width, 0))};
  for (int i = 0; i < pano_width; ++i) {
    const double lon = column_longitude(i, pano_width);
    if (std::cos(lon) <= 0 || std::abs(std::tan(lon)) * f > pinhole.width / 2.0) continue;
    const double lat_max = std::atan(pinhole.height / 2.0 * std::cos(lon) / f);
    if (classify(lon, -lat_max) == kFloor && classify(lon, lat_max) != kFloor) {
      const double lat = bisect(lon, -lat_max, lat_max, [&](double lo, double la) { return classify(lo, la) == kFloor; });
      const double shifted = lat + pitch;
      if (shifted < 0 && shifted > -kPi / 2) out.floor.lat[i] = shifted, out.floor.valid[i] = 1;
    }
    if (classify(lon, lat_max) == kCeiling && classify(lon, -lat_max) != kCeiling) {
      const double lat =
          bisect(lon, lat_max, -lat_max, [&](double lo, double la) { return classify(lo, la) == kCeiling; });
      const double shifted = lat + pitch;
      if (shifted > 0 && shifted < kPi / 2) out.ceiling.lat[i] = shifted, out.ceiling.valid[i] = 1;
    }
  }
  return out;
}

Manifest generate_synthetic(const SynthSpec& spec, const std::string& out_dir) {
  spec.validate();
  fs::create_directories(fs::path(out_dir) / "images");
  fs::create_directories(fs::path(out_dir) / "annotations");
  Manifest manifest;
  manifest.root = out_dir;
  const int n_test = static_cast<int>(std::round(spec.rooms * spec.test_fraction));
  const int n_val = static_cast<int>(std::round(spec.rooms * spec.val_fraction));
  const EquirectSpec grid{spec.pano_width, spec.pano_width / 2};
  for (int r = 0; r < spec.rooms; ++r) {
    std::mt19937_64 rng(sample_seed(spec.seed, "room", r));
    const std::string& family = spec.families[r % spec.families.size()];
    const RoomModel room = sample_room(family, spec, rng);
    const RoomStyle style = sample_style(room, rng);
    const std::string split =
        r >= spec.rooms - n_test ? "test" : (r >= spec.rooms - n_test - n_val ? "val" : "train");
    char name[32];
    std::snprintf(name, sizeof(name), "room%03d", r);
    const std::string id = name;

    const Image pano = render_panorama(room, style, spec.pano_width, spec.supersample);
    const BoundaryPair gt = room_to_boundaries(room, grid);
    Annotation ann;
    ann.columns = spec.pano_width;
    ann.ceiling = gt.ceiling;
    ann.floor = gt.floor;
    ann.room = room;
    save_image((fs::path(out_dir) / "images" / (id + ".png")).string(), pano);
    save_annotation((fs::path(out_dir) / "annotations" / (id + ".json")).string(), ann);
    manifest.records.push_back({id, Branch::kPano, "images/" + id + ".png", "annotations/" + id + ".json", 0.0, 0.0, split});

    for (int v = 0; v < spec.pp_views; ++v) {
      const int k = std::uniform_int_distribution<int>(0, spec.pano_width - 1)(rng);
      const double hfov = uniform(rng, spec.hfov_min, spec.hfov_max);
      const double pitch = deg2rad(uniform(rng, spec.pitch_min, spec.pitch_max));
      const double yaw = 2 * kPi * k / spec.pano_width;
      const PinholeSpec pinhole{hfov, spec.pp_size, spec.pp_size};
      const Image view = reproject_equirect_to_perspective(make_panorama_patch(roll_columns(pano, k)), pinhole,
                                                           pitch, ShiftMode::kRotate);
      const BoundaryPair pgt = perspective_gt(room, spec.pano_width, pinhole, pitch, yaw);
      Annotation pa;
      pa.columns = spec.pano_width;
      if (pgt.ceiling.valid_count()) pa.ceiling = pgt.ceiling;
      if (pgt.floor.valid_count()) pa.floor = pgt.floor;
      if (!pa.ceiling && !pa.floor) continue;  // view sees only walls
      pa.shifted = true;
      pa.pitch = pitch;
      const std::string pid = id + "_pp" + std::to_string(v);
      save_image((fs::path(out_dir) / "images" / (pid + ".png")).string(), view);
      save_annotation((fs::path(out_dir) / "annotations" / (pid + ".json")).string(), pa);
      manifest.records.push_back(
          {pid, Branch::kPerspective, "images/" + pid + ".png", "annotations/" + pid + ".json", pitch, hfov, split});
    }
  }
  save_manifest((fs::path(out_dir) / "manifest.json").string(), manifest);
  return manifest;
}

}  // namespace roomlayout
