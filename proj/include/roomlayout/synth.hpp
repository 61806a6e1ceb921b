#pragma once

// Procedural rooms rendered as panoramas, plus perspective views cut from
// them, with analytic boundaries.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "roomlayout/dataset.hpp"

namespace roomlayout {

struct SynthSpec {
  int rooms = 8;
  std::vector<std::string> families{"rectangle", "l_shape", "ngon"};
  double size_min = 3.0;  // metres, room extent
  double size_max = 7.0;
  double cam_height_min = 1.6;
  double cam_height_max = 1.6;
  double ceil_height_min = 2.6;
  double ceil_height_max = 3.4;
  int pp_views = 1;  // per room
  double hfov_min = 60.0;
  double hfov_max = 90.0;
  double pitch_min = -30.0;  // degrees
  double pitch_max = 30.0;
  int pano_width = 256;
  int pp_size = 64;
  int supersample = 2;
  double val_fraction = 0.0;   // trailing rooms go to val, then test
  double test_fraction = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

Json to_json(const SynthSpec& s);
SynthSpec synth_spec_from_json(const Json& j);

/// Room of the given family with the camera at the origin.
RoomModel sample_room(const std::string& family, const SynthSpec& spec, std::mt19937_64& rng);

/// Colours of one room (per-wall tints, floor tiles, ceiling).
struct RoomStyle {
  std::vector<std::array<float, 3>> walls;
  std::array<float, 3> floor_a{}, floor_b{}, ceiling{};
};
RoomStyle sample_style(const RoomModel& room, std::mt19937_64& rng);

/// Ray-cast rendering on a W x W/2 grid with s x s supersampling.
Image render_panorama(const RoomModel& room, const RoomStyle& style, int width, int supersample = 2);

/// Boundaries of a perspective view looking along `yaw` (radians) with the
/// given pitch, on the full `pano_width` column grid of the view-centred
/// panorama frame, shifted by the pitch. Columns whose boundary lies
/// outside the image are invalid.
BoundaryPair perspective_gt(const RoomModel& room, int pano_width, const PinholeSpec& pinhole, double pitch,
                            double yaw);

/// Writes images/, annotations/ and manifest.json under `out_dir`.
Manifest generate_synthetic(const SynthSpec& spec, const std::string& out_dir);

}  // namespace roomlayout
