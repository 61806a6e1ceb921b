#pragma once

// File formats: 8-bit PNG/JPEG images, equirectangular patch directories
// and boundary annotation JSON.
//
// Patch directory: pixels.png, mask.png (0/255) and patch.json
//   {height, width, full_width, col_offset, span: [lo, hi], pitch_deg, hfov_deg}
//
// Annotation JSON, either explicit boundaries
//   {"columns": N, "boundaries": [{"kind": "floor", "lat": [...], "valid": [...]}, ...],
//    "shifted": bool, "pitch_deg": p}
// or a corner list
//   {"columns": N, "corners": {"polygon": [[x, y], ...], "cam_height": h, "ceil_height": c}}
// Latitudes are radians; a missing boundary kind means "not annotated".

#include <optional>
#include <string>

#include "roomlayout/config.hpp"
#include "roomlayout/layout_repr.hpp"
#include "roomlayout/sphere_geometry.hpp"

namespace roomlayout {

/// RGB image with values in [0, 1]. Throws DataError when unreadable.
Image load_image(const std::string& path);
/// Writes 8-bit RGB (rounded, clamped); format follows the extension.
void save_image(const std::string& path, const Image& img);

void save_mask(const std::string& path, const std::vector<std::uint8_t>& mask, int height, int width);
std::vector<std::uint8_t> load_mask(const std::string& path, int height, int width);

void save_patch(const std::string& dir, const EquirectPatch& patch);
EquirectPatch load_patch(const std::string& dir);

Json to_json(const ColumnBoundary& b);
ColumnBoundary boundary_from_json(const Json& j);

struct Annotation {
  int columns = 0;
  std::optional<ColumnBoundary> ceiling;
  std::optional<ColumnBoundary> floor;
  bool shifted = false;  // perspective latitudes already include the pitch shift
  double pitch = 0.0;    // radians
  std::optional<RoomModel> room;

  /// Both boundaries, absent kinds replaced by all-invalid arrays.
  BoundaryPair pair() const;
};

Json to_json(const Annotation& a);
/// Corner lists are rendered with corners_to_boundary on `columns` columns.
Annotation annotation_from_json(const Json& j);
Annotation load_annotation(const std::string& path);
void save_annotation(const std::string& path, const Annotation& a);

}  // namespace roomlayout
