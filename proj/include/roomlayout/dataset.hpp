#pragma once

// Manifest ingestion, augmentation and conversion of stored samples into
// model-ready items.
//
// Manifest JSON: {"records": [{"id", "domain": "pano"|"pp", "image",
//   "annotation", "pitch_deg", "hfov_deg", "split": "train"|"val"|"test"}]}
// Relative paths resolve against the manifest's directory. Perspective
// annotations live on the full equirectangular column grid of the
// panorama frame, centred on longitude 0.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "roomlayout/io.hpp"
#include "roomlayout/model.hpp"

namespace roomlayout {

struct SampleRecord {
  std::string id;
  Branch domain = Branch::kPano;
  std::string image;
  std::string annotation;
  double pitch = 0.0;     // radians, pp only
  double hfov_deg = 0.0;  // pp only
  std::string split = "train";
};

struct Manifest {
  std::vector<SampleRecord> records;
  std::string root;  // base directory of relative paths

  /// Unique ids, known splits, pp records with pitch and hfov.
  void validate() const;
  std::vector<SampleRecord> split(const std::string& name) const;
  std::string resolve(const std::string& path) const;
};

Json to_json(const Manifest& m);
Manifest manifest_from_json(const Json& j, const std::string& root);
Manifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const Manifest& m);

/// A stored sample in its native resolution. Pano: equirectangular image
/// with boundaries resampled to the image width. Pp: pinhole image with
/// boundaries on the full panorama grid.
struct Sample {
  std::string id;
  Branch domain = Branch::kPano;
  Image image;
  BoundaryPair gt;
  double pitch = 0.0;
  double hfov_deg = 0.0;
  bool gt_shifted = false;  // pp latitudes include the pitch shift
};

Sample load_sample(const Manifest& manifest, const SampleRecord& record);

struct AugmentToggles {
  bool flip = true;
  bool rotate = true;     // pano only
  bool luminance = true;
  bool stretch = true;    // pano only
};

/// Seed of the augmentation stream for (global seed, sample id, epoch).
std::uint64_t sample_seed(std::uint64_t seed, const std::string& id, std::int64_t epoch);

/// Applies the enabled augmentations with parameters drawn from `rng`.
Sample augment(const Sample& sample, const AugmentToggles& toggles, std::mt19937_64& rng);

/// Individual augmentations.
Sample flip_sample(const Sample& s);
Sample rotate_sample(const Sample& s, int columns);
Sample scale_luminance(const Sample& s, double factor);
/// Scales the floor plan by (kx, kz) along (x, forward) and warps the
/// panorama and its boundaries consistently.
Sample pano_stretch(const Sample& s, double kx, double kz);

struct Horizon {
  double row = 0.0;
  double pitch = 0.0;  // vertical_shift_rows by this moves the row to H/2
};

/// Mean of the lowest ceiling row and the highest floor row (valid columns).
Horizon horizon_from_gt(const ColumnBoundary& ceiling, const ColumnBoundary& floor, int height);

/// Model input plus supervision on the panorama feature grid.
struct BatchItem {
  std::string id;
  Branch domain = Branch::kPano;
  Image input;                      // input_height x input_width(domain)
  BoundaryPair gt;                  // pano_feature_width columns
  std::vector<std::uint8_t> mask;   // columns carrying supervision
  double pitch = 0.0;
  double applied_shift = 0.0;       // latitude shift applied to input and gt
};

/// Pano: resize to the model input, resample gt to the feature width.
/// Pp: project in translate mode (shifted by the pitch when
/// `vertical_shift`), crop the centred pp_width-column window, resample gt
/// to pp_feature_width and place it at pp_offset().
BatchItem prepare_item(const Sample& s, const ModelConfig& config, bool vertical_shift);

}  // namespace roomlayout
