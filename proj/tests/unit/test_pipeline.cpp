#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>

#include "roomlayout/checkpoint.hpp"
#include "roomlayout/errors.hpp"
#include "roomlayout/evaluate.hpp"
#include "roomlayout/io.hpp"
#include "roomlayout/synth.hpp"
#include "roomlayout/train.hpp"
#include "test_util.hpp"

using namespace roomlayout;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("roomlayout_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// 64 x 128 input with 32-column perspective inputs; C = 16.
ModelConfig small_config() {
  ModelConfig c = ModelConfig::tiny();
  c.input_height = 64;
  c.compress_strides = {2, 1, 1};
  c.validate();
  return c;
}

SynthSpec small_spec(std::uint64_t seed) {
  SynthSpec s;
  s.rooms = 2;
  s.pp_views = 1;
  s.pano_width = 128;
  s.pp_size = 32;
  s.supersample = 1;
  s.seed = seed;
  return s;
}

const Manifest& small_dataset() {
  static const Manifest m = generate_synthetic(small_spec(3), scratch("dataset").string());
  return m;
}

TrainConfig small_train(int steps) {
  TrainConfig t;
  t.model = small_config();
  t.batch_size = 4;
  t.steps = steps;
  t.seed = 5;
  t.adam.lr = 1e-3;
  return t;
}

Sample synthetic_pano(const RoomModel& room, int width, int gt_columns) {
  std::mt19937_64 rng(1);
  Sample s;
  s.id = "p";
  s.domain = Branch::kPano;
  s.image = render_panorama(room, sample_style(room, rng), width, 1);
  s.gt = room_to_boundaries(room, {gt_columns, gt_columns / 2});
  return s;
}

void expect_boundaries_near(const ColumnBoundary& a, const ColumnBoundary& b, double tol) {
  ASSERT_EQ(a.columns(), b.columns());
  for (int i = 0; i < a.columns(); ++i) {
    ASSERT_EQ(a.valid[i], b.valid[i]) << i;
    if (a.valid[i]) EXPECT_NEAR(a.lat[i], b.lat[i], tol) << i;
  }
}

const RoomModel kRoom{{{-2.0, -1.5}, {2.5, -1.5}, {2.5, 1.0}, {1.0, 1.0}, {1.0, 3.0}, {-2.0, 3.0}}, 1.6, 2.9};

}  // namespace

TEST(Checkpoint, BitExactRoundTrip) {
  const fs::path dir = scratch("ckpt");
  Model<float> m(ModelConfig::tiny(), 9);
  Checkpoint c;
  c.config = m.config();
  c.seed = 9;
  c.step = 123;
  c.params = m.params();
  c.adam_config = AdamConfig{};
  c.adam_steps = 17;
  c.adam_m = m.params().zeros_like();
  c.adam_v = m.params().zeros_like();
  c.adam_m[0].setRandom();
  c.adam_v[3].setConstant(std::nextafter(0.0f, 1.0f));
  c.extra = {{"note", "x"}};
  save_checkpoint((dir / "a.bin").string(), c);
  const Checkpoint d = load_checkpoint((dir / "a.bin").string());
  EXPECT_EQ(d.step, 123);
  EXPECT_EQ(d.seed, 9u);
  EXPECT_EQ(d.adam_steps, 17);
  EXPECT_EQ(d.extra, c.extra);
  EXPECT_EQ(to_json(d.config), to_json(c.config));
  ASSERT_EQ(d.params.size(), c.params.size());
  for (int i = 0; i < c.params.size(); ++i) {
    EXPECT_EQ(d.params.name(i), c.params.name(i));
    EXPECT_EQ(d.params[i], c.params[i]);
    EXPECT_EQ(d.adam_m[i], c.adam_m[i]);
    EXPECT_EQ(d.adam_v[i], c.adam_v[i]);
  }
  save_checkpoint((dir / "b.bin").string(), d);
  EXPECT_EQ(slurp(dir / "a.bin"), slurp(dir / "b.bin"));

  std::ofstream(dir / "bad.bin") << "not a checkpoint";
  EXPECT_THROW(load_checkpoint((dir / "bad.bin").string()), DataError);
}

TEST(Config, JsonRoundTripsAndRejectsUnknownKeys) {
  for (const char* name : {"full", "toy", "tiny"}) {
    const ModelConfig c = model_preset(name);
    EXPECT_EQ(to_json(model_config_from_json(to_json(c))), to_json(c));
  }
  EXPECT_EQ(to_json(model_config_from_json("toy")), to_json(ModelConfig::toy()));
  Json j = to_json(ModelConfig::toy());
  j["merged_chanels"] = 3;
  EXPECT_THROW(model_config_from_json(j), ConfigError);
  EXPECT_THROW(model_preset("huge"), ConfigError);

  TrainConfig t = small_train(7);
  t.pano_fraction = 0.25;
  t.domains = DomainMix::kPano;
  EXPECT_EQ(to_json(train_config_from_json(to_json(t))), to_json(t));
  EXPECT_THROW(train_config_from_json(Json{{"learning_rate", 1}}), ConfigError);
  EXPECT_THROW(train_config_from_json(Json{{"batch_size", 0}}), ConfigError);

  const SynthSpec s = small_spec(4);
  EXPECT_EQ(to_json(synth_spec_from_json(to_json(s))), to_json(s));
  EXPECT_THROW(synth_spec_from_json(Json{{"families", {"circle"}}}), ConfigError);
}

TEST(Io, AnnotationAndPatchRoundTrip) {
  const fs::path dir = scratch("io");
  Annotation a;
  a.columns = 64;
  a.floor = room_to_boundaries(kRoom, {64, 32}).floor;
  a.floor->valid[5] = 0;
  a.shifted = true;
  a.pitch = 0.125;
  save_annotation((dir / "a.json").string(), a);
  const Annotation b = load_annotation((dir / "a.json").string());
  EXPECT_FALSE(b.ceiling.has_value());
  EXPECT_EQ(b.floor->lat, a.floor->lat);
  EXPECT_EQ(b.floor->valid, a.floor->valid);
  EXPECT_TRUE(b.shifted);
  EXPECT_DOUBLE_EQ(b.pitch, 0.125);
  EXPECT_EQ(b.pair().ceiling.valid_count(), 0);

  const Json corners = {{"columns", 32},
                        {"corners", {{"polygon", {{-2, -2}, {2, -2}, {2, 2}, {-2, 2}}}, {"cam_height", 1.6}, {"ceil_height", 3.0}}}};
  const Annotation c = annotation_from_json(corners);
  const BoundaryPair ref = corners_to_boundary(testutil::rectangle(-2, -2, 2, 2), 1.6, 3.0, {32, 16});
  EXPECT_EQ(c.floor->lat, ref.floor.lat);
  EXPECT_EQ(c.ceiling->lat, ref.ceiling.lat);

  const EquirectPatch p = project_perspective_to_equirect(testutil::smooth_image(32, 32, 1), {80, 32, 32},
                                                          deg2rad(-10.0), {128, 64});
  const EquirectPatch cropped = crop_to_span(p);
  save_patch((dir / "patch").string(), cropped);
  const EquirectPatch q = load_patch((dir / "patch").string());
  EXPECT_EQ(q.mask, cropped.mask);
  EXPECT_EQ(q.span, cropped.span);
  EXPECT_EQ(q.col_offset, cropped.col_offset);
  EXPECT_EQ(q.full_width, cropped.full_width);
  EXPECT_NEAR(q.pitch, cropped.pitch, 1e-12);
  for (std::size_t i = 0; i < q.pixels.data.size(); ++i) EXPECT_NEAR(q.pixels.data[i], cropped.pixels.data[i], 0.5 / 255 + 1e-6);

  EXPECT_THROW(load_image((dir / "missing.png").string()), DataError);
}

TEST(Dataset, ManifestValidation) {
  Manifest m;
  m.records.push_back({"a", Branch::kPano, "a.png", "a.json"});
  m.records.push_back({"a", Branch::kPano, "b.png", "b.json"});
  EXPECT_THROW(m.validate(), DataError);
  m.records[1].id = "b";
  m.validate();
  m.records.push_back({"c", Branch::kPerspective, "c.png", "c.json", 0.1, 0.0});
  EXPECT_THROW(m.validate(), DataError);
  m.records[2].hfov_deg = 90;
  m.records[2].split = "holdout";
  EXPECT_THROW(m.validate(), DataError);
  m.records[2].split = "test";
  m.validate();
  EXPECT_EQ(m.split("train").size(), 2u);
  EXPECT_EQ(m.split("test").size(), 1u);
  const Manifest r = manifest_from_json(to_json(m), "/data");
  EXPECT_EQ(r.resolve("x/y.png"), "/data/x/y.png");
  EXPECT_DOUBLE_EQ(r.records[2].pitch, 0.1);
}

TEST(Augment, SeedsAreStableAndDistinct) {
  EXPECT_EQ(sample_seed(1, "room000", 3), sample_seed(1, "room000", 3));
  EXPECT_NE(sample_seed(1, "room000", 3), sample_seed(1, "room000", 4));
  EXPECT_NE(sample_seed(1, "room000", 3), sample_seed(1, "room001", 3));
  EXPECT_NE(sample_seed(1, "room000", 3), sample_seed(2, "room000", 3));
}

TEST(Augment, TogglesOffIsIdentity) {
  const Sample s = synthetic_pano(kRoom, 128, 128);
  std::mt19937_64 rng(1);
  const Sample t = augment(s, {false, false, false, false}, rng);
  EXPECT_EQ(t.image.data, s.image.data);
  EXPECT_EQ(t.gt.floor.lat, s.gt.floor.lat);
  const Sample u = pano_stretch(s, 1.0, 1.0);
  EXPECT_EQ(u.image.data, s.image.data);
}

TEST(Augment, FlipIsInvolutionAndMatchesMirroredRoom) {
  const Sample s = synthetic_pano(kRoom, 128, 256);
  const Sample f = flip_sample(s);
  const Sample ff = flip_sample(f);
  EXPECT_EQ(ff.image.data, s.image.data);
  EXPECT_EQ(ff.gt.ceiling.lat, s.gt.ceiling.lat);
  RoomModel mirrored = kRoom;
  for (auto& p : mirrored.floorplan) p.x = -p.x;
  std::reverse(mirrored.floorplan.begin(), mirrored.floorplan.end());
  const BoundaryPair ref = room_to_boundaries(mirrored, {256, 128});
  expect_boundaries_near(f.gt.floor, ref.floor, 1e-12);
  expect_boundaries_near(f.gt.ceiling, ref.ceiling, 1e-12);
}

TEST(Augment, RotationMatchesYawedRoom) {
  const Sample s = synthetic_pano(kRoom, 128, 128);
  const Sample r = rotate_sample(s, 37);
  const BoundaryPair ref = room_to_boundaries(kRoom, {128, 64}, 37 * 2 * kPi / 128);
  EXPECT_EQ(r.gt.floor.lat, ref.floor.lat);
  EXPECT_EQ(r.gt.ceiling.lat, ref.ceiling.lat);
  EXPECT_EQ(r.image.at(10, 0, 0), s.image.at(10, 37, 0));
}

TEST(Augment, StretchMatchesStretchedRoom) {
  const int columns = 1024;
  const Sample s = synthetic_pano(kRoom, 64, columns);
  for (auto [kx, kz] : {std::pair{1.7, 1.0}, std::pair{0.6, 1.4}, std::pair{2.0, 0.5}}) {
    const Sample t = pano_stretch(s, kx, kz);
    RoomModel stretched = kRoom;
    for (auto& p : stretched.floorplan) p = {p.x * kx, p.y * kz};
    const BoundaryPair ref = room_to_boundaries(stretched, {columns, columns / 2});
    expect_boundaries_near(t.gt.floor, ref.floor, deg2rad(0.1));
    expect_boundaries_near(t.gt.ceiling, ref.ceiling, deg2rad(0.1));
  }
}

TEST(Augment, LuminanceClipsAndAugmentIsSeeded) {
  const Sample s = synthetic_pano(kRoom, 64, 64);
  const Sample b = scale_luminance(s, 2.0);
  for (std::size_t i = 0; i < s.image.data.size(); ++i)
    ASSERT_FLOAT_EQ(b.image.data[i], std::min(1.0f, s.image.data[i] * 2.0f));
  std::mt19937_64 r1(sample_seed(1, "p", 0)), r2(sample_seed(1, "p", 0));
  const AugmentToggles all;
  EXPECT_EQ(augment(s, all, r1).image.data, augment(s, all, r2).image.data);
  Sample pp = s;
  pp.domain = Branch::kPerspective;
  EXPECT_THROW(rotate_sample(pp, 3), DataError);
}

TEST(Horizon, Examples) {
  const int h = 512;
  ColumnBoundary c(BoundaryKind::kCeiling, {latitude_from_row(200, h), latitude_from_row(150, h)});
  ColumnBoundary f(BoundaryKind::kFloor, {latitude_from_row(300, h), latitude_from_row(350, h)});
  EXPECT_NEAR(horizon_from_gt(c, f, h).row, 250, 1e-9);
  ColumnBoundary cs(BoundaryKind::kCeiling, {0.4, 0.3});
  ColumnBoundary fs(BoundaryKind::kFloor, {-0.3, -0.4});
  const Horizon sym = horizon_from_gt(cs, fs, h);
  EXPECT_NEAR(sym.row, 256, 1e-9);
  EXPECT_NEAR(sym.pitch, 0, 1e-12);
  const Horizon hz = horizon_from_gt(c, f, h);
  const ColumnBoundary c2 = vertical_shift_rows(c, hz.pitch), f2 = vertical_shift_rows(f, hz.pitch);
  EXPECT_NEAR(horizon_from_gt(c2, f2, h).row, 256, 1e-9);
  ColumnBoundary none(BoundaryKind::kCeiling, {0.1}, {0});
  EXPECT_THROW(horizon_from_gt(none, f, h), DataError);
}

TEST(Synth, RestrictionOracleAtZeroPitch) {
  const int w = 256;
  const PinholeSpec pin{90, 64, 64};
  const BoundaryPair pano = room_to_boundaries(kRoom, {w, w / 2});
  const BoundaryPair pp = perspective_gt(kRoom, w, pin, 0.0, 0.0);
  const ColumnSpan span = informative_span(pin, {w, w / 2});
  int valid = 0;
  for (int i = 0; i < w; ++i) {
    const bool in_span = i >= span.lo && i < span.hi;
    if (!in_span) {
      EXPECT_EQ(pp.floor.valid[i], 0) << i;
      continue;
    }
    if (pp.floor.valid[i]) {
      ++valid;
      EXPECT_NEAR(pp.floor.lat[i], pano.floor.lat[i], 1e-6) << i;
    }
    if (pp.ceiling.valid[i]) EXPECT_NEAR(pp.ceiling.lat[i], pano.ceiling.lat[i], 1e-6) << i;
  }
  EXPECT_GT(valid, span.width() / 2);
}

TEST(Synth, PitchedViewRaysHitTheFloorLine) {
  const int w = 256;
  const PinholeSpec pin{70, 64, 64};
  const double above = kRoom.ceil_height - kRoom.cam_height;
  for (double pitch_deg : {-20.0, -10.0, 15.0}) {
    const double pitch = deg2rad(pitch_deg);
    const BoundaryPair pp = perspective_gt(kRoom, w, pin, pitch, 0.0);
    int checked = 0;
    for (const ColumnBoundary* b : {&pp.floor, &pp.ceiling}) {
      const double height = b->kind == BoundaryKind::kFloor ? -kRoom.cam_height : above;
      for (int i = 0; i < w; ++i) {
        if (!b->valid[i]) continue;
        // Undo the shift, then rotate the camera ray into the world.
        const Eigen::Vector3d d = pitch_rotation(pitch) *
                                  direction_from_lonlat(LonLat(column_longitude(i, w), b->lat[i] - pitch));
        const LonLat world = lonlat_from_direction(d);
        EXPECT_NEAR(world.lat, std::atan(height / wall_distance(kRoom.floorplan, world.lon)), 1e-6) << i;
        ++checked;
      }
    }
    EXPECT_GT(checked, 20) << pitch_deg;
  }
}

TEST(Synth, DeterministicOutput) {
  const fs::path a = scratch("synth_a"), b = scratch("synth_b");
  generate_synthetic(small_spec(11), a.string());
  generate_synthetic(small_spec(11), b.string());
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(b / fs::relative(e.path(), a))) << e.path();
  }
  EXPECT_EQ(files, 2 * 2 * 2 + 1);
}

TEST(Synth, RoomsSatisfyInvariants) {
  SynthSpec spec = small_spec(2);
  std::mt19937_64 rng(2);
  for (const auto& family : spec.families)
    for (int i = 0; i < 20; ++i) EXPECT_NO_THROW(sample_room(family, spec, rng).validate()) << family;
  spec.pitch_max = 80;
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(Pipeline, PreparedItemsMatchModelShapes) {
  const Manifest& m = small_dataset();
  const ModelConfig cfg = small_config();
  for (const auto& r : m.split("train")) {
    const Sample s = load_sample(m, r);
    for (bool shift : {true, false}) {
      const BatchItem it = prepare_item(s, cfg, shift);
      EXPECT_EQ(it.input.height, cfg.input_height);
      EXPECT_EQ(it.input.width, cfg.input_width(r.domain));
      EXPECT_EQ(it.gt.floor.columns(), cfg.pano_feature_width);
      if (r.domain == Branch::kPerspective) {
        for (int i = 0; i < cfg.pano_feature_width; ++i) {
          const bool inside = i >= cfg.pp_offset() && i < cfg.pp_offset() + cfg.pp_feature_width;
          EXPECT_EQ(it.mask[i], inside ? 1 : 0);
        }
        EXPECT_DOUBLE_EQ(it.applied_shift, shift ? s.pitch : 0.0);
      }
    }
    if (r.domain == Branch::kPerspective) {
      const BatchItem on = prepare_item(s, cfg, true), off = prepare_item(s, cfg, false);
      for (int i = 0; i < cfg.pano_feature_width; ++i)
        if (on.gt.floor.valid[i] && off.gt.floor.valid[i])
          EXPECT_NEAR(on.gt.floor.lat[i] - off.gt.floor.lat[i], s.pitch, 1e-9);
    }
  }
}

TEST(Train, ZeroLearningRateKeepsParameters) {
  TrainConfig t = small_train(3);
  t.adam.lr = 0;
  const TrainResult r = train(small_dataset(), t);
  const Model<float> init(t.model, t.seed);
  for (int i = 0; i < init.params().size(); ++i) EXPECT_EQ(r.checkpoint.params[i], init.params()[i]) << i;
  EXPECT_EQ(r.log.size(), 3u);
}

TEST(Train, PanoOnlyManifestHasNoPerspectiveLoss) {
  Manifest m = small_dataset();
  std::erase_if(m.records, [](const SampleRecord& r) { return r.domain == Branch::kPerspective; });
  const TrainResult r = train(m, small_train(4));
  for (const auto& s : r.log) {
    EXPECT_EQ(s.loss.l_pp, 0.0);
    EXPECT_DOUBLE_EQ(s.loss.l_total, s.loss.l_pano);
  }
}

TEST(Train, DeterministicAndWritesOutputs) {
  const fs::path a = scratch("train_a"), b = scratch("train_b");
  TrainConfig t = small_train(4);
  t.checkpoint_every = 2;
  const TrainResult ra = train(small_dataset(), t, a.string());
  const TrainResult rb = train(small_dataset(), t, b.string());
  EXPECT_EQ(slurp(a / "checkpoint.bin"), slurp(b / "checkpoint.bin"));
  EXPECT_EQ(slurp(a / "log.jsonl"), slurp(b / "log.jsonl"));
  EXPECT_TRUE(fs::exists(a / "checkpoint_000002.bin"));
  for (std::size_t i = 0; i < ra.log.size(); ++i) EXPECT_EQ(ra.log[i].ids, rb.log[i].ids);
  // Mixed batches draw from both domains.
  bool saw_pp = false;
  for (const auto& s : ra.log) saw_pp |= s.loss.l_pp > 0;
  EXPECT_TRUE(saw_pp);
}

TEST(Train, EmptySplitRejected) {
  TrainConfig t = small_train(1);
  t.split = "val";
  EXPECT_THROW(train(small_dataset(), t), DataError);
}

TEST(Evaluate, GroundTruthAgainstItself) {
  const BoundaryPair gt = room_to_boundaries(kRoom, {256, 128});
  const IoUReport p = score_pano(gt, gt);
  EXPECT_DOUBLE_EQ(p.iou2d, 1.0);
  EXPECT_DOUBLE_EQ(*p.iou3d, 1.0);
  BoundaryPair pp = gt;
  pp.ceiling.valid.assign(256, 0);
  const IoUReport q = score_pp(pp, pp, 128);
  EXPECT_DOUBLE_EQ(q.iou2d, 1.0);
  EXPECT_DOUBLE_EQ(*q.floor_iou, 1.0);
  EXPECT_FALSE(q.ceiling_iou.has_value());
}

TEST(Evaluate, DeterministicReport) {
  const Model<float> m(small_config(), 1);
  EvalOptions o;
  o.split = "train";
  const EvalReport a = evaluate(small_dataset(), m, o);
  const EvalReport b = evaluate(small_dataset(), m, o);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(a.pano_count, 2);
  EXPECT_EQ(a.pp_count, 2);
}

#ifdef ROOMLAYOUT_CLI
namespace {
int run_cli(const std::string& args) {
  const int rc = std::system((std::string(ROOMLAYOUT_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}
}  // namespace

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  EXPECT_EQ(run_cli("flops --config full"), 0);
  EXPECT_EQ(run_cli("flops --no-such-flag"), 2);
  std::ofstream(dir / "bad.json") << R"({"model": "toy", "lr": -1})";
  EXPECT_EQ(run_cli("train --manifest " + (dir / "none.json").string() + " --config " + (dir / "bad.json").string() +
                    " --out " + (dir / "out").string()),
            2);
  std::ofstream(dir / "ok.json") << R"({"model": "toy", "steps": 1})";
  EXPECT_EQ(run_cli("train --manifest " + (dir / "none.json").string() + " --config " + (dir / "ok.json").string() +
                    " --out " + (dir / "out").string()),
            3);
  save_image((dir / "img.png").string(), testutil::smooth_image(32, 32, 1));
  EXPECT_EQ(run_cli("project --img " + (dir / "img.png").string() + " --hfov 120 --pitch 40 --width 128 --out " +
                    (dir / "patch").string()),
            3);
  EXPECT_EQ(run_cli("project --img " + (dir / "img.png").string() + " --hfov 90 --pitch -15 --width 128 --out " +
                    (dir / "patch").string()),
            0);
  EXPECT_EQ(run_cli("shift --in " + (dir / "patch").string() + " --delta-lat -10deg --out " + (dir / "shifted").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "shifted" / "patch.json"));
}
#endif
