// roomlayout command-line tool.
//
// Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numeric failure.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "roomlayout/checkpoint.hpp"
#include "roomlayout/errors.hpp"
#include "roomlayout/evaluate.hpp"
#include "roomlayout/io.hpp"
#include "roomlayout/synth.hpp"
#include "roomlayout/train.hpp"

using namespace roomlayout;
namespace fs = std::filesystem;

namespace {

/// "-10deg", "0.2rad" or a bare number in degrees.
double parse_angle(const std::string& text) {
  std::size_t used = 0;
  double v;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("invalid angle: " + text);
  }
  const std::string unit = text.substr(used);
  if (unit.empty() || unit == "deg") return deg2rad(v);
  if (unit == "rad") return v;
  throw ConfigError("invalid angle unit in " + text);
}

ModelConfig load_model_config(const std::string& arg) {
  if (arg == "full" || arg == "toy" || arg == "tiny") return model_preset(arg);
  const Json j = read_json_file(arg);
  if (j.is_object() && j.contains("model")) return model_config_from_json(j.at("model"));
  return model_config_from_json(j);
}

void print_flops(const ModelConfig& cfg) {
  Json out = Json::object();
  FlopsReport r[2];
  for (Branch b : {Branch::kPano, Branch::kPerspective}) {
    r[b == Branch::kPano ? 0 : 1] = count_flops(cfg, b);
    const FlopsReport& f = r[b == Branch::kPano ? 0 : 1];
    out[to_string(b)] = {{"input", {cfg.input_height, cfg.input_width(b)}},
                         {"backbone_gflops", f.backbone_flops / 1e9},
                         {"conv1d_gflops", f.conv1d_flops / 1e9},
                         {"backbone_mem_mb", f.backbone_mem / (1 << 20)},
                         {"conv1d_mem_mb", f.conv1d_mem / (1 << 20)}};
  }
  const auto ratio = [](double a, double b) { return b > 0 ? a / b : 0.0; };
  out["pp_over_pano"] = {{"backbone_flops", ratio(r[1].backbone_flops, r[0].backbone_flops)},
                         {"conv1d_flops", ratio(r[1].conv1d_flops, r[0].conv1d_flops)},
                         {"backbone_mem", ratio(r[1].backbone_mem, r[0].backbone_mem)},
                         {"conv1d_mem", ratio(r[1].conv1d_mem, r[0].conv1d_mem)}};
  out["convention"] = "2 FLOPs per multiply-accumulate; memory = float32 output activations";
  std::cout << out.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Room layout estimation from panoramas and perspective images"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Render a synthetic dataset");
  std::string synth_spec, synth_out;
  std::optional<std::uint64_t> synth_seed;
  synth->add_option("--spec", synth_spec, "SynthSpec JSON")->required();
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_seed, "Overrides the SynthSpec seed");

  // project
  auto* project = app.add_subcommand("project", "Map a perspective image onto the equirectangular grid");
  std::string proj_img, proj_out, proj_mode = "translate", proj_pitch = "0";
  double proj_hfov = 90;
  int proj_width = 1024;
  bool proj_crop = false;
  project->add_option("--img", proj_img, "Perspective image")->required();
  project->add_option("--hfov", proj_hfov, "Horizontal field of view, degrees")->required();
  project->add_option("--pitch", proj_pitch, "Camera pitch (degrees, or with deg/rad suffix)");
  project->add_option("--width", proj_width, "Equirectangular width (height = width / 2)");
  project->add_option("--mode", proj_mode, "translate | rotate")->check(CLI::IsMember({"translate", "rotate"}));
  project->add_flag("--crop", proj_crop, "Crop to the informative column span");
  project->add_option("--out", proj_out, "Output patch directory")->required();

  // shift
  auto* shift = app.add_subcommand("shift", "Vertically shift a patch");
  std::string shift_in, shift_out, shift_delta;
  shift->add_option("--in", shift_in, "Patch directory")->required();
  shift->add_option("--delta-lat", shift_delta, "Latitude shift, e.g. -10deg")->required()->allow_extra_args(false);
  shift->add_option("--out", shift_out, "Output patch directory (default: overwrite input)");

  // train
  auto* trn = app.add_subcommand("train", "Train a model");
  std::string train_manifest, train_config, train_out;
  std::optional<std::uint64_t> train_seed;
  std::optional<int> train_steps;
  trn->add_option("--manifest", train_manifest, "Manifest JSON")->required();
  trn->add_option("--config", train_config, "TrainConfig JSON")->required();
  trn->add_option("--out", train_out, "Output directory")->required();
  trn->add_option("--seed", train_seed, "Overrides the config seed");
  trn->add_option("--steps", train_steps, "Overrides the number of steps");

  // eval
  auto* evl = app.add_subcommand("eval", "Evaluate a checkpoint or two boundary files");
  std::string eval_manifest, eval_ckpt, eval_report, eval_overlay, eval_split = "test", eval_pred, eval_gt,
      eval_domain = "pano";
  int eval_height = 512;
  evl->add_option("--manifest", eval_manifest, "Manifest JSON");
  evl->add_option("--ckpt", eval_ckpt, "Checkpoint file");
  evl->add_option("--split", eval_split, "Split to evaluate");
  evl->add_option("--pred", eval_pred, "Predicted boundary annotation JSON");
  evl->add_option("--gt", eval_gt, "Ground-truth boundary annotation JSON");
  evl->add_option("--domain", eval_domain, "pano | pp (with --pred/--gt)")->check(CLI::IsMember({"pano", "pp"}));
  evl->add_option("--height", eval_height, "Image height for pp region IoU (with --pred/--gt)");
  evl->add_option("--report", eval_report, "Output report JSON (default: stdout)");
  evl->add_option("--overlay", eval_overlay, "Directory for overlay PNGs");

  // flops
  auto* flops = app.add_subcommand("flops", "Analytic FLOPs and activation memory");
  std::string flops_config = "full";
  flops->add_option("--config", flops_config, "Model/train config JSON or preset name (full, toy, tiny)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*synth) {
      SynthSpec spec = synth_spec_from_json(read_json_file(synth_spec));
      if (synth_seed) spec.seed = *synth_seed;
      const Manifest m = generate_synthetic(spec, synth_out);
      std::cout << "wrote " << m.records.size() << " records to " << synth_out << "\n";
    } else if (*project) {
      const Image img = load_image(proj_img);
      const PinholeSpec pinhole{proj_hfov, img.width, img.height};
      const EquirectSpec spec{proj_width, proj_width / 2};
      EquirectPatch patch = project_perspective_to_equirect(
          img, pinhole, parse_angle(proj_pitch), spec, proj_mode == "rotate" ? ShiftMode::kRotate : ShiftMode::kTranslate);
      if (proj_crop) patch = crop_to_span(patch);
      save_patch(proj_out, patch);
      std::cout << "span [" << patch.span.lo << ", " << patch.span.hi << ") of " << patch.width() << " columns\n";
    } else if (*shift) {
      const EquirectPatch in = load_patch(shift_in);
      const EquirectPatch out = vertical_shift_rows(in, parse_angle(shift_delta));
      save_patch(shift_out.empty() ? shift_in : shift_out, out);
    } else if (*trn) {
      TrainConfig cfg = train_config_from_json(read_json_file(train_config));
      if (train_seed) cfg.seed = *train_seed;
      if (train_steps) cfg.steps = *train_steps;
      const Manifest m = load_manifest(train_manifest);
      const auto result = train(m, cfg, train_out, [](const StepLog& s) {
        if (s.step % 10 == 0) std::cerr << "step " << s.step << " loss " << s.loss.l_total << "\n";
      });
      std::cout << "trained " << result.checkpoint.step << " steps; checkpoint "
                << (fs::path(train_out) / "checkpoint.bin").string() << "\n";
    } else if (*evl) {
      Json report;
      if (!eval_pred.empty() || !eval_gt.empty()) {
        if (eval_pred.empty() || eval_gt.empty()) throw ConfigError("--pred and --gt must be given together");
        const Annotation pred = load_annotation(eval_pred), gt = load_annotation(eval_gt);
        if (pred.columns != gt.columns) throw DataError("pred and gt column counts differ");
        report = to_json(eval_domain == "pano" ? score_pano(pred.pair(), gt.pair())
                                               : score_pp(pred.pair(), gt.pair(), eval_height));
      } else {
        if (eval_manifest.empty() || eval_ckpt.empty())
          throw ConfigError("eval needs --manifest and --ckpt, or --pred and --gt");
        const Checkpoint ckpt = load_checkpoint(eval_ckpt);
        const Model<float> model(ckpt.config, ckpt.params);
        EvalOptions opt;
        opt.split = eval_split;
        opt.overlay_dir = eval_overlay;
        if (ckpt.extra.contains("train")) {
          opt.vertical_shift = ckpt.extra["train"].value("vertical_shift", true);
          opt.cam_height = ckpt.extra["train"].value("cam_height", 1.6);
        }
        report = to_json(evaluate(load_manifest(eval_manifest), model, opt));
      }
      if (eval_report.empty()) {
        std::cout << report.dump(2) << "\n";
      } else {
        write_json_file(eval_report, report);
      }
    } else if (*flops) {
      print_flops(load_model_config(flops_config));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
