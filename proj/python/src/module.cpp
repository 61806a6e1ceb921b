#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "roomlayout/checkpoint.hpp"
#include "roomlayout/config.hpp"
#include "roomlayout/errors.hpp"
#include "roomlayout/evaluate.hpp"
#include "roomlayout/losses.hpp"
#include "roomlayout/metrics.hpp"
#include "roomlayout/model.hpp"
#include "roomlayout/sphere_geometry.hpp"
#include "roomlayout/synth.hpp"
#include "roomlayout/train.hpp"

namespace py = pybind11;
using namespace roomlayout;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using MaskArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Image to_image(const FloatArray& a) {
  if (a.ndim() != 3 && a.ndim() != 2) throw DataError("image must be H x W or H x W x C");
  Image img(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1);
  std::memcpy(img.data.data(), a.data(), img.data.size() * sizeof(float));
  return img;
}

py::array_t<float> from_image(const Image& img) {
  py::array_t<float> out({img.height, img.width, img.channels});
  std::memcpy(out.mutable_data(), img.data.data(), img.data.size() * sizeof(float));
  return out;
}

std::vector<double> to_vector(const DoubleArray& a) { return {a.data(), a.data() + a.size()}; }

py::array_t<double> from_vector(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

py::array_t<bool> from_mask(const std::vector<std::uint8_t>& m) {
  py::array_t<bool> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out.mutable_data()[i] = m[i] != 0;
  return out;
}

std::vector<Point2> to_polygon(const DoubleArray& a) {
  if (a.ndim() != 2 || a.shape(1) != 2) throw DataError("polygon must be an N x 2 array");
  std::vector<Point2> pts;
  for (py::ssize_t i = 0; i < a.shape(0); ++i) pts.push_back({a.at(i, 0), a.at(i, 1)});
  return pts;
}

py::array_t<double> from_polygon(const std::vector<Point2>& pts) {
  py::array_t<double> out({static_cast<py::ssize_t>(pts.size()), py::ssize_t{2}});
  for (std::size_t i = 0; i < pts.size(); ++i) {
    out.mutable_at(i, 0) = pts[i].x;
    out.mutable_at(i, 1) = pts[i].y;
  }
  return out;
}

ColumnBoundary to_boundary(BoundaryKind kind, const DoubleArray& lat, const std::optional<MaskArray>& valid) {
  ColumnBoundary b(kind, to_vector(lat));
  if (valid) {
    if (valid->size() != lat.size()) throw DataError("valid mask and latitudes differ in length");
    b.valid.assign(valid->data(), valid->data() + valid->size());
  }
  return b;
}

BoundaryPair to_pair(const py::dict& d) {
  auto opt_mask = [&](const char* key) -> std::optional<MaskArray> {
    if (!d.contains(key) || d[key].is_none()) return std::nullopt;
    return d[key].cast<MaskArray>();
  };
  return {to_boundary(BoundaryKind::kCeiling, d["ceiling"].cast<DoubleArray>(), opt_mask("ceiling_valid")),
          to_boundary(BoundaryKind::kFloor, d["floor"].cast<DoubleArray>(), opt_mask("floor_valid"))};
}

py::dict from_pair(const BoundaryPair& b) {
  py::dict d;
  d["ceiling"] = from_vector(b.ceiling.lat);
  d["floor"] = from_vector(b.floor.lat);
  d["ceiling_valid"] = from_mask(b.ceiling.valid);
  d["floor_valid"] = from_mask(b.floor.valid);
  return d;
}

py::dict from_breakdown(const LossBreakdown& b) {
  py::dict d;
  d["l_b"] = b.l_b;
  d["l_d"] = b.l_d;
  d["l_n"] = b.l_n;
  d["l_g"] = b.l_g;
  d["l_pano"] = b.l_pano;
  d["l_pp"] = b.l_pp;
  d["l_total"] = b.l_total;
  return d;
}

ShiftMode shift_mode(const std::string& s) {
  if (s == "translate") return ShiftMode::kTranslate;
  if (s == "rotate") return ShiftMode::kRotate;
  throw ConfigError("mode must be 'translate' or 'rotate'");
}

ModelConfig model_config(const std::string& preset_or_json) {
  if (!preset_or_json.empty() && preset_or_json.front() == '{')
    return model_config_from_json(Json::parse(preset_or_json));
  return model_preset(preset_or_json);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Column-wise room layout estimation from panoramas and perspective images.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());

  py::class_<EquirectPatch>(m, "Patch")
      .def_property_readonly("pixels", [](const EquirectPatch& p) { return from_image(p.pixels); })
      .def_property_readonly("mask", [](const EquirectPatch& p) {
        py::array_t<bool> out({p.height(), p.width()});
        for (std::size_t i = 0; i < p.mask.size(); ++i) out.mutable_data()[i] = p.mask[i] != 0;
        return out;
      })
      .def_property_readonly("span", [](const EquirectPatch& p) { return py::make_tuple(p.span.lo, p.span.hi); })
      .def_readonly("full_width", &EquirectPatch::full_width)
      .def_readonly("col_offset", &EquirectPatch::col_offset)
      .def_readonly("pitch", &EquirectPatch::pitch)
      .def_readonly("hfov_deg", &EquirectPatch::hfov_deg)
      .def("crop_to_span", [](const EquirectPatch& p) { return crop_to_span(p); })
      .def("uncrop", [](const EquirectPatch& p) { return uncrop(p); });

  m.def(
      "informative_span",
      [](double hfov_deg, int width) {
        const ColumnSpan s = informative_span(hfov_deg, EquirectSpec{width, width / 2});
        return py::make_tuple(s.lo, s.hi);
      },
      py::arg("hfov_deg"), py::arg("width"));

  m.def(
      "project",
      [](const FloatArray& image, double hfov_deg, double pitch, int width, const std::string& mode) {
        const Image img = to_image(image);
        const PinholeSpec pin{hfov_deg, img.width, img.height};
        return project_perspective_to_equirect(img, pin, pitch, EquirectSpec{width, width / 2}, shift_mode(mode));
      },
      py::arg("image"), py::arg("hfov_deg"), py::arg("pitch") = 0.0, py::arg("width") = 1024,
      py::arg("mode") = "translate", "Perspective image onto the equirectangular grid; pitch in radians.");

  m.def(
      "reproject",
      [](const EquirectPatch& patch, double hfov_deg, int width, int height, double pitch, const std::string& mode) {
        return from_image(
            reproject_equirect_to_perspective(patch, PinholeSpec{hfov_deg, width, height}, pitch, shift_mode(mode)));
      },
      py::arg("patch"), py::arg("hfov_deg"), py::arg("width"), py::arg("height"), py::arg("pitch") = 0.0,
      py::arg("mode") = "translate");

  m.def(
      "vertical_shift", [](const EquirectPatch& p, double delta_lat) { return vertical_shift_rows(p, delta_lat); },
      py::arg("patch"), py::arg("delta_lat"));

  m.def(
      "room_to_boundaries",
      [](const DoubleArray& polygon, double cam_height, double ceil_height, int width, double yaw) {
        return from_pair(room_to_boundaries(RoomModel{to_polygon(polygon), cam_height, ceil_height},
                                            EquirectSpec{width, width / 2}, yaw));
      },
      py::arg("polygon"), py::arg("cam_height"), py::arg("ceil_height"), py::arg("width"), py::arg("yaw") = 0.0);

  m.def(
      "floor_depth",
      [](const DoubleArray& floor, double cam_height) {
        return from_vector(floor_boundary_to_depth(ColumnBoundary(BoundaryKind::kFloor, to_vector(floor)), cam_height).d);
      },
      py::arg("floor"), py::arg("cam_height"));

  m.def(
      "floorplan",
      [](const DoubleArray& floor, double cam_height) {
        return from_polygon(boundaries_to_floorplan(
            floor_boundary_to_depth(ColumnBoundary(BoundaryKind::kFloor, to_vector(floor)), cam_height)));
      },
      py::arg("floor"), py::arg("cam_height"));

  m.def(
      "polygon_iou",
      [](const DoubleArray& pred, const DoubleArray& gt) { return polygon_iou_2d(to_polygon(pred), to_polygon(gt)); },
      py::arg("pred"), py::arg("gt"));

  m.def(
      "iou_3d",
      [](const DoubleArray& pred, double pred_height, const DoubleArray& gt, double gt_height) {
        return iou_3d(to_polygon(pred), pred_height, to_polygon(gt), gt_height);
      },
      py::arg("pred"), py::arg("pred_height"), py::arg("gt"), py::arg("gt_height"));

  m.def(
      "image_region_iou",
      [](const std::string& kind, const DoubleArray& pred, const DoubleArray& gt, int height,
         std::optional<MaskArray> pred_valid, std::optional<MaskArray> gt_valid) {
        const BoundaryKind k = boundary_kind_from_string(kind);
        return image_region_iou(k, to_boundary(k, pred, pred_valid), to_boundary(k, gt, gt_valid), height);
      },
      py::arg("kind"), py::arg("pred"), py::arg("gt"), py::arg("height"), py::arg("pred_valid") = py::none(),
      py::arg("gt_valid") = py::none());

  m.def(
      "score_pano", [](const py::dict& pred, const py::dict& gt, double cam_height) {
        return to_json(score_pano(to_pair(pred), to_pair(gt), cam_height)).dump();
      },
      py::arg("pred"), py::arg("gt"), py::arg("cam_height") = 1.6);

  m.def(
      "loss_pano",
      [](const py::dict& pred, const py::dict& gt, const std::string& weights, double cam_height) {
        return from_breakdown(
            loss_pano(to_pair(pred), to_pair(gt), loss_weights_from_json(Json::parse(weights)), cam_height));
      },
      py::arg("pred"), py::arg("gt"), py::arg("weights") = "{}", py::arg("cam_height") = 1.6);

  m.def(
      "loss_pp",
      [](const py::dict& pred, const py::dict& gt, const MaskArray& mask, const std::string& weights) {
        return from_breakdown(loss_pp(to_pair(pred), to_pair(gt), {mask.data(), mask.data() + mask.size()},
                                      loss_weights_from_json(Json::parse(weights))));
      },
      py::arg("pred"), py::arg("gt"), py::arg("mask"), py::arg("weights") = "{}");

  m.def(
      "count_flops",
      [](const std::string& config, const std::string& branch) {
        const FlopsReport r = count_flops(model_config(config), branch_from_string(branch));
        py::dict d;
        d["backbone_flops"] = r.backbone_flops;
        d["conv1d_flops"] = r.conv1d_flops;
        d["backbone_mem"] = r.backbone_mem;
        d["conv1d_mem"] = r.conv1d_mem;
        return d;
      },
      py::arg("config"), py::arg("branch"));

  py::class_<Model<float>>(m, "Model")
      .def(py::init([](const std::string& config, std::uint64_t seed) { return Model<float>(model_config(config), seed); }),
           py::arg("config") = "toy", py::arg("seed") = 0)
      .def_static(
          "load",
          [](const std::string& path) {
            Checkpoint c = load_checkpoint(path);
            return Model<float>(c.config, std::move(c.params));
          },
          py::arg("path"))
      .def_property_readonly("config", [](const Model<float>& m) { return to_json(m.config()).dump(); })
      .def_property_readonly("parameter_count", [](const Model<float>& m) { return m.params().scalar_count(); })
      .def(
          "forward",
          [](const Model<float>& m, const FloatArray& image, const std::string& branch) {
            Prediction p;
            const Image img = to_image(image);
            {
              py::gil_scoped_release release;
              p = m.forward(img, branch_from_string(branch));
            }
            return py::make_tuple(from_vector(p.ceiling), from_vector(p.floor));
          },
          py::arg("image"), py::arg("branch") = "pano");

  m.def(
      "synthesize",
      [](const std::string& spec, const std::string& out_dir) {
        py::gil_scoped_release release;
        generate_synthetic(synth_spec_from_json(Json::parse(spec)), out_dir);
      },
      py::arg("spec"), py::arg("out_dir"));

  m.def(
      "train",
      [](const std::string& manifest, const std::string& config, const std::string& out_dir) {
        const Manifest man = load_manifest(manifest);
        const TrainConfig cfg = train_config_from_json(Json::parse(config));
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(man, cfg, out_dir);
        }
        Json log = Json::array();
        for (const auto& s : r.log) log.push_back(to_json(s));
        return log.dump();
      },
      py::arg("manifest"), py::arg("config"), py::arg("out_dir") = "");

  m.def(
      "evaluate",
      [](const std::string& manifest, const std::string& checkpoint, const std::string& split) {
        const Manifest man = load_manifest(manifest);
        Checkpoint c = load_checkpoint(checkpoint);
        EvalOptions opt;
        opt.split = split;
        if (c.extra.contains("train")) {
          opt.vertical_shift = c.extra["train"].value("vertical_shift", true);
          opt.cam_height = c.extra["train"].value("cam_height", 1.6);
        }
        const Model<float> model(c.config, std::move(c.params));
        EvalReport r;
        {
          py::gil_scoped_release release;
          r = evaluate(man, model, opt);
        }
        return to_json(r).dump();
      },
      py::arg("manifest"), py::arg("checkpoint"), py::arg("split") = "test");
}
