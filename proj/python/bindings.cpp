#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "roomenv/cli.hpp"
#include "roomenv/envelope.hpp"
#include "roomenv/ingest.hpp"
#include "roomenv/metrics.hpp"
#include "roomenv/normalstats.hpp"
#include "roomenv/synthgen.hpp"

namespace py = pybind11;
using namespace roomenv;

namespace {

using Points = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<Vec3> to_points(const Points& a) {
  if (a.ndim() != 2 || a.shape(1) != 3) throw Error(Errc::ShapeMismatch, "expected an (N, 3) array");
  std::vector<Vec3> out(static_cast<std::size_t>(a.shape(0)));
  auto r = a.unchecked<2>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) out[static_cast<std::size_t>(i)] = Vec3(r(i, 0), r(i, 1), r(i, 2));
  return out;
}

template <class T, int C>
py::array raster_array(const Raster<T, C>& r) {
  std::vector<py::ssize_t> shape{r.height, r.width};
  if (C > 1) shape.push_back(C);
  py::array_t<T> out(shape);
  std::copy(r.data.begin(), r.data.end(), out.mutable_data());
  return out;
}

py::array mask_array(const Mask& m) {
  py::array_t<bool> out({m.height, m.width});
  bool* d = out.mutable_data();
  for (std::size_t i = 0; i < m.data.size(); ++i) d[i] = m.data[i] != 0;
  return out;
}

py::dict camera_dict(const CameraModel& c) {
  py::dict d;
  d["width"] = c.width;
  d["height"] = c.height;
  d["fx"] = c.fx;
  d["fy"] = c.fy;
  d["cx"] = c.cx;
  d["cy"] = c.cy;
  d["convention"] = to_string(c.convention);
  py::array_t<double> m({4, 4});
  for (int r = 0; r < 4; ++r)
    for (int k = 0; k < 4; ++k) m.mutable_at(r, k) = c.world_to_camera(r, k);
  d["world_to_camera"] = m;
  return d;
}

py::dict frame_dict(const FrameBundle& f) {
  py::dict d;
  d["scene_id"] = f.scene_id;
  d["frame_id"] = f.frame_id;
  d["camera"] = camera_dict(f.camera);
  d["rgb"] = raster_array(f.rgb);
  d["pointmap"] = raster_array(f.pointmap);
  d["normals"] = raster_array(f.normals);
  d["labels"] = raster_array(f.labels);
  d["valid"] = mask_array(f.valid);
  return d;
}

py::dict envelope_dict(const EnvelopeSample& s, double eps_vis) {
  py::dict d;
  d["scene_id"] = s.scene_id;
  d["frame_id"] = s.frame_id;
  d["camera"] = camera_dict(s.camera);
  d["rgb"] = raster_array(s.rgb);
  d["visible_pointmap"] = raster_array(s.visible_pointmap);
  d["visible_valid"] = mask_array(s.visible_valid);
  d["layout_pointmap"] = raster_array(s.layout_pointmap);
  d["layout_valid"] = mask_array(s.layout_valid);
  d["layout_label"] = raster_array(s.layout_label);
  const VisibilityMap vis = classify_visibility(s, eps_vis);
  py::array_t<std::uint8_t> v({vis.height, vis.width});
  for (std::size_t i = 0; i < vis.data.size(); ++i) v.mutable_data()[i] = static_cast<std::uint8_t>(vis.data[i]);
  d["visibility"] = v;
  return d;
}

py::dict alignment_dict(const AlignmentResult& a) {
  py::dict d;
  d["scale"] = a.scale;
  d["z_shift"] = a.z_shift;
  d["residual_rms"] = a.residual_rms;
  d["count"] = a.count;
  return d;
}

ChamferMode chamfer_mode(const std::string& s) {
  if (s == "bidirectional") return ChamferMode::Bidirectional;
  if (s == "a_to_b") return ChamferMode::AtoB;
  if (s == "b_to_a") return ChamferMode::BtoA;
  throw Error(Errc::InvalidArgument, "unknown chamfer mode '" + s + "'");
}

}  // namespace

PYBIND11_MODULE(_roomenv, m) {
  m.doc() = "Room envelope construction, evaluation and synthetic fixtures";

  static py::exception<Error> exc(m, "RoomenvError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetObject(exc.ptr(), py::make_tuple(e.what(), to_string(e.code())).ptr());
    }
  });

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"roomenv"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run one CLI subcommand; returns (exit_code, stdout, stderr).");

  m.def(
      "make_preset",
      [](const std::string& name, std::uint64_t seed) {
        std::vector<std::string> out;
        for (const auto& s : make_preset(name, seed)) out.push_back(scene_to_json(s));
        return out;
      },
      py::arg("name"), py::arg("seed") = 0, "Scene JSON strings of a builtin preset.");

  m.def(
      "render_frame",
      [](const std::string& scene_json, std::size_t cam_index) {
        return frame_dict(render_frame(scene_from_json(scene_json), cam_index));
      },
      py::arg("scene_json"), py::arg("cam_index"));

  m.def(
      "oracle_envelope",
      [](const std::string& scene_json, std::size_t cam_index, double eps_vis) {
        return envelope_dict(oracle_envelope(scene_from_json(scene_json), cam_index), eps_vis);
      },
      py::arg("scene_json"), py::arg("cam_index"), py::arg("eps_vis") = 0.05);

  m.def(
      "read_frame", [](const std::string& dir) { return frame_dict(read_frame(dir)); }, py::arg("dir"));
  m.def(
      "read_envelope",
      [](const std::string& dir, double eps_vis) { return envelope_dict(read_envelope(dir), eps_vis); },
      py::arg("dir"), py::arg("eps_vis") = 0.05);

  m.def(
      "align_scale_shift",
      [](const Points& pred, const Points& gt) {
        const auto p = to_points(pred), g = to_points(gt);
        return alignment_dict(align_scale_shift(p, g));
      },
      py::arg("pred"), py::arg("gt"));

  m.def(
      "chamfer",
      [](const Points& a, const Points& b, const std::string& mode) {
        return chamfer(to_points(a), to_points(b), chamfer_mode(mode));
      },
      py::arg("a"), py::arg("b"), py::arg("mode") = "bidirectional");

  m.def(
      "f_score",
      [](const Points& pred, const Points& gt, double threshold) {
        const FScore f = f_score(to_points(pred), to_points(gt), threshold);
        return py::make_tuple(f.precision, f.recall, f.f);
      },
      py::arg("pred"), py::arg("gt"), py::arg("threshold"), "Returns (precision, recall, f).");

  m.def(
      "vmf_density",
      [](const Points& centers, double kappa, const Points& queries) {
        const VmfKde kde(to_points(centers), kappa);
        const auto q = to_points(queries);
        py::array_t<double> out(static_cast<py::ssize_t>(q.size()));
        for (std::size_t i = 0; i < q.size(); ++i) out.mutable_data()[i] = kde.density(q[i]);
        return out;
      },
      py::arg("centers"), py::arg("kappa"), py::arg("queries"));

  m.def(
      "estimate_normals",
      [](py::array_t<float, py::array::c_style | py::array::forcecast> points,
         py::array_t<bool, py::array::c_style | py::array::forcecast> valid) {
        if (points.ndim() != 3 || points.shape(2) != 3 || valid.ndim() != 2 || valid.shape(0) != points.shape(0) ||
            valid.shape(1) != points.shape(1)) {
          throw Error(Errc::ShapeMismatch, "expected (H, W, 3) points and an (H, W) mask");
        }
        const int h = static_cast<int>(points.shape(0)), w = static_cast<int>(points.shape(1));
        Pointmap pm(w, h);
        std::copy(points.data(), points.data() + pm.data.size(), pm.data.begin());
        Mask mk(w, h);
        for (std::size_t i = 0; i < mk.data.size(); ++i) mk.data[i] = valid.data()[i] ? 1 : 0;
        const NormalMap n = estimate_normals(pm, mk);
        return py::make_tuple(raster_array(n.normals), mask_array(n.valid));
      },
      py::arg("points"), py::arg("valid"), "Camera-facing unit normals and their validity.");
}
