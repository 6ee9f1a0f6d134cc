// python/_nebula.cc

// Copyright 2026  The Nebula Authors

// See COPYING at the top of the tree for authorship details
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "nebula/error.h"
#include "nebula/features.h"
#include "nebula/metrics.h"
#include "nebula/model.h"
#include "nebula/pipeline.h"
#include "nebula/signal.h"

namespace py = pybind11;
using namespace nebula;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Waveform to_waveform(const Array &samples, int fs) {
  if (samples.ndim() != 1) throw InvalidArgument("samples must be one-dimensional");
  Waveform w{std::vector<double>(samples.data(), samples.data() + samples.size()), fs};
  validate(w);
  return w;
}

Array to_array(const std::vector<double> &v) {
  Array a(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

Array map_array(const LikelihoodMap &m) {
  Array a({static_cast<py::ssize_t>(m.values.rows()), static_cast<py::ssize_t>(m.values.cols())});
  auto r = a.mutable_unchecked<2>();
  for (Eigen::Index i = 0; i < m.values.rows(); ++i)
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) r(i, j) = m.values(i, j);
  return a;
}

py::dict analyze_py(const ModelBank &bank, const Array &samples, int fs, double f_min,
                    double f_max, double hop, bool dither, std::uint64_t seed, bool with_map) {
  Waveform w = to_waveform(samples, fs);
  AnalyzeOptions o;
  o.f_min = f_min;
  o.f_max = f_max;
  o.t_hop = hop;
  o.dither = dither;
  o.seed = seed;
  AnalysisResult r;
  {
    py::gil_scoped_release release;
    r = analyze(bank, w, o);
  }
  std::vector<double> t, f0, peak;
  py::array_t<bool> voiced(std::vector<py::ssize_t>{static_cast<py::ssize_t>(r.voiced.size())});
  for (std::size_t i = 0; i < r.voiced.size(); ++i) {
    t.push_back(r.clock.time(i));
    f0.push_back(r.track.trajectory[i].f0);
    peak.push_back(r.track.trajectory[i].peak_loglik);
    voiced.mutable_data()[i] = r.voiced[i];
  }
  py::dict out;
  out["time"] = to_array(t);
  out["f0"] = to_array(f0);
  out["voiced"] = voiced;
  out["peak_loglik"] = to_array(peak);
  if (with_map) {
    out["map"] = map_array(r.track.map);
    out["smoothed_map"] = map_array(r.track.smoothed);
    out["bins"] = to_array(r.track.map.grid.centres());
  }
  return out;
}

PitchTrack to_track(const Array &time, const Array &f0, py::object voiced) {
  if (time.size() != f0.size()) throw InvalidArgument("time and f0 differ in length");
  PitchTrack t;
  std::vector<bool> v;
  if (!voiced.is_none()) {
    auto va = py::array_t<bool, py::array::forcecast>::ensure(voiced);
    if (!va || va.size() != f0.size()) throw InvalidArgument("voiced has the wrong length");
    for (py::ssize_t i = 0; i < va.size(); ++i) v.push_back(va.data()[i]);
  }
  for (py::ssize_t i = 0; i < time.size(); ++i) {
    bool vi = v.empty() ? f0.data()[i] > 0 : v[i];
    t.frames.push_back({time.data()[i], f0.data()[i], vi, 0});
  }
  return t;
}

}  // namespace

PYBIND11_MODULE(_nebula, m) {
  m.doc() = "F0 and voicing estimation with mixture models trained on synthetic data";

  py::register_exception<Error>(m, "NebulaError", PyExc_RuntimeError);
  py::register_exception<ModelError>(m, "ModelError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);

  m.def(
      "load_wav",
      [](const std::string &path) {
        Waveform w = load_wav(path);
        return py::make_tuple(to_array(w.samples), w.fs);
      },
      py::arg("path"), "Reads a WAV file as mono float samples; returns (samples, fs).");

  m.def(
      "filterbank",
      [](double f_lo, double f_hi, int n) {
        std::vector<std::pair<double, double>> out;
        for (const ChannelSpec &c : make_filterbank(f_lo, f_hi, n)) out.emplace_back(c.fc, c.window_len);
        return out;
      },
      py::arg("f_lo") = 40.0, py::arg("f_hi") = 1000.0, py::arg("n") = 36,
      "List of (centre Hz, window s) for a log-spaced filterbank.");

  m.def(
      "snr_if",
      [](const Array &samples, int fs, double t, double f_probe, double window_len) {
        SnrIf r = estimate_snr_if(to_waveform(samples, fs), t, f_probe, window_len);
        return py::make_tuple(r.snr_db, r.if_hz);
      },
      py::arg("samples"), py::arg("fs"), py::arg("t"), py::arg("f_probe"), py::arg("window_len"),
      "(SNR dB, instantaneous frequency Hz) of the sinusoid nearest f_probe at time t.");

  py::class_<ModelBank>(m, "Model")
      .def_static("load", &load_bank, py::arg("path"))
      .def_static(
          "train",
          [](std::uint64_t seed, std::size_t n_samples, int components, double f_min,
             double f_max, std::size_t cal_frames) {
            TrainOptions o;
            o.seed = seed;
            o.n_samples = n_samples;
            o.components = components;
            o.grid = FrequencyGrid(f_min, f_max);
            o.calibration_frames = cal_frames;
            o.unvoiced_frames = cal_frames;
            py::gil_scoped_release release;
            return train_model(o);
          },
          py::arg("seed") = 1, py::arg("n_samples") = 100000, py::arg("components") = 16,
          py::arg("f_min") = 55.0, py::arg("f_max") = 400.0, py::arg("cal_frames") = 2000)
      .def("save", [](const ModelBank &b, const std::string &path) { save_bank(b, path); },
           py::arg("path"))
      .def("to_json", &serialize_bank)
      .def_property_readonly("n_channels", [](const ModelBank &b) { return b.channels.size(); })
      .def_property_readonly("components", [](const ModelBank &b) { return b.training.components; })
      .def_property_readonly("calibrated", &ModelBank::calibrated)
      .def_property_readonly("search_range",
                             [](const ModelBank &b) { return py::make_tuple(b.grid.f_min(), b.grid.f_max()); })
      .def_property_readonly("unvoiced",
                             [](const ModelBank &b) { return py::make_tuple(b.unvoiced.mean, b.unvoiced.var); })
      .def(
          "calibrate",
          [](ModelBank &b, double f_min, double f_max, std::uint64_t seed, std::size_t frames) {
            py::gil_scoped_release release;
            calibrate_bank(b, FrequencyGrid(f_min, f_max), frames, frames, seed);
          },
          py::arg("f_min") = 55.0, py::arg("f_max") = 400.0, py::arg("seed") = 1,
          py::arg("frames") = 2000)
      .def("analyze", &analyze_py, py::arg("samples"), py::arg("fs"), py::arg("f_min") = 55.0,
           py::arg("f_max") = 400.0, py::arg("hop") = kDefaultHop, py::arg("dither") = true,
           py::arg("seed") = 1, py::arg("with_map") = false,
           "Tracks F0 and voicing; returns a dict of per-frame arrays.");

  m.def(
      "evaluate",
      [](const Array &est_time, const Array &est_f0, py::object est_voiced, const Array &ref_time,
         const Array &ref_f0, py::object ref_voiced) {
        PitchTrack est = to_track(est_time, est_f0, est_voiced);
        PitchTrack ref = to_track(ref_time, ref_f0, ref_voiced);
        if (ref.frames.size() > 1 && est.frames.size() > 1 &&
            std::abs(est.hop() - ref.hop()) > 1e-9 * ref.hop())
          est = resample_track(est, ref.hop(), ref.frames.front().time);
        EvalReport r = evaluate(est, ref);
        py::dict d;
        d["ffe"] = r.ffe;
        d["gpe"] = r.gpe;
        d["vde"] = r.vde;
        d["vde_v"] = r.vde_v;
        d["vde_u"] = r.vde_u;
        d["frames"] = r.total;
        return d;
      },
      py::arg("est_time"), py::arg("est_f0"), py::arg("est_voiced"), py::arg("ref_time"),
      py::arg("ref_f0"), py::arg("ref_voiced"),
      "FFE, GPE, VDE, VDE-V and VDE-U in percent; voiced may be None (f0 > 0 means voiced).");
}
