// tools/nebula_main.cc

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

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nebula/error.h"
#include "nebula/metrics.h"
#include "nebula/model.h"
#include "nebula/parallel.h"
#include "nebula/pipeline.h"
#include "nebula/signal.h"

namespace {

using namespace nebula;

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kIo = 3, kModel = 4 };

std::ofstream open_out(const std::string &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  return os;
}

void write_text(const std::string &path, const std::string &text) {
  if (path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream os = open_out(path);
  os << text;
  if (!os) throw IoError("write failed: " + path);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// channel,fc,snr0,snr1,snr2,if1,if2,target
void dump_training(const std::string &path, const std::vector<ChannelSpec> &specs,
                   const std::vector<std::vector<TrainingPair>> &sets) {
  std::ofstream os = open_out(path);
  os << "channel,fc,snr0,snr1,snr2,if1,if2,target\n";
  for (std::size_t k = 0; k < sets.size(); ++k) {
    for (const TrainingPair &p : sets[k]) {
      os << k << ',' << fmt(specs[k].fc);
      for (double v : p.features.as_array()) os << ',' << fmt(v);
      os << ',' << fmt(p.target) << '\n';
    }
  }
  if (!os) throw IoError("write failed: " + path);
}

// First column time_s, then one column per bin centre.
void dump_map(const std::string &path, const LikelihoodMap &map, const FrameClock &clock) {
  std::ofstream os = open_out(path);
  os << "time_s";
  for (double c : map.grid.centres()) os << ',' << fmt(c);
  os << '\n';
  for (Eigen::Index t = 0; t < map.frames(); ++t) {
    os << fmt(clock.time(static_cast<std::size_t>(t)));
    for (Eigen::Index b = 0; b < map.values.cols(); ++b) os << ',' << fmt(map.values(t, b));
    os << '\n';
  }
  if (!os) throw IoError("write failed: " + path);
}

struct TrainArgs {
  std::string out;
  std::uint64_t seed = 1;
  std::size_t n_samples = 100000;
  int components = 16;
  int channels = 36;
  double f_min = 55, f_max = 400;
  std::size_t cal_frames = 2000, uv_frames = 2000;
  std::string dump;
  bool check_monotone = false;
};

int cmd_train(const TrainArgs &a) {
  TrainOptions o;
  o.seed = a.seed;
  o.n_samples = a.n_samples;
  o.components = a.components;
  o.n_channels = a.channels;
  o.grid = FrequencyGrid(a.f_min, a.f_max);
  o.calibration_frames = a.cal_frames;
  o.unvoiced_frames = a.uv_frames;
  if (!a.dump.empty())
    o.on_training_data = [&](const auto &specs, const auto &sets) {
      dump_training(a.dump, specs, sets);
    };
  ModelBank bank = train_model(o, [](const std::string &s) { std::cerr << s << '\n'; });
  save_bank(bank, a.out);
  if (a.check_monotone) {
    for (std::size_t k = 0; k < bank.training.channels.size(); ++k)
      if (!bank.training.channels[k].monotone) {
        std::cerr << "EM log-likelihood decreased on channel " << k << '\n';
        return kFailure;
      }
  }
  return kOk;
}

struct CalibrateArgs {
  std::string model, out;
  double f_min = 55, f_max = 400;
  std::uint64_t seed = 1;
  std::size_t cal_frames = 2000, uv_frames = 2000;
};

int cmd_calibrate(const CalibrateArgs &a) {
  ModelBank bank = load_bank(a.model);
  if (a.f_min < bank.generator.f0_hz.lo || a.f_max > bank.generator.f0_hz.hi)
    throw ModelError("range outside the trained prior");
  calibrate_bank(bank, FrequencyGrid(a.f_min, a.f_max), a.cal_frames, a.uv_frames, a.seed);
  std::cerr << "unvoiced peak statistics: mean " << bank.unvoiced.mean << ", var "
            << bank.unvoiced.var << '\n';
  save_bank(bank, a.out.empty() ? a.model : a.out);
  return kOk;
}

struct AnalyzeArgs {
  std::string model, wav, out = "-", map_dump;
  bool smoothed_map = false;
  AnalyzeOptions opts;
  bool no_dither = false;
};

int cmd_analyze(AnalyzeArgs a) {
  ModelBank bank = load_bank(a.model);
  Waveform w = load_wav(a.wav);
  a.opts.dither = !a.no_dither;
  AnalysisResult r = analyze(bank, w, a.opts);
  PitchTrack track;
  for (std::size_t i = 0; i < r.voiced.size(); ++i) {
    const TrackPoint &p = r.track.trajectory[i];
    track.frames.push_back({r.clock.time(i), p.f0, static_cast<bool>(r.voiced[i]), p.peak_loglik});
  }
  write_text(a.out, format_track_csv(track, true));
  if (!a.map_dump.empty())
    dump_map(a.map_dump, a.smoothed_map ? r.track.smoothed : r.track.map, r.clock);
  return kOk;
}

struct EvalArgs {
  std::string est, ref, json;
};

int cmd_eval(const EvalArgs &a) {
  PitchTrack est = read_track_csv(a.est);
  PitchTrack ref = read_track_csv(a.ref);
  if (ref.frames.empty() || est.frames.empty()) throw FormatError("empty track");
  const double hop = ref.hop();
  if (hop > 0 && std::abs(est.hop() - hop) > 1e-9 * hop)
    est = resample_track(est, hop, ref.frames.front().time);
  EvalReport r = evaluate(est, ref);
  std::printf("FFE %.3f\nGPE %.3f\nVDE %.3f\nVDE-V %.3f\nVDE-U %.3f\n", r.ffe, r.gpe, r.vde,
              r.vde_v, r.vde_u);
  if (!a.json.empty()) {
    nlohmann::json j = {{"ffe", r.ffe},
                        {"gpe", r.gpe},
                        {"vde", r.vde},
                        {"vde_v", r.vde_v},
                        {"vde_u", r.vde_u},
                        {"frames", r.total},
                        {"both_voiced", r.both_voiced},
                        {"gross_errors", r.gross_errors},
                        {"voicing_errors", r.voicing_errors},
                        {"ref_voiced", r.ref_voiced},
                        {"ref_unvoiced", r.ref_unvoiced}};
    write_text(a.json, j.dump(2) + "\n");
  }
  return kOk;
}

int cmd_inspect(const std::string &path, bool per_channel) {
  ModelBank b = load_bank(path);
  const GeneratorConfig &g = b.generator;
  std::printf("format version %d\n", kModelVersion);
  std::printf("generator: fs %d Hz, %g s, %d harmonics (cutoff %g fs)\n", g.fs, g.duration,
              g.k_max, g.harmonic_cutoff);
  std::printf("  f0 [%g, %g] Hz, snr [%g, %g] dB, harmonic level [%g, %g] dB\n", g.f0_hz.lo,
              g.f0_hz.hi, g.snr_db.lo, g.snr_db.hi, g.harm_db.lo, g.harm_db.hi);
  std::printf("training: seed %llu, %zu samples, %d components\n",
              static_cast<unsigned long long>(b.training.seed), b.training.n_samples,
              b.training.components);
  std::printf("channels: %zu, fc %g .. %g Hz\n", b.channels.size(), b.channels.front().spec.fc,
              b.channels.back().spec.fc);
  if (b.calibrated())
    std::printf("calibrated for [%g, %g] Hz, %d bins\n", b.grid.f_min(), b.grid.f_max(),
                b.grid.size());
  else
    std::printf("not calibrated\n");
  std::printf("unvoiced peak statistics: mean %.6g, var %.6g\n", b.unvoiced.mean,
              b.unvoiced.var);
  if (per_channel) {
    for (std::size_t k = 0; k < b.channels.size(); ++k) {
      const auto &c = b.channels[k];
      std::printf("  %2zu fc %8.3f Hz window %.4f s", k, c.spec.fc, c.spec.window_len);
      if (k < b.training.channels.size()) {
        const auto &s = b.training.channels[k];
        std::printf("  EM %3d it loglik %.5f%s%s", s.iterations, s.final_loglik,
                    s.converged ? "" : " capped", s.monotone ? "" : " non-monotone");
      }
      std::printf("\n");
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Nebula F0 and voicing estimator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "nebula 1.0");

  TrainArgs ta;
  auto *train = app.add_subcommand("train", "train a model on synthetic data");
  train->add_option("-o,--out", ta.out, "model file to write")->required();
  train->add_option("--seed", ta.seed, "random seed");
  train->add_option("--n-samples", ta.n_samples, "synthetic signals per channel");
  train->add_option("-M,--components", ta.components, "mixture components per channel");
  train->add_option("--channels", ta.channels, "filterbank channels");
  train->add_option("--f-min", ta.f_min, "lower edge of the calibrated search range (Hz)");
  train->add_option("--f-max", ta.f_max, "upper edge of the calibrated search range (Hz)");
  train->add_option("--calibration-frames", ta.cal_frames, "white-noise frames for calibration");
  train->add_option("--unvoiced-frames", ta.uv_frames, "white-noise frames for unvoiced statistics");
  train->add_option("--dump-training", ta.dump, "write the training features as CSV");
  train->add_flag("--check-monotone", ta.check_monotone,
                  "fail if EM log-likelihood ever decreases");

  CalibrateArgs ca;
  auto *cal = app.add_subcommand("calibrate", "recalibrate a model for another search range");
  cal->add_option("model", ca.model, "model file")->required();
  cal->add_option("-o,--out", ca.out, "output model (default: overwrite)");
  cal->add_option("--f-min", ca.f_min, "lower edge of the search range (Hz)");
  cal->add_option("--f-max", ca.f_max, "upper edge of the search range (Hz)");
  cal->add_option("--seed", ca.seed, "random seed");
  cal->add_option("--calibration-frames", ca.cal_frames, "white-noise frames for calibration");
  cal->add_option("--unvoiced-frames", ca.uv_frames, "white-noise frames for unvoiced statistics");

  AnalyzeArgs aa;
  auto *an = app.add_subcommand("analyze", "estimate F0 and voicing of a WAV file");
  an->add_option("-m,--model", aa.model, "model file")->required();
  an->add_option("wav", aa.wav, "input WAV")->required();
  an->add_option("-o,--out", aa.out, "track CSV (default stdout)");
  an->add_option("--f-min", aa.opts.f_min, "lowest F0 searched (Hz)");
  an->add_option("--f-max", aa.opts.f_max, "highest F0 searched (Hz)");
  an->add_option("--hop", aa.opts.t_hop, "frame hop (s)")->check(CLI::PositiveNumber);
  an->add_option("--sigma", aa.opts.sigma, "F0 transition std (octaves/s)")
      ->check(CLI::PositiveNumber);
  an->add_option("--seed", aa.opts.seed, "dither seed");
  an->add_flag("--no-dither", aa.no_dither, "skip dithering");
  an->add_option("--dump-map", aa.map_dump, "write the likelihood map as CSV");
  an->add_flag("--smoothed-map", aa.smoothed_map, "dump the time-smoothed map instead");

  EvalArgs ea;
  auto *ev = app.add_subcommand("eval", "score an estimated track against a reference");
  ev->add_option("estimate", ea.est, "estimated track CSV")->required();
  ev->add_option("reference", ea.ref, "reference track CSV")->required();
  ev->add_option("--json", ea.json, "also write the report as JSON");

  std::string inspect_path;
  bool per_channel = false;
  auto *in = app.add_subcommand("inspect", "print model metadata");
  in->add_option("model", inspect_path, "model file")->required();
  in->add_flag("--channels", per_channel, "list every channel");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*train) return cmd_train(ta);
    if (*cal) return cmd_calibrate(ca);
    if (*an) return cmd_analyze(aa);
    if (*ev) return cmd_eval(ea);
    if (*in) return cmd_inspect(inspect_path, per_channel);
  } catch (const IoError &e) {
    std::cerr << "nebula: " << e.what() << '\n';
    return kIo;
  } catch (const FormatError &e) {
    std::cerr << "nebula: " << e.what() << '\n';
    return kIo;
  } catch (const ModelError &e) {
    std::cerr << "nebula: " << e.what() << '\n';
    return kModel;
  } catch (const InvalidArgument &e) {
    std::cerr << "nebula: " << e.what() << '\n';
    return kUsage;
  } catch (const TrainingError &e) {
    std::cerr << "nebula: " << e.what() << '\n';
    return kFailure;
  } catch (const std::exception &e) {
    std::cerr << "nebula: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
