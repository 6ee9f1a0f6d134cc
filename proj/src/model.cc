// src/model.cc

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

#include "nebula/model.h"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include <zlib.h>

#include "json.hpp"
#include "nebula/error.h"

namespace nebula {

using json = nlohmann::json;

namespace {

constexpr const char *kFormatName = "nebula-model";

json vec_to_json(const Eigen::VectorXd &v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from_json(const json &j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Lower triangle, row by row: (0,0), (1,0), (1,1), (2,0), ...
json packed_lower(const Eigen::MatrixXd &m) {
  std::vector<double> out;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c <= r; ++c) out.push_back(m(r, c));
  return out;
}

Eigen::MatrixXd unpack_lower(const json &j, int d) {
  auto v = j.get<std::vector<double>>();
  if (v.size() != static_cast<std::size_t>(d * (d + 1) / 2))
    throw ModelError("covariance has wrong number of entries");
  Eigen::MatrixXd m(d, d);
  std::size_t k = 0;
  for (int r = 0; r < d; ++r)
    for (int c = 0; c <= r; ++c) m(r, c) = m(c, r) = v[k++];
  return m;
}

json range_json(const Range &r) { return json::array({r.lo, r.hi}); }
Range range_from(const json &j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json payload_json(const ModelBank &bank) {
  const GeneratorConfig &g = bank.generator;
  json p;
  p["generator"] = {{"fs", g.fs},
                    {"duration", g.duration},
                    {"k_max", g.k_max},
                    {"harmonic_cutoff", g.harmonic_cutoff},
                    {"snr_db", range_json(g.snr_db)},
                    {"harm_db", range_json(g.harm_db)},
                    {"f0_hz", range_json(g.f0_hz)}};
  json em = json::array();
  for (const auto &c : bank.training.channels)
    em.push_back({{"iterations", c.iterations},
                  {"converged", c.converged},
                  {"final_loglik", c.final_loglik},
                  {"monotone", c.monotone}});
  p["training"] = {{"seed", bank.training.seed},
                   {"n_samples", bank.training.n_samples},
                   {"components", bank.training.components},
                   {"em", em}};
  json channels = json::array();
  for (const auto &ch : bank.channels) {
    json mix;
    mix["weights"] = ch.mixture.weights;
    json means = json::array(), covs = json::array();
    for (int m = 0; m < ch.mixture.components(); ++m) {
      means.push_back(vec_to_json(ch.mixture.means[m]));
      covs.push_back(packed_lower(ch.mixture.covariances[m]));
    }
    mix["means"] = means;
    mix["covariances"] = covs;
    channels.push_back({{"index", ch.spec.index},
                        {"fc", ch.spec.fc},
                        {"window_len", ch.spec.window_len},
                        {"standardizer",
                         {{"mean", vec_to_json(ch.standardizer.mean)},
                          {"scale", vec_to_json(ch.standardizer.scale)}}},
                        {"mixture", mix}});
  }
  p["channels"] = channels;
  if (bank.calibrated()) {
    p["grid"] = {{"f_min", bank.grid.f_min()},
                 {"f_max", bank.grid.f_max()},
                 {"n_bins", bank.grid.size()}};
    p["calibration"] = bank.calibration;
  } else {
    p["grid"] = nullptr;
    p["calibration"] = nullptr;
  }
  p["unvoiced"] = {{"mean", bank.unvoiced.mean}, {"var", bank.unvoiced.var}};
  return p;
}

std::string crc_hex(const std::string &s) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef *>(s.data()), static_cast<uInt>(s.size()));
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

ModelBank bank_from_payload(const json &p) {
  ModelBank bank;
  const json &g = p.at("generator");
  bank.generator.fs = g.at("fs").get<int>();
  bank.generator.duration = g.at("duration").get<double>();
  bank.generator.k_max = g.at("k_max").get<int>();
  bank.generator.harmonic_cutoff = g.at("harmonic_cutoff").get<double>();
  bank.generator.snr_db = range_from(g.at("snr_db"));
  bank.generator.harm_db = range_from(g.at("harm_db"));
  bank.generator.f0_hz = range_from(g.at("f0_hz"));

  const json &t = p.at("training");
  bank.training.seed = t.at("seed").get<std::uint64_t>();
  bank.training.n_samples = t.at("n_samples").get<std::size_t>();
  bank.training.components = t.at("components").get<int>();
  for (const auto &e : t.at("em"))
    bank.training.channels.push_back({e.at("iterations").get<int>(), e.at("converged").get<bool>(),
                                      e.at("final_loglik").get<double>(),
                                      e.at("monotone").get<bool>()});

  for (const auto &c : p.at("channels")) {
    ChannelModel ch;
    ch.spec = {c.at("index").get<int>(), c.at("fc").get<double>(), c.at("window_len").get<double>()};
    ch.standardizer.mean = vec_from_json(c.at("standardizer").at("mean"));
    ch.standardizer.scale = vec_from_json(c.at("standardizer").at("scale"));
    const json &mix = c.at("mixture");
    ch.mixture.weights = mix.at("weights").get<std::vector<double>>();
    for (const auto &m : mix.at("means")) ch.mixture.means.push_back(vec_from_json(m));
    const int d = ch.mixture.dim();
    for (const auto &cv : mix.at("covariances")) ch.mixture.covariances.push_back(unpack_lower(cv, d));
    ch.mixture.validate();
    if (d != kFeatureDim + 1 || ch.standardizer.mean.size() != d || ch.standardizer.scale.size() != d)
      throw ModelError("channel " + std::to_string(ch.spec.index) + " has wrong dimensions");
    bank.channels.push_back(std::move(ch));
  }
  if (!p.at("grid").is_null()) {
    const json &gr = p.at("grid");
    bank.grid = FrequencyGrid(gr.at("f_min").get<double>(), gr.at("f_max").get<double>(),
                              gr.at("n_bins").get<int>());
    bank.calibration = p.at("calibration").get<std::vector<double>>();
    if (bank.calibration.size() != static_cast<std::size_t>(bank.grid.size()))
      throw ModelError("calibration table length differs from grid size");
  }
  bank.unvoiced = {p.at("unvoiced").at("mean").get<double>(), p.at("unvoiced").at("var").get<double>()};
  return bank;
}

}  // namespace

std::vector<ChannelSpec> ModelBank::specs() const {
  std::vector<ChannelSpec> out;
  for (const auto &c : channels) out.push_back(c.spec);
  return out;
}

BankConditioner::BankConditioner(const ModelBank &bank) {
  for (const auto &ch : bank.channels) {
    Channel c;
    c.conditioner = MixtureConditioner(ch.mixture);
    c.feature_mean = ch.standardizer.mean.head(kFeatureDim);
    c.feature_scale = ch.standardizer.scale.head(kFeatureDim);
    c.target_mean = ch.standardizer.mean[kFeatureDim];
    c.target_scale = ch.standardizer.scale[kFeatureDim];
    channels_.push_back(std::move(c));
    specs_.push_back(ch.spec);
  }
}

std::vector<Conditional1D> BankConditioner::condition(
    const std::vector<ChannelFeatureVector> &frame) const {
  if (frame.size() != channels_.size()) throw InvalidArgument("frame has wrong channel count");
  std::vector<Conditional1D> out(channels_.size());
  Eigen::VectorXd x(kFeatureDim);
  for (std::size_t k = 0; k < channels_.size(); ++k) {
    const Channel &c = channels_[k];
    auto raw = frame[k].as_array();
    for (int i = 0; i < kFeatureDim; ++i) x[i] = (raw[i] - c.feature_mean[i]) / c.feature_scale[i];
    Conditional1D cond = c.conditioner.condition(x);
    for (std::size_t m = 0; m < cond.means.size(); ++m) {
      cond.means[m] = cond.means[m] * c.target_scale + c.target_mean;
      cond.variances[m] *= c.target_scale * c.target_scale;
    }
    out[k] = std::move(cond);
  }
  return out;
}

std::string serialize_bank(const ModelBank &bank) {
  json payload = payload_json(bank);
  std::string body = payload.dump();
  json doc;
  doc["format"] = kFormatName;
  doc["version"] = kModelVersion;
  doc["checksum"] = crc_hex(body);
  doc["payload"] = std::move(payload);
  return doc.dump(1) + "\n";
}

void save_bank(const ModelBank &bank, const std::string &path) {
  std::string text = serialize_bank(bank);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << text;
  if (!os) throw IoError("write error on " + path);
}

ModelBank deserialize_bank(const std::string &text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    throw ModelError(std::string("model file is truncated or corrupt: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", "") != kFormatName)
      throw ModelError("not a nebula model file");
    int version = doc.at("version").get<int>();
    if (version != kModelVersion)
      throw ModelError("unsupported model version " + std::to_string(version) + " (expected " +
                       std::to_string(kModelVersion) + ")");
    const json &payload = doc.at("payload");
    if (crc_hex(payload.dump()) != doc.at("checksum").get<std::string>())
      throw ModelError("model checksum mismatch");
    return bank_from_payload(payload);
  } catch (const json::exception &e) {
    throw ModelError(std::string("model file is malformed: ") + e.what());
  }
}

ModelBank load_bank(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return deserialize_bank(text);
}

}  // namespace nebula
