// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mmrank/container.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "mmrank/errors.hpp"

namespace mmrank {
namespace {

constexpr char kMagic[8] = {'M', 'M', 'R', 'A', 'N', 'K', 'C', '1'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out += static_cast<char>((v >> (8 * b)) & 0xffu);
}

std::uint64_t get_u64(std::string_view in) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[b])) << (8 * b);
  return v;
}

std::string encode(Eigen::MatrixXd const& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 8);
  for (Eigen::Index i = 0; i < m.size(); ++i) put_u64(out, std::bit_cast<std::uint64_t>(m.data()[i]));
  return out;
}

std::uint32_t crc_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<Bytef const*>(bytes.data()), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

Eigen::MatrixXd column(std::vector<double> const& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::size_t as_index(double v, char const* what) {
  if (!(v >= 0.0) || v != std::floor(v)) throw DataError(std::string("container: bad ") + what);
  return static_cast<std::size_t>(v);
}

std::string task_section(std::size_t m) { return "beta.task" + std::to_string(m + 1); }

}  // namespace

Section const& Container::section(std::string const& name) const {
  for (auto const& s : sections)
    if (s.name == name) return s;
  throw DataError("container has no section '" + name + "'");
}

bool Container::has(std::string const& name) const {
  for (auto const& s : sections)
    if (s.name == name) return true;
  return false;
}

void Container::add(std::string name, Eigen::MatrixXd data) {
  sections.push_back({std::move(name), std::move(data)});
}

std::string serialize(Container const& c) {
  nlohmann::json manifest = c.manifest;
  manifest["version"] = kContainerVersion;
  nlohmann::json table = nlohmann::json::array();
  std::string body;
  for (auto const& s : c.sections) {
    const std::string bytes = encode(s.data);
    table.push_back({{"name", s.name},
                     {"rows", s.data.rows()},
                     {"cols", s.data.cols()},
                     {"offset", body.size()},
                     {"bytes", bytes.size()},
                     {"crc32", crc_of(bytes)}});
    body += bytes;
  }
  manifest["sections"] = std::move(table);
  const std::string text = manifest.dump(1);
  std::string out(kMagic, sizeof kMagic);
  put_u64(out, text.size());
  out += text;
  out += body;
  return out;
}

Container deserialize(std::string const& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw DataError("not an mmrank container (bad magic)");
  const std::uint64_t len = get_u64(std::string_view(bytes).substr(8, 8));
  if (len > bytes.size() - 16) throw DataError("container manifest is truncated");
  Container c;
  try {
    c.manifest = nlohmann::json::parse(bytes.substr(16, len));
  } catch (nlohmann::json::exception const& e) {
    throw DataError(std::string("container manifest is not valid JSON: ") + e.what());
  }
  if (!c.manifest.contains("version") || !c.manifest["version"].is_number_integer())
    throw DataError("container manifest has no version");
  if (c.manifest["version"].get<int>() != kContainerVersion)
    throw DataError("unsupported container version " + c.manifest["version"].dump());
  const std::string_view body = std::string_view(bytes).substr(16 + len);
  try {
    for (auto const& entry : c.manifest.at("sections")) {
      const auto name = entry.at("name").get<std::string>();
      const auto rows = entry.at("rows").get<Eigen::Index>();
      const auto cols = entry.at("cols").get<Eigen::Index>();
      const auto offset = entry.at("offset").get<std::size_t>();
      const auto size = entry.at("bytes").get<std::size_t>();
      if (rows < 0 || cols < 0 || size != static_cast<std::size_t>(rows * cols) * 8 ||
          offset > body.size() || size > body.size() - offset)
        throw DataError("container section '" + name + "' is truncated or malformed");
      const std::string_view raw = body.substr(offset, size);
      if (crc_of(raw) != entry.at("crc32").get<std::uint32_t>())
        throw ChecksumError("checksum mismatch in container section '" + name + "'");
      Eigen::MatrixXd m(rows, cols);
      for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = std::bit_cast<double>(get_u64(raw.substr(static_cast<std::size_t>(i) * 8, 8)));
      c.sections.push_back({name, std::move(m)});
    }
  } catch (nlohmann::json::exception const& e) {
    throw DataError(std::string("container section table is malformed: ") + e.what());
  }
  c.manifest.erase("sections");
  return c;
}

void save_container(std::string const& path, Container const& c) {
  const std::string bytes = serialize(c);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for '" + path + "'");
}

Container load_container(std::string const& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

nlohmann::json hyper_to_json(Hyperparams const& h) {
  return {{"factors", h.factors},         {"truncation", h.truncation},
          {"epsilon", h.epsilon},         {"r_a", h.r_a},
          {"s_a", h.s_a},                 {"r_beta", h.r_beta},
          {"s_beta", h.s_beta},           {"psi_shape", h.psi_shape},
          {"psi_rate", h.psi_rate},       {"alpha_shape", h.alpha_shape},
          {"alpha_rate", h.alpha_rate},   {"likelihood", to_string(h.likelihood)},
          {"classifier", to_string(h.classifier)}, {"init", to_string(h.init)}};
}

Hyperparams hyper_from_json(nlohmann::json const& j) {
  try {
    Hyperparams h;
    h.factors = j.at("factors").get<int>();
    h.truncation = j.at("truncation").get<int>();
    h.epsilon = j.at("epsilon").get<double>();
    h.r_a = j.at("r_a").get<double>();
    h.s_a = j.at("s_a").get<double>();
    h.r_beta = j.at("r_beta").get<double>();
    h.s_beta = j.at("s_beta").get<double>();
    h.psi_shape = j.at("psi_shape").get<double>();
    h.psi_rate = j.at("psi_rate").get<double>();
    h.alpha_shape = j.at("alpha_shape").get<double>();
    h.alpha_rate = j.at("alpha_rate").get<double>();
    h.likelihood = parse_likelihood(j.at("likelihood").get<std::string>());
    h.classifier = parse_classifier(j.at("classifier").get<std::string>());
    h.init = parse_init(j.at("init").get<std::string>());
    h.validate();
    return h;
  } catch (nlohmann::json::exception const& e) {
    throw DataError(std::string("container hyperparameters are malformed: ") + e.what());
  } catch (ConfigError const& e) {
    throw DataError(std::string("container hyperparameters are invalid: ") + e.what());
  }
}

Container pack_model(TrainedModel const& model, nlohmann::json created) {
  Container c;
  const bool rank = model.hyper.likelihood == Likelihood::max_margin_rank;
  c.manifest = {{"format", "mmrank-model"},
                {"engine", model.engine},
                {"likelihood", to_string(model.hyper.likelihood)},
                {"classifier", to_string(model.hyper.classifier)},
                {"hyper", hyper_to_json(model.hyper)},
                {"dims", {{"features", model.A.rows()},
                          {"factors", model.A.cols()},
                          {"samples", model.Z.cols()},
                          {"tasks", model.beta.size()}}},
                {"created", std::move(created)}};
  c.add("A", model.A);
  c.add("Z", model.Z);
  for (std::size_t m = 0; m < model.beta.size(); ++m) c.add(task_section(m), model.beta[m]);
  if (model.dpm()) {
    c.add("dpm.mu", model.mu);
    c.add("dpm.psi", model.psi);
    c.add("dpm.weights", model.weights);
  }
  if (rank) {
    std::vector<double> groups, values, offsets, members;
    for (auto const& f : model.ranks.features()) {
      groups.push_back(static_cast<double>(f.num_groups()));
      for (double v : f.values()) values.push_back(v);
      for (auto o : f.offsets()) offsets.push_back(static_cast<double>(o));
      for (auto s : f.members()) members.push_back(static_cast<double>(s));
    }
    c.add("rank.groups", column(groups));
    c.add("rank.values", column(values));
    c.add("rank.offsets", column(offsets));
    c.add("rank.members", column(members));
  } else {
    c.add("standardize.mean", model.standardization.mean);
    c.add("standardize.sd", model.standardization.sd);
  }
  return c;
}

TrainedModel unpack_model(Container const& c) {
  if (c.manifest.value("format", "") != "mmrank-model")
    throw DataError("container does not hold a trained model");
  TrainedModel model;
  model.hyper = hyper_from_json(c.manifest.at("hyper"));
  model.engine = c.manifest.value("engine", "");
  model.A = c.section("A").data;
  model.Z = c.section("Z").data;
  const auto K = model.A.cols();
  if (model.Z.rows() != K) throw DataError("container: A and Z disagree on the factor count");
  const auto tasks = c.manifest.at("dims").at("tasks").get<std::size_t>();
  const Eigen::Index comps = model.hyper.components();
  for (std::size_t m = 0; m < tasks; ++m) {
    model.beta.push_back(c.section(task_section(m)).data);
    if (model.beta.back().rows() != K || model.beta.back().cols() != comps)
      throw DataError("container: " + task_section(m) + " has the wrong shape");
  }
  if (model.dpm()) {
    model.mu = c.section("dpm.mu").data;
    model.psi = c.section("dpm.psi").data;
    model.weights = c.section("dpm.weights").data;
    if (model.mu.rows() != comps || model.mu.cols() != K || model.psi.size() != comps ||
        model.weights.size() != comps)
      throw DataError("container: DPM sections have the wrong shape");
  }
  const auto d = model.A.rows();
  if (model.hyper.likelihood == Likelihood::max_margin_rank) {
    auto const& groups = c.section("rank.groups").data;
    auto const& values = c.section("rank.values").data;
    auto const& offsets = c.section("rank.offsets").data;
    auto const& members = c.section("rank.members").data;
    const auto N = static_cast<std::size_t>(model.Z.cols());
    if (groups.size() != d || members.size() != static_cast<Eigen::Index>(N * d))
      throw DataError("container: rank sections have the wrong shape");
    std::vector<RankedFeature> features;
    std::size_t vpos = 0, opos = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const std::size_t G = as_index(groups(i), "group count");
      if (vpos + G > static_cast<std::size_t>(values.size()) ||
          opos + G + 1 > static_cast<std::size_t>(offsets.size()))
        throw DataError("container: rank sections are truncated");
      std::vector<double> v(values.data() + vpos, values.data() + vpos + G);
      std::vector<std::size_t> off(G + 1), mem(N);
      for (std::size_t g = 0; g <= G; ++g) off[g] = as_index(offsets(opos + g), "offset");
      for (std::size_t n = 0; n < N; ++n)
        mem[n] = as_index(members(static_cast<Eigen::Index>(i * N + n)), "member");
      try {
        features.emplace_back(std::move(v), std::move(off), std::move(mem));
      } catch (std::exception const& e) {
        throw DataError(std::string("container: invalid rank structure: ") + e.what());
      }
      vpos += G;
      opos += G + 1;
    }
    model.ranks = RankIndex(std::move(features));
  } else {
    model.standardization.mean = c.section("standardize.mean").data;
    model.standardization.sd = c.section("standardize.sd").data;
    if (model.standardization.mean.size() != d || model.standardization.sd.size() != d)
      throw DataError("container: standardization sections have the wrong shape");
  }
  return model;
}

Container pack_truth(SyntheticTruth const& truth, SyntheticSpec const& spec) {
  Container c;
  c.manifest = {{"format", "mmrank-truth"},
                {"spec", {{"dims", spec.dims},
                          {"samples", spec.samples},
                          {"factors", spec.factors},
                          {"sparsity", spec.sparsity},
                          {"label_noise", spec.label_noise},
                          {"transform", to_string(spec.transform)},
                          {"dpm", spec.dpm},
                          {"separation", spec.separation},
                          {"seed", spec.seed}}}};
  c.add("A", truth.A);
  c.add("Z", truth.Z);
  c.add("beta", truth.beta);
  if (!truth.cluster.empty()) {
    Eigen::VectorXd cl(static_cast<Eigen::Index>(truth.cluster.size()));
    for (std::size_t n = 0; n < truth.cluster.size(); ++n) cl(static_cast<Eigen::Index>(n)) = truth.cluster[n];
    c.add("cluster", cl);
  }
  return c;
}

SyntheticTruth unpack_truth(Container const& c) {
  if (c.manifest.value("format", "") != "mmrank-truth")
    throw DataError("container does not hold synthetic ground truth");
  SyntheticTruth t;
  t.A = c.section("A").data;
  t.Z = c.section("Z").data;
  t.beta = c.section("beta").data;
  if (c.has("cluster")) {
    auto const& cl = c.section("cluster").data;
    for (Eigen::Index n = 0; n < cl.size(); ++n) t.cluster.push_back(static_cast<int>(cl(n)));
  }
  return t;
}

}  // namespace mmrank
