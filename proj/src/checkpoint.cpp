// Copyright 2026 The dgkt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dgkt/checkpoint.hpp"

#include <json.hpp>

#include <fstream>

namespace dgkt {

using nlohmann::json;

namespace {

template <typename M>
json tensor_json(const M& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.size(); ++i) data.push_back(m.data()[i]);
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

template <typename M>
M tensor_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw Error("checkpoint: tensor size mismatch");
  M m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = data[static_cast<std::size_t>(i)].get<typename M::Scalar>();
  return m;
}

}  // namespace

std::string to_string(Phase p) {
  switch (p) {
    case Phase::kInit: return "INIT";
    case Phase::kCFL: return "CFL";
    case Phase::kCR: return "CR";
    case Phase::kAdapt: return "ADAPT";
    case Phase::kScratch: return "SCRATCH";
  }
  return "?";
}

Phase parse_phase(const std::string& s) {
  for (Phase p : {Phase::kInit, Phase::kCFL, Phase::kCR, Phase::kAdapt, Phase::kScratch}) {
    if (to_string(p) == s) return p;
  }
  throw Error("checkpoint: unknown phase '" + s + "'");
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& file) {
  json tensors = json::object();
  for (const auto& [name, p] : c.params.items()) {
    json t = tensor_json(p.value);
    t["trainable"] = p.trainable;
    tensors[name] = std::move(t);
  }
  json j = {
      {"format", "dgkt-checkpoint"},
      {"format_version", kCheckpointFormatVersion},
      {"phase", to_string(c.phase)},
      {"config", c.config.to_map()},
      {"source_domains", c.source_domains},
      {"source_concepts", c.source_concepts},
      {"domain_offsets", c.domain_offsets},
      {"target_domain", c.target_domain},
      {"init_choices", c.init_choices},
      {"lineage", c.lineage},
      {"assignment", tensor_json(c.assignment)},
      {"tensors", std::move(tensors)},
  };
  std::ofstream out(file);
  if (!out) throw Error("checkpoint: cannot write " + file.string());
  out << j.dump() << '\n';
  if (!out) throw Error("checkpoint: write failed for " + file.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("checkpoint: cannot open " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("checkpoint: " + file.string() + " is not valid JSON: " + e.what());
  }
  if (j.value("format", "") != "dgkt-checkpoint") throw Error("checkpoint: not a dgkt checkpoint");
  const int version = j.value("format_version", -1);
  if (version != kCheckpointFormatVersion) {
    throw Error("checkpoint: format version " + std::to_string(version) + " is not supported (expected " +
                std::to_string(kCheckpointFormatVersion) + ")");
  }
  Checkpoint c;
  c.phase = parse_phase(j.at("phase").get<std::string>());
  c.config = config_from_map(j.at("config").get<std::map<std::string, std::string>>(), TrainConfig{});
  c.source_domains = j.at("source_domains").get<std::vector<int>>();
  c.source_concepts = j.at("source_concepts").get<std::vector<int>>();
  c.domain_offsets = j.at("domain_offsets").get<std::vector<int>>();
  c.target_domain = j.at("target_domain").get<int>();
  c.init_choices = j.at("init_choices").get<std::vector<int>>();
  c.lineage = j.at("lineage").get<std::vector<std::string>>();
  c.assignment = tensor_from_json<BinaryMatrix>(j.at("assignment"));
  for (const auto& [name, t] : j.at("tensors").items()) {
    c.params.add(name, tensor_from_json<Matrix>(t), t.at("trainable").get<bool>());
  }
  return c;
}

}  // namespace dgkt
