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

#include "dgkt/config.hpp"

#include <charconv>
#include <fstream>

namespace dgkt {

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw Error("config: bad value for " + key + ": '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "on") return true;
  if (text == "0" || text == "false" || text == "off") return false;
  throw Error("config: bad boolean for " + key + ": '" + text + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.d = 32;
  c.lr = 5e-4;
  c.phase1_epochs = 300;
  c.phase2_epochs = 150;
  c.adapt_epochs = 50;
  c.scratch_epochs = 50;
  return c;
}

void TrainConfig::validate() const {
  if (d < 1 || k < 1 || batch_size < 1) throw Error("config: d, k and batch_size must be positive");
  if (phase1_epochs < 1 || phase2_epochs < 1 || adapt_epochs < 1 || scratch_epochs < 1) {
    throw Error("config: epoch counts must be positive");
  }
  if (target_batches < 1) throw Error("config: target_batches must be positive");
  if (!(lr >= 0.0)) throw Error("config: lr must be non-negative");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("config: lambda must be in [0, 1]");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw Error("config: split_ratio must be in (0, 1)");
  if (window_length < 2) throw Error("config: window_length must be >= 2");
  if (eval_every < 0) throw Error("config: eval_every must be >= 0");
  encoder_config().validate();
}

EncoderConfig TrainConfig::encoder_config() const {
  EncoderConfig e;
  e.variant = encoder;
  e.d = d;
  e.n_heads = n_heads;
  e.n_layers = n_layers;
  e.use_seqin = use_seqin;
  e.max_length = window_length;
  return e;
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "d") d = parse_number<int>(key, value);
  else if (key == "k") k = parse_number<int>(key, value);
  else if (key == "lr") lr = parse_number<double>(key, value);
  else if (key == "batch_size") batch_size = parse_number<int>(key, value);
  else if (key == "phase1_epochs") phase1_epochs = parse_number<int>(key, value);
  else if (key == "phase2_epochs") phase2_epochs = parse_number<int>(key, value);
  else if (key == "adapt_epochs") adapt_epochs = parse_number<int>(key, value);
  else if (key == "scratch_epochs") scratch_epochs = parse_number<int>(key, value);
  else if (key == "lambda") lambda = parse_number<double>(key, value);
  else if (key == "model_seed") model_seed = parse_number<std::uint64_t>(key, value);
  else if (key == "data_seed") data_seed = parse_number<std::uint64_t>(key, value);
  else if (key == "cluster_seed") cluster_seed = parse_number<std::uint64_t>(key, value);
  else if (key == "encoder") encoder = parse_encoder_variant(value);
  else if (key == "target_batches") target_batches = parse_number<int>(key, value);
  else if (key == "n_heads") n_heads = parse_number<int>(key, value);
  else if (key == "n_layers") n_layers = parse_number<int>(key, value);
  else if (key == "use_seqin") use_seqin = parse_bool(key, value);
  else if (key == "grad_clip") grad_clip = parse_number<double>(key, value);
  else if (key == "window_length") window_length = parse_number<int>(key, value);
  else if (key == "min_interactions") min_interactions = parse_number<int>(key, value);
  else if (key == "split_ratio") split_ratio = parse_number<double>(key, value);
  else if (key == "eval_every") eval_every = parse_number<int>(key, value);
  else throw Error("config: unknown key '" + key + "'");
}

std::map<std::string, std::string> TrainConfig::to_map() const {
  return {
      {"d", std::to_string(d)},
      {"k", std::to_string(k)},
      {"lr", format_double(lr)},
      {"batch_size", std::to_string(batch_size)},
      {"phase1_epochs", std::to_string(phase1_epochs)},
      {"phase2_epochs", std::to_string(phase2_epochs)},
      {"adapt_epochs", std::to_string(adapt_epochs)},
      {"scratch_epochs", std::to_string(scratch_epochs)},
      {"lambda", format_double(lambda)},
      {"model_seed", std::to_string(model_seed)},
      {"data_seed", std::to_string(data_seed)},
      {"cluster_seed", std::to_string(cluster_seed)},
      {"encoder", to_string(encoder)},
      {"target_batches", std::to_string(target_batches)},
      {"n_heads", std::to_string(n_heads)},
      {"n_layers", std::to_string(n_layers)},
      {"use_seqin", use_seqin ? "true" : "false"},
      {"grad_clip", format_double(grad_clip)},
      {"window_length", std::to_string(window_length)},
      {"min_interactions", std::to_string(min_interactions)},
      {"split_ratio", format_double(split_ratio)},
      {"eval_every", std::to_string(eval_every)},
  };
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("config: cannot open " + file.string());
  std::map<std::string, std::string> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("config: line " + std::to_string(n) + " has no '='");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

TrainConfig config_from_map(const std::map<std::string, std::string>& values, TrainConfig base) {
  for (const auto& [k, v] : values) base.set(k, v);
  base.validate();
  return base;
}

}  // namespace dgkt
