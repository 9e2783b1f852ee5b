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

#ifndef DGKT_CONFIG_HPP
#define DGKT_CONFIG_HPP

#include "dgkt/encoders.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace dgkt {

/// Hyperparameters for one run. Defaults follow the full-scale protocol;
/// desk() shrinks counts and width for a single CPU core.
struct TrainConfig {
  int d = 256;
  int k = 5;
  double lr = 1e-4;
  int batch_size = 32;
  int phase1_epochs = 12000;
  int phase2_epochs = 6000;
  int adapt_epochs = 50;
  /// Epochs for the target-only baseline.
  int scratch_epochs = 50;
  double lambda = 0.7;
  std::uint64_t model_seed = 1;
  std::uint64_t data_seed = 2;
  std::uint64_t cluster_seed = 3;
  EncoderVariant encoder = EncoderVariant::kRA;
  int target_batches = 1;
  int n_heads = 4;
  int n_layers = 2;
  bool use_seqin = true;
  double grad_clip = 5.0;
  int window_length = kDefaultWindowLength;
  int min_interactions = kDefaultMinInteractions;
  double split_ratio = 0.8;
  /// Evaluate every this many epochs (0: only when a phase ends).
  int eval_every = 0;

  static TrainConfig paper() { return {}; }
  static TrainConfig desk();

  void validate() const;
  EncoderConfig encoder_config() const;

  /// Sets one field from its textual key; unknown keys throw.
  void set(const std::string& key, const std::string& value);
  std::map<std::string, std::string> to_map() const;
};

/// Reads "key = value" lines; '#' starts a comment.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& file);

TrainConfig config_from_map(const std::map<std::string, std::string>& values,
                            TrainConfig base = TrainConfig::desk());

}  // namespace dgkt

#endif  // DGKT_CONFIG_HPP
