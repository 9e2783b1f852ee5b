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

#ifndef DGKT_SYNTHSTUDENT_HPP
#define DGKT_SYNTHSTUDENT_HPP

#include "dgkt/core_data.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dgkt {

/// BKT-style generator settings for one domain.
struct SyntheticDomainConfig {
  int domain_id = 0;
  int n_students = 100;
  int n_questions = 50;
  int n_concepts = 10;
  int min_concepts_per_question = 1;
  int max_concepts_per_question = 2;
  int min_interactions = 30;
  int max_interactions = 80;
  double learn_rate = 0.2;
  double guess = 0.2;
  double slip = 0.1;
  /// Domain-level logit offset; positive values make questions harder.
  double difficulty_shift = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticDomain {
  DomainSpec domain;
  std::vector<Interaction> interactions;
  /// True correctness probability of each interaction given the latent state.
  std::vector<double> true_probability;
};

/// Students start with every concept unlearned. Each step a question is drawn
/// uniformly; it is answered correctly with probability 1 - slip when all of
/// its concepts are mastered and with probability guess otherwise (then
/// shifted by difficulty_shift on the logit scale). Afterwards each unlearned
/// concept of the question is learned with probability learn_rate.
SyntheticDomain generate_domain(const SyntheticDomainConfig& config);

struct MultiSourceData {
  std::vector<SyntheticDomain> sources;
  SyntheticDomain target;
};

MultiSourceData generate_multisource(const std::vector<SyntheticDomainConfig>& sources,
                                     const SyntheticDomainConfig& target);

/// The bundled desk-scale setting: four heterogeneous sources and one target.
std::vector<SyntheticDomainConfig> desk_source_configs(std::uint64_t seed);
SyntheticDomainConfig desk_target_config(std::uint64_t seed);

/// Writes the canonical CSV for a generated domain.
void write_domain_csv(const SyntheticDomain& data, const std::filesystem::path& file);
/// Writes one JSON object per line: {"student", "position", "p"}.
void write_ground_truth(const SyntheticDomain& data, const std::filesystem::path& file);

}  // namespace dgkt

#endif  // DGKT_SYNTHSTUDENT_HPP
