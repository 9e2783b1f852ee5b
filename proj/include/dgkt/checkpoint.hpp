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

#ifndef DGKT_CHECKPOINT_HPP
#define DGKT_CHECKPOINT_HPP

#include "dgkt/config.hpp"
#include "dgkt/params.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace dgkt {

inline constexpr int kCheckpointFormatVersion = 1;

/// Training stage a checkpoint has completed. Source runs move forward
/// through CFL, CR, ADAPT; SCRATCH marks a target-only baseline.
enum class Phase { kInit, kCFL, kCR, kAdapt, kScratch };

std::string to_string(Phase p);
Phase parse_phase(const std::string& s);

struct Checkpoint {
  TrainConfig config;
  Phase phase = Phase::kInit;
  ParamStore params;
  std::vector<int> source_domains;   // ids, in training order
  std::vector<int> source_concepts;  // concept count of each source
  BinaryMatrix assignment;           // k x n_e once clustered
  std::vector<int> domain_offsets;
  int target_domain = -1;
  std::vector<int> init_choices;     // prototype behind each target concept row
  std::vector<std::string> lineage;  // completed phases, oldest first
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& file);
Checkpoint load_checkpoint(const std::filesystem::path& file);

}  // namespace dgkt

#endif  // DGKT_CHECKPOINT_HPP
