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

#ifndef DGKT_PIPELINE_HPP
#define DGKT_PIPELINE_HPP

#include "dgkt/checkpoint.hpp"
#include "dgkt/core_data.hpp"
#include "dgkt/encoders.hpp"

#include <functional>
#include <string>
#include <vector>

namespace dgkt {

/// A domain's vocabulary together with its train/test sequences.
struct DomainData {
  DomainSpec domain;
  DatasetSplit split;
};

/// Windows, filters and splits raw interactions with the config's protocol.
DomainData prepare_domain(const DomainSpec& domain, const std::vector<Interaction>& interactions,
                          const TrainConfig& config, std::uint64_t split_seed);

/// How questions of a domain are embedded.
enum class EmbeddingMode {
  kConcepts,    // mean of the domain's own concept rows
  kPrototypes,  // mean of the prototypes its concepts were clustered into
  kTarget,      // prototype-anchored mix over the target concept table
};

struct MetricRecord {
  std::string phase;
  int epoch = 0;
  int domain = 0;
  double auc = 0.0;
  double acc = 0.0;
  double loss = 0.0;
  long n_predictions = 0;

  std::string to_json() const;
};

using MetricSink = std::function<void(const MetricRecord&)>;

struct PhaseReport {
  std::vector<double> epoch_loss;  // summed per-domain batch losses
  std::vector<MetricRecord> metrics;
  double seconds = 0.0;
};

/// Bundled synthetic benchmark: four heterogeneous sources and one target,
/// generated and split from config.data_seed.
struct SyntheticPreset {
  std::vector<DomainData> sources;
  DomainData target;
};

SyntheticPreset synthetic_preset(const TrainConfig& config);

/// Fresh parameters: one concept table per source, encoder, decoder.
Checkpoint init_checkpoint(const TrainConfig& config, const std::vector<DomainData>& sources);

/// Concept feature learning: one batch per source per epoch, one optimizer
/// step on the summed loss. Trains concept tables, encoder and decoder.
PhaseReport train_phase1_cfl(Checkpoint& checkpoint, const std::vector<DomainData>& sources,
                             const MetricSink& sink = {});

/// Clusters the concept tables into prototypes, freezes the tables and
/// trains prototypes, encoder and decoder with prototype question embeddings.
PhaseReport train_phase2_refine(Checkpoint& checkpoint, const std::vector<DomainData>& sources,
                                const MetricSink& sink = {});

/// Seeds the target table from the prototypes and trains only that table
/// on the first target_batches batches of the target train set.
PhaseReport adapt_target(Checkpoint& checkpoint, const DomainData& target, const MetricSink& sink = {});

/// Target-only baseline with the same architecture and the same limited
/// sequences; every parameter is trainable.
Checkpoint train_scratch(const TrainConfig& config, const DomainData& target,
                         PhaseReport* report = nullptr, const MetricSink& sink = {});

/// Sequences the limited target iterator uses (identical for adaptation and
/// the baseline).
std::vector<std::size_t> limited_target_pool(const TrainConfig& config, const DomainData& target);

EmbeddingMode embedding_mode(const Checkpoint& checkpoint, int domain_id);

struct SequencePrediction {
  std::vector<double> probabilities;  // one per valid step; index 0 has no history
  Matrix states;                      // valid_length x d
  std::vector<AttentionTrace> attention;
};

SequencePrediction predict_sequence(const Checkpoint& checkpoint, const DomainSpec& domain,
                                    const InteractionSequence& sequence, bool record_attention = false);

/// Streams predictions over the sequences, skipping each first step.
MetricRecord evaluate_sequences(const Checkpoint& checkpoint, const DomainSpec& domain,
                                const std::vector<InteractionSequence>& sequences);

/// Test-set metrics for a domain the checkpoint can embed.
MetricRecord evaluate(const Checkpoint& checkpoint, const DomainData& data, const std::string& phase = "",
                      int epoch = 0);

/// Knowledge states mean-pooled over each sequence's valid steps (one row per sequence).
Matrix pooled_states(const Checkpoint& checkpoint, const DomainSpec& domain,
                     const std::vector<InteractionSequence>& sequences);

}  // namespace dgkt

#endif  // DGKT_PIPELINE_HPP
