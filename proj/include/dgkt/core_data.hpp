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

#ifndef DGKT_CORE_DATA_HPP
#define DGKT_CORE_DATA_HPP

#include "dgkt/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dgkt {

inline constexpr int kPaddingQuestion = -1;
inline constexpr int kDefaultWindowLength = 200;
inline constexpr int kDefaultMinInteractions = 20;
inline constexpr int kSplitFormatVersion = 1;
inline constexpr int kDomainFormatVersion = 1;

struct Interaction {
  std::string student_id;
  int question_id = 0;
  std::vector<int> concept_ids;
  int correct = 0;
  int position = 0;
};

/// One student window. All vectors share the window length; the mask is a
/// prefix of ones, and padded steps hold kPaddingQuestion / response 0.
struct InteractionSequence {
  std::string student_id;
  int domain_id = 0;
  std::vector<int> questions;
  std::vector<int> responses;
  std::vector<std::uint8_t> mask;

  int window_length() const { return static_cast<int>(questions.size()); }
  int valid_length() const;
};

/// Concept/question vocabulary of one domain.
class DomainSpec {
 public:
  DomainSpec() = default;
  /// Builds from an n_c x n_q incidence matrix. Questions without any
  /// concept get a shared orphan concept appended to the vocabulary.
  DomainSpec(int domain_id, BinaryMatrix q_matrix);

  int domain_id() const { return domain_id_; }
  int n_questions() const { return static_cast<int>(q_matrix_.cols()); }
  int n_concepts() const { return static_cast<int>(q_matrix_.rows()); }
  const BinaryMatrix& q_matrix() const { return q_matrix_; }
  /// Sorted concept indices of question q.
  const std::vector<int>& concepts_of(int q) const;
  /// Concept lists for a run of question ids (padding is rejected).
  std::vector<std::vector<int>> concept_lists(const std::vector<int>& questions, int count) const;
  bool has_orphan_concept() const { return orphan_concept_ >= 0; }

  // Raw identifiers as they appeared in the source file (may be empty).
  std::vector<std::string> question_labels;
  std::vector<std::string> concept_labels;

 private:
  int domain_id_ = 0;
  BinaryMatrix q_matrix_;
  std::vector<std::vector<int>> question_concepts_;
  int orphan_concept_ = -1;
};

struct DatasetSplit {
  std::vector<InteractionSequence> train;
  std::vector<InteractionSequence> test;
  std::uint64_t split_seed = 0;
};

struct IngestResult {
  DomainSpec domain;
  std::vector<Interaction> interactions;
};

/// Reads the canonical CSV: student_id,question_id,concept_ids,correct with
/// semicolon-joined concept ids. Identifiers are compacted to dense 0-based
/// indices in order of first appearance.
IngestResult ingest_csv(const std::filesystem::path& path, int domain_id);
IngestResult ingest_csv_text(const std::string& text, int domain_id);

/// Drops students with fewer than `min_total` interactions and cuts the rest
/// into consecutive windows; the final partial window is right-padded.
std::vector<InteractionSequence> window_and_filter(const std::vector<Interaction>& interactions,
                                                   int window_length = kDefaultWindowLength,
                                                   int min_total = kDefaultMinInteractions,
                                                   int domain_id = 0);

/// Student-disjoint split; `ratio` of the students go to train.
DatasetSplit split_by_student(const std::vector<InteractionSequence>& sequences,
                              double ratio, std::uint64_t seed);

using Batch = std::vector<std::size_t>;

/// Deterministic mini-batch schedule over a sequence pool.
///
/// Unlimited mode reshuffles every epoch and keeps the remainder batch.
/// With `limit_batches = k` a fixed subset of k * batch_size sequences is
/// drawn once and the same k full batches are returned every epoch.
class BatchIterator {
 public:
  BatchIterator(std::size_t pool_size, int batch_size, std::uint64_t seed,
                std::optional<int> limit_batches = std::nullopt);

  /// All batches of the next epoch.
  std::vector<Batch> next_epoch();
  /// Next single batch, rolling into a fresh epoch when one runs out.
  Batch next_batch();

  int batch_size() const { return batch_size_; }
  bool limited() const { return limit_.has_value(); }
  /// Indices in the fixed cold-start subset (limited mode only).
  const std::vector<std::size_t>& limited_pool() const { return fixed_; }

 private:
  std::vector<Batch> make_epoch();

  std::size_t pool_size_;
  int batch_size_;
  std::uint64_t seed_;
  std::optional<int> limit_;
  std::uint64_t epoch_ = 0;
  std::vector<std::size_t> fixed_;
  std::vector<Batch> pending_;
  std::size_t cursor_ = 0;
};

/// Same as BatchIterator(split.train.size(), ...) but rejects an empty split.
BatchIterator make_batches(const DatasetSplit& split, int batch_size, std::uint64_t seed,
                           std::optional<int> limit_batches = std::nullopt);

// Persistence: <dir>/train.json and <dir>/test.json, plus domain.json.
void save_split(const DatasetSplit& split, const std::filesystem::path& dir);
DatasetSplit load_split(const std::filesystem::path& dir);
void save_domain(const DomainSpec& domain, const std::filesystem::path& file);
DomainSpec load_domain(const std::filesystem::path& file);

/// Deterministic Fisher-Yates permutation of [0, n).
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

}  // namespace dgkt

#endif  // DGKT_CORE_DATA_HPP
