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

#ifndef DGKT_EVAL_METRICS_HPP
#define DGKT_EVAL_METRICS_HPP

#include "dgkt/types.hpp"

#include <cstdint>
#include <span>

namespace dgkt {

/// Area under the ROC curve from rank statistics; ties count one half.
double auc(std::span<const double> scores, std::span<const int> labels);

/// Fraction of predictions on the right side of `threshold`.
double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

inline constexpr int kMinProbeSamples = 20;

/// 2(1 - 2 err) for a linear domain classifier trained on half of each set
/// and scored on the other half, clamped to [0, 2]. Rows are samples.
double proxy_a_distance(const Matrix& features_a, const Matrix& features_b, std::uint64_t seed);

}  // namespace dgkt

#endif  // DGKT_EVAL_METRICS_HPP
