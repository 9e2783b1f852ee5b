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

#include "dgkt/synthstudent.hpp"

#include "dgkt/eval_metrics.hpp"
#include "test_support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <fstream>
#include <map>
#include <set>

using namespace dgkt;

namespace {

SyntheticDomainConfig small(std::uint64_t seed) {
  SyntheticDomainConfig c;
  c.n_students = 60;
  c.n_questions = 20;
  c.n_concepts = 6;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("deterministic dynamics answer wrong until mastered") {
  auto c = small(3);
  c.guess = 0.0;
  c.slip = 0.0;
  c.learn_rate = 1.0;
  const auto d = generate_domain(c);
  std::map<std::string, std::set<int>> seen;
  for (const auto& it : d.interactions) {
    auto& s = seen[it.student_id];
    const bool all_seen = std::all_of(it.concept_ids.begin(), it.concept_ids.end(),
                                      [&](int k) { return s.count(k) != 0; });
    CHECK(it.correct == (all_seen ? 1 : 0));
    s.insert(it.concept_ids.begin(), it.concept_ids.end());
  }
}

TEST_CASE("coin-flip regime carries no signal") {
  auto c = small(8);
  c.n_students = 150;
  c.guess = 0.5;
  c.slip = 0.5;
  const auto d = generate_domain(c);
  REQUIRE(d.interactions.size() >= 5000);
  // Any score that is a function of the past alone is uninformative here;
  // use a running correct rate.
  std::vector<double> scores;
  std::vector<int> labels;
  std::map<std::string, std::pair<int, int>> tally;
  for (const auto& it : d.interactions) {
    auto& [right, total] = tally[it.student_id];
    scores.push_back((right + 1.0) / (total + 2.0));
    labels.push_back(it.correct);
    right += it.correct;
    ++total;
  }
  CHECK(std::abs(auc(scores, labels) - 0.5) <= 0.03);
  for (double p : d.true_probability) CHECK(p == 0.5);
}

TEST_CASE("same seed gives the same log") {
  const auto a = generate_domain(small(5));
  const auto b = generate_domain(small(5));
  REQUIRE(a.interactions.size() == b.interactions.size());
  for (std::size_t i = 0; i < a.interactions.size(); ++i) {
    CHECK(a.interactions[i].question_id == b.interactions[i].question_id);
    CHECK(a.interactions[i].correct == b.interactions[i].correct);
  }
  CHECK(a.domain.q_matrix() == b.domain.q_matrix());
  CHECK(a.true_probability == b.true_probability);
}

TEST_CASE("config validation") {
  auto c = small(1);
  c.n_questions = 0;
  CHECK_THROWS_AS(generate_domain(c), Error);
  c = small(1);
  c.guess = 0.6;
  c.slip = 0.5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = small(1);
  c.learn_rate = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = small(1);
  c.max_concepts_per_question = 7;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("interactions respect the domain vocabulary") {
  auto c = small(9);
  c.max_concepts_per_question = 3;
  const auto d = generate_domain(c);
  CHECK(d.domain.n_questions() == 20);
  CHECK(d.domain.n_concepts() == 6);
  std::map<std::string, int> count;
  for (const auto& it : d.interactions) {
    CHECK(it.question_id >= 0);
    CHECK(it.question_id < 20);
    CHECK(!it.concept_ids.empty());
    CHECK(it.concept_ids.size() <= 3);
    CHECK(it.position == count[it.student_id]++);
  }
  for (const auto& [id, n] : count) {
    CHECK(n >= c.min_interactions);
    CHECK(n <= c.max_interactions);
  }
}

TEST_CASE("multi-source generation") {
  const auto sources = desk_source_configs(4);
  REQUIRE(sources.size() == 4);
  const auto data = generate_multisource(sources, desk_target_config(4));
  CHECK(data.sources.size() == 4);
  std::set<int> ids;
  for (const auto& s : data.sources) ids.insert(s.domain.domain_id());
  ids.insert(data.target.domain.domain_id());
  CHECK(ids.size() == 5);

  auto twin = small(1);
  auto other = small(2);
  const auto a = generate_domain(twin);
  const auto b = generate_domain(other);
  CHECK(a.domain.n_questions() == b.domain.n_questions());
  CHECK(a.domain.n_concepts() == b.domain.n_concepts());
  bool differ = false;
  for (std::size_t i = 0; i < std::min(a.interactions.size(), b.interactions.size()); ++i) {
    differ |= a.interactions[i].correct != b.interactions[i].correct ||
              a.interactions[i].question_id != b.interactions[i].question_id;
  }
  CHECK(differ);

  CHECK_THROWS_AS(generate_multisource({twin}, other), Error);
  CHECK_THROWS_AS(generate_multisource({twin, twin}, other), Error);
}

TEST_CASE("a small target yields about one cold-start batch") {
  auto c = small(6);
  c.n_students = 40;
  c.min_interactions = 30;
  c.max_interactions = 60;
  const auto d = generate_domain(c);
  const auto split = split_by_student(window_and_filter(d.interactions), 0.8, 1);
  CHECK(split.train.size() == 32);
}

TEST_CASE("faster learners end stronger") {
  auto slow = small(11);
  slow.n_students = 200;
  slow.learn_rate = 0.05;
  auto fast = slow;
  fast.learn_rate = 0.4;
  auto last_quartile = [](const SyntheticDomain& d) {
    std::map<std::string, std::vector<int>> by;
    for (const auto& it : d.interactions) by[it.student_id].push_back(it.correct);
    double sum = 0.0;
    for (const auto& [id, r] : by) {
      const auto from = r.size() * 3 / 4;
      sum += std::accumulate(r.begin() + static_cast<long>(from), r.end(), 0.0) / static_cast<double>(r.size() - from);
    }
    return sum / static_cast<double>(by.size());
  };
  CHECK(last_quartile(generate_domain(fast)) >= last_quartile(generate_domain(slow)));
}

TEST_CASE("ground truth ranks at least as well as a simple model") {
  const auto d = generate_domain(small(13));
  std::vector<int> labels;
  std::vector<double> running;
  std::map<std::string, std::pair<int, int>> tally;
  for (const auto& it : d.interactions) {
    auto& [right, total] = tally[it.student_id];
    running.push_back((right + 1.0) / (total + 2.0));
    labels.push_back(it.correct);
    right += it.correct;
    ++total;
  }
  CHECK(auc(d.true_probability, labels) >= auc(running, labels) - 1e-9);
}

TEST_CASE("synthetic logs round-trip through the canonical csv") {
  const auto dir = testing::scratch_dir("synth_csv");
  const auto d = generate_domain(small(2));
  write_domain_csv(d, dir / "d.csv");
  write_ground_truth(d, dir / "truth.jsonl");
  const auto r = ingest_csv(dir / "d.csv", 0);
  REQUIRE(r.interactions.size() == d.interactions.size());
  for (std::size_t i = 0; i < d.interactions.size(); ++i) CHECK(r.interactions[i].correct == d.interactions[i].correct);
  std::ifstream in(dir / "truth.jsonl");
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("p").get<double>() == d.true_probability[n]);
    CHECK(j.at("student").get<std::string>() == d.interactions[n].student_id);
    ++n;
  }
  CHECK(n == d.interactions.size());
}
