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

#include "dgkt/pipeline.hpp"

#include "dgkt/aggregation.hpp"
#include "dgkt/synthstudent.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <fstream>
#include <json.hpp>

using namespace dgkt;

namespace {

TrainConfig tiny_config() {
  TrainConfig c = TrainConfig::desk();
  c.d = 8;
  c.n_heads = 2;
  c.n_layers = 1;
  c.k = 3;
  c.lr = 5e-3;
  c.batch_size = 8;
  c.phase1_epochs = 3;
  c.phase2_epochs = 3;
  c.adapt_epochs = 3;
  c.scratch_epochs = 3;
  c.window_length = 30;
  return c;
}

DomainData tiny_domain(int id, int n_questions, int n_concepts, const TrainConfig& config) {
  SyntheticDomainConfig s;
  s.domain_id = id;
  s.n_students = 30;
  s.n_questions = n_questions;
  s.n_concepts = n_concepts;
  s.max_concepts_per_question = 2;
  s.min_interactions = 20;
  s.max_interactions = 35;
  s.seed = 40 + static_cast<std::uint64_t>(id);
  const auto d = generate_domain(s);
  return prepare_domain(d.domain, d.interactions, config, 7 + static_cast<std::uint64_t>(id));
}

struct Fixture {
  TrainConfig config = tiny_config();
  std::vector<DomainData> sources;
  DomainData target;

  Fixture() {
    sources = {tiny_domain(0, 12, 4, config), tiny_domain(1, 15, 5, config), tiny_domain(2, 10, 3, config),
               tiny_domain(3, 14, 4, config)};
    target = tiny_domain(9, 12, 4, config);
  }
};

std::vector<std::string> core_names(const ParamStore& s) {
  std::vector<std::string> out;
  for (const auto& name : s.names()) {
    if (name != "target_concepts") out.push_back(name);
  }
  return out;
}

std::vector<std::string> json_stream(const PhaseReport& r) {
  std::vector<std::string> out;
  for (const auto& m : r.metrics) out.push_back(m.to_json());
  return out;
}

}  // namespace

TEST_CASE("zero learning rate leaves every tensor bitwise unchanged") {
  Fixture f;
  f.config.lr = 0.0;
  f.config.phase1_epochs = 1;
  Checkpoint c = init_checkpoint(f.config, f.sources);
  const auto before = c.params.hash(c.params.names());
  train_phase1_cfl(c, f.sources);
  CHECK(c.params.hash(c.params.names()) == before);
}

TEST_CASE("an epoch is one whole batch from each source, losses summed") {
  Fixture f;
  f.config.batch_size = 1000;  // each batch is the full train split
  f.config.phase1_epochs = 1;
  Checkpoint c = init_checkpoint(f.config, f.sources);
  double expected = 0.0;
  for (const auto& s : f.sources) expected += evaluate_sequences(c, s.domain, s.split.train).loss;
  const auto before = c.params;
  const auto report = train_phase1_cfl(c, f.sources);
  REQUIRE(report.epoch_loss.size() == 1);
  CHECK(report.epoch_loss[0] == doctest::Approx(expected).epsilon(1e-10));
  // Every source table received its own batch.
  for (const auto& s : f.sources) {
    const auto key = "concepts/" + std::to_string(s.domain.domain_id());
    CHECK(!testing::bitwise_equal(before.value(key), c.params.value(key)));
  }
  CHECK(c.lineage == std::vector<std::string>{"CFL"});
}

TEST_CASE("source training reduces the training loss") {
  Fixture f;
  f.config.phase1_epochs = 60;
  Checkpoint c = init_checkpoint(f.config, f.sources);
  auto loss = [&] {
    double l = 0.0;
    for (const auto& s : f.sources) l += evaluate_sequences(c, s.domain, s.split.train).loss;
    return l;
  };
  const double start = loss();
  train_phase1_cfl(c, f.sources);
  CHECK(loss() < start);
}

TEST_CASE("singleton clusters leave predictions unchanged") {
  Fixture f;
  f.config.k = 4 + 5 + 3 + 4;
  Checkpoint c = init_checkpoint(f.config, f.sources);
  train_phase1_cfl(c, f.sources);
  std::vector<std::vector<double>> before;
  for (const auto& s : f.sources) before.push_back(predict_sequence(c, s.domain, s.split.test[0]).probabilities);
  c.config.lr = 0.0;
  train_phase2_refine(c, f.sources);
  for (std::size_t i = 0; i < f.sources.size(); ++i) {
    CHECK(embedding_mode(c, f.sources[i].domain.domain_id()) == EmbeddingMode::kPrototypes);
    const auto after = predict_sequence(c, f.sources[i].domain, f.sources[i].split.test[0]).probabilities;
    for (std::size_t t = 0; t < after.size(); ++t) CHECK(after[t] == doctest::Approx(before[i][t]).epsilon(1e-12));
  }
}

TEST_CASE("refinement trains prototypes and freezes the concept tables") {
  Fixture f;
  Checkpoint c = init_checkpoint(f.config, f.sources);
  train_phase1_cfl(c, f.sources);
  const auto before = predict_sequence(c, f.sources[0].domain, f.sources[0].split.test[0]).probabilities;
  const auto tables = c.params.names_with_prefix("concepts/");
  const auto table_hash = c.params.hash(tables);
  std::vector<ConceptTable> input;
  for (int id : c.source_domains) input.push_back({c.params.value("concepts/" + std::to_string(id)), id, false});
  const auto clustered = build_prototypes(input, c.config.k, c.config.cluster_seed);

  c.config.phase2_epochs = 1;
  train_phase2_refine(c, f.sources);
  CHECK(c.phase == Phase::kCR);
  CHECK(c.params.hash(tables) == table_hash);
  CHECK(c.assignment == clustered.assignment);
  CHECK(!testing::bitwise_equal(c.params.value("prototypes"), clustered.embeddings));
  for (const auto& name : tables) CHECK(!c.params.at(name).trainable);

  // Re-representation through k < n_e prototypes changes the embedding.
  const auto after = predict_sequence(c, f.sources[0].domain, f.sources[0].split.test[0]).probabilities;
  double gap = 0.0;
  for (std::size_t t = 0; t < after.size(); ++t) gap += std::abs(after[t] - before[t]);
  CHECK(gap > 0.0);
}

TEST_CASE("every prototype row receives gradient from full batches") {
  Fixture f;
  f.config.batch_size = 1000;
  Checkpoint c = init_checkpoint(f.config, f.sources);
  train_phase1_cfl(c, f.sources);
  std::vector<ConceptTable> input;
  for (int id : c.source_domains) input.push_back({c.params.value("concepts/" + std::to_string(id)), id, false});
  const Matrix clustered = build_prototypes(input, c.config.k, c.config.cluster_seed).embeddings;
  c.config.phase2_epochs = 1;
  train_phase2_refine(c, f.sources);
  // A first Adam step moves exactly the entries with nonzero gradient.
  const Matrix moved = c.params.value("prototypes") - clustered;
  for (Eigen::Index i = 0; i < moved.rows(); ++i) CHECK(moved.row(i).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("adaptation touches only the target table") {
  Fixture f;
  Checkpoint c = init_checkpoint(f.config, f.sources);
  train_phase1_cfl(c, f.sources);
  train_phase2_refine(c, f.sources);
  const auto frozen = core_names(c.params);
  const auto hash = c.params.hash(frozen);
  const auto report = adapt_target(c, f.target);
  CHECK(c.params.hash(frozen) == hash);
  CHECK(c.params.trainable_names() == std::vector<std::string>{"target_concepts"});
  CHECK(c.phase == Phase::kAdapt);
  CHECK(c.target_domain == 9);
  CHECK(c.init_choices.size() == 4);
  REQUIRE(report.metrics.size() == 2);
  CHECK(report.metrics.front().epoch == 0);
  CHECK(report.metrics.back().epoch == f.config.adapt_epochs);
  CHECK(embedding_mode(c, 9) == EmbeddingMode::kTarget);
  CHECK(c.lineage == std::vector<std::string>{"CFL", "CR", "ADAPT"});
}

TEST_CASE("with lambda zero the target table receives no update") {
  Fixture f;
  f.config.lambda = 0.0;
  Checkpoint c = init_checkpoint(f.config, f.sources);
  train_phase1_cfl(c, f.sources);
  train_phase2_refine(c, f.sources);
  Checkpoint probe = c;
  adapt_target(c, f.target);
  Matrix seeded(4, f.config.d);
  for (int i = 0; i < 4; ++i) seeded.row(i) = c.params.value("prototypes").row(c.init_choices[static_cast<std::size_t>(i)]);
  CHECK(testing::bitwise_equal(c.params.value("target_concepts"), seeded));

  probe.config.lambda = 0.7;
  adapt_target(probe, f.target);
  CHECK(!testing::bitwise_equal(probe.params.value("target_concepts"), seeded));
}

TEST_CASE("scratch baseline shares the limited sequences and trains everything") {
  Fixture f;
  f.config.target_batches = 2;
  const auto pool = limited_target_pool(f.config, f.target);
  CHECK(pool.size() == 16);
  CHECK(pool == limited_target_pool(f.config, f.target));
  PhaseReport report;
  const Checkpoint s = train_scratch(f.config, f.target, &report);
  CHECK(s.phase == Phase::kScratch);
  CHECK(s.params.trainable_names() == s.params.names());
  CHECK(s.params.contains("concepts/9"));
  CHECK(report.epoch_loss.size() == static_cast<std::size_t>(f.config.scratch_epochs));
  CHECK_THROWS_AS(embedding_mode(s, 0), Error);
}

TEST_CASE("phases must run in order") {
  Fixture f;
  Checkpoint c = init_checkpoint(f.config, f.sources);
  CHECK_THROWS_AS(train_phase2_refine(c, f.sources), Error);
  CHECK_THROWS_AS(adapt_target(c, f.target), Error);
  train_phase1_cfl(c, f.sources);
  CHECK_THROWS_AS(train_phase1_cfl(c, f.sources), Error);
  CHECK_THROWS_AS(adapt_target(c, f.target), Error);
  train_phase2_refine(c, f.sources);
  CHECK_THROWS_AS(adapt_target(c, f.sources[0]), Error);
  CHECK_THROWS_AS(init_checkpoint(f.config, {f.sources[0]}), Error);
  CHECK_THROWS_AS(init_checkpoint(f.config, {f.sources[0], f.sources[0]}), Error);
  CHECK_THROWS_AS(embedding_mode(c, 9), Error);
}

TEST_CASE("non-finite losses abort with the epoch and domain") {
  Fixture f;
  Checkpoint c = init_checkpoint(f.config, f.sources);
  c.params.at("concepts/2").value(0, 0) = std::nan("");
  CHECK_THROWS_WITH_AS(train_phase1_cfl(c, f.sources), doctest::Contains("epoch 1 on domain"), Error);
}

TEST_CASE("identical runs give identical metric streams") {
  Fixture f;
  f.config.eval_every = 1;
  auto run = [&] {
    std::vector<std::string> stream;
    Checkpoint c = init_checkpoint(f.config, f.sources);
    for (auto& s : json_stream(train_phase1_cfl(c, f.sources))) stream.push_back(s);
    for (auto& s : json_stream(train_phase2_refine(c, f.sources))) stream.push_back(s);
    for (auto& s : json_stream(adapt_target(c, f.target))) stream.push_back(s);
    return stream;
  };
  const auto a = run();
  CHECK(a.size() == 3 * 4 + 3 * 4 + 4);
  CHECK(a == run());
}

TEST_CASE("checkpoints round-trip and reject other versions") {
  Fixture f;
  Checkpoint c = init_checkpoint(f.config, f.sources);
  train_phase1_cfl(c, f.sources);
  train_phase2_refine(c, f.sources);
  adapt_target(c, f.target);
  const auto dir = testing::scratch_dir("pipeline_ckpt");
  save_checkpoint(c, dir / "c.json");
  const Checkpoint r = load_checkpoint(dir / "c.json");
  CHECK(r.phase == c.phase);
  CHECK(r.params.names() == c.params.names());
  for (const auto& name : c.params.names()) {
    CHECK(testing::bitwise_equal(r.params.value(name), c.params.value(name)));
    CHECK(r.params.at(name).trainable == c.params.at(name).trainable);
  }
  CHECK(r.assignment == c.assignment);
  CHECK(r.init_choices == c.init_choices);
  CHECK(r.lineage == c.lineage);
  CHECK(r.config.to_map() == c.config.to_map());
  CHECK(evaluate(r, f.target).to_json() == evaluate(c, f.target).to_json());

  nlohmann::json j;
  std::ifstream(dir / "c.json") >> j;
  j["format_version"] = kCheckpointFormatVersion + 1;
  std::ofstream(dir / "bad.json") << j.dump();
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.json"), Error);
}

TEST_CASE("metric records and evaluation errors") {
  Fixture f;
  const Checkpoint c = init_checkpoint(f.config, f.sources);
  const auto r = evaluate(c, f.sources[0], "CFL", 7);
  const auto j = nlohmann::json::parse(r.to_json());
  for (const char* key : {"phase", "epoch", "domain", "auc", "acc", "loss", "n_predictions"}) CHECK(j.contains(key));
  CHECK(j["epoch"] == 7);
  long expected = 0;
  for (const auto& s : f.sources[0].split.test) expected += s.valid_length() - 1;
  CHECK(r.n_predictions == expected);

  DomainData empty = f.sources[0];
  empty.split.test.clear();
  CHECK_THROWS_AS(evaluate(c, empty), Error);
  const Matrix pooled = pooled_states(c, f.sources[0].domain, f.sources[0].split.test);
  CHECK(pooled.rows() == static_cast<Eigen::Index>(f.sources[0].split.test.size()));
  CHECK(pooled.cols() == f.config.d);
}
