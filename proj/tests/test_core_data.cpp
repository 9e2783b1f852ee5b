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

#include "dgkt/core_data.hpp"

#include "test_support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

using namespace dgkt;

namespace {

std::vector<Interaction> student_log(const std::string& id, int n, int first_question = 0) {
  std::vector<Interaction> out;
  for (int i = 0; i < n; ++i) {
    out.push_back({id, first_question + i % 7, {i % 3}, i % 2, i});
  }
  return out;
}

std::vector<InteractionSequence> one_window_students(int n, int len = 25) {
  std::vector<Interaction> all;
  for (int s = 0; s < n; ++s) {
    auto log = student_log("s" + std::to_string(s), len);
    all.insert(all.end(), log.begin(), log.end());
  }
  return window_and_filter(all, 200, 20);
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("ingest compacts question and concept ids") {
  const auto r = ingest_csv_text(
      "student_id,question_id,concept_ids,correct\n"
      "u1,10,5,1\n"
      "u1,10,5;7,0\n"
      "u1,11,7,1\n",
      3);
  CHECK(r.domain.n_questions() == 2);
  CHECK(r.domain.n_concepts() == 2);
  CHECK(r.domain.domain_id() == 3);
  REQUIRE(r.interactions.size() == 3);
  CHECK(r.interactions[0].question_id == 0);
  CHECK(r.interactions[2].question_id == 1);
  CHECK(r.interactions[1].correct == 0);
  CHECK(r.interactions[2].position == 2);
  // Question 10 carries the union of its observed concepts.
  CHECK(r.domain.concepts_of(0) == std::vector<int>{0, 1});
  CHECK(r.domain.concepts_of(1) == std::vector<int>{1});
  CHECK(r.domain.question_labels == std::vector<std::string>{"10", "11"});
}

TEST_CASE("ingest rejects bad input") {
  const std::string header = "student_id,question_id,concept_ids,correct\n";
  CHECK(error_of([&] { ingest_csv_text(header + "u1,1,2,2\n", 0); }).find("invalid response value") !=
        std::string::npos);
  CHECK(error_of([&] { ingest_csv_text("student_id,question_id,concept_ids,correct,extra\n", 0); })
            .find("unknown column") != std::string::npos);
  CHECK(error_of([&] { ingest_csv_text(header + "u1,1,2,1\nu1,1\n", 0); }).find("line 3") != std::string::npos);
  CHECK(error_of([&] { ingest_csv_text("", 0); }).find("empty file") != std::string::npos);
  CHECK(error_of([&] { ingest_csv_text(header, 0); }).find("empty file") != std::string::npos);
  CHECK_THROWS_AS(ingest_csv("/nonexistent/dgkt.csv", 0), Error);
}

TEST_CASE("ingest at a hundred questions and concepts") {
  std::ostringstream csv;
  csv << "student_id,question_id,concept_ids,correct\n";
  for (int q = 0; q < 100; ++q) csv << "s" << q % 9 << "," << 1000 + q << "," << 500 + q << "," << q % 2 << "\n";
  const auto r = ingest_csv_text(csv.str(), 0);
  CHECK(r.domain.n_questions() == 100);
  CHECK(r.domain.n_concepts() == 100);
  CHECK_FALSE(r.domain.has_orphan_concept());
}

TEST_CASE("questions without concepts share an orphan concept") {
  const auto r = ingest_csv_text(
      "student_id,question_id,concept_ids,correct\n"
      "u1,1,a,1\n"
      "u1,2,,0\n"
      "u2,3,,1\n",
      0);
  CHECK(r.domain.has_orphan_concept());
  CHECK(r.domain.n_concepts() == 2);
  CHECK(r.domain.concepts_of(1) == std::vector<int>{1});
  CHECK(r.domain.concepts_of(2) == std::vector<int>{1});
  CHECK(r.interactions[1].concept_ids == std::vector<int>{1});
  for (int q = 0; q < r.domain.n_questions(); ++q) CHECK(r.domain.q_matrix().col(q).cast<int>().sum() >= 1);
}

TEST_CASE("ingest reads a file") {
  const auto dir = testing::scratch_dir("ingest_file");
  std::ofstream(dir / "d.csv") << "student_id,question_id,concept_ids,correct\nu,q,c,1\n";
  CHECK(ingest_csv(dir / "d.csv", 7).domain.n_questions() == 1);
}

TEST_CASE("windowing examples") {
  CHECK(window_and_filter(student_log("a", 19)).empty());

  const auto one = window_and_filter(student_log("a", 200));
  REQUIRE(one.size() == 1);
  CHECK(one[0].valid_length() == 200);
  CHECK(std::all_of(one[0].mask.begin(), one[0].mask.end(), [](auto m) { return m == 1; }));

  const auto two = window_and_filter(student_log("a", 230));
  REQUIRE(two.size() == 2);
  CHECK(two[0].valid_length() == 200);
  CHECK(two[1].valid_length() == 30);
  CHECK(two[1].window_length() == 200);
  for (int t = 30; t < 200; ++t) {
    CHECK(two[1].mask[t] == 0);
    CHECK(two[1].questions[t] == kPaddingQuestion);
  }
  CHECK_THROWS_AS(window_and_filter(student_log("a", 50), 1), Error);
}

TEST_CASE("windowing preserves content and never mixes students") {
  Rng rng(5);
  std::vector<Interaction> all;
  std::map<std::string, std::vector<Interaction>> by_student;
  for (int s = 0; s < 12; ++s) {
    const int n = 1 + static_cast<int>(rng.index(450));
    for (auto& it : student_log("s" + std::to_string(s), n, s)) {
      it.correct = rng.bernoulli(0.5);
      by_student[it.student_id].push_back(it);
      all.push_back(it);
    }
  }
  const auto seqs = window_and_filter(all, 64, 20, 4);
  std::map<std::string, std::vector<std::pair<int, int>>> rebuilt;
  for (const auto& s : seqs) {
    CHECK(s.domain_id == 4);
    CHECK(s.window_length() == 64);
    const int len = s.valid_length();
    for (int t = 0; t < 64; ++t) CHECK(s.mask[t] == (t < len ? 1 : 0));
    for (int t = 0; t < len; ++t) rebuilt[s.student_id].emplace_back(s.questions[t], s.responses[t]);
  }
  for (const auto& [id, log] : by_student) {
    if (log.size() < 20) {
      CHECK(rebuilt.count(id) == 0);
      continue;
    }
    std::vector<std::pair<int, int>> original;
    for (const auto& it : log) original.emplace_back(it.question_id, it.correct);
    CHECK(rebuilt[id] == original);
  }
}

TEST_CASE("split by student") {
  const auto seqs = one_window_students(10);
  const auto a = split_by_student(seqs, 0.8, 11);
  CHECK(a.train.size() == 8);
  CHECK(a.test.size() == 2);
  CHECK(a.split_seed == 11);

  const auto b = split_by_student(seqs, 0.8, 11);
  for (std::size_t i = 0; i < a.train.size(); ++i) CHECK(a.train[i].student_id == b.train[i].student_id);

  std::set<std::string> test_a, test_c;
  for (const auto& s : a.test) test_a.insert(s.student_id);
  bool differs = false;
  for (std::uint64_t seed = 12; seed < 20 && !differs; ++seed) {
    const auto c = split_by_student(seqs, 0.8, seed);
    CHECK(c.train.size() == 8);
    test_c.clear();
    for (const auto& s : c.test) test_c.insert(s.student_id);
    differs = test_c != test_a;
  }
  CHECK(differs);

  CHECK(error_of([&] { split_by_student(one_window_students(1), 0.8, 1); }).find("cannot split") !=
        std::string::npos);
}

TEST_CASE("split keeps a student's windows together") {
  std::vector<Interaction> all;
  for (int s = 0; s < 25; ++s) {
    auto log = student_log("s" + std::to_string(s), 20 + 37 * s);
    all.insert(all.end(), log.begin(), log.end());
  }
  const auto seqs = window_and_filter(all, 50, 20);
  const auto split = split_by_student(seqs, 0.8, 3);
  std::set<std::string> train, test;
  for (const auto& s : split.train) train.insert(s.student_id);
  for (const auto& s : split.test) test.insert(s.student_id);
  for (const auto& id : test) CHECK(train.count(id) == 0);
  CHECK(train.size() == 20);
  CHECK(split.train.size() + split.test.size() == seqs.size());
}

TEST_CASE("split sizes stay near four to one") {
  for (int n : {5, 10, 37, 100, 301}) {
    const auto split = split_by_student(one_window_students(n), 0.8, 9);
    const double expected_test = n / 5.0;
    CHECK(std::abs(static_cast<double>(split.test.size()) - expected_test) <= 1.0);
  }
}

TEST_CASE("limited batches reuse the same sequences") {
  BatchIterator it(64, 32, 7, 1);
  const auto first = it.next_epoch();
  REQUIRE(first.size() == 1);
  CHECK(first[0].size() == 32);
  for (int e = 0; e < 5; ++e) CHECK(it.next_epoch() == first);
  CHECK(it.limited_pool().size() == 32);

  BatchIterator eight(300, 32, 7, 8);
  const auto batches = eight.next_epoch();
  CHECK(batches.size() == 8);
  std::set<std::size_t> seen;
  for (const auto& b : batches) seen.insert(b.begin(), b.end());
  CHECK(seen.size() == 256);
  CHECK_THROWS_AS(BatchIterator(40, 32, 7, 2), Error);
}

TEST_CASE("unlimited batches keep the remainder") {
  BatchIterator it(65, 32, 1);
  const auto e1 = it.next_epoch();
  REQUIRE(e1.size() == 3);
  CHECK(e1[0].size() == 32);
  CHECK(e1[1].size() == 32);
  CHECK(e1[2].size() == 1);
  std::set<std::size_t> seen;
  for (const auto& b : e1) seen.insert(b.begin(), b.end());
  CHECK(seen.size() == 65);
  CHECK(it.next_epoch() != e1);  // reshuffled

  BatchIterator a(65, 32, 4), b(65, 32, 4);
  for (int i = 0; i < 7; ++i) CHECK(a.next_batch() == b.next_batch());
}

TEST_CASE("make_batches rejects an empty split") {
  DatasetSplit empty;
  CHECK_THROWS_AS(make_batches(empty, 32, 1), Error);
  CHECK_THROWS_AS(BatchIterator(10, 0, 1), Error);
}

TEST_CASE("split files round-trip and carry a version") {
  const auto dir = testing::scratch_dir("split_io");
  std::vector<Interaction> all;
  for (int s = 0; s < 6; ++s) {
    auto log = student_log("s" + std::to_string(s), 30 + 50 * s);
    all.insert(all.end(), log.begin(), log.end());
  }
  const auto split = split_by_student(window_and_filter(all, 100, 20, 2), 0.8, 17);
  save_split(split, dir);
  const auto back = load_split(dir);
  CHECK(back.split_seed == 17);
  REQUIRE(back.train.size() == split.train.size());
  REQUIRE(back.test.size() == split.test.size());
  for (std::size_t i = 0; i < split.train.size(); ++i) {
    CHECK(back.train[i].student_id == split.train[i].student_id);
    CHECK(back.train[i].domain_id == 2);
    CHECK(back.train[i].questions == split.train[i].questions);
    CHECK(back.train[i].responses == split.train[i].responses);
    CHECK(back.train[i].mask == split.train[i].mask);
  }

  nlohmann::json j;
  std::ifstream(dir / "train.json") >> j;
  CHECK(j.at("format_version") == kSplitFormatVersion);
  j["format_version"] = kSplitFormatVersion + 1;
  std::ofstream(dir / "train.json") << j.dump();
  CHECK_THROWS_AS(load_split(dir), Error);
}

TEST_CASE("domain files round-trip") {
  const auto dir = testing::scratch_dir("domain_io");
  const auto r = ingest_csv_text("student_id,question_id,concept_ids,correct\nu,1,a;b,1\nu,2,,0\nu,3,b,1\n", 5);
  save_domain(r.domain, dir / "domain.json");
  const auto back = load_domain(dir / "domain.json");
  CHECK(back.domain_id() == 5);
  CHECK(back.n_questions() == r.domain.n_questions());
  CHECK(back.n_concepts() == r.domain.n_concepts());
  CHECK(back.q_matrix() == r.domain.q_matrix());
}

TEST_CASE("ingest, window and split are pure") {
  std::ostringstream csv;
  csv << "student_id,question_id,concept_ids,correct\n";
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    csv << "s" << rng.index(40) << "," << rng.index(30) << "," << rng.index(8) << ";" << rng.index(8) << ","
        << rng.index(2) << "\n";
  }
  auto run = [&] {
    const auto r = ingest_csv_text(csv.str(), 1);
    return split_by_student(window_and_filter(r.interactions, 200, 20, 1), 0.8, 21);
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(a.train.size() == b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].student_id == b.train[i].student_id);
    CHECK(a.train[i].questions == b.train[i].questions);
    CHECK(a.train[i].responses == b.train[i].responses);
  }
}
