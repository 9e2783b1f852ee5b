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

#include "dgkt/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace dgkt {

using nlohmann::json;

int InteractionSequence::valid_length() const {
  int n = 0;
  for (auto m : mask) {
    if (!m) break;
    ++n;
  }
  return n;
}

DomainSpec::DomainSpec(int domain_id, BinaryMatrix q_matrix)
    : domain_id_(domain_id), q_matrix_(std::move(q_matrix)) {
  const Eigen::Index nq = q_matrix_.cols();
  bool orphans = false;
  for (Eigen::Index q = 0; q < nq; ++q) {
    if (q_matrix_.col(q).cast<int>().sum() == 0) orphans = true;
  }
  if (orphans) {
    BinaryMatrix grown = BinaryMatrix::Zero(q_matrix_.rows() + 1, nq);
    grown.topRows(q_matrix_.rows()) = q_matrix_;
    orphan_concept_ = static_cast<int>(q_matrix_.rows());
    for (Eigen::Index q = 0; q < nq; ++q) {
      if (q_matrix_.col(q).cast<int>().sum() == 0) grown(orphan_concept_, q) = 1;
    }
    q_matrix_ = std::move(grown);
  }
  question_concepts_.resize(static_cast<std::size_t>(nq));
  for (Eigen::Index q = 0; q < nq; ++q) {
    for (Eigen::Index c = 0; c < q_matrix_.rows(); ++c) {
      const auto v = q_matrix_(c, q);
      if (v > 1) throw Error("DomainSpec: q_matrix entries must be 0 or 1");
      if (v) question_concepts_[static_cast<std::size_t>(q)].push_back(static_cast<int>(c));
    }
  }
}

const std::vector<int>& DomainSpec::concepts_of(int q) const {
  if (q < 0 || q >= n_questions()) {
    throw Error("question id " + std::to_string(q) + " outside [0, " +
                std::to_string(n_questions()) + ")");
  }
  return question_concepts_[static_cast<std::size_t>(q)];
}

std::vector<std::vector<int>> DomainSpec::concept_lists(const std::vector<int>& questions,
                                                        int count) const {
  std::vector<std::vector<int>> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int t = 0; t < count; ++t) out.push_back(concepts_of(questions[static_cast<std::size_t>(t)]));
  return out;
}

namespace {

std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int intern(std::unordered_map<std::string, int>& vocab, std::vector<std::string>& labels,
           const std::string& key) {
  auto [it, inserted] = vocab.emplace(key, static_cast<int>(labels.size()));
  if (inserted) labels.push_back(key);
  return it->second;
}

}  // namespace

IngestResult ingest_csv_text(const std::string& text, int domain_id) {
  static const std::vector<std::string> kColumns = {"student_id", "question_id", "concept_ids",
                                                    "correct"};
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  // Skip leading blank lines; the first non-blank line is the header.
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw Error("ingest: empty file");
  if (line_no == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) {
    line = line.substr(3);  // UTF-8 BOM
  }
  const auto header = split_fields(trim(line), ',');
  for (const auto& h : header) {
    if (std::find(kColumns.begin(), kColumns.end(), trim(h)) == kColumns.end()) {
      throw Error("ingest: unknown column '" + trim(h) + "'");
    }
  }
  if (header.size() != kColumns.size()) {
    throw Error("ingest: header must be student_id,question_id,concept_ids,correct");
  }
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[trim(header[i])] = i;
  if (col.size() != kColumns.size()) throw Error("ingest: duplicate column in header");

  std::unordered_map<std::string, int> qvocab;
  std::unordered_map<std::string, int> cvocab;
  std::vector<std::string> qlabels;
  std::vector<std::string> clabels;
  std::unordered_map<std::string, int> positions;
  std::vector<std::pair<int, int>> pairs;  // (question, concept)
  IngestResult result;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line, ',');
    const auto where = " at line " + std::to_string(line_no);
    if (fields.size() != kColumns.size()) {
      throw Error("ingest: malformed row" + where + " (expected 4 fields, got " +
                  std::to_string(fields.size()) + ")");
    }
    Interaction it;
    it.student_id = trim(fields[col["student_id"]]);
    if (it.student_id.empty()) throw Error("ingest: malformed row" + where + " (empty student_id)");
    const auto qraw = trim(fields[col["question_id"]]);
    if (qraw.empty()) throw Error("ingest: malformed row" + where + " (empty question_id)");
    it.question_id = intern(qvocab, qlabels, qraw);

    const auto craw = trim(fields[col["correct"]]);
    if (craw == "1") {
      it.correct = 1;
    } else if (craw == "0") {
      it.correct = 0;
    } else {
      throw Error("ingest: invalid response value '" + craw + "'" + where);
    }
    for (const auto& tok : split_fields(trim(fields[col["concept_ids"]]), ';')) {
      const auto c = trim(tok);
      if (c.empty()) continue;
      const int cid = intern(cvocab, clabels, c);
      if (std::find(it.concept_ids.begin(), it.concept_ids.end(), cid) == it.concept_ids.end()) {
        it.concept_ids.push_back(cid);
      }
      pairs.emplace_back(it.question_id, cid);
    }
    std::sort(it.concept_ids.begin(), it.concept_ids.end());
    it.position = positions[it.student_id]++;
    result.interactions.push_back(std::move(it));
  }
  if (result.interactions.empty()) throw Error("ingest: empty file (no data rows)");

  BinaryMatrix q = BinaryMatrix::Zero(static_cast<Eigen::Index>(clabels.size()),
                                      static_cast<Eigen::Index>(qlabels.size()));
  for (auto [qi, ci] : pairs) q(ci, qi) = 1;
  result.domain = DomainSpec(domain_id, std::move(q));
  result.domain.question_labels = std::move(qlabels);
  result.domain.concept_labels = std::move(clabels);
  if (result.domain.has_orphan_concept()) result.domain.concept_labels.emplace_back("<orphan>");
  // The Q-matrix is the union over rows; interactions report the full set.
  for (auto& it : result.interactions) it.concept_ids = result.domain.concepts_of(it.question_id);
  return result;
}

IngestResult ingest_csv(const std::filesystem::path& path, int domain_id) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("ingest: cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ingest_csv_text(ss.str(), domain_id);
}

std::vector<InteractionSequence> window_and_filter(const std::vector<Interaction>& interactions,
                                                   int window_length, int min_total,
                                                   int domain_id) {
  if (window_length < 2) throw Error("window_and_filter: window_length must be >= 2");
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<const Interaction*>> by_student;
  for (const auto& it : interactions) {
    auto [pos, inserted] = by_student.try_emplace(it.student_id);
    if (inserted) order.push_back(it.student_id);
    pos->second.push_back(&it);
  }
  std::vector<InteractionSequence> out;
  const auto w = static_cast<std::size_t>(window_length);
  for (const auto& sid : order) {
    const auto& hist = by_student[sid];
    if (static_cast<int>(hist.size()) < min_total) continue;
    for (std::size_t start = 0; start < hist.size(); start += w) {
      InteractionSequence seq;
      seq.student_id = sid;
      seq.domain_id = domain_id;
      seq.questions.assign(w, kPaddingQuestion);
      seq.responses.assign(w, 0);
      seq.mask.assign(w, 0);
      const std::size_t n = std::min(w, hist.size() - start);
      for (std::size_t t = 0; t < n; ++t) {
        seq.questions[t] = hist[start + t]->question_id;
        seq.responses[t] = hist[start + t]->correct;
        seq.mask[t] = 1;
      }
      out.push_back(std::move(seq));
    }
  }
  return out;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.index(i));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

DatasetSplit split_by_student(const std::vector<InteractionSequence>& sequences, double ratio,
                              std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error("split_by_student: ratio must be in (0, 1)");
  std::vector<std::string> students;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& s : sequences) {
    if (index.emplace(s.student_id, students.size()).second) students.push_back(s.student_id);
  }
  if (students.size() < 2) throw Error("split_by_student: cannot split fewer than 2 students");
  const auto n = students.size();
  auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  const auto perm = seeded_permutation(n, seed);
  std::vector<bool> in_train(n, false);
  for (std::size_t i = 0; i < n_train; ++i) in_train[perm[i]] = true;

  DatasetSplit split;
  split.split_seed = seed;
  for (const auto& s : sequences) {
    (in_train[index[s.student_id]] ? split.train : split.test).push_back(s);
  }
  return split;
}

BatchIterator::BatchIterator(std::size_t pool_size, int batch_size, std::uint64_t seed,
                             std::optional<int> limit_batches)
    : pool_size_(pool_size), batch_size_(batch_size), seed_(seed), limit_(limit_batches) {
  if (batch_size < 1) throw Error("make_batches: batch_size must be >= 1");
  if (pool_size == 0) throw Error("make_batches: empty split");
  if (limit_) {
    if (*limit_ < 1) throw Error("make_batches: limit_batches must be >= 1");
    const auto need = static_cast<std::size_t>(*limit_) * static_cast<std::size_t>(batch_size);
    if (need > pool_size) {
      throw Error("make_batches: limit of " + std::to_string(*limit_) + " batches needs " +
                  std::to_string(need) + " sequences, only " + std::to_string(pool_size) +
                  " available");
    }
    const auto perm = seeded_permutation(pool_size, seed);
    fixed_.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(need));
  }
}

std::vector<Batch> BatchIterator::make_epoch() {
  std::vector<Batch> out;
  const auto bs = static_cast<std::size_t>(batch_size_);
  if (limit_) {
    for (std::size_t b = 0; b < fixed_.size(); b += bs) {
      out.emplace_back(fixed_.begin() + static_cast<std::ptrdiff_t>(b),
                       fixed_.begin() + static_cast<std::ptrdiff_t>(b + bs));
    }
  } else {
    const auto perm = seeded_permutation(pool_size_, derive_seed(seed_, epoch_));
    for (std::size_t b = 0; b < perm.size(); b += bs) {
      const auto e = std::min(perm.size(), b + bs);
      out.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(b),
                       perm.begin() + static_cast<std::ptrdiff_t>(e));
    }
  }
  ++epoch_;
  return out;
}

std::vector<Batch> BatchIterator::next_epoch() {
  pending_.clear();
  cursor_ = 0;
  return make_epoch();
}

Batch BatchIterator::next_batch() {
  if (cursor_ >= pending_.size()) {
    pending_ = make_epoch();
    cursor_ = 0;
  }
  return pending_[cursor_++];
}

BatchIterator make_batches(const DatasetSplit& split, int batch_size, std::uint64_t seed,
                           std::optional<int> limit_batches) {
  if (split.train.empty()) throw Error("make_batches: empty split");
  return BatchIterator(split.train.size(), batch_size, seed, limit_batches);
}

namespace {

json sequences_to_json(const std::vector<InteractionSequence>& seqs) {
  json arr = json::array();
  for (const auto& s : seqs) {
    const int n = s.valid_length();
    arr.push_back({{"student_id", s.student_id},
                   {"domain_id", s.domain_id},
                   {"length", n},
                   {"questions", std::vector<int>(s.questions.begin(), s.questions.begin() + n)},
                   {"responses", std::vector<int>(s.responses.begin(), s.responses.begin() + n)}});
  }
  return arr;
}

std::vector<InteractionSequence> sequences_from_json(const json& arr, int window) {
  std::vector<InteractionSequence> out;
  for (const auto& j : arr) {
    InteractionSequence s;
    s.student_id = j.at("student_id").get<std::string>();
    s.domain_id = j.at("domain_id").get<int>();
    const auto q = j.at("questions").get<std::vector<int>>();
    const auto r = j.at("responses").get<std::vector<int>>();
    const int n = j.at("length").get<int>();
    if (static_cast<int>(q.size()) != n || static_cast<int>(r.size()) != n || n > window) {
      throw Error("load_split: inconsistent sequence record for " + s.student_id);
    }
    s.questions.assign(static_cast<std::size_t>(window), kPaddingQuestion);
    s.responses.assign(static_cast<std::size_t>(window), 0);
    s.mask.assign(static_cast<std::size_t>(window), 0);
    for (int t = 0; t < n; ++t) {
      s.questions[static_cast<std::size_t>(t)] = q[static_cast<std::size_t>(t)];
      s.responses[static_cast<std::size_t>(t)] = r[static_cast<std::size_t>(t)];
      s.mask[static_cast<std::size_t>(t)] = 1;
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_json(const json& j, const std::filesystem::path& file) {
  std::ofstream f(file);
  if (!f) throw Error("cannot write " + file.string());
  f << j.dump(1) << '\n';
}

json read_json(const std::filesystem::path& file) {
  std::ifstream f(file);
  if (!f) throw Error("cannot read " + file.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw Error("malformed JSON in " + file.string() + ": " + e.what());
  }
}

}  // namespace

void save_split(const DatasetSplit& split, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto window_of = [](const std::vector<InteractionSequence>& v) {
    return v.empty() ? kDefaultWindowLength : v.front().window_length();
  };
  for (const auto& [name, seqs] : {std::pair{"train", &split.train}, std::pair{"test", &split.test}}) {
    json j = {{"format", "dgkt-split"},
              {"format_version", kSplitFormatVersion},
              {"split", name},
              {"split_seed", split.split_seed},
              {"window_length", window_of(*seqs)},
              {"sequences", sequences_to_json(*seqs)}};
    write_json(j, dir / (std::string(name) + ".json"));
  }
}

DatasetSplit load_split(const std::filesystem::path& dir) {
  DatasetSplit split;
  for (const auto& [name, seqs] : {std::pair{"train", &split.train}, std::pair{"test", &split.test}}) {
    const json j = read_json(dir / (std::string(name) + ".json"));
    if (j.value("format", "") != "dgkt-split") throw Error("load_split: not a dgkt split file");
    if (j.value("format_version", -1) != kSplitFormatVersion) {
      throw Error("load_split: unsupported format_version in " + std::string(name) + ".json");
    }
    split.split_seed = j.at("split_seed").get<std::uint64_t>();
    *seqs = sequences_from_json(j.at("sequences"), j.at("window_length").get<int>());
  }
  return split;
}

void save_domain(const DomainSpec& domain, const std::filesystem::path& file) {
  json qs = json::array();
  for (int q = 0; q < domain.n_questions(); ++q) qs.push_back(domain.concepts_of(q));
  json j = {{"format", "dgkt-domain"},
            {"format_version", kDomainFormatVersion},
            {"domain_id", domain.domain_id()},
            {"n_questions", domain.n_questions()},
            {"n_concepts", domain.n_concepts()},
            {"question_concepts", qs},
            {"question_labels", domain.question_labels},
            {"concept_labels", domain.concept_labels}};
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  write_json(j, file);
}

DomainSpec load_domain(const std::filesystem::path& file) {
  const json j = read_json(file);
  if (j.value("format", "") != "dgkt-domain") throw Error("load_domain: not a dgkt domain file");
  if (j.value("format_version", -1) != kDomainFormatVersion) {
    throw Error("load_domain: unsupported format_version");
  }
  const int nq = j.at("n_questions").get<int>();
  const int nc = j.at("n_concepts").get<int>();
  BinaryMatrix q = BinaryMatrix::Zero(nc, nq);
  const auto lists = j.at("question_concepts").get<std::vector<std::vector<int>>>();
  if (static_cast<int>(lists.size()) != nq) throw Error("load_domain: question count mismatch");
  for (int qi = 0; qi < nq; ++qi) {
    for (int c : lists[static_cast<std::size_t>(qi)]) {
      if (c < 0 || c >= nc) throw Error("load_domain: concept index out of range");
      q(c, qi) = 1;
    }
  }
  DomainSpec d(j.at("domain_id").get<int>(), std::move(q));
  d.question_labels = j.value("question_labels", std::vector<std::string>{});
  d.concept_labels = j.value("concept_labels", std::vector<std::string>{});
  return d;
}

}  // namespace dgkt
