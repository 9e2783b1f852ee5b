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

#include "dgkt/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace dgkt {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

double shifted(double p, double shift) {
  if (shift == 0.0 || p <= 0.0 || p >= 1.0) return p;
  const double logit = std::log(p / (1.0 - p)) - shift;
  return 1.0 / (1.0 + std::exp(-logit));
}

}  // namespace

void SyntheticDomainConfig::validate() const {
  if (n_questions <= 0) throw Error("synth: n_questions must be positive");
  if (n_concepts <= 0) throw Error("synth: n_concepts must be positive");
  if (n_students <= 0) throw Error("synth: n_students must be positive");
  if (min_concepts_per_question < 1 || max_concepts_per_question < min_concepts_per_question ||
      max_concepts_per_question > n_concepts) {
    throw Error("synth: invalid concepts_per_question range");
  }
  if (min_interactions < 1 || max_interactions < min_interactions) {
    throw Error("synth: invalid interaction count range");
  }
  if (!is_probability(learn_rate) || !is_probability(guess) || !is_probability(slip)) {
    throw Error("synth: learn_rate, guess and slip must lie in [0, 1]");
  }
  // Equality is the information-free regime and stays allowed.
  if (slip > 1.0 - guess) throw Error("synth: slip must not exceed 1 - guess");
  if (!std::isfinite(difficulty_shift)) throw Error("synth: difficulty_shift must be finite");
}

SyntheticDomain generate_domain(const SyntheticDomainConfig& config) {
  config.validate();
  Rng rng(config.seed);

  BinaryMatrix q = BinaryMatrix::Zero(config.n_concepts, config.n_questions);
  const int span = config.max_concepts_per_question - config.min_concepts_per_question + 1;
  for (int qi = 0; qi < config.n_questions; ++qi) {
    const int count = config.min_concepts_per_question + static_cast<int>(rng.index(span));
    std::set<int> chosen;
    while (static_cast<int>(chosen.size()) < count) {
      chosen.insert(static_cast<int>(rng.index(static_cast<std::uint64_t>(config.n_concepts))));
    }
    for (int c : chosen) q(c, qi) = 1;
  }

  SyntheticDomain out;
  out.domain = DomainSpec(config.domain_id, std::move(q));
  const int len_span = config.max_interactions - config.min_interactions + 1;
  std::vector<std::uint8_t> mastered(static_cast<std::size_t>(config.n_concepts));
  for (int s = 0; s < config.n_students; ++s) {
    std::fill(mastered.begin(), mastered.end(), 0);
    const std::string sid = "d" + std::to_string(config.domain_id) + "_s" + std::to_string(s);
    const int n = config.min_interactions + static_cast<int>(rng.index(len_span));
    for (int t = 0; t < n; ++t) {
      const int qi = static_cast<int>(rng.index(static_cast<std::uint64_t>(config.n_questions)));
      const auto& concepts = out.domain.concepts_of(qi);
      const bool all = std::all_of(concepts.begin(), concepts.end(),
                                   [&](int c) { return mastered[static_cast<std::size_t>(c)] != 0; });
      const double p = shifted(all ? 1.0 - config.slip : config.guess, config.difficulty_shift);
      Interaction it;
      it.student_id = sid;
      it.question_id = qi;
      it.concept_ids = concepts;
      it.correct = rng.bernoulli(p) ? 1 : 0;
      it.position = t;
      out.interactions.push_back(std::move(it));
      out.true_probability.push_back(p);
      for (int c : concepts) {
        auto& m = mastered[static_cast<std::size_t>(c)];
        if (!m && rng.bernoulli(config.learn_rate)) m = 1;
      }
    }
  }
  return out;
}

MultiSourceData generate_multisource(const std::vector<SyntheticDomainConfig>& sources,
                                     const SyntheticDomainConfig& target) {
  if (sources.size() < 2) throw Error("synth: at least two source domains are required");
  bool heterogeneous = false;
  for (std::size_t i = 1; i < sources.size(); ++i) {
    const auto& a = sources[0];
    const auto& b = sources[i];
    if (a.difficulty_shift != b.difficulty_shift || a.n_questions != b.n_questions ||
        a.n_concepts != b.n_concepts || a.seed != b.seed) {
      heterogeneous = true;
    }
  }
  if (!heterogeneous) throw Error("synth: source domains must differ");
  MultiSourceData data;
  for (const auto& c : sources) data.sources.push_back(generate_domain(c));
  data.target = generate_domain(target);
  return data;
}

std::vector<SyntheticDomainConfig> desk_source_configs(std::uint64_t seed) {
  auto make = [&](int id, int nq, int nc, int cmax, double learn, double guess, double slip,
                  double shift) {
    SyntheticDomainConfig c;
    c.domain_id = id;
    c.n_students = 300;
    c.n_questions = nq;
    c.n_concepts = nc;
    c.min_concepts_per_question = 1;
    c.max_concepts_per_question = cmax;
    c.min_interactions = 30;
    c.max_interactions = 80;
    c.learn_rate = learn;
    c.guess = guess;
    c.slip = slip;
    c.difficulty_shift = shift;
    c.seed = derive_seed(seed, static_cast<std::uint64_t>(id));
    return c;
  };
  return {make(0, 60, 10, 2, 0.25, 0.20, 0.10, 0.0), make(1, 80, 12, 2, 0.15, 0.25, 0.15, 0.5),
          make(2, 50, 8, 1, 0.30, 0.15, 0.10, -0.5), make(3, 100, 15, 3, 0.20, 0.30, 0.10, 0.3)};
}

SyntheticDomainConfig desk_target_config(std::uint64_t seed) {
  SyntheticDomainConfig c;
  c.domain_id = 4;
  c.n_students = 400;
  c.n_questions = 70;
  c.n_concepts = 10;
  c.min_concepts_per_question = 1;
  c.max_concepts_per_question = 2;
  c.min_interactions = 30;
  c.max_interactions = 80;
  c.learn_rate = 0.2;
  c.guess = 0.2;
  c.slip = 0.12;
  c.difficulty_shift = 0.2;
  c.seed = derive_seed(seed, 4);
  return c;
}

void write_domain_csv(const SyntheticDomain& data, const std::filesystem::path& file) {
  std::ofstream f(file);
  if (!f) throw Error("cannot write " + file.string());
  f << "student_id,question_id,concept_ids,correct\n";
  for (const auto& it : data.interactions) {
    f << it.student_id << ',' << it.question_id << ',';
    for (std::size_t i = 0; i < it.concept_ids.size(); ++i) {
      if (i) f << ';';
      f << it.concept_ids[i];
    }
    f << ',' << it.correct << '\n';
  }
}

void write_ground_truth(const SyntheticDomain& data, const std::filesystem::path& file) {
  std::ofstream f(file);
  if (!f) throw Error("cannot write " + file.string());
  for (std::size_t i = 0; i < data.interactions.size(); ++i) {
    nlohmann::json j = {{"student", data.interactions[i].student_id},
                        {"position", data.interactions[i].position},
                        {"p", data.true_probability[i]}};
    f << j.dump() << '\n';
  }
}

}  // namespace dgkt
