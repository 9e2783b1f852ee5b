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
#include "dgkt/decoder_loss.hpp"
#include "dgkt/embedding.hpp"
#include "dgkt/eval_metrics.hpp"
#include "dgkt/random.hpp"
#include "dgkt/synthstudent.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <limits>

namespace dgkt {

namespace {

// Seed streams.
constexpr std::uint64_t kEncoderStream = 1;
constexpr std::uint64_t kDecoderStream = 2;
constexpr std::uint64_t kTargetTableStream = 3;
constexpr std::uint64_t kTargetBatchStream = 4;
constexpr std::uint64_t kConceptStream = 100;
constexpr std::uint64_t kSourceBatchStream = 1000;

std::string concept_key(int domain_id) { return "concepts/" + std::to_string(domain_id); }

bool has_prefix(const std::string& s, const char* prefix) { return s.rfind(prefix, 0) == 0; }

bool is_model_core(const std::string& name) {
  return has_prefix(name, "encoder/") || has_prefix(name, "decoder/") || has_prefix(name, "seqin/") ||
         has_prefix(name, "relevance/");
}

void init_model_core(ParamStore& store, const TrainConfig& config) {
  init_encoder_params(store, config.encoder_config(), derive_seed(config.model_seed, kEncoderStream));
  init_decoder_params(store, config.d, derive_seed(config.model_seed, kDecoderStream));
}

std::size_t source_index(const Checkpoint& c, int domain_id) {
  for (std::size_t i = 0; i < c.source_domains.size(); ++i) {
    if (c.source_domains[i] == domain_id) return i;
  }
  throw Error("checkpoint has no source domain " + std::to_string(domain_id));
}

BinaryMatrix source_proto_q(const Checkpoint& c, const DomainSpec& domain) {
  const auto i = source_index(c, domain.domain_id());
  if (c.source_concepts[i] != domain.n_concepts()) throw Error("source domain concept count changed");
  PrototypeTable view;
  view.assignment = c.assignment;
  view.domain_offsets = c.domain_offsets;
  return proto_q_matrix(view.assignment_slice(i, domain.n_concepts()), domain.q_matrix());
}

// Everything needed to embed one domain's questions.
struct DomainView {
  const DomainSpec* domain = nullptr;
  EmbeddingMode mode = EmbeddingMode::kConcepts;
  BinaryMatrix proto_q;
};

DomainView make_view(const Checkpoint& c, const DomainSpec& domain) {
  DomainView v{&domain, embedding_mode(c, domain.domain_id()), {}};
  if (v.mode == EmbeddingMode::kPrototypes) v.proto_q = source_proto_q(c, domain);
  return v;
}

struct Forward {
  ad::Var probabilities;
  EncoderOutput encoded;
};

Forward forward(Binder& b, const TrainConfig& config, const DomainView& view,
                const InteractionSequence& s, bool record_attention) {
  const int len = s.valid_length();
  const std::vector<int> questions(s.questions.begin(), s.questions.begin() + len);
  const std::span<const int> responses(s.responses.data(), static_cast<std::size_t>(len));
  const auto lists = view.domain->concept_lists(questions, len);
  ad::Var m_q;
  switch (view.mode) {
    case EmbeddingMode::kConcepts:
      m_q = ad_embed::lookup(b(concept_key(view.domain->domain_id())), lists);
      break;
    case EmbeddingMode::kPrototypes: {
      std::vector<std::vector<int>> proto_lists;
      proto_lists.reserve(questions.size());
      for (int q : questions) proto_lists.push_back(column_support(view.proto_q, q));
      m_q = ad_embed::lookup(b("prototypes"), proto_lists);
      break;
    }
    case EmbeddingMode::kTarget:
      m_q = ad_embed::target_lookup(b("target_concepts"), b("prototypes"), lists, config.lambda);
      break;
  }
  ad::Var m_qr = ad_embed::question_response(m_q, responses);
  IndexMatrix relevance;
  EncoderInputs in{m_q, m_qr, nullptr};
  if (config.encoder == EncoderVariant::kRA) {
    relevance = relevance_matrix(questions, *view.domain);
    in.relevance = &relevance;
  }
  Forward f;
  f.encoded = encode(config.encoder_config(), b, in, record_attention);
  f.probabilities = decode(b, f.encoded.states, m_q);
  return f;
}

long predicted_steps(const InteractionSequence& s) { return std::max(s.valid_length() - 1, 0); }

// Accumulates d(mean batch loss)/d(params) into the store; returns that mean loss.
double accumulate_batch(Checkpoint& c, const DomainView& view, const std::vector<InteractionSequence>& pool,
                        const Batch& batch) {
  long total = 0;
  for (auto i : batch) total += predicted_steps(pool[i]);
  if (total == 0) return 0.0;  // only single-step windows: nothing to predict
  const double weight = 1.0 / static_cast<double>(total);
  double loss = 0.0;
  for (auto i : batch) {
    const auto& s = pool[i];
    if (predicted_steps(s) == 0) continue;
    ad::Tape tape;
    Binder b(tape, c.params);
    Forward f = forward(b, c.config, view, s, false);
    ad::Var l = bce_sum(f.probabilities, s.responses);
    loss += l.value()(0, 0);
    tape.backward(l, weight);
    b.accumulate();
  }
  return loss * weight;
}

void check_finite(double loss, const std::string& phase, int epoch, int domain) {
  if (!std::isfinite(loss)) {
    throw Error(phase + ": non-finite loss " + std::to_string(loss) + " at epoch " + std::to_string(epoch) +
                " on domain " + std::to_string(domain));
  }
}

std::vector<std::string> frozen_names(const ParamStore& store) {
  std::vector<std::string> out;
  for (const auto& [name, p] : store.items()) {
    if (!p.trainable) out.push_back(name);
  }
  return out;
}

// Frozen tensors must come out of a phase bit-identical.
class FreezeGuard {
 public:
  FreezeGuard(const ParamStore& store, std::string phase)
      : store_(store), phase_(std::move(phase)), names_(frozen_names(store)), hash_(store.hash(names_)) {}
  void check() const {
    if (store_.hash(names_) != hash_) throw Error(phase_ + ": a frozen tensor changed");
  }

 private:
  const ParamStore& store_;
  std::string phase_;
  std::vector<std::string> names_;
  std::uint64_t hash_;
};

class Recorder {
 public:
  Recorder(PhaseReport& report, const MetricSink& sink) : report_(report), sink_(sink) {}
  void operator()(MetricRecord r) {
    if (sink_) sink_(r);
    report_.metrics.push_back(std::move(r));
  }

 private:
  PhaseReport& report_;
  const MetricSink& sink_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool eval_due(const TrainConfig& c, int epoch, int last) {
  return epoch == last || (c.eval_every > 0 && epoch % c.eval_every == 0);
}

PhaseReport run_source_phase(Checkpoint& c, const std::vector<DomainData>& sources, Phase phase, int epochs,
                             const MetricSink& sink) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string tag = to_string(phase);
  PhaseReport report;
  Recorder record(report, sink);
  std::vector<DomainView> views;
  std::vector<BatchIterator> iters;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    if (sources[s].domain.domain_id() != c.source_domains[s]) throw Error(tag + ": source order differs from checkpoint");
    views.push_back(make_view(c, sources[s].domain));
    const auto stream = kSourceBatchStream * (static_cast<std::uint64_t>(phase) + 1) + s;
    iters.push_back(make_batches(sources[s].split, c.config.batch_size, derive_seed(c.config.data_seed, stream)));
  }
  FreezeGuard guard(c.params, tag);
  Adam adam(c.config.lr);
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    c.params.zero_grad();
    double total = 0.0;
    for (std::size_t s = 0; s < sources.size(); ++s) {
      const double l = accumulate_batch(c, views[s], sources[s].split.train, iters[s].next_batch());
      check_finite(l, tag, epoch, sources[s].domain.domain_id());
      total += l;
    }
    adam.step(c.params, c.config.grad_clip);
    report.epoch_loss.push_back(total);
    if (eval_due(c.config, epoch, epochs)) {
      for (const auto& src : sources) record(evaluate(c, src, tag, epoch));
    }
  }
  guard.check();
  report.seconds = seconds_since(t0);
  return report;
}

// All limited batches per epoch, one optimizer step on their summed loss.
void run_limited_epochs(Checkpoint& c, const DomainData& target, int epochs, const std::string& tag,
                        PhaseReport& report, Recorder& record) {
  BatchIterator it = make_batches(target.split, c.config.batch_size,
                                  derive_seed(c.config.data_seed, kTargetBatchStream), c.config.target_batches);
  const DomainView view = make_view(c, target.domain);
  FreezeGuard guard(c.params, tag);
  Adam adam(c.config.lr);
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    c.params.zero_grad();
    double total = 0.0;
    for (const auto& batch : it.next_epoch()) total += accumulate_batch(c, view, target.split.train, batch);
    check_finite(total, tag, epoch, target.domain.domain_id());
    adam.step(c.params, c.config.grad_clip);
    report.epoch_loss.push_back(total);
    if (eval_due(c.config, epoch, epochs)) record(evaluate(c, target, tag, epoch));
  }
  guard.check();
}

}  // namespace

std::string MetricRecord::to_json() const {
  nlohmann::json j = {{"phase", phase}, {"epoch", epoch}, {"domain", domain}, {"auc", auc},
                      {"acc", acc},     {"loss", loss},   {"n_predictions", n_predictions}};
  return j.dump();
}

DomainData prepare_domain(const DomainSpec& domain, const std::vector<Interaction>& interactions,
                          const TrainConfig& config, std::uint64_t split_seed) {
  auto seqs = window_and_filter(interactions, config.window_length, config.min_interactions, domain.domain_id());
  return {domain, split_by_student(seqs, config.split_ratio, split_seed)};
}

SyntheticPreset synthetic_preset(const TrainConfig& config) {
  const std::uint64_t seed = config.data_seed;
  SyntheticPreset preset;
  for (const auto& sc : desk_source_configs(seed)) {
    const auto d = generate_domain(sc);
    preset.sources.push_back(prepare_domain(d.domain, d.interactions, config,
                                            derive_seed(seed, 10 + static_cast<std::uint64_t>(sc.domain_id))));
  }
  const auto t = generate_domain(desk_target_config(seed));
  preset.target = prepare_domain(t.domain, t.interactions, config,
                                 derive_seed(seed, 10 + static_cast<std::uint64_t>(t.domain.domain_id())));
  return preset;
}

Checkpoint init_checkpoint(const TrainConfig& config, const std::vector<DomainData>& sources) {
  config.validate();
  if (sources.size() < 2) throw Error("source training needs at least two source domains");
  Checkpoint c;
  c.config = config;
  for (const auto& s : sources) {
    const int id = s.domain.domain_id();
    if (std::find(c.source_domains.begin(), c.source_domains.end(), id) != c.source_domains.end()) {
      throw Error("duplicate source domain id " + std::to_string(id));
    }
    c.source_domains.push_back(id);
    c.source_concepts.push_back(s.domain.n_concepts());
    c.params.add(concept_key(id),
                 init_concept_embeddings(s.domain.n_concepts(), config.d,
                                         derive_seed(config.model_seed, kConceptStream + static_cast<std::uint64_t>(id))));
  }
  init_model_core(c.params, config);
  return c;
}

PhaseReport train_phase1_cfl(Checkpoint& c, const std::vector<DomainData>& sources, const MetricSink& sink) {
  if (c.phase != Phase::kInit) throw Error("CFL: expected a fresh checkpoint, got phase " + to_string(c.phase));
  if (sources.size() != c.source_domains.size()) throw Error("CFL: source count differs from checkpoint");
  c.params.set_trainable([](const std::string& n) { return has_prefix(n, "concepts/") || is_model_core(n); });
  auto report = run_source_phase(c, sources, Phase::kCFL, c.config.phase1_epochs, sink);
  c.phase = Phase::kCFL;
  c.lineage.push_back(to_string(Phase::kCFL));
  return report;
}

PhaseReport train_phase2_refine(Checkpoint& c, const std::vector<DomainData>& sources, const MetricSink& sink) {
  if (c.phase != Phase::kCFL) throw Error("CR: expected a CFL checkpoint, got phase " + to_string(c.phase));
  if (sources.size() != c.source_domains.size()) throw Error("CR: source count differs from checkpoint");
  std::vector<ConceptTable> tables;
  for (int id : c.source_domains) tables.push_back({c.params.value(concept_key(id)), id, false});
  const PrototypeTable protos = build_prototypes(tables, c.config.k, c.config.cluster_seed);
  c.assignment = protos.assignment;
  c.domain_offsets = protos.domain_offsets;
  c.params.add("prototypes", protos.embeddings);
  c.phase = Phase::kCR;  // questions now embed through prototypes
  c.params.set_trainable([](const std::string& n) { return n == "prototypes" || is_model_core(n); });
  auto report = run_source_phase(c, sources, Phase::kCR, c.config.phase2_epochs, sink);
  c.lineage.push_back(to_string(Phase::kCR));
  return report;
}

std::vector<std::size_t> limited_target_pool(const TrainConfig& config, const DomainData& target) {
  return make_batches(target.split, config.batch_size, derive_seed(config.data_seed, kTargetBatchStream),
                      config.target_batches)
      .limited_pool();
}

PhaseReport adapt_target(Checkpoint& c, const DomainData& target, const MetricSink& sink) {
  if (c.phase != Phase::kCR) throw Error("ADAPT: expected a CR checkpoint, got phase " + to_string(c.phase));
  c.config.validate();
  const int id = target.domain.domain_id();
  if (std::find(c.source_domains.begin(), c.source_domains.end(), id) != c.source_domains.end()) {
    throw Error("ADAPT: target domain " + std::to_string(id) + " was a source");
  }
  const auto t0 = std::chrono::steady_clock::now();
  PhaseReport report;
  Recorder record(report, sink);
  PrototypeTable protos;
  protos.embeddings = c.params.value("prototypes");
  const auto table = init_target_table(protos, target.domain.n_concepts(),
                                       derive_seed(c.config.model_seed, kTargetTableStream), c.config.lambda);
  c.params.add("target_concepts", table.embeddings);
  c.init_choices = table.init_choices;
  c.target_domain = id;
  c.phase = Phase::kAdapt;
  c.params.set_trainable([](const std::string& n) { return n == "target_concepts"; });
  record(evaluate(c, target, "ADAPT", 0));
  run_limited_epochs(c, target, c.config.adapt_epochs, "ADAPT", report, record);
  c.lineage.push_back(to_string(Phase::kAdapt));
  report.seconds = seconds_since(t0);
  return report;
}

Checkpoint train_scratch(const TrainConfig& config, const DomainData& target, PhaseReport* report_out,
                         const MetricSink& sink) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  Checkpoint c;
  c.config = config;
  c.phase = Phase::kScratch;
  c.target_domain = target.domain.domain_id();
  c.params.add(concept_key(c.target_domain),
               init_concept_embeddings(target.domain.n_concepts(), config.d,
                                       derive_seed(config.model_seed, kConceptStream + static_cast<std::uint64_t>(c.target_domain))));
  init_model_core(c.params, config);
  PhaseReport report;
  Recorder record(report, sink);
  record(evaluate(c, target, "SCRATCH", 0));
  run_limited_epochs(c, target, config.scratch_epochs, "SCRATCH", report, record);
  c.lineage.push_back(to_string(Phase::kScratch));
  report.seconds = seconds_since(t0);
  if (report_out) *report_out = std::move(report);
  return c;
}

EmbeddingMode embedding_mode(const Checkpoint& c, int domain_id) {
  if (c.phase == Phase::kScratch) {
    if (domain_id != c.target_domain) throw Error("baseline checkpoint only covers its target domain");
    return EmbeddingMode::kConcepts;
  }
  if (domain_id == c.target_domain && c.phase == Phase::kAdapt) return EmbeddingMode::kTarget;
  for (int id : c.source_domains) {
    if (id != domain_id) continue;
    return (c.phase == Phase::kInit || c.phase == Phase::kCFL) ? EmbeddingMode::kConcepts
                                                                : EmbeddingMode::kPrototypes;
  }
  throw Error("checkpoint (phase " + to_string(c.phase) + ") cannot embed domain " + std::to_string(domain_id));
}

SequencePrediction predict_sequence(const Checkpoint& c, const DomainSpec& domain, const InteractionSequence& s,
                                    bool record_attention) {
  if (s.valid_length() == 0) throw Error("predict: sequence has no valid steps");
  const DomainView view = make_view(c, domain);
  ad::Tape tape;
  Binder b(tape, c.params);
  Forward f = forward(b, c.config, view, s, record_attention);
  SequencePrediction out;
  const Matrix& p = f.probabilities.value();
  out.probabilities.assign(p.data(), p.data() + p.size());
  out.states = f.encoded.states.value();
  for (auto& layer : f.encoded.traces) out.attention.push_back(std::move(layer));
  return out;
}

MetricRecord evaluate_sequences(const Checkpoint& c, const DomainSpec& domain,
                                const std::vector<InteractionSequence>& sequences) {
  const DomainView view = make_view(c, domain);
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& s : sequences) {
    if (predicted_steps(s) == 0) continue;
    ad::Tape tape;
    Binder b(tape, c.params);
    const Matrix& p = forward(b, c.config, view, s, false).probabilities.value();
    for (Eigen::Index t = 1; t < p.rows(); ++t) {
      scores.push_back(p(t, 0));
      labels.push_back(s.responses[static_cast<std::size_t>(t)]);
    }
  }
  if (scores.empty()) throw Error("evaluate: no predictions (empty test set)");
  MetricRecord r;
  r.domain = domain.domain_id();
  r.n_predictions = static_cast<long>(scores.size());
  try {
    r.auc = auc(scores, labels);
  } catch (const Error&) {
    r.auc = std::numeric_limits<double>::quiet_NaN();
  }
  r.acc = accuracy(scores, labels);
  std::vector<std::uint8_t> mask(scores.size() + 1, 1);
  std::vector<double> p(1, 0.5);
  std::vector<int> y(1, 0);
  p.insert(p.end(), scores.begin(), scores.end());
  y.insert(y.end(), labels.begin(), labels.end());
  r.loss = masked_bce(p, y, mask);
  return r;
}

MetricRecord evaluate(const Checkpoint& c, const DomainData& data, const std::string& phase, int epoch) {
  if (data.split.test.empty()) throw Error("evaluate: empty test set for domain " + std::to_string(data.domain.domain_id()));
  MetricRecord r = evaluate_sequences(c, data.domain, data.split.test);
  r.phase = phase.empty() ? to_string(c.phase) : phase;
  r.epoch = epoch;
  return r;
}

Matrix pooled_states(const Checkpoint& c, const DomainSpec& domain,
                     const std::vector<InteractionSequence>& sequences) {
  const DomainView view = make_view(c, domain);
  Matrix out(static_cast<Eigen::Index>(sequences.size()), c.config.d);
  Eigen::Index row = 0;
  for (const auto& s : sequences) {
    if (s.valid_length() == 0) continue;
    ad::Tape tape;
    Binder b(tape, c.params);
    out.row(row++) = forward(b, c.config, view, s, false).encoded.states.value().colwise().mean();
  }
  out.conservativeResize(row, Eigen::NoChange);
  return out;
}

}  // namespace dgkt
