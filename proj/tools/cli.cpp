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

#include "cli.hpp"

#include "dgkt/checkpoint.hpp"
#include "dgkt/config.hpp"
#include "dgkt/eval_metrics.hpp"
#include "dgkt/pipeline.hpp"
#include "dgkt/random.hpp"
#include "dgkt/synthstudent.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#ifndef DGKT_SOURCE_DIR
#define DGKT_SOURCE_DIR "."
#endif

namespace dgkt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Options shared by every subcommand that builds a TrainConfig.
struct ConfigOptions {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> encoder;
  std::optional<double> lambda;
  std::optional<int> target_batches;
};

void add_config_options(CLI::App* app, ConfigOptions& o) {
  app->add_option("--config", o.config_file, "key = value config file")->check(CLI::ExistingFile);
  app->add_option("--set", o.sets, "override one key (key=value), repeatable");
  app->add_option("--seed", o.seed, "model, data and cluster seed");
}

// Precedence: base < config file < --set < named flags.
TrainConfig build_config(const ConfigOptions& o, TrainConfig base) {
  std::map<std::string, std::string> values;
  if (!o.config_file.empty()) values = read_config_file(o.config_file);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw Error("--set expects key=value, got '" + kv + "'");
    values[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  if (o.seed) {
    const auto s = std::to_string(*o.seed);
    values["model_seed"] = values["data_seed"] = values["cluster_seed"] = s;
  }
  if (o.encoder) values["encoder"] = *o.encoder;
  if (o.lambda) values["lambda"] = std::to_string(*o.lambda);
  if (o.target_batches) values["target_batches"] = std::to_string(*o.target_batches);
  TrainConfig c = config_from_map(values, std::move(base));
  c.validate();
  return c;
}

std::string git_describe() {
  const std::string cmd = "git -C \"" DGKT_SOURCE_DIR "\" describe --always --dirty 2>/dev/null";
  std::string out;
  if (FILE* p = popen(cmd.c_str(), "r")) {
    char buf[256];
    while (std::fgets(buf, sizeof buf, p)) out += buf;
    if (pclose(p) != 0) out.clear();
  }
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  return out.empty() ? "unknown" : out;
}

void write_json(const fs::path& file, const json& j) {
  std::ofstream f(file);
  if (!f) throw Error("cannot write " + file.string());
  f << j.dump(2) << '\n';
}

// A run directory is created fresh; an existing one is never touched.
fs::path open_run_dir(const std::string& dir, const std::string& command, const std::vector<std::string>& args,
                      const TrainConfig* config) {
  if (dir.empty()) throw Error(command + ": --out is required");
  const fs::path p(dir);
  if (fs::exists(p)) throw Error("run directory " + p.string() + " already exists; refusing to overwrite");
  fs::create_directories(p);
  json run = {{"command", command}, {"args", args}, {"git_describe", git_describe()}};
  if (config) {
    run["config"] = config->to_map();
    run["seeds"] = {{"model_seed", config->model_seed},
                    {"data_seed", config->data_seed},
                    {"cluster_seed", config->cluster_seed}};
  }
  write_json(p / "run.json", run);
  return p;
}

class MetricsFile {
 public:
  explicit MetricsFile(const fs::path& file) : f_(file) {
    if (!f_) throw Error("cannot write " + file.string());
  }
  MetricSink sink() {
    return [this](const MetricRecord& r) { f_ << r.to_json() << '\n'; };
  }

 private:
  std::ofstream f_;
};

DomainData load_domain_dir(const fs::path& dir) {
  return {load_domain(dir / "domain.json"), load_split(dir)};
}

const DomainData& pick_preset_domain(const SyntheticPreset& preset, int id) {
  if (preset.target.domain.domain_id() == id) return preset.target;
  for (const auto& s : preset.sources) {
    if (s.domain.domain_id() == id) return s;
  }
  throw Error("preset has no domain " + std::to_string(id));
}

json attention_json(const std::vector<AttentionTrace>& layers) {
  json out = json::array();
  for (const auto& layer : layers) {
    json heads = json::array();
    for (const auto& h : layer.heads) {
      json rows = json::array();
      for (Eigen::Index i = 0; i < h.rows(); ++i) {
        rows.push_back(std::vector<double>(h.row(i).begin(), h.row(i).end()));
      }
      heads.push_back(std::move(rows));
    }
    out.push_back({{"heads", std::move(heads)}});
  }
  return out;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Domain-generalizable knowledge tracing"};
  app.name("dgkt");
  app.require_subcommand(1);

  std::vector<std::string> args(argv + (argc > 0 ? 1 : 0), argv + argc);

  // synth
  std::string synth_out;
  std::uint64_t synth_seed = 2;
  auto* synth = app.add_subcommand("synth", "write the synthetic multi-domain benchmark as CSV");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--seed", synth_seed, "generator seed");

  // ingest
  std::string ingest_csv_path, ingest_out;
  int ingest_domain = 0;
  ConfigOptions ingest_opts;
  auto* ingest = app.add_subcommand("ingest", "window, filter and split a canonical CSV");
  ingest->add_option("--csv", ingest_csv_path, "student_id,question_id,concept_ids,correct")
      ->required()
      ->check(CLI::ExistingFile);
  ingest->add_option("--domain-id", ingest_domain, "domain id")->required();
  ingest->add_option("--out", ingest_out, "dataset directory")->required();
  add_config_options(ingest, ingest_opts);

  // train-source
  std::vector<std::string> train_data;
  bool train_preset = false;
  std::string train_out;
  ConfigOptions train_opts;
  auto* train = app.add_subcommand("train-source", "concept feature learning then refinement on sources");
  auto* train_data_opt = train->add_option("--data", train_data, "ingested source directory, repeatable");
  train->add_flag("--preset", train_preset, "use the bundled synthetic sources")->excludes(train_data_opt);
  train->add_option("--out", train_out, "run directory")->required();
  train->add_option("--encoder", train_opts.encoder, "ra, saint or dkt");
  add_config_options(train, train_opts);

  // adapt
  std::string adapt_ckpt, adapt_data, adapt_out;
  bool adapt_preset = false, adapt_baseline = false;
  ConfigOptions adapt_opts;
  auto* adapt = app.add_subcommand("adapt", "cold-start adaptation of the target concept table");
  adapt->add_option("--checkpoint", adapt_ckpt, "source checkpoint")->required()->check(CLI::ExistingFile);
  auto* adapt_data_opt = adapt->add_option("--data", adapt_data, "ingested target directory");
  adapt->add_flag("--preset", adapt_preset, "use the bundled synthetic target")->excludes(adapt_data_opt);
  adapt->add_option("--out", adapt_out, "run directory")->required();
  adapt->add_option("--target-batches", adapt_opts.target_batches, "limited target batches")
      ->check(CLI::IsMember({1, 2, 4, 8}));
  adapt->add_option("--lambda", adapt_opts.lambda, "prototype/target mix")->check(CLI::Range(0.0, 1.0));
  adapt->add_flag("--baseline", adapt_baseline, "also train the target-only baseline");
  add_config_options(adapt, adapt_opts);

  // eval
  std::string eval_ckpt, eval_data;
  bool eval_preset = false;
  std::optional<int> eval_domain;
  auto* eval = app.add_subcommand("eval", "print test metrics as JSON");
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint")->required()->check(CLI::ExistingFile);
  auto* eval_data_opt = eval->add_option("--data", eval_data, "ingested domain directory");
  eval->add_flag("--preset", eval_preset, "use a bundled synthetic domain")->excludes(eval_data_opt);
  eval->add_option("--domain", eval_domain, "preset domain id (default: target if adapted, else first source)");

  // probe-adistance
  std::string probe_ckpt;
  std::vector<std::string> probe_data;
  bool probe_preset = false;
  std::vector<int> probe_pair{0, 1};
  std::uint64_t probe_seed = 0;
  auto* probe = app.add_subcommand("probe-adistance", "proxy A-distance of pooled knowledge states");
  probe->add_option("--checkpoint", probe_ckpt, "checkpoint")->required()->check(CLI::ExistingFile);
  auto* probe_data_opt = probe->add_option("--data", probe_data, "two ingested domain directories")->expected(2);
  probe->add_flag("--preset", probe_preset, "use bundled synthetic domains")->excludes(probe_data_opt);
  probe->add_option("--pair", probe_pair, "preset domain ids")->delimiter(',')->expected(2);
  probe->add_option("--seed", probe_seed, "probe seed");

  // sweep-lambda
  std::string sweep_ckpt, sweep_data, sweep_out;
  bool sweep_preset = false;
  std::vector<double> sweep_values{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  ConfigOptions sweep_opts;
  auto* sweep = app.add_subcommand("sweep-lambda", "adapt once per lambda and report test AUC");
  sweep->add_option("--checkpoint", sweep_ckpt, "source checkpoint")->required()->check(CLI::ExistingFile);
  auto* sweep_data_opt = sweep->add_option("--data", sweep_data, "ingested target directory");
  sweep->add_flag("--preset", sweep_preset, "use the bundled synthetic target")->excludes(sweep_data_opt);
  sweep->add_option("--values", sweep_values, "comma-separated lambdas")
      ->delimiter(',')
      ->check(CLI::Range(0.0, 1.0));
  sweep->add_option("--out", sweep_out, "run directory")->required();
  sweep->add_option("--target-batches", sweep_opts.target_batches, "limited target batches")
      ->check(CLI::IsMember({1, 2, 4, 8}));
  add_config_options(sweep, sweep_opts);

  // export-attention
  std::string attn_ckpt, attn_data, attn_out;
  bool attn_preset = false;
  std::optional<int> attn_domain;
  int attn_index = 0;
  auto* attn = app.add_subcommand("export-attention", "per-head attention weights for one test sequence");
  attn->add_option("--checkpoint", attn_ckpt, "checkpoint")->required()->check(CLI::ExistingFile);
  auto* attn_data_opt = attn->add_option("--data", attn_data, "ingested domain directory");
  attn->add_flag("--preset", attn_preset, "use a bundled synthetic domain")->excludes(attn_data_opt);
  attn->add_option("--domain", attn_domain, "preset domain id");
  attn->add_option("--sequence", attn_index, "test sequence index")->check(CLI::NonNegativeNumber);
  attn->add_option("--out", attn_out, "output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    err << app.help();
    return kExitUsage;
  }

  // Domain resolution shared by checkpoint consumers.
  auto resolve = [](const std::string& data, bool preset, std::optional<int> id, const Checkpoint& ckpt,
                    const TrainConfig& config) -> DomainData {
    if (!data.empty()) return load_domain_dir(data);
    if (!preset) throw Error("pass --data DIR or --preset");
    const auto bundle = synthetic_preset(config);
    int want = ckpt.target_domain >= 0 ? ckpt.target_domain : ckpt.source_domains.front();
    if (id) want = *id;
    return pick_preset_domain(bundle, want);
  };
  auto target_of = [](const std::string& data, bool preset, const TrainConfig& config) -> DomainData {
    if (!data.empty()) return load_domain_dir(data);
    if (!preset) throw Error("pass --data DIR or --preset");
    return synthetic_preset(config).target;
  };

  try {
    if (synth->parsed()) {
      const auto data = generate_multisource(desk_source_configs(synth_seed), desk_target_config(synth_seed));
      const auto dir = open_run_dir(synth_out, "synth", args, nullptr);
      json files = json::array();
      auto emit = [&](const SyntheticDomain& d, const std::string& role) {
        const auto id = std::to_string(d.domain.domain_id());
        write_domain_csv(d, dir / ("domain_" + id + ".csv"));
        write_ground_truth(d, dir / ("truth_" + id + ".jsonl"));
        files.push_back({{"domain", d.domain.domain_id()},
                         {"role", role},
                         {"csv", "domain_" + id + ".csv"},
                         {"truth", "truth_" + id + ".jsonl"},
                         {"interactions", d.interactions.size()}});
      };
      for (const auto& s : data.sources) emit(s, "source");
      emit(data.target, "target");
      const json manifest = {{"seed", synth_seed}, {"domains", files}};
      write_json(dir / "manifest.json", manifest);
      out << manifest.dump() << '\n';
    } else if (ingest->parsed()) {
      const auto config = build_config(ingest_opts, TrainConfig::desk());
      const auto raw = ingest_csv(ingest_csv_path, ingest_domain);
      const auto split_seed = derive_seed(config.data_seed, 10 + static_cast<std::uint64_t>(ingest_domain));
      const auto data = prepare_domain(raw.domain, raw.interactions, config, split_seed);
      const auto dir = open_run_dir(ingest_out, "ingest", args, &config);
      save_domain(data.domain, dir / "domain.json");
      save_split(data.split, dir);
      out << json{{"domain", ingest_domain},
                  {"questions", data.domain.n_questions()},
                  {"concepts", data.domain.n_concepts()},
                  {"train_sequences", data.split.train.size()},
                  {"test_sequences", data.split.test.size()}}
                 .dump()
          << '\n';
    } else if (train->parsed()) {
      const auto config = build_config(train_opts, TrainConfig::desk());
      std::vector<DomainData> sources;
      if (train_preset) {
        sources = synthetic_preset(config).sources;
      } else {
        if (train_data.empty()) throw Error("train-source: pass --data DIR (repeatable) or --preset");
        for (const auto& d : train_data) sources.push_back(load_domain_dir(d));
      }
      const auto dir = open_run_dir(train_out, "train-source", args, &config);
      MetricsFile metrics(dir / "metrics.jsonl");
      Checkpoint ckpt = init_checkpoint(config, sources);
      const auto r1 = train_phase1_cfl(ckpt, sources, metrics.sink());
      const auto r2 = train_phase2_refine(ckpt, sources, metrics.sink());
      save_checkpoint(ckpt, dir / "checkpoint.json");
      json summary = {{"phase1_seconds", r1.seconds}, {"phase2_seconds", r2.seconds}, {"sources", json::array()}};
      for (const auto& s : sources) summary["sources"].push_back(json::parse(evaluate(ckpt, s, "final").to_json()));
      write_json(dir / "summary.json", summary);
      out << summary.dump() << '\n';
    } else if (adapt->parsed()) {
      Checkpoint ckpt = load_checkpoint(adapt_ckpt);
      ckpt.config = build_config(adapt_opts, ckpt.config);
      const auto target = target_of(adapt_data, adapt_preset, ckpt.config);
      const auto dir = open_run_dir(adapt_out, "adapt", args, &ckpt.config);
      MetricsFile metrics(dir / "metrics.jsonl");
      const auto pool = limited_target_pool(ckpt.config, target);
      const auto report = adapt_target(ckpt, target, metrics.sink());
      save_checkpoint(ckpt, dir / "checkpoint.json");
      const auto final_metrics = evaluate(ckpt, target, "final");
      json summary = {{"train_sequences", pool.size()},
                      {"target_batches", ckpt.config.target_batches},
                      {"lambda", ckpt.config.lambda},
                      {"adapt_seconds", report.seconds},
                      {"adapt", json::parse(final_metrics.to_json())}};
      if (adapt_baseline) {
        PhaseReport scratch_report;
        const auto scratch = train_scratch(ckpt.config, target, &scratch_report, metrics.sink());
        save_checkpoint(scratch, dir / "scratch_checkpoint.json");
        const auto base = evaluate(scratch, target, "scratch_final");
        summary["scratch"] = json::parse(base.to_json());
        summary["scratch_seconds"] = scratch_report.seconds;
        summary["auc_gain"] = final_metrics.auc - base.auc;
      }
      write_json(dir / "summary.json", summary);
      out << summary.dump() << '\n';
    } else if (eval->parsed()) {
      const Checkpoint ckpt = load_checkpoint(eval_ckpt);
      const auto data = resolve(eval_data, eval_preset, eval_domain, ckpt, ckpt.config);
      out << evaluate(ckpt, data, "eval").to_json() << '\n';
    } else if (probe->parsed()) {
      const Checkpoint ckpt = load_checkpoint(probe_ckpt);
      std::vector<DomainData> pair;
      if (!probe_data.empty()) {
        for (const auto& d : probe_data) pair.push_back(load_domain_dir(d));
      } else if (probe_preset) {
        const auto bundle = synthetic_preset(ckpt.config);
        for (int id : probe_pair) pair.push_back(pick_preset_domain(bundle, id));
      } else {
        throw Error("probe-adistance: pass --data A --data B or --preset");
      }
      auto features = [&](const DomainData& d) {
        auto seqs = d.split.train;
        seqs.insert(seqs.end(), d.split.test.begin(), d.split.test.end());
        return pooled_states(ckpt, d.domain, seqs);
      };
      const double value = proxy_a_distance(features(pair[0]), features(pair[1]), probe_seed);
      out << json{{"pair", {pair[0].domain.domain_id(), pair[1].domain.domain_id()}},
                  {"value", value},
                  {"seed", probe_seed}}
                 .dump()
          << '\n';
    } else if (sweep->parsed()) {
      const Checkpoint source = load_checkpoint(sweep_ckpt);
      TrainConfig config = build_config(sweep_opts, source.config);
      const auto target = target_of(sweep_data, sweep_preset, config);
      const auto dir = open_run_dir(sweep_out, "sweep-lambda", args, &config);
      MetricsFile metrics(dir / "metrics.jsonl");
      json result = {{"lambda", json::array()}, {"auc", json::array()}, {"target_batches", config.target_batches}};
      for (double lambda : sweep_values) {
        Checkpoint ckpt = source;
        ckpt.config = config;
        ckpt.config.lambda = lambda;
        adapt_target(ckpt, target, metrics.sink());
        result["lambda"].push_back(lambda);
        result["auc"].push_back(evaluate(ckpt, target).auc);
      }
      write_json(dir / "sweep.json", result);
      out << result.dump() << '\n';
    } else if (attn->parsed()) {
      const Checkpoint ckpt = load_checkpoint(attn_ckpt);
      const auto data = resolve(attn_data, attn_preset, attn_domain, ckpt, ckpt.config);
      if (attn_index >= static_cast<int>(data.split.test.size())) {
        throw Error("export-attention: sequence index " + std::to_string(attn_index) + " out of range (" +
                    std::to_string(data.split.test.size()) + " test sequences)");
      }
      const auto& seq = data.split.test[static_cast<std::size_t>(attn_index)];
      const auto pred = predict_sequence(ckpt, data.domain, seq, true);
      const int n = seq.valid_length();
      const json j = {{"domain", data.domain.domain_id()},
                      {"student", seq.student_id},
                      {"encoder", to_string(ckpt.config.encoder)},
                      {"questions", std::vector<int>(seq.questions.begin(), seq.questions.begin() + n)},
                      {"responses", std::vector<int>(seq.responses.begin(), seq.responses.begin() + n)},
                      {"layers", attention_json(pred.attention)}};
      if (attn_out.empty()) {
        out << j.dump() << '\n';
      } else {
        if (fs::exists(attn_out)) throw Error(attn_out + " already exists; refusing to overwrite");
        write_json(attn_out, j);
      }
    }
  } catch (const std::exception& e) {
    err << "dgkt: error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace dgkt::cli
