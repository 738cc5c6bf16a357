// Copyright 2026 The ohmpipe Authors
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

// ohmpipe: command-line front end.
//
//   ohmpipe synth  --out data.jsonl --clusters 32 --dim 64 --per-cluster 2000
//   ohmpipe run    --input data.jsonl --dim 64 --out batches.jsonl --report run.json
//   ohmpipe eval   --input data.jsonl --dim 64 --mode compare --batches 100
//   ohmpipe mine   --pool turns.jsonl --seeds seeds.txt
//   ohmpipe reform --in dialogues.jsonl --upsample 5
//   ohmpipe mix    --spec mix.json
//   ohmpipe score  --refs refs.txt --hyps hyps.txt --base-hyps base.txt --by-domain
//
// Reports are JSON. On failure the process prints {"error": {"code", "message"}}
// to stderr and exits 2 (config), 3 (I/O) or 4 (data).

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ohmpipe/clustering.hpp"
#include "ohmpipe/config.hpp"
#include "ohmpipe/contrastive.hpp"
#include "ohmpipe/ingest.hpp"
#include "ohmpipe/metrics.hpp"
#include "ohmpipe/mining.hpp"
#include "ohmpipe/pipeline.hpp"

namespace {

using nlohmann::json;
using namespace ohmpipe;
using Clock = std::chrono::steady_clock;

// Flag values land here, unset ones stay empty and do not override the config.
struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> log_level;
  std::string report_path;

  std::optional<std::size_t> dim, clusters, window, refit, batch, capacity, max_leaves;
  std::optional<double> threshold;
  std::optional<std::string> flush;

  std::optional<double> mine_window, min_window, shrink;
  std::optional<std::size_t> max_utts, upsample;

  std::optional<double> cos, edit;
  std::optional<std::string> combine;
  std::optional<std::size_t> ngram;
  bool include_past = false;

  std::optional<double> tau;
  std::optional<std::string> direction;

  std::optional<std::size_t> synth_clusters, per_cluster;
  std::optional<double> spread, scale;
  bool no_context = false;
  bool ordered = false;

  std::string input, out = "-", pool, seeds, spec, mode = "compare", refs, hyps, base_hyps, table = "-", save_model;
  std::size_t batches = 100;
  std::optional<std::uint64_t> limit;
  std::optional<double> teacher_werr;
  bool passthrough = false, lenient = false, by_domain = false, rows = true;
};

template <class T>
void put(json& j, const char* section, const char* key, const std::optional<T>& v) {
  if (!v) return;
  if (section != nullptr) {
    j[section][key] = *v;
  } else {
    j[key] = *v;
  }
}

json flag_overrides(const Flags& f, const std::string& sub) {
  json j = json::object();
  put(j, nullptr, "seed", f.seed);
  put(j, nullptr, "threads", f.threads);
  put(j, nullptr, "log_level", f.log_level);
  put(j, "ohm", "dim", f.dim);
  put(j, "ohm", "window", f.window);
  put(j, "ohm", "refit", f.refit);
  put(j, "ohm", "batch", f.batch);
  put(j, "ohm", "capacity", f.capacity);
  put(j, "ohm", "max_leaves", f.max_leaves);
  put(j, "ohm", "threshold", f.threshold);
  put(j, "ohm", "flush", f.flush);
  put(j, "mining", "window", f.mine_window);
  put(j, "mining", "min_window", f.min_window);
  put(j, "mining", "shrink", f.shrink);
  put(j, "mining", "max_utts", f.max_utts);
  put(j, "mining", "upsample", f.upsample);
  put(j, "similarity", "cos", f.cos);
  put(j, "similarity", "edit", f.edit);
  put(j, "similarity", "combine", f.combine);
  put(j, "similarity", "ngram", f.ngram);
  if (f.include_past) j["similarity"]["include_past"] = true;
  put(j, "contrastive", "tau", f.tau);
  put(j, "contrastive", "direction", f.direction);
  // --clusters and --dim mean the synthetic mixture under synth, the
  // pipeline everywhere else.
  if (sub == "synth") {
    put(j, "synth", "clusters", f.clusters);
    put(j, "synth", "dim", f.dim);
    if (j.contains("ohm")) {
      j["ohm"].erase("dim");
      if (j["ohm"].empty()) j.erase("ohm");
    }
  } else {
    put(j, "ohm", "clusters", f.clusters);
  }
  put(j, "synth", "per_cluster", f.per_cluster);
  put(j, "synth", "spread", f.spread);
  put(j, "synth", "scale", f.scale);
  return j;
}

std::optional<std::string> env_seed() {
  if (const char* s = std::getenv("OHMPIPE_SEED")) return std::string(s);
  return std::nullopt;
}

// Output stream that is stdout for "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw Error("io.open_failed", "cannot write '" + path + "'");
    }
  }
  std::ostream& get() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

class Input {
 public:
  explicit Input(const std::string& path) {
    if (path.empty()) throw Error("io.open_failed", "no input path given");
    if (path != "-") {
      file_ = std::make_unique<std::ifstream>(path);
      if (!*file_) throw Error("io.open_failed", "cannot open '" + path + "'");
    }
  }
  std::istream& get() { return file_ ? *file_ : std::cin; }

 private:
  std::unique_ptr<std::ifstream> file_;
};

struct RunContext {
  RunConfig cfg;
  Flags flags;
  std::string sub;
  Clock::time_point start = Clock::now();
};

void write_report(const RunContext& ctx, json counters, std::uint64_t samples) {
  const double wall = std::chrono::duration<double>(Clock::now() - ctx.start).count();
  json report{{"subcommand", ctx.sub},
              {"status", "ok"},
              {"config", to_json(ctx.cfg)},
              {"config_hash", config_hash(ctx.cfg)},
              {"counters", std::move(counters)},
              {"timing",
               {{"wall_clock_s", wall},
                {"throughput_samples_per_s", wall > 0.0 ? static_cast<double>(samples) / wall : 0.0}}}};
  if (ctx.flags.report_path.empty()) {
    std::cerr << report.dump(2) << '\n';
  } else {
    Output out(ctx.flags.report_path);
    out.get() << report.dump(2) << '\n';
  }
}

ParseMode parse_mode(const Flags& f) { return f.lenient ? ParseMode::lenient : ParseMode::strict; }

void require_dim(const RunConfig& cfg) {
  if (cfg.ohm.dim == 0) throw Error("config.missing_dim", "embedding dimension is required (--dim or ohm.dim)");
}

int cmd_synth(RunContext& ctx) {
  SyntheticSpec spec = ctx.cfg.synth;
  spec.with_context = !ctx.flags.no_context;
  spec.shuffle = !ctx.flags.ordered;
  SyntheticGenerator gen(spec);
  Output out(ctx.flags.out);
  std::uint64_t n = 0;
  while (auto s = gen.next()) {
    out.get() << sample_to_record(*s) << '\n';
    ++n;
  }
  write_report(ctx, {{"samples", n}}, n);
  return 0;
}

int cmd_run(RunContext& ctx) {
  require_dim(ctx.cfg);
  Input in(ctx.flags.input);
  Output out(ctx.flags.out);
  SampleReader reader(in.get(), ctx.cfg.ohm.dim, parse_mode(ctx.flags));
  OhmPipeline pipe(ctx.cfg.ohm);
  auto emit = [&](const Batch& b) { out.get() << batch_to_json(b, ctx.flags.passthrough).dump() << '\n'; };
  while (auto s = reader.next()) {
    if (auto b = pipe.push(std::move(*s))) emit(*b);
  }
  for (const auto& b : pipe.finish()) emit(b);
  if (!ctx.flags.save_model.empty()) pipe.snapshot()->save(ctx.flags.save_model);
  json counters = pipe.report().to_json();
  counters["records_skipped"] = reader.skipped();
  counters["skip_messages"] = reader.skip_messages();
  write_report(ctx, std::move(counters), pipe.report().samples_seen);
  return 0;
}

std::vector<Sample> read_all(const std::string& path, std::size_t dim, ParseMode mode) {
  Input in(path);
  SampleReader reader(in.get(), dim, mode);
  std::vector<Sample> out;
  while (auto s = reader.next()) out.push_back(std::move(*s));
  return out;
}

int cmd_eval(RunContext& ctx) {
  require_dim(ctx.cfg);
  const auto samples = read_all(ctx.flags.input, ctx.cfg.ohm.dim, parse_mode(ctx.flags));
  const auto exec = ctx.cfg.threads == 1 ? kernels::Exec::serial : kernels::Exec::parallel;
  json counters{{"samples", samples.size()}, {"mode", ctx.flags.mode}};
  if (ctx.flags.mode == "compare") {
    const auto rep = compare_batching(samples, ctx.cfg.ohm, ctx.cfg.contrastive, ctx.flags.batches, exec);
    counters["comparison"] = rep.to_json(ctx.flags.rows);
  } else if (ctx.flags.mode == "ohm" || ctx.flags.mode == "uniform") {
    std::vector<Batch> batches;
    if (ctx.flags.mode == "ohm") {
      counters["pipeline"] = run_pipeline(vector_source(samples), ctx.cfg.ohm, [&](Batch&& b) {
                               if (!b.partial) batches.push_back(std::move(b));
                             }).to_json();
    } else {
      batches = uniform_batches(samples, ctx.cfg.ohm.batch_size, ctx.cfg.ohm.rng_seed);
    }
    if (batches.size() < ctx.flags.batches) {
      throw Error("contrastive.insufficient_input", std::to_string(batches.size()) + " full batches, " +
                                                        std::to_string(ctx.flags.batches) + " required");
    }
    const auto s = summarize(batches, ctx.cfg.contrastive, exec);
    json rows = json::array();
    if (ctx.flags.rows) {
      for (std::size_t i = 0; i < s.rows.size(); ++i) {
        rows.push_back({{"index", i},
                        {"cluster_label", s.cluster_labels[i]},
                        {"mean_negative_sim", s.rows[i].mean_negative_sim},
                        {"loss", s.rows[i].loss ? json(*s.rows[i].loss) : json(nullptr)}});
      }
    }
    counters["summary"] = {{"strategy", ctx.flags.mode},
                           {"batches", s.rows.size()},
                           {"mean_negative_sim", s.mean_sim},
                           {"mean_loss", s.mean_loss},
                           {"rows", std::move(rows)}};
  } else {
    throw Error("config.invalid", "--mode must be ohm, uniform or compare");
  }
  write_report(ctx, std::move(counters), samples.size());
  return 0;
}

int cmd_mine(RunContext& ctx) {
  auto pool = read_all(ctx.flags.pool, ctx.cfg.ohm.dim, parse_mode(ctx.flags));
  std::map<std::string, std::vector<Sample>> sessions;
  for (auto& s : pool) sessions[s.dialogue_id].push_back(std::move(s));
  std::map<std::string, const Sample*> by_id;
  for (auto& [_, turns] : sessions) {
    std::stable_sort(turns.begin(), turns.end(),
                     [](const Sample& a, const Sample& b) { return a.timestamp_s < b.timestamp_s; });
    for (const auto& s : turns) by_id[s.id] = &s;
  }

  Input seeds(ctx.flags.seeds);
  Output out(ctx.flags.out);
  std::string line;
  std::uint64_t built = 0;
  std::uint64_t context_turns = 0;
  std::vector<std::string> missing;
  std::map<std::string, std::uint64_t> windows;
  while (std::getline(seeds.get(), line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    std::string id;
    if (line[first] == '{') {
      try {
        id = json::parse(line).at("id").get<std::string>();
      } catch (const json::exception& e) {
        throw Error("mining.malformed_seed", e.what());
      }
    } else {
      id = line.substr(first, line.find_last_not_of(" \t\r") - first + 1);
    }
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      missing.push_back(id);
      continue;
    }
    const Sample& seed = *it->second;
    const Dialogue d = build_dialogue(seed, sessions.at(seed.dialogue_id), ctx.cfg.window);
    out.get() << dialogue_to_json(d).dump() << '\n';
    ++built;
    context_turns += d.context_size();
    ++windows[json(d.window_s).dump()];
  }
  write_report(ctx,
               {{"pool_samples", by_id.size()},
                {"dialogues", built},
                {"context_turns", context_turns},
                {"missing_seeds", missing},
                {"final_windows", windows}},
               built);
  return 0;
}

int cmd_reform(RunContext& ctx) {
  Input in(ctx.flags.input);
  std::vector<Dialogue> standard;
  std::vector<Dialogue> reform;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in.get(), line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("mining.malformed_dialogue", lineno, e.what());
    }
    Dialogue d = detect_reformulations(dialogue_from_json(j), ctx.cfg.similarity);
    (d.has_reformulation ? reform : standard).push_back(std::move(d));
  }
  const std::size_t n_standard = standard.size();
  const std::size_t n_reform = reform.size();
  Output out(ctx.flags.out);
  std::size_t wraps = 0;
  std::size_t written = 0;
  if (ctx.flags.upsample) {
    for (const auto& d : upsample_reformulations(std::move(standard), std::move(reform), ctx.cfg.upsample_k, &wraps)) {
      out.get() << dialogue_to_json(d).dump() << '\n';
      ++written;
    }
  } else {
    for (const auto* group : {&standard, &reform}) {
      for (const auto& d : *group) {
        out.get() << dialogue_to_json(d).dump() << '\n';
        ++written;
      }
    }
  }
  write_report(ctx,
               {{"dialogues", n_standard + n_reform},
                {"flagged", n_reform},
                {"written", written},
                {"upsample_k", ctx.flags.upsample ? json(ctx.cfg.upsample_k) : json(nullptr)},
                {"reform_wraparounds", wraps}},
               n_standard + n_reform);
  return 0;
}

int cmd_mix(RunContext& ctx) {
  const MixFileSpec spec = parse_mix_spec(load_json_file(ctx.flags.spec));
  const std::uint64_t seed = ctx.flags.seed ? *ctx.flags.seed : spec.seed.value_or(ctx.cfg.seed);
  const std::optional<std::uint64_t> limit = ctx.flags.limit ? ctx.flags.limit : spec.limit;

  std::vector<std::unique_ptr<Input>> inputs;
  std::vector<std::unique_ptr<SampleReader>> readers;
  std::vector<std::pair<Source<Sample>, double>> streams;
  double total = 0.0;
  for (const auto& s : spec.streams) {
    inputs.push_back(std::make_unique<Input>(s.path));
    readers.push_back(std::make_unique<SampleReader>(inputs.back()->get(), ctx.cfg.ohm.dim, parse_mode(ctx.flags)));
    SampleReader* r = readers.back().get();
    streams.emplace_back([r] { return r->next(); }, s.weight);
    total += s.weight;
  }
  StreamMixer<Sample> mixer(std::move(streams), seed);
  Output out(ctx.flags.out);
  std::uint64_t n = 0;
  while (!limit || n < *limit) {
    auto s = mixer.next();
    if (!s) break;
    out.get() << sample_to_record(*s) << '\n';
    ++n;
  }
  json per_stream = json::array();
  for (std::size_t i = 0; i < spec.streams.size(); ++i) {
    per_stream.push_back({{"path", spec.streams[i].path},
                          {"weight", spec.streams[i].weight},
                          {"target_fraction", total > 0 ? spec.streams[i].weight / total : 0.0},
                          {"emitted", mixer.counts()[i]},
                          {"fraction", n > 0 ? static_cast<double>(mixer.counts()[i]) / static_cast<double>(n) : 0.0}});
  }
  write_report(ctx, {{"samples", n}, {"mix_seed", seed}, {"streams", per_stream}, {"exhausted", mixer.exhausted()}}, n);
  return 0;
}

struct Utterance {
  std::string id;
  std::string text;
  std::string domain;
};

// "id<space>text" lines or sample records, in file order.
std::vector<Utterance> read_utterances(const std::string& path) {
  Input in(path);
  std::vector<Utterance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in.get(), line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    Utterance u;
    if (line[first] == '{') {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw ParseError("ingest.malformed", lineno, e.what());
      }
      const Sample s = sample_from_json(j, 0, lineno);
      u = {s.id, s.text, s.domain.value_or("")};
    } else {
      const auto sep = line.find_first_of(" \t", first);
      u.id = line.substr(first, sep == std::string::npos ? std::string::npos : sep - first);
      if (sep != std::string::npos) u.text = line.substr(sep + 1);
    }
    out.push_back(std::move(u));
  }
  return out;
}

std::vector<ScoredUtterance> pair_up(const std::vector<Utterance>& refs, const std::vector<Utterance>& hyps,
                                     const std::string& hyp_path, bool by_domain) {
  std::map<std::string, const Utterance*> by_id;
  for (const auto& h : hyps) by_id[h.id] = &h;
  std::vector<ScoredUtterance> out;
  for (const auto& r : refs) {
    auto it = by_id.find(r.id);
    if (it == by_id.end()) throw Error("metrics.missing_hypothesis", "no hypothesis for '" + r.id + "' in " + hyp_path);
    out.push_back({r.id, by_domain ? (r.domain.empty() ? "untagged" : r.domain) : "", r.text, it->second->text});
  }
  return out;
}

int cmd_score(RunContext& ctx) {
  const auto exec = ctx.cfg.threads == 1 ? kernels::Exec::serial : kernels::Exec::parallel;
  const auto refs = read_utterances(ctx.flags.refs);
  const auto hyps = pair_up(refs, read_utterances(ctx.flags.hyps), ctx.flags.hyps, ctx.flags.by_domain);
  const MetricReport next = score(hyps, exec);
  json counters{{"utterances", refs.size()}, {"new", next.to_json()}};

  Output table(ctx.flags.table);
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    table.get() << "id: " << hyps[i].id << '\n'
                << format_alignment(normalize_tokens(hyps[i].ref), normalize_tokens(hyps[i].hyp), next.alignments[i])
                << '\n';
  }
  table.get() << "WER " << (next.wer ? *next.wer * 100.0 : 0.0) << "%  SER " << next.ser * 100.0 << "%  (S="
              << next.counts.substitutions << " I=" << next.counts.insertions << " D=" << next.counts.deletions
              << " N=" << next.counts.ref_words << ")\n";

  if (!ctx.flags.base_hyps.empty()) {
    const auto base_pairs = pair_up(refs, read_utterances(ctx.flags.base_hyps), ctx.flags.base_hyps, ctx.flags.by_domain);
    const MetricReport base = score(base_pairs, exec);
    counters["base"] = base.to_json();
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    std::optional<double> w;
    if (base.wer && next.wer && *base.wer > 0.0) w = werr(*base.wer, *next.wer);
    counters["werr"] = opt(w);
    counters["serr"] = base.ser > 0.0 ? json(serr(base.ser, next.ser)) : json(nullptr);
    const auto rates = error_type_rates(base.counts, next.counts);
    counters["error_type_rates"] = {{"subr", opt(rates.subr)}, {"insr", opt(rates.insr)}, {"delr", opt(rates.delr)}};
    if (ctx.flags.by_domain) counters["domain_normalized"] = to_json(domain_normalized(base.per_domain, next.per_domain));
    if (ctx.flags.teacher_werr && w) {
      counters["distillation_efficiency"] = distillation_efficiency(*w, *ctx.flags.teacher_werr);
      counters["distillation_efficiency_note"] = "100 * WERR(student) / WERR(teacher); interpretive";
    }
  }
  write_report(ctx, std::move(counters), refs.size());
  return 0;
}

int exit_code_for(const std::string& code) {
  if (code.rfind("config.", 0) == 0) return 2;
  if (code.rfind("io.", 0) == 0) return 3;
  return 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ohmpipe: online hard-negative batch construction toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config_path, "JSON config file");
  app.add_option("--seed", f.seed, "RNG seed (falls back to OHMPIPE_SEED)");
  app.add_option("--threads", f.threads, "Cap on worker threads (1 = serial kernels)");
  app.add_option("--log-level", f.log_level, "Log level");
  app.add_option("--report", f.report_path, "Report JSON path (default: stderr)");

  auto ohm_flags = [&](CLI::App* c) {
    c->add_option("--dim", f.dim, "Embedding dimension");
    c->add_option("--clusters", f.clusters, "Cluster count K");
    c->add_option("--window", f.window, "Update window (buffer) size");
    c->add_option("--refit", f.refit, "Refit interval in samples");
    c->add_option("--batch", f.batch, "Batch size");
    c->add_option("--capacity", f.capacity, "Per-cluster reservoir capacity");
    c->add_option("--flush", f.flush, "End-of-stream policy: emit|drop")->check(CLI::IsMember({"emit", "drop"}));
    c->add_option("--max-leaves", f.max_leaves, "Maximum CF leaves");
    c->add_option("--threshold", f.threshold, "Initial CF absorption radius");
    c->add_flag("--lenient", f.lenient, "Skip malformed records instead of failing");
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic Gaussian-mixture sample stream");
  synth->add_option("--clusters", f.clusters, "Mixture components");
  synth->add_option("--dim", f.dim, "Embedding dimension");
  synth->add_option("--per-cluster", f.per_cluster, "Samples per component");
  synth->add_option("--spread", f.spread, "Within-cluster standard deviation");
  synth->add_option("--scale", f.scale, "Centroid scale");
  synth->add_flag("--no-context", f.no_context, "Omit context embeddings");
  synth->add_flag("--ordered", f.ordered, "Emit cluster-major instead of shuffled");
  synth->add_option("--out", f.out, "Output path or - for stdout");

  auto* run = app.add_subcommand("run", "Batch a sample stream with online hard-negative mining");
  ohm_flags(run);
  run->add_option("--input", f.input, "Sample records, or - for stdin")->required();
  run->add_option("--out", f.out, "Batch records output, - for stdout");
  run->add_flag("--passthrough", f.passthrough, "Include full samples in batch records");
  run->add_option("--save-model", f.save_model, "Write the final cluster snapshot here");

  auto* eval = app.add_subcommand("eval", "Score batch hardness for Ohm and/or uniform batching");
  ohm_flags(eval);
  eval->add_option("--input", f.input, "Sample records")->required();
  eval->add_option("--mode", f.mode, "ohm|uniform|compare")->check(CLI::IsMember({"ohm", "uniform", "compare"}));
  eval->add_option("--batches", f.batches, "Minimum full batches per strategy");
  eval->add_option("--tau", f.tau, "Contrastive temperature");
  eval->add_option("--direction", f.direction, "symmetric|anchor_to_positive");
  eval->add_flag("!--no-rows", f.rows, "Omit per-batch rows from the report");

  auto* mine = app.add_subcommand("mine", "Build time-window dialogues around seed utterances");
  mine->add_option("--pool", f.pool, "Sample records of all turns")->required();
  mine->add_option("--seeds", f.seeds, "Seed ids, one per line (or records with an id)")->required();
  mine->add_option("--window", f.mine_window, "Initial window in seconds");
  mine->add_option("--min-window", f.min_window, "Minimum window in seconds");
  mine->add_option("--shrink", f.shrink, "Window shrink factor");
  mine->add_option("--max-utts", f.max_utts, "Context size that triggers shrinking");
  mine->add_option("--dim", f.dim, "Expected embedding dimension (default: infer)");
  mine->add_flag("--lenient", f.lenient, "Skip malformed records");
  mine->add_option("--out", f.out, "Dialogue records output");

  auto* reform = app.add_subcommand("reform", "Flag reformulations in mined dialogues");
  reform->add_option("--in", f.input, "Dialogue records")->required();
  reform->add_option("--cos", f.cos, "Cosine threshold");
  reform->add_option("--edit", f.edit, "Edit-similarity threshold");
  reform->add_option("--combine", f.combine, "any|all")->check(CLI::IsMember({"any", "all"}));
  reform->add_option("--ngram", f.ngram, "Character n-gram order");
  reform->add_flag("--include-past", f.include_past, "Also test contexts before the seed");
  reform->add_option("--upsample", f.upsample, "Emit one reformulation dialogue per K standard ones");
  reform->add_option("--out", f.out, "Dialogue records output");

  auto* mix = app.add_subcommand("mix", "Mix sample streams at fixed weights");
  mix->add_option("--spec", f.spec, "Mix spec JSON")->required();
  mix->add_option("--limit", f.limit, "Stop after N samples");
  mix->add_option("--dim", f.dim, "Expected embedding dimension (default: infer)");
  mix->add_flag("--lenient", f.lenient, "Skip malformed records");
  mix->add_option("--out", f.out, "Mixed sample output");

  auto* scorecmd = app.add_subcommand("score", "WER/SER scoring with optional baseline comparison");
  scorecmd->add_option("--refs", f.refs, "Reference transcripts")->required();
  scorecmd->add_option("--hyps", f.hyps, "Hypotheses of the system under test")->required();
  scorecmd->add_option("--base-hyps", f.base_hyps, "Baseline hypotheses for WERR/SERR");
  scorecmd->add_flag("--by-domain", f.by_domain, "Per-domain and domain-normalized figures");
  scorecmd->add_option("--teacher-werr", f.teacher_werr, "Teacher WERR for distillation efficiency");
  scorecmd->add_option("--table", f.table, "Aligned table output, - for stdout");

  CLI11_PARSE(app, argc, argv);

  RunContext ctx;
  ctx.sub = app.get_subcommands().front()->get_name();
  try {
    std::optional<json> file;
    if (!f.config_path.empty()) file = load_json_file(f.config_path);
    ctx.cfg = resolve_config(file, flag_overrides(f, ctx.sub), env_seed());
    ctx.flags = f;
    kernels::set_max_threads(ctx.cfg.threads);
    if (ctx.sub == "synth") return cmd_synth(ctx);
    if (ctx.sub == "run") return cmd_run(ctx);
    if (ctx.sub == "eval") return cmd_eval(ctx);
    if (ctx.sub == "mine") return cmd_mine(ctx);
    if (ctx.sub == "reform") return cmd_reform(ctx);
    if (ctx.sub == "mix") return cmd_mix(ctx);
    if (ctx.sub == "score") return cmd_score(ctx);
  } catch (const Error& e) {
    std::cerr << json{{"error", {{"code", e.code()}, {"message", e.what()}}}}.dump() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"code", "internal"}, {"message", e.what()}}}}.dump() << '\n';
    return 1;
  }
  return 1;
}
