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


// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Tolerances and sizes are fixed here on purpose.

#include <array>
#include <cstdarg>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ohmpipe/clustering.hpp"
#include "ohmpipe/contrastive.hpp"
#include "ohmpipe/ingest.hpp"
#include "ohmpipe/metrics.hpp"
#include "ohmpipe/mining.hpp"
#include "ohmpipe/pipeline.hpp"
#include "ohmpipe/reservoir.hpp"
#include "ohmpipe/stats.hpp"
#include "oracles.hpp"

using namespace ohmpipe;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

SyntheticSpec default_mixture(std::uint64_t seed) {
  SyntheticSpec s;
  s.n_clusters = 32;
  s.dim = 64;
  s.samples_per_cluster = 2000;
  s.centroid_scale = 20.0;
  s.cluster_spread = 1.0;
  s.rng_seed = seed;
  return s;
}

OhmConfig defaults(std::uint64_t seed) {
  OhmConfig c;
  c.dim = 64;
  c.rng_seed = seed;
  return c;
}

// 1. Ohm batches are harder than uniform ones on clustered data.
Outcome hardness() {
  const auto t0 = Clock::now();
  const auto data = generate_synthetic(default_mixture(1234));
  const auto rep = compare_batching(data, defaults(1234), ContrastiveConfig{}, 100);
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  Outcome o;
  o.pass = rep.ohm.rows.size() >= 100 && rep.uniform.rows.size() >= 100 && rep.ohm.mean_loss > rep.uniform.mean_loss &&
           rep.ohm.mean_sim > rep.uniform.mean_sim && rep.p_loss < 0.01 && rep.p_sim < 0.01;
  o.detail = fmt("batches ohm=%zu uniform=%zu; loss %.4f vs %.4f (p=%.3g); sim %.4f vs %.4f (p=%.3g); %.1fs",
                 rep.ohm.rows.size(), rep.uniform.rows.size(), rep.ohm.mean_loss, rep.uniform.mean_loss, rep.p_loss,
                 rep.ohm.mean_sim, rep.uniform.mean_sim, rep.p_sim, secs);
  return o;
}

// 2. Before the first fit Ohm is indistinguishable from uniform batching.
// Pooled over 20 seeds the one-sided test must not reject; per seed, at most
// 4 of 20 rejections at 0.05 are allowed (the binomial 99.7% bound under the null).
Outcome cold_start() {
  std::vector<double> ohm_loss, uni_loss, ohm_sim, uni_sim;
  int seed_rejections = 0;
  std::size_t fits = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SyntheticSpec s = default_mixture(100 + seed);
    s.samples_per_cluster = 125;  // 4000 samples < window 4096
    const auto rep = compare_batching(generate_synthetic(s), defaults(100 + seed), ContrastiveConfig{}, 100);
    fits += rep.pipeline.fits_performed;
    if (rep.p_loss <= 0.05 || rep.p_sim <= 0.05) ++seed_rejections;
    for (const auto& r : rep.ohm.rows) {
      ohm_sim.push_back(r.mean_negative_sim);
      if (r.loss) ohm_loss.push_back(*r.loss);
    }
    for (const auto& r : rep.uniform.rows) {
      uni_sim.push_back(r.mean_negative_sim);
      if (r.loss) uni_loss.push_back(*r.loss);
    }
  }
  const double p_loss = stats::mann_whitney_greater(ohm_loss, uni_loss).p_greater;
  const double p_sim = stats::mann_whitney_greater(ohm_sim, uni_sim).p_greater;
  Outcome o;
  o.pass = fits == 0 && p_loss > 0.05 && p_sim > 0.05 && seed_rejections <= 4;
  o.detail = fmt("pooled p_loss=%.3f p_sim=%.3f over %zu+%zu batches; seeds rejecting at 0.05: %d/20; fits=%zu",
                 p_loss, p_sim, ohm_loss.size(), uni_loss.size(), seed_rejections, fits);
  return o;
}

// 3. Every valid sample is emitted once or counted dropped; memory stays bounded.
Outcome conservation() {
  std::mt19937_64 rng(77);
  auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  int bad = 0;
  std::string first_bad;
  for (int trial = 0; trial < 50; ++trial) {
    OhmConfig c;
    c.dim = pick(1, 12);
    c.update_window_size = pick(1, 400);
    c.n_clusters = pick(1, 12);
    c.refit_interval = pick(1, 800);
    c.batch_size = pick(1, 24);
    c.reservoir_capacity = pick(c.batch_size, 4 * c.batch_size);
    c.flush_policy = pick(0, 1) ? FlushPolicy::emit_partial : FlushPolicy::drop_partial;
    c.max_leaves = pick(2, 64);
    c.rng_seed = rng();
    const std::size_t n = pick(0, 2500);

    std::normal_distribution<double> g;
    OhmPipeline pipe(c);
    std::uint64_t valid = 0, emitted = 0, peak = 0;
    std::set<std::string> ids;
    bool dup = false;
    auto take = [&](const Batch& b) {
      emitted += b.samples.size();
      for (const auto& s : b.samples) dup = dup || !ids.insert(s.id).second;
    };
    for (std::size_t i = 0; i < n; ++i) {
      Sample s;
      s.id = std::to_string(i);
      s.dialogue_id = s.id;
      const bool broken = pick(0, 49) == 0;
      s.embedding.resize(broken ? c.dim + 1 : c.dim);
      for (auto& x : s.embedding) x = g(rng) + (i % 3) * 4.0;
      if (!broken) ++valid;
      if (auto b = pipe.push(std::move(s))) take(*b);
      // Independent occupancy: ring buffer plus offered-but-not-emitted.
      const std::uint64_t held = std::min<std::uint64_t>(valid, c.update_window_size) + (valid - emitted);
      peak = std::max(peak, held);
    }
    for (const auto& b : pipe.finish()) take(b);
    const auto& r = pipe.report();
    const std::uint64_t bound = c.update_window_size + c.n_clusters * c.reservoir_capacity;
    const bool ok = r.samples_seen == n && emitted + r.samples_dropped() == n && r.samples_emitted == emitted &&
                    r.samples_invalid == n - valid && !dup && r.peak_retained <= bound && peak <= bound &&
                    r.peak_retained >= peak;
    if (!ok) {
      ++bad;
      if (first_bad.empty()) {
        first_bad = fmt(" first failure trial %d: seen=%llu emitted=%llu dropped=%llu peak=%llu/%llu bound=%llu", trial,
                        (unsigned long long)r.samples_seen, (unsigned long long)emitted,
                        (unsigned long long)r.samples_dropped(), (unsigned long long)r.peak_retained,
                        (unsigned long long)peak, (unsigned long long)bound);
      }
    }
  }
  return {bad == 0, fmt("%d/50 randomized configurations violated conservation or the peak bound.", bad) + first_bad};
}

// 4. Algorithm R retains every offer with probability k/n.
Outcome reservoir_uniformity() {
  constexpr std::size_t k = 32, n = 1024, trials = 10000;
  std::vector<double> hits(n, 0.0);
  Rng rng = make_rng(2024, "acceptance/reservoir");
  for (std::size_t t = 0; t < trials; ++t) {
    Reservoir<std::uint32_t> r(k);
    for (std::uint32_t i = 0; i < n; ++i) r.offer(i, rng);
    for (auto i : r.items()) hits[i] += 1.0;
  }
  const double chi2 = stats::chi_square_uniform(hits);
  const double p = stats::chi_square_sf(chi2, static_cast<double>(n - 1));
  return {p > 0.01, fmt("chi2=%.1f dof=%zu p=%.3f (expected %.1f per item)", chi2, n - 1, p,
                        double(trials) * k / n)};
}

// 5. Well-separated mixtures are recovered.
Outcome clustering_sanity() {
  int good = 0;
  std::string values;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SyntheticSpec s;
    s.n_clusters = 32;
    s.dim = 64;
    s.samples_per_cluster = 100;
    s.centroid_scale = 100.0;
    s.cluster_spread = 1.0;
    s.rng_seed = seed;
    std::vector<Vec> buf;
    std::vector<LabeledVector> labeled;
    for (const auto& x : generate_synthetic(s)) {
      buf.push_back(l2_normalize(x.embedding).v);
      labeled.push_back({x.embedding, SyntheticGenerator::cluster_of(x)});
    }
    ClusterConfig cfg;
    cfg.n_clusters = 32;
    cfg.rng_seed = seed;
    const auto model = ClusterModel(64, cfg).partial_fit(buf);
    const double ari = model_quality(model, labeled).value;
    if (ari >= 0.8) ++good;
    values += fmt("%s%.3f", values.empty() ? "" : " ", ari);
  }
  return {good == 10, fmt("%d/10 seeds with ARI >= 0.8 [%s]", good, values.c_str())};
}

// 6. Alignment agrees with a recursive oracle on every short pair.
struct MemoOracle {
  std::array<std::array<int, 7>, 7> memo;
  const std::vector<std::uint8_t>* a;
  const std::vector<std::uint8_t>* b;
  int go(std::size_t i, std::size_t j) {
    if (i == a->size()) return static_cast<int>(b->size() - j);
    if (j == b->size()) return static_cast<int>(a->size() - i);
    int& m = memo[i][j];
    if (m >= 0) return m;
    const int sub = go(i + 1, j + 1) + ((*a)[i] == (*b)[j] ? 0 : 1);
    m = std::min(sub, 1 + std::min(go(i + 1, j), go(i, j + 1)));
    return m;
  }
  int operator()(const std::vector<std::uint8_t>& x, const std::vector<std::uint8_t>& y) {
    for (auto& row : memo) row.fill(-1);
    a = &x;
    b = &y;
    return go(0, 0);
  }
};

Outcome metrics_oracle() {
  std::vector<std::vector<std::uint8_t>> seqs{{}};
  for (std::size_t len = 1; len <= 6; ++len) {
    const std::size_t end = seqs.size();
    for (std::size_t i = 0; i < end; ++i) {
      if (seqs[i].size() != len - 1) continue;
      for (std::uint8_t s = 0; s < 4; ++s) {
        auto v = seqs[i];
        v.push_back(s);
        seqs.push_back(std::move(v));
      }
    }
  }
  const auto t0 = Clock::now();
  MemoOracle oracle;
  std::uint64_t cases = 0, mismatches = 0;
  for (const auto& r : seqs) {
    for (const auto& h : seqs) {
      ++cases;
      const Alignment a = align<std::uint8_t>(r, h);
      const int want = oracle(r, h);
      std::uint64_t s = 0, d = 0, ins = 0;
      std::size_t ri = 0, hi = 0;
      bool ok = a.counts.errors() == static_cast<std::uint64_t>(want);
      for (const auto& st : a.trace) {
        switch (st.op) {
          case EditOp::match:
            ok = ok && st.ref_index == std::ptrdiff_t(ri) && st.hyp_index == std::ptrdiff_t(hi) && r[ri] == h[hi];
            ++ri, ++hi;
            break;
          case EditOp::substitution:
            ok = ok && st.ref_index == std::ptrdiff_t(ri) && st.hyp_index == std::ptrdiff_t(hi) && r[ri] != h[hi];
            ++ri, ++hi, ++s;
            break;
          case EditOp::deletion:
            ok = ok && st.ref_index == std::ptrdiff_t(ri);
            ++ri, ++d;
            break;
          case EditOp::insertion:
            ok = ok && st.hyp_index == std::ptrdiff_t(hi);
            ++hi, ++ins;
            break;
        }
      }
      ok = ok && ri == r.size() && hi == h.size() && s == a.counts.substitutions && d == a.counts.deletions &&
           ins == a.counts.insertions;
      if (!ok) ++mismatches;
    }
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  const double w = werr(11.90, 8.99);
  return {mismatches == 0 && std::abs(w - 24.4) <= 0.1,
          fmt("%llu pairs over %zu sequences, %llu mismatches (%.1fs); werr(11.90, 8.99)=%.4f vs 24.4",
              (unsigned long long)cases, seqs.size(), (unsigned long long)mismatches, secs, w)};
}

// 7. Loss identities.
Outcome loss_identities() {
  double worst_ln = 0.0;
  for (std::size_t n : {2u, 4u, 16u}) {
    std::vector<ContrastiveItem> items;
    for (std::size_t i = 0; i < n; ++i) items.push_back({{0.4, -0.1, 0.7, 2.0}, {0.4, -0.1, 0.7, 2.0}, std::to_string(i)});
    worst_ln = std::max(worst_ln, std::abs(pfclc_loss(items, ContrastiveConfig{}) - std::log(double(n))));
  }
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  std::vector<ContrastiveItem> items(16);
  for (std::size_t i = 0; i < items.size(); ++i) {
    items[i].anchor.resize(32);
    items[i].positive.resize(32);
    for (auto& x : items[i].anchor) x = g(rng);
    for (std::size_t k = 0; k < 32; ++k) items[i].positive[k] = items[i].anchor[k] + g(rng);
    items[i].dialogue_id = std::to_string(i / 2);
  }
  const double base = pfclc_loss(items, ContrastiveConfig{});
  double worst_scale = 0.0;
  for (double f : {0.1, 10.0}) {
    auto scaled = items;
    for (auto& it : scaled) {
      for (auto& x : it.anchor) x *= f;
      for (auto& x : it.positive) x *= f;
    }
    worst_scale = std::max(worst_scale, std::abs(pfclc_loss(scaled, ContrastiveConfig{}) - base));
  }
  return {worst_ln <= 1e-9 && worst_scale <= 1e-7,
          fmt("max |loss - ln N| = %.2e (N in 2,4,16); max rescale drift = %.2e", worst_ln, worst_scale)};
}

// 8. Mining determinism and ratios.
Outcome mining_checks() {
  std::vector<std::string> failures;

  // 1:5 up-sampling over 600 output dialogues: 500 standard, 100 reform slots.
  std::vector<std::string> standard, reform;
  for (int i = 0; i < 500; ++i) standard.push_back("std" + std::to_string(i));
  for (int i = 0; i < 37; ++i) reform.push_back("ref" + std::to_string(i));
  const auto out = upsample_reformulations(standard, reform, 5);
  std::size_t slots = 0;
  bool positions = out.size() == 600;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const bool is_ref = out[i].rfind("ref", 0) == 0;
    slots += is_ref ? 1 : 0;
    positions = positions && (is_ref == (i % 6 == 5));
  }
  if (!(positions && slots == 100)) failures.push_back(fmt("upsample len=%zu slots=%zu", out.size(), slots));

  auto turn = [](const std::string& id, double t) {
    Sample s;
    s.id = id;
    s.timestamp_s = t;
    s.embedding = {1.0};
    return s;
  };
  auto ids = [](const std::vector<Sample>& v) {
    std::vector<std::string> o;
    for (const auto& s : v) o.push_back(s.id);
    return o;
  };
  const WindowConfig w;
  {
    const std::vector<Sample> pool{turn("a", 800), turn("b", 970), turn("s", 1000), turn("c", 1040), turn("d", 1080),
                                   turn("e", 1200)};
    const auto d = build_dialogue(pool[2], pool, w);
    if (!(ids(d.past) == std::vector<std::string>{"b"} && ids(d.future) == std::vector<std::string>{"c", "d"} &&
          d.window_s == 90.0)) {
      failures.push_back("trace 1 (chaining)");
    }
  }
  {
    const std::vector<Sample> pool{turn("s", 0)};
    const auto d = build_dialogue(pool[0], pool, w);
    if (!(d.context_size() == 0 && d.window_s == 90.0)) failures.push_back("trace 2 (alone)");
  }
  {
    std::vector<Sample> pool;
    for (int i = 0; i < 8; ++i) pool.push_back(turn(std::to_string(i), 50.0 + 10.0 * i / 7.0));
    const auto d = build_dialogue(pool[4], pool, w);
    if (!(d.context_size() == 7 && d.window_s == 15.0)) failures.push_back("trace 3 (shrink floor)");
  }

  std::string fractions;
  for (double weight : {100.0, 20.0, 50.0}) {
    auto endless = [](int tag) -> Source<int> { return [tag] { return std::optional<int>(tag); }; };
    StreamMixer<int> mix({{endless(0), weight}, {endless(1), 100.0 - weight}}, 99);
    for (int i = 0; i < 100000; ++i) mix.next();
    const double frac = static_cast<double>(mix.counts()[0]) / 1e5;
    fractions += fmt(" w=%g:%.4f", weight, frac);
    if (std::abs(frac - weight / 100.0) > 0.01) failures.push_back(fmt("mix w=%g frac=%.4f", weight, frac));
  }

  std::string detail = fmt("upsample 600 -> %zu reform slots at 6g+5; 3 window traces;", slots) + fractions;
  for (const auto& f : failures) detail += "; FAILED " + f;
  return {failures.empty(), detail};
}

// 9. End-to-end throughput: parse JSONL, batch, serialize.
double run_rate(bool with_context, std::uint64_t* seen, std::uint64_t* fits) {
  SyntheticSpec s = default_mixture(7);
  s.samples_per_cluster = 1250;  // 40,000 samples
  s.with_context = with_context;
  std::string jsonl;
  for (const auto& x : generate_synthetic(s)) jsonl += sample_to_record(x) + "\n";

  const auto t0 = Clock::now();
  std::istringstream in(jsonl);
  std::ostringstream out;
  SampleReader reader(in, 64, ParseMode::strict);
  OhmPipeline pipe(defaults(7));
  while (auto x = reader.next()) {
    if (auto b = pipe.push(std::move(*x))) out << batch_to_json(*b, false).dump() << '\n';
  }
  for (const auto& b : pipe.finish()) out << batch_to_json(b, false).dump() << '\n';
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  *seen = pipe.report().samples_seen;
  *fits = pipe.report().fits_performed;
  return static_cast<double>(*seen) / secs;
}

Outcome throughput() {
  kernels::set_max_threads(1);
  std::uint64_t seen = 0, fits = 0, seen_bare = 0, fits_bare = 0;
  const double rate = run_rate(true, &seen, &fits);
  const double bare = run_rate(false, &seen_bare, &fits_bare);
  return {rate >= 10000.0,
          fmt("%.0f samples/s over %llu records with context embeddings, %llu fits (floor 10000; 50000 target %s); "
              "%.0f samples/s without context embeddings",
              rate, (unsigned long long)seen, (unsigned long long)fits, rate >= 50000.0 ? "met" : "NOT met", bare)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"ohm-hardness", hardness},
      {"cold-start-equivalence", cold_start},
      {"conservation", conservation},
      {"reservoir-uniformity", reservoir_uniformity},
      {"clustering-sanity", clustering_sanity},
      {"metrics-oracle", metrics_oracle},
      {"loss-identities", loss_identities},
      {"mining-determinism-ratios", mining_checks},
      {"throughput", throughput},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu acceptance criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
