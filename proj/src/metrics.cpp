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

#include "ohmpipe/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace ohmpipe {

using nlohmann::json;

double ErrorCounts::wer() const {
  if (ref_words == 0) throw Error("metrics.empty_reference", "WER is undefined for an empty reference");
  return static_cast<double>(errors()) / static_cast<double>(ref_words);
}

double ErrorCounts::ser() const {
  if (sentences == 0) throw Error("metrics.empty_input", "SER needs at least one sentence");
  return static_cast<double>(sentence_errors) / static_cast<double>(sentences);
}

ErrorCounts& ErrorCounts::operator+=(const ErrorCounts& o) noexcept {
  substitutions += o.substitutions;
  insertions += o.insertions;
  deletions += o.deletions;
  ref_words += o.ref_words;
  sentences += o.sentences;
  sentence_errors += o.sentence_errors;
  return *this;
}

json to_json(const ErrorCounts& c) {
  return {{"substitutions", c.substitutions}, {"insertions", c.insertions},     {"deletions", c.deletions},
          {"ref_words", c.ref_words},         {"sentences", c.sentences},       {"sentence_errors", c.sentence_errors}};
}

std::vector<std::string> normalize_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Alignment align_text(std::string_view ref, std::string_view hyp) {
  const auto r = normalize_tokens(ref);
  const auto h = normalize_tokens(hyp);
  return align<std::string>(r, h);
}

std::size_t edit_distance(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1), prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double werr(double base_wer, double new_wer) {
  if (!(base_wer > 0.0)) throw Error("metrics.invalid_base", "relative reduction needs a positive baseline");
  return 100.0 * (base_wer - new_wer) / base_wer;
}

double distillation_efficiency(double student_werr, double teacher_werr) {
  if (teacher_werr == 0.0) throw Error("metrics.invalid_base", "teacher WERR must be non-zero");
  return 100.0 * student_werr / teacher_werr;
}

double ser(std::span<const TextPair> pairs) {
  if (pairs.empty()) throw Error("metrics.empty_input", "SER needs at least one pair");
  std::size_t wrong = 0;
  for (const auto& p : pairs) {
    if (align_text(p.ref, p.hyp).counts.errors() > 0) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(pairs.size());
}

namespace {

std::optional<double> relative(double base, double next) {
  if (!(base > 0.0)) return std::nullopt;
  return werr(base, next);
}

std::optional<double> mean_of(const std::vector<DomainRow>& rows, std::optional<double> DomainRow::*field) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (!(r.*field)) return std::nullopt;
    sum += *(r.*field);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace

DomainNormalized domain_normalized(const std::map<std::string, ErrorCounts>& base,
                                   const std::map<std::string, ErrorCounts>& next) {
  for (const auto& [d, _] : base) {
    if (!next.contains(d)) throw Error("metrics.domain_mismatch", "domain '" + d + "' missing from the new system");
  }
  for (const auto& [d, _] : next) {
    if (!base.contains(d)) throw Error("metrics.domain_mismatch", "domain '" + d + "' missing from the base system");
  }
  if (base.empty()) throw Error("metrics.empty_input", "no domains to aggregate");

  DomainNormalized out;
  ErrorCounts base_total;
  ErrorCounts next_total;
  for (const auto& [d, b] : base) {
    const ErrorCounts& n = next.at(d);
    if (b.ref_words == 0 || n.ref_words == 0) {
      throw Error("metrics.empty_reference", "domain '" + d + "' has no reference words");
    }
    DomainRow row;
    row.domain = d;
    row.base = b;
    row.next = n;
    row.base_wer = b.wer();
    row.new_wer = n.wer();
    row.base_ser = b.sentences > 0 ? b.ser() : 0.0;
    row.new_ser = n.sentences > 0 ? n.ser() : 0.0;
    row.werr = relative(row.base_wer, row.new_wer);
    row.serr = relative(row.base_ser, row.new_ser);
    out.rows.push_back(std::move(row));
    base_total += b;
    next_total += n;
  }
  out.werr_macro = mean_of(out.rows, &DomainRow::werr);
  out.serr_macro = mean_of(out.rows, &DomainRow::serr);
  out.werr_micro = relative(base_total.wer(), next_total.wer());
  if (base_total.sentences > 0 && next_total.sentences > 0) {
    out.serr_micro = relative(base_total.ser(), next_total.ser());
  }
  return out;
}

json to_json(const DomainNormalized& d) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json rows = json::array();
  for (const auto& r : d.rows) {
    rows.push_back({{"domain", r.domain},
                    {"base", to_json(r.base)},
                    {"new", to_json(r.next)},
                    {"base_wer", r.base_wer},
                    {"new_wer", r.new_wer},
                    {"base_ser", r.base_ser},
                    {"new_ser", r.new_ser},
                    {"werr", opt(r.werr)},
                    {"serr", opt(r.serr)}});
  }
  return {{"werr_macro", opt(d.werr_macro)},
          {"serr_macro", opt(d.serr_macro)},
          {"werr_micro", opt(d.werr_micro)},
          {"serr_micro", opt(d.serr_micro)},
          {"per_domain", std::move(rows)}};
}

ErrorTypeRates error_type_rates(const ErrorCounts& base, const ErrorCounts& next) {
  if (base.ref_words == 0 || next.ref_words == 0) {
    throw Error("metrics.empty_reference", "error-type rates need reference words on both sides");
  }
  auto rate = [&](std::uint64_t b, std::uint64_t n) -> std::optional<double> {
    if (b == 0) return std::nullopt;
    const double br = static_cast<double>(b) / static_cast<double>(base.ref_words);
    const double nr = static_cast<double>(n) / static_cast<double>(next.ref_words);
    return 100.0 * (br - nr) / br;
  };
  return {rate(base.substitutions, next.substitutions), rate(base.insertions, next.insertions),
          rate(base.deletions, next.deletions)};
}

json MetricReport::to_json() const {
  json domains = json::object();
  for (const auto& [d, c] : per_domain) {
    json row = ohmpipe::to_json(c);
    row["wer"] = c.ref_words > 0 ? json(c.wer()) : json(nullptr);
    row["ser"] = c.sentences > 0 ? json(c.ser()) : json(nullptr);
    domains[d] = std::move(row);
  }
  return {{"wer", wer ? json(*wer) : json(nullptr)},
          {"ser", ser},
          {"counts", ohmpipe::to_json(counts)},
          {"per_domain", std::move(domains)}};
}

MetricReport score(std::span<const ScoredUtterance> utts, kernels::Exec exec) {
  if (utts.empty()) throw Error("metrics.empty_input", "nothing to score");
  MetricReport rep;
  rep.alignments.resize(utts.size());
  const auto n = static_cast<std::int64_t>(utts.size());
  if (exec == kernels::Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t i = 0; i < n; ++i) rep.alignments[i] = align_text(utts[i].ref, utts[i].hyp);
  } else {
    for (std::int64_t i = 0; i < n; ++i) rep.alignments[i] = align_text(utts[i].ref, utts[i].hyp);
  }
  for (std::size_t i = 0; i < utts.size(); ++i) {
    rep.counts += rep.alignments[i].counts;
    rep.per_domain[utts[i].domain] += rep.alignments[i].counts;
  }
  if (rep.counts.ref_words > 0) rep.wer = rep.counts.wer();
  rep.ser = rep.counts.ser();
  return rep;
}

std::string format_alignment(const std::vector<std::string>& ref, const std::vector<std::string>& hyp,
                             const Alignment& a) {
  std::string r_line = "REF:";
  std::string h_line = "HYP:";
  std::string e_line = "EVAL:";
  for (const auto& step : a.trace) {
    std::string r = step.ref_index >= 0 ? ref[static_cast<std::size_t>(step.ref_index)] : std::string("***");
    std::string h = step.hyp_index >= 0 ? hyp[static_cast<std::size_t>(step.hyp_index)] : std::string("***");
    std::string e;
    switch (step.op) {
      case EditOp::match: break;
      case EditOp::substitution: e = "S"; break;
      case EditOp::deletion: e = "D"; break;
      case EditOp::insertion: e = "I"; break;
    }
    const std::size_t width = std::max({r.size(), h.size(), e.size()});
    r.resize(width, ' ');
    h.resize(width, ' ');
    e.resize(width, ' ');
    r_line += " " + r;
    h_line += " " + h;
    e_line += " " + e;
  }
  // EVAL: is one char wider than REF:/HYP:, pad so the columns line up.
  r_line.insert(4, " ");
  h_line.insert(4, " ");
  return r_line + "\n" + h_line + "\n" + e_line + "\n";
}

}  // namespace ohmpipe
