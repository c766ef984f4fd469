// SPDX-License-Identifier: Apache-2.0
#include "scvae/evaluation.hpp"

#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

namespace scvae::evaluation {
namespace {

constexpr std::size_t kBatch = 64;

struct Group {
  corpus::SemanticRepresentation sr;
  std::vector<metrics::Tokens> references;
};

struct Tally {
  std::vector<metrics::Tokens> candidates;
  std::vector<std::vector<metrics::Tokens>> references;
  std::vector<corpus::Example> examples;
  long errors = 0;
  long required = 0;
};

DomainScores score(const training::Checkpoint& ckpt, const Tally& t) {
  DomainScores s;
  s.srs = t.candidates.size();
  s.examples = t.examples.size();
  if (s.srs == 0) return s;
  s.err_percent = 100.0 * static_cast<double>(t.errors) / static_cast<double>(std::max(t.required, 1L));
  s.bleu = metrics::bleu4(t.candidates, t.references);
  s.perplexity = perplexity(ckpt, t.examples);
  return s;
}

nlohmann::json scores_json(const DomainScores& s) {
  return {{"err_percent", s.err_percent}, {"bleu", s.bleu}, {"perplexity", s.perplexity},
          {"srs", s.srs},                 {"examples", s.examples}};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

double perplexity(const training::Checkpoint& ckpt, const std::vector<corpus::Example>& examples) {
  if (examples.empty()) throw std::invalid_argument("perplexity: no examples");
  double nll = 0.0;
  std::size_t tokens = 0;
  std::vector<const corpus::Example*> ptrs;
  for (const auto& e : examples) ptrs.push_back(&e);
  for (std::size_t start = 0; start < ptrs.size(); start += kBatch) {
    const std::size_t end = std::min(ptrs.size(), start + kBatch);
    const auto batch = nets::make_batch(std::span<const corpus::Example* const>(ptrs).subspan(start, end - start),
                                        ckpt.vocabulary, ckpt.inventories);
    const auto l = training::prior_mean_likelihood(ckpt.model, batch);
    nll += l.nll;
    tokens += l.tokens;
  }
  return std::exp(nll / static_cast<double>(tokens));
}

EvalReport evaluate(const training::Checkpoint& ckpt, const std::vector<corpus::Example>& examples,
                    const EvalOptions& options) {
  if (examples.empty()) throw std::invalid_argument("evaluate: no examples");
  std::map<std::pair<corpus::Domain, std::string>, Group> groups;
  std::map<corpus::Domain, Tally> tallies;
  Tally all;
  for (const auto& e : examples) {
    if (!e.sr.domain) throw std::invalid_argument("evaluate: example without a domain");
    auto& g = groups[{*e.sr.domain, corpus::format_sr(e.sr)}];
    g.sr = e.sr;
    g.references.push_back(corpus::tokenize(e.reference));
    tallies[*e.sr.domain].examples.push_back(e);
    all.examples.push_back(e);
  }

  EvalReport report;
  report.model = std::string(nets::model_kind_name(ckpt.model.kind()));
  std::uint64_t ordinal = 0;
  for (auto& [key, g] : groups) {
    generation::GenerationRequest req;
    req.sr = g.sr;
    req.num_candidates = options.num_candidates;
    req.max_length = options.max_length;
    req.mode = options.mode;
    req.temperature = options.temperature;
    req.seed = options.seed ^ (0x9E3779B97F4A7C15ULL * ++ordinal);
    const auto ranked = generation::generate(ckpt, req);
    const auto& top = ranked.front();
    auto surface = generation::relexicalise(top.tokens, g.sr);

    for (Tally* t : {&tallies[key.first], &all}) {
      t->candidates.push_back(surface.tokens);
      t->references.push_back(g.references);
      t->errors += top.slot_error.missing + top.slot_error.redundant;
      t->required += top.slot_error.required;
    }
    report.outputs.push_back({g.sr, top.tokens, std::move(surface.tokens), top.slot_error});
  }
  for (const auto& [domain, t] : tallies) report.domains[domain] = score(ckpt, t);
  report.overall = score(ckpt, all);
  return report;
}

void write_report_json(std::ostream& out, const EvalReport& report) {
  nlohmann::json doc;
  doc["model"] = report.model;
  for (const auto& [domain, s] : report.domains) doc["domains"][std::string(corpus::domain_name(domain))] = scores_json(s);
  doc["overall"] = scores_json(report.overall);
  auto& outputs = doc["outputs"] = nlohmann::json::array();
  for (const auto& o : report.outputs)
    outputs.push_back({{"sr", corpus::format_sr(o.sr)},
                       {"domain", std::string(corpus::domain_name(*o.sr.domain))},
                       {"delexicalised", corpus::join_tokens(o.delexicalised)},
                       {"surface", corpus::join_tokens(o.surface)},
                       {"err", o.slot_error.err}});
  out << doc.dump(2) << '\n';
}

void write_table_csv(std::ostream& out, const std::vector<EvalReport>& reports) {
  out << "metric,method";
  for (auto d : corpus::all_domains()) out << ',' << corpus::domain_name(d);
  out << ",overall\n";
  const std::pair<const char*, double DomainScores::*> metrics[] = {
      {"ERR(%)", &DomainScores::err_percent}, {"BLEU", &DomainScores::bleu}, {"PPL", &DomainScores::perplexity}};
  for (const auto& [name, field] : metrics) {
    for (const auto& r : reports) {
      out << name << ',' << r.model;
      for (auto d : corpus::all_domains()) {
        auto it = r.domains.find(d);
        out << ',' << (it == r.domains.end() ? std::string() : fmt(it->second.*field));
      }
      out << ',' << fmt(r.overall.*field) << '\n';
    }
  }
}

}  // namespace scvae::evaluation
