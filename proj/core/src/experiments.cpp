// SPDX-License-Identifier: Apache-2.0
#include "scvae/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

namespace scvae::experiments {
namespace {

void report(const Plan& plan, const std::string& message) {
  if (plan.progress) plan.progress(message);
}

training::TrainResult train_one(const corpus::DatasetSplit& data, const Plan& plan, training::TrainConfig config,
                                const std::string& label) {
  report(plan, "training " + label);
  return training::train(config, data);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

using Field = double evaluation::DomainScores::*;
constexpr std::pair<const char*, Field> kMetrics[] = {{"ERR(%)", &evaluation::DomainScores::err_percent},
                                                      {"BLEU", &evaluation::DomainScores::bleu},
                                                      {"PPL", &evaluation::DomainScores::perplexity}};

}  // namespace

std::vector<evaluation::EvalReport> run_cross_domain(const corpus::DatasetSplit& data, const Plan& plan) {
  std::vector<evaluation::EvalReport> out;
  for (auto kind : plan.models) {
    auto config = plan.base;
    config.kind = kind;
    config.data_fraction = 1.0;
    config.kshot_target.reset();
    const auto result = train_one(data, plan, config, std::string(nets::model_kind_name(kind)));
    report(plan, "evaluating " + std::string(nets::model_kind_name(kind)));
    out.push_back(evaluation::evaluate(result.checkpoint, data.test, plan.eval));
  }
  return out;
}

std::vector<LimitedDataRow> run_limited_data(const corpus::DatasetSplit& data, const Plan& plan,
                                             const std::vector<double>& fractions) {
  std::vector<LimitedDataRow> rows;
  for (double fraction : fractions) {
    for (auto kind : plan.models) {
      auto config = plan.base;
      config.kind = kind;
      config.data_fraction = fraction;
      config.kshot_target.reset();
      config.validate();
      const std::string name(nets::model_kind_name(kind));
      const auto result = train_one(data, plan, config, name + " at fraction " + fmt(fraction));
      const auto eval = evaluation::evaluate(result.checkpoint, data.test, plan.eval);
      rows.push_back({fraction, name, eval.overall, training::select_training_examples(data.train, config).size()});
    }
  }
  return rows;
}

void write_limited_data_csv(std::ostream& out, const std::vector<LimitedDataRow>& rows) {
  out << "fraction,model,train_examples,err_percent,bleu,ppl\n";
  for (const auto& r : rows)
    out << r.fraction << ',' << r.model << ',' << r.train_examples << ',' << fmt(r.scores.err_percent) << ','
        << fmt(r.scores.bleu) << ',' << fmt(r.scores.perplexity) << '\n';
}

std::size_t default_kshot_cap(corpus::Domain target, const corpus::DatasetSplit& data) {
  std::map<corpus::Domain, std::size_t> counts;
  for (const auto& e : data.train) ++counts[*e.sr.domain];
  std::size_t largest = 0;
  for (const auto& [d, n] : counts) largest = std::max(largest, n);
  return counts[target] == largest && largest > 0 ? 600 : 300;
}

std::vector<KShotRow> run_k_shot(const corpus::DatasetSplit& data, const Plan& plan,
                                 const std::vector<corpus::Domain>& targets, std::optional<std::size_t> cap) {
  std::vector<KShotRow> rows;
  for (auto target : targets) {
    std::vector<corpus::Example> test;
    for (const auto& e : data.test)
      if (e.sr.domain == target) test.push_back(e);
    if (test.empty())
      throw std::invalid_argument("k-shot: no test examples for " + std::string(corpus::domain_name(target)));
    const std::size_t k = cap.value_or(default_kshot_cap(target, data));
    for (auto kind : plan.models) {
      auto config = plan.base;
      config.kind = kind;
      config.data_fraction = 1.0;
      config.kshot_target = target;
      config.kshot_cap = k;
      const std::string name(nets::model_kind_name(kind));
      const auto selected = training::select_training_examples(data.train, config);
      std::size_t target_examples = 0;
      for (const auto& e : selected) target_examples += e.sr.domain == target;
      const auto result =
          train_one(data, plan, config, name + " with " + std::to_string(k) + "-shot " + std::string(corpus::domain_name(target)));
      const auto eval = evaluation::evaluate(result.checkpoint, test, plan.eval);
      rows.push_back({target, name, k, target_examples, eval.overall});
    }
  }
  return rows;
}

void write_k_shot_csv(std::ostream& out, const std::vector<KShotRow>& rows) {
  std::vector<corpus::Domain> targets;
  std::vector<std::string> models;
  std::map<std::pair<std::string, corpus::Domain>, const KShotRow*> cells;
  for (const auto& r : rows) {
    if (std::find(targets.begin(), targets.end(), r.target) == targets.end()) targets.push_back(r.target);
    if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
    cells[{r.model, r.target}] = &r;
  }
  out << "metric,method";
  for (auto t : targets) out << ',' << corpus::domain_name(t);
  out << '\n';
  for (const auto& [name, field] : kMetrics) {
    for (const auto& m : models) {
      out << name << ',' << m;
      for (auto t : targets) {
        auto it = cells.find({m, t});
        out << ',' << (it == cells.end() ? std::string() : fmt(it->second->scores.*field));
      }
      out << '\n';
    }
  }
}

}  // namespace scvae::experiments
