// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <ostream>
#include <vector>

#include "scvae/evaluation.hpp"

namespace scvae::experiments {

struct Plan {
  training::TrainConfig base;  // kind, data_fraction and k-shot fields are overridden per run
  evaluation::EvalOptions eval;
  std::vector<nets::ModelKind> models{nets::ModelKind::kSclstm, nets::ModelKind::kScvae};
  std::function<void(const std::string&)> progress;  // optional
};

inline const std::vector<double> kDefaultFractions{0.1, 0.25, 0.5, 0.75, 1.0};

// Both models on the full training split, scored per domain.
std::vector<evaluation::EvalReport> run_cross_domain(const corpus::DatasetSplit& data, const Plan& plan);

struct LimitedDataRow {
  double fraction = 0.0;
  std::string model;
  evaluation::DomainScores scores;  // on the full test split
  std::size_t train_examples = 0;
};
std::vector<LimitedDataRow> run_limited_data(const corpus::DatasetSplit& data, const Plan& plan,
                                             const std::vector<double>& fractions = kDefaultFractions);
// Columns: fraction,model,train_examples,err_percent,bleu,ppl
void write_limited_data_csv(std::ostream& out, const std::vector<LimitedDataRow>& rows);

// 600 when `target` is the domain with the most training examples, else 300.
std::size_t default_kshot_cap(corpus::Domain target, const corpus::DatasetSplit& data);

struct KShotRow {
  corpus::Domain target = corpus::Domain::kRestaurant;
  std::string model;
  std::size_t cap = 0;
  std::size_t target_examples = 0;  // target-domain examples actually trained on
  evaluation::DomainScores scores;  // on the target domain's test examples
};
// One run per target and model; other domains keep all their training data.
std::vector<KShotRow> run_k_shot(const corpus::DatasetSplit& data, const Plan& plan,
                                 const std::vector<corpus::Domain>& targets, std::optional<std::size_t> cap = {});
// Rows per metric and method; one column per target domain.
void write_k_shot_csv(std::ostream& out, const std::vector<KShotRow>& rows);

}  // namespace scvae::experiments
