// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "scvae/generation.hpp"

namespace scvae::evaluation {

// exp(total NLL / scored tokens) with z at the prior mean (zero for SCLSTM);
// eos is a scored token.
double perplexity(const training::Checkpoint& checkpoint, const std::vector<corpus::Example>& examples);

struct EvalOptions {
  std::size_t num_candidates = 10;
  std::size_t max_length = 60;
  generation::DecodeMode mode = generation::DecodeMode::kGreedy;
  double temperature = 1.0;
  std::uint64_t seed = 1;
};

struct DomainScores {
  double err_percent = 0.0;  // corpus-level: 100 * sum(p + q) / sum(N)
  double bleu = 0.0;
  double perplexity = 0.0;
  std::size_t srs = 0;
  std::size_t examples = 0;
};

struct GeneratedOutput {
  corpus::SemanticRepresentation sr;
  std::vector<std::string> delexicalised;
  std::vector<std::string> surface;
  metrics::SlotError slot_error;
};

struct EvalReport {
  std::string model;
  std::map<corpus::Domain, DomainScores> domains;
  DomainScores overall;
  std::vector<GeneratedOutput> outputs;  // top candidate per distinct SR
};

// Groups examples by (domain, SR). Each distinct SR is generated once; its
// top candidate is relexicalised and scored against every reference sharing
// that SR.
EvalReport evaluate(const training::Checkpoint& checkpoint, const std::vector<corpus::Example>& examples,
                    const EvalOptions& options);

void write_report_json(std::ostream& out, const EvalReport& report);
// Rows per metric and method; columns are the four domains plus overall.
void write_table_csv(std::ostream& out, const std::vector<EvalReport>& reports);

}  // namespace scvae::evaluation
