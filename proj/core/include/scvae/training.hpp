// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "scvae/dataset.hpp"
#include "scvae/objective.hpp"

namespace scvae::training {

// Linear KL-weight ramp: 0 at step 0, 1 from `ramp_steps` on.
struct AnnealSchedule {
  std::size_t ramp_steps = 5000;
  double weight(std::size_t step) const;
};

inline double anneal_weight(std::size_t step, const AnnealSchedule& schedule) { return schedule.weight(step); }

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 5.0;  // global gradient-norm clip; 0 disables
};

class Adam {
 public:
  Adam(ad::ParameterStore& params, AdamConfig config);
  // Applies one update from the accumulated gradients; returns the
  // gradient norm before clipping.
  double step();
  std::size_t steps() const { return t_; }

 private:
  ad::ParameterStore& params_;
  AdamConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t t_ = 0;
};

struct TrainConfig {
  nets::ModelKind kind = nets::ModelKind::kScvae;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::size_t max_epochs = 30;
  std::size_t patience = 10;
  std::uint64_t seed = 1;
  std::size_t latent = 128;
  std::size_t embedding = 64;
  std::size_t encoder_hidden = 64;
  std::size_t prior_hidden = 128;
  std::size_t anneal_steps = 5000;
  double clip_norm = 5.0;
  double data_fraction = 1.0;
  std::optional<corpus::Domain> kshot_target;
  std::size_t kshot_cap = 0;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Parameters plus everything needed to rebuild and run the model.
struct Checkpoint {
  static constexpr const char* kVersion = "scvae-checkpoint-v1";

  nets::Model model;
  corpus::Vocabulary vocabulary;
  corpus::Inventories inventories = corpus::Inventories::standard();
  TrainConfig config;
  std::size_t global_step = 0;

  Checkpoint clone() const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct MetricsRow {
  std::size_t step = 0;
  std::size_t epoch = 0;
  std::string split;
  LossBreakdown loss;
};

// Columns: step,epoch,split,nll,kl,kl_weight,recovery_d,recovery_a,recovery_s,total
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<MetricsRow> log;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Data-fraction subsetting (per domain, preserving ratios) and k-shot capping
// of the target domain, both seeded.
std::vector<corpus::Example> select_training_examples(const std::vector<corpus::Example>& train,
                                                      const TrainConfig& config);

corpus::Vocabulary build_vocabulary(const std::vector<corpus::Example>& train);
nets::ModelDims model_dims(const TrainConfig& config, const corpus::Vocabulary& vocab,
                           const corpus::Inventories& inventories);

// Mean loss over `examples` with kl weight 1 and noise drawn from a stream
// seeded by `seed`, so repeated calls agree exactly.
LossBreakdown evaluate_loss(const Checkpoint& checkpoint, const std::vector<corpus::Example>& examples,
                            std::uint64_t seed);

struct TokenAccuracy {
  std::size_t tokens = 0;
  std::size_t correct = 0;
  double value() const { return tokens ? static_cast<double>(correct) / static_cast<double>(tokens) : 0.0; }
};
// Teacher-forced argmax accuracy with z at the posterior mean (zero for SCLSTM).
TokenAccuracy teacher_forced_accuracy(const Checkpoint& checkpoint, const std::vector<corpus::Example>& examples);

// Mini-batch Adam with KL annealing and early stopping on validation loss.
// Restores the parameters of the best validation epoch.
TrainResult train(const TrainConfig& config, const corpus::DatasetSplit& data);

}  // namespace scvae::training
