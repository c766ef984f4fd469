// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "scvae/autodiff.hpp"

namespace scvae::ad {

struct Parameter {
  std::string name;
  Node node;
};

// Ordered registry of trainable tensors. Names are unique.
class ParameterStore {
 public:
  Node add(const std::string& name, Tensor init);
  // Uniform(-range, range) initialisation drawn from `rng`.
  Node add_uniform(const std::string& name, Shape shape, double range, std::mt19937_64& rng);

  const Node& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::vector<Parameter>& all() noexcept { return params_; }
  const std::vector<Parameter>& all() const noexcept { return params_; }
  std::size_t size() const noexcept { return params_.size(); }
  std::size_t scalar_count() const;

  void zero_gradients();

  // Deep copy: new leaf nodes holding the same values.
  ParameterStore clone() const;
  // Copies values from a store with identical names and shapes.
  void assign_from(const ParameterStore& other);

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace scvae::ad
