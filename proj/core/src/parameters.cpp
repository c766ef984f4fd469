// SPDX-License-Identifier: Apache-2.0
#include "scvae/parameters.hpp"

namespace scvae::ad {

Node ParameterStore::add(const std::string& name, Tensor init) {
  if (index_.count(name)) throw ContractError("duplicate parameter name: " + name);
  index_[name] = params_.size();
  params_.push_back({name, Node::variable(std::move(init))});
  return params_.back().node;
}

Node ParameterStore::add_uniform(const std::string& name, Shape shape, double range, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(-range, range);
  for (double& v : t.data()) v = dist(rng);
  return add(name, std::move(t));
}

const Node& ParameterStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter: " + name);
  return params_[it->second].node;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.node.size();
  return n;
}

void ParameterStore::zero_gradients() {
  for (auto& p : params_) p.node.zero_grad();
}

ParameterStore ParameterStore::clone() const {
  ParameterStore copy;
  for (const auto& p : params_) copy.add(p.name, p.node.value());
  return copy;
}

void ParameterStore::assign_from(const ParameterStore& other) {
  if (other.size() != size()) throw ContractError("assign_from: parameter count differs");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& src = other.params_[i];
    if (src.name != params_[i].name || src.node.shape() != params_[i].node.shape())
      throw ContractError("assign_from: parameter mismatch at " + params_[i].name);
    params_[i].node.mutable_value() = src.node.value();
  }
}

}  // namespace scvae::ad
