// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "scvae/sr.hpp"
#include "scvae/text.hpp"

namespace scvae::corpus {

struct Example {
  SemanticRepresentation sr;
  DelexicalisedUtterance delex;
  std::string reference;

  friend bool operator==(const Example&, const Example&) = default;
};

class LoadError : public std::runtime_error {
 public:
  LoadError(const std::string& what, std::optional<std::size_t> record)
      : std::runtime_error(record ? "record " + std::to_string(*record) + ": " + what : what), record_(record) {}
  std::optional<std::size_t> record() const noexcept { return record_; }

 private:
  std::optional<std::size_t> record_;
};

struct SplitRatios {
  double train = 3.0;
  double valid = 1.0;
  double test = 1.0;
};

struct DatasetSplit {
  std::vector<Example> train;
  std::vector<Example> valid;
  std::vector<Example> test;
  std::size_t unmatched_values = 0;

  // Per-domain (train, valid, test) sizes.
  std::map<Domain, std::array<std::size_t, 3>> domain_counts() const;
};

struct Records {
  std::vector<Example> examples;
  std::size_t unmatched_values = 0;
};

// Reads a JSON array of [sr, reference, delexicalised-or-null(, domain)].
// Records without a domain element use `default_domain`, then a `type` slot.
Records load_records(const std::filesystem::path& path, std::optional<Domain> default_domain = std::nullopt);
Records parse_records(const std::string& json_text, std::optional<Domain> default_domain = std::nullopt);
void save_records(const std::filesystem::path& path, const std::vector<Example>& examples);

// Seeded shuffle followed by a contiguous split in the given proportions.
DatasetSplit split_dataset(std::vector<Example> examples, const SplitRatios& ratios, std::uint64_t seed);

DatasetSplit load_dataset(const std::filesystem::path& path, const SplitRatios& ratios = {},
                          std::uint64_t seed = 1, std::optional<Domain> default_domain = std::nullopt);

}  // namespace scvae::corpus
