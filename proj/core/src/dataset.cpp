// SPDX-License-Identifier: Apache-2.0
#include "scvae/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

namespace scvae::corpus {

using nlohmann::json;

std::map<Domain, std::array<std::size_t, 3>> DatasetSplit::domain_counts() const {
  std::map<Domain, std::array<std::size_t, 3>> counts;
  const std::vector<Example>* parts[3] = {&train, &valid, &test};
  for (std::size_t k = 0; k < 3; ++k)
    for (const auto& ex : *parts[k]) ++counts[*ex.sr.domain][k];
  return counts;
}

Records parse_records(const std::string& json_text, std::optional<Domain> default_domain) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw LoadError(std::string("invalid JSON: ") + e.what(), std::nullopt);
  }
  if (!doc.is_array()) throw LoadError("dataset must be a JSON array", std::nullopt);

  Records out;
  out.examples.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& rec = doc[i];
    if (!rec.is_array() || rec.size() < 3 || rec.size() > 4)
      throw LoadError("expected [sr, reference, delexicalised] array", i);
    if (!rec[0].is_string() || !rec[1].is_string())
      throw LoadError("sr and reference must be strings", i);
    if (!rec[2].is_string() && !rec[2].is_null())
      throw LoadError("delexicalised text must be a string or null", i);
    std::optional<Domain> domain = default_domain;
    if (rec.size() == 4) {
      if (!rec[3].is_string() || !(domain = domain_from_name(rec[3].get<std::string>())))
        throw LoadError("unknown domain " + rec[3].dump(), i);
    }
    Example ex;
    try {
      ex.sr = parse_sr(rec[0].get<std::string>(), domain);
    } catch (const std::exception& e) {
      throw LoadError(e.what(), i);
    }
    if (!ex.sr.domain) throw LoadError("cannot determine the domain of " + rec[0].get<std::string>(), i);
    ex.reference = rec[1].get<std::string>();
    if (rec[2].is_string()) {
      ex.delex = from_delexicalised_text(rec[2].get<std::string>());
    } else {
      auto result = delexicalise(ex.reference, ex.sr);
      out.unmatched_values += result.unmatched_values;
      ex.delex = std::move(result.utterance);
    }
    if (ex.delex.tokens.empty()) throw LoadError("empty utterance", i);
    out.examples.push_back(std::move(ex));
  }
  return out;
}

Records load_records(const std::filesystem::path& path, std::optional<Domain> default_domain) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string(), std::nullopt);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_records(buf.str(), default_domain);
}

void save_records(const std::filesystem::path& path, const std::vector<Example>& examples) {
  json doc = json::array();
  for (const auto& ex : examples)
    doc.push_back({format_sr(ex.sr), ex.reference, join_tokens(ex.delex.tokens),
                   std::string(domain_name(*ex.sr.domain))});
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(1) << '\n';
}

DatasetSplit split_dataset(std::vector<Example> examples, const SplitRatios& ratios, std::uint64_t seed) {
  if (ratios.train <= 0 || ratios.valid < 0 || ratios.test < 0)
    throw std::invalid_argument("split ratios must be non-negative with a positive training share");
  std::mt19937_64 rng(seed);
  std::shuffle(examples.begin(), examples.end(), rng);
  const double total = ratios.train + ratios.valid + ratios.test;
  const double n = static_cast<double>(examples.size());
  const auto n_train = static_cast<std::size_t>(std::llround(n * ratios.train / total));
  const auto n_valid = std::min(examples.size() - n_train,
                                static_cast<std::size_t>(std::llround(n * ratios.valid / total)));
  DatasetSplit split;
  auto first = examples.begin();
  split.train.assign(std::make_move_iterator(first), std::make_move_iterator(first + n_train));
  split.valid.assign(std::make_move_iterator(first + n_train), std::make_move_iterator(first + n_train + n_valid));
  split.test.assign(std::make_move_iterator(first + n_train + n_valid), std::make_move_iterator(examples.end()));
  return split;
}

DatasetSplit load_dataset(const std::filesystem::path& path, const SplitRatios& ratios, std::uint64_t seed,
                          std::optional<Domain> default_domain) {
  Records records = load_records(path, default_domain);
  DatasetSplit split = split_dataset(std::move(records.examples), ratios, seed);
  split.unmatched_values = records.unmatched_values;
  return split;
}

}  // namespace scvae::corpus
