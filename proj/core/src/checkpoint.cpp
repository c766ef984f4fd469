// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "scvae/training.hpp"

namespace scvae::training {
namespace {

using nlohmann::json;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json config_to_json(const TrainConfig& c) {
  json j = {{"kind", nets::model_kind_name(c.kind)},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"max_epochs", c.max_epochs},
            {"patience", c.patience},
            {"seed", c.seed},
            {"latent", c.latent},
            {"embedding", c.embedding},
            {"encoder_hidden", c.encoder_hidden},
            {"prior_hidden", c.prior_hidden},
            {"anneal_steps", c.anneal_steps},
            {"clip_norm", c.clip_norm},
            {"data_fraction", c.data_fraction},
            {"kshot_cap", c.kshot_cap}};
  j["kshot_target"] = c.kshot_target ? json(std::string(corpus::domain_name(*c.kshot_target))) : json(nullptr);
  return j;
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.kind = nets::model_kind_from_name(j.at("kind").get<std::string>());
  c.batch_size = j.at("batch_size");
  c.learning_rate = j.at("learning_rate");
  c.max_epochs = j.at("max_epochs");
  c.patience = j.at("patience");
  c.seed = j.at("seed");
  c.latent = j.at("latent");
  c.embedding = j.at("embedding");
  c.encoder_hidden = j.at("encoder_hidden");
  c.prior_hidden = j.at("prior_hidden");
  c.anneal_steps = j.at("anneal_steps");
  c.clip_norm = j.at("clip_norm");
  c.data_fraction = j.at("data_fraction");
  c.kshot_cap = j.at("kshot_cap");
  if (!j.at("kshot_target").is_null()) c.kshot_target = corpus::domain_from_name(j.at("kshot_target").get<std::string>());
  return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto& dims = ckpt.model.dims();
  json params = json::array();
  for (const auto& p : ckpt.model.params().all())
    params.push_back({{"name", p.name}, {"shape", p.node.shape()}, {"data", p.node.value().storage()}});
  json doc = {{"version", Checkpoint::kVersion},
              {"kind", nets::model_kind_name(ckpt.model.kind())},
              {"dims",
               {{"vocab", dims.vocab},
                {"embedding", dims.embedding},
                {"encoder_hidden", dims.encoder_hidden},
                {"latent", dims.latent},
                {"prior_hidden", dims.prior_hidden},
                {"domains", dims.domains},
                {"acts", dims.acts},
                {"slots", dims.slots},
                {"alpha", dims.alpha}}},
              {"config", config_to_json(ckpt.config)},
              {"global_step", ckpt.global_step},
              {"vocabulary", ckpt.vocabulary.words()},
              {"vocabulary_hash", hex64(ckpt.vocabulary.hash())},
              {"inventories", {{"acts", ckpt.inventories.acts()}, {"slots", ckpt.inventories.slots()}}},
              {"parameters", std::move(params)}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << doc.dump() << '\n';
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw std::runtime_error("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  if (doc.value("version", std::string()) != Checkpoint::kVersion)
    throw std::runtime_error("unsupported checkpoint version in " + path.string());

  auto vocab = corpus::Vocabulary::from_words(doc.at("vocabulary").get<std::vector<std::string>>());
  if (hex64(vocab.hash()) != doc.at("vocabulary_hash").get<std::string>())
    throw std::runtime_error("vocabulary hash mismatch inside checkpoint " + path.string());
  corpus::Inventories inventories(doc.at("inventories").at("acts").get<std::vector<std::string>>(),
                                  doc.at("inventories").at("slots").get<std::vector<std::string>>());
  const json& d = doc.at("dims");
  nets::ModelDims dims;
  dims.vocab = d.at("vocab");
  dims.embedding = d.at("embedding");
  dims.encoder_hidden = d.at("encoder_hidden");
  dims.latent = d.at("latent");
  dims.prior_hidden = d.at("prior_hidden");
  dims.domains = d.at("domains");
  dims.acts = d.at("acts");
  dims.slots = d.at("slots");
  dims.alpha = d.at("alpha");
  if (dims.vocab != vocab.size()) throw std::runtime_error("checkpoint vocabulary size disagrees with dims");

  nets::Model model(nets::model_kind_from_name(doc.at("kind").get<std::string>()), dims, 0);
  auto& params = model.params().all();
  const json& stored = doc.at("parameters");
  if (stored.size() != params.size()) throw std::runtime_error("checkpoint parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const json& p = stored[i];
    if (p.at("name").get<std::string>() != params[i].name)
      throw std::runtime_error("checkpoint parameter order mismatch at " + params[i].name);
    ad::Tensor value(p.at("shape").get<ad::Shape>(), p.at("data").get<std::vector<double>>());
    if (value.shape() != params[i].node.shape())
      throw std::runtime_error("checkpoint parameter shape mismatch for " + params[i].name);
    params[i].node.mutable_value() = std::move(value);
  }
  return Checkpoint{std::move(model), std::move(vocab), std::move(inventories), config_from_json(doc.at("config")),
                    doc.at("global_step").get<std::size_t>()};
}

}  // namespace scvae::training
