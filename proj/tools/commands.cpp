// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "scvae/experiments.hpp"
#include "scvae/latent_viz.hpp"
#include "scvae/synth.hpp"

namespace scvae::cli {
namespace {

namespace fs = std::filesystem;
using corpus::Domain;

Domain domain_arg(const std::string& name) {
  if (auto d = corpus::domain_from_name(name)) return *d;
  throw std::invalid_argument("unknown domain '" + name + "' (expected restaurant, hotel, tv or laptop)");
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

struct DataArgs {
  std::string path;
  std::uint64_t split_seed = 1;
  std::string default_domain;

  void add(CLI::App* cmd, bool required = true) {
    auto* opt = cmd->add_option("--data", path, "JSON dataset of [sr, reference, delexicalised|null(, domain)]")
                    ->check(CLI::ExistingFile);
    if (required) opt->required();
    cmd->add_option("--split-seed", split_seed, "seed of the 3:1:1 train/valid/test split")->capture_default_str();
    cmd->add_option("--default-domain", default_domain, "domain for records that carry none");
  }

  corpus::DatasetSplit load() const {
    std::optional<Domain> domain;
    if (!default_domain.empty()) domain = domain_arg(default_domain);
    return corpus::load_dataset(path, {}, split_seed, domain);
  }
};

struct TrainArgs {
  training::TrainConfig config;
  std::string model = "scvae";

  void add(CLI::App* cmd, bool with_model = true) {
    if (with_model)
      cmd->add_option("--model", model, "scvae or sclstm")
          ->check(CLI::IsMember({"scvae", "sclstm"}))
          ->capture_default_str();
    cmd->add_option("--epochs", config.max_epochs, "maximum epochs")->capture_default_str();
    cmd->add_option("--batch-size", config.batch_size)->capture_default_str();
    cmd->add_option("--lr", config.learning_rate, "Adam learning rate")->capture_default_str();
    cmd->add_option("--patience", config.patience, "early-stopping patience in epochs")->capture_default_str();
    cmd->add_option("--latent", config.latent, "latent and decoder hidden size")->capture_default_str();
    cmd->add_option("--embedding", config.embedding)->capture_default_str();
    cmd->add_option("--encoder-hidden", config.encoder_hidden)->capture_default_str();
    cmd->add_option("--prior-hidden", config.prior_hidden)->capture_default_str();
    cmd->add_option("--anneal-steps", config.anneal_steps, "updates until the KL weight reaches 1")
        ->capture_default_str();
    cmd->add_option("--clip-norm", config.clip_norm)->capture_default_str();
  }

  training::TrainConfig resolve(std::uint64_t seed) const {
    auto c = config;
    c.kind = nets::model_kind_from_name(model);
    c.seed = seed;
    c.validate();
    return c;
  }
};

struct EvalArgs {
  evaluation::EvalOptions options;
  std::string mode = "greedy";

  void add(CLI::App* cmd) {
    cmd->add_option("--n,--candidates", options.num_candidates, "candidates over-generated per SR")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--max-length", options.max_length)->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--mode", mode, "SCVAE decoding: greedy or sample")
        ->check(CLI::IsMember({"greedy", "sample"}))
        ->capture_default_str();
    cmd->add_option("--temperature", options.temperature)->check(CLI::PositiveNumber)->capture_default_str();
  }

  evaluation::EvalOptions resolve(std::uint64_t seed) const {
    auto o = options;
    o.mode = mode == "sample" ? generation::DecodeMode::kSample : generation::DecodeMode::kGreedy;
    o.seed = seed;
    return o;
  }
};

void add_seed(CLI::App* cmd, std::uint64_t& seed) {
  cmd->add_option("--seed", seed, "seed for every random choice")->envname("SCVAE_SEED")->capture_default_str();
}

training::Checkpoint load_checked(const std::string& path, const corpus::DatasetSplit& data) {
  auto ckpt = training::load_checkpoint(path);
  if (training::build_vocabulary(data.train).hash() != ckpt.vocabulary.hash())
    throw std::runtime_error("vocabulary hash mismatch: " + path + " was not trained on this dataset split");
  return ckpt;
}

const std::vector<corpus::Example>& pick_split(const corpus::DatasetSplit& data, const std::string& name) {
  if (name == "train") return data.train;
  if (name == "valid") return data.valid;
  return data.test;
}

template <class Fn>
void with_output(const std::string& path, std::ostream& fallback, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(fallback);
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  fn(out);
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::vector<Domain> parse_domains(const std::vector<std::string>& names) {
  std::vector<Domain> out;
  for (const auto& n : names) out.push_back(domain_arg(n));
  return out;
}

void write_compare_csv(std::ostream& out, const evaluation::EvalReport& baseline, const evaluation::EvalReport& model) {
  evaluation::write_table_csv(out, {baseline, model});
  using evaluation::DomainScores;
  const std::pair<const char*, double DomainScores::*> rows[] = {{"ERR(%)", &DomainScores::err_percent},
                                                                  {"BLEU", &DomainScores::bleu},
                                                                  {"PPL", &DomainScores::perplexity}};
  char buf[32];
  for (const auto& [name, field] : rows) {
    out << name << ",delta";
    for (auto d : corpus::all_domains()) {
      auto a = baseline.domains.find(d);
      auto b = model.domains.find(d);
      out << ',';
      if (a != baseline.domains.end() && b != model.domains.end()) {
        std::snprintf(buf, sizeof buf, "%.4f", b->second.*field - a->second.*field);
        out << buf;
      }
    }
    std::snprintf(buf, sizeof buf, "%.4f", model.overall.*field - baseline.overall.*field);
    out << ',' << buf << '\n';
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semantically conditioned VAE and SCLSTM for dialogue NLG"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file; flags override it");
  app.set_version_flag("--version", "scvae 0.1.0");

  std::uint64_t seed = 1;

  // synth
  auto* synth = app.add_subcommand("synth", "write a synthetic corpus");
  corpus::SynthConfig sc;
  std::string synth_out;
  std::vector<std::string> synth_domains;
  bool even = false;
  synth->add_option("--out", synth_out, "output JSON path")->required();
  synth->add_option("--pairs", sc.pairs)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--templates", sc.templates, "surface templates per domain and act")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--domains", synth_domains, "restrict to these domains");
  synth->add_option("--acts", sc.acts, "restrict to these acts");
  synth->add_option("--slots", sc.slots, "restrict to these slots");
  synth->add_flag("--even", even, "spread pairs evenly over domains");
  add_seed(synth, seed);

  // train
  auto* train = app.add_subcommand("train", "train an SCVAE or SCLSTM model");
  DataArgs train_data;
  TrainArgs train_args;
  std::string ckpt_out, metrics_out;
  double fraction = 1.0;
  std::string kshot_target;
  std::size_t kshot_cap = 0;
  train_data.add(train);
  train_args.add(train);
  train->add_option("--out", ckpt_out, "checkpoint path")->required();
  train->add_option("--metrics", metrics_out, "per-epoch loss CSV");
  train->add_option("--fraction", fraction, "share of each domain's training data")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  train->add_option("--kshot-target", kshot_target, "domain limited to --kshot-cap training examples");
  train->add_option("--kshot-cap", kshot_cap, "0 picks 300, or 600 for the largest domain");
  add_seed(train, seed);

  // generate
  auto* gen = app.add_subcommand("generate", "over-generate and rerank sentences for one SR");
  std::string gen_ckpt, gen_sr, gen_domain;
  EvalArgs gen_args;
  gen->add_option("--checkpoint", gen_ckpt)->required()->check(CLI::ExistingFile);
  gen->add_option("--sr", gen_sr, "e.g. \"inform(name='x';area='north')\"")->required();
  gen->add_option("--domain", gen_domain, "domain unless the SR has a type slot");
  gen_args.add(gen);
  add_seed(gen, seed);

  // eval
  auto* eval = app.add_subcommand("eval", "score a checkpoint with ERR, BLEU-4 and perplexity");
  DataArgs eval_data;
  EvalArgs eval_args;
  std::string eval_ckpt, eval_split = "test", report_out, table_out;
  eval->add_option("--checkpoint", eval_ckpt)->required()->check(CLI::ExistingFile);
  eval_data.add(eval);
  eval_args.add(eval);
  eval->add_option("--split", eval_split)->check(CLI::IsMember({"train", "valid", "test"}))->capture_default_str();
  eval->add_option("--report", report_out, "JSON report path (default stdout)");
  eval->add_option("--table", table_out, "per-domain CSV table path");
  add_seed(eval, seed);

  // viz
  auto* viz_cmd = app.add_subcommand("viz", "PCA projection of posterior means");
  DataArgs viz_data;
  std::string viz_ckpt, viz_split = "test", viz_out;
  viz_cmd->add_option("--checkpoint", viz_ckpt)->required()->check(CLI::ExistingFile);
  viz_data.add(viz_cmd);
  viz_cmd->add_option("--split", viz_split)->check(CLI::IsMember({"train", "valid", "test"}))->capture_default_str();
  viz_cmd->add_option("--out", viz_out, "CSV of x,y,domain,act")->required();
  add_seed(viz_cmd, seed);

  // compare
  auto* compare = app.add_subcommand("compare", "side-by-side table of two checkpoints");
  DataArgs cmp_data;
  EvalArgs cmp_args;
  std::string cmp_baseline, cmp_model, cmp_out;
  compare->add_option("--baseline", cmp_baseline, "usually the SCLSTM checkpoint")->required()->check(CLI::ExistingFile);
  compare->add_option("--model", cmp_model, "usually the SCVAE checkpoint")->required()->check(CLI::ExistingFile);
  cmp_data.add(compare);
  cmp_args.add(compare);
  compare->add_option("--out", cmp_out, "CSV path (default stdout)");
  add_seed(compare, seed);

  // preset
  auto* preset = app.add_subcommand("preset", "run an experiment preset for both models");
  std::string preset_name, out_dir = ".";
  DataArgs preset_data;
  TrainArgs preset_train;
  EvalArgs preset_eval;
  std::vector<double> fractions = experiments::kDefaultFractions;
  std::vector<std::string> targets;
  std::size_t preset_cap = 0;
  preset->add_option("name", preset_name)
      ->required()
      ->check(CLI::IsMember({"cross_domain", "limited_data", "k_shot"}));
  preset_data.add(preset);
  preset_train.add(preset, false);
  preset_eval.add(preset);
  preset->add_option("--out-dir", out_dir)->capture_default_str();
  preset->add_option("--fractions", fractions, "limited_data fractions")->check(CLI::Range(0.0, 1.0));
  preset->add_option("--target", targets, "k_shot target domains (default all)");
  preset->add_option("--cap", preset_cap, "k_shot examples; 0 picks 300, or 600 for the largest domain");
  add_seed(preset, seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << one_line(e.what()) << '\n';
    return kExitUsage;
  }

  try {
    if (*synth) {
      if (!synth_domains.empty()) sc.domains = parse_domains(synth_domains);
      sc.corpus_proportions = !even;
      sc.seed = seed;
      const auto examples = corpus::synth_corpus(sc);
      corpus::save_records(synth_out, examples);
      out << "wrote " << examples.size() << " pairs to " << synth_out << '\n';
    } else if (*train) {
      const auto data = train_data.load();
      auto config = train_args.resolve(seed);
      config.data_fraction = fraction;
      if (!kshot_target.empty()) {
        config.kshot_target = domain_arg(kshot_target);
        config.kshot_cap = kshot_cap ? kshot_cap : experiments::default_kshot_cap(*config.kshot_target, data);
      }
      config.validate();
      const auto result = training::train(config, data);
      training::save_checkpoint(ckpt_out, result.checkpoint);
      if (!metrics_out.empty()) with_output(metrics_out, out, [&](std::ostream& o) {
          training::write_metrics_csv(o, result.log);
        });
      out << "trained " << train_args.model << " for " << result.epochs_run << " epochs; best epoch "
          << result.best_epoch << "; checkpoint " << ckpt_out << '\n';
    } else if (*gen) {
      const auto ckpt = training::load_checkpoint(gen_ckpt);
      std::optional<Domain> domain;
      if (!gen_domain.empty()) domain = domain_arg(gen_domain);
      generation::GenerationRequest req;
      req.sr = corpus::parse_sr(gen_sr, domain, ckpt.inventories);
      const auto o = gen_args.resolve(seed);
      req.num_candidates = o.num_candidates;
      req.max_length = o.max_length;
      req.mode = o.mode;
      req.temperature = o.temperature;
      req.seed = seed;
      const auto ranked = generation::generate(ckpt, req);
      for (std::size_t i = 0; i < ranked.size(); ++i) {
        const auto& c = ranked[i];
        const auto surface = generation::relexicalise(c.tokens, req.sr);
        nlohmann::json line = {{"rank", i + 1},
                               {"delexicalised", corpus::join_tokens(c.tokens)},
                               {"surface", corpus::join_tokens(surface.tokens)},
                               {"err", c.slot_error.err},
                               {"loglik", c.log_likelihood},
                               {"truncated", c.truncated}};
        if (!surface.unresolved.empty()) line["unresolved_slots"] = surface.unresolved;
        out << line.dump() << '\n';
      }
    } else if (*eval) {
      const auto data = eval_data.load();
      const auto ckpt = load_checked(eval_ckpt, data);
      const auto report = evaluation::evaluate(ckpt, pick_split(data, eval_split), eval_args.resolve(seed));
      with_output(report_out, out, [&](std::ostream& o) { evaluation::write_report_json(o, report); });
      if (!table_out.empty())
        with_output(table_out, out, [&](std::ostream& o) { evaluation::write_table_csv(o, {report}); });
    } else if (*viz_cmd) {
      const auto data = viz_data.load();
      const auto ckpt = load_checked(viz_ckpt, data);
      const auto latents = viz::collect_latents(ckpt, pick_split(data, viz_split));
      const auto pca = viz::pca_project(latents.z, 2);
      const auto points = viz::project_latents(latents, pca);
      viz::export_projection(points, viz_out);
      out << "explained_variance " << pca.explained_variance(0) << ' ' << pca.explained_variance(1) << '\n';
      std::set<std::string> domains(latents.domains.begin(), latents.domains.end());
      if (domains.size() >= 2) {
        const auto stats = viz::domain_cluster_stats(points);
        out << "inter_domain_centroid_distance " << stats.inter_centroid << '\n'
            << "intra_domain_spread " << stats.intra_spread << '\n';
      }
    } else if (*compare) {
      const auto data = cmp_data.load();
      const auto options = cmp_args.resolve(seed);
      const auto baseline = evaluation::evaluate(load_checked(cmp_baseline, data), data.test, options);
      const auto model = evaluation::evaluate(load_checked(cmp_model, data), data.test, options);
      with_output(cmp_out, out, [&](std::ostream& o) { write_compare_csv(o, baseline, model); });
    } else if (*preset) {
      const auto data = preset_data.load();
      experiments::Plan plan;
      plan.base = preset_train.resolve(seed);
      plan.eval = preset_eval.resolve(seed);
      plan.progress = [&err](const std::string& m) { err << "info: " << m << '\n'; };
      fs::create_directories(out_dir);
      const fs::path dir(out_dir);
      if (preset_name == "cross_domain") {
        const auto reports = experiments::run_cross_domain(data, plan);
        with_output((dir / "cross_domain.csv").string(), out,
                    [&](std::ostream& o) { evaluation::write_table_csv(o, reports); });
        out << "wrote " << (dir / "cross_domain.csv").string() << '\n';
      } else if (preset_name == "limited_data") {
        const auto rows = experiments::run_limited_data(data, plan, fractions);
        with_output((dir / "limited_data.csv").string(), out,
                    [&](std::ostream& o) { experiments::write_limited_data_csv(o, rows); });
        out << "wrote " << (dir / "limited_data.csv").string() << '\n';
      } else {
        auto domains = targets.empty() ? corpus::all_domains() : parse_domains(targets);
        std::optional<std::size_t> cap;
        if (preset_cap) cap = preset_cap;
        const auto rows = experiments::run_k_shot(data, plan, domains, cap);
        with_output((dir / "k_shot.csv").string(), out,
                    [&](std::ostream& o) { experiments::write_k_shot_csv(o, rows); });
        for (const auto& r : rows)
          out << "k_shot " << corpus::domain_name(r.target) << ' ' << r.model << " trained on " << r.target_examples
              << " target examples\n";
        out << "wrote " << (dir / "k_shot.csv").string() << '\n';
      }
    }
  } catch (const corpus::LoadError& e) {
    err << "error: " << one_line(e.what()) << '\n';
    return kExitUsage;
  } catch (const corpus::ParseError& e) {
    err << "error: " << one_line(e.what()) << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << one_line(e.what()) << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << one_line(e.what()) << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace scvae::cli
