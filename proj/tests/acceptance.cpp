// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (capped at 100).
#include <chrono>
#include <cstdlib>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "gradcheck.hpp"
#include "oracle_cases.hpp"
#include "scvae/evaluation.hpp"
#include "scvae/experiments.hpp"
#include "scvae/latent_viz.hpp"
#include "scvae/synth.hpp"

namespace scvae {
namespace {

using Clock = std::chrono::steady_clock;
using ad::Node;
using ad::Tensor;
using nets::ModelKind;

// Pinned tolerances and budgets.
constexpr double kGradRelTolerance = 1e-3;
constexpr double kGradStep = 1e-4;
constexpr double kGradSeconds = 60.0;
constexpr double kKlRelTolerance = 0.02;
constexpr std::size_t kKlSamples = 1'000'000;
constexpr double kBleuTolerance = 1e-9;
constexpr double kPplTolerance = 1e-6;
constexpr double kOverfitAccuracy = 0.99;
constexpr double kOverfitPpl = 1.5;
constexpr std::size_t kOverfitMaxEpochs = 300;
constexpr double kOverfitSeconds = 600.0;
constexpr double kDiversityShare = 0.95;
constexpr double kOrthonormalTolerance = 1e-8;
constexpr std::size_t kSeeds = 5;

// Desk-scale model: paper layer sizes, a budget that fits one CPU core.
constexpr std::size_t kDeskPairs = 2000;
constexpr std::size_t kDeskEpochs = 30;

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << ": " << detail << std::endl;
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------- 1
testing::GradCheck grad_check(const std::function<Node()>& loss, std::vector<Node> leaves) {
  return testing::check_gradients(loss, std::move(leaves), kGradStep);
}

void gradient_correctness() {
  const auto start = Clock::now();
  corpus::SynthConfig sc;
  sc.domains = {corpus::Domain::kRestaurant, corpus::Domain::kHotel};
  sc.acts = {"inform", "confirm", "request"};
  sc.slots = {"name", "area", "food", "pricerange"};
  sc.pairs = 10;
  const auto data = corpus::synth_corpus(sc);
  const auto vocab = training::build_vocabulary(data);
  const auto& inv = corpus::Inventories::standard();
  training::TrainConfig tc;
  tc.latent = 5;
  tc.embedding = 4;
  tc.encoder_hidden = 3;
  tc.prior_hidden = 6;
  const auto dims = training::model_dims(tc, vocab, inv);
  std::vector<const corpus::Example*> ptrs{&data[0], &data[1]};
  const auto batch = nets::make_batch(ptrs, vocab, inv);
  std::mt19937_64 rng(31);
  std::normal_distribution<double> normal;
  Tensor noise({2, 5});
  for (double& v : noise.data()) v = normal(rng);

  double worst = 0.0;
  std::size_t checked = 0;
  std::vector<std::string> failed;
  const auto record = [&](const std::string& what, const testing::GradCheck& r) {
    worst = std::max(worst, r.max_relative_error);
    checked += r.checked;
    if (!(r.max_relative_error < kGradRelTolerance)) failed.push_back(what);
  };
  const auto leaves = [](nets::Model& m, std::string_view prefix) {
    std::vector<Node> out;
    for (auto& p : m.params().all())
      if (p.name.starts_with(prefix)) out.push_back(p.node);
    return out;
  };
  const auto widen = [&](nets::Model& m) {
    for (auto& p : m.params().all()) p.node.mutable_value() = testing::random_tensor(p.node.shape(), rng, -0.5, 0.5);
  };

  nets::Model m(ModelKind::kScvae, dims, 3);
  widen(m);
  {
    const auto w = testing::random_tensor({2, 2 * tc.encoder_hidden}, rng);
    auto l = leaves(m, "enc.");
    l.push_back(m.params().at("embedding"));
    record("encoder", grad_check([&] { return ad::sum(ad::mul(m.encode(batch), Node::constant(w))); }, l));
  }
  {
    auto enc = Node::variable(testing::random_tensor({2, 2 * tc.encoder_hidden}, rng));
    const auto wm = testing::random_tensor({2, 5}, rng), wv = testing::random_tensor({2, 5}, rng);
    auto l = leaves(m, "recognition");
    l.push_back(enc);
    record("recognition", grad_check(
                              [&] {
                                const auto g = m.recognition(enc, Node::constant(batch.condition));
                                return ad::add(ad::sum(ad::mul(g.mean, Node::constant(wm))),
                                               ad::sum(ad::mul(g.log_variance, Node::constant(wv))));
                              },
                              l));
  }
  {
    auto cond = Node::variable(batch.condition);
    const auto wm = testing::random_tensor({2, 5}, rng), wv = testing::random_tensor({2, 5}, rng);
    auto l = leaves(m, "prior");
    l.push_back(cond);
    record("prior", grad_check(
                        [&] {
                          const auto g = m.prior(cond);
                          return ad::add(ad::sum(ad::mul(g.mean, Node::constant(wm))),
                                         ad::sum(ad::mul(g.log_variance, Node::constant(wv))));
                        },
                        l));
  }
  {
    auto z = Node::variable(testing::random_tensor({2, 5}, rng));
    auto l = leaves(m, "recover");
    l.push_back(z);
    record("recovery", grad_check(
                           [&] {
                             const auto r = m.recover(z);
                             return ad::add(ad::add(ad::softmax_cross_entropy(r.domain, batch.domain_labels),
                                                    ad::softmax_cross_entropy(r.act, batch.act_labels)),
                                            ad::sigmoid_cross_entropy(r.slots, batch.slot_labels));
                           },
                           l));
  }
  {
    auto z = Node::variable(testing::random_tensor({2, 5}, rng, -1, 1));
    auto l = leaves(m, "decoder");
    for (const char* n : {"output.w", "output.b", "embedding"}) l.push_back(m.params().at(n));
    l.push_back(z);
    record("decoder", grad_check(
                          [&] {
                            const auto tf = m.decode_teacher_forced(&z, batch);
                            return ad::softmax_cross_entropy(tf.logits, tf.targets);
                          },
                          l));
  }
  const auto all = [&](nets::Model& mm) { return leaves(mm, ""); };
  record("vae loss", grad_check([&] { return training::vae_loss(m, batch, noise, 0.6).total; }, all(m)));
  record("cvae loss",
         grad_check([&] { return training::cvae_loss(m, batch, noise, 0.6).total; }, all(m)));
  record("scvae loss",
         grad_check([&] { return training::scvae_loss(m, batch, noise, 0.6).total; }, all(m)));
  nets::Model lstm(ModelKind::kSclstm, dims, 4);
  widen(lstm);
  record("sclstm loss",
         grad_check([&] { return training::sclstm_loss(lstm, batch).total; }, all(lstm)));

  const double secs = seconds_since(start);
  std::string detail = fmt("max relative error %.2e over %zu entries (< %.0e), %.1fs (< %.0fs)", worst, checked,
                           kGradRelTolerance, secs, kGradSeconds);
  for (const auto& f : failed) detail += "; failed: " + f;
  report(1, failed.empty() && secs < kGradSeconds, detail);
}

// ---------------------------------------------------------------- 2
void kl_oracle() {
  constexpr std::size_t kDim = 8;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int pair = 0; pair < 20; ++pair) {
    const auto mq = testing::random_tensor({1, kDim}, rng, -1, 1), vq = testing::random_tensor({1, kDim}, rng, -1, 1);
    const auto mp = testing::random_tensor({1, kDim}, rng, -1, 1), vp = testing::random_tensor({1, kDim}, rng, -1, 1);
    const double closed =
        training::gaussian_kl({Node::constant(mq), Node::constant(vq)}, {Node::constant(mp), Node::constant(vp)})
            .value()
            .item();
    double acc = 0.0;
    for (std::size_t s = 0; s < kKlSamples; ++s) {
      double lr = 0.0;
      for (std::size_t i = 0; i < kDim; ++i) {
        const double z = mq[i] + std::exp(vq[i] / 2) * normal(rng);
        const double dq = z - mq[i], dp = z - mp[i];
        lr += -0.5 * (vq[i] + dq * dq / std::exp(vq[i])) + 0.5 * (vp[i] + dp * dp / std::exp(vp[i]));
      }
      acc += lr;
    }
    const double mc = acc / static_cast<double>(kKlSamples);
    worst = std::max(worst, std::abs(closed - mc) / std::abs(mc));
  }
  const double half = training::gaussian_kl({Node::constant(Tensor({1, 1}, std::vector<double>{1.0})),
                                             Node::constant(Tensor({1, 1}))},
                                            {Node::constant(Tensor({1, 1})), Node::constant(Tensor({1, 1}))})
                          .value()
                          .item();
  report(2, worst < kKlRelTolerance && half == 0.5,
         fmt("worst relative gap to Monte Carlo %.4f (< %.2f) over 20 pairs; KL(N(1,1)||N(0,1)) = %.17g", worst,
             kKlRelTolerance, half));
}

// ---------------------------------------------------------------- 3
void annealing() {
  const training::AnnealSchedule s;
  bool ok = s.weight(0) == 0.0 && s.weight(5000) == 1.0;
  for (std::size_t t = 1; t <= 6000; ++t) ok = ok && s.weight(t) >= s.weight(t - 1);
  report(3, ok, fmt("weight(0)=%g weight(5000)=%g, monotone over [0, 6000]", s.weight(0), s.weight(5000)));
}

// ---------------------------------------------------------------- 4
void metric_oracles() {
  std::size_t err_ok = 0;
  for (const auto& c : oracles::kErrCases) {
    std::vector<std::string> toks;
    std::istringstream in(c.generated);
    for (std::string t; in >> t;) toks.push_back(t);
    const auto e = metrics::slot_error_rate(toks, corpus::parse_sr(c.sr, c.domain));
    err_ok += e.err == static_cast<double>(c.p + c.q) / std::max(c.n, 1);
  }
  std::size_t bleu_ok = 0;
  for (const auto& bc : oracles::bleu_cases()) {
    std::vector<metrics::Tokens> cands;
    std::vector<std::vector<metrics::Tokens>> refs;
    for (const auto* c : bc.candidates) cands.push_back(corpus::tokenize(c));
    for (const auto& set : bc.references) {
      refs.emplace_back();
      for (const auto* r : set) refs.back().push_back(corpus::tokenize(r));
    }
    const auto stats = metrics::bleu_stats(cands, refs);
    bool ok = true;
    double log_sum = 0.0;
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto [m, t] = bc.precision[n - 1];
      const double p = t ? static_cast<double>(m) / t : 0.0;
      ok = ok && std::abs(metrics::modified_precision(stats, n) - p) <= kBleuTolerance;
      log_sum += std::log(std::max(p, metrics::kBleuEpsilon));
    }
    const double bp = bc.c >= bc.r ? 1.0 : std::exp(1.0 - static_cast<double>(bc.r) / bc.c);
    ok = ok && std::abs(metrics::bleu4(cands, refs) - bp * std::exp(log_sum / 4)) <= kBleuTolerance;
    bleu_ok += ok;
  }

  corpus::SynthConfig sc;
  sc.pairs = 100;
  const auto data = corpus::synth_corpus(sc);
  training::TrainConfig cfg;
  auto vocab = training::build_vocabulary(data);
  const auto& inv = corpus::Inventories::standard();
  nets::Model model(ModelKind::kScvae, training::model_dims(cfg, vocab, inv), 1);
  for (auto& p : model.params().all())
    if (p.name == "output.w" || p.name == "output.b") p.node.mutable_value().fill(0.0);
  const training::Checkpoint ckpt{std::move(model), vocab, inv, cfg, 0};
  const double ppl = evaluation::perplexity(ckpt, data);
  const double v = static_cast<double>(vocab.size());
  const bool ppl_ok = std::abs(ppl - v) <= kPplTolerance;
  report(4, err_ok == std::size(oracles::kErrCases) && bleu_ok == oracles::bleu_cases().size() && ppl_ok,
         fmt("ERR %zu/%zu cases, BLEU %zu/%zu cases (1e-9), uniform PPL %.9f vs |V| = %.0f", err_ok,
             std::size(oracles::kErrCases), bleu_ok, oracles::bleu_cases().size(), ppl, v));
}

// ---------------------------------------------------------------- 5
void overfit() {
  const auto start = Clock::now();
  corpus::SynthConfig sc;
  sc.domains = {corpus::Domain::kRestaurant, corpus::Domain::kHotel};
  sc.acts = {"inform", "confirm", "request", "recommend"};
  sc.slots = {"name", "area", "food", "pricerange", "near", "phone", "address", "postcode"};
  sc.pairs = 50;
  sc.seed = 5;
  corpus::DatasetSplit split;
  split.train = corpus::synth_corpus(sc);
  training::TrainConfig cfg;
  cfg.max_epochs = kOverfitMaxEpochs;
  cfg.batch_size = 10;
  const auto result = training::train(cfg, split);
  const auto& ckpt = result.checkpoint;
  const double acc = training::teacher_forced_accuracy(ckpt, split.train).value();
  const double ppl = evaluation::perplexity(ckpt, split.train);
  const auto eval = evaluation::evaluate(ckpt, split.train, {});
  double max_err = 0.0;
  for (const auto& o : eval.outputs) max_err = std::max(max_err, o.slot_error.err);
  const double secs = seconds_since(start);
  report(5, acc > kOverfitAccuracy && ppl < kOverfitPpl && max_err == 0.0 && secs < kOverfitSeconds,
         fmt("token accuracy %.4f (> %.2f), PPL %.4f (< %.1f), max top-ranked ERR %.3f over %zu SRs, %zu epochs, "
             "%.0fs (< %.0fs)",
             acc, kOverfitAccuracy, ppl, kOverfitPpl, max_err, eval.outputs.size(), result.epochs_run, secs,
             kOverfitSeconds));
}

// ---------------------------------------------------------------- 6..9
corpus::DatasetSplit desk_split() {
  corpus::SynthConfig sc;
  sc.pairs = kDeskPairs;
  return corpus::split_dataset(corpus::synth_corpus(sc), {}, 1);
}

training::TrainConfig desk_config(ModelKind kind, std::uint64_t seed) {
  training::TrainConfig c;
  c.kind = kind;
  c.seed = seed;
  c.max_epochs = kDeskEpochs;
  return c;
}

void relative_ordering(const corpus::DatasetSplit& split, std::optional<training::Checkpoint>& keep) {
  double sum_scvae = 0.0, sum_sclstm = 0.0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
    evaluation::EvalOptions opts;
    opts.seed = seed;
    double errs[2];
    for (auto kind : {ModelKind::kScvae, ModelKind::kSclstm}) {
      auto result = training::train(desk_config(kind, seed), split);
      const auto rep = evaluation::evaluate(result.checkpoint, split.test, opts);
      errs[kind == ModelKind::kScvae ? 0 : 1] = rep.overall.err_percent;
      if (kind == ModelKind::kScvae && seed == 1) keep.emplace(std::move(result.checkpoint));
    }
    sum_scvae += errs[0];
    sum_sclstm += errs[1];
    per_seed += fmt(" [%.2f vs %.2f]", errs[0], errs[1]);
    std::cerr << "info: seed " << seed << " ERR% scvae " << errs[0] << " sclstm " << errs[1] << '\n';
  }
  const double a = sum_scvae / kSeeds, b = sum_sclstm / kSeeds;
  report(6, a <= b, fmt("mean test ERR%% SCVAE %.3f <= SCLSTM %.3f over %zu seeds;", a, b, kSeeds) + per_seed);
}

void diversity(const training::Checkpoint& ckpt, const corpus::DatasetSplit& split) {
  std::set<std::string> seen;
  std::size_t diverse = 0, total = 0;
  for (const auto& e : split.test) {
    if (!seen.insert(std::string(corpus::domain_name(*e.sr.domain)) + "|" + corpus::format_sr(e.sr)).second) continue;
    generation::GenerationRequest req;
    req.sr = e.sr;
    req.num_candidates = 10;
    req.seed = 1000 + total;
    std::set<std::vector<std::string>> surfaces;
    for (const auto& c : generation::generate(ckpt, req))
      surfaces.insert(generation::relexicalise(c.tokens, e.sr).tokens);
    diverse += surfaces.size() >= 2;
    ++total;
  }
  const double share = total ? static_cast<double>(diverse) / total : 0.0;
  report(7, share >= kDiversityShare,
         fmt("%zu/%zu test SRs (%.1f%%) give >= 2 distinct surfaces from 10 candidates (>= %.0f%%)", diverse, total,
             100 * share, 100 * kDiversityShare));
}

void latent_structure(const training::Checkpoint& ckpt, const corpus::DatasetSplit& split) {
  const auto latents = viz::collect_latents(ckpt, split.test);
  const auto pca = viz::pca_project(latents.z, 2);
  const auto stats = viz::domain_cluster_stats(viz::project_latents(latents, pca));
  const Eigen::MatrixXd gram = pca.components.transpose() * pca.components;
  const double ortho = (gram - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff();
  report(8, stats.inter_centroid > stats.intra_spread && ortho <= kOrthonormalTolerance,
         fmt("inter-domain centroid distance %.4f > intra-domain spread %.4f; |C'C - I| = %.1e (<= 1e-8)",
             stats.inter_centroid, stats.intra_spread, ortho));
}

void persistence(const training::Checkpoint& ckpt, const corpus::DatasetSplit& split) {
  const auto path = std::filesystem::temp_directory_path() / "scvae_acceptance_ckpt.json";
  training::save_checkpoint(path, ckpt);
  const auto loaded = training::load_checkpoint(path);
  std::filesystem::remove(path);
  const bool loss_same = training::evaluate_loss(ckpt, split.valid, 77) == training::evaluate_loss(loaded, split.valid, 77);
  bool gen_same = true;
  for (std::size_t i = 0; i < 20 && i < split.valid.size(); ++i) {
    generation::GenerationRequest req;
    req.sr = split.valid[i].sr;
    req.seed = 5 + i;
    const auto a = generation::generate(ckpt, req);
    const auto b = generation::generate(loaded, req);
    for (std::size_t k = 0; k < a.size(); ++k)
      gen_same = gen_same && a[k].tokens == b[k].tokens && a[k].log_likelihood == b[k].log_likelihood &&
                 a[k].z == b[k].z && a[k].index == b[k].index;
  }
  report(9, loss_same && gen_same,
         fmt("validation LossBreakdown %s, generation outputs %s after save/load", loss_same ? "identical" : "differs",
             gen_same ? "identical" : "differ"));
}

// ---------------------------------------------------------------- 10
void experiment_harness(const corpus::DatasetSplit& split) {
  experiments::Plan plan;
  plan.base.max_epochs = 1;
  plan.base.latent = 16;
  plan.base.embedding = 8;
  plan.base.encoder_hidden = 8;
  plan.base.prior_hidden = 16;
  plan.eval.num_candidates = 2;
  plan.eval.max_length = 30;

  const auto limited = experiments::run_limited_data(split, plan);
  std::ostringstream lcsv;
  experiments::write_limited_data_csv(lcsv, limited);
  std::size_t lines = 0;
  for (char c : lcsv.str()) lines += c == '\n';
  bool limited_ok = limited.size() == 10 && lines == 11 &&
                    lcsv.str().starts_with("fraction,model,train_examples,err_percent,bleu,ppl\n");
  for (std::size_t i = 1; i < limited.size(); ++i)
    if (limited[i].model == limited[i - 1].model) limited_ok = false;  // models interleave per fraction

  const auto targets = corpus::all_domains();
  const auto kshot = experiments::run_k_shot(split, plan, targets);
  std::ostringstream kcsv;
  experiments::write_k_shot_csv(kcsv, kshot);
  bool kshot_ok = kshot.size() == 2 * targets.size();
  std::size_t largest = 0;
  corpus::Domain largest_domain{};
  for (const auto& [d, n] : split.domain_counts())
    if (n[0] > largest) largest = n[0], largest_domain = d;
  std::string caps;
  for (const auto& r : kshot) {
    const std::size_t expected_cap = r.target == largest_domain ? 600 : 300;
    std::size_t available = 0;
    for (const auto& e : split.train) available += *e.sr.domain == r.target;
    kshot_ok = kshot_ok && r.cap == expected_cap && r.target_examples == std::min(expected_cap, available);
    if (r.model == "scvae") caps += fmt(" %s:%zu/%zu", std::string(corpus::domain_name(r.target)).c_str(),
                                        r.target_examples, r.cap);
  }
  std::size_t klines = 0;
  for (char c : kcsv.str()) klines += c == '\n';
  kshot_ok = kshot_ok && klines == 7 && kcsv.str().starts_with("metric,method,restaurant,hotel,television,laptop\n");
  report(10, limited_ok && kshot_ok,
         fmt("limited-data CSV %zu rows, k-shot CSV %zu rows; target examples/cap", limited.size(), kshot.size()) +
             caps);
}

}  // namespace
}  // namespace scvae

// With no arguments every criterion runs; otherwise only the listed ids.
int main(int argc, char** argv) {
  using namespace scvae;
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  const auto want = [&](int id) { return wanted.empty() || wanted.contains(id); };
  const auto start = Clock::now();
  int ran = 0;
  const auto guard = [&](int id, auto&& fn) {
    if (!want(id)) return;
    ++ran;
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, false, std::string("threw: ") + e.what());
    }
  };
  guard(1, gradient_correctness);
  guard(2, kl_oracle);
  guard(3, annealing);
  guard(4, metric_oracles);
  guard(5, overfit);
  const auto split = desk_split();
  std::optional<training::Checkpoint> desk;
  guard(6, [&] { relative_ordering(split, desk); });
  if (!desk && (want(7) || want(8) || want(9)))
    desk.emplace(training::train(desk_config(ModelKind::kScvae, 1), split).checkpoint);
  guard(7, [&] { diversity(*desk, split); });
  guard(8, [&] { latent_structure(*desk, split); });
  guard(9, [&] { persistence(*desk, split); });
  guard(10, [&] { experiment_harness(split); });
  std::cout << "acceptance: " << (ran - failures) << "/" << ran << " passed in " << seconds_since(start) << "s"
            << std::endl;
  return std::min(failures, 100);
}
