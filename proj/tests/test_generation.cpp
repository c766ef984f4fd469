// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <set>

#include "gradcheck.hpp"
#include "scvae/generation.hpp"
#include "scvae/synth.hpp"

namespace scvae {
namespace {

using generation::Candidate;
using generation::DecodeMode;
using generation::GenerationRequest;
using nets::ModelKind;

struct Setup {
  std::vector<corpus::Example> data;
  training::Checkpoint ckpt;
};

Setup make_setup(ModelKind kind, double init = 0.3) {
  corpus::SynthConfig sc;
  sc.domains = {corpus::Domain::kRestaurant, corpus::Domain::kHotel};
  sc.pairs = 60;
  auto data = corpus::synth_corpus(sc);
  training::TrainConfig cfg;
  cfg.kind = kind;
  cfg.latent = 10;
  cfg.embedding = 6;
  cfg.encoder_hidden = 6;
  cfg.prior_hidden = 10;
  auto vocab = training::build_vocabulary(data);
  const auto& inv = corpus::Inventories::standard();
  nets::Model model(kind, training::model_dims(cfg, vocab, inv), 5);
  std::mt19937_64 rng(5);
  for (auto& p : model.params().all())
    p.node.mutable_value() = testing::random_tensor(p.node.shape(), rng, -init, init);
  return {std::move(data), training::Checkpoint{std::move(model), std::move(vocab), inv, cfg, 0}};
}

GenerationRequest request_for(const corpus::Example& e, std::uint64_t seed = 3) {
  GenerationRequest r;
  r.sr = e.sr;
  r.seed = seed;
  r.max_length = 20;
  return r;
}

// Log-likelihood of `tokens` followed by eos (unless truncated), with sos and
// pad excluded from the normaliser.
double replay_log_likelihood(const training::Checkpoint& ckpt, const Candidate& c, const ad::Tensor& da) {
  ad::NoGradGuard guard;
  std::optional<ad::Node> z;
  if (!c.z.empty()) z = ad::Node::constant(ad::Tensor({1, c.z.size()}, c.z));
  auto state = ckpt.model.initial_state(z ? &*z : nullptr, da);
  std::vector<int> ids;
  for (const auto& t : c.tokens) ids.push_back(ckpt.vocabulary.id(t));
  if (!c.truncated) ids.push_back(corpus::Vocabulary::kEos);
  int input = corpus::Vocabulary::kSos;
  double ll = 0.0;
  for (int target : ids) {
    const auto logits = ckpt.model.decode_step(state, std::span<const int>(&input, 1)).value();
    double mx = -1e300;
    for (std::size_t v = 0; v < logits.size(); ++v)
      if (v != corpus::Vocabulary::kSos && v != corpus::Vocabulary::kPad) mx = std::max(mx, logits[v]);
    double s = 0.0;
    for (std::size_t v = 0; v < logits.size(); ++v)
      if (v != corpus::Vocabulary::kSos && v != corpus::Vocabulary::kPad) s += std::exp(logits[v] - mx);
    ll += logits[static_cast<std::size_t>(target)] - mx - std::log(s);
    input = target;
  }
  return ll;
}

TEST(Generate, ReturnsRequestedCountAsRankedPermutation) {
  for (auto kind : {ModelKind::kScvae, ModelKind::kSclstm}) {
    auto s = make_setup(kind);
    const auto out = generation::generate(s.ckpt, request_for(s.data[0]));
    ASSERT_EQ(out.size(), 10u);
    std::set<std::size_t> idx;
    for (const auto& c : out) idx.insert(c.index);
    EXPECT_EQ(idx.size(), 10u);
    EXPECT_EQ(*idx.rbegin(), 9u);
    for (std::size_t i = 1; i < out.size(); ++i) {
      const auto &a = out[i - 1], &b = out[i];
      ASSERT_LE(a.slot_error.err, b.slot_error.err);
      if (a.slot_error.err == b.slot_error.err) {
        ASSERT_GE(a.normalized_log_likelihood(), b.normalized_log_likelihood());
        if (a.normalized_log_likelihood() == b.normalized_log_likelihood()) ASSERT_LT(a.index, b.index);
      }
    }
  }
}

TEST(Generate, DeterministicUnderSeed) {
  for (auto kind : {ModelKind::kScvae, ModelKind::kSclstm}) {
    auto s = make_setup(kind);
    auto req = request_for(s.data[1]);
    req.num_candidates = 1;
    const auto a = generation::generate(s.ckpt, req);
    const auto b = generation::generate(s.ckpt, req);
    ASSERT_EQ(a.size(), 1u);
    EXPECT_EQ(a[0].tokens, b[0].tokens);
    EXPECT_EQ(a[0].log_likelihood, b[0].log_likelihood);
    EXPECT_EQ(a[0].z, b[0].z);
  }
}

TEST(Generate, CandidateDependsOnlyOnSeedAndIndex) {
  for (auto kind : {ModelKind::kScvae, ModelKind::kSclstm}) {
    auto s = make_setup(kind);
    auto req = request_for(s.data[2]);
    auto small = req;
    small.num_candidates = 3;
    const auto full = kind == ModelKind::kScvae ? generation::generate_scvae(s.ckpt, req)
                                                : generation::generate_sclstm(s.ckpt, req);
    const auto part = kind == ModelKind::kScvae ? generation::generate_scvae(s.ckpt, small)
                                                : generation::generate_sclstm(s.ckpt, small);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_EQ(part[i].index, i);
      EXPECT_EQ(part[i].tokens, full[i].tokens);
      EXPECT_NEAR(part[i].log_likelihood, full[i].log_likelihood, 1e-9);
    }
  }
}

TEST(Generate, EndsWithEosUnlessTruncated) {
  for (auto kind : {ModelKind::kScvae, ModelKind::kSclstm}) {
    auto s = make_setup(kind, 0.6);
    for (std::size_t max_len : {1u, 3u, 20u}) {
      auto req = request_for(s.data[0]);
      req.max_length = max_len;
      for (const auto& c : generation::generate(s.ckpt, req)) {
        if (c.truncated) {
          EXPECT_EQ(c.tokens.size(), max_len);
        } else {
          EXPECT_LT(c.tokens.size(), max_len);
        }
        for (const auto& t : c.tokens) {
          EXPECT_NE(t, "<sos>");
          EXPECT_NE(t, "<pad>");
          EXPECT_NE(t, "<eos>");
        }
      }
    }
  }
}

TEST(Generate, LogLikelihoodMatchesReplay) {
  for (auto kind : {ModelKind::kScvae, ModelKind::kSclstm}) {
    auto s = make_setup(kind);
    const auto req = request_for(s.data[4]);
    const auto cond = corpus::encode_condition(req.sr, s.ckpt.inventories);
    const auto da = nets::make_condition_batch(cond, 1).da;
    for (const auto& c : generation::generate(s.ckpt, req)) {
      EXPECT_LE(c.log_likelihood, 0.0);
      EXPECT_NEAR(c.log_likelihood, replay_log_likelihood(s.ckpt, c, da), 1e-9);
      EXPECT_EQ(c.slot_error, metrics::slot_error_rate(c.tokens, req.sr));
    }
  }
}

TEST(Generate, ScvaeLatentsComeFromThePrior) {
  auto s = make_setup(ModelKind::kScvae);
  const auto req = request_for(s.data[0]);
  const auto out = generation::generate_scvae(s.ckpt, req);
  const auto cond = corpus::encode_condition(req.sr, s.ckpt.inventories);
  ad::NoGradGuard guard;
  const auto prior = s.ckpt.model.prior(ad::Node::constant(nets::make_condition_batch(cond, 1).condition));
  for (const auto& c : out) {
    auto rng = generation::candidate_rng(req.seed, c.index);
    std::normal_distribution<double> normal;
    ASSERT_EQ(c.z.size(), 10u);
    for (std::size_t k = 0; k < c.z.size(); ++k) {
      const double expected =
          prior.mean.value()[k] + std::exp(prior.log_variance.value()[k] / 2) * normal(rng);
      EXPECT_NEAR(c.z[k], expected, 1e-12);
    }
  }
}

TEST(Generate, ScvaeGreedyDiversityComesFromLatent) {
  // With the prior variance pinned near zero, every z is the prior mean and
  // greedy decoding collapses to one sentence.
  auto s = make_setup(ModelKind::kScvae);
  auto& params = s.ckpt.model.params();
  for (auto& p : params.all()) {
    if (p.name == "prior.b2") {
      auto& v = p.node.mutable_value();
      for (std::size_t i = v.size() / 2; i < v.size(); ++i) v[i] = -1e6;
    }
  }
  const auto out = generation::generate(s.ckpt, request_for(s.data[0]));
  for (const auto& c : out) EXPECT_EQ(c.tokens, out[0].tokens);
}

TEST(Generate, SclstmAlwaysSamples) {
  auto s = make_setup(ModelKind::kSclstm, 0.2);
  auto req = request_for(s.data[0]);
  req.mode = DecodeMode::kGreedy;
  std::set<std::vector<std::string>> distinct;
  for (const auto& c : generation::generate(s.ckpt, req)) distinct.insert(c.tokens);
  EXPECT_GT(distinct.size(), 1u);
}

TEST(Generate, RejectsBadRequests) {
  auto scvae = make_setup(ModelKind::kScvae);
  auto sclstm = make_setup(ModelKind::kSclstm);
  auto req = request_for(scvae.data[0]);
  EXPECT_THROW(generation::generate_sclstm(scvae.ckpt, req), std::invalid_argument);
  EXPECT_THROW(generation::generate_scvae(sclstm.ckpt, req), std::invalid_argument);
  auto bad = req;
  bad.num_candidates = 0;
  EXPECT_THROW(generation::generate(scvae.ckpt, bad), std::invalid_argument);
  bad = req;
  bad.max_length = 0;
  EXPECT_THROW(generation::generate(scvae.ckpt, bad), std::invalid_argument);
  bad = req;
  bad.temperature = 0.0;
  EXPECT_THROW(generation::generate(sclstm.ckpt, bad), std::invalid_argument);
}

Candidate make_candidate(std::size_t index, double err, double ll, std::size_t len) {
  Candidate c;
  c.index = index;
  c.slot_error.err = err;
  c.log_likelihood = ll;
  c.tokens.assign(len, "w");
  return c;
}

TEST(Rank, ErrThenNormalisedLikelihoodThenIndex) {
  std::vector<Candidate> pool{
      make_candidate(0, 0.5, -1.0, 1),   // nll/tok 0.5
      make_candidate(1, 0.0, -9.0, 2),   // 3.0
      make_candidate(2, 0.0, -4.0, 3),   // 1.0
      make_candidate(3, 0.0, -12.0, 5),  // 2.0
      make_candidate(4, 0.0, -4.0, 3),   // tie with 2
      make_candidate(5, 1.0, -0.1, 1),
  };
  generation::rank_candidates(pool);
  std::vector<std::size_t> order;
  for (const auto& c : pool) order.push_back(c.index);
  EXPECT_EQ(order, (std::vector<std::size_t>{2, 4, 3, 1, 0, 5}));
}

TEST(Rank, TruncatedCandidatesDoNotCountEos) {
  auto c = make_candidate(0, 0.0, -6.0, 3);
  EXPECT_DOUBLE_EQ(c.normalized_log_likelihood(), -1.5);
  c.truncated = true;
  EXPECT_DOUBLE_EQ(c.normalized_log_likelihood(), -2.0);
}

TEST(Relexicalise, SubstitutesValuesAndFlagsMissing) {
  const auto sr = corpus::parse_sr("inform(name='La Margherita';area='city centre';kidsallowed=no)",
                                   corpus::Domain::kRestaurant);
  const auto s = generation::relexicalise({"SLOT_NAME", "is", "in", "the", "SLOT_AREA", "."}, sr);
  EXPECT_EQ(s.tokens, (std::vector<std::string>{"la", "margherita", "is", "in", "the", "city", "centre", "."}));
  EXPECT_TRUE(s.unresolved.empty());

  const auto m = generation::relexicalise({"SLOT_NAME", "near", "SLOT_NEAR"}, sr);
  EXPECT_EQ(m.tokens, (std::vector<std::string>{"la", "margherita", "near", "SLOT_NEAR"}));
  EXPECT_EQ(m.unresolved, (std::vector<std::string>{"near"}));

  const auto k = generation::relexicalise({"SLOT_KIDSALLOWED"}, sr);
  EXPECT_EQ(k.tokens, (std::vector<std::string>{"no"}));

  const auto req = corpus::parse_sr("request(area)", corpus::Domain::kRestaurant);
  const auto r = generation::relexicalise({"which", "SLOT_AREA", "?"}, req);
  EXPECT_EQ(r.unresolved, (std::vector<std::string>{"area"}));
}

TEST(Relexicalise, DelexicaliseRoundTrip) {
  corpus::SynthConfig sc;
  sc.pairs = 200;
  for (const auto& e : corpus::synth_corpus(sc)) {
    const auto s = generation::relexicalise(e.delex.tokens, e.sr);
    EXPECT_EQ(s.tokens, corpus::tokenize(e.reference)) << e.reference;
    EXPECT_TRUE(s.unresolved.empty());
  }
}

}  // namespace
}  // namespace scvae
