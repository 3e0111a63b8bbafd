#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>

#include "ppo_fixtures.hpp"
#include "pidrl/agent.hpp"
#include "pidrl/snapshot.hpp"

using namespace pidrl;

namespace {

Eigen::VectorXd random_vector(int n, Rng& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int k = 0; k < n; ++k) v[k] = d(rng);
  return v;
}

Environment tiny_env(std::uint64_t seed) {
  Environment env;
  FleetSpec fs;
  fs.n_train = 3;
  fs.n_test = 1;
  fs.seed = seed;
  env.train_fleet = sample_fleet(fs).train;
  env.seed = seed;
  env.episode_ms = 30.0;
  return env;
}

}  // namespace

TEST(Mlp, ZeroWeightsGiveZeroOutput) {
  const Mlp net({4, 7, 7, 3});
  Rng rng(1);
  const Eigen::VectorXd out = net.forward(random_vector(4, rng));
  ASSERT_EQ(out.size(), 3);
  for (Eigen::Index k = 0; k < 3; ++k) EXPECT_EQ(out[k], 0.0);
}

TEST(Mlp, SingleLinearLayerIdentity) {
  Mlp net({5, 5});
  net.weight(0) = Eigen::MatrixXd::Identity(5, 5);
  Rng rng(2);
  const Eigen::VectorXd x = random_vector(5, rng);
  EXPECT_EQ(net.forward(x), x);
}

TEST(Mlp, RejectsDimensionMismatch) {
  const Mlp net({4, 3, 2});
  EXPECT_THROW(net.forward(Eigen::VectorXd::Zero(3)), InvalidArgument);
}

TEST(Mlp, ParamsRoundTripAndLayout) {
  Rng rng(3);
  const Mlp net = Mlp::glorot({4, 6, 2}, rng);
  EXPECT_EQ(net.num_params(), 4u * 6 + 6 + 6 * 2 + 2);
  const auto p = net.params();
  // Row-major weights first: element (r, c) of layer 0 sits at r * in + c.
  EXPECT_EQ(p[1 * 4 + 2], net.weight(0)(1, 2));
  Mlp copy({4, 6, 2});
  copy.set_params(p);
  EXPECT_EQ(copy.params(), p);
}

TEST(Mlp, BackwardMatchesFiniteDifferences) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Mlp net = Mlp::glorot({4, 8, 8, 6}, rng, 1.0);
    const Eigen::VectorXd x = random_vector(4, rng);
    const Eigen::VectorXd c = random_vector(6, rng);
    EXPECT_LT(fixtures::mlp_gradient_error(net, x, c), 1e-4);
  }
}

TEST(GaussianPolicy, NearDeterministicAtMinimumStd) {
  Rng rng(5);
  ActorCritic ac = ActorCritic::init(4, 6, 8, rng, kLogStdMin);
  const NormalizedState s{1.0, 0.5, -0.3, 2.0};
  const Eigen::VectorXd mu = ac.policy.mean(to_vector(s));
  // Single draws have std exp(-5) ~ 0.0067, so 1e-2 holds for the 100-draw
  // average; each draw is held to 6 sigma.
  const double six_sigma = 6.0 * std::exp(kLogStdMin);
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(6);
  for (int k = 0; k < 100; ++k) {
    const ActionDraw d = sample_and_logprob(ac.policy, s, rng);
    for (int j = 0; j < 6; ++j) {
      EXPECT_NEAR(d.raw[static_cast<std::size_t>(j)], mu[j], six_sigma);
      avg[j] += d.raw[static_cast<std::size_t>(j)] / 100.0;
    }
  }
  for (int j = 0; j < 6; ++j) EXPECT_NEAR(avg[j], mu[j], 1e-2);
}

TEST(GaussianPolicy, LogProbAtMean) {
  Rng rng(6);
  ActorCritic ac = ActorCritic::init(4, 6, 8, rng, -0.7);
  ac.policy.log_std[2] = 0.3;
  const NormalizedState s{0.1, 0.2, 0.3, 0.4};
  const Eigen::VectorXd mu = ac.policy.mean(to_vector(s));
  double expected = 0.0;
  for (Eigen::Index k = 0; k < 6; ++k)
    expected += -0.5 * (2 * ac.policy.log_std[k] + std::log(2 * std::numbers::pi));
  EXPECT_NEAR(ac.policy.log_prob(to_vector(s), mu), expected, 1e-12);
}

TEST(GaussianPolicy, SampleMomentsMatch) {
  Rng rng(7);
  ActorCritic ac = ActorCritic::init(4, 6, 8, rng, -1.0);
  for (Eigen::Index k = 0; k < 6; ++k) ac.policy.log_std[k] = -1.0 + 0.2 * static_cast<double>(k);
  const NormalizedState s{0.5, 1.0, 0.5, 1.0};
  const Eigen::VectorXd mu = ac.policy.mean(to_vector(s));
  const int n = 100000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(6), sq = Eigen::VectorXd::Zero(6);
  for (int i = 0; i < n; ++i) {
    const ActionDraw d = sample_and_logprob(ac.policy, s, rng);
    const Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(d.raw.data(), 6);
    sum += a;
    sq += (a - mu).cwiseProduct(a - mu);
  }
  for (Eigen::Index k = 0; k < 6; ++k) {
    const double sd = std::exp(ac.policy.log_std[k]);
    const double var = sd * sd;
    EXPECT_NEAR(sum[k] / n, mu[k], 3 * sd / std::sqrt(n));
    // Var of the sample variance of a normal is 2 sigma^4 / n.
    EXPECT_NEAR(sq[k] / n, var, 3 * var * std::sqrt(2.0 / n));
  }
}

TEST(Ppo, StoredLogProbsReproduced) {
  Rng rng(8);
  const ActorCritic ac = ActorCritic::init(4, 6, 16, rng, -1.5);
  std::vector<Experience> batch;
  for (int i = 0; i < 64; ++i) {
    NormalizedState s;
    for (double& v : s) v = std::uniform_real_distribution<double>(0, 10)(rng);
    const ActionDraw d = sample_and_logprob(ac.policy, s, rng);
    Experience e;
    e.state = to_vector(s);
    e.action = Eigen::Map<const Eigen::VectorXd>(d.raw.data(), 6);
    e.log_prob = d.log_prob;
    e.reward = -1.0;
    batch.push_back(e);
    EXPECT_NEAR(ac.policy.log_prob(e.state, e.action), d.log_prob, 1e-12);
  }
  for (double r : probability_ratios(ac, batch)) EXPECT_EQ(r, 1.0);
}

TEST(Ppo, ClipInertInsideTrustRegion) {
  Rng rng(9);
  PpoConfig cfg;
  cfg.clip_epsilon = 0.9;  // wide enough that every ratio here is inside
  for (int trial = 0; trial < 10; ++trial) {
    const fixtures::LossCase lc = fixtures::random_loss_case(rng, 8, cfg.clip_epsilon);
    const auto ratios = probability_ratios(lc.ac, lc.batch);
    bool inside = true;
    double unclipped = 0.0;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
      inside = inside && std::abs(ratios[i] - 1.0) <= cfg.clip_epsilon;
      unclipped -= ratios[i] * lc.advantages[i] / static_cast<double>(ratios.size());
    }
    if (!inside) continue;
    const LossParts parts = ppo_loss(lc.ac, lc.batch, lc.advantages, cfg);
    EXPECT_NEAR(parts.policy, unclipped, 1e-12);
    EXPECT_EQ(parts.clip_fraction, 0.0);
  }
}

TEST(Ppo, AdvantagesNormalised) {
  Rng rng(10);
  const ActorCritic ac = ActorCritic::init(4, 6, 16, rng);
  std::vector<Experience> batch(50);
  for (auto& e : batch) {
    e.state = random_vector(4, rng);
    e.action = random_vector(6, rng);
    e.reward = -std::exp(random_vector(1, rng)[0]);
  }
  const auto adv = normalized_advantages(ac, batch);
  double mean = 0.0, var = 0.0;
  for (double a : adv) mean += a / 50.0;
  for (double a : adv) var += (a - mean) * (a - mean) / 50.0;
  EXPECT_LT(std::abs(mean), 1e-10);
  EXPECT_NEAR(std::sqrt(var), 1.0, 1e-6);
}

TEST(Ppo, ZeroAdvantagesMoveOnlyThroughEntropy) {
  Rng rng(11);
  PpoConfig cfg;
  const fixtures::LossCase lc = fixtures::random_loss_case(rng, 6, cfg.clip_epsilon);
  const std::vector<double> zero(lc.batch.size(), 0.0);
  std::vector<double> grad;
  ppo_loss(lc.ac, lc.batch, zero, cfg, &grad);
  const std::size_t np = lc.ac.policy.mean_net.num_params();
  for (std::size_t k = 0; k < np; ++k) EXPECT_EQ(grad[k], 0.0);
  for (std::size_t k = np; k < np + 6; ++k) EXPECT_DOUBLE_EQ(grad[k], -cfg.entropy_coeff);
}

TEST(Ppo, LossGradientMatchesFiniteDifferences) {
  Rng rng(12);
  PpoConfig cfg;
  for (int trial = 0; trial < 10; ++trial) {
    const fixtures::LossCase lc = fixtures::random_loss_case(rng, trial % 2 ? 2 : 5, 0.2);
    EXPECT_LT(fixtures::ppo_gradient_error(lc, cfg), 1e-4) << "trial " << trial;
  }
}

TEST(Ppo, NonFiniteLossRestoresParameters) {
  Rng rng(13);
  ActorCritic ac = ActorCritic::init(4, 6, 8, rng);
  const ActorCritic before = ac;
  std::vector<Experience> batch(4);
  for (auto& e : batch) {
    e.state = random_vector(4, rng);
    e.action = random_vector(6, rng);
    e.reward = std::numeric_limits<double>::quiet_NaN();
  }
  PpoConfig cfg;
  Adam opt(ac.num_params(), cfg.learning_rate);
  const UpdateDiagnostics d = ppo_update(batch, ac, opt, cfg, rng);
  EXPECT_TRUE(d.aborted);
  EXPECT_EQ(ac.params(), before.params());
}

TEST(Train, OneBatchBudgetGivesOneUpdate) {
  const fixtures::LinearBandit bandit(1);
  PpoConfig cfg;
  cfg.max_episodes = cfg.batch_size;
  TrainOptions opt;
  opt.seed = 1;
  const TrainResult r = train(bandit.episodes(), cfg, opt);
  ASSERT_EQ(r.log.size(), 1u);
  EXPECT_NE(r.final.params(), r.best.params());
}

TEST(Train, DeterministicForSeed) {
  const fixtures::LinearBandit bandit(2);
  PpoConfig cfg;
  cfg.max_episodes = 640;
  TrainOptions opt;
  opt.seed = 5;
  const TrainResult a = train(bandit.episodes(), cfg, opt);
  cfg.workers = 4;
  const TrainResult b = train(bandit.episodes(), cfg, opt);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t k = 0; k < a.log.size(); ++k) EXPECT_EQ(a.log[k].mean_reward, b.log[k].mean_reward);
  EXPECT_EQ(a.final.params(), b.final.params());
  EXPECT_EQ(a.best.params(), b.best.params());
}

TEST(Train, LearnsLinearBandit) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const fixtures::LinearBandit bandit(seed);
    PpoConfig cfg;
    cfg.max_episodes = 200 * cfg.batch_size;
    TrainOptions opt;
    opt.seed = seed;
    const TrainResult r = train(bandit.episodes(), cfg, opt);
    const long first = fixtures::first_batch_above(r, -0.05);
    EXPECT_GE(first, 0) << "seed " << seed;
    EXPECT_LT(first, 200);
  }
}

TEST(TrainAgent, RecordsEveryEpisodeAndIsReproducible) {
  const Environment env = tiny_env(3);
  PpoConfig cfg;
  cfg.max_episodes = 128;
  const AgentTraining a = train_agent(env, cfg);
  const AgentTraining b = train_agent(env, cfg);
  ASSERT_EQ(a.transitions.size(), 128u);
  for (std::size_t k = 0; k < a.transitions.size(); ++k) {
    EXPECT_EQ(a.transitions[k].episode, static_cast<std::int64_t>(k));
    EXPECT_EQ(a.transitions[k].reward, b.transitions[k].reward);
  }
  EXPECT_EQ(a.result.best.params(), b.result.best.params());
}

TEST(Snapshot, ZeroWeightsGiveBoundMidpoints) {
  PolicySnapshot snap;
  Rng rng(14);
  snap.networks = ActorCritic::init(4, 6, 8, rng);
  auto p = snap.networks.params();
  std::fill(p.begin(), p.end(), 0.0);
  snap.networks.set_params(p);
  for (const RawState& raw : {RawState{40, 0.8, 60, 1.2}, RawState{55, 1.0, 45, 0.9}}) {
    const PidGains g = infer(snap, raw);
    EXPECT_DOUBLE_EQ(g.x.p, 3.0);
    EXPECT_DOUBLE_EQ(g.y.i, 750.0);
    EXPECT_DOUBLE_EQ(g.y.d, 0.0075);
  }
}

TEST(Snapshot, RoundTripIsBitExact) {
  Rng rng(15);
  PolicySnapshot snap;
  snap.networks = ActorCritic::init(4, 6, 16, rng, -1.234567890123);
  auto p = snap.networks.params();
  std::normal_distribution<double> n(0.0, 1.0);
  for (double& v : p) v = n(rng) * std::pow(10.0, std::uniform_int_distribution<int>(-12, 3)(rng));
  snap.networks.set_params(p);
  snap.scales = {10.0, 1.0};
  snap.bounds.i = {1.0 / 3.0, 1234.5};
  snap.config_fingerprint = "abc";
  const PolicySnapshot back = snapshot_from_json_text(to_json_text(snap));
  EXPECT_EQ(back.networks.params(), snap.networks.params());
  EXPECT_EQ(back.bounds, snap.bounds);
  EXPECT_EQ(back.scales, snap.scales);
  EXPECT_EQ(back.config_fingerprint, "abc");
  EXPECT_EQ(to_json_text(back), to_json_text(snap));
  const RawState raw{47.3, 0.93, 52.1, 1.07};
  EXPECT_EQ(infer(back, raw), infer(snap, raw));
  EXPECT_EQ(infer(snap, raw), infer(snap, raw));
}

TEST(Snapshot, RejectsUnknownVersionAndBadState) {
  Rng rng(16);
  PolicySnapshot snap;
  snap.networks = ActorCritic::init(4, 6, 4, rng);
  std::string text = to_json_text(snap);
  const auto at = text.find("\"format_version\": 1");
  ASSERT_NE(at, std::string::npos);
  text.replace(at, 19, "\"format_version\": 99");
  EXPECT_THROW(snapshot_from_json_text(text), InvalidArgument);
  EXPECT_THROW(infer(snap, RawState{-1.0, 1.0, 50.0, 1.0}), InvalidArgument);
}

TEST(Snapshot, InferIsFast) {
  Rng rng(17);
  PolicySnapshot snap;
  snap.networks = ActorCritic::init(4, 6, 16, rng);
  const RawState raw{50.0, 1.0, 50.0, 1.0};
  const auto t0 = std::chrono::steady_clock::now();
  PidGains g;
  for (int k = 0; k < 1000; ++k) g = infer(snap, raw);
  const double per_call_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() /
      1000.0;
  EXPECT_LT(per_call_ms, 10.0);
  EXPECT_TRUE(g.non_negative());
}
