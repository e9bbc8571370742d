#include <gtest/gtest.h>

#include "bayesw/dgp.hpp"
#include "bayesw/metrics.hpp"
#include "bayesw/sampler.hpp"
#include "toy.hpp"

using namespace bayesw;

namespace {

SamplerConfig oracle_config() {
  SamplerConfig c;
  c.identification_check = false;
  return c;
}

GibbsSampler make_sampler(const toy::Instance& inst, SamplerConfig config = oracle_config()) {
  return GibbsSampler(inst.data, inst.spec, inst.priors, config, inst.state);
}

}  // namespace

struct ConditionalCase {
  int lag;
  bool symmetric;
  OmegaPriorFamily family;
  SymmetricPriorMode mode;
  bool standardize;
};

class OmegaConditional : public ::testing::TestWithParam<ConditionalCase> {};

TEST_P(OmegaConditional, MatchesBruteForce) {
  const auto c = GetParam();
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const auto inst = toy::random_instance(seed, 4, 3, c.lag, c.symmetric, c.family, c.mode, c.standardize);
    const auto sampler = make_sampler(inst);
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 4; ++j) {
        if (i == j || (c.symmetric && j < i)) continue;
        const auto proposal = sampler.evaluate_omega_entry(i, j);
        EXPECT_NEAR(proposal.p_include, toy::brute_force_inclusion(inst, i, j), 1e-9)
            << "seed " << seed << " entry (" << i << "," << j << ")";
      }
  }
}

INSTANTIATE_TEST_SUITE_P(
    AllPaths, OmegaConditional,
    ::testing::Values(ConditionalCase{0, false, OmegaPriorFamily::kFixed, SymmetricPriorMode::kRowOnly, true},
                      ConditionalCase{0, false, OmegaPriorFamily::kSparsity, SymmetricPriorMode::kRowOnly, true},
                      ConditionalCase{0, true, OmegaPriorFamily::kFixed, SymmetricPriorMode::kRowOnly, true},
                      ConditionalCase{0, true, OmegaPriorFamily::kSparsity, SymmetricPriorMode::kRowOnly, true},
                      ConditionalCase{0, true, OmegaPriorFamily::kSparsity, SymmetricPriorMode::kBothRows, true},
                      ConditionalCase{1, false, OmegaPriorFamily::kFixed, SymmetricPriorMode::kRowOnly, true},
                      ConditionalCase{1, false, OmegaPriorFamily::kSparsity, SymmetricPriorMode::kRowOnly, true},
                      ConditionalCase{1, true, OmegaPriorFamily::kFixed, SymmetricPriorMode::kRowOnly, true},
                      ConditionalCase{1, true, OmegaPriorFamily::kSparsity, SymmetricPriorMode::kBothRows, true},
                      ConditionalCase{0, false, OmegaPriorFamily::kSparsity, SymmetricPriorMode::kRowOnly, false},
                      ConditionalCase{0, true, OmegaPriorFamily::kFixed, SymmetricPriorMode::kRowOnly, false}));

TEST(OmegaConditional, StaysExactAfterAppliedFlips) {
  // Incremental caches must agree with brute force after many accepted flips.
  for (int lag : {0, 2}) {
    auto inst = toy::random_instance(77, 4, 3, lag, false, OmegaPriorFamily::kSparsity);
    GibbsSampler sampler = make_sampler(inst);
    Rng rng(5);
    for (int sweep = 0; sweep < 30; ++sweep) sampler.sweep_omega(rng);
    inst.state.omega = sampler.state().omega;
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 4; ++j) {
        if (i == j) continue;
        EXPECT_NEAR(sampler.evaluate_omega_entry(i, j).p_include, toy::brute_force_inclusion(inst, i, j), 1e-9);
      }
  }
}

TEST(BetaConditional, MatchesNormalEquations) {
  const auto inst = toy::random_instance(3, 4, 3, 0, false, OmegaPriorFamily::kFixed);
  const auto sampler = make_sampler(inst);
  const auto post = sampler.beta_posterior();
  const Matrix w = row_standardize(inst.state.omega).w;
  const Vector sy = inst.data.y - inst.state.rho * stacked_spatial_lag(w, inst.data.y, 4, 3);
  const Index q = inst.data.q();
  const Matrix prec = inst.data.x.transpose() * inst.data.x / inst.state.sigma2 + Matrix::Identity(q, q) / 100.0;
  const Matrix cov = prec.inverse();
  const Vector mean = cov * (inst.data.x.transpose() * sy / inst.state.sigma2);
  EXPECT_LT((post.mean - mean).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((post.covariance - cov).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(BetaConditional, DrawsHaveTheConditionalMoments) {
  const auto inst = toy::random_instance(4, 4, 3, 0, false, OmegaPriorFamily::kFixed);
  GibbsSampler sampler = make_sampler(inst);
  const auto post = sampler.beta_posterior();
  Rng rng(8);
  const int draws = 20000;
  Vector sum = Vector::Zero(inst.data.q());
  for (int k = 0; k < draws; ++k) sum += sampler.sample_beta(rng);
  const Vector mean = sum / draws;
  for (Index k = 0; k < mean.size(); ++k) {
    EXPECT_NEAR(mean[k], post.mean[k], 5.0 * std::sqrt(post.covariance(k, k) / draws));
  }
}

TEST(Sigma2Conditional, ShapeAndRate) {
  const auto inst = toy::random_instance(5, 4, 3, 0, false, OmegaPriorFamily::kFixed);
  SamplerConfig half = oracle_config();
  half.residual_half_factor = true;
  const auto printed = make_sampler(inst);
  const auto halved = make_sampler(inst, half);
  const Vector e = spatial_residuals(inst.data, inst.spec, row_standardize(inst.state.omega).w, inst.state.rho,
                                     inst.state.beta);
  EXPECT_NEAR(printed.sigma2_posterior().first, 0.01 + 6.0, 1e-12);
  EXPECT_NEAR(printed.sigma2_posterior().second, 0.01 + e.squaredNorm(), 1e-10);
  EXPECT_NEAR(halved.sigma2_posterior().second, 0.01 + 0.5 * e.squaredNorm(), 1e-10);
}

TEST(Sigma2Conditional, PosteriorMeanTracksResiduals) {
  // Large NT: with the half factor the draws average e'e / NT; as printed, about twice that.
  DgpConfig dgp;
  dgp.n = 20;
  dgp.t = 50;
  Rng rng(3);
  const auto layout = generate_knn_adjacency(dgp, rng);
  const auto sim = generate_panel(dgp, layout.omega, rng);
  ParameterState s;
  s.omega = AdjacencyMatrix::from_dense(layout.omega.to_dense(), false);
  s.rho = 0.5;
  s.sigma2 = 1.0;
  s.beta = Vector::Zero(sim.data.q());
  PriorSpec priors{fixed_omega_prior(20, 0.5), {}};
  for (bool half : {true, false}) {
    SamplerConfig c;
    c.residual_half_factor = half;
    GibbsSampler sampler(sim.data, ModelSpec{}, priors, c, s);
    const double target = sampler.ssr() / static_cast<double>(sim.data.nt()) * (half ? 1.0 : 2.0);
    double sum = 0.0;
    const int draws = 4000;
    for (int k = 0; k < draws; ++k) sum += sampler.sample_sigma2(rng);
    EXPECT_NEAR(sum / draws, target, 0.02 * target);
  }
}

TEST(RhoConditional, GridDensityMatchesOracle) {
  for (int lag : {0, 1}) {
    auto inst = toy::random_instance(6, 4, 3, lag, false, OmegaPriorFamily::kSparsity);
    const auto sampler = make_sampler(inst);
    const auto grid = sampler.rho_grid();
    const auto logp = sampler.rho_log_density();
    ASSERT_EQ(grid.size(), 200u);
    EXPECT_DOUBLE_EQ(grid.front(), 0.5 / 200.0);
    EXPECT_DOUBLE_EQ(grid.back(), 199.5 / 200.0);
    auto oracle_logp = [&](double rho) {
      auto p = toy::to_problem(inst, inst.state.omega);
      p.rho = rho;
      return oracle::log_likelihood(p) + log_prior_rho(rho, inst.priors.params);
    };
    const double ref = oracle_logp(grid[10]) - logp[10];
    for (std::size_t k = 0; k < grid.size(); k += 7) {
      EXPECT_NEAR(oracle_logp(grid[k]) - logp[k], ref, 1e-8) << "lag " << lag << " rho " << grid[k];
    }
  }
}

TEST(RhoConditional, DrawsFollowTheGridMass) {
  auto inst = toy::random_instance(12, 4, 3, 0, false, OmegaPriorFamily::kSparsity);
  GibbsSampler sampler = make_sampler(inst);
  const auto logp = sampler.rho_log_density();
  const double top = *std::max_element(logp.begin(), logp.end());
  double z = 0.0, mean = 0.0;
  const auto grid = sampler.rho_grid();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    z += std::exp(logp[k] - top);
    mean += grid[k] * std::exp(logp[k] - top);
  }
  mean /= z;
  Rng rng(2);
  double sum = 0.0;
  const int draws = 20000;
  for (int k = 0; k < draws; ++k) {
    GibbsSampler fresh = make_sampler(inst);
    const double r = fresh.sample_rho(rng);
    ASSERT_GT(r, 0.0);
    ASSERT_LT(r, 1.0);
    sum += r;
  }
  EXPECT_NEAR(sum / draws, mean, 0.01);
}

TEST(Identification, ProportionalDiagonalIsRejected) {
  // Complete graph on 3 nodes: diag(W^2) = 1/2 for every unit.
  Matrix full = Matrix::Ones(3, 3) - Matrix::Identity(3, 3);
  EXPECT_FALSE(identification_check(AdjacencyMatrix::from_dense(full, true)));
  EXPECT_TRUE(identification_check(AdjacencyMatrix(3, true)));  // empty W passes

  Matrix chain = full;
  chain(0, 2) = chain(2, 0) = 0.0;
  EXPECT_TRUE(identification_check(AdjacencyMatrix::from_dense(chain, true)));

  toy::Instance inst = toy::random_instance(1, 3, 4, 0, true, OmegaPriorFamily::kFixed);
  inst.state.omega = AdjacencyMatrix::from_dense(chain, true);
  SamplerConfig c;
  GibbsSampler sampler(inst.data, inst.spec, inst.priors, c, inst.state);
  const auto p = sampler.evaluate_omega_entry(0, 2);
  EXPECT_EQ(p.rejection, OmegaProposal::Rejection::kIdentification);
  EXPECT_EQ(p.p_include, 0.0);
}

TEST(Identification, IncrementalDiagonalMatchesRecomputation) {
  auto inst = toy::random_instance(19, 6, 3, 0, false, OmegaPriorFamily::kSparsity);
  GibbsSampler sampler = make_sampler(inst);
  Rng rng(4);
  for (int sweep = 0; sweep < 20; ++sweep) {
    sampler.sweep_omega(rng);
    const Vector direct = w_squared_diagonal(row_standardize(sampler.state().omega).w);
    EXPECT_LT((sampler.w_squared_diag() - direct).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Sweep, InvariantsHoldAtSweepBoundaries) {
  for (bool symmetric : {false, true}) {
    auto inst = toy::random_instance(21, 7, 4, 0, symmetric, OmegaPriorFamily::kSparsity);
    SamplerConfig c;
    GibbsSampler sampler(inst.data, inst.spec, inst.priors, c, inst.state);
    Rng rng(13);
    for (int it = 0; it < 200; ++it) {
      sampler.sample_beta(rng);
      const double s2 = sampler.sample_sigma2(rng);
      const double rho = sampler.sample_rho(rng);
      sampler.sweep_omega(rng);
      ASSERT_GT(s2, 0.0);
      ASSERT_GT(rho, 0.0);
      ASSERT_LT(rho, 1.0);
      const auto& s = sampler.state();
      for (Index i = 0; i < 7; ++i) {
        ASSERT_EQ(s.omega(i, i), 0);
        if (symmetric)
          for (Index j = 0; j < 7; ++j) ASSERT_EQ(s.omega(i, j), s.omega(j, i));
      }
      const Matrix a = spatial_filter(row_standardize(s.omega).w, s.rho);
      const auto exact = exact_factorize(a);
      ASSERT_NEAR(s.system->log_det(), exact.log_det(), 1e-8);
      ASSERT_LT((s.system->a() - a).cwiseAbs().maxCoeff(), 1e-12);
      const Vector e = spatial_residuals(inst.data, inst.spec, row_standardize(s.omega).w, s.rho, s.beta);
      ASSERT_NEAR(sampler.ssr(), e.squaredNorm(), 1e-8 * std::max(1.0, e.squaredNorm()));
      ASSERT_NO_THROW(log_likelihood(s, inst.data, inst.spec));
    }
  }
}

TEST(Sweep, HardMasksAreAbsorbing) {
  auto inst = toy::random_instance(31, 5, 3, 0, false, OmegaPriorFamily::kSparsity);
  inst.priors.omega.inclusion(0, 1) = 1.0;
  inst.priors.omega.inclusion(1, 0) = 0.0;
  inst.priors.omega.inclusion(3, 4) = 0.0;
  SamplerConfig c;
  c.n_draws = 50;
  c.n_burnin = 10;
  c.keep_omega_draws = true;
  const auto chain = run_chain(inst.data, inst.spec, inst.priors, c);
  for (const auto& om : chain.omega_draws) {
    EXPECT_EQ(om(0, 1), 1);
    EXPECT_EQ(om(1, 0), 0);
    EXPECT_EQ(om(3, 4), 0);
  }
  EXPECT_EQ(chain.inclusion_counts(0, 1), 50);
  EXPECT_EQ(chain.inclusion_counts(1, 0), 0);
}

TEST(RunChain, SameSeedSameDraws) {
  auto inst = toy::random_instance(41, 6, 4, 0, true, OmegaPriorFamily::kSparsity);
  SamplerConfig c;
  c.n_draws = 40;
  c.n_burnin = 20;
  c.seed = 99;
  const auto a = run_chain(inst.data, inst.spec, inst.priors, c);
  const auto b = run_chain(inst.data, inst.spec, inst.priors, c);
  EXPECT_EQ(a.beta_draws, b.beta_draws);
  EXPECT_EQ(a.rho_draws, b.rho_draws);
  EXPECT_EQ(a.sigma2_draws, b.sigma2_draws);
  EXPECT_EQ(a.inclusion_counts, b.inclusion_counts);
  c.seed = 100;
  const auto d = run_chain(inst.data, inst.spec, inst.priors, c);
  EXPECT_NE(a.rho_draws, d.rho_draws);
}

TEST(RunChain, ThinningAndCounts) {
  auto inst = toy::random_instance(43, 5, 3, 1, false, OmegaPriorFamily::kFixed);
  SamplerConfig c;
  c.n_draws = 15;
  c.n_burnin = 5;
  c.thin = 3;
  const auto chain = run_chain(inst.data, inst.spec, inst.priors, c);
  EXPECT_EQ(chain.draw_count, 15);
  EXPECT_EQ(chain.beta_draws.rows(), 15);
  EXPECT_EQ(chain.rho_draws.size(), 15u);
  EXPECT_LE(chain.inclusion_counts.maxCoeff(), 15);
  EXPECT_EQ(chain.rejections.proposals, (5 + 45) * 20);
}

TEST(RunChain, ZeroDrawsGivesEmptyChain) {
  auto inst = toy::random_instance(44, 4, 3, 0, false, OmegaPriorFamily::kFixed);
  SamplerConfig c;
  c.n_draws = 0;
  c.n_burnin = 3;
  const auto chain = run_chain(inst.data, inst.spec, inst.priors, c);
  EXPECT_EQ(chain.draw_count, 0);
  EXPECT_THROW(inclusion_matrix(chain), EmptyChain);
}

TEST(SamplerConfig, ValidationNamesTheField) {
  SamplerConfig c;
  c.n_burnin = -1;
  try {
    c.validate();
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("sampler.burnin"), std::string::npos);
  }
}

TEST(InitialState, EmptyPlusForcedLinks) {
  auto inst = toy::random_instance(45, 5, 3, 0, false, OmegaPriorFamily::kSparsity);
  inst.priors.omega.inclusion(2, 4) = 1.0;
  Rng rng(1);
  const auto s = initial_state(inst.data, inst.spec, inst.priors, SamplerConfig{}, rng);
  EXPECT_EQ(s.omega.link_count(), 1);
  EXPECT_EQ(s.omega(2, 4), 1);
  EXPECT_GT(s.sigma2, 0.0);
  EXPECT_GT(s.rho, 0.0);
  EXPECT_LT(s.rho, 1.0);
}
