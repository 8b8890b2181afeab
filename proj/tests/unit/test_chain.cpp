#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "gpstruct/chain.hpp"
#include "gpstruct/error.hpp"
#include "oracles.hpp"

namespace gpstruct {
namespace {

ChainPotentials random_pots(testing::Gen& gen, int max_len, int max_labels, double scale) {
  const int len = gen.uniform_int(1, max_len);
  const int l = gen.uniform_int(2, max_labels);
  return ChainPotentials{gen.matrix(len, l, scale), gen.matrix(l, l, scale)};
}

ChainPotentials zeros(int len, int l) {
  return ChainPotentials{Eigen::MatrixXd::Zero(len, l), Eigen::MatrixXd::Zero(l, l)};
}

TEST(LogSumExp, StableForLargeMagnitudes) {
  const std::vector<double> v{1000.0, 1000.0};
  EXPECT_NEAR(log_sum_exp(v), 1000.0 + std::log(2.0), 1e-12);
  const std::vector<double> w{-1e300, 0.0};
  EXPECT_NEAR(log_sum_exp(w), 0.0, 1e-15);
}

TEST(PotentialsFromLatents, ZeroAndIndexMaps) {
  const LatentLayout layout({2, 3}, 2);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.total()));
  const ChainPotentials z = potentials_from_latents(zero, layout, 1);
  EXPECT_EQ(z.unary.rows(), 3);
  EXPECT_TRUE(z.unary.isZero(0.0));
  EXPECT_TRUE(z.pairwise.isZero(0.0));

  Eigen::VectorXd idx(static_cast<Eigen::Index>(layout.total()));
  std::iota(idx.data(), idx.data() + idx.size(), 0.0);
  for (std::size_t n = 0; n < 2; ++n) {
    const ChainPotentials p = potentials_from_latents(idx, layout, n);
    for (std::size_t t = 0; t < layout.length(n); ++t) {
      for (Label y = 0; y < 2; ++y) {
        EXPECT_EQ(p.unary(static_cast<Eigen::Index>(t), y),
                  static_cast<double>(layout.unary_index(n, t, y)));
      }
    }
    for (Label y = 0; y < 2; ++y) {
      for (Label y2 = 0; y2 < 2; ++y2) {
        EXPECT_EQ(p.pairwise(y, y2), static_cast<double>(layout.pairwise_index(y, y2)));
      }
    }
  }
  EXPECT_THROW(potentials_from_latents(idx, layout, 2), Error);
}

TEST(PotentialsFromLatents, RoundTripRandomLatents) {
  testing::Gen gen(3);
  const LatentLayout layout({3, 1, 4}, 3);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::VectorXd f = gen.vector(static_cast<Eigen::Index>(layout.total()), 2.0);
    Eigen::VectorXd back = Eigen::VectorXd::Constant(f.size(), std::nan(""));
    for (std::size_t n = 0; n < 3; ++n) {
      const ChainPotentials p = potentials_from_latents(f, layout, n);
      for (std::size_t t = 0; t < layout.length(n); ++t) {
        for (Label y = 0; y < 3; ++y) {
          back[layout.unary_index(n, t, y)] = p.unary(static_cast<Eigen::Index>(t), y);
        }
      }
      for (Label y = 0; y < 3; ++y) {
        for (Label y2 = 0; y2 < 3; ++y2) {
          back[layout.pairwise_index(y, y2)] = p.pairwise(y, y2);
        }
      }
    }
    EXPECT_EQ(back, f);
  }
}

TEST(LogPartition, Examples) {
  EXPECT_NEAR(log_partition(zeros(2, 2)), std::log(4.0), 1e-14);
  ChainPotentials single = zeros(1, 2);
  single.unary << 0.3, -1.7;
  const std::vector<double> ab{0.3, -1.7};
  EXPECT_NEAR(log_partition(single), log_sum_exp(ab), 1e-14);
}

TEST(LogPartition, MatchesEnumeration) {
  testing::Gen gen(4);
  for (int rep = 0; rep < 100; ++rep) {
    const ChainPotentials p = random_pots(gen, 8, 4, 1.5);
    const auto oracle = testing::enumerate_chain(p.unary, p.pairwise);
    EXPECT_NEAR(log_partition(p), oracle.log_partition,
                1e-8 * std::max(1.0, std::abs(oracle.log_partition)));
  }
}

TEST(LogPartition, BoundsAndMonotonicity) {
  testing::Gen gen(5);
  for (int rep = 0; rep < 50; ++rep) {
    ChainPotentials p = random_pots(gen, 6, 3, 2.0);
    const double z = log_partition(p);
    const double best = joint_score(p, viterbi(p));
    const double configs = std::pow(static_cast<double>(p.num_labels()),
                                    static_cast<double>(p.length()));
    EXPECT_GE(z, best - 1e-12);
    EXPECT_LE(z - best, std::log(configs) + 1e-12);
    // Raising one entry raises the partition function.
    p.unary(gen.uniform_int(0, static_cast<int>(p.length()) - 1), 0) += 0.5;
    EXPECT_GT(log_partition(p), z);
  }
}

TEST(LogPartition, ExtremePotentialsStayFinite) {
  testing::Gen gen(6);
  for (int rep = 0; rep < 20; ++rep) {
    ChainPotentials p = random_pots(gen, 8, 4, 1.0);
    p.unary = (p.unary.array().sign() * 500.0).matrix();
    p.pairwise = (p.pairwise.array().sign() * 500.0).matrix();
    EXPECT_TRUE(std::isfinite(log_partition(p)));
    const MarginalTables m = marginals(p);
    EXPECT_TRUE(m.node.allFinite());
    EXPECT_NEAR(m.node.sum(), static_cast<double>(p.length()), 1e-9);
    const auto oracle = testing::enumerate_chain(p.unary, p.pairwise);
    EXPECT_NEAR(log_partition(p), oracle.log_partition, 1e-8 * std::abs(oracle.log_partition));
  }
}

TEST(SequenceLogLikelihood, Examples) {
  EXPECT_NEAR(sequence_log_likelihood(zeros(2, 2), std::vector<Label>{1, 0}), -std::log(4.0),
              1e-14);
  testing::Gen gen(7);
  ChainPotentials p = random_pots(gen, 5, 3, 1.0);
  std::vector<Label> y(p.length(), 0);
  y.back() = 1;
  const double before = sequence_log_likelihood(p, y);
  EXPECT_LE(before, 0.0);
  p.unary.row(0).array() += 3.25;
  EXPECT_NEAR(sequence_log_likelihood(p, y), before, 1e-12);
  EXPECT_THROW(sequence_log_likelihood(p, std::vector<Label>{0}), Error);
  std::vector<Label> bad(p.length(), 7);
  EXPECT_THROW(sequence_log_likelihood(p, bad), Error);
}

TEST(SequenceLogLikelihood, NormalizesOverAllSequences) {
  testing::Gen gen(8);
  for (int rep = 0; rep < 20; ++rep) {
    const ChainPotentials p = random_pots(gen, 5, 3, 1.0);
    const auto len = p.length();
    const auto l = static_cast<int>(p.num_labels());
    double total = 0.0;
    std::vector<Label> y(len, 0);
    while (true) {
      total += std::exp(sequence_log_likelihood(p, y));
      std::size_t t = 0;
      while (t < len && ++y[t] == l) {
        y[t++] = 0;
      }
      if (t == len) {
        break;
      }
    }
    EXPECT_NEAR(total, 1.0, 1e-10);
  }
}

TEST(Marginals, ZeroPotentialsAndSingleNode) {
  const MarginalTables z = marginals(zeros(4, 3));
  EXPECT_TRUE(z.node.isApproxToConstant(1.0 / 3.0, 1e-14));
  EXPECT_EQ(z.edge.size(), 3u);

  ChainPotentials single = zeros(1, 3);
  single.unary << 1.0, 2.0, -0.5;
  const Eigen::ArrayXd e = single.unary.row(0).array().exp();
  const MarginalTables s = marginals(single);
  for (Eigen::Index y = 0; y < 3; ++y) {
    EXPECT_NEAR(s.node(0, y), e[y] / e.sum(), 1e-14);
  }
  EXPECT_TRUE(s.edge.empty());
}

TEST(Marginals, MatchEnumerationAndAreConsistent) {
  testing::Gen gen(9);
  for (int rep = 0; rep < 100; ++rep) {
    const ChainPotentials p = random_pots(gen, 7, 4, 1.5);
    const MarginalTables m = marginals(p);
    const auto oracle = testing::enumerate_chain(p.unary, p.pairwise);
    EXPECT_LE(testing::max_rel_diff(m.node, oracle.node), 1e-8);
    ASSERT_EQ(m.edge.size(), oracle.edge.size());
    for (std::size_t t = 0; t < m.edge.size(); ++t) {
      EXPECT_LE(testing::max_rel_diff(m.edge[t], oracle.edge[t]), 1e-8);
      EXPECT_NEAR(m.edge[t].sum(), 1.0, 1e-10);
      const auto tt = static_cast<Eigen::Index>(t);
      EXPECT_LE((m.edge[t].rowwise().sum().transpose() - m.node.row(tt)).cwiseAbs().maxCoeff(),
                1e-10);
      EXPECT_LE((m.edge[t].colwise().sum() - m.node.row(tt + 1)).cwiseAbs().maxCoeff(), 1e-10);
    }
    for (Eigen::Index t = 0; t < m.node.rows(); ++t) {
      EXPECT_NEAR(m.node.row(t).sum(), 1.0, 1e-10);
    }
  }
}

TEST(Marginals, InvariantToPerPositionShift) {
  testing::Gen gen(10);
  for (int rep = 0; rep < 20; ++rep) {
    ChainPotentials p = random_pots(gen, 6, 4, 1.0);
    const MarginalTables before = marginals(p);
    p.unary.row(gen.uniform_int(0, static_cast<int>(p.length()) - 1)).array() += 17.0;
    const MarginalTables after = marginals(p);
    EXPECT_LE((after.node - before.node).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Viterbi, DecoupledChainAndTieBreak) {
  ChainPotentials p = zeros(3, 3);
  p.unary << 0.1, 2.0, 0.3,   //
      5.0, -1.0, 0.0,         //
      0.0, 0.2, 0.9;
  EXPECT_EQ(viterbi(p), (std::vector<Label>{1, 0, 2}));
  EXPECT_EQ(viterbi(zeros(5, 4)), std::vector<Label>(5, 0));
}

TEST(Viterbi, AchievesEnumeratedMaximum) {
  testing::Gen gen(11);
  for (int rep = 0; rep < 100; ++rep) {
    const ChainPotentials p = random_pots(gen, 8, 4, 1.5);
    const auto oracle = testing::enumerate_chain(p.unary, p.pairwise);
    EXPECT_EQ(joint_score(p, viterbi(p)), oracle.max_score);
  }
}

TEST(BruteForce, AgreesWithOracleAndGuard) {
  testing::Gen gen(12);
  for (int rep = 0; rep < 30; ++rep) {
    const ChainPotentials p = random_pots(gen, 6, 4, 1.0);
    const BruteForceResult b = brute_force(p);
    const auto oracle = testing::enumerate_chain(p.unary, p.pairwise);
    EXPECT_NEAR(b.log_partition, oracle.log_partition, 1e-10);
    EXPECT_EQ(b.max_score, oracle.max_score);
    EXPECT_EQ(joint_score(p, b.argmax), b.max_score);
    EXPECT_LE(testing::max_rel_diff(b.marginals.node, oracle.node), 1e-10);
  }
  EXPECT_THROW(brute_force(zeros(11, 4)), Error);  // 4^11 > 1e6
}

TEST(BruteForce, SingleNodeAndRelabeling) {
  ChainPotentials single = zeros(1, 3);
  single.unary << -0.5, 1.5, 0.25;
  const BruteForceResult s = brute_force(single);
  EXPECT_EQ(s.argmax, std::vector<Label>{1});
  EXPECT_NEAR(s.marginals.node(0, 1),
              std::exp(1.5) / (std::exp(-0.5) + std::exp(1.5) + std::exp(0.25)), 1e-14);

  testing::Gen gen(13);
  const ChainPotentials p = random_pots(gen, 5, 3, 1.0);
  const int l = static_cast<int>(p.num_labels());
  std::vector<int> perm(static_cast<std::size_t>(l));
  std::iota(perm.begin(), perm.end(), 0);
  std::rotate(perm.begin(), perm.begin() + 1, perm.end());
  ChainPotentials q = p;
  for (int a = 0; a < l; ++a) {
    q.unary.col(perm[static_cast<std::size_t>(a)]) = p.unary.col(a);
    for (int b = 0; b < l; ++b) {
      q.pairwise(perm[static_cast<std::size_t>(a)], perm[static_cast<std::size_t>(b)]) =
          p.pairwise(a, b);
    }
  }
  const BruteForceResult bp = brute_force(p);
  const BruteForceResult bq = brute_force(q);
  EXPECT_NEAR(bp.log_partition, bq.log_partition, 1e-12);
  for (int a = 0; a < l; ++a) {
    EXPECT_LE((bp.marginals.node.col(a) - bq.marginals.node.col(perm[static_cast<std::size_t>(a)]))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
  }
}

TEST(ChainPotentials, ValidateRejectsBadShapes) {
  ChainPotentials p = zeros(0, 2);
  EXPECT_THROW(p.validate(), Error);
  p = ChainPotentials{Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(3, 3)};
  EXPECT_THROW(p.validate(), Error);
  p = zeros(2, 2);
  p.unary(0, 0) = std::nan("");
  EXPECT_THROW(p.validate(), Error);
}

}  // namespace
}  // namespace gpstruct
