#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gpstruct/corpus.hpp"
#include "gpstruct/kernels.hpp"

namespace gpstruct {

/// Log-domain clique potentials of one linear chain. The pairwise table is
/// shared by all T - 1 edges.
struct ChainPotentials {
  Eigen::MatrixXd unary;     // T x |L|
  Eigen::MatrixXd pairwise;  // |L| x |L|, indexed (y_t, y_{t+1})

  [[nodiscard]] std::size_t length() const noexcept {
    return static_cast<std::size_t>(unary.rows());
  }
  [[nodiscard]] std::size_t num_labels() const noexcept {
    return static_cast<std::size_t>(unary.cols());
  }
  /// Throws Error(kData) on shape mismatch, T == 0 or non-finite entries.
  void validate() const;
};

struct MarginalTables {
  Eigen::MatrixXd node;             // T x |L|
  std::vector<Eigen::MatrixXd> edge;  // T - 1 tables of |L| x |L|
};

/// Numerically stable log(sum(exp(values))); -inf for an empty input.
double log_sum_exp(std::span<const double> values);

/// Reads the unary latents of sequence n and the shared pairwise latents.
ChainPotentials potentials_from_latents(const Eigen::VectorXd& f, const LatentLayout& layout,
                                        std::size_t sequence_index);

/// Unnormalized log score of a label sequence.
double joint_score(const ChainPotentials& pots, std::span<const Label> labels);

/// Log partition function by the forward recursion, O(T |L|^2).
double log_partition(const ChainPotentials& pots);

/// log p(labels | potentials) under the structured softmax.
double sequence_log_likelihood(const ChainPotentials& pots, std::span<const Label> labels);

/// Exact node and edge marginals by forward-backward.
MarginalTables marginals(const ChainPotentials& pots);

/// Highest-scoring label sequence. Ties go to the lowest label id.
std::vector<Label> viterbi(const ChainPotentials& pots);

struct BruteForceResult {
  double log_partition = 0.0;
  MarginalTables marginals;
  std::vector<Label> argmax;
  double max_score = 0.0;
};

/// Exhaustive enumeration over all |L|^T sequences, for checking the
/// dynamic programs. Throws Error(kConfig) above `max_configurations`.
BruteForceResult brute_force(const ChainPotentials& pots,
                             std::size_t max_configurations = 1'000'000);

}  // namespace gpstruct
