#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gpstruct/corpus.hpp"

namespace gpstruct {

enum class InputKernel { kLinear, kSquaredExponential };

std::string to_string(InputKernel kernel);
InputKernel parse_input_kernel(const std::string& name);

struct KernelConfig {
  InputKernel input_kernel = InputKernel::kLinear;
  /// SE length-scale: k(x, x') = exp(-||x - x'||^2 / gamma).
  double gamma = 1.0;
  /// Multiplier on the pairwise block.
  double h_p = 1.0;
  /// Added to the diagonal of the input Gram matrix before factorization.
  double jitter = 1e-4;

  /// Throws Error(kConfig) when a field is out of range.
  void validate() const;
  [[nodiscard]] bool valid() const noexcept;

  friend bool operator==(const KernelConfig&, const KernelConfig&) = default;
};

/// Input-only kernel k_x.
double kx_eval(const FeatureVector& x, const FeatureVector& x2, const KernelConfig& config);

/// Unary kernel: I[y == y2] * k_x(x, x2).
double unary_kernel(Label y, const FeatureVector& x, Label y2, const FeatureVector& x2,
                    const KernelConfig& config);

/// Pairwise kernel: h_p * I[pair == pair2].
double pairwise_kernel(std::pair<Label, Label> pair, std::pair<Label, Label> pair2, double h_p);

/// Flat indexing of the latent vector. Unary latents are label-major, so
/// the block for label y is the contiguous range [y * P, (y + 1) * P) with
/// P the total position count; the |L|^2 pairwise latents follow.
class LatentLayout {
 public:
  LatentLayout(std::vector<std::size_t> lengths, std::size_t num_labels);
  explicit LatentLayout(const Corpus& corpus);

  [[nodiscard]] std::size_t num_sequences() const noexcept { return lengths_.size(); }
  [[nodiscard]] std::size_t num_labels() const noexcept { return num_labels_; }
  [[nodiscard]] std::size_t num_positions() const noexcept { return num_positions_; }
  [[nodiscard]] std::size_t length(std::size_t n) const { return lengths_.at(n); }
  [[nodiscard]] std::size_t offset(std::size_t n) const { return offsets_.at(n); }
  [[nodiscard]] std::size_t n_unary() const noexcept { return num_positions_ * num_labels_; }
  [[nodiscard]] std::size_t n_pairwise() const noexcept { return num_labels_ * num_labels_; }
  [[nodiscard]] std::size_t total() const noexcept { return n_unary() + n_pairwise(); }

  [[nodiscard]] Eigen::Index unary_index(std::size_t n, std::size_t t, Label y) const;
  [[nodiscard]] Eigen::Index pairwise_index(Label y, Label y2) const;

  friend bool operator==(const LatentLayout&, const LatentLayout&) = default;

 private:
  std::vector<std::size_t> lengths_;
  std::vector<std::size_t> offsets_;
  std::size_t num_labels_ = 0;
  std::size_t num_positions_ = 0;
};

/// Block form of the joint prior covariance
///
///     K = diag(kx, ..., kx, h_p * I)     (|L| copies of kx)
///
/// kx is factorized once and reused for every label block.
class GramBlocks {
 public:
  GramBlocks(Eigen::MatrixXd kx, Eigen::MatrixXd kx_chol, KernelConfig config,
             LatentLayout layout);

  [[nodiscard]] const Eigen::MatrixXd& kx() const noexcept { return kx_; }
  [[nodiscard]] const Eigen::MatrixXd& kx_chol() const noexcept { return kx_chol_; }
  [[nodiscard]] double h_p() const noexcept { return config_.h_p; }
  [[nodiscard]] const KernelConfig& config() const noexcept { return config_; }
  [[nodiscard]] const LatentLayout& layout() const noexcept { return layout_; }

  [[nodiscard]] Eigen::Index dim() const { return static_cast<Eigen::Index>(layout_.total()); }
  /// L * nu with L the block-diagonal factor of K.
  [[nodiscard]] Eigen::VectorXd color(const Eigen::VectorXd& nu) const;
  /// L^{-1} * f.
  [[nodiscard]] Eigen::VectorXd whiten(const Eigen::VectorXd& f) const;

  /// K^{-1} f via block solves.
  [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& f) const;
  /// f^T K^{-1} f via block solves.
  [[nodiscard]] double quadratic_form(const Eigen::VectorXd& f) const;

  /// Number of doubles held by this object's matrices.
  [[nodiscard]] std::size_t stored_doubles() const noexcept {
    return static_cast<std::size_t>(kx_.size() + kx_chol_.size());
  }

 private:
  Eigen::MatrixXd kx_;
  Eigen::MatrixXd kx_chol_;
  KernelConfig config_;
  LatentLayout layout_;
};

/// Input-kernel matrix between the positions of `a` (rows) and `b` (cols),
/// without jitter.
Eigen::MatrixXd input_cross_gram(const Corpus& a, const Corpus& b, const KernelConfig& config);
Eigen::MatrixXd input_gram(const Corpus& corpus, const KernelConfig& config);

/// Lower Cholesky factor, or nullopt when the matrix is not numerically
/// positive definite (non-finite entries, non-positive pivots, or a pivot
/// ratio below 1e-14).
std::optional<Eigen::MatrixXd> try_cholesky(const Eigen::MatrixXd& matrix);

/// Builds the Gram blocks, or nullopt when the configuration is invalid or
/// kx + jitter*I cannot be factorized.
std::optional<GramBlocks> try_assemble_gram(const Corpus& corpus, const KernelConfig& config);
/// As try_assemble_gram but throws FactorizationError on failure.
GramBlocks assemble_gram(const Corpus& corpus, const KernelConfig& config);

/// Dense K of size layout.total(); for verification on small problems.
/// Throws Error(kConfig) when total exceeds `max_total`.
Eigen::MatrixXd materialize_full_gram(const GramBlocks& gram, std::size_t max_total = 4096);

}  // namespace gpstruct
