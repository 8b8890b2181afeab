#include "gpstruct/kernels.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

#include "gpstruct/error.hpp"

namespace gpstruct {

std::string to_string(InputKernel kernel) {
  return kernel == InputKernel::kLinear ? "linear" : "se";
}

InputKernel parse_input_kernel(const std::string& name) {
  if (name == "linear") {
    return InputKernel::kLinear;
  }
  if (name == "se" || name == "squared_exponential") {
    return InputKernel::kSquaredExponential;
  }
  throw Error(ErrorCode::kConfig, "unknown kernel '" + name + "' (expected linear or se)");
}

bool KernelConfig::valid() const noexcept {
  if (!(std::isfinite(h_p) && h_p > 0.0)) {
    return false;
  }
  if (!(std::isfinite(jitter) && jitter >= 0.0)) {
    return false;
  }
  if (input_kernel == InputKernel::kSquaredExponential && !(std::isfinite(gamma) && gamma > 0.0)) {
    return false;
  }
  return true;
}

void KernelConfig::validate() const {
  if (!valid()) {
    throw Error(ErrorCode::kConfig, "invalid kernel configuration: need h_p > 0, jitter >= 0 and "
                                    "gamma > 0 for the se kernel");
  }
}

double kx_eval(const FeatureVector& x, const FeatureVector& x2, const KernelConfig& config) {
  switch (config.input_kernel) {
    case InputKernel::kLinear:
      return x.dot(x2);
    case InputKernel::kSquaredExponential:
      return std::exp(-x.squared_distance(x2) / config.gamma);
  }
  return 0.0;
}

double unary_kernel(Label y, const FeatureVector& x, Label y2, const FeatureVector& x2,
                    const KernelConfig& config) {
  if (x.dim() != x2.dim()) {
    throw Error(ErrorCode::kData, "feature dimension mismatch");
  }
  return y == y2 ? kx_eval(x, x2, config) : 0.0;
}

double pairwise_kernel(std::pair<Label, Label> pair, std::pair<Label, Label> pair2, double h_p) {
  return pair == pair2 ? h_p : 0.0;
}

// ---------------------------------------------------------------------------

LatentLayout::LatentLayout(std::vector<std::size_t> lengths, std::size_t num_labels)
    : lengths_(std::move(lengths)), num_labels_(num_labels) {
  offsets_.reserve(lengths_.size());
  for (std::size_t len : lengths_) {
    offsets_.push_back(num_positions_);
    num_positions_ += len;
  }
}

LatentLayout::LatentLayout(const Corpus& corpus)
    : LatentLayout(
          [&] {
            std::vector<std::size_t> lens;
            lens.reserve(corpus.size());
            for (const auto& seq : corpus.sequences()) {
              lens.push_back(seq.length());
            }
            return lens;
          }(),
          corpus.num_labels()) {}

Eigen::Index LatentLayout::unary_index(std::size_t n, std::size_t t, Label y) const {
  if (n >= lengths_.size() || t >= lengths_[n] || y < 0 ||
      static_cast<std::size_t>(y) >= num_labels_) {
    throw Error(ErrorCode::kData, "unary index out of range");
  }
  return static_cast<Eigen::Index>(static_cast<std::size_t>(y) * num_positions_ + offsets_[n] + t);
}

Eigen::Index LatentLayout::pairwise_index(Label y, Label y2) const {
  const auto l = static_cast<Label>(num_labels_);
  if (y < 0 || y >= l || y2 < 0 || y2 >= l) {
    throw Error(ErrorCode::kData, "pairwise index out of range");
  }
  return static_cast<Eigen::Index>(n_unary() + static_cast<std::size_t>(y) * num_labels_ +
                                   static_cast<std::size_t>(y2));
}

// ---------------------------------------------------------------------------

GramBlocks::GramBlocks(Eigen::MatrixXd kx, Eigen::MatrixXd kx_chol, KernelConfig config,
                       LatentLayout layout)
    : kx_(std::move(kx)),
      kx_chol_(std::move(kx_chol)),
      config_(config),
      layout_(std::move(layout)) {}

namespace {

// Views the unary part of a latent vector as a P x |L| matrix whose
// columns are the per-label blocks.
Eigen::Map<const Eigen::MatrixXd> unary_blocks(const Eigen::VectorXd& v, const LatentLayout& l) {
  return {v.data(), static_cast<Eigen::Index>(l.num_positions()),
          static_cast<Eigen::Index>(l.num_labels())};
}

Eigen::Map<Eigen::MatrixXd> unary_blocks(Eigen::VectorXd& v, const LatentLayout& l) {
  return {v.data(), static_cast<Eigen::Index>(l.num_positions()),
          static_cast<Eigen::Index>(l.num_labels())};
}

void check_size(const Eigen::VectorXd& v, const LatentLayout& layout) {
  if (static_cast<std::size_t>(v.size()) != layout.total()) {
    throw Error(ErrorCode::kData, "latent vector has " + std::to_string(v.size()) +
                                      " entries, layout expects " +
                                      std::to_string(layout.total()));
  }
}

}  // namespace

Eigen::VectorXd GramBlocks::color(const Eigen::VectorXd& nu) const {
  check_size(nu, layout_);
  Eigen::VectorXd f(nu.size());
  unary_blocks(f, layout_).noalias() =
      kx_chol_.triangularView<Eigen::Lower>() * unary_blocks(nu, layout_);
  const auto n_pw = static_cast<Eigen::Index>(layout_.n_pairwise());
  f.tail(n_pw) = std::sqrt(config_.h_p) * nu.tail(n_pw);
  return f;
}

Eigen::VectorXd GramBlocks::whiten(const Eigen::VectorXd& f) const {
  check_size(f, layout_);
  Eigen::VectorXd nu(f.size());
  unary_blocks(nu, layout_) = unary_blocks(f, layout_);
  kx_chol_.triangularView<Eigen::Lower>().solveInPlace(unary_blocks(nu, layout_));
  const auto n_pw = static_cast<Eigen::Index>(layout_.n_pairwise());
  nu.tail(n_pw) = f.tail(n_pw) / std::sqrt(config_.h_p);
  return nu;
}

Eigen::VectorXd GramBlocks::solve(const Eigen::VectorXd& f) const {
  check_size(f, layout_);
  Eigen::VectorXd out(f.size());
  auto blocks = unary_blocks(out, layout_);
  blocks = unary_blocks(f, layout_);
  kx_chol_.triangularView<Eigen::Lower>().solveInPlace(blocks);
  kx_chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(blocks);
  const auto n_pw = static_cast<Eigen::Index>(layout_.n_pairwise());
  out.tail(n_pw) = f.tail(n_pw) / config_.h_p;
  return out;
}

double GramBlocks::quadratic_form(const Eigen::VectorXd& f) const {
  return whiten(f).squaredNorm();
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd input_cross_gram(const Corpus& a, const Corpus& b, const KernelConfig& config) {
  if (a.feature_dim() != b.feature_dim()) {
    throw Error(ErrorCode::kData, "feature dimension mismatch between corpora: " +
                                      std::to_string(a.feature_dim()) + " vs " +
                                      std::to_string(b.feature_dim()));
  }
  const auto xa = a.positions();
  const auto xb = b.positions();
  Eigen::MatrixXd k(static_cast<Eigen::Index>(xa.size()), static_cast<Eigen::Index>(xb.size()));
  for (Eigen::Index j = 0; j < k.cols(); ++j) {
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
      k(i, j) = kx_eval(*xa[static_cast<std::size_t>(i)], *xb[static_cast<std::size_t>(j)], config);
    }
  }
  return k;
}

Eigen::MatrixXd input_gram(const Corpus& corpus, const KernelConfig& config) {
  const auto xs = corpus.positions();
  const auto n = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double v = kx_eval(*xs[static_cast<std::size_t>(i)], *xs[static_cast<std::size_t>(j)],
                               config);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

std::optional<Eigen::MatrixXd> try_cholesky(const Eigen::MatrixXd& matrix) {
  if (!matrix.allFinite()) {
    return std::nullopt;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(matrix);
  if (llt.info() != Eigen::Success) {
    return std::nullopt;
  }
  Eigen::MatrixXd lower = llt.matrixL();
  const Eigen::VectorXd diag = lower.diagonal();
  if (!diag.allFinite() || diag.size() == 0 || diag.minCoeff() <= 0.0) {
    return std::nullopt;
  }
  const double ratio = diag.minCoeff() / diag.maxCoeff();
  if (ratio * ratio < 1e-14) {
    return std::nullopt;
  }
  return lower;
}

std::optional<GramBlocks> try_assemble_gram(const Corpus& corpus, const KernelConfig& config) {
  if (!config.valid()) {
    return std::nullopt;
  }
  Eigen::MatrixXd kx = input_gram(corpus, config);
  kx.diagonal().array() += config.jitter;
  auto chol = try_cholesky(kx);
  if (!chol) {
    return std::nullopt;
  }
  return GramBlocks(std::move(kx), std::move(*chol), config, LatentLayout(corpus));
}

GramBlocks assemble_gram(const Corpus& corpus, const KernelConfig& config) {
  config.validate();
  auto gram = try_assemble_gram(corpus, config);
  if (!gram) {
    throw FactorizationError("input Gram matrix is not positive definite after jitter " +
                             std::to_string(config.jitter));
  }
  return std::move(*gram);
}

Eigen::MatrixXd materialize_full_gram(const GramBlocks& gram, std::size_t max_total) {
  const LatentLayout& layout = gram.layout();
  if (layout.total() > max_total) {
    throw Error(ErrorCode::kConfig, "refusing to materialize a " + std::to_string(layout.total()) +
                                        "-dimensional Gram matrix (limit " +
                                        std::to_string(max_total) + ")");
  }
  const auto total = static_cast<Eigen::Index>(layout.total());
  const auto p = static_cast<Eigen::Index>(layout.num_positions());
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(total, total);
  for (std::size_t y = 0; y < layout.num_labels(); ++y) {
    const auto start = static_cast<Eigen::Index>(y) * p;
    k.block(start, start, p, p) = gram.kx();
  }
  const auto n_pw = static_cast<Eigen::Index>(layout.n_pairwise());
  k.bottomRightCorner(n_pw, n_pw).diagonal().setConstant(gram.h_p());
  return k;
}

}  // namespace gpstruct
