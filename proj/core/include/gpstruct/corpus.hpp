#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gpstruct {

using Label = int;

/// Sparse feature vector x_t. Indices are strictly increasing and < dim.
class FeatureVector {
 public:
  FeatureVector() = default;
  /// Validates and sorts the entries; throws Error(kData) on duplicate or
  /// out-of-range indices and on non-finite values.
  FeatureVector(std::vector<std::uint32_t> indices, std::vector<double> values,
                std::size_t dim);

  static FeatureVector from_dense(std::span<const double> dense);

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t nnz() const noexcept { return indices_.size(); }
  [[nodiscard]] std::span<const std::uint32_t> indices() const noexcept { return indices_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] bool is_binary() const noexcept;

  [[nodiscard]] double dot(const FeatureVector& other) const;
  [[nodiscard]] double squared_distance(const FeatureVector& other) const;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

 private:
  std::vector<std::uint32_t> indices_;
  std::vector<double> values_;
  std::size_t dim_ = 0;
};

struct TokenSequence {
  std::vector<FeatureVector> features;
  /// Absent for unlabeled test data.
  std::optional<std::vector<Label>> labels;

  [[nodiscard]] std::size_t length() const noexcept { return features.size(); }
  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

/// A validated set of token sequences over one label alphabet and one
/// feature dimension. Immutable after construction.
class Corpus {
 public:
  Corpus(std::vector<TokenSequence> sequences, std::vector<std::string> label_alphabet,
         std::size_t feature_dim);

  [[nodiscard]] const std::vector<TokenSequence>& sequences() const noexcept { return sequences_; }
  [[nodiscard]] const TokenSequence& sequence(std::size_t n) const { return sequences_.at(n); }
  [[nodiscard]] std::size_t size() const noexcept { return sequences_.size(); }
  [[nodiscard]] const std::vector<std::string>& label_alphabet() const noexcept {
    return label_alphabet_;
  }
  [[nodiscard]] std::size_t num_labels() const noexcept { return label_alphabet_.size(); }
  [[nodiscard]] std::size_t feature_dim() const noexcept { return feature_dim_; }
  /// Sum of sequence lengths.
  [[nodiscard]] std::size_t total_positions() const noexcept { return total_positions_; }
  /// True when every sequence carries labels.
  [[nodiscard]] bool labeled() const noexcept;
  [[nodiscard]] bool is_binary() const noexcept;

  /// All positions' feature vectors, concatenated in sequence order.
  [[nodiscard]] std::vector<const FeatureVector*> positions() const;

  /// Sequences at the given indices, in the order given.
  [[nodiscard]] Corpus subset(std::span<const std::size_t> indices) const;
  /// Same sequences with labels dropped.
  [[nodiscard]] Corpus without_labels() const;

  friend bool operator==(const Corpus&, const Corpus&) = default;

 private:
  std::vector<TokenSequence> sequences_;
  std::vector<std::string> label_alphabet_;
  std::size_t feature_dim_ = 0;
  std::size_t total_positions_ = 0;
};

struct ParseOptions {
  /// When set, labels must come from this alphabet and ids follow its order.
  std::optional<std::vector<std::string>> label_alphabet;
  /// When set, overrides the inferred dimension (a `#dim` header must agree).
  std::optional<std::size_t> feature_dim;
  bool labeled = true;
};

/// Reads the line-oriented token format:
///
///     #dim D            (optional)
///     #labels A B ...   (optional, fixes alphabet order)
///     idx:val idx:val LABEL
///     ...
///     <blank line ends a sequence>
///
/// Other lines beginning with '#' are comments. Unlabeled input omits the
/// trailing LABEL field.
Corpus parse_corpus(std::istream& in, const ParseOptions& options = {});
Corpus read_corpus_file(const std::string& path, const ParseOptions& options = {});

/// Writes `corpus` in the format read by parse_corpus, including `#dim` and
/// `#labels` headers. Values use round-trip precision.
void serialize_corpus(const Corpus& corpus, std::ostream& out);
void write_corpus_file(const Corpus& corpus, const std::string& path);

struct ExperimentSplit {
  Corpus train;
  Corpus test;
  int split_id = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

/// Draws `n_splits` pairwise-disjoint training sets of `train_size`
/// sequences. Each split's test set has `test_size` sequences drawn from the
/// sequences not used by any training set; test sets may overlap across
/// splits. Split k uses seed + k for its test draw.
std::vector<ExperimentSplit> split_experiments(const Corpus& corpus, int n_splits,
                                               std::size_t train_size, std::size_t test_size,
                                               std::uint64_t seed);

/// Median of squared Euclidean distances over all position pairs i < j.
/// When there are more than `max_pairs` pairs, `max_pairs` pairs are drawn
/// uniformly with replacement using `seed`.
double median_pairwise_distance(const Corpus& corpus, std::size_t max_pairs = 100'000,
                                std::uint64_t seed = 0);

}  // namespace gpstruct
