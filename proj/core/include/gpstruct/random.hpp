#pragma once

#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Core>

namespace gpstruct {

/// Seedable generator with platform-independent derived draws.
///
/// The standard distribution classes are implementation-defined, so uniform
/// and Gaussian variates are derived here directly from the 64-bit engine
/// output. Together with the serializable engine state this makes chains
/// reproducible across standard libraries and resumable from checkpoints.
class Rng {
 public:
  Rng() : engine_(0) {}
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1); safe to pass to log().
  double uniform_open();
  /// Uniform integer in [0, n). Requires n > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  double normal();
  Eigen::VectorXd normal_vector(Eigen::Index n);

  [[nodiscard]] std::string state() const;
  void set_state(const std::string& state);

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace gpstruct
