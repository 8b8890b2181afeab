#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "gpstruct/corpus.hpp"
#include "gpstruct/sampler.hpp"

namespace gpstruct {

/// Binary container for a SampleStore, also used for checkpoints.
///
/// All integers are unsigned little-endian, reals are IEEE-754 binary64
/// little-endian, strings and vectors carry a u64 length prefix.
///
///     magic        8 bytes  "GPSTRUCT"
///     version      u32      kStoreFormatVersion
///     thin         u64
///     hyper mode   u8       0 = off, 1 = prior-whitening
///     fingerprint  u64      training data fingerprint
///     state        kernel, f64 log_lik, u64 iteration, u64 hyper_attempts,
///                  u64 hyper_accepts, string rng, vector<f64> f
///     n_samples    u64
///     samples      n_samples x (u64 iteration, kernel, vector<f64> f)
///
/// where `kernel` is (u8 type, f64 gamma, f64 h_p, f64 jitter).
inline constexpr std::uint32_t kStoreFormatVersion = 1;

void write_store(const SampleStore& store, std::ostream& out);
/// Throws Error(kFormat) on a bad magic, unsupported version or truncation.
SampleStore read_store(std::istream& in);

/// Writes to `path` through a temporary file and rename, so readers never
/// observe a partial file.
void save_store_file(const SampleStore& store, const std::string& path);
SampleStore load_store_file(const std::string& path);

/// FNV-1a hash of the serialized corpus.
std::uint64_t corpus_fingerprint(const Corpus& corpus);

}  // namespace gpstruct
