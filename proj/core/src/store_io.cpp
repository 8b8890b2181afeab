#include "gpstruct/store_io.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "gpstruct/error.hpp"

namespace gpstruct {

namespace {

constexpr std::array<char, 8> kMagic = {'G', 'P', 'S', 'T', 'R', 'U', 'C', 'T'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void vec(const Eigen::VectorXd& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      f64(v[i]);
    }
  }
  void kernel(const KernelConfig& k) {
    u8(k.input_kernel == InputKernel::kLinear ? 0 : 1);
    f64(k.gamma);
    f64(k.h_p);
    f64(k.jitter);
  }

 private:
  void le(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) {
      out_.put(static_cast<char>((v >> (8 * i)) & 0xffU));
    }
  }
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint64_t n = length();
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    check();
    return s;
  }
  Eigen::VectorXd vec() {
    const std::uint64_t n = length();
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      v[i] = f64();
    }
    return v;
  }
  KernelConfig kernel() {
    KernelConfig k;
    const std::uint8_t type = u8();
    if (type > 1) {
      throw Error(ErrorCode::kFormat, "sample store: unknown kernel type");
    }
    k.input_kernel = type == 0 ? InputKernel::kLinear : InputKernel::kSquaredExponential;
    k.gamma = f64();
    k.h_p = f64();
    k.jitter = f64();
    return k;
  }
  void magic() {
    std::array<char, 8> got{};
    in_.read(got.data(), got.size());
    if (!in_ || got != kMagic) {
      throw Error(ErrorCode::kFormat, "not a gpstruct sample store (bad magic)");
    }
  }

 private:
  std::uint64_t length() {
    const std::uint64_t n = u64();
    // Guards against allocating absurd sizes from a corrupt header.
    if (n > (std::uint64_t{1} << 36)) {
      throw Error(ErrorCode::kFormat, "sample store: implausible length field");
    }
    return n;
  }
  std::uint64_t le(int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
      const int c = in_.get();
      if (c == std::char_traits<char>::eof()) {
        throw Error(ErrorCode::kFormat, "sample store is truncated");
      }
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return v;
  }
  void check() {
    if (!in_) {
      throw Error(ErrorCode::kFormat, "sample store is truncated");
    }
  }
  std::istream& in_;
};

}  // namespace

void write_store(const SampleStore& store, std::ostream& out) {
  Writer w(out);
  out.write(kMagic.data(), kMagic.size());
  w.u32(kStoreFormatVersion);
  w.u64(store.thin);
  w.u8(store.hyper_sampling == HyperSampling::kOff ? 0 : 1);
  w.u64(store.data_fingerprint);

  const SamplerState& s = store.final_state;
  w.kernel(s.config);
  w.f64(s.log_lik);
  w.u64(s.iteration);
  w.u64(s.hyper_attempts);
  w.u64(s.hyper_accepts);
  w.str(s.rng.state());
  w.vec(s.f);

  w.u64(store.samples.size());
  for (const Sample& sample : store.samples) {
    w.u64(sample.iteration);
    w.kernel(sample.config);
    w.vec(sample.f);
  }
}

SampleStore read_store(std::istream& in) {
  Reader r(in);
  r.magic();
  const std::uint32_t version = r.u32();
  if (version != kStoreFormatVersion) {
    throw Error(ErrorCode::kFormat, "unsupported sample store version " + std::to_string(version) +
                                        " (expected " + std::to_string(kStoreFormatVersion) + ")");
  }
  SampleStore store;
  store.thin = r.u64();
  const std::uint8_t mode = r.u8();
  if (mode > 1) {
    throw Error(ErrorCode::kFormat, "sample store: unknown hyperparameter mode");
  }
  store.hyper_sampling = mode == 0 ? HyperSampling::kOff : HyperSampling::kPriorWhitening;
  store.data_fingerprint = r.u64();

  SamplerState& s = store.final_state;
  s.config = r.kernel();
  s.log_lik = r.f64();
  s.iteration = r.u64();
  s.hyper_attempts = r.u64();
  s.hyper_accepts = r.u64();
  s.rng.set_state(r.str());
  s.f = r.vec();

  const std::uint64_t n = r.u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    Sample sample;
    sample.iteration = r.u64();
    sample.config = r.kernel();
    sample.f = r.vec();
    store.samples.push_back(std::move(sample));
  }
  return store;
}

void save_store_file(const SampleStore& store, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::kIo, "cannot write '" + tmp + "'");
    }
    write_store(store, out);
    out.flush();
    if (!out) {
      throw Error(ErrorCode::kIo, "write failed for '" + tmp + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw Error(ErrorCode::kIo, "cannot move '" + tmp + "' to '" + path + "': " + ec.message());
  }
}

SampleStore load_store_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open sample store '" + path + "'");
  }
  try {
    return read_store(in);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

std::uint64_t corpus_fingerprint(const Corpus& corpus) {
  std::ostringstream os;
  serialize_corpus(corpus, os);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : os.str()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace gpstruct
