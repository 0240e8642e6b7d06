#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "isa/error.hpp"

namespace isa {

static_assert(std::endian::native == std::endian::little,
              "binary file formats assume a little-endian host");

// ---------------------------------------------------------------------------
// Hashing (FNV-1a, 64 bit). Used for pipeline stage digests.
// ---------------------------------------------------------------------------

constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr uint64_t kFnvPrime = 0x100000001b3ULL;

inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

inline uint64_t fnv1a(const std::string& s, uint64_t h = kFnvOffset) {
  return fnv1a(s.data(), s.size(), h);
}

// First bytes of a file, for magic checks that should outrank checksums.
inline std::string peek_magic(const std::string& path, size_t n = 4) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path);
  std::string magic(n, '\0');
  in.read(magic.data(), std::streamsize(n));
  magic.resize(size_t(in.gcount()));
  return magic;
}

inline uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path);
  uint64_t h = kFnvOffset;
  char chunk[1 << 16];
  while (in) {
    in.read(chunk, sizeof(chunk));
    h = fnv1a(chunk, static_cast<size_t>(in.gcount()), h);
  }
  return h;
}

inline std::string hex_digest(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

// ---------------------------------------------------------------------------
// Deterministic RNG. std::mt19937_64 for the stream, explicit scaling for the
// distributions so results do not depend on the standard library vendor.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(splitmix(seed)) {}

  uint64_t next() {
    // xorshift64* — small, fast, and stable across platforms.
    uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545F4914F6CDD1DULL;
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be > 0.
  uint64_t uniform_index(uint64_t n) { return next() % n; }

  // Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Derive an independent stream, e.g. one per tree or per view.
  Rng fork(uint64_t salt) const {
    uint64_t h = fnv1a(&state_, sizeof(state_));
    h = fnv1a(&salt, sizeof(salt), h);
    return Rng(h);
  }

 private:
  static uint64_t splitmix(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return (x ^ (x >> 31)) | 1ULL;  // keep the xorshift state nonzero
  }

  uint64_t state_;
};

// ---------------------------------------------------------------------------
// Little-endian binary IO with a running FNV checksum. Writers append the
// checksum as a trailer; readers verify it so truncation and bit rot surface
// as CorruptFileError instead of garbage data.
// ---------------------------------------------------------------------------

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::string& path)
      : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot open for writing: " + path);
  }

  void bytes(const void* p, size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    checksum_ = fnv1a(p, n, checksum_);
  }

  void u8(uint8_t v) { bytes(&v, 1); }
  void u32(uint32_t v) { bytes(&v, 4); }
  void u64(uint64_t v) { bytes(&v, 8); }
  void i32(int32_t v) { bytes(&v, 4); }
  void f32(float v) { bytes(&v, 4); }
  void f64(double v) { bytes(&v, 8); }

  void str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }

  // Writes the checksum trailer and closes. Call exactly once.
  void finish() {
    const uint64_t digest = checksum_;
    out_.write(reinterpret_cast<const char*>(&digest), 8);
    out_.close();
    if (!out_) throw Error("write failure: " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
  uint64_t checksum_ = kFnvOffset;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::string& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open: " + path);
    buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    if (buf_.size() < 8) throw CorruptFileError("truncated file: " + path);
    payload_ = buf_.size() - 8;
    uint64_t stored;
    std::memcpy(&stored, buf_.data() + payload_, 8);
    if (fnv1a(buf_.data(), payload_) != stored)
      throw CorruptFileError("checksum mismatch (truncated or corrupted): " + path);
  }

  void bytes(void* p, size_t n) {
    if (pos_ + n > payload_)
      throw CorruptFileError("truncated record in: " + path_);
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }

  uint8_t u8() { uint8_t v; bytes(&v, 1); return v; }
  uint32_t u32() { uint32_t v; bytes(&v, 4); return v; }
  uint64_t u64() { uint64_t v; bytes(&v, 8); return v; }
  int32_t i32() { int32_t v; bytes(&v, 4); return v; }
  float f32() { float v; bytes(&v, 4); return v; }
  double f64() { double v; bytes(&v, 8); return v; }

  std::string str() {
    const uint32_t n = u32();
    if (n > payload_ - pos_) throw CorruptFileError("truncated string in: " + path_);
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }

  bool at_end() const { return pos_ == payload_; }

  void expect_end() const {
    if (!at_end()) throw CorruptFileError("trailing bytes in: " + path_);
  }

 private:
  std::string path_;
  std::vector<char> buf_;
  size_t payload_ = 0;
  size_t pos_ = 0;
};

}  // namespace isa
