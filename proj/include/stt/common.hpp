#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stt {

// Error taxonomy, mapped to CLI exit codes by the tool:
//   UsageError -> 1, DataError -> 2, ContractViolation -> 3.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class MidiError : public DataError {
 public:
  MidiError(const std::string& msg, std::size_t byte_offset)
      : DataError(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}
  std::size_t byteOffset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

class EmptyMelodyError : public DataError {
 public:
  explicit EmptyMelodyError(const std::string& msg) : DataError(msg) {}
};

class ContractViolation : public std::runtime_error {
 public:
  explicit ContractViolation(const std::string& msg) : std::runtime_error(msg) {}
};

// Deterministic PRNG (splitmix64). std:: distributions are not portable across
// standard libraries, so all randomness in the project flows through this.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t nextU64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint32_t nextU32() { return static_cast<std::uint32_t>(nextU64() >> 32); }

  // Uniform integer in [0, bound). bound must be > 0.
  std::uint32_t uniformInt(std::uint32_t bound) {
    std::uint64_t m = static_cast<std::uint64_t>(nextU32()) * bound;
    return static_cast<std::uint32_t>(m >> 32);
  }

  // Uniform float in [0, 1) with 24-bit resolution.
  float uniformFloat() {
    return static_cast<float>(nextU64() >> 40) * (1.0f / 16777216.0f);
  }

  // Uniform float in [-a, a).
  float uniformSigned(float a) { return (uniformFloat() * 2.0f - 1.0f) * a; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniformInt(static_cast<std::uint32_t>(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// Mixes independent stream identifiers into one seed.
inline std::uint64_t mixSeed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mixSeed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mixSeed(mixSeed(a, b), c);
}

}  // namespace stt
