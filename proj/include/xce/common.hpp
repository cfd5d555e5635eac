#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace xce {

using VertexId = std::int32_t;

// Row/column extent of a vertex value. Scalars are (1,1), column vectors
// (r,1). Rank-3 and higher values are not representable.
struct Shape {
  int rows = 1;
  int cols = 1;

  int extent() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
};

enum class ErrorCode {
  DuplicateEdge,
  ShapeMismatch,
  IllegalEndpoint,
  VertexEliminated,
  NotIntermediate,
  AlreadyEliminated,
  IncompleteOrder,
  DuplicateVertex,
  InvalidCode,
  UnsupportedPattern,
  GraphAlreadyModified,
  MaskedAction,
  LogOfNonNegative,
  TooLarge,
  ShapeError,
  UnsupportedOp,
  DomainError,
  InvalidConfig,
  UnknownTask,
  ParseError,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

// Deterministic draws on top of mt19937_64. The std distributions are
// implementation-defined, so golden tests would not survive a stdlib
// change; these helpers pin the mapping.
inline std::uint64_t rng_next(std::mt19937_64& eng) { return eng(); }

inline int rng_int(std::mt19937_64& eng, int n) {
  // n small everywhere in this codebase; modulo bias is irrelevant here.
  return static_cast<int>(eng() % static_cast<std::uint64_t>(n));
}

inline double rng_real(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Uniform on [-1, 1).
inline double rng_signed(std::mt19937_64& eng) {
  return 2.0 * rng_real(eng) - 1.0;
}

// FNV-1a, used for the reproducibility headers printed by the CLI.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace xce
