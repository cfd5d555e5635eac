#pragma once

#include "xce/program.hpp"

namespace xce {

struct RandProgConfig {
  std::uint64_t seed = 0;
  int n_in = 2;
  int n_out = 2;
  int n_intermediates = 8;
  // sampling weights over op categories
  double p_unary = 0.45;
  double p_binary = 0.35;
  double p_accumulate = 0.1;
  double p_reshape = 0.1;
  bool allow_vectors = true;
};

// Samples a well-defined straight-line program: every draw is checked to
// stay finite at a set of probe points before it is kept, every value ends
// up feeding an output, and the traced graph has exactly n_intermediates
// intermediate vertices. Deterministic per seed.
Program random_program(const RandProgConfig& cfg);

}  // namespace xce
