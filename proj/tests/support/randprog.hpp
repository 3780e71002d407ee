#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hls::testing {

/// Random single-process program: scalar locals of up to 16 bits, straight
/// line code, bound blocks, branches and for-loops of at most 8 iterations.
/// Every local is copied to an exported global `o_<name>` at the end.
struct RandomProgram {
  std::string source;
  std::vector<std::string> outputs;  // global names
};

RandomProgram random_program(uint64_t seed);

/// Straight-line program with `n` independent assignments (no shared reads).
std::string independent_fixture(int n);

}  // namespace hls::testing
