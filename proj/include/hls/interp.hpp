#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hls/tir.hpp"

namespace hls {

/// Values of all storage objects; arrays hold one entry per element.
struct Store {
  std::vector<std::vector<int64_t>> values;

  /// All registers zero; arrays sized from the object table.
  static Store zero(const TypedModule& m);

  int64_t get(int obj, int64_t index = -1) const;
  void set(int obj, int64_t index, int64_t v);
  bool operator==(const Store&) const = default;
};

/// Canonical value written to `l` given the stored word and the new value
/// (bit-range writes merge into the old word).
int64_t merge_write(const TypedModule& m, const TLhs& l, int64_t old, int64_t v);

struct InterpResult {
  Store store;
  int exception = 0;       // uncaught exception id, 0 if none
  bool completed = false;  // false: step limit or unsupported construct
  std::string error;
  int64_t steps = 0;
};

/// Sequential big-step evaluation of a process body. Shared function calls run
/// the function body inline; synchronisation methods are not supported.
InterpResult interpret_ast(const TypedModule& m, const TBlock& body, Store store,
                           int64_t max_steps = 10'000'000);

/// Interprets the body of a process by name.
InterpResult interpret_process(const TypedModule& m, const std::string& process, int64_t max_steps = 10'000'000);

}  // namespace hls
