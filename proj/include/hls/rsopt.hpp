#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "hls/tir.hpp"

namespace hls {

enum class Barrier { BlockEnd, Branch, Loop, Guarded };

std::string_view barrier_name(Barrier b);

/// Constant folding plus re-association of +/- chains: constants are merged
/// and moved to the end, terms keep their left-to-right order.
TExprP simplify(const TExprP& e);

/// Delayed assignments of one scheduling block. Pending values are kept as
/// expressions over the stored (not yet overwritten) object values.
class ReferenceStack {
 public:
  explicit ReferenceStack(const TypedModule& m) : m_(m) {}

  /// Objects whose assignments may be delayed: local scalar registers.
  bool trackable(int obj) const;
  bool pending(int obj) const { return top_.count(obj) > 0; }

  /// Replaces reads of pending objects by their symbolic values.
  TExprP substitute(const TExprP& e) const;

  /// Records `obj <- e` (e in source form, reads the current values).
  void assign(int obj, const TExprP& e);

  /// Emits the delayed assignments in dependency order. With `only`, flushes
  /// just those objects plus every pending entry reading their stored value.
  /// Entries for objects outside `live` are dropped (dead) when `live` is given.
  TBlock flush(Barrier kind, const std::set<int>* only = nullptr, const std::set<int>* live = nullptr);

  /// Stack contents, one line per object: `x: RS_expr(a + 1) RS_self`.
  std::string dump() const;

  const std::vector<std::string>& log() const { return log_; }

 private:
  struct Entry {
    TExprP expr;
    int version = 0;
    int order = 0;                        // statement order of the last write
    std::set<std::pair<int, int>> refs;   // (object, version) read, transitively
    std::vector<std::string> history;     // RS_expr texts, oldest first
  };

  const TypedModule& m_;
  std::map<int, Entry> top_;
  std::map<int, int> version_;
  int counter_ = 0;
  std::vector<std::string> log_;
};

struct RsOptions {
  /// Objects observed after the process body ends (none for real hardware
  /// processes; the property tests observe every local).
  std::set<int> live_out;
  int max_expr_nodes = 32;
  bool keep_log = false;
};

struct RsResult {
  TBlock body;
  std::vector<std::string> log;  // flush dumps when keep_log is set
};

RsResult optimize_process(const TypedModule& m, const TBlock& body, const RsOptions& opt = {});

/// Optimizes every process body in place.
TypedModule optimize_module(TypedModule m);

}  // namespace hls
