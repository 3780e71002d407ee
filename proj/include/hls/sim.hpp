#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hls/interp.hpp"
#include "hls/mcode.hpp"
#include "hls/tir.hpp"

namespace hls {

enum class ProcStatus { Idle, Running, Ended };
enum class Termination { AllEnded, Deadlock, CycleLimit };

std::string_view termination_name(Termination t);

struct TraceEvent {
  int64_t cycle = 0;
  std::string process;
  std::string kind;  // state-enter, block, unblock, grant, write, start, stop, end, raise, deadlock
  std::string detail;
};

struct SimConfig {
  std::map<std::string, SchedPolicy> policy;  // per-object scheduler overrides
  bool trace = false;
  bool trace_states = true;         // state-enter events (when tracing)
  std::vector<std::string> watch;   // write events for these objects
};

struct SimLoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BlockedProcess {
  std::string process;
  std::string object;
  std::string op;
  std::vector<std::string> holders;  // processes holding the object (mutex owner, semaphore takers)
};

struct SimResult {
  Termination termination = Termination::AllEnded;
  int64_t cycles = 0;
  Store store;
  std::vector<BlockedProcess> deadlock;
  std::map<std::string, std::string> uncaught;  // process -> exception
  std::vector<TraceEvent> trace;
};

/// Cycle-accurate interpreter of a set of process programs and the shared
/// objects of a module. Only `main` runs at cycle 0.
class Simulator {
 public:
  /// `programs[i]` belongs to `m.processes[i]`.
  Simulator(const TypedModule& m, const std::vector<MProgram>& programs, SimConfig cfg = {});
  ~Simulator();
  Simulator(Simulator&&) noexcept;

  /// One clock edge.
  void step();
  SimResult run(int64_t max_cycles);

  /// Blocked processes if the system can make no further progress.
  std::optional<std::vector<BlockedProcess>> detect_deadlock() const;
  bool all_ended() const;

  int64_t cycle() const;
  ProcStatus status(const std::string& process) const;
  std::string state(const std::string& process) const;
  /// Global object value, or `process.name` for locals.
  int64_t value(const std::string& name, int64_t index = -1) const;
  void set_value(const std::string& name, int64_t index, int64_t v);
  const Store& store() const;
  const std::vector<TraceEvent>& trace() const;
  /// Number of processes (main included) and of abstract objects.
  size_t process_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Formats a trace line: cycle, process, kind, detail separated by tabs.
std::string trace_line(const TraceEvent& e);

}  // namespace hls
