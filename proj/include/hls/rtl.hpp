#pragma once

#include <set>
#include <string>
#include <vector>

#include "hls/mcode.hpp"
#include "hls/tir.hpp"

namespace hls {

struct StateData {
  enum class Kind { In, Out, Trans, Signal, Cond, Top, TopDef, Def, DefTrans };
  Kind kind = Kind::Trans;
  std::string text;  // one VHDL statement
};

enum class NextKind { Next, Branch, End };

struct StateEntry {
  std::string name;   // S_<label>
  NextKind next = NextKind::Next;
  std::string next_state;  // Next; Branch: taken when cond holds
  std::string cond;        // Branch condition (VHDL boolean)
  std::string else_state;  // Branch: otherwise
  std::vector<std::string> guards;  // GD inputs; the state repeats while one is busy
  bool method_guard = false;        // `not((GD) = ('0'))` form
  std::vector<StateData> data;
};

struct Port {
  std::string prefix;  // REG, ARRAY, SEMA, ...
  std::string object;  // object name (empty for clock/reset)
  std::string op;      // WR, WE, GD, ...
  bool out = false;
  DataType type = DataType::boolean();
  bool sel = false;    // array select vector
  int width = 1;       // select width

  std::string name() const;
};

struct RtlProcess {
  std::string name;
  std::string entity;
  std::vector<StateEntry> states;
  std::vector<Port> ports;
  std::vector<std::pair<std::string, std::string>> signals;    // local name, VHDL type
  std::vector<std::pair<std::string, std::string>> types;      // local array types
  std::vector<std::pair<std::string, std::string>> constants;  // name, "type := value"
  std::vector<std::string> resets;  // data_trans reset assignments
  std::vector<int> alu_units;       // shared ALU units used
};

/// Per-process state list: start state, one state per instruction or bind
/// group, end state.
RtlProcess build_state_list(const TypedModule& m, const MProgram& p, const std::string& module);

/// Readable state list: one block per state with transition and data lines.
std::string state_list_text(const RtlProcess& r);

struct SchedulerSpec {
  int object = -1;
  std::string name;
  ObjKind kind = ObjKind::Reg;
  SchedPolicy policy = SchedPolicy::Static;
  std::vector<std::string> accessors;  // declaration order
  std::set<std::string> ops;
};

/// One scheduler per shared object with a writer or operator. Read-only
/// registers and function interface registers get none.
std::vector<SchedulerSpec> build_schedulers(const TypedModule& m, const std::vector<MProgram>& programs);

std::string scheduler_text(const SchedulerSpec& s);

struct VhdlFile {
  std::string name;
  std::string text;
};

struct VhdlDesign {
  std::vector<VhdlFile> files;  // dependency order: support, processes, top
  std::string manifest;
};

VhdlDesign emit_vhdl(const TypedModule& m, const std::vector<MProgram>& programs, const std::string& module);

/// Support package with the conversion helpers used by the generated code.
std::string support_package();

/// Structural checks: balanced constructs, declared identifiers, every state
/// handled by all three case statements. Returns problems, empty when valid.
std::vector<std::string> validate_vhdl(const VhdlFile& f);

}  // namespace hls
