#pragma once

#include <set>
#include <string>
#include <vector>

#include "hls/mcode.hpp"

namespace hls {

/// One schedulable unit: a data instruction, or a data-only bound group kept whole.
struct DdgNode {
  std::vector<MInstr> instrs;   // members (no bind, no nop)
  std::vector<MInstr> labels;   // labels directly in front of it
  std::set<std::string> reads, writes;
  std::vector<int> preds;       // node indices within the block
  int level = 1;
  int order = 0;                // position in the original program
  bool source_bind = false;     // explicit bounded block: re-emitted as written when alone
  std::vector<MInstr> original; // as written (bind header and nop included)
  // RAM prefetch: moves into temporaries hoisted in front of the group
  std::vector<MInstr> prefetch;
  std::vector<MInstr> guarded_form;  // the unsplit instruction, used when nothing is gained
  int alu_ops = 0;
};

struct BasicBlock {
  std::vector<DdgNode> nodes;
};

/// Either a basic block or control instructions passed through unchanged.
struct Segment {
  bool is_block = false;
  BasicBlock block;
  std::vector<MInstr> control;
};

/// Splits a compacted program at jump targets and control instructions.
/// Guarded data accesses (shared writes, RAM, queues, channels) end a block,
/// except RAM reads into local registers, which become prefetch candidates.
std::vector<Segment> partition(const MProgram& p);

/// Fills preds and level (longest path from a root, roots at level 1).
void build_ddg(BasicBlock& b);

struct SchedOptions {
  int max_par = 0;    // 0: unlimited
  int alu_units = 0;  // shared ALU units available per group, 0: no limit
};

/// Regroups every basic block into bind groups by ascending DDG level.
MProgram schedule(const MProgram& p, const SchedOptions& opt = {});

/// DDG of all blocks in DOT syntax.
std::string ddg_dot(const MProgram& p);

}  // namespace hls
