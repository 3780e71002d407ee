// Microcode lowering, compaction, assembler text.

#include <gtest/gtest.h>

#include "harness.hpp"
#include "hls/parser.hpp"
#include "hls/sema.hpp"
#include "randprog.hpp"

using namespace hls;
using hls::testing::sample;

namespace {

TypedModule folded(const std::string& src) {
  DiagSink d;
  return fold_constants(analyze(parse_source(src, d), d), d);
}

MProgram raw(const std::string& src, const std::string& proc, const LowerOptions& o = {}) {
  TypedModule m = folded(src);
  return lower_process(m, m.find_process(proc), o);
}

std::vector<std::string> labels(const MProgram& p) {
  std::vector<std::string> out;
  for (const auto& i : p.code)
    if (i.op == MOpcode::Label) out.push_back(i.target);
  return out;
}

const MProgram& program(const Compiled& c, const std::string& name) {
  for (const auto& p : c.programs)
    if (p.process == name) return p;
  throw std::runtime_error("no process " + name);
}

}  // namespace

TEST(Lowering, Ex3LabelsBeforeCompaction) {
  MProgram p = raw(sample("ex3.cp"), "main");
  EXPECT_EQ(labels(p), (std::vector<std::string>{"i1_assign", "i1_assign_end", "i2_for_loop", "i2_for_loop_cond",
                                                 "i3_assign", "i3_assign_end", "i4_branch", "i4_branch_end",
                                                 "i2_for_loop_incr", "i2_for_loop_end"}));
}

TEST(Lowering, Ex3CompactedSequence) {
  MProgram p = hls::testing::compile(sample("ex3.cp")).programs[0];
  EXPECT_EQ(opcode_sequence(p), (std::vector<std::string>{"move", "move", "bind2", "expr", "falsejump", "expr",
                                                          "bind2", "expr", "falsejump", "bind3", "expr", "jump"}));
  EXPECT_EQ(labels(p), (std::vector<std::string>{"i1_assign", "i2_for_loop", "i2_for_loop_cond", "i3_assign",
                                                 "i4_branch", "i2_for_loop_incr"}));
  const std::string code =
      "    i1_assign:\n"
      "        move (s,0)\n"
      "    i2_for_loop:\n"
      "        move (LOOP_i_0,1)\n"
      "    i2_for_loop_cond:\n"
      "        bind (2)\n"
      "        expr ($immed.[1],10,>=,LOOP_i_0)\n"
      "        falsejump ($immed.[1],%END)\n"
      "    i3_assign:\n"
      "        expr (s,s,+,LOOP_i_0)\n"
      "    i4_branch:\n"
      "        bind (2)\n"
      "        expr ($immed.[1],s,=,0)\n"
      "        falsejump ($immed.[1],i2_for_loop_incr)\n"
      "    i2_for_loop_incr:\n"
      "        bind (3)\n"
      "        expr (LOOP_i_0,LOOP_i_0,+,1)\n"
      "        nop\n"
      "        jump (i2_for_loop_cond)\n";
  EXPECT_NE(emit_text(p).find(code), std::string::npos) << emit_text(p);
}

TEST(Lowering, Ex2Shape) {
  Compiled c = hls::testing::compile(sample("ex2.cp"));
  const MProgram& p = program(c, "foo");
  const MDecl* loop = p.find_decl("LOOP_i_0");
  ASSERT_NE(loop, nullptr);
  EXPECT_EQ(loop->kind, "register");
  EXPECT_EQ(loop->type, DataType::integer(9));
  const MDecl* d = p.find_decl("d");
  ASSERT_NE(d, nullptr);
  EXPECT_EQ(d->type, DataType::logic(8));
  EXPECT_EQ(labels(p), (std::vector<std::string>{"i1_assign", "i2_for_loop", "i2_for_loop_cond", "i3_bind_to_4",
                                                 "i5_assign", "i2_for_loop_incr"}));
  const std::string body =
      "    i3_bind_to_4:\n"
      "        bind (3)\n"
      "        move (a,d)\n"
      "        expr (b,d,+,1)\n"
      "        nop\n"
      "    i5_assign:\n"
      "        bind (2)\n"
      "        expr ($immed.[2],LOOP_i_0:L8,+,a)\n"
      "        expr (d,$immed.[2],+,b)\n";
  EXPECT_NE(emit_text(p).find(body), std::string::npos) << emit_text(p);
  EXPECT_NE(emit_text(p).find("import:\nbegin\n  register d: L8\nend"), std::string::npos);
}

TEST(Assembler, RoundTripAllSamplesAndModes) {
  for (const char* f : {"ex2.cp", "ex3.cp", "ex5.cp", "ex9.cp", "ex11.cp"})
    for (const auto& mode : hls::testing::all_modes()) {
      Compiled c = hls::testing::compile(sample(f), hls::testing::options(mode));
      for (const auto& p : c.programs) {
        SCOPED_TRACE(std::string(f) + " " + p.process + " " + mode.name());
        std::string text = emit_text(p);
        MProgram back = parse_text(text);
        EXPECT_EQ(back, p);
        EXPECT_EQ(emit_text(back), text);
        EXPECT_EQ(check_program(p), "");
      }
    }
}

TEST(Assembler, RoundTripRawPrograms) {
  for (uint64_t seed = 0; seed < 100; ++seed) {
    auto src = hls::testing::random_program(seed).source;
    for (auto alu : {LowerOptions::Alu::Flat, LowerOptions::Alu::Shared}) {
      LowerOptions o;
      o.alu = alu;
      MProgram p = raw(src, "main", o);
      EXPECT_EQ(parse_text(emit_text(p)), p) << src;
    }
  }
}

TEST(Assembler, ParseErrorsCarryLines) {
  auto line_of = [](const std::string& text) {
    try {
      parse_text(text);
    } catch (const MParseError& e) {
      return e.line;
    }
    return -1;
  };
  const std::string head = "process main:\nimport:\nbegin\nend\n\ndata:\nbegin\n  register a: I8\nend\n\ncode:\nbegin\n";
  EXPECT_EQ(line_of(head + "  frob (a,1)\nend\n"), 13);
  EXPECT_EQ(line_of(head + "  move (a)\nend\n"), 13);
  EXPECT_EQ(line_of(head + "  l1:\n  move (a,1)\n  l1:\n  nop\nend\n"), 15);
  EXPECT_GT(line_of(head + "  jump (nowhere)\nend\n"), 0);
  EXPECT_GT(line_of(head + "  bind (3)\n  move (a,1)\nend\n"), 0);
  EXPECT_EQ(line_of(head + "  move (a,1)\nend\n"), -1);
}

TEST(Compaction, RemovesNopsAndRetargetsToEnd) {
  MProgram r = raw(sample("ex3.cp"), "main");
  MProgram c = compact(r);
  for (size_t i = 0; i < c.code.size(); ++i) {
    if (c.code[i].op != MOpcode::Nop) continue;
    // a nop survives only as a member of a bind group
    bool inside = false;
    for (size_t j = 0; j < i; ++j)
      if (c.code[j].op == MOpcode::Bind && j + static_cast<size_t>(c.code[j].count) >= i) inside = true;
    EXPECT_TRUE(inside) << i;
  }
  bool end = false;
  for (const auto& i : c.code)
    if (i.op == MOpcode::FalseJump && i.target == "%END") end = true;
  EXPECT_TRUE(end);
  EXPECT_EQ(compact(c), c);
  EXPECT_LT(program_states(c).size(), program_states(r).size());
}

TEST(Compaction, StatesFollowBindGroups) {
  MProgram p = hls::testing::compile(sample("ex3.cp")).programs[0];
  std::map<std::string, int> targets;
  auto states = program_states(p, &targets);
  ASSERT_EQ(states.size(), 6u);
  EXPECT_EQ(states[2].label, "i2_for_loop_cond");
  EXPECT_TRUE(states[2].bind);
  EXPECT_EQ(states[2].count, 3);
  EXPECT_EQ(targets["%END"], 6);
  EXPECT_EQ(targets["i2_for_loop_incr"], 5);
}

TEST(Lowering, SharedAluUsesTemporaries) {
  LowerOptions o;
  o.alu = LowerOptions::Alu::Shared;
  MProgram p = raw(sample("ex2.cp"), "foo", o);
  std::string text = emit_text(p);
  EXPECT_NE(text.find("$temp.["), std::string::npos) << text;
  EXPECT_NE(text.find(",$alu.[1])"), std::string::npos) << text;
}
