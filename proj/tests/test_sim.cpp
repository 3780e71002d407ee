// Cycle-accurate simulation of whole designs.

#include <gtest/gtest.h>

#include "harness.hpp"
#include "randprog.hpp"

using namespace hls;
using namespace hls::testing;

namespace {

// Cycle at which `process` first entered `state`, -1 if never.
int64_t entered(const std::vector<TraceEvent>& t, const std::string& process, const std::string& state) {
  for (const auto& e : t)
    if (e.process == process && e.kind == "state-enter" && e.detail == state) return e.cycle;
  return -1;
}

SimConfig traced() {
  SimConfig c;
  c.trace = true;
  return c;
}

}  // namespace

TEST(Sim, Ex3CyclesAndResult) {
  Compiled c = compile(sample("ex3.cp"));
  Simulator s(c.module, c.programs);
  SimResult r = s.run(10000);
  EXPECT_EQ(r.termination, Termination::AllEnded);
  EXPECT_EQ(s.value("main.s"), 55);
  // all states are local: start, 2 moves, 10 x (cond, assign, branch, incr), final cond
  EXPECT_EQ(r.cycles, 1 + 2 + 10 * 4 + 1);
}

TEST(Sim, Ex3WithoutFoldingKeepsDeadRegister) {
  CompileOptions o;
  o.fold = false;
  Compiled c = compile(sample("ex3.cp"), o);
  Simulator s(c.module, c.programs);
  s.run(10000);
  EXPECT_EQ(s.value("main.s"), 55);
  EXPECT_EQ(s.value("main.t"), 1);
}

TEST(Sim, Ex2AgreesWithOracleInEveryMode) {
  auto ref = oracle(sample("ex2.cp"), {"d"}, "foo");
  ASSERT_TRUE(ref);
  for (const auto& m : all_modes()) {
    SCOPED_TRACE(m.name());
    Outcome o = simulate(compile(sample("ex2.cp"), options(m)), {"d"});
    EXPECT_EQ(o.termination, Termination::AllEnded);
    EXPECT_EQ(o.values, *ref);
  }
}

TEST(Sim, Ex2CallWaitsForCallee) {
  Compiled c = compile(sample("ex2.cp"));
  Simulator s(c.module, c.programs, traced());
  SimResult r = s.run(10000);
  ASSERT_EQ(r.termination, Termination::AllEnded);
  int64_t foo_end = -1, main_end = -1;
  for (const auto& e : r.trace) {
    if (e.kind != "end") continue;
    (e.process == "foo" ? foo_end : main_end) = e.cycle;
  }
  ASSERT_GE(foo_end, 0);
  EXPECT_GT(main_end, foo_end);
}

TEST(Sim, Ex9ExceptionCaughtAcrossCall) {
  Compiled c = compile(sample("ex9.cp"));
  Simulator s(c.module, c.programs, traced());
  SimResult r = s.run(100000);
  EXPECT_EQ(r.termination, Termination::AllEnded);
  EXPECT_EQ(s.value("main.d"), 0);
  EXPECT_TRUE(r.uncaught.empty());
  // foo ran (and raised) three times: 9, 2, then the zero divisor
  int calls = 0;
  for (const auto& e : r.trace) calls += e.process == "FUN_foo" && e.kind == "start";
  EXPECT_EQ(calls, 3);
  std::vector<std::string> path;
  for (const auto& e : r.trace)
    if (e.kind == "raise" || e.kind == "catch") path.push_back(e.process + " " + e.kind + " " + e.detail);
  EXPECT_EQ(path, (std::vector<std::string>{"FUN_foo raise DIVBYZERO", "main raise DIVBYZERO", "main catch DIVBYZERO"}));
}

TEST(Sim, Ex5FunctionResultsBeforeSemaphoreDeadlock) {
  Compiled c = compile(sample("ex5.cp"));
  Simulator s(c.module, c.programs);
  SimResult r = s.run(100000);
  // three ups against four downs: main waits forever on its second down
  ASSERT_EQ(r.termination, Termination::Deadlock);
  ASSERT_EQ(r.deadlock.size(), 1u);
  EXPECT_EQ(r.deadlock[0].process, "main");
  EXPECT_EQ(r.deadlock[0].object, "sem");
  EXPECT_EQ(r.deadlock[0].op, "down");
  EXPECT_EQ(s.status("consumer1"), ProcStatus::Ended);
  EXPECT_EQ(s.status("consumer2"), ProcStatus::Ended);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(s.value("data_out", i), wrap(DataType::integer(16), i * i)) << i;
}

TEST(Sim, Ex11DeadlocksInFirstRoundUnderBothPolicies) {
  for (auto pol : {SchedPolicy::Static, SchedPolicy::Fifo}) {
    Compiled c = compile(sample("ex11.cp"));
    SimConfig cfg = traced();
    for (int i = 0; i < 5; ++i) cfg.policy["fork_" + std::to_string(i)] = pol;
    Simulator s(c.module, c.programs, cfg);
    SimResult r = s.run(100000);
    ASSERT_EQ(r.termination, Termination::Deadlock);
    ASSERT_EQ(r.deadlock.size(), 5u);
    for (int i = 0; i < 5; ++i) {
      const auto& b = r.deadlock[static_cast<size_t>(i)];
      EXPECT_EQ(b.process, "philosopher_" + std::to_string(i));
      EXPECT_EQ(b.op, "down");
      // philosopher i waits for its second fork, held by its neighbour
      int want = (i + 1) % 5;
      EXPECT_EQ(b.object, "fork_" + std::to_string(want));
      ASSERT_EQ(b.holders.size(), 1u);
      EXPECT_EQ(b.holders[0], "philosopher_" + std::to_string(want));
    }
    // nobody ate: the eating flags were never written
    for (const auto& e : r.trace) EXPECT_FALSE(e.kind == "write" && e.detail.rfind("eating", 0) == 0) << e.detail;
    int deadlock_lines = 0;
    for (const auto& e : r.trace) deadlock_lines += e.kind == "deadlock";
    EXPECT_EQ(deadlock_lines, 5);
    std::string text;
    for (const auto& e : r.trace) text += trace_line(e) + "\n";
    // deterministic
    Simulator again(c.module, c.programs, cfg);
    SimResult r2 = again.run(100000);
    std::string text2;
    for (const auto& e : r2.trace) text2 += trace_line(e) + "\n";
    EXPECT_EQ(text, text2);
  }
}

TEST(Sim, BoundSwapIsAtomicAndOneCycle) {
  const std::string bound =
      "reg x, y: int[8]; export x, y; process main: begin reg a, b: int[8]; a <- 1; b <- 2; a <- b, b <- a; x <- a; "
      "y <- b; end;";
  const std::string seq =
      "reg x, y: int[8]; export x, y; process main: begin reg a, b: int[8]; a <- 1; b <- 2; a <- b; b <- a; x <- a; "
      "y <- b; end;";
  CompileOptions o;
  o.fold = false;
  Outcome ob = simulate(compile(bound, o), {"x", "y"});
  Outcome os = simulate(compile(seq, o), {"x", "y"});
  EXPECT_EQ(ob.values["x"], 2);
  EXPECT_EQ(ob.values["y"], 1);
  EXPECT_EQ(os.values["x"], 2);
  EXPECT_EQ(os.values["y"], 2);
  EXPECT_EQ(os.cycles, ob.cycles + 1);
}

TEST(Sim, GuardedWriteTakesTwoCyclesLocalOne) {
  CompileOptions o;
  o.fold = false;  // keep the dead local
  Compiled c = compile("reg g: int[8]; export g; process main: begin reg a: int[8]; a <- 1; g <- 2; a <- 3; end;", o);
  Simulator s(c.module, c.programs, traced());
  SimResult r = s.run(100);
  ASSERT_EQ(r.termination, Termination::AllEnded);
  int64_t t1 = entered(r.trace, "main", "i1_assign");
  int64_t t2 = entered(r.trace, "main", "i2_assign");
  int64_t t3 = entered(r.trace, "main", "i3_assign");
  EXPECT_EQ(t2 - t1, 1);
  EXPECT_EQ(t3 - t2, 2);
  EXPECT_EQ(s.value("g"), 2);
}

TEST(Sim, UncaughtExceptionIsReported) {
  Compiled c = compile("exception E; reg g: int[8]; export g; process main: begin g <- 1; raise E; g <- 2; end;");
  Simulator s(c.module, c.programs);
  SimResult r = s.run(100);
  EXPECT_EQ(r.termination, Termination::AllEnded);
  EXPECT_EQ(r.uncaught.at("main"), "E");
  EXPECT_EQ(s.value("g"), 1);
}

TEST(Sim, CycleLimit) {
  Compiled c = compile("reg g: int[8]; export g; process main: begin always do g <- g + 1; end;");
  SimResult r = Simulator(c.module, c.programs).run(50);
  EXPECT_EQ(r.termination, Termination::CycleLimit);
  EXPECT_EQ(r.cycles, 50);
}

TEST(Sim, TraceLineIsTabSeparated) {
  EXPECT_EQ(trace_line({12, "main", "write", "d <- 3"}), "12\tmain\twrite\td <- 3");
}

TEST(Sim, WatchRestrictsWriteEvents) {
  Compiled c = compile(sample("ex2.cp"));
  SimConfig cfg;
  cfg.trace = true;
  cfg.trace_states = false;
  cfg.watch = {"d"};
  SimResult r = Simulator(c.module, c.programs, cfg).run(10000);
  int writes = 0;
  for (const auto& e : r.trace) {
    EXPECT_NE(e.kind, "state-enter");
    if (e.kind == "write") {
      ++writes;
      EXPECT_EQ(e.detail.rfind("d <- ", 0), 0u) << e.detail;
    }
  }
  EXPECT_EQ(writes, 101);
}

TEST(Sim, ProcessControl) {
  Compiled c = compile(
      "reg n: int[8]; export n;"
      "process counter: begin always do n <- n + 1; end;"
      "process main: begin counter.start(); wait for 20; counter.stop(); end;");
  Simulator s(c.module, c.programs);
  SimResult r = s.run(1000);
  EXPECT_EQ(r.termination, Termination::AllEnded);
  EXPECT_EQ(s.status("counter"), ProcStatus::Idle);
  int64_t n = s.value("n");
  EXPECT_GT(n, 3);
  EXPECT_LT(n, 20);
}

TEST(Sim, SetValueBeforeRun) {
  Compiled c = compile("reg g, h: int[8]; export g, h; process main: begin h <- g + 1; end;");
  Simulator s(c.module, c.programs);
  s.set_value("g", -1, 41);
  s.run(100);
  EXPECT_EQ(s.value("h"), 42);
  EXPECT_THROW(s.value("nosuch"), std::exception);
}
