// Reference-stack optimizer.

#include <gtest/gtest.h>

#include "harness.hpp"
#include "hls/parser.hpp"
#include "hls/rsopt.hpp"
#include "hls/sema.hpp"
#include "randprog.hpp"

using namespace hls;

namespace {

struct Rs {
  TypedModule m;
  RsResult r;
  std::string text;
};

TypedModule module_of(const std::string& src) {
  DiagSink d;
  return analyze(parse_source(src, d), d);
}

std::set<int> ids(const TypedModule& m, const std::vector<std::string>& names) {
  std::set<int> out;
  for (const auto& o : m.objects)
    for (const auto& n : names)
      if (o.name == n) out.insert(o.id);
  return out;
}

Rs optimize(const std::string& src, const std::vector<std::string>& live) {
  Rs x{module_of(src), {}, {}};
  RsOptions o;
  o.live_out = ids(x.m, live);
  o.keep_log = true;
  x.r = optimize_process(x.m, x.m.processes[0].body, o);
  x.text = block_text(x.m, x.r.body);
  return x;
}

std::set<int> all_locals(const TypedModule& m) {
  std::set<int> s;
  for (const auto& o : m.objects)
    if (!o.global) s.insert(o.id);
  return s;
}

const char* kEx4 = "process main: begin reg a, b, c, x, y: int[8]; x <- a + b + 1; y <- x + 1 + c; x <- y - 2; end;";

}  // namespace

TEST(RefStack, Ex4DeadYCollapsesToOneAssignment) {
  Rs x = optimize(kEx4, {"x"});
  EXPECT_EQ(x.text, "x <- a + b + c;\n");
}

TEST(RefStack, Ex4LiveYKeepsBothInDependencyOrder) {
  // y = (a + b + 1) + 1 + c, x = y - 2
  Rs x = optimize(kEx4, {"x", "y"});
  EXPECT_EQ(x.text, "y <- a + b + c + 2;\nx <- a + b + c;\n");
}

TEST(RefStack, StepSevenFlushExample) {
  Rs x = optimize("process main: begin reg x, y, v, a: int[8]; x <- 12; y <- x + 1; x <- v; a <- y - 1; end;",
                  {"x", "y", "v", "a"});
  EXPECT_EQ(x.text, "y <- 13;\na <- 12;\nx <- v;\n");
  ASSERT_EQ(x.r.log.size(), 1u);
  EXPECT_NE(x.r.log[0].find("x=[RS_expr(v) RS_expr(12) RS_self]"), std::string::npos) << x.r.log[0];
}

TEST(RefStack, ReadOfPreviousVersionIsEmittedBeforeTheWrite) {
  TypedModule m = module_of("process main: begin reg x, y: int[8]; x <- 0; end;");
  int x = *ids(m, {"x"}).begin();
  int y = *ids(m, {"y"}).begin();
  ReferenceStack rs(m);
  auto i8 = DataType::integer(8);
  // pending {x <- y + 1, y <- 2}: x reads the old y
  rs.assign(x, make_binary(Op::Add, i8, make_obj(y, i8), make_const(i8, 1)));
  rs.assign(y, make_const(i8, 2));
  TBlock out = rs.flush(Barrier::BlockEnd);
  EXPECT_EQ(block_text(m, out), "x <- y + 1;\ny <- 2;\n");
  EXPECT_FALSE(rs.pending(x));
  EXPECT_FALSE(rs.pending(y));
  Store s = Store::zero(m);
  s.set(y, -1, 7);
  auto r = interpret_ast(m, out, s);
  EXPECT_EQ(r.store.get(x), 8);
  EXPECT_EQ(r.store.get(y), 2);
}

TEST(RefStack, SingleAssignmentFlush) {
  TypedModule m = module_of("process main: begin reg x: int[8]; x <- 0; end;");
  int x = *ids(m, {"x"}).begin();
  ReferenceStack rs(m);
  rs.assign(x, make_const(DataType::integer(8), 5));
  EXPECT_TRUE(rs.pending(x));
  EXPECT_EQ(block_text(m, rs.flush(Barrier::BlockEnd)), "x <- 5;\n");
  EXPECT_EQ(rs.dump(), "");
}

TEST(RefStack, GlobalsAreBarriersNotTracked) {
  Rs x = optimize("reg g: int[8]; export g; process main: begin reg a: int[8]; a <- 1; g <- a; a <- g + 1; g <- a; end;",
                  {});
  // the constant is propagated into the first shared write; the second write
  // reads the global, so the pending local is flushed in front of it
  EXPECT_EQ(x.text.rfind("g <- 1;\n", 0), 0u) << x.text;
  EXPECT_NE(x.text.find("a <- g + 1;\ng <- a;"), std::string::npos) << x.text;
  auto r = interpret_ast(x.m, x.r.body, Store::zero(x.m));
  EXPECT_EQ(r.store.get(x.m.find_object("g")), 2);
}

TEST(RefStack, BranchModificationIsPushedBeforeTheBranch) {
  Rs x = optimize(
      "process main: begin reg a, b, c: int[8]; a <- b + 1; if c > 0 then a <- a + 2; b <- a; end;",
      {"a", "b"});
  // a's pending value must be materialised before the conditional update
  EXPECT_EQ(x.text.rfind("a <- b + 1;\nif ", 0), 0u) << x.text;
}

TEST(RefStack, SemanticPreservationOnRandomBodies) {
  int checked = 0;
  for (uint64_t seed = 1000; seed < 1300; ++seed) {
    auto p = hls::testing::random_program(seed);
    TypedModule m = module_of(p.source);
    RsOptions o;
    o.live_out = all_locals(m);
    auto r = optimize_process(m, m.processes[0].body, o);
    auto a = interpret_ast(m, m.processes[0].body, Store::zero(m));
    auto b = interpret_ast(m, r.body, Store::zero(m));
    ASSERT_TRUE(a.completed && b.completed);
    ASSERT_EQ(a.store, b.store) << p.source << "\n---\n" << block_text(m, r.body);
    ++checked;
  }
  EXPECT_EQ(checked, 300);
}

TEST(RefStack, OptimizedBodiesAreNotLonger) {
  for (uint64_t seed = 0; seed < 100; ++seed) {
    auto p = hls::testing::random_program(seed);
    TypedModule m = module_of(p.source);
    auto before = interpret_ast(m, m.processes[0].body, Store::zero(m)).steps;
    auto after = interpret_ast(m, optimize_process(m, m.processes[0].body, {}).body, Store::zero(m)).steps;
    EXPECT_LE(after, before) << p.source;
  }
}
