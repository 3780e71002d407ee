// Sequential AST interpreter (the reference for the equivalence checks).

#include <gtest/gtest.h>

#include "harness.hpp"
#include "hls/parser.hpp"
#include "hls/sema.hpp"

using namespace hls;
using hls::testing::sample;

namespace {

TypedModule module_of(const std::string& src) {
  DiagSink d;
  return analyze(parse_source(src, d), d);
}

int64_t local(const TypedModule& m, const InterpResult& r, const std::string& name) {
  for (const auto& o : m.objects)
    if (o.name == name) return r.store.get(o.id);
  ADD_FAILURE() << "no object " << name;
  return 0;
}

}  // namespace

TEST(Interp, Ex3SumOfOneToTen) {
  TypedModule m = module_of(sample("ex3.cp"));
  auto r = interpret_process(m, "main");
  ASSERT_TRUE(r.completed) << r.error;
  EXPECT_EQ(local(m, r, "s"), 55);
  EXPECT_EQ(local(m, r, "t"), 1);
}

TEST(Interp, Ex2RecurrenceWrapsAtEightBits) {
  TypedModule m = module_of(sample("ex2.cp"));
  auto r = interpret_process(m, "foo");
  ASSERT_TRUE(r.completed) << r.error;
  // d(i) = i + 2 d(i-1) + 1 mod 256
  int64_t d = 0;
  for (int i = 1; i <= 100; ++i) d = (i + 2 * d + 1) & 0xff;
  EXPECT_EQ(r.store.get(m.find_object("d")), d);
  EXPECT_EQ(d, 153);
}

TEST(Interp, BoundBlockReadsPreState) {
  TypedModule m = module_of("process main: begin reg a, b: int[8]; a <- 1; b <- 2; a <- b, b <- a; end;");
  auto r = interpret_process(m, "main");
  EXPECT_EQ(local(m, r, "a"), 2);
  EXPECT_EQ(local(m, r, "b"), 1);
}

TEST(Interp, ExceptionFromSharedFunctionIsCaught) {
  TypedModule m = module_of(sample("ex9.cp"));
  auto r = interpret_process(m, "main");
  ASSERT_TRUE(r.completed) << r.error;
  EXPECT_EQ(r.exception, 0);
  EXPECT_EQ(local(m, r, "d"), 0);
}

TEST(Interp, UncaughtExceptionIsReported) {
  TypedModule m = module_of("exception E; process main: begin reg a: int[8]; a <- 1; raise E; a <- 2; end;");
  auto r = interpret_process(m, "main");
  EXPECT_EQ(r.exception, 1);
  EXPECT_EQ(local(m, r, "a"), 1);
}

TEST(Interp, BitRangesAndMatch) {
  TypedModule m = module_of(
      "process main: begin reg x: logic[8]; reg y: int[8]; x <- 0xf0; x[0 to 1] <- 0b11;"
      " match x with begin when 0xf3: y <- 1; when others: y <- 2; end; end;");
  auto r = interpret_process(m, "main");
  ASSERT_TRUE(r.completed) << r.error;
  EXPECT_EQ(local(m, r, "x"), 0xf3);
  EXPECT_EQ(local(m, r, "y"), 1);
}

TEST(Interp, StepLimitStopsEndlessLoops) {
  TypedModule m = module_of("process main: begin reg a: int[8]; always do a <- a + 1; end;");
  auto r = interpret_process(m, "main", 1000);
  EXPECT_FALSE(r.completed);
}
