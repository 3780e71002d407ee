// Name resolution, typing, replication, folding, value semantics.

#include <gtest/gtest.h>

#include "harness.hpp"
#include "randprog.hpp"
#include "hls/parser.hpp"
#include "hls/sema.hpp"

using namespace hls;
using hls::testing::sample;

namespace {

TypedModule check(const std::string& src, bool fold = false) {
  DiagSink d("t.cp");
  TypedModule m = analyze(parse_source(src, d), d);
  if (fold) m = fold_constants(std::move(m), d);
  return m;
}

std::string error_of(const std::string& src) {
  try {
    check(src);
  } catch (const CompileError& e) {
    return e.diagnostics().back().message;
  }
  return "";
}

}  // namespace

TEST(Types, WrapAndConvert) {
  EXPECT_EQ(wrap(DataType::integer(8), 200), -56);
  EXPECT_EQ(wrap(DataType::logic(8), -1), 255);
  EXPECT_EQ(wrap(DataType::boolean(), 2), 0);
  EXPECT_EQ(convert(DataType::integer(8), DataType::integer(16), -3), -3);
  EXPECT_EQ(convert(DataType::integer(8), DataType::logic(16), -3), 0xfffd);
  EXPECT_EQ(convert(DataType::logic(8), DataType::integer(16), 0xff), 255);
  EXPECT_EQ(convert(DataType::integer(8), DataType::boolean(), 2), 0);
  EXPECT_EQ(convert(DataType::integer(8), DataType::boolean(), 3), 1);
  EXPECT_EQ(type_suffix(DataType::integer(9)), "I9");
  EXPECT_EQ(parse_type_suffix("L8"), DataType::logic(8));
}

TEST(Types, BinaryEvaluationWrapsAtResultWidth) {
  auto i8 = DataType::integer(8);
  EXPECT_EQ(eval_binary(Op::Add, i8, 100, i8, 100), -56);
  EXPECT_EQ(eval_binary(Op::Div, i8, 7, i8, 0), 0);
  EXPECT_EQ(eval_binary(Op::Div, i8, -7, i8, 2), -3);
  EXPECT_EQ(eval_binary(Op::Lsl, DataType::logic(4), 0b1011, i8, 1), 0b0110);
  EXPECT_EQ(eval_binary(Op::Lt, i8, -1, i8, 1), 1);
  EXPECT_EQ(eval_binary(Op::Lt, DataType::logic(8), 255, DataType::logic(8), 1), 0);
}

TEST(Sema, UndefinedAndDuplicateNames) {
  EXPECT_NE(error_of("process main: begin x <- 1; end;").find("undefined symbol 'x'"), std::string::npos);
  EXPECT_NE(error_of("reg a: int[8]; reg a: int[8]; process main: begin a <- 1; end;").find("'a'"),
            std::string::npos);
}

TEST(Sema, StrictOperandTyping) {
  std::string e = error_of("process main: begin reg a: int[8]; reg b: int[12]; a <- a + b; end;");
  EXPECT_NE(e.find("operand type mismatch"), std::string::npos) << e;
  e = error_of("process main: begin reg a: int[8]; reg b: logic[8]; a <- b; end;");
  EXPECT_NE(e.find("explicit conversion"), std::string::npos) << e;
  EXPECT_EQ(error_of("process main: begin reg a: int[8]; reg b: int[12]; a <- b; b <- to_int(to_logic(a)); end;"), "");
  e = error_of("process main: begin reg a: int[4]; a <- 9; end;");
  EXPECT_NE(e.find("does not fit"), std::string::npos) << e;
}

TEST(Sema, BoundBlockRejectsDoubleAssignment) {
  std::string e = error_of("process main: begin reg a: int[8]; a <- 1, a <- 2; end;");
  EXPECT_NE(e.find("assigned twice"), std::string::npos) << e;
}

TEST(Sema, ProcessArraysAreReplicated) {
  TypedModule m = check(sample("ex11.cp"));
  ASSERT_EQ(m.processes.size(), 6u);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(m.processes[static_cast<size_t>(i)].name, "philosopher_" + std::to_string(i));
  EXPECT_EQ(m.processes[5].name, "main");
  for (int i = 0; i < 5; ++i) {
    int f = m.find_object("fork_" + std::to_string(i));
    ASSERT_GE(f, 0);
    EXPECT_EQ(m.obj(f).kind, ObjKind::Semaphore);
    EXPECT_EQ(m.obj(f).policy, SchedPolicy::Fifo);
    EXPECT_EQ(m.obj(f).init, 1);
  }
}

TEST(Sema, SharedFunctionBecomesProcess) {
  TypedModule m = check(sample("ex5.cp"));
  int p = m.find_process("FUN_f");
  ASSERT_GE(p, 0);
  ASSERT_EQ(m.functions.size(), 1u);
  int lock = m.find_object("LOCK_FUN_f");
  ASSERT_GE(lock, 0);
  EXPECT_EQ(m.obj(lock).kind, ObjKind::Mutex);
  EXPECT_GE(m.find_object("ARG_FUN_f_x"), 0);
  EXPECT_GE(m.find_object("RET_FUN_f_y"), 0);
  EXPECT_TRUE(function_interface(m, m.find_object("ARG_FUN_f_x")));
  EXPECT_FALSE(function_interface(m, m.find_object("mon")));
  EXPECT_EQ(object_accessors(m, m.find_object("sem")).size(), 3u);
}

TEST(Sema, EscapingExceptions) {
  TypedModule m = check(sample("ex9.cp"));
  int main = m.main_process();
  EXPECT_TRUE(escaping_exceptions(m, m.processes[static_cast<size_t>(main)].body).empty());
  int f = m.find_process("FUN_foo");
  ASSERT_GE(f, 0);
  auto esc = escaping_exceptions(m, m.processes[static_cast<size_t>(f)].body);
  ASSERT_EQ(esc.size(), 1u);
  EXPECT_EQ(m.exceptions[static_cast<size_t>(esc[0] - 1)], "DIVBYZERO");
}

TEST(Fold, DeadLocalIsRemovedWithNote) {
  TypedModule m = check(sample("ex3.cp"), true);
  int t = -1;
  for (const auto& o : m.objects)
    if (o.name == "t") t = o.id;
  ASSERT_GE(t, 0);
  EXPECT_TRUE(m.obj(t).dead);
  bool noted = false;
  for (const auto& n : m.notes) noted |= n.message.find("'t'") != std::string::npos;
  EXPECT_TRUE(noted);
}

TEST(Fold, ConstantExpressionsCollapse) {
  TypedModule m = check("reg o: int[8]; export o; process main: begin o <- 2 * 3 + 4; end;", true);
  const auto& body = m.processes[0].body;
  ASSERT_EQ(body.size(), 1u);
  ASSERT_EQ(body[0]->rhs->kind, TExprKind::Const);
  EXPECT_EQ(body[0]->rhs->value, 10);
}

TEST(Fold, PreservesInterpretedResults) {
  for (uint64_t seed = 0; seed < 50; ++seed) {
    auto p = hls::testing::random_program(seed);
    TypedModule raw = check(p.source);
    TypedModule folded = check(p.source, true);
    auto a = interpret_process(raw, "main");
    auto b = interpret_process(folded, "main");
    ASSERT_TRUE(a.completed && b.completed);
    for (const auto& o : p.outputs)
      EXPECT_EQ(a.store.get(raw.find_object(o)), b.store.get(folded.find_object(o))) << p.source;
  }
}
