#include "randprog.hpp"

#include <random>
#include <sstream>

namespace hls::testing {

namespace {

struct Var {
  std::string name;
  bool is_int;
  int width;
  std::string type() const { return (is_int ? "int[" : "logic[") + std::to_string(width) + "]"; }
};

class Gen {
 public:
  explicit Gen(uint64_t seed) : rng_(seed) {}

  RandomProgram run() {
    int widths[2] = {pick({4, 6, 8}), pick({8, 12, 16})};
    int n = range(3, 6);
    for (int i = 0; i < n; ++i) {
      Var v{std::string(1, static_cast<char>('a' + i)), coin(), widths[range(0, 1)]};
      vars_.push_back(v);
    }
    std::ostringstream body;
    for (const auto& v : vars_) body << "  " << v.name << " <- " << constant(v) << ";\n";
    block(body, 1, 0, range(3, 7));

    RandomProgram p;
    std::ostringstream src;
    for (const auto& v : vars_) {
      src << "reg o_" << v.name << " : " << v.type() << ";\n";
      src << "export o_" << v.name << ";\n";
      p.outputs.push_back("o_" + v.name);
    }
    src << "process main:\nbegin\n";
    for (const auto& v : vars_) src << "  reg " << v.name << " : " << v.type() << ";\n";
    src << body.str();
    for (const auto& v : vars_) src << "  o_" << v.name << " <- " << v.name << ";\n";
    src << "end;\n";
    p.source = src.str();
    return p;
  }

 private:
  std::mt19937_64 rng_;
  std::vector<Var> vars_;
  int loops_ = 0;

  int range(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(int pct = 50) { return range(1, 100) <= pct; }
  int pick(std::initializer_list<int> xs) { return *(xs.begin() + range(0, static_cast<int>(xs.size()) - 1)); }
  const Var& any() { return vars_[static_cast<size_t>(range(0, static_cast<int>(vars_.size()) - 1))]; }

  std::string constant(const Var& t) {
    int hi = t.is_int ? (1 << (t.width - 1)) - 1 : (1 << t.width) - 1;
    return std::to_string(range(0, std::min(hi, 100)));
  }

  struct E {
    std::string text;
    bool constant;
  };

  // Operand of exactly type t: a same-width variable, converted when the
  // base differs, or a constant.
  E leaf(const Var& t, bool allow_const = true) {
    std::vector<const Var*> same;
    for (const auto& v : vars_)
      if (v.width == t.width) same.push_back(&v);
    if (same.empty() || (allow_const && coin(25))) return {constant(t), true};
    const Var& v = *same[static_cast<size_t>(range(0, static_cast<int>(same.size()) - 1))];
    if (v.is_int == t.is_int) return {v.name, false};
    return {(t.is_int ? "to_int(" : "to_logic(") + v.name + ")", false};
  }

  // Constant-only subexpressions are avoided: they are folded during
  // analysis and rejected when the value overflows.
  E expr(const Var& t, int depth) {
    if (depth <= 0 || coin(30)) return leaf(t);
    int k = range(0, 9);
    E a = expr(t, depth - 1);
    if (k == 8) {
      if (a.constant) return a;
      return {"(" + a.text + (coin() ? " lsl " : " lsr ") + std::to_string(range(0, 3)) + ")", false};
    }
    E b = expr(t, depth - 1);
    if (a.constant && b.constant) {
      b = leaf(t, false);
      if (b.constant) return a;
    }
    static const char* ops[] = {"+", "+", "-", "-", "*", "land", "lor", "lxor", "", "/"};
    return {"(" + a.text + " " + ops[k] + " " + b.text + ")", false};
  }

  std::string cond() {
    const Var& t = any();
    static const char* rel[] = {"<", "<=", ">", ">=", "=", "<>"};
    std::string c = expr(t, 1).text + " " + rel[range(0, 5)] + " " + leaf(t, false).text;
    if (coin(20)) {
      const Var& u = any();
      c = "(" + c + ") " + (coin() ? "and" : "or") + " (" + leaf(u, false).text + " " + rel[range(0, 5)] + " " + leaf(u).text + ")";
    }
    return c;
  }

  void indent(std::ostringstream& os, int d) { os << std::string(static_cast<size_t>(2 * d), ' '); }

  void stmt(std::ostringstream& os, int d, int nest) {
    int k = range(0, 9);
    if (k <= 4 || nest >= 2) {
      const Var& v = any();
      indent(os, d);
      os << v.name << " <- " << expr(v, range(1, 3)).text << ";\n";
    } else if (k <= 6) {
      const Var& v = any();
      const Var* w = &any();
      for (int tries = 0; w->name == v.name && tries < 8; ++tries) w = &any();
      indent(os, d);
      if (w->name == v.name) {
        os << v.name << " <- " << expr(v, 2).text << ";\n";
      } else {
        os << v.name << " <- " << expr(v, 2).text << ", " << w->name << " <- " << expr(*w, 2).text << ";\n";
      }
    } else if (k <= 8) {
      indent(os, d);
      os << "if " << cond() << " then\n";
      indent(os, d);
      os << "begin\n";
      block(os, d + 1, nest + 1, range(1, 3));
      indent(os, d);
      os << "end";
      if (coin()) {
        os << "\n";
        indent(os, d);
        os << "else\n";
        indent(os, d);
        os << "begin\n";
        block(os, d + 1, nest + 1, range(1, 3));
        indent(os, d);
        os << "end";
      }
      os << ";\n";
    } else {
      int lo = range(0, 2);
      indent(os, d);
      os << "for L" << loops_++ << " = " << lo << " to " << lo + range(0, 7) << " do\n";
      indent(os, d);
      os << "begin\n";
      block(os, d + 1, nest + 1, range(1, 3));
      indent(os, d);
      os << "end;\n";
    }
  }

  void block(std::ostringstream& os, int d, int nest, int n) {
    for (int i = 0; i < n; ++i) stmt(os, d, nest);
  }
};

}  // namespace

RandomProgram random_program(uint64_t seed) { return Gen(seed).run(); }

std::string independent_fixture(int n) {
  std::ostringstream os;
  for (int i = 0; i < n; ++i) os << "reg x" << i << " : int[8];\nexport x" << i << ";\n";
  os << "process main:\nbegin\n";
  for (int i = 0; i < n; ++i) os << "  reg t" << i << " : int[8];\n";
  for (int i = 0; i < n; ++i) os << "  t" << i << " <- " << i + 1 << ";\n";
  for (int i = 0; i < n; ++i) os << "  x" << i << " <- t" << i << " * " << i + 2 << ";\n";
  os << "end;\n";
  return os.str();
}

}  // namespace hls::testing
