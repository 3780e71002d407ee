#include "hls/bbsched.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

namespace hls {

namespace {

bool global(const MProgram& p, const std::string& name) {
  for (const auto& d : p.imports)
    if (d.name == name) return true;
  return false;
}

std::string kind_of(const MProgram& p, const std::string& name) {
  const MDecl* d = p.find_decl(name);
  return d ? d->kind : "";
}

bool ram_or_stream(const std::string& kind) { return kind == "variable" || kind == "queue" || kind == "channel"; }

std::string key(const MOperand& o) {
  if (o.kind == MOperandKind::Object) return o.name;
  if (o.kind == MOperandKind::Temp) return "$temp.[" + std::to_string(o.value) + "]";
  return {};
}

/// Objects read by an operand: the operand itself and its index.
void operand_reads(const MOperand& o, std::set<std::string>& out) {
  if (std::string k = key(o); !k.empty()) out.insert(k);
  for (const auto& i : o.index) operand_reads(i, out);
}

void instr_access(const MInstr& in, std::set<std::string>& reads, std::set<std::string>& writes) {
  if (!in.is_data()) return;
  const MOperand& d = in.ops[0];
  if (std::string k = key(d); !k.empty()) writes.insert(k);
  for (const auto& i : d.index) operand_reads(i, reads);
  // a bit-range write keeps the other bits
  if (d.lo >= 0 && !key(d).empty()) reads.insert(key(d));
  for (size_t k = 1; k < in.ops.size(); ++k) operand_reads(in.ops[k], reads);
}

/// True if the instruction needs a scheduler grant or a RAM cycle.
bool guarded(const MProgram& p, const MInstr& in) {
  if (!in.is_data()) return false;
  const MOperand& d = in.ops[0];
  if (d.kind == MOperandKind::Object && (global(p, d.name) || ram_or_stream(kind_of(p, d.name)))) return true;
  bool g = false;
  std::function<void(const MOperand&)> rd = [&](const MOperand& o) {
    if (o.kind == MOperandKind::Object && ram_or_stream(kind_of(p, o.name))) g = true;
    for (const auto& i : o.index) rd(i);
  };
  for (const auto& i : d.index) rd(i);
  for (size_t k = 1; k < in.ops.size(); ++k) rd(in.ops[k]);
  return g;
}

int alu_count(const std::vector<MInstr>& is) {
  int n = 0;
  for (const auto& i : is) n += i.op == MOpcode::Expr && i.unit > 0;
  return n;
}

class TempPool {
 public:
  explicit TempPool(MProgram& p) : p_(p) {
    for (const auto& d : p.data)
      if (d.kind == "temp") ++next_;
  }
  MOperand get(DataType t) {
    MDecl d{"temp", "$temp.[" + std::to_string(++next_) + "]", t, 0};
    p_.data.push_back(d);
    return MOperand::numbered(MOperandKind::Temp, next_);
  }

 private:
  MProgram& p_;
  int64_t next_ = 0;
};

/// Splits RAM reads of `in` into prefetch moves. Returns false if the
/// instruction has other guarded parts.
bool make_prefetch(const MProgram& p, const MInstr& in, TempPool& pool, DdgNode& n) {
  const MOperand& d = in.ops[0];
  if (d.kind != MOperandKind::Object || global(p, d.name) || ram_or_stream(kind_of(p, d.name))) return false;
  bool other = false;
  std::function<void(const MOperand&)> check = [&](const MOperand& o) {
    std::string k = o.kind == MOperandKind::Object ? kind_of(p, o.name) : "";
    if (k == "queue" || k == "channel") other = true;
    for (const auto& i : o.index) {
      if (i.kind == MOperandKind::Object && kind_of(p, i.name) == "variable") other = true;
      check(i);
    }
  };
  for (const auto& i : d.index) check(i);
  for (size_t k = 1; k < in.ops.size(); ++k) check(in.ops[k]);
  if (other) return false;

  MTypeEnv env(p);
  MInstr rewritten = in;
  for (size_t k = 1; k < rewritten.ops.size(); ++k) {
    MOperand& o = rewritten.ops[k];
    if (o.kind != MOperandKind::Object || kind_of(p, o.name) != "variable") continue;
    MOperand src = o;
    src.conv.reset();
    MOperand t = pool.get(env.type(src));
    MInstr mv;
    mv.op = MOpcode::Move;
    mv.ops = {t, src};
    n.prefetch.push_back(mv);
    t.conv = o.conv;
    o = t;
  }
  n.guarded_form = {in};
  n.instrs = {rewritten};
  return true;
}

void renumber_immeds(std::vector<MInstr>& is, int64_t& next) {
  std::map<int64_t, int64_t> map;
  std::function<void(MOperand&, bool)> fix = [&](MOperand& o, bool def) {
    if (o.kind == MOperandKind::Immed) {
      if (def || !map.count(o.value)) map[o.value] = ++next;
      o.value = map[o.value];
    }
    for (auto& i : o.index) fix(i, false);
  };
  for (auto& in : is) {
    for (size_t k = 1; k < in.ops.size(); ++k) fix(in.ops[k], false);
    if (!in.ops.empty()) fix(in.ops[0], in.is_data());
  }
}

}  // namespace

std::vector<Segment> partition(const MProgram& p) {
  std::set<std::string> targets;
  for (const auto& i : p.code)
    if (i.op == MOpcode::Jump || i.op == MOpcode::FalseJump) targets.insert(i.target);

  MProgram scratch = p;  // temp declarations for prefetches are discarded here
  TempPool pool(scratch);
  std::vector<Segment> out;
  Segment cur;
  cur.is_block = true;
  std::vector<MInstr> labels;
  auto close = [&]() {
    if (!cur.block.nodes.empty()) out.push_back(std::move(cur));
    cur = Segment{};
    cur.is_block = true;
  };
  auto control = [&](std::vector<MInstr> is) {
    close();
    Segment s;
    s.control = std::move(labels);
    labels.clear();
    for (auto& i : is) s.control.push_back(std::move(i));
    out.push_back(std::move(s));
  };
  auto node = [&](DdgNode n) {
    n.labels = std::move(labels);
    labels.clear();
    for (const auto& i : n.instrs) instr_access(i, n.reads, n.writes);
    n.alu_ops = alu_count(n.instrs);
    cur.block.nodes.push_back(std::move(n));
  };

  for (size_t i = 0; i < p.code.size();) {
    const MInstr& in = p.code[i];
    if (in.op == MOpcode::Label) {
      if (targets.count(in.target)) control({in});
      else labels.push_back(in);
      ++i;
      continue;
    }
    if (in.op == MOpcode::Bind) {
      size_t n = std::min(static_cast<size_t>(in.count), p.code.size() - i - 1);
      std::vector<MInstr> members(p.code.begin() + static_cast<long>(i) + 1,
                                  p.code.begin() + static_cast<long>(i + n) + 1);
      bool data = std::all_of(members.begin(), members.end(), [&](const MInstr& m) {
        return (m.is_data() && !guarded(p, m)) || m.op == MOpcode::Nop;
      });
      std::vector<MInstr> whole(p.code.begin() + static_cast<long>(i), p.code.begin() + static_cast<long>(i + n) + 1);
      if (data) {
        DdgNode d;
        d.order = static_cast<int>(i);
        d.original = whole;
        d.source_bind = std::any_of(members.begin(), members.end(), [](const MInstr& m) { return m.op == MOpcode::Nop; });
        for (auto& m : members)
          if (m.op != MOpcode::Nop) d.instrs.push_back(m);
        node(std::move(d));
      } else {
        control(whole);
      }
      i += n + 1;
      continue;
    }
    if (in.is_data()) {
      DdgNode d;
      d.order = static_cast<int>(i);
      d.original = {in};
      if (!guarded(p, in)) {
        d.instrs = {in};
        node(std::move(d));
      } else if (make_prefetch(p, in, pool, d)) {
        node(std::move(d));
      } else {
        control({in});
      }
      ++i;
      continue;
    }
    control({in});
    ++i;
  }
  if (!labels.empty()) {
    close();
    Segment s;
    s.control = std::move(labels);
    out.push_back(std::move(s));
  } else {
    close();
  }
  return out;
}

void build_ddg(BasicBlock& b) {
  auto meets = [](const std::set<std::string>& a, const std::set<std::string>& c) {
    for (const auto& x : a)
      if (c.count(x)) return true;
    return false;
  };
  for (size_t v = 0; v < b.nodes.size(); ++v) {
    DdgNode& n = b.nodes[v];
    n.preds.clear();
    n.level = 1;
    for (size_t u = 0; u < v; ++u) {
      const DdgNode& m = b.nodes[u];
      // RAW, WAR, WAW
      if (meets(m.writes, n.reads) || meets(m.reads, n.writes) || meets(m.writes, n.writes)) {
        n.preds.push_back(static_cast<int>(u));
        n.level = std::max(n.level, m.level + 1);
      }
    }
  }
}

MProgram schedule(const MProgram& p, const SchedOptions& opt) {
  MProgram out = p;
  out.code.clear();
  TempPool pool(out);
  // partition again against `out` so prefetch temporaries are declared in it
  std::vector<Segment> segs;
  {
    MProgram probe = p;
    segs = partition(probe);
  }
  int64_t immed = 0;
  for (auto& s : segs) {
    if (!s.is_block) {
      for (auto& i : s.control) out.code.push_back(std::move(i));
      continue;
    }
    BasicBlock& b = s.block;
    build_ddg(b);
    int max_level = 0;
    for (const auto& n : b.nodes) max_level = std::max(max_level, n.level);
    for (int lv = 1; lv <= max_level; ++lv) {
      std::vector<DdgNode*> members;
      for (auto& n : b.nodes)
        if (n.level == lv) members.push_back(&n);
      // split by max_par and ALU units, keeping order
      std::vector<std::vector<DdgNode*>> groups;
      std::vector<DdgNode*> g;
      int alu = 0;
      for (DdgNode* n : members) {
        bool full = (opt.max_par > 0 && static_cast<int>(g.size()) >= opt.max_par) ||
                    (opt.alu_units > 0 && !g.empty() && alu + n->alu_ops > opt.alu_units);
        if (full) {
          groups.push_back(std::move(g));
          g.clear();
          alu = 0;
        }
        g.push_back(n);
        alu += n->alu_ops;
      }
      if (!g.empty()) groups.push_back(std::move(g));

      for (auto& grp : groups) {
        const DdgNode* first = *std::min_element(grp.begin(), grp.end(),
                                                 [](const DdgNode* a, const DdgNode* c) { return a->order < c->order; });
        if (grp.size() == 1) {
          const DdgNode& n = *grp[0];
          for (const auto& l : n.labels) out.code.push_back(l);
          if (!n.guarded_form.empty()) {
            out.code.push_back(n.guarded_form[0]);
          } else {
            for (const auto& i : n.original) out.code.push_back(i);
          }
          continue;
        }
        for (const auto& l : first->labels) out.code.push_back(l);
        std::vector<MInstr> body;
        for (DdgNode* n : grp) {
          for (const auto& pf : n->prefetch) {
            // temporaries are declared in the output program
            MInstr m = pf;
            DataType t = MTypeEnv(p).type(m.ops[1]);
            MOperand tmp = pool.get(t);
            MOperand old = m.ops[0];
            m.ops[0] = tmp;
            out.code.push_back(m);
            for (auto& in : n->instrs)
              for (size_t k = 1; k < in.ops.size(); ++k)
                if (in.ops[k].kind == MOperandKind::Temp && in.ops[k].value == old.value) {
                  auto conv = in.ops[k].conv;
                  in.ops[k] = tmp;
                  in.ops[k].conv = conv;
                }
          }
          std::vector<MInstr> is = n->instrs;
          renumber_immeds(is, immed);
          for (auto& i : is) body.push_back(std::move(i));
        }
        int unit = 0;
        for (auto& i : body)
          if (i.op == MOpcode::Expr && i.unit > 0) i.unit = ++unit;
        MInstr bh;
        bh.op = MOpcode::Bind;
        bh.count = static_cast<int>(body.size());
        out.code.push_back(bh);
        for (auto& i : body) out.code.push_back(std::move(i));
        immed = 0;
      }
    }
  }
  return out;
}

std::string ddg_dot(const MProgram& p) {
  std::ostringstream os;
  os << "digraph \"" << p.process << "\" {\n";
  int bi = 0;
  for (auto& s : partition(p)) {
    if (!s.is_block) continue;
    ++bi;
    build_ddg(s.block);
    os << "  subgraph cluster_" << bi << " {\n    label=\"block " << bi << "\";\n";
    for (size_t i = 0; i < s.block.nodes.size(); ++i) {
      const DdgNode& n = s.block.nodes[i];
      std::string text;
      for (const auto& in : n.instrs) text += (text.empty() ? "" : "\\n") + instr_text(in);
      std::string esc;
      for (char c : text) esc += c == '"' ? std::string("\\\"") : std::string(1, c);
      os << "    n" << bi << "_" << i << " [label=\"" << esc << "\\nlevel " << n.level << "\"];\n";
    }
    for (size_t i = 0; i < s.block.nodes.size(); ++i)
      for (int u : s.block.nodes[i].preds) os << "    n" << bi << "_" << u << " -> n" << bi << "_" << i << ";\n";
    os << "  }\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace hls
