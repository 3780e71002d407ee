#include "hls/sema.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>

namespace hls {

using namespace ast;

namespace {

struct TypeInfo {
  TypeClass cls = TypeClass::Struct;
  std::vector<std::pair<std::string, DataType>> fields;      // struct
  std::map<std::string, std::pair<int, int>> bits;           // bit struct: lo, hi
  std::vector<std::string> members;                          // enum
  DataType type;                                             // bit struct / enum storage
};

struct Scope;
using ScopeP = std::shared_ptr<Scope>;
using Chain = std::vector<ScopeP>;

enum class EK {
  Object,
  Struct,
  ObjArray,
  ProcArray,
  ValueConst,
  TypedConst,
  EnumConst,
  Loop,
  Alias,
  Function,
  Exception,
  Type,
  Block,
};

struct Entity {
  EK kind = EK::Object;
  int id = -1;
  std::vector<int> elems;
  DataType type;
  int64_t value = 0;
  std::map<std::string, int> fields;
  const TypeInfo* tinfo = nullptr;
  ExprP alias;
  Chain chain;
  std::optional<DataType> alias_type;
  SourceLoc loc;
};

struct Scope {
  std::map<std::string, Entity> names;
};

struct LoopInfo {
  int obj = -1;
  int width = 2;
};

struct FuncInfo {
  const Decl* decl = nullptr;
  bool inline_fn = false;
  int index = -1;    // TFunction index (shared)
  int process = -1;  // FUN_ process index
  int state = 0;     // 0 = pending, 1 = in progress, 2 = done
};

struct Pending {
  int process = -1;
  const Body* body = nullptr;
  std::optional<int64_t> hash;
  std::string function;  // non-empty: shared function body
  Params params;
};

bool is_ph(DataType t) { return t.width < 0; }
DataType ph_type(int loop) { return DataType{BaseType::Int, -(loop + 1)}; }
int ph_loop(DataType t) { return -t.width - 1; }

std::string tname(DataType t) { return is_ph(t) ? std::string("loop counter") : type_name(t); }

int64_t time_scale_num(const std::string& unit) {
  if (unit == "nanosec") return 1;
  if (unit == "microsec") return 1000;
  if (unit == "millisec") return 1000000;
  if (unit == "sec") return 1000000000;
  return 0;
}

int64_t freq_scale(const std::string& unit) {
  if (unit == "hz") return 1;
  if (unit == "kilohz") return 1000;
  if (unit == "megahz") return 1000000;
  if (unit == "gigahz") return 1000000000;
  return 0;
}

class Sema {
 public:
  Sema(const Module& mod, DiagSink& d) : ast_(mod), d_(d) {}

  TypedModule run();

 private:
  const Module& ast_;
  DiagSink& d_;
  TypedModule m_;

  ScopeP globals_ = std::make_shared<Scope>();
  Chain chain_;
  int proc_ = -1;
  std::optional<int64_t> hash_;
  std::vector<LoopInfo> loops_;
  std::map<std::pair<int, std::string>, int> loop_counter_;
  std::map<int, int> temp_counter_;
  std::map<std::string, FuncInfo> funcs_;
  std::map<std::pair<int, std::string>, ScopeP> inline_locals_;
  std::vector<std::string> inline_stack_;
  std::map<int, int> signal_writer_;
  std::vector<std::unique_ptr<TypeInfo>> types_;
  std::vector<const Decl*> exports_;
  std::vector<Pending> pending_;
  std::map<std::string, int> implicit_blocks_;

  [[noreturn]] void error(SourceLoc loc, const std::string& msg) { fail(d_, loc, msg); }

  // ------------------------------------------------------------- scopes

  Entity* find(const std::string& name) {
    for (auto it = chain_.rbegin(); it != chain_.rend(); ++it) {
      auto f = (*it)->names.find(name);
      if (f != (*it)->names.end()) return &f->second;
    }
    return nullptr;
  }

  Entity& lookup(const std::string& name, SourceLoc loc) {
    Entity* e = find(name);
    if (!e) error(loc, "undefined symbol '" + name + "'");
    return *e;
  }

  void bind(const ScopeP& scope, const std::string& name, Entity e, SourceLoc loc) {
    if (scope->names.count(name) || (scope != globals_ && globals_->names.count(name)))
      error(loc, "redefinition of '" + name + "'");
    e.loc = loc;
    scope->names.emplace(name, std::move(e));
  }

  struct ChainGuard {
    Sema& s;
    Chain saved;
    ChainGuard(Sema& sema, Chain c) : s(sema), saved(std::move(sema.chain_)) { s.chain_ = std::move(c); }
    ~ChainGuard() { s.chain_ = std::move(saved); }
  };

  /// Follows aliases whose target is a plain name.
  Entity& resolve_ident(const Expr& e, Chain& chain_out) {
    Entity& ent = lookup(e.name, e.loc);
    if (ent.kind == EK::Alias && ent.alias->kind == ExprKind::Ident) {
      ChainGuard g(*this, ent.chain);
      Entity& inner = resolve_ident(*ent.alias, chain_out);
      return inner;
    }
    chain_out = chain_;
    return ent;
  }

  // ------------------------------------------------------------- objects

  int add_object(Object o, SourceLoc loc) {
    o.id = static_cast<int>(m_.objects.size());
    o.loc = loc;
    if (!o.global && proc_ >= 0) {
      o.owner = m_.processes[static_cast<size_t>(proc_)].name;
      m_.processes[static_cast<size_t>(proc_)].locals.push_back(o.id);
    }
    for (const auto& x : m_.objects) {
      bool clash = x.name == o.name && (x.global || o.global || x.owner == o.owner);
      if (clash && x.kind != ObjKind::Process && o.kind != ObjKind::Process)
        error(loc, "name collision: '" + o.name + "' is already defined");
      if (clash && (x.kind == ObjKind::Process) != (o.kind == ObjKind::Process))
        error(loc, "name collision: '" + o.name + "' is already defined");
    }
    m_.objects.push_back(std::move(o));
    return m_.objects.back().id;
  }

  Object& obj(int id) { return m_.objects[static_cast<size_t>(id)]; }

  // ------------------------------------------------------- const evaluation

  /// Value of a compile-time constant expression, or nullopt if `e` depends on
  /// run-time state.
  std::optional<int64_t> try_const(const Expr& e, bool allow_log = false) {
    switch (e.kind) {
      case ExprKind::Int:
      case ExprKind::Logic:
      case ExprKind::Char:
      case ExprKind::Bool: return e.value;
      case ExprKind::Hash:
        if (!hash_) error(e.loc, "'#' used outside of a process array");
        return *hash_;
      case ExprKind::Time: return time_cycles(e);
      case ExprKind::String: return std::nullopt;
      case ExprKind::Ident: {
        Entity* ent = find(e.name);
        if (!ent) error(e.loc, "undefined symbol '" + e.name + "'");
        switch (ent->kind) {
          case EK::ValueConst:
          case EK::TypedConst:
          case EK::EnumConst: return ent->value;
          case EK::Alias: {
            ChainGuard g(*this, ent->chain);
            return try_const(*ent->alias, allow_log);
          }
          default: return std::nullopt;
        }
      }
      case ExprKind::Unary: {
        auto a = try_const(*e.args[0], allow_log);
        if (!a) return std::nullopt;
        return eval_unary(e.op, DataType::integer(64), *a);
      }
      case ExprKind::Binary: {
        auto a = try_const(*e.args[0], allow_log);
        auto b = try_const(*e.args[1], allow_log);
        if (!a || !b) return std::nullopt;
        if (e.op == Op::Log && !allow_log)
          error(e.loc, "'~' is only allowed in constant definitions");
        if ((e.op == Op::Div || e.op == Op::Mod) && *b == 0)
          error(e.loc, "division by zero in constant expression");
        if (e.op == Op::Concat) return std::nullopt;
        DataType t = DataType::integer(64);
        return eval_binary(e.op, t, *a, t, *b);
      }
      case ExprKind::Convert: {
        auto a = try_const(*e.args[0], allow_log);
        if (!a) return std::nullopt;
        if (e.name == "to_bool") return *a != 0 ? 1 : 0;
        return *a;
      }
      default: return std::nullopt;
    }
  }

  int64_t const_eval(const Expr& e, bool allow_log = false) {
    auto v = try_const(e, allow_log);
    if (!v) error(e.loc, "constant expression expected");
    return *v;
  }

  int64_t time_cycles(const Expr& e) {
    int64_t v = const_eval(*e.args[0]);
    if (int64_t ns = time_scale_num(e.name)) {
      __int128 c = static_cast<__int128>(v) * ns * m_.clock_hz;
      __int128 q = (c + 500000000) / 1000000000;
      return static_cast<int64_t>(q);
    }
    int64_t f = freq_scale(e.name) * v;
    if (f <= 0) error(e.loc, "invalid frequency");
    return (m_.clock_hz + f / 2) / f;
  }

  int64_t frequency_hz(const Expr& e) {
    if (e.kind != ExprKind::Time || freq_scale(e.name) == 0)
      error(e.loc, "frequency value expected (e.g. 50 megahz)");
    return const_eval(*e.args[0]) * freq_scale(e.name);
  }

  // ------------------------------------------------------------ type specs

  DataType resolve_type(const TypeSpec& ts, const TypeInfo** user, bool allow_value = false) {
    if (user) *user = nullptr;
    auto width = [&](int def) {
      if (!ts.width) {
        if (def) return def;
        error(ts.loc, "type '" + ts.name + "' requires a width");
      }
      int64_t w = const_eval(*ts.width, true);
      if (w < 1 || w > kMaxWidth)
        error(ts.loc, "data width " + std::to_string(w) + " out of range 1..64");
      return static_cast<int>(w);
    };
    if (ts.name == "int") return DataType::integer(width(0));
    if (ts.name == "logic") return DataType::logic(width(1));
    if (ts.name == "bool") return DataType::boolean();
    if (ts.name == "char") return DataType::character();
    if (ts.name == "value") {
      if (!allow_value) error(ts.loc, "'value' type is only allowed for constants");
      return DataType::integer(64);
    }
    Entity* e = find(ts.name);
    if (!e || e->kind != EK::Type) error(ts.loc, "unknown type '" + ts.name + "'");
    if (user) *user = e->tinfo;
    return e->tinfo->type;
  }

  // ---------------------------------------------------------- declarations

  std::string param_string(const Params& ps, const std::string& name, const std::string& def) {
    const Param* p = find_param(ps, name);
    if (!p || !p->value) return def;
    if (p->value->kind == ExprKind::String || p->value->kind == ExprKind::Ident) return p->value->name;
    return std::to_string(const_eval(*p->value));
  }

  std::optional<int64_t> param_int(const Params& ps, const std::string& name) {
    const Param* p = find_param(ps, name);
    if (!p || !p->value) return std::nullopt;
    return const_eval(*p->value);
  }

  void apply_policy(Object& o, const Params& ps, SourceLoc loc) {
    std::string s = param_string(ps, "scheduler", "");
    if (s.empty()) s = param_string(ps, "schedule", "static");
    if (s == "fifo") o.policy = SchedPolicy::Fifo;
    else if (s == "static") o.policy = SchedPolicy::Static;
    else error(loc, "unknown scheduler policy '" + s + "' (expected \"static\" or \"fifo\")");
  }

  int make_abstract(const std::string& name, const std::string& type, const Params& ps, bool global,
                    SourceLoc loc) {
    Object o;
    o.name = name;
    o.global = global;
    if (type == "mutex") o.kind = ObjKind::Mutex;
    else if (type == "semaphore") o.kind = ObjKind::Semaphore;
    else if (type == "event") o.kind = ObjKind::Event;
    else if (type == "barrier") o.kind = ObjKind::Barrier;
    else if (type == "timer") o.kind = ObjKind::Timer;
    else {
      o.kind = ObjKind::Stub;
      o.stub_type = type;
    }
    if (o.kind != ObjKind::Stub) apply_policy(o, ps, loc);
    if (o.kind == ObjKind::Semaphore) {
      if (auto v = param_int(ps, "depth")) o.depth = static_cast<int>(*v);
      if (auto v = param_int(ps, "init")) o.init = *v;
      if (o.depth < 1 || o.init < 0 || o.init > o.depth)
        error(loc, "semaphore requires 1 <= depth and 0 <= init <= depth");
    }
    if (o.kind == ObjKind::Event) o.latched = has_flag(ps, "latch") || has_flag(ps, "latched");
    if (o.kind == ObjKind::Timer) {
      if (auto v = param_int(ps, "mode")) o.timer_mode = static_cast<int>(*v);
      if (const Param* p = find_param(ps, "time"); p && p->value) o.interval = const_eval(*p->value);
      if (o.timer_mode != 0 && o.timer_mode != 1) error(loc, "timer mode must be 0 or 1");
    }
    return add_object(std::move(o), loc);
  }

  int make_queue(const std::string& name, bool channel, DataType t, const Params& ps, bool global,
                 SourceLoc loc) {
    Object o;
    o.name = name;
    o.kind = channel ? ObjKind::Channel : ObjKind::Queue;
    o.type = t;
    o.global = global;
    apply_policy(o, ps, loc);
    if (!channel) {
      if (auto v = param_int(ps, "depth")) o.depth = static_cast<int>(*v);
      if (o.depth < 1) error(loc, "queue depth must be at least 1");
      if (o.depth > 256) error(loc, "queue depth " + std::to_string(o.depth) + " exceeds 256");
    } else {
      std::string model = param_string(ps, "model", "buffered");
      if (const Param* p = find_param(ps, "buffered"); p && p->value)
        model = const_eval(*p->value) ? "buffered" : "unbuffered";
      if (model != "buffered" && model != "unbuffered")
        error(loc, "channel model must be \"buffered\" or \"unbuffered\"");
      o.buffered = model == "buffered";
      o.depth = 1;
    }
    return add_object(std::move(o), loc);
  }

  int ram_block(const std::string& block, bool global, SourceLoc loc) {
    if (!block.empty()) {
      Entity* e = find(block);
      if (!e || e->kind != EK::Block) error(loc, "unknown RAM block '" + block + "'");
      return e->id;
    }
    std::string name = "RAM_" + (global ? m_.name : m_.processes[static_cast<size_t>(proc_)].name);
    auto it = implicit_blocks_.find(name);
    if (it != implicit_blocks_.end()) return it->second;
    Object b;
    b.name = name;
    b.kind = ObjKind::RamBlock;
    b.global = global;
    b.inferred = true;
    b.type = DataType::logic(1);
    int id = add_object(std::move(b), loc);
    implicit_blocks_[name] = id;
    return id;
  }

  int make_storage(const std::string& name, ObjKind kind, DataType t, int size, const std::string& block,
                   bool global, SourceLoc loc) {
    Object o;
    o.name = name;
    o.kind = kind;
    o.type = t;
    o.global = global;
    o.array_size = size;
    if (kind == ObjKind::Var) {
      int b = ram_block(block, global, loc);
      Object& bo = obj(b);
      o.block = b;
      o.cell = bo.cells;
      bo.cells += std::max(1, size);
      bo.type = DataType::logic(std::max(bo.type.width, t.width));
    }
    return add_object(std::move(o), loc);
  }

  void declare(const Decl& d, const ScopeP& scope, bool global, const std::string& prefix) {
    switch (d.kind) {
      case DeclKind::Open: return;
      case DeclKind::Object: {
        if (d.obj == ObjClass::Const) {
          for (const auto& n : d.names) {
            Entity e;
            int64_t v = const_eval(*d.init, true);
            if (d.type.name == "value") {
              e.kind = EK::ValueConst;
            } else {
              e.kind = EK::TypedConst;
              e.type = resolve_type(d.type, nullptr);
              if (!fits(e.type, v) && !(e.type.base == BaseType::Logic && fits(DataType::integer(e.type.width), v)))
                error(d.loc, "constant " + std::to_string(v) + " does not fit " + type_name(e.type));
              v = wrap(e.type, v);
            }
            e.value = v;
            bind(scope, n, e, d.loc);
          }
          return;
        }
        for (const auto& n : d.names) {
          if (d.obj == ObjClass::Queue || d.obj == ObjClass::Channel) {
            DataType t = resolve_type(d.type, nullptr);
            Entity e;
            e.kind = EK::Object;
            e.id = make_queue(prefix + n, d.obj == ObjClass::Channel, t, d.params, global, d.loc);
            bind(scope, n, e, d.loc);
            continue;
          }
          const TypeInfo* ti = nullptr;
          DataType t = resolve_type(d.type, &ti);
          ObjKind k = d.obj == ObjClass::Reg ? ObjKind::Reg : d.obj == ObjClass::Var ? ObjKind::Var : ObjKind::Sig;
          Entity e;
          if (ti && ti->cls == TypeClass::Struct) {
            e.kind = EK::Struct;
            for (const auto& [fname, ft] : ti->fields)
              e.fields[fname] = make_storage(prefix + n + "_" + fname, k, ft, 0, d.block, global, d.loc);
          } else {
            if (ti && ti->cls == TypeClass::Port) error(d.loc, "port types can only be used by components");
            e.kind = EK::Object;
            e.tinfo = ti;
            e.id = make_storage(prefix + n, k, t, 0, d.block, global, d.loc);
          }
          bind(scope, n, e, d.loc);
        }
        return;
      }
      case DeclKind::RamBlock:
        for (const auto& n : d.names) {
          Object b;
          b.name = prefix + n;
          b.kind = ObjKind::RamBlock;
          b.global = global;
          b.type = DataType::logic(1);
          Entity e;
          e.kind = EK::Block;
          e.id = add_object(std::move(b), d.loc);
          bind(scope, n, e, d.loc);
        }
        return;
      case DeclKind::Abstract:
        for (const auto& n : d.names) {
          Entity e;
          e.kind = EK::Object;
          e.id = make_abstract(prefix + n, d.type_name, d.params, global, d.loc);
          if (obj(e.id).kind != ObjKind::Stub && obj(e.id).kind != ObjKind::Timer && !global)
            error(d.loc, "synchronisation objects must be defined at module level");
          bind(scope, n, e, d.loc);
        }
        return;
      case DeclKind::Component:
        for (const auto& n : d.names) {
          Object o;
          o.name = prefix + n;
          o.kind = ObjKind::Stub;
          o.stub_type = d.type_name;
          o.global = global;
          Entity e;
          e.kind = EK::Object;
          e.id = add_object(std::move(o), d.loc);
          bind(scope, n, e, d.loc);
        }
        return;
      case DeclKind::Array: declare_array(d, scope, global, prefix); return;
      case DeclKind::Type: declare_type(d, scope); return;
      case DeclKind::Export: exports_.push_back(&d); return;
      case DeclKind::Exception:
        if (!global) error(d.loc, "exceptions must be defined at module level");
        for (const auto& n : d.names) {
          m_.exceptions.push_back(n);
          Entity e;
          e.kind = EK::Exception;
          e.id = static_cast<int>(m_.exceptions.size());
          bind(scope, n, e, d.loc);
        }
        return;
      case DeclKind::Process:
      case DeclKind::Function:
      case DeclKind::TopStmt: error(d.loc, "nested process or function definitions are not allowed");
    }
  }

  void declare_array(const Decl& d, const ScopeP& scope, bool global, const std::string& prefix) {
    if (d.sizes.size() != 1) error(d.loc, "multi-dimensional arrays are not supported");
    int64_t size = const_eval(*d.sizes[0], true);
    if (size < 1 || size > 65536) error(d.loc, "array size " + std::to_string(size) + " out of range");
    int n = static_cast<int>(size);
    for (const auto& name : d.names) {
      Entity e;
      switch (d.arr) {
        case ArrayClass::Reg:
        case ArrayClass::Var:
        case ArrayClass::Sig: {
          const TypeInfo* ti = nullptr;
          DataType t = resolve_type(d.type, &ti);
          if (ti && ti->cls != TypeClass::Enum) error(d.loc, "arrays of structure types are not supported");
          ObjKind k = d.arr == ArrayClass::Reg ? ObjKind::Reg : d.arr == ArrayClass::Var ? ObjKind::Var : ObjKind::Sig;
          e.kind = EK::Object;
          e.id = make_storage(prefix + name, k, t, n, d.block, global, d.loc);
          break;
        }
        case ArrayClass::Queue:
        case ArrayClass::Channel: {
          DataType t = resolve_type(d.type, nullptr);
          e.kind = EK::ObjArray;
          for (int i = 0; i < n; ++i)
            e.elems.push_back(make_queue(prefix + name + "_" + std::to_string(i), d.arr == ArrayClass::Channel, t,
                                         d.params, global, d.loc));
          break;
        }
        case ArrayClass::Object: {
          e.kind = EK::ObjArray;
          for (int i = 0; i < n; ++i)
            e.elems.push_back(make_abstract(prefix + name + "_" + std::to_string(i), d.type_name, d.params, global, d.loc));
          if (!global && obj(e.elems[0]).kind != ObjKind::Stub)
            error(d.loc, "synchronisation objects must be defined at module level");
          break;
        }
        case ArrayClass::Process: error(d.loc, "process arrays must be defined at module level");
      }
      bind(scope, name, e, d.loc);
    }
  }

  void declare_type(const Decl& d, const ScopeP& scope) {
    auto ti = std::make_unique<TypeInfo>();
    ti->cls = d.tclass;
    switch (d.tclass) {
      case TypeClass::Struct:
        for (const auto& f : d.fields) {
          const TypeInfo* inner = nullptr;
          DataType t = resolve_type(f.type, &inner);
          if (inner && inner->cls == TypeClass::Struct) error(f.loc, "nested structure types are not supported");
          ti->fields.emplace_back(f.name, t);
        }
        ti->type = DataType::logic(1);
        break;
      case TypeClass::BitStruct: {
        int next = 0, width = 0;
        for (const auto& f : d.fields) {
          int64_t a = const_eval(*f.lo, true);
          int lo, hi;
          if (f.hi) {
            int64_t b = const_eval(*f.hi, true);
            lo = static_cast<int>(std::min(a, b));
            hi = static_cast<int>(std::max(a, b));
          } else {
            if (a < 1) error(f.loc, "bit field width must be positive");
            lo = next;
            hi = next + static_cast<int>(a) - 1;
          }
          if (lo < 0 || hi >= kMaxWidth) error(f.loc, "bit range out of range 0..63");
          next = hi + 1;
          width = std::max(width, hi + 1);
          ti->bits[f.name] = {lo, hi};
        }
        ti->type = DataType::logic(width);
        break;
      }
      case TypeClass::Enum: {
        int n = static_cast<int>(d.fields.size());
        ti->type = DataType::logic(unsigned_bits(static_cast<uint64_t>(n)));
        int v = 1;
        for (const auto& f : d.fields) {
          ti->members.push_back(f.name);
          Entity e;
          e.kind = EK::EnumConst;
          e.type = ti->type;
          e.value = v++;
          bind(scope, f.name, e, f.loc);
        }
        break;
      }
      case TypeClass::Port:
        ti->type = DataType::logic(1);
        break;
    }
    Entity e;
    e.kind = EK::Type;
    e.tinfo = ti.get();
    types_.push_back(std::move(ti));
    bind(scope, d.names[0], e, d.loc);
  }

  // -------------------------------------------------------- module level

  int new_process(const std::string& name, SourceLoc loc) {
    TProcess p;
    p.name = name;
    p.loc = loc;
    Object o;
    o.name = name;
    o.kind = ObjKind::Process;
    p.obj = add_object(std::move(o), loc);
    m_.processes.push_back(std::move(p));
    return static_cast<int>(m_.processes.size()) - 1;
  }

  void declare_function(const Decl& d) {
    const std::string& name = d.names[0];
    FuncInfo fi;
    fi.decl = &d;
    fi.inline_fn = has_flag(d.params, "inline");
    Entity e;
    e.kind = EK::Function;
    if (!fi.inline_fn) {
      TFunction tf;
      tf.name = name;
      fi.process = new_process("FUN_" + name, d.loc);
      m_.processes[static_cast<size_t>(fi.process)].function = static_cast<int>(m_.functions.size());
      tf.process = fi.process;
      for (const auto& f : d.formals) {
        if (!f.typed) error(f.loc, "parameter '" + f.name + "' of shared function '" + name + "' needs a type");
        tf.args.push_back(make_storage("ARG_FUN_" + name + "_" + f.name, ObjKind::Reg, resolve_type(f.type, nullptr), 0,
                                       "", true, f.loc));
        obj(tf.args.back()).inferred = true;
      }
      for (const auto& f : d.returns) {
        if (!f.typed) error(f.loc, "return parameter '" + f.name + "' of shared function '" + name + "' needs a type");
        tf.rets.push_back(make_storage("RET_FUN_" + name + "_" + f.name, ObjKind::Reg, resolve_type(f.type, nullptr), 0,
                                       "", true, f.loc));
        obj(tf.rets.back()).inferred = true;
      }
      Object lock;
      lock.name = "LOCK_FUN_" + name;
      lock.kind = ObjKind::Mutex;
      lock.inferred = true;
      tf.lock = add_object(std::move(lock), d.loc);
      fi.index = static_cast<int>(m_.functions.size());
      e.id = fi.index;
      m_.functions.push_back(std::move(tf));
      Pending p;
      p.process = fi.process;
      p.body = &d.body;
      p.function = name;
      pending_.push_back(p);
    }
    bind(globals_, name, e, d.loc);
    funcs_[name] = fi;
  }

  void top_stmt(const Stmt& s) {
    switch (s.kind) {
      case StmtKind::Block:
        for (const auto& b : s.body) top_stmt(*b);
        return;
      case StmtKind::For: {
        int64_t a = const_eval(*s.expr), b = const_eval(*s.expr2);
        int64_t step = s.step ? const_eval(*s.step) : 1;
        if (step <= 0) error(s.loc, "loop step must be positive");
        auto frame = std::make_shared<Scope>();
        chain_.push_back(frame);
        for (int64_t v = a; s.downto ? v >= b : v <= b; v += s.downto ? -step : step) {
          Entity e;
          e.kind = EK::ValueConst;
          e.value = v;
          frame->names[s.name] = e;
          top_stmt(*s.then_s);
        }
        chain_.pop_back();
        return;
      }
      case StmtKind::Method: {
        int o = static_obj_target(*s.expr);
        Object& ob = obj(o);
        if (ob.kind == ObjKind::Stub) {
          if (ob.stub_type == "system" && s.name == "clock") {
            if (s.args.size() != 1) error(s.loc, "clock expects one frequency argument");
            m_.clock_hz = frequency_hz(*s.args[0]);
            if (m_.clock_hz <= 0) error(s.loc, "clock frequency must be positive");
          }
          return;  // inert configuration of stub objects
        }
        if (ob.kind == ObjKind::Timer && s.name == "time" && s.args.size() == 1) {
          ob.interval = const_eval(*s.args[0]);
          return;
        }
        if (ob.kind == ObjKind::Timer && s.name == "mode" && s.args.size() == 1) {
          ob.timer_mode = static_cast<int>(const_eval(*s.args[0]));
          return;
        }
        if (ob.kind == ObjKind::Semaphore && s.name == "init" && s.args.size() == 1) {
          ob.init = const_eval(*s.args[0]);
          if (ob.init < 0 || ob.init > ob.depth) error(s.loc, "semaphore init value out of range");
          return;
        }
        error(s.loc, "method '" + s.name + "' of " + std::string(obj_kind_name(ob.kind)) +
                         " '" + ob.name + "' cannot be used at module level");
      }
      case StmtKind::Map: return;  // component port mapping: inert
      default: error(s.loc, "only configuration calls and for-loops are allowed at module level");
    }
  }

  /// Object designated by a statically resolvable target expression.
  int static_obj_target(const Expr& t) {
    if (t.kind == ExprKind::Ident) {
      Chain c;
      Entity& e = resolve_ident(t, c);
      if (e.kind == EK::Object) return e.id;
      if (e.kind == EK::ObjArray || e.kind == EK::ProcArray) error(t.loc, "'" + t.name + "' requires an index");
      error(t.loc, "'" + t.name + "' is not an object");
    }
    if (t.kind == ExprKind::Index && t.args[0]->kind == ExprKind::Ident) {
      Chain c;
      Entity& e = resolve_ident(*t.args[0], c);
      if (e.kind != EK::ObjArray && e.kind != EK::ProcArray)
        error(t.loc, "'" + t.args[0]->name + "' is not an object array");
      auto v = try_const(*t.args[1]);
      if (!v) error(t.loc, "dynamic selection of object array elements is not allowed here");
      if (*v < 0 || *v >= static_cast<int64_t>(e.elems.size()))
        error(t.loc, "index " + std::to_string(*v) + " out of range for '" + t.args[0]->name + "'");
      return e.elems[static_cast<size_t>(*v)];
    }
    error(t.loc, "object reference expected");
  }

  // ------------------------------------------------------------- typing

  void note_value(int k, int64_t v) { loops_[static_cast<size_t>(k)].width = std::max(loops_[static_cast<size_t>(k)].width, signed_bits(v)); }

  void note_ctx(int k, DataType t, SourceLoc loc) {
    if (is_ph(t)) return;
    if (t.base == BaseType::Bool) error(loc, "loop counter used as bool");
    int w = t.width + (t.base == BaseType::Int ? 0 : 1);
    auto& L = loops_[static_cast<size_t>(k)];
    L.width = std::max(L.width, std::min(w, kMaxWidth));
  }

  /// Type of an expression that does not depend on its context.
  std::optional<DataType> rigid(const Expr& e) {
    switch (e.kind) {
      case ExprKind::Int:
      case ExprKind::Logic:
      case ExprKind::Hash:
      case ExprKind::Time:
      case ExprKind::String: return std::nullopt;
      case ExprKind::Char: return DataType::character();
      case ExprKind::Bool: return DataType::boolean();
      case ExprKind::Ident: {
        Entity& ent = lookup(e.name, e.loc);
        switch (ent.kind) {
          case EK::Object: {
            const Object& o = obj(ent.id);
            if (o.is_storage() || o.kind == ObjKind::Queue || o.kind == ObjKind::Channel) return o.type;
            return std::nullopt;
          }
          case EK::TypedConst:
          case EK::EnumConst: return ent.type;
          case EK::Alias: {
            if (ent.alias_type) return ent.alias_type;
            ChainGuard g(*this, ent.chain);
            return rigid(*ent.alias);
          }
          default: return std::nullopt;
        }
      }
      case ExprKind::Index: {
        if (e.args[0]->kind != ExprKind::Ident) return std::nullopt;
        Chain c;
        Entity& ent = resolve_ident(*e.args[0], c);
        if (ent.kind == EK::Object) return obj(ent.id).type;
        if (ent.kind == EK::ObjArray && !ent.elems.empty()) return obj(ent.elems[0]).type;
        return std::nullopt;
      }
      case ExprKind::Member: {
        if (e.args[0]->kind != ExprKind::Ident) return std::nullopt;
        Chain c;
        Entity& ent = resolve_ident(*e.args[0], c);
        if (ent.kind == EK::Struct) {
          auto it = ent.fields.find(e.name);
          if (it != ent.fields.end()) return obj(it->second).type;
        }
        if (ent.kind == EK::Object && ent.tinfo && ent.tinfo->cls == TypeClass::BitStruct) {
          auto it = ent.tinfo->bits.find(e.name);
          if (it != ent.tinfo->bits.end()) return DataType::logic(it->second.second - it->second.first + 1);
        }
        return std::nullopt;
      }
      case ExprKind::Bit: return DataType::logic(1);
      case ExprKind::Range: {
        auto a = try_const(*e.args[1]);
        auto b = try_const(*e.args[2]);
        if (!a || !b) return std::nullopt;
        return DataType::logic(static_cast<int>(std::abs(*a - *b)) + 1);
      }
      case ExprKind::Unary:
        if (e.op == Op::Not) return DataType::boolean();
        return rigid(*e.args[0]);
      case ExprKind::Binary: {
        if (is_relational(e.op) || is_boolean(e.op)) return DataType::boolean();
        if (e.op == Op::Concat) {
          auto a = concat_width(*e.args[0]);
          auto b = concat_width(*e.args[1]);
          if (a && b) return DataType::logic(std::min(kMaxWidth, *a + *b));
          return std::nullopt;
        }
        if (e.op == Op::Lsl || e.op == Op::Lsr) return rigid(*e.args[0]);
        if (auto a = rigid(*e.args[0])) return a;
        return rigid(*e.args[1]);
      }
      case ExprKind::Convert: {
        auto a = rigid(*e.args[0]);
        if (e.name == "to_bool") return DataType::boolean();
        if (e.name == "to_char") return DataType::character();
        if (!a) return std::nullopt;
        if (e.name == "to_int") return DataType::integer(a->width);
        return DataType::logic(a->width);
      }
      case ExprKind::Call: {
        auto it = funcs_.find(e.name);
        if (it == funcs_.end()) return std::nullopt;
        const Decl& d = *it->second.decl;
        if (d.returns.size() == 1 && d.returns[0].typed) return resolve_type(d.returns[0].type, nullptr);
        return std::nullopt;
      }
    }
    return std::nullopt;
  }

  std::optional<int> concat_width(const Expr& e) {
    if (e.kind == ExprKind::Logic) return e.width;
    if (auto t = rigid(e)) return t->width;
    return std::nullopt;
  }

  /// Loop index of the first loop counter referenced by `e`, or -1.
  int find_loop(const Expr& e) {
    if (e.kind == ExprKind::Ident) {
      Entity* ent = find(e.name);
      if (!ent) return -1;
      if (ent->kind == EK::Loop) return ent->id;
      if (ent->kind == EK::Alias) {
        ChainGuard g(*this, ent->chain);
        return find_loop(*ent->alias);
      }
      return -1;
    }
    for (const auto& a : e.args)
      if (int k = find_loop(*a); k >= 0) return k;
    return -1;
  }

  TExprP literal(int64_t v, std::optional<DataType> want, SourceLoc loc) {
    DataType t = want ? *want : DataType::integer(signed_bits(v));
    if (is_ph(t)) {
      note_value(ph_loop(t), v);
      return make_const(t, v);
    }
    if (t.base == BaseType::Bool) {
      if (v != 0 && v != 1) error(loc, "integer constant used where bool is expected");
      return make_const(t, v);
    }
    bool ok = fits(t, v) || (t.base != BaseType::Int && fits(DataType::integer(t.width), v));
    if (!ok) error(loc, "constant " + std::to_string(v) + " does not fit " + type_name(t));
    return make_const(t, v);
  }

  void expect_same(const TExprP& x, DataType t, SourceLoc loc) {
    if (x->type == t) return;
    error(loc, "operand type mismatch: " + tname(x->type) + " and " + tname(t) +
                   " (all operands of an expression must have the same type; use an explicit conversion)");
  }

  TExprP coerce(TExprP x, DataType t, SourceLoc loc, const std::string& what) {
    if (x->type == t) return x;
    if (is_ph(t)) {
      if (!is_ph(x->type)) note_ctx(ph_loop(t), x->type, loc);
      if (x->type.base == BaseType::Bool) error(loc, what + ": bool value used as loop bound");
      return make_convert(t, x);
    }
    if (is_ph(x->type)) {
      note_ctx(ph_loop(x->type), t, loc);
      return make_convert(t, x);
    }
    if (x->type.base == t.base) return make_convert(t, x);
    error(loc, what + ": cannot use " + type_name(x->type) + " as " + type_name(t) +
                   " (explicit conversion required)");
  }

  TExprP loop_ref(int k, std::optional<DataType> want, SourceLoc loc) {
    DataType ph = ph_type(k);
    TExprP node = make_obj(loops_[static_cast<size_t>(k)].obj, ph);
    if (!want || *want == ph) return node;
    if (is_ph(*want)) return make_convert(*want, node);
    note_ctx(k, *want, loc);
    return make_convert(*want, node);
  }

  DataType index_type(int size) { return DataType::integer(std::max(2, signed_bits(size - 1))); }

  TExprP index_expr(const Expr& idx, int size, const std::string& arr) {
    DataType it = index_type(size);
    if (auto v = try_const(idx)) {
      if (*v < 0 || *v >= size)
        error(idx.loc, "index " + std::to_string(*v) + " out of range for array '" + arr + "'");
      return make_const(it, *v);
    }
    if (auto r = rigid(idx)) {
      if (r->base == BaseType::Bool) error(idx.loc, "bool value used as array index");
      return check(idx, std::nullopt);
    }
    return check(idx, it);
  }

  TExprP check(const Expr& e, std::optional<DataType> want) {
    if (e.kind != ExprKind::Call && e.kind != ExprKind::String) {
      if (auto v = try_const(e)) {
        if (auto r = rigid(e)) {
          if (r->base == BaseType::Bool) return make_const(*r, *v ? 1 : 0);
          return make_const(*r, *v);
        }
        return literal(*v, want, e.loc);
      }
    }
    switch (e.kind) {
      case ExprKind::String: error(e.loc, "string literals are only allowed as parameters");
      case ExprKind::Ident: {
        Entity& ent = lookup(e.name, e.loc);
        switch (ent.kind) {
          case EK::Object: {
            const Object& o = obj(ent.id);
            if (o.is_storage()) {
              if (o.array_size > 0) error(e.loc, "array '" + e.name + "' requires an index");
              return make_obj(o.id, o.type);
            }
            if (o.kind == ObjKind::Queue || o.kind == ObjKind::Channel) return make_obj(o.id, o.type);
            error(e.loc, std::string(obj_kind_name(o.kind)) + " '" + e.name + "' is not a value");
          }
          case EK::Struct: error(e.loc, "structure '" + e.name + "' requires an element selector");
          case EK::Loop: return loop_ref(ent.id, want, e.loc);
          case EK::Alias: {
            std::optional<DataType> at = ent.alias_type;
            TExprP r;
            {
              ChainGuard g(*this, ent.chain);
              r = check(*ent.alias, at ? at : want);
            }
            if (at) r = coerce(r, *at, e.loc, "argument '" + e.name + "'");
            return r;
          }
          case EK::Function: error(e.loc, "function '" + e.name + "' used as a value");
          default: error(e.loc, "'" + e.name + "' is not a value");
        }
      }
      case ExprKind::Index: {
        if (e.args.size() != 2) error(e.loc, "multi-dimensional arrays are not supported");
        if (e.args[0]->kind != ExprKind::Ident) error(e.loc, "array name expected");
        Chain c;
        Entity& ent = resolve_ident(*e.args[0], c);
        if (ent.kind == EK::Object && obj(ent.id).is_storage() && obj(ent.id).array_size > 0) {
          const Object& o = obj(ent.id);
          TExprP idx;
          {
            ChainGuard g(*this, chain_);
            idx = index_expr(*e.args[1], o.array_size, o.name);
          }
          return make_elem(o.id, o.type, idx);
        }
        if (ent.kind == EK::ObjArray) {
          auto v = try_const(*e.args[1]);
          if (!v) error(e.loc, "dynamic selection of object array elements is only allowed in simple statements");
          if (*v < 0 || *v >= static_cast<int64_t>(ent.elems.size()))
            error(e.loc, "index " + std::to_string(*v) + " out of range for '" + e.args[0]->name + "'");
          const Object& o = obj(ent.elems[static_cast<size_t>(*v)]);
          if (o.kind == ObjKind::Queue || o.kind == ObjKind::Channel) return make_obj(o.id, o.type);
          error(e.loc, std::string(obj_kind_name(o.kind)) + " '" + o.name + "' is not a value");
        }
        error(e.loc, "'" + e.args[0]->name + "' is not an array");
      }
      case ExprKind::Member: {
        if (e.args[0]->kind != ExprKind::Ident) error(e.loc, "structure name expected");
        Chain c;
        Entity& ent = resolve_ident(*e.args[0], c);
        if (ent.kind == EK::Struct) {
          auto it = ent.fields.find(e.name);
          if (it == ent.fields.end()) error(e.loc, "no element '" + e.name + "' in '" + e.args[0]->name + "'");
          return make_obj(it->second, obj(it->second).type);
        }
        if (ent.kind == EK::Object && ent.tinfo && ent.tinfo->cls == TypeClass::BitStruct) {
          auto it = ent.tinfo->bits.find(e.name);
          if (it == ent.tinfo->bits.end()) error(e.loc, "no element '" + e.name + "' in '" + e.args[0]->name + "'");
          return make_bits(make_obj(ent.id, obj(ent.id).type), it->second.first, it->second.second);
        }
        error(e.loc, "'" + e.args[0]->name + "' has no elements");
      }
      case ExprKind::Bit:
      case ExprKind::Range: {
        TExprP base = check(*e.args[0], std::nullopt);
        if (is_ph(base->type) || base->type.base == BaseType::Bool)
          error(e.loc, "bit selection requires a typed int, logic or char object");
        int64_t a = const_eval(*e.args[1]);
        int64_t b = e.kind == ExprKind::Range ? const_eval(*e.args[2]) : a;
        int64_t lo = std::min(a, b), hi = std::max(a, b);
        if (lo < 0 || hi >= base->type.width)
          error(e.loc, "bit index out of range for " + type_name(base->type));
        return make_bits(base, static_cast<int>(lo), static_cast<int>(hi));
      }
      case ExprKind::Unary: {
        if (e.op == Op::Not) {
          TExprP a = check(*e.args[0], DataType::boolean());
          expect_same(a, DataType::boolean(), e.loc);
          return make_unary(Op::Not, a->type, a);
        }
        DataType t;
        if (auto r = rigid(*e.args[0])) t = *r;
        else if (want) t = *want;
        else if (int k = find_loop(e); k >= 0) t = ph_type(k);
        else error(e.loc, "cannot determine the type of the expression");
        if (t.base == BaseType::Bool) error(e.loc, "arithmetic on bool value (use 'not')");
        TExprP a = check(*e.args[0], t);
        expect_same(a, t, e.loc);
        return make_unary(e.op, t, a);
      }
      case ExprKind::Binary: return check_binary(e, want);
      case ExprKind::Convert: {
        TExprP a;
        if (rigid(*e.args[0])) {
          a = check(*e.args[0], std::nullopt);
        } else if (want && !is_ph(*want) && want->base != BaseType::Bool) {
          a = check(*e.args[0], DataType::integer(want->width));
        } else {
          error(e.loc, "cannot determine the width of the conversion argument");
        }
        DataType t;
        if (e.name == "to_int") t = DataType::integer(a->type.width);
        else if (e.name == "to_logic") t = DataType::logic(a->type.width);
        else if (e.name == "to_char") t = DataType::character();
        else t = DataType::boolean();
        if (a->type == t) return a;
        auto c = std::make_shared<TExpr>();
        c->kind = TExprKind::Convert;
        c->type = t;
        c->args.push_back(a);
        return c;
      }
      case ExprKind::Call: error(e.loc, "function call not allowed in this context");
      default: break;
    }
    error(e.loc, "unsupported expression");
  }

  TExprP check_binary(const Expr& e, std::optional<DataType> want) {
    const Expr& l = *e.args[0];
    const Expr& r = *e.args[1];
    if (e.op == Op::Log) error(e.loc, "'~' is only allowed in constant definitions");
    if (is_boolean(e.op)) {
      TExprP a = check(l, DataType::boolean());
      TExprP b = check(r, DataType::boolean());
      expect_same(a, DataType::boolean(), l.loc);
      expect_same(b, DataType::boolean(), r.loc);
      return make_binary(e.op, DataType::boolean(), a, b);
    }
    if (e.op == Op::Concat) {
      auto wa = concat_width(l), wb = concat_width(r);
      if (!wa || !wb) error(e.loc, "operands of '@' need a known width");
      TExprP a = check(l, l.kind == ExprKind::Logic ? std::optional(DataType::logic(*wa)) : std::nullopt);
      TExprP b = check(r, r.kind == ExprKind::Logic ? std::optional(DataType::logic(*wb)) : std::nullopt);
      int w = a->type.width + b->type.width;
      if (w > kMaxWidth) error(e.loc, "concatenation wider than 64 bits");
      return make_binary(Op::Concat, DataType::logic(w), a, b);
    }
    if (e.op == Op::Lsl || e.op == Op::Lsr) {
      DataType t;
      if (auto rl = rigid(l)) t = *rl;
      else if (want) t = *want;
      else if (int k = find_loop(l); k >= 0) t = ph_type(k);
      else error(e.loc, "left operand of a shift needs a known type");
      TExprP a = check(l, t);
      TExprP b = rigid(r) ? check(r, std::nullopt) : check(r, DataType::integer(8));
      if (a->type.base == BaseType::Bool || b->type.base == BaseType::Bool) error(e.loc, "shift of bool value");
      return make_binary(e.op, a->type, a, b);
    }
    DataType t;
    auto rl = rigid(l), rr = rigid(r);
    bool rel = is_relational(e.op);
    if (rl) t = *rl;
    else if (rr) t = *rr;
    else if (!rel && want) t = *want;
    else if (int k = find_loop(e); k >= 0) t = ph_type(k);
    else if (want && !rel) t = *want;
    else error(e.loc, "cannot determine the type of the expression");
    if (!rel && t.base == BaseType::Bool && e.op != Op::Land && e.op != Op::Lor && e.op != Op::Lxor)
      error(e.loc, "arithmetic on bool values");
    if (rel && t.base == BaseType::Bool && e.op != Op::Eq && e.op != Op::Ne)
      error(e.loc, "ordering comparison of bool values");
    TExprP a = check(l, t);
    TExprP b = check(r, t);
    expect_same(a, t, l.loc);
    expect_same(b, t, r.loc);
    return make_binary(e.op, rel ? DataType::boolean() : t, a, b);
  }

  // --------------------------------------------------------------- lvalues

  TLhs check_lhs(const Expr& e) {
    TLhs l;
    switch (e.kind) {
      case ExprKind::Ident: {
        Entity& ent = lookup(e.name, e.loc);
        if (ent.kind == EK::Alias) {
          ChainGuard g(*this, ent.chain);
          return check_lhs(*ent.alias);
        }
        if (ent.kind == EK::Loop) error(e.loc, "loop variable '" + e.name + "' cannot be assigned");
        if (ent.kind == EK::ValueConst || ent.kind == EK::TypedConst || ent.kind == EK::EnumConst)
          error(e.loc, "assignment to constant '" + e.name + "'");
        if (ent.kind == EK::Struct) error(e.loc, "structure '" + e.name + "' requires an element selector");
        if (ent.kind != EK::Object) error(e.loc, "'" + e.name + "' cannot be assigned");
        const Object& o = obj(ent.id);
        if (o.is_storage()) {
          if (o.array_size > 0) error(e.loc, "array '" + e.name + "' requires an index");
        } else if (o.kind != ObjKind::Queue && o.kind != ObjKind::Channel) {
          error(e.loc, std::string(obj_kind_name(o.kind)) + " '" + e.name + "' cannot be assigned");
        }
        l.obj = o.id;
        l.type = o.type;
        break;
      }
      case ExprKind::Index: {
        if (e.args.size() != 2) error(e.loc, "multi-dimensional arrays are not supported");
        if (e.args[0]->kind != ExprKind::Ident) error(e.loc, "array name expected");
        Chain c;
        Entity& ent = resolve_ident(*e.args[0], c);
        if (ent.kind == EK::Object && obj(ent.id).is_storage() && obj(ent.id).array_size > 0) {
          const Object& o = obj(ent.id);
          l.obj = o.id;
          l.type = o.type;
          l.index = index_expr(*e.args[1], o.array_size, o.name);
          break;
        }
        if (ent.kind == EK::ObjArray) {
          auto v = try_const(*e.args[1]);
          if (!v) error(e.loc, "dynamic selection of object array elements is only allowed in simple statements");
          if (*v < 0 || *v >= static_cast<int64_t>(ent.elems.size()))
            error(e.loc, "index " + std::to_string(*v) + " out of range for '" + e.args[0]->name + "'");
          const Object& o = obj(ent.elems[static_cast<size_t>(*v)]);
          if (o.kind != ObjKind::Queue && o.kind != ObjKind::Channel)
            error(e.loc, std::string(obj_kind_name(o.kind)) + " '" + o.name + "' cannot be assigned");
          l.obj = o.id;
          l.type = o.type;
          break;
        }
        error(e.loc, "'" + e.args[0]->name + "' is not an array");
      }
      case ExprKind::Member: {
        if (e.args[0]->kind != ExprKind::Ident) error(e.loc, "structure name expected");
        Chain c;
        Entity& ent = resolve_ident(*e.args[0], c);
        if (ent.kind == EK::Struct) {
          auto it = ent.fields.find(e.name);
          if (it == ent.fields.end()) error(e.loc, "no element '" + e.name + "' in '" + e.args[0]->name + "'");
          l.obj = it->second;
          l.type = obj(it->second).type;
          break;
        }
        if (ent.kind == EK::Object && ent.tinfo && ent.tinfo->cls == TypeClass::BitStruct) {
          auto it = ent.tinfo->bits.find(e.name);
          if (it == ent.tinfo->bits.end()) error(e.loc, "no element '" + e.name + "' in '" + e.args[0]->name + "'");
          l.obj = ent.id;
          l.lo = it->second.first;
          l.hi = it->second.second;
          l.type = DataType::logic(l.hi - l.lo + 1);
          break;
        }
        error(e.loc, "'" + e.args[0]->name + "' has no elements");
      }
      case ExprKind::Bit:
      case ExprKind::Range: {
        TLhs base = check_lhs(*e.args[0]);
        if (base.index || base.lo >= 0 || !obj(base.obj).is_storage())
          error(e.loc, "bit assignment requires a scalar register");
        int64_t a = const_eval(*e.args[1]);
        int64_t b = e.kind == ExprKind::Range ? const_eval(*e.args[2]) : a;
        int64_t lo = std::min(a, b), hi = std::max(a, b);
        if (lo < 0 || hi >= base.type.width) error(e.loc, "bit index out of range for " + type_name(base.type));
        base.lo = static_cast<int>(lo);
        base.hi = static_cast<int>(hi);
        base.type = DataType::logic(base.hi - base.lo + 1);
        return base;
      }
      default: error(e.loc, "invalid assignment target");
    }
    const Object& o = obj(l.obj);
    if (o.kind == ObjKind::Sig) {
      auto [it, fresh] = signal_writer_.emplace(o.id, proc_);
      if (!fresh && it->second != proc_)
        error(e.loc, "signal '" + o.name + "' is assigned in more than one process");
    }
    return l;
  }

  // ------------------------------------------------------------ statements

  static StmtP make_assign(ExprP lhs, ExprP rhs, SourceLoc loc) {
    auto s = std::make_shared<Stmt>();
    s->kind = StmtKind::Assign;
    s->loc = loc;
    s->lhs.push_back(std::move(lhs));
    s->expr = std::move(rhs);
    return s;
  }

  static ExprP int_expr(int64_t v, SourceLoc loc) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Int;
    e->value = v;
    e->loc = loc;
    return e;
  }

  static ExprP ident_expr(const std::string& n, SourceLoc loc) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Ident;
    e->name = n;
    e->loc = loc;
    return e;
  }

  /// Object array entity designated by `a.[i]` when i is not constant.
  Entity* dynamic_obj_select(const Expr& e) {
    if (e.kind != ExprKind::Index || e.args.size() != 2 || e.args[0]->kind != ExprKind::Ident) return nullptr;
    Entity* ent = find(e.args[0]->name);
    if (!ent) return nullptr;
    if (ent->kind == EK::Alias && ent->alias->kind == ExprKind::Ident) {
      Chain c;
      ent = &resolve_ident(*e.args[0], c);
    }
    if (ent->kind != EK::ObjArray && ent->kind != EK::ProcArray) return nullptr;
    if (try_const(*e.args[1])) return nullptr;
    return ent;
  }

  /// match over the element index; `rebuild(k)` produces the statement for element k.
  template <typename F>
  void element_match(const Expr& sel, size_t n, SourceLoc loc, TBlock& out, F rebuild) {
    auto st = std::make_shared<TStmt>();
    st->kind = TStmtKind::Match;
    st->loc = loc;
    st->cond = index_expr(*sel.args[1], static_cast<int>(n), sel.args[0]->name);
    for (size_t k = 0; k < n; ++k) {
      TArm arm;
      arm.choices.push_back({static_cast<int64_t>(k), static_cast<int64_t>(k)});
      auto e = std::make_shared<Expr>(sel);
      e->args[1] = int_expr(static_cast<int64_t>(k), sel.loc);
      stmt(*rebuild(ExprP(e)), arm.body);
      st->arms.push_back(std::move(arm));
    }
    out.push_back(st);
  }

  bool contains_call(const Expr& e) {
    if (e.kind == ExprKind::Call) return true;
    for (const auto& a : e.args)
      if (contains_call(*a)) return true;
    return false;
  }

  /// Replaces nested calls by temporaries assigned in preceding statements.
  ExprP hoist_calls(const ExprP& e, TBlock& out) {
    if (e->kind == ExprKind::Call) {
      auto fit = funcs_.find(e->name);
      if (fit == funcs_.end()) error(e->loc, "undefined function '" + e->name + "'");
      const Decl& d = *fit->second.decl;
      if (d.returns.size() != 1) error(e->loc, "function '" + e->name + "' does not return a single value");
      if (!d.returns[0].typed) error(e->loc, "result of '" + e->name + "' needs a typed return parameter here");
      DataType t = resolve_type(d.returns[0].type, nullptr);
      int k = temp_counter_[proc_]++;
      std::string key = "#tmp" + std::to_string(k);
      Object o;
      o.name = "TEMP_" + e->name + "_" + std::to_string(k);
      o.kind = ObjKind::Reg;
      o.type = t;
      o.global = false;
      o.inferred = true;
      Entity ent;
      ent.kind = EK::Object;
      ent.id = add_object(std::move(o), e->loc);
      chain_.back()->names[key] = ent;
      ExprP tmp = ident_expr(key, e->loc);
      auto args_copy = std::make_shared<Expr>(*e);
      for (auto& a : args_copy->args) a = hoist_calls(a, out);
      call(*args_copy, {tmp}, e->loc, out);
      return tmp;
    }
    bool any = false;
    for (const auto& a : e->args) any = any || contains_call(*a);
    if (!any) return e;
    auto c = std::make_shared<Expr>(*e);
    for (auto& a : c->args) a = hoist_calls(a, out);
    return c;
  }

  void call(const Expr& callee, const std::vector<ExprP>& dsts, SourceLoc loc, TBlock& out) {
    auto fit = funcs_.find(callee.name);
    if (fit == funcs_.end()) {
      Entity* e = find(callee.name);
      if (e && e->kind == EK::Object && obj(e->id).kind == ObjKind::Process)
        error(loc, "processes are started with '" + callee.name + ".start()' or '" + callee.name + ".call()'");
      error(loc, "undefined function '" + callee.name + "'");
    }
    FuncInfo& fi = fit->second;
    const Decl& d = *fi.decl;
    if (callee.args.size() != d.formals.size())
      error(loc, "function '" + callee.name + "' expects " + std::to_string(d.formals.size()) + " argument(s)");
    if (dsts.size() > d.returns.size())
      error(loc, "function '" + callee.name + "' returns " + std::to_string(d.returns.size()) + " value(s)");
    if (fi.inline_fn) {
      expand_inline(callee.name, callee.args, dsts, loc, out);
      return;
    }
    if (std::find(inline_stack_.begin(), inline_stack_.end(), callee.name) != inline_stack_.end() ||
        (proc_ >= 0 && m_.processes[static_cast<size_t>(proc_)].name == "FUN_" + callee.name))
      error(loc, "recursive call of function '" + callee.name + "'");
    analyze_function(callee.name, loc);
    const TFunction& tf = m_.functions[static_cast<size_t>(fi.index)];
    auto st = std::make_shared<TStmt>();
    st->kind = TStmtKind::Call;
    st->loc = loc;
    st->obj = fi.index;
    for (size_t i = 0; i < callee.args.size(); ++i) {
      if (contains_call(*callee.args[i])) error(callee.args[i]->loc, "nested function calls are not supported here");
      DataType t = obj(tf.args[i]).type;
      st->args.push_back(coerce(check(*callee.args[i], t), t, callee.args[i]->loc, "argument"));
    }
    for (size_t i = 0; i < dsts.size(); ++i) {
      TLhs l = check_lhs(*dsts[i]);
      DataType rt = obj(tf.rets[i]).type;
      if (rt.base != l.type.base)
        error(dsts[i]->loc, "cannot assign result of type " + type_name(rt) + " to " + type_name(l.type));
      st->dsts.push_back(std::move(l));
    }
    out.push_back(st);
  }

  static bool assigns_name(const Stmt& s, const std::string& n) {
    auto base_is = [&](const ExprP& e) {
      const Expr* x = e.get();
      while (x->kind != ExprKind::Ident && !x->args.empty()) x = x->args[0].get();
      return x->kind == ExprKind::Ident && x->name == n;
    };
    for (const auto& l : s.lhs)
      if (base_is(l)) return true;
    for (const auto& b : s.body)
      if (assigns_name(*b, n)) return true;
    for (const StmtP* p : {&s.then_s, &s.else_s})
      if (*p && assigns_name(**p, n)) return true;
    for (const auto& a : s.arms)
      if (assigns_name(*a.body, n)) return true;
    for (const auto& h : s.handlers)
      if (assigns_name(*h.body, n)) return true;
    return false;
  }

  void expand_inline(const std::string& fname, const std::vector<ExprP>& args, const std::vector<ExprP>& dsts,
                     SourceLoc loc, TBlock& out) {
    if (std::find(inline_stack_.begin(), inline_stack_.end(), fname) != inline_stack_.end())
      error(loc, "recursive call of function '" + fname + "'");
    const Decl& d = *funcs_[fname].decl;
    Chain caller = chain_;
    ScopeP& locals = inline_locals_[{proc_, fname}];
    bool first = !locals;
    if (first) {
      locals = std::make_shared<Scope>();
      ChainGuard g(*this, {globals_, locals});
      for (const auto& decl : d.body.decls) declare(*decl, locals, false, fname + "_");
    }
    auto frame = std::make_shared<Scope>();
    TBlock pre;
    for (size_t i = 0; i < d.formals.size(); ++i) {
      const Formal& f = d.formals[i];
      bool assigned = false;
      for (const auto& s : d.body.stmts) assigned = assigned || assigns_name(*s, f.name);
      Entity e;
      if (assigned) {
        std::string key = "#param_" + f.name;
        auto it = locals->names.find(key);
        if (it == locals->names.end()) {
          DataType t;
          if (f.typed) t = resolve_type(f.type, nullptr);
          else if (auto r = rigid(*args[i])) t = *r;
          else error(f.loc, "parameter '" + f.name + "' is assigned in the body and needs a type");
          Entity le;
          le.kind = EK::Object;
          le.id = make_storage(fname + "_" + f.name, ObjKind::Reg, t, 0, "", false, f.loc);
          it = locals->names.emplace(key, le).first;
        }
        e = it->second;
        // copy-in
        TLhs l;
        l.obj = e.id;
        l.type = obj(e.id).type;
        auto st = std::make_shared<TStmt>();
        st->kind = TStmtKind::Assign;
        st->loc = loc;
        st->lhs = l;
        st->rhs = coerce(check(*args[i], l.type), l.type, args[i]->loc, "argument");
        pre.push_back(st);
      } else {
        e.kind = EK::Alias;
        e.alias = args[i];
        e.chain = caller;
        if (f.typed) e.alias_type = resolve_type(f.type, nullptr);
      }
      frame->names[f.name] = e;
    }
    for (size_t i = 0; i < d.returns.size(); ++i) {
      const Formal& r = d.returns[i];
      Entity e;
      if (i < dsts.size()) {
        e.kind = EK::Alias;
        e.alias = dsts[i];
        e.chain = caller;
      } else {
        std::string key = "#ret_" + r.name;
        auto it = locals->names.find(key);
        if (it == locals->names.end()) {
          if (!r.typed) error(r.loc, "unused return parameter '" + r.name + "' needs a type");
          Entity le;
          le.kind = EK::Object;
          le.id = make_storage(fname + "_" + r.name, ObjKind::Reg, resolve_type(r.type, nullptr), 0, "", false, r.loc);
          it = locals->names.emplace(key, le).first;
        }
        e = it->second;
      }
      frame->names[r.name] = e;
    }
    for (auto& s : pre) out.push_back(s);
    inline_stack_.push_back(fname);
    {
      ChainGuard g(*this, {globals_, locals, frame});
      for (const auto& s : d.body.stmts) stmt(*s, out);
    }
    inline_stack_.pop_back();
  }

  TStmtP make_method(int o, const std::string& method, std::vector<TExprP> args, SourceLoc loc) {
    auto st = std::make_shared<TStmt>();
    st->kind = TStmtKind::Method;
    st->loc = loc;
    st->obj = o;
    st->method = method;
    st->args = std::move(args);
    return st;
  }

  void method(const Stmt& s, TBlock& out) {
    const Expr& t = *s.expr;
    if (Entity* arr = dynamic_obj_select(t)) {
      element_match(t, arr->elems.size(), s.loc, out, [&](ExprP sel) {
        auto c = std::make_shared<Stmt>(s);
        c->expr = sel;
        return StmtP(c);
      });
      return;
    }
    int o = static_obj_target(t);
    const Object& ob = obj(o);
    auto no_args = [&]() {
      if (!s.args.empty()) error(s.loc, "method '" + s.name + "' takes no arguments");
    };
    auto bad = [&]() {
      error(s.loc, "unknown method '" + s.name + "' for " + std::string(obj_kind_name(ob.kind)) + " '" + ob.name + "'");
    };
    std::vector<TExprP> args;
    switch (ob.kind) {
      case ObjKind::Process:
        if (s.name != "start" && s.name != "stop" && s.name != "call") bad();
        no_args();
        if (proc_ >= 0 && ob.id == m_.processes[static_cast<size_t>(proc_)].obj)
          error(s.loc, "process '" + ob.name + "' cannot control itself");
        if (ob.name.rfind("FUN_", 0) == 0) error(s.loc, "function processes are controlled by calls only");
        break;
      case ObjKind::Mutex:
        if (s.name != "lock" && s.name != "unlock" && s.name != "init") bad();
        no_args();
        break;
      case ObjKind::Semaphore:
        if (s.name == "init") {
          if (s.args.size() != 1) error(s.loc, "init expects the initial counter value");
          int64_t v = const_eval(*s.args[0]);
          if (v < 0 || v > ob.depth) error(s.loc, "semaphore init value out of range 0.." + std::to_string(ob.depth));
          args.push_back(make_const(DataType::integer(signed_bits(ob.depth) + 1), v));
          break;
        }
        if (s.name != "down" && s.name != "up" && s.name != "unlock") bad();
        no_args();
        break;
      case ObjKind::Event:
        if (s.name != "await" && s.name != "wakeup" && s.name != "init") bad();
        no_args();
        break;
      case ObjKind::Barrier:
        if (s.name != "await" && s.name != "init") bad();
        no_args();
        break;
      case ObjKind::Timer:
        if (s.name == "time") {
          if (s.args.size() != 1) error(s.loc, "time expects one argument");
          int64_t c = const_eval(*s.args[0]);
          if (c < 1) error(s.loc, "timer interval must be at least one cycle");
          args.push_back(make_const(DataType::integer(std::min(64, signed_bits(c))), c));
          break;
        }
        if (s.name != "await" && s.name != "start" && s.name != "stop" && s.name != "init") bad();
        no_args();
        break;
      case ObjKind::Queue:
      case ObjKind::Channel:
        if (s.name != "unlock") bad();
        no_args();
        break;
      case ObjKind::Stub:
        d_.warning(s.loc, "method '" + s.name + "' of " + ob.stub_type + " object '" + ob.name +
                              "' is not synthesized (inert stub)");
        return;
      default: error(s.loc, std::string(obj_kind_name(ob.kind)) + " '" + ob.name + "' has no methods");
    }
    out.push_back(make_method(o, s.name, std::move(args), s.loc));
  }

  void body_of(const StmtP& s, TBlock& out) {
    if (s) stmt(*s, out);
  }

  TBlock sub_block(const StmtP& s) {
    TBlock b;
    auto frame = std::make_shared<Scope>();
    chain_.push_back(frame);
    body_of(s, b);
    chain_.pop_back();
    return b;
  }

  void assign(const Stmt& s, TBlock& out) {
    if (s.lhs.size() > 1 || s.expr->kind == ExprKind::Call) {
      if (s.expr->kind != ExprKind::Call) error(s.loc, "tuple assignment requires a function call");
      auto c = std::make_shared<Expr>(*s.expr);
      for (auto& a : c->args) a = hoist_calls(a, out);
      call(*c, s.lhs, s.loc, out);
      return;
    }
    ExprP rhs = s.expr;
    if (contains_call(*rhs)) rhs = hoist_calls(rhs, out);
    const Expr& lhs = *s.lhs[0];
    if (Entity* arr = dynamic_obj_select(lhs)) {
      element_match(lhs, arr->elems.size(), s.loc, out, [&](ExprP sel) { return make_assign(sel, rhs, s.loc); });
      return;
    }
    if (Entity* arr = dynamic_obj_select(*rhs)) {
      element_match(*rhs, arr->elems.size(), s.loc, out, [&](ExprP sel) { return make_assign(s.lhs[0], sel, s.loc); });
      return;
    }
    out.push_back(simple_assign(lhs, *rhs, s.loc));
  }

  TStmtP simple_assign(const Expr& lhs, const Expr& rhs, SourceLoc loc) {
    auto st = std::make_shared<TStmt>();
    st->kind = TStmtKind::Assign;
    st->loc = loc;
    st->lhs = check_lhs(lhs);
    st->rhs = coerce(check(rhs, st->lhs.type), st->lhs.type, rhs.loc, "assignment");
    return st;
  }

  void bound_block(const std::vector<StmtP>& items, SourceLoc loc, TBlock& out) {
    auto st = std::make_shared<TStmt>();
    st->kind = TStmtKind::Bind;
    st->loc = loc;
    for (const auto& a : items) {
      if (a->kind != StmtKind::Assign || a->lhs.size() != 1) error(a->loc, "a bound block may only contain assignments");
      if (contains_call(*a->expr)) error(a->loc, "function calls are not allowed in a bound block");
      st->body.push_back(simple_assign(*a->lhs[0], *a->expr, a->loc));
    }
    for (size_t i = 0; i < st->body.size(); ++i)
      for (size_t j = 0; j < i; ++j) {
        const TLhs& x = st->body[i]->lhs;
        const TLhs& y = st->body[j]->lhs;
        if (x.obj == y.obj && !x.index && !y.index && (x.lo < 0 || y.lo < 0 || !(x.hi < y.lo || y.hi < x.lo)))
          error(st->body[i]->loc, "object '" + obj(x.obj).name + "' assigned twice in a bound block");
      }
    out.push_back(st);
  }

  void stmt(const Stmt& s, TBlock& out) {
    switch (s.kind) {
      case StmtKind::Assign: assign(s, out); return;
      case StmtKind::Bind: bound_block(s.body, s.loc, out); return;
      case StmtKind::Block:
        if (has_flag(s.params, "bind")) {
          bound_block(s.body, s.loc, out);
          return;
        }
        for (const auto& b : s.body) stmt(*b, out);
        return;
      case StmtKind::If: {
        if (auto v = try_const(*s.expr)) {
          if (auto r = rigid(*s.expr); !r || r->base != BaseType::Bool)
            error(s.expr->loc, "condition must be of type bool");
          if (*v) body_of(s.then_s, out);
          else body_of(s.else_s, out);
          return;
        }
        auto st = std::make_shared<TStmt>();
        st->kind = TStmtKind::If;
        st->loc = s.loc;
        st->cond = check(*s.expr, DataType::boolean());
        expect_same(st->cond, DataType::boolean(), s.expr->loc);
        st->body = sub_block(s.then_s);
        st->else_b = sub_block(s.else_s);
        out.push_back(st);
        return;
      }
      case StmtKind::Match: {
        auto st = std::make_shared<TStmt>();
        st->kind = TStmtKind::Match;
        st->loc = s.loc;
        if (rigid(*s.expr)) st->cond = check(*s.expr, std::nullopt);
        else if (int k = find_loop(*s.expr); k >= 0) st->cond = check(*s.expr, ph_type(k));
        else error(s.expr->loc, "match subject needs a known type");
        if (st->cond->type.base == BaseType::Bool) error(s.expr->loc, "match on bool value (use if)");
        for (const auto& a : s.arms) {
          TArm arm;
          arm.others = a.others;
          for (const auto& c : a.choices) {
            int64_t lo = const_eval(*c.lo);
            int64_t hi = c.hi ? const_eval(*c.hi) : lo;
            if (lo > hi) std::swap(lo, hi);
            for (int64_t v : {lo, hi}) literal(v, st->cond->type, c.lo->loc);
            arm.choices.push_back({wrap_choice(st->cond->type, lo), wrap_choice(st->cond->type, hi)});
          }
          arm.body = sub_block(a.body);
          st->arms.push_back(std::move(arm));
        }
        out.push_back(st);
        return;
      }
      case StmtKind::Try: {
        auto st = std::make_shared<TStmt>();
        st->kind = TStmtKind::Try;
        st->loc = s.loc;
        st->body = sub_block(s.then_s);
        for (const auto& h : s.handlers) {
          THandler th;
          th.others = h.others;
          for (const auto& n : h.names) {
            Entity& e = lookup(n, h.loc);
            if (e.kind != EK::Exception) error(h.loc, "'" + n + "' is not an exception");
            th.excs.push_back(e.id);
          }
          th.body = sub_block(h.body);
          st->handlers.push_back(std::move(th));
        }
        out.push_back(st);
        return;
      }
      case StmtKind::Raise: {
        Entity& e = lookup(s.name, s.loc);
        if (e.kind != EK::Exception) error(s.loc, "'" + s.name + "' is not an exception");
        auto st = std::make_shared<TStmt>();
        st->kind = TStmtKind::Raise;
        st->loc = s.loc;
        st->exc = e.id;
        out.push_back(st);
        return;
      }
      case StmtKind::For: for_loop(s, out); return;
      case StmtKind::While: {
        if (auto v = try_const(*s.expr); v && *v == 0) return;
        auto st = std::make_shared<TStmt>();
        st->kind = TStmtKind::While;
        st->loc = s.loc;
        st->cond = check(*s.expr, DataType::boolean());
        expect_same(st->cond, DataType::boolean(), s.expr->loc);
        st->body = sub_block(s.then_s);
        out.push_back(st);
        return;
      }
      case StmtKind::Always: {
        auto st = std::make_shared<TStmt>();
        st->kind = TStmtKind::Always;
        st->loc = s.loc;
        st->body = sub_block(s.then_s);
        out.push_back(st);
        return;
      }
      case StmtKind::Wait: {
        auto st = std::make_shared<TStmt>();
        st->loc = s.loc;
        auto rt = rigid(*s.expr);
        if (s.expr->kind == ExprKind::Time || (!rt && try_const(*s.expr))) {
          if (s.then_s || s.else_s) error(s.loc, "'with' is only allowed when waiting for a condition");
          st->kind = TStmtKind::Wait;
          st->cycles = const_eval(*s.expr);
          if (st->cycles < 1) error(s.loc, "wait time must be at least one clock cycle");
        } else {
          st->kind = TStmtKind::WaitCond;
          st->cond = check(*s.expr, DataType::boolean());
          expect_same(st->cond, DataType::boolean(), s.expr->loc);
          if (s.then_s) {
            st->body = sub_block(s.then_s);
            for (const auto& b : st->body)
              if (b->kind != TStmtKind::Assign && b->kind != TStmtKind::Bind)
                error(s.loc, "'wait ... with' accepts only assignments");
          }
          if (s.else_s) {
            st->else_b = sub_block(s.else_s);
            for (const auto& b : st->else_b)
              if (b->kind != TStmtKind::Assign && b->kind != TStmtKind::Bind)
                error(s.loc, "'wait ... else' accepts only assignments");
          }
        }
        out.push_back(st);
        return;
      }
      case StmtKind::Method: method(s, out); return;
      case StmtKind::Call: {
        auto c = std::make_shared<Expr>();
        c->kind = ExprKind::Call;
        c->name = s.name;
        c->loc = s.loc;
        c->args = s.args;
        for (auto& a : c->args) a = hoist_calls(a, out);
        call(*c, {}, s.loc, out);
        return;
      }
      case StmtKind::Map: d_.warning(s.loc, "component port mapping is not synthesized"); return;
    }
  }

  static int64_t wrap_choice(DataType t, int64_t v) { return is_ph(t) ? v : wrap(t, v); }

  void for_loop(const Stmt& s, TBlock& out) {
    int64_t step = s.step ? const_eval(*s.step) : 1;
    if (step <= 0) error(s.loc, "loop step must be a positive constant");
    bool unroll = s.then_s && s.then_s->kind == StmtKind::Block && has_flag(s.then_s->params, "unroll");
    if (unroll) {
      int64_t a = const_eval(*s.expr), b = const_eval(*s.expr2);
      auto frame = std::make_shared<Scope>();
      chain_.push_back(frame);
      for (int64_t v = a; s.downto ? v >= b : v <= b; v += s.downto ? -step : step) {
        Entity e;
        e.kind = EK::ValueConst;
        e.value = v;
        frame->names[s.name] = e;
        for (const auto& b2 : s.then_s->body) stmt(*b2, out);
      }
      chain_.pop_back();
      return;
    }
    int k = static_cast<int>(loops_.size());
    loops_.push_back({});
    int n = loop_counter_[{proc_, s.name}]++;
    Object o;
    o.name = "LOOP_" + s.name + "_" + std::to_string(n);
    o.kind = ObjKind::Reg;
    o.global = false;
    o.inferred = true;
    o.type = ph_type(k);
    int id = add_object(std::move(o), s.loc);
    loops_[static_cast<size_t>(k)].obj = id;
    DataType ph = ph_type(k);

    auto st = std::make_shared<TStmt>();
    st->kind = TStmtKind::For;
    st->loc = s.loc;
    st->loop_obj = id;
    st->step = step;
    st->downto = s.downto;
    st->from = coerce(check(*s.expr, ph), ph, s.expr->loc, "loop bound");
    st->to = coerce(check(*s.expr2, ph), ph, s.expr2->loc, "loop bound");
    if (auto b = try_const(*s.expr2)) note_value(k, s.downto ? *b - step : *b + step);
    auto frame = std::make_shared<Scope>();
    Entity e;
    e.kind = EK::Loop;
    e.id = k;
    frame->names[s.name] = e;
    chain_.push_back(frame);
    body_of(s.then_s, st->body);
    chain_.pop_back();

    int w = loops_[static_cast<size_t>(k)].width;
    if (w > kMaxWidth) error(s.loc, "loop counter wider than 64 bits");
    DataType t = DataType::integer(w);
    obj(id).type = t;
    TStmtP fixed = patch_stmt(st, ph, t);
    out.push_back(fixed);
  }

  // ---------------------------------------------- loop placeholder patching

  static TExprP patch_expr(const TExprP& e, DataType ph, DataType t) {
    if (!e) return e;
    bool changed = e->type == ph;
    std::vector<TExprP> args;
    args.reserve(e->args.size());
    for (const auto& a : e->args) {
      args.push_back(patch_expr(a, ph, t));
      changed = changed || args.back() != a;
    }
    if (!changed) return e;
    auto c = std::make_shared<TExpr>(*e);
    if (c->type == ph) c->type = t;
    c->args = std::move(args);
    if (c->kind == TExprKind::Convert && c->args[0]->type == c->type) return c->args[0];
    if (c->kind == TExprKind::Const) c->value = wrap(t, c->value);
    return c;
  }

  static TLhs patch_lhs(TLhs l, DataType ph, DataType t) {
    l.index = patch_expr(l.index, ph, t);
    return l;
  }

  static TBlock patch_block(const TBlock& b, DataType ph, DataType t) {
    TBlock out;
    out.reserve(b.size());
    for (const auto& s : b) out.push_back(patch_stmt(s, ph, t));
    return out;
  }

  static TStmtP patch_stmt(const TStmtP& s, DataType ph, DataType t) {
    auto c = std::make_shared<TStmt>(*s);
    c->lhs = patch_lhs(c->lhs, ph, t);
    c->rhs = patch_expr(c->rhs, ph, t);
    c->cond = patch_expr(c->cond, ph, t);
    c->from = patch_expr(c->from, ph, t);
    c->to = patch_expr(c->to, ph, t);
    for (auto& a : c->args) a = patch_expr(a, ph, t);
    for (auto& d : c->dsts) d = patch_lhs(d, ph, t);
    c->body = patch_block(c->body, ph, t);
    c->else_b = patch_block(c->else_b, ph, t);
    for (auto& a : c->arms) {
      a.body = patch_block(a.body, ph, t);
      for (auto& ch : a.choices) {
        if (c->cond && c->cond->type == t) {
          ch.lo = wrap(t, ch.lo);
          ch.hi = wrap(t, ch.hi);
        }
      }
    }
    for (auto& h : c->handlers) h.body = patch_block(h.body, ph, t);
    return c;
  }

  // --------------------------------------------------------- process bodies

  void analyze_body(int p, const Body& body, std::optional<int64_t> hash, const ScopeP& frame) {
    int saved_proc = proc_;
    auto saved_hash = hash_;
    proc_ = p;
    hash_ = hash;
    ChainGuard g(*this, {globals_, frame});
    for (const auto& d : body.decls) declare(*d, frame, false, "");
    TBlock b;
    for (const auto& s : body.stmts) stmt(*s, b);
    m_.processes[static_cast<size_t>(p)].body = std::move(b);
    proc_ = saved_proc;
    hash_ = saved_hash;
  }

  void analyze_function(const std::string& name, SourceLoc loc) {
    FuncInfo& fi = funcs_[name];
    if (fi.inline_fn || fi.state == 2) return;
    if (fi.state == 1) error(loc, "recursive call of function '" + name + "'");
    fi.state = 1;
    const TFunction& tf = m_.functions[static_cast<size_t>(fi.index)];
    auto frame = std::make_shared<Scope>();
    const Decl& d = *fi.decl;
    for (size_t i = 0; i < d.formals.size(); ++i) {
      Entity e;
      e.kind = EK::Object;
      e.id = tf.args[i];
      frame->names[d.formals[i].name] = e;
    }
    for (size_t i = 0; i < d.returns.size(); ++i) {
      Entity e;
      e.kind = EK::Object;
      e.id = tf.rets[i];
      frame->names[d.returns[i].name] = e;
    }
    auto saved_stack = inline_stack_;
    inline_stack_.clear();
    analyze_body(fi.process, d.body, std::nullopt, frame);
    inline_stack_ = saved_stack;
    fi.state = 2;
  }

  void finish() {
    // exports
    for (const Decl* d : exports_) {
      for (const auto& n : d->names) {
        Entity* e = globals_->names.count(n) ? &globals_->names[n] : nullptr;
        if (!e) error(d->loc, "exported symbol '" + n + "' is not defined");
        auto mark = [&](int id) {
          if (!obj(id).is_storage()) error(d->loc, "only storage objects can be exported");
          obj(id).exported = true;
        };
        if (e->kind == EK::Object) mark(e->id);
        else if (e->kind == EK::Struct)
          for (auto& [f, id] : e->fields) mark(id);
        else error(d->loc, "'" + n + "' cannot be exported");
      }
    }
    int mains = 0;
    for (const auto& p : m_.processes) mains += p.name == "main";
    if (mains != 1) error(SourceLoc{1, 1}, mains == 0 ? "no process named 'main'" : "more than one 'main' process");

    // exception state registers of raising shared functions
    int ew = std::max(1, unsigned_bits(m_.exceptions.size()));
    for (auto& f : m_.functions) {
      const TProcess& p = m_.processes[static_cast<size_t>(f.process)];
      if (escaping_exceptions(m_, p.body).empty()) continue;
      f.can_raise = true;
      Object o;
      o.name = "EXC_FUN_" + f.name;
      o.kind = ObjKind::Reg;
      o.type = DataType::logic(ew);
      o.inferred = true;
      f.exc = add_object(std::move(o), p.loc);
    }

    // per-process exception and wait-counter registers used by the lowering
    for (size_t i = 0; i < m_.processes.size(); ++i) {
      TProcess& p = m_.processes[i];
      bool exc = false;
      int64_t longest = 0;
      visit_stmts(p.body, [&](const TStmt& s) {
        if (s.kind == TStmtKind::Raise || s.kind == TStmtKind::Try) exc = true;
        if (s.kind == TStmtKind::Call && m_.functions.at(static_cast<size_t>(s.obj)).can_raise) exc = true;
        if (s.kind == TStmtKind::Wait) longest = std::max(longest, s.cycles);
      });
      proc_ = static_cast<int>(i);
      if (exc) {
        Object o;
        o.name = "EXCEPTION";
        o.global = false;
        o.type = DataType::logic(ew);
        o.inferred = true;
        add_object(std::move(o), p.loc);
      }
      if (longest >= 1) {
        Object o;
        o.name = "WAIT";
        o.global = false;
        o.type = DataType::logic(ceil_log2(static_cast<uint64_t>(longest)) + 1);
        o.inferred = true;
        add_object(std::move(o), m_.processes[i].loc);
      }
    }
    proc_ = -1;

    // barrier group sizes
    for (auto& o : m_.objects) {
      if (o.kind != ObjKind::Barrier) continue;
      std::set<int> procs;
      for (size_t i = 0; i < m_.processes.size(); ++i)
        visit_stmts(m_.processes[i].body, [&](const TStmt& s) {
          if (s.kind == TStmtKind::Method && s.obj == o.id && s.method == "await") procs.insert(static_cast<int>(i));
        });
      o.group = static_cast<int>(procs.size());
    }

    for (const auto& o : m_.objects)
      if (o.type.width < 1) throw InternalError("unresolved type for object " + o.name);
  }

 public:
  TypedModule result() { return std::move(m_); }

  friend TypedModule hls::analyze(const Module&, DiagSink&);
};

TypedModule Sema::run() {
  m_.name = ast_.name;
  chain_ = {globals_};
  for (const auto& dp : ast_.decls) {
    const Decl& d = *dp;
    switch (d.kind) {
      case DeclKind::Process: {
        const std::string& n = d.names[0];
        int p = new_process(n, d.loc);
        Entity e;
        e.kind = EK::Object;
        e.id = m_.processes[static_cast<size_t>(p)].obj;
        bind(globals_, n, e, d.loc);
        m_.processes[static_cast<size_t>(p)].schedule_bb = param_string(d.params, "schedule", "") == "basicblock";
        pending_.push_back({p, &d.body, std::nullopt, "", d.params});
        break;
      }
      case DeclKind::Array:
        if (d.arr == ArrayClass::Process) {
          if (d.sizes.size() != 1) error(d.loc, "multi-dimensional arrays are not supported");
          int64_t n = const_eval(*d.sizes[0], true);
          if (n < 1 || n > 1024) error(d.loc, "process array size out of range");
          for (const auto& name : d.names) {
            Entity e;
            e.kind = EK::ProcArray;
            for (int64_t i = 0; i < n; ++i) {
              int p = new_process(name + "_" + std::to_string(i), d.loc);
              m_.processes[static_cast<size_t>(p)].schedule_bb =
                  param_string(d.params, "schedule", "") == "basicblock";
              e.elems.push_back(m_.processes[static_cast<size_t>(p)].obj);
              pending_.push_back({p, &d.body, i, "", d.params});
            }
            bind(globals_, name, e, d.loc);
          }
          break;
        }
        declare(d, globals_, true, "");
        break;
      case DeclKind::Function: declare_function(d); break;
      case DeclKind::TopStmt: top_stmt(*d.stmt); break;
      default: declare(d, globals_, true, ""); break;
    }
  }
  for (const auto& p : pending_) {
    if (!p.function.empty()) {
      analyze_function(p.function, SourceLoc{});
      continue;
    }
    analyze_body(p.process, *p.body, p.hash, std::make_shared<Scope>());
  }
  finish();
  return std::move(m_);
}

}  // namespace

TypedModule analyze(const Module& module, DiagSink& diags) {
  Sema s(module, diags);
  TypedModule m = s.run();
  throw_if_errors(diags);
  return m;
}

}  // namespace hls
