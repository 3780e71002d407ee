#include "laws.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <vector>

#include "harness.hpp"

namespace hls::testing {

namespace {

int pick(std::mt19937_64& g, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(g); }

std::string delay(std::mt19937_64& g, int max) {
  int n = pick(g, 0, max);
  return n ? "wait for " + std::to_string(n) + "; " : "";
}

std::string starts(const std::vector<std::string>& procs) {
  std::string s;
  for (const auto& p : procs) s += p + ".start(); ";
  return s;
}

bool acquired(const TraceEvent& e, const std::string& what) {
  return (e.kind == "grant" || e.kind == "unblock") && e.detail == what;
}

SimConfig traced(bool states = false) {
  SimConfig c;
  c.trace = true;
  c.trace_states = states;
  return c;
}

std::map<int64_t, std::vector<TraceEvent>> by_cycle(const std::vector<TraceEvent>& t) {
  std::map<int64_t, std::vector<TraceEvent>> at;
  for (const auto& e : t) at[e.cycle].push_back(e);
  return at;
}

std::string fail(const std::string& what, int64_t cycle, const std::string& src) {
  return what + " (cycle " + std::to_string(cycle) + ")\n" + src;
}

// Consumers get their values in array slots; `reads` splits `total` among them.
std::vector<int> split(std::mt19937_64& g, int total, int parts) {
  std::vector<int> out(static_cast<size_t>(parts), 0);
  for (int k = 0; k < total; ++k) ++out[static_cast<size_t>(pick(g, 0, parts - 1))];
  return out;
}

}  // namespace

std::string queue_laws(uint64_t seed, bool channel, LawStats& st) {
  std::mt19937_64 g(seed);
  int depth = channel ? 1 : pick(g, 1, 5);
  int np = pick(g, 1, 3), nc = pick(g, 1, 2);
  std::vector<int> sent;
  int total = 0;
  for (int p = 0; p < np; ++p) total += sent.emplace_back(pick(g, 1, 6));
  std::vector<int> reads = split(g, total, nc);
  std::string s = channel ? "channel q: int[8];\n" : "queue q: int[8] with depth=" + std::to_string(depth) + ";\n";
  s += "array got: reg[" + std::to_string(total) + "] of int[8];\nexport got;\n";
  std::vector<std::string> names;
  for (int p = 0; p < np; ++p) {
    names.push_back("prod" + std::to_string(p));
    s += "process " + names.back() + ": begin ";
    for (int i = 0; i < sent[static_cast<size_t>(p)]; ++i) s += delay(g, 4) + "q <- " + std::to_string(p * 16 + i) + "; ";
    s += "end;\n";
  }
  std::vector<int> base;
  for (int c = 0, b = 0; c < nc; b += reads[static_cast<size_t>(c)], ++c) {
    names.push_back("cons" + std::to_string(c));
    base.push_back(b);
    s += "process " + names.back() + ": begin reg x: int[8]; ";
    for (int i = 0; i < reads[static_cast<size_t>(c)]; ++i)
      s += delay(g, 4) + "x <- q; got.[" + std::to_string(b + i) + "] <- x; ";
    s += "end;\n";
  }
  // start order is random too, so some consumers begin on an empty queue
  std::shuffle(names.begin(), names.end(), g);
  s += "process main: begin " + starts(names) + "end;\n";

  Compiled c = compile(s);
  Simulator sim(c.module, c.programs, traced());
  SimResult r = sim.run(100000);
  if (r.termination != Termination::AllEnded) return "did not finish\n" + s;

  std::vector<int64_t> written, read;
  std::map<std::string, int> nth_w, nth_r;
  std::set<std::string> writers, readers;  // currently waiting
  int occ = 0;
  auto at = by_cycle(r.trace);
  for (int64_t cyc = 0; cyc <= r.cycles; ++cyc) {
    int before = occ, grants = 0;
    for (const auto& e : at[cyc]) {
      if (acquired(e, "q.write")) {
        written.push_back(std::stoi(e.process.substr(4)) * 16 + nth_w[e.process]++);
        ++occ, ++grants;
        writers.erase(e.process);
      } else if (acquired(e, "q.read")) {
        int k = std::stoi(e.process.substr(4));
        read.push_back(sim.value("got", base[static_cast<size_t>(k)] + nth_r[e.process]++));
        --occ, ++grants;
        readers.erase(e.process);
      } else if (e.kind == "block" && e.detail == "q.write") {
        writers.insert(e.process);
      } else if (e.kind == "block" && e.detail == "q.read") {
        readers.insert(e.process);
      }
    }
    if (occ < 0 || occ > depth) return fail("occupancy " + std::to_string(occ), cyc, s);
    if (grants > 1) return fail("two grants in one cycle", cyc, s);
    if (grants) continue;
    // nobody was served: whoever waits must be forbidden by the queue state
    if (!writers.empty()) {
      if (before != depth) return fail("writer waits on a non-full queue", cyc, s);
      ++st.full_waits;
    }
    if (!readers.empty()) {
      if (before != 0) return fail("reader waits on a non-empty queue", cyc, s);
      ++st.empty_waits;
    }
  }
  if (static_cast<int>(written.size()) != total) return "lost writes\n" + s;
  if (read != written) return "read order differs from write order\n" + s;
  return "";
}

std::string rendezvous_laws(uint64_t seed, LawStats& st) {
  std::mt19937_64 g(seed);
  int nw = pick(g, 1, 3), nr = pick(g, 1, 2);
  std::vector<int> counts;
  int total = 0;
  for (int w = 0; w < nw; ++w) total += counts.emplace_back(pick(g, 1, 4));
  std::vector<int> reads = split(g, total, nr);
  std::string s = "channel ch: int[8] with model=\"unbuffered\";\narray got: reg[" + std::to_string(total) +
                  "] of int[8];\nexport got;\n";
  std::vector<std::string> names;
  for (int w = 0; w < nw; ++w) {
    names.push_back("wr" + std::to_string(w));
    s += "process " + names.back() + ": begin ";
    for (int i = 0; i < counts[static_cast<size_t>(w)]; ++i) s += delay(g, 5) + "ch <- " + std::to_string(w * 16 + i) + "; ";
    s += "end;\n";
  }
  std::vector<int> base;
  for (int k = 0, b = 0; k < nr; b += reads[static_cast<size_t>(k)], ++k) {
    names.push_back("rd" + std::to_string(k));
    base.push_back(b);
    s += "process " + names.back() + ": begin reg x: int[8]; ";
    for (int i = 0; i < reads[static_cast<size_t>(k)]; ++i)
      s += delay(g, 5) + "x <- ch; got.[" + std::to_string(b + i) + "] <- x; ";
    s += "end;\n";
  }
  std::shuffle(names.begin(), names.end(), g);
  s += "process main: begin " + starts(names) + "end;\n";

  Compiled c = compile(s);
  Simulator sim(c.module, c.programs, traced());
  SimResult r = sim.run(100000);
  if (r.termination != Termination::AllEnded) return "did not finish\n" + s;

  std::map<std::string, int> nth_w, nth_r;
  std::set<std::string> offered;
  int transfers = 0;
  for (const auto& [cyc, evs] : by_cycle(r.trace)) {
    std::vector<int64_t> wv, rv;
    for (const auto& e : evs) {
      if (e.kind == "block" && e.detail == "ch.write") offered.insert(e.process);
      if (e.kind == "block" && e.detail == "ch.read") ++st.reader_first;
      if (acquired(e, "ch.write")) {
        // a writer always waits for its partner
        if (e.kind != "unblock" || !offered.erase(e.process)) return fail("writer passed alone", cyc, s);
        wv.push_back(std::stoi(e.process.substr(2)) * 16 + nth_w[e.process]++);
      }
      if (acquired(e, "ch.read")) {
        int k = std::stoi(e.process.substr(2));
        rv.push_back(sim.value("got", base[static_cast<size_t>(k)] + nth_r[e.process]++));
        st.writer_first += e.kind == "grant";
      }
    }
    if (wv.size() != rv.size()) return fail("unpaired transfer", cyc, s);
    if (wv.size() > 1) return fail("two transfers in one cycle", cyc, s);
    if (wv != rv) return fail("value changed in transfer", cyc, s);
    transfers += static_cast<int>(wv.size());
  }
  if (transfers != total) return "lost transfers\n" + s;
  return "";
}

std::string barrier_laws(uint64_t seed, LawStats& st) {
  std::mt19937_64 g(seed);
  int n = pick(g, 2, 5), rounds = pick(g, 1, 3);
  std::string s = "object b: barrier;\narray seen: reg[" + std::to_string(n) + "] of int[8];\nexport seen;\n";
  std::vector<std::string> names;
  for (int p = 0; p < n; ++p) {
    names.push_back("w" + std::to_string(p));
    s += "process " + names.back() + ": begin ";
    for (int k = 0; k < rounds; ++k)
      s += delay(g, 6) + "b.await(); seen.[" + std::to_string(p) + "] <- " + std::to_string(k + 1) + "; ";
    s += "end;\n";
  }
  std::shuffle(names.begin(), names.end(), g);
  s += "process main: begin " + starts(names) + "end;\n";

  Compiled c = compile(s);
  SimResult r = Simulator(c.module, c.programs, traced()).run(100000);
  if (r.termination != Termination::AllEnded) return "did not finish\n" + s;

  std::map<std::string, int64_t> arrived;
  int releases = 0;
  for (const auto& [cyc, evs] : by_cycle(r.trace)) {
    int released = 0;
    for (const auto& e : evs) {
      if (e.kind == "block" && e.detail == "b.await") arrived[e.process] = cyc;
      if (acquired(e, "b.await")) {
        ++released;
        if (e.kind == "grant") arrived[e.process] = cyc;  // the last arrival passes directly
      }
    }
    if (!released) continue;
    if (released != n || static_cast<int>(arrived.size()) != n) return fail("partial release", cyc, s);
    int64_t last = 0;
    for (const auto& [p, a] : arrived) last = std::max(last, a);
    if (last != cyc) return fail("release before the last arrival", cyc, s);
    arrived.clear();
    ++releases;
  }
  if (releases != rounds || !arrived.empty()) return "missing release\n" + s;
  st.releases += releases;
  return "";
}

std::string event_laws(uint64_t seed, LawStats& st) {
  std::mt19937_64 g(seed);
  bool latched = seed % 2;
  int nw = pick(g, 1, 3);
  std::string s = std::string("object ev: event") + (latched ? " with latch" : "") + ";\narray done: reg[" +
                  std::to_string(nw) + "] of int[8];\nexport done;\n";
  std::vector<std::string> names;
  for (int w = 0; w < nw; ++w) {
    names.push_back("wt" + std::to_string(w));
    s += "process " + names.back() + ": begin " + delay(g, 8) + "ev.await(); done.[" + std::to_string(w) +
         "] <- 1; end;\n";
  }
  names.push_back("waker");
  s += "process waker: begin " + delay(g, 8) + "ev.wakeup(); end;\n";
  std::shuffle(names.begin(), names.end(), g);
  s += "process main: begin " + starts(names) + "end;\n";

  Compiled c = compile(s);
  Simulator sim(c.module, c.programs, traced());
  SimResult r = sim.run(100000);

  std::map<std::string, int64_t> arrival;
  int64_t wake = -1;
  for (const auto& e : r.trace) {
    if (e.detail == "ev.wakeup" && e.kind == "grant") wake = e.cycle;
    if (e.detail == "ev.await" && (e.kind == "block" || e.kind == "grant") && !arrival.count(e.process))
      arrival[e.process] = e.cycle;
  }
  if (wake < 0 || static_cast<int>(arrival.size()) != nw) return "missing wakeup or waiter\n" + s;

  // waiters present before the wakeup cycle go; if there were none, a latched
  // event lets the earliest later waiter pass (ties in declaration order)
  std::set<std::string> expect;
  for (const auto& [p, a] : arrival) {
    if (a < wake) expect.insert(p);
    st.before += a < wake;
    st.same += a == wake;
    st.after += a > wake;
  }
  if (expect.empty() && latched) {
    std::string first;
    for (int w = 0; w < nw; ++w) {
      std::string p = "wt" + std::to_string(w);
      if (first.empty() || arrival[p] < arrival[first]) first = p;
    }
    expect.insert(first);
  }
  for (int w = 0; w < nw; ++w)
    if (sim.value("done", w) != (expect.count("wt" + std::to_string(w)) ? 1 : 0))
      return "wt" + std::to_string(w) + " released wrongly\n" + s;
  bool everyone = static_cast<int>(expect.size()) == nw;
  if (r.termination != (everyone ? Termination::AllEnded : Termination::Deadlock)) return "wrong termination\n" + s;
  if (!everyone) {
    if (static_cast<int>(r.deadlock.size()) != nw - static_cast<int>(expect.size())) return "wrong deadlock set\n" + s;
    for (const auto& d : r.deadlock)
      if (d.object != "ev" || d.op != "await") return "unexpected blocker " + d.process + "\n" + s;
  }
  return "";
}

std::string semaphore_laws(uint64_t seed, LawStats& st) {
  std::mt19937_64 g(seed);
  int depth = pick(g, 1, 4), init = pick(g, 0, depth), np = pick(g, 2, 4);
  std::string s = "object s: semaphore with depth=" + std::to_string(depth) + " and init=" + std::to_string(init) +
                  ";\n";
  std::vector<std::string> names;
  for (int p = 0; p < np; ++p) {
    names.push_back("u" + std::to_string(p));
    s += "process " + names.back() + ": begin ";
    int ops = pick(g, 1, 5);
    for (int k = 0; k < ops; ++k) s += delay(g, 4) + (pick(g, 0, 1) ? "s.down(); " : "s.up(); ");
    s += "end;\n";
  }
  std::shuffle(names.begin(), names.end(), g);
  s += "process main: begin " + starts(names) + "end;\n";

  Compiled c = compile(s);
  SimResult r = Simulator(c.module, c.programs, traced()).run(100000);
  if (r.termination == Termination::CycleLimit) return "cycle limit\n" + s;

  std::set<std::string> wd, wu;
  int count = init;
  auto at = by_cycle(r.trace);
  for (int64_t cyc = 0; cyc <= r.cycles; ++cyc) {
    int before = count, grants = 0;
    for (const auto& e : at[cyc]) {
      if (acquired(e, "s.down")) --count, ++grants, wd.erase(e.process);
      if (acquired(e, "s.up")) ++count, ++grants, wu.erase(e.process);
      if (e.kind == "block" && e.detail == "s.down") wd.insert(e.process);
      if (e.kind == "block" && e.detail == "s.up") wu.insert(e.process);
    }
    if (grants > 1) return fail("two grants in one cycle", cyc, s);
    if (count < 0 || count > depth) return fail("count " + std::to_string(count), cyc, s);
    if (grants) continue;
    if (!wd.empty()) {
      if (before != 0) return fail("down waits with count " + std::to_string(before), cyc, s);
      ++st.down_waits;
    }
    if (!wu.empty()) {
      if (before != depth) return fail("up waits below depth", cyc, s);
      ++st.up_waits;
    }
  }
  if (r.termination == Termination::Deadlock) {
    ++st.deadlocks;
    // what stays blocked is exactly what the count forbids
    for (const auto& d : r.deadlock)
      if (d.object != "s" || count != (d.op == "down" ? 0 : depth)) return "unjustified deadlock of " + d.process + "\n" + s;
  }
  return "";
}

// ------------------------------------------------------------ schedulers

namespace {

enum class Target { Register, Mutex };

struct Template {
  int n = 0, k = 0;
  Target target = Target::Register;
  std::string src;
  Compiled c;
};

// Process i makes k requests; before request j it spins d_i_j iterations.
std::string template_source(int n, int k, Target t) {
  std::string s = "reg g: int[8];\nexport g;\n";
  if (t == Target::Mutex) s += "object m: mutex;\n";
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) s += "reg d_" + std::to_string(i) + "_" + std::to_string(j) + ": int[8];\n";
  std::string st;
  for (int i = 0; i < n; ++i) {
    std::string p = "p" + std::to_string(i);
    st += p + ".start(); ";
    s += "process " + p + ": begin reg w: int[8]; ";
    for (int j = 0; j < k; ++j) {
      s += "w <- 0; while w < d_" + std::to_string(i) + "_" + std::to_string(j) + " do w <- w + 1; ";
      if (t == Target::Register) s += "g <- " + std::to_string(i + 1) + "; ";
      else s += "m.lock(); w <- " + std::to_string(i + 1) + "; m.unlock(); ";
    }
    s += "end;\n";
  }
  return s + "process main: begin " + st + "end;\n";
}

struct Request {
  int proc = 0;
  int64_t arrival = 0;
  std::string op;
};

std::string check_run(const Template& t, SchedPolicy pol, const SimResult& r, LawStats& st, const std::string& why) {
  const std::string obj = t.target == Target::Register ? "g" : "m";
  if (r.termination != Termination::AllEnded) return "did not finish: " + why;
  std::map<std::string, Request> pending;
  std::map<std::string, int64_t> entered, immediate;
  int owner = -1, served = 0;
  auto at = by_cycle(r.trace);
  for (int64_t cyc = 0; cyc <= r.cycles; ++cyc) {
    std::vector<const TraceEvent*> grants;
    for (const auto& e : at[cyc]) {
      if (e.kind == "state-enter") {
        if (auto it = immediate.find(e.process); it != immediate.end()) {
          // uncontended: the state was loaded, granted at once and left two cycles later
          if (e.cycle - entered[e.process] != 2) return fail("uncontended access not two cycles", cyc, why);
          immediate.erase(it);
          ++st.uncontended;
        }
        entered[e.process] = e.cycle;
        continue;
      }
      if (e.detail.rfind(obj + ".", 0) != 0) continue;
      Request q{std::stoi(e.process.substr(1)), cyc, e.detail.substr(obj.size() + 1)};
      if (e.kind == "block") {
        pending[e.process] = q;
      } else if (e.kind == "grant") {
        pending[e.process] = q;
        grants.push_back(&e);
        immediate[e.process] = cyc;
        // the requesting state was loaded at the previous edge
        if (entered[e.process] != cyc - 1) return fail("grant outside the requesting state", cyc, why);
      } else if (e.kind == "unblock") {
        grants.push_back(&e);
        ++st.contended;
      }
    }
    if (grants.size() > 1) return fail("two grants in one cycle", cyc, why);
    const Request* expect = nullptr;
    for (const auto& [name, q] : pending) {
      if (q.op == "lock" && owner >= 0) continue;
      bool better = !expect || (pol == SchedPolicy::Static
                                    ? q.proc < expect->proc
                                    : std::tie(q.arrival, q.proc) < std::tie(expect->arrival, expect->proc));
      if (better) expect = &q;
    }
    if (!expect) {
      if (!grants.empty()) return fail("grant without an enabled request", cyc, why);
      continue;
    }
    if (grants.empty()) return fail("idle scheduler with an enabled request", cyc, why);
    if (grants[0]->process != "p" + std::to_string(expect->proc))
      return fail(grants[0]->process + " granted instead of p" + std::to_string(expect->proc), cyc, why);
    if (t.target == Target::Mutex) owner = expect->op == "lock" ? expect->proc : -1;
    pending.erase(grants[0]->process);
    ++served;
  }
  if (!pending.empty() || served != t.n * t.k * (t.target == Target::Mutex ? 2 : 1)) return "requests left: " + why;
  return "";
}

// Cycle of each process's request when process i first waits waits[i] cycles.
std::vector<int64_t> request_cycles(const std::vector<int>& waits, std::vector<std::string>* order) {
  std::string src = "reg g: int[8];\nexport g;\n", st;
  for (size_t p = 0; p < waits.size(); ++p) {
    std::string n = "p" + std::to_string(p);
    src += "process " + n + ": begin wait for " + std::to_string(waits[p]) + "; g <- " + std::to_string(p + 1) + "; end;\n";
    st += n + ".start(); ";
  }
  Compiled c = compile(src + "process main: begin " + st + "end;\n");
  SimResult r = Simulator(c.module, c.programs, traced()).run(1000);
  std::vector<int64_t> at(waits.size(), -1);
  for (const auto& e : r.trace) {
    if (e.detail != "g.write") continue;
    if (e.kind == "block" || e.kind == "grant") at[static_cast<size_t>(std::stoi(e.process.substr(1)))] = e.cycle;
    if (order && (e.kind == "grant" || e.kind == "unblock")) order->push_back(e.process);
  }
  return at;
}

}  // namespace

struct SchedulerTrials::Impl {
  std::vector<Template> ts;
};

SchedulerTrials::SchedulerTrials() : impl_(std::make_unique<Impl>()) {
  for (Target tg : {Target::Register, Target::Mutex})
    for (int n = 2; n <= 4; ++n)
      for (int k = 1; k <= 3; ++k) {
        std::string src = template_source(n, k, tg);
        impl_->ts.push_back({n, k, tg, src, compile(src)});
      }
}

SchedulerTrials::~SchedulerTrials() = default;

std::string SchedulerTrials::run(int trial, std::mt19937_64& g, LawStats& st) const {
  const auto& ts = impl_->ts;
  const Template& t = ts[static_cast<size_t>(trial) % ts.size()];
  SchedPolicy pol = (trial / static_cast<int>(ts.size())) % 2 ? SchedPolicy::Fifo : SchedPolicy::Static;
  SimConfig cfg = traced(true);
  cfg.policy[t.target == Target::Register ? "g" : "m"] = pol;
  Simulator sim(t.c.module, t.c.programs, cfg);
  // small delays make same-cycle collisions common
  std::ostringstream why;
  why << "trial " << trial << (pol == SchedPolicy::Fifo ? " fifo" : " static") << " delays";
  for (int p = 0; p < t.n; ++p)
    for (int j = 0; j < t.k; ++j) {
      int v = pick(g, 0, 6);
      sim.set_value("d_" + std::to_string(p) + "_" + std::to_string(j), -1, v);
      why << ' ' << v;
    }
  SimResult r = sim.run(100000);
  return check_run(t, pol, r, st, why.str() + "\n" + t.src);
}

std::string same_cycle_static_order() {
  // calibrate the start offsets, then line everybody up on the latest starter
  auto base = request_cycles({1, 1, 1, 1}, nullptr);
  int64_t target = *std::max_element(base.begin(), base.end());
  std::vector<int> waits;
  for (int64_t b : base) waits.push_back(static_cast<int>(1 + target - b));
  std::vector<std::string> order;
  auto at = request_cycles(waits, &order);
  for (int64_t a : at)
    if (a != at[0]) return "requests not in one cycle";
  if (order != std::vector<std::string>{"p0", "p1", "p2", "p3"}) {
    std::string got;
    for (const auto& p : order) got += p + " ";
    return "served in order " + got;
  }
  return "";
}

std::string static_starvation() {
  // a write loop iteration takes three cycles, so three perpetual writers
  // keep the register busy in every cycle
  const std::string src =
      "reg g: int[8];\nexport g;\n"
      "process p0: begin always do g <- 1; end;\n"
      "process p1: begin always do g <- 2; end;\n"
      "process p2: begin always do g <- 3; end;\n"
      "process p3: begin wait for 4; g <- 4; end;\n"
      "process main: begin p0.start(); p1.start(); p2.start(); p3.start(); end;\n";
  Compiled c = compile(src);
  auto served = [&](SchedPolicy pol) {
    SimConfig cfg;
    cfg.policy["g"] = pol;
    Simulator sim(c.module, c.programs, cfg);
    sim.run(2000);
    return sim.status("p3") == ProcStatus::Ended;
  };
  if (served(SchedPolicy::Static)) return "late writer served under static priority";
  if (!served(SchedPolicy::Fifo)) return "late writer starved under fifo";
  return "";
}

}  // namespace hls::testing
