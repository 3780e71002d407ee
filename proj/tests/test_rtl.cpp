// State lists, schedulers and VHDL emission.

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <regex>

#include "harness.hpp"
#include "hls/rtl.hpp"

using namespace hls;
using namespace hls::testing;

namespace {

struct Design {
  Compiled c;
  VhdlDesign d;
};

Design ex5() {
  Design x{compile(sample("ex5.cp"), {}, "ex5"), {}};
  x.d = emit_vhdl(x.c.module, x.c.programs, "ex5");
  return x;
}

const VhdlFile& file(const VhdlDesign& d, const std::string& name) {
  for (const auto& f : d.files)
    if (f.name == name) return f;
  throw std::runtime_error("no file " + name);
}

// Port name -> direction, from the entity header.
std::map<std::string, std::string> ports(const std::string& vhdl) {
  std::map<std::string, std::string> out;
  std::string head = vhdl.substr(0, vhdl.find("architecture"));
  static const std::regex re(R"(signal (\w+): (in|out) )");
  for (std::sregex_iterator it(head.begin(), head.end(), re), end; it != end; ++it) out[(*it)[1]] = (*it)[2];
  return out;
}

std::vector<std::string> state_names(const std::string& vhdl) {
  static const std::regex block(R"(type pro_states is \(([^)]*)\);)");
  std::smatch m;
  if (!std::regex_search(vhdl, m, block)) return {};
  std::vector<std::string> out;
  std::string body = m[1];
  static const std::regex name(R"(S_\w+)");
  for (std::sregex_iterator it(body.begin(), body.end(), name), end; it != end; ++it) out.push_back(it->str());
  return out;
}

}  // namespace

TEST(Vhdl, Ex5EmitsFiveDesignEntitiesAndManifest) {
  Design x = ex5();
  std::vector<std::string> names;
  for (const auto& f : x.d.files) names.push_back(f.name);
  EXPECT_EQ(names, (std::vector<std::string>{"conpro_support.vhdl", "ex5_FUN_f.vhdl", "ex5_consumer1.vhdl",
                                             "ex5_consumer2.vhdl", "ex5_main.vhdl", "ex5.vhdl"}));
  // the support package holds no entity
  std::vector<std::string> entities;
  static const std::regex re(R"(^entity (\w+) is)");
  for (const auto& f : x.d.files) {
    std::smatch m;
    std::istringstream is(f.text);
    for (std::string line; std::getline(is, line);)
      if (std::regex_search(line, m, re)) entities.push_back(m[1]);
  }
  EXPECT_EQ(entities,
            (std::vector<std::string>{"ex5_FUN_f", "ex5_consumer1", "ex5_consumer2", "ex5_main", "MOD_ex5"}));
  EXPECT_NE(x.d.manifest.find("top MOD_ex5\n"), std::string::npos);
  size_t at = 0;
  for (const auto& n : names) {
    size_t k = x.d.manifest.find("vhdl " + n + "\n", at);
    ASSERT_NE(k, std::string::npos) << n;
    at = k;
  }
}

TEST(Vhdl, Consumer1PortsFollowTheNamingConvention) {
  Design x = ex5();
  // the consumer1 entity of the listing
  std::map<std::string, std::string> want = {
      {"ARRAY_data_out_WR", "out"},       {"ARRAY_data_out_WE", "out"},     {"ARRAY_data_out_GD", "in"},
      {"ARRAY_data_out_SEL", "out"},      {"MUTEX_LOCK_FUN_f_LOCK", "out"}, {"MUTEX_LOCK_FUN_f_UNLOCK", "out"},
      {"MUTEX_LOCK_FUN_f_GD", "in"},      {"SEMA_sem_DOWN", "out"},         {"SEMA_sem_UP", "out"},
      {"SEMA_sem_GD", "in"},              {"REG_RET_FUN_f_y_RD", "in"},     {"PRO_FUN_f_CALL", "out"},
      {"PRO_FUN_f_GD", "in"},             {"ARRAY_data_in_RD", "in"},       {"ARRAY_data_in_SEL", "out"},
      {"REG_ARG_FUN_f_x_WR", "out"},      {"REG_ARG_FUN_f_x_WE", "out"},    {"PRO_consumer1_ENABLE", "in"},
      {"PRO_consumer1_END", "out"},       {"conpro_system_clk", "in"},      {"conpro_system_reset", "in"}};
  EXPECT_EQ(ports(file(x.d, "ex5_consumer1.vhdl").text), want);
  // the top level talks to the outside through the exported register only
  EXPECT_EQ(ports(file(x.d, "ex5.vhdl").text),
            (std::map<std::string, std::string>{{"mon_RD", "out"}, {"CLK", "in"}, {"RESET", "in"}}));
  auto main_ports = ports(file(x.d, "ex5_main.vhdl").text);
  for (const char* p : {"SEMA_sem_INIT", "PRO_consumer1_START", "PRO_consumer2_GD", "REG_mon_WR", "REG_mon_WE",
                        "ARRAY_data_in_WR", "ARRAY_data_out_RD", "PRO_main_ENABLE", "PRO_main_END"})
    EXPECT_TRUE(main_ports.count(p)) << p;
}

TEST(Vhdl, EveryProcessEntityHasTheFourProcessSplit) {
  Design x = ex5();
  for (const char* f : {"ex5_FUN_f.vhdl", "ex5_consumer1.vhdl", "ex5_consumer2.vhdl", "ex5_main.vhdl"}) {
    const std::string& t = file(x.d, f).text;
    std::vector<std::string> procs;
    static const std::regex re(R"((\w+): process\()");
    for (std::sregex_iterator it(t.begin(), t.end(), re), end; it != end; ++it) procs.push_back((*it)[1]);
    EXPECT_EQ(procs, (std::vector<std::string>{"state_transition", "control_path", "data_path", "data_trans"})) << f;
    EXPECT_NE(t.find("if conpro_system_reset='1' or PRO_"), std::string::npos) << f;
  }
}

TEST(Vhdl, Consumer1StateEnumMatchesListing) {
  Design x = ex5();
  std::vector<std::string> want = {"S_consumer1_start", "S_i1_fun",    "S_i2_for_loop", "S_i2_for_loop_cond",
                                   "S_i3_fun",          "S_i4_assign", "S_i5_fun",      "S_i6_assign",
                                   "S_i7_fun",          "S_i2_for_loop_incr", "S_i8_fun", "S_consumer1_end"};
  EXPECT_EQ(state_names(file(x.d, "ex5_consumer1.vhdl").text), want);
  EXPECT_EQ(vhdl_state_count(file(x.d, "ex5_consumer1.vhdl").text), 12);
}

TEST(Vhdl, ValidatorAcceptsEveryGeneratedFile) {
  for (const char* s : {"ex2.cp", "ex3.cp", "ex5.cp", "ex9.cp", "ex11.cp"})
    for (const auto& m : all_modes()) {
      Compiled c = compile(sample(s), options(m));
      for (const auto& f : emit_vhdl(c.module, c.programs, "top").files) {
        auto problems = validate_vhdl(f);
        EXPECT_TRUE(problems.empty()) << s << " " << m.name() << " " << f.name << ": " << problems.front();
      }
    }
}

TEST(Vhdl, ValidatorRejectsBrokenFiles) {
  Design x = ex5();
  VhdlFile f = file(x.d, "ex5_consumer1.vhdl");
  ASSERT_TRUE(validate_vhdl(f).empty());

  VhdlFile unbalanced = f;
  unbalanced.text.replace(unbalanced.text.find("end process data_path;"), 22, "");
  EXPECT_FALSE(validate_vhdl(unbalanced).empty());

  // one state missing from the control path case
  VhdlFile missing = f;
  size_t cp = missing.text.find("control_path: process");
  size_t k = missing.text.find("when S_i3_fun =>", cp);
  ASSERT_NE(k, std::string::npos);
  missing.text.replace(k, 16, "when others =>");
  EXPECT_FALSE(validate_vhdl(missing).empty());

  VhdlFile undeclared = f;
  undeclared.text.replace(undeclared.text.find("LOOP_i_0 <= "), 8, "LOOP_q_9");
  EXPECT_FALSE(validate_vhdl(undeclared).empty());
}

// Pinned output. A missing golden file is written from the current output.
TEST(Vhdl, Ex5MatchesGoldenFiles) {
  Design x = ex5();
  namespace fs = std::filesystem;
  fs::path dir = fs::path(HLS_GOLDEN_DIR) / "ex5";
  fs::create_directories(dir);
  std::vector<VhdlFile> all = x.d.files;
  all.push_back({"ex5.manifest", x.d.manifest});
  for (const auto& f : all) {
    fs::path p = dir / f.name;
    if (!fs::exists(p)) {
      std::ofstream(p, std::ios::binary) << f.text;
      std::cout << "pinned " << p << "\n";
      continue;
    }
    EXPECT_EQ(read_text(p.string()), f.text) << "golden mismatch: " << p;
  }
}

TEST(StateList, TextListsTransitionsAndData) {
  Compiled c = compile(sample("ex5.cp"), {}, "ex5");
  for (const auto& p : c.programs) {
    if (p.process != "FUN_f") continue;
    EXPECT_EQ(state_list_text(build_state_list(c.module, p, "ex5")),
              "process FUN_f: 3 states\n"
              "  S_FUN_f_start\n"
              "    next S_i1_assign\n"
              "  S_i1_assign\n"
              "    next S_FUN_f_end\n"
              "    Data_out REG_RET_FUN_f_y_WR <= resize(REG_ARG_FUN_f_x_RD * REG_ARG_FUN_f_x_RD,16);\n"
              "    Data_out REG_RET_FUN_f_y_WE <= '1';\n"
              "  S_FUN_f_end\n"
              "    end\n");
  }
}

TEST(Schedulers, AccessorsInDeclarationOrder) {
  Compiled c = compile(sample("ex5.cp"), {}, "ex5");
  std::map<std::string, std::string> text;
  for (const auto& s : build_schedulers(c.module, c.programs)) text[s.name] = scheduler_text(s);
  EXPECT_EQ(text["sem"], "scheduler sem (semaphore, static): consumer1 consumer2 main [down,init,up]");
  EXPECT_EQ(text["LOCK_FUN_f"], "scheduler LOCK_FUN_f (mutex, static): consumer1 consumer2 [lock,unlock]");
  EXPECT_EQ(text["FUN_f"], "scheduler FUN_f (process, static): consumer1 consumer2 [call]");
  // function argument and result registers are private to the call protocol
  EXPECT_FALSE(text.count("ARG_FUN_f_x"));
  EXPECT_FALSE(text.count("RET_FUN_f_y"));

  Compiled p = compile(sample("ex11.cp"));
  int forks = 0;
  for (const auto& s : build_schedulers(p.module, p.programs)) {
    if (s.name.rfind("fork_", 0) != 0) continue;
    ++forks;
    EXPECT_EQ(s.policy, SchedPolicy::Fifo);
    int i = std::stoi(s.name.substr(5));
    // each fork is shared by two neighbours
    std::vector<std::string> want = {"philosopher_" + std::to_string(i == 0 ? 0 : i - 1),
                                     "philosopher_" + std::to_string(i == 0 ? 4 : i)};
    EXPECT_EQ(s.accessors, want) << s.name;
  }
  EXPECT_EQ(forks, 5);
}
