#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code{-1};
  std::string out;
  std::string err;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Runs the installed binary with the given argument string, capturing
/// both streams through temp files.
CliResult cli(const std::string& args) {
  static int serial = 0;
  fs::path dir = fs::temp_directory_path() / "hmdp_cli_io";
  fs::create_directories(dir);
  fs::path out = dir / ("out" + std::to_string(++serial));
  fs::path err = dir / ("err" + std::to_string(serial));
  std::string cmd = std::string("\"") + HMDP_CLI_BINARY + "\" " + args + " >\"" +
                    out.string() + "\" 2>\"" + err.string() + "\"";
  int raw = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("hmdp_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

/// Extracts the number following "<key>: " in the program output.
double grab(const std::string& text, const std::string& key) {
  std::size_t at = text.find(key + ": ");
  REQUIRE(at != std::string::npos);
  return std::strtod(text.c_str() + at + key.size() + 2, nullptr);
}

fs::path gen_token(const std::string& name) {
  fs::path dir = fresh_dir(name);
  CliResult r = cli("gen token --out " + dir.string());
  REQUIRE(r.code == 0);
  return dir;
}

}  // namespace

TEST_CASE("gen writes a complete loadable bundle") {
  fs::path dir = fresh_dir("gen");
  CliResult r = cli("gen token --out " + dir.string());
  CHECK(r.code == 0);
  CHECK(r.out.find("13 macro states, 19 flat states") != std::string::npos);
  CHECK(fs::exists(dir / "bundle.json"));
  CHECK(fs::exists(dir / "template.txt"));
  CHECK(fs::exists(dir / "macro.txt"));
}

TEST_CASE("solve converges on the token bundle") {
  fs::path dir = gen_token("solve");
  CliResult r = cli("solve " + dir.string() + " --eta 0.5");
  CHECK(r.code == 0);
  CHECK(grab(r.out, "lower bound") == doctest::Approx(12.865).epsilon(1e-9));
  CHECK(grab(r.out, "upper bound") == doctest::Approx(12.865).epsilon(1e-9));
  CHECK(r.out.find("iterations: 9") != std::string::npos);
  CHECK(r.out.find("macro checks: 2") != std::string::npos);
  CHECK(r.out.find("fully refined: yes") != std::string::npos);
}

TEST_CASE("the trace file carries the full check history") {
  fs::path dir = gen_token("trace");
  fs::path trace = dir / "trace.json";
  CliResult r = cli("solve " + dir.string() + " --eta 0.5 --trace " +
                    trace.string());
  REQUIRE(r.code == 0);
  nlohmann::json arr = nlohmann::json::parse(read_file(trace));
  REQUIRE(arr.is_array());
  REQUIRE(arr.size() == 2);
  for (const auto& entry : arr) {
    for (const char* key :
         {"iter", "lb", "ub", "wall_ms", "queue_size", "refined_count"})
      CHECK(entry.contains(key));
    CHECK(entry["wall_ms"].get<double>() >= 0.0);
  }
  CHECK(arr[0]["iter"] == 1);
  CHECK(arr[0]["lb"].get<double>() == doctest::Approx(7.68).epsilon(1e-9));
  CHECK(arr[0]["ub"].get<double>() == doctest::Approx(18.75).epsilon(1e-9));
  CHECK(arr[0]["refined_count"] == 0);
  CHECK(arr[1]["iter"] == 9);
  CHECK(arr[1]["refined_count"] == 6);
  CHECK(arr[1]["queue_size"] == 0);
  CHECK(arr[0]["lb"].get<double>() <= arr[1]["lb"].get<double>());
  CHECK(arr[0]["ub"].get<double>() >= arr[1]["ub"].get<double>());
}

TEST_CASE("enumerate and flatten agree on the exact token value") {
  fs::path dir = gen_token("exact");
  CliResult en = cli("enumerate " + dir.string());
  CHECK(en.code == 0);
  CHECK(grab(en.out, "value") == doctest::Approx(12.865).epsilon(1e-9));
  CHECK(en.out.find("calls: 6") != std::string::npos);

  CliResult fl = cli("flatten " + dir.string());
  CHECK(fl.code == 0);
  CHECK(grab(fl.out, "value") == doctest::Approx(12.865).epsilon(1e-9));
  CHECK(fl.out.find("flat states: 19") != std::string::npos);
}

TEST_CASE("info summarizes the bundle") {
  fs::path dir = gen_token("info");
  CliResult r = cli("info " + dir.string());
  CHECK(r.code == 0);
  CHECK(r.out.find("mode: single") != std::string::npos);
  CHECK(r.out.find("macro states: 13 (6 calls)") != std::string::npos);
  CHECK(r.out.find("template states: 3 (1 exits)") != std::string::npos);
  CHECK(r.out.find("parameters: p in [") != std::string::npos);
  CHECK(r.out.find("flat states: 19") != std::string::npos);
  CHECK(r.out.find("call-local optimality: justified") != std::string::npos);
}

TEST_CASE("chain-grid models run end to end") {
  fs::path dir = fresh_dir("grid");
  CliResult g = cli("gen chain-grid --out " + dir.string() +
                    " --depth 2 --breadth 3 --template-length 4 --seed 11");
  REQUIRE(g.code == 0);
  double en = grab(cli("enumerate " + dir.string()).out, "value");
  double fl = grab(cli("flatten " + dir.string()).out, "value");
  CHECK(std::abs(en - fl) <= 1e-6);

  CliResult s = cli("solve " + dir.string() + " --eta 0.9");
  CHECK(s.code == 0);
  CHECK(grab(s.out, "lower bound") <= en + 1e-6);
  CHECK(grab(s.out, "upper bound") >= en - 1e-6);
}

TEST_CASE("a zero eta requests exactly one macro analysis") {
  fs::path dir = gen_token("eta0");
  CliResult r = cli("solve " + dir.string() + " --eta 0");
  CHECK(r.code == 0);
  CHECK(r.out.find("iterations: 0") != std::string::npos);
  CHECK(r.out.find("macro checks: 1") != std::string::npos);
  CHECK(r.out.find("fully refined: no") != std::string::npos);
  CHECK(r.out.find("upper bound: inf") != std::string::npos);
}

TEST_CASE("missing input is an input failure") {
  CliResult r = cli("solve /definitely/not/here");
  CHECK(r.code == 1);
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("syntax errors report their location") {
  fs::path dir = fresh_dir("broken");
  std::ofstream(dir / "template.txt")
      << "param p in [0.1, 0.9]\nentry s0\nexits s1\n"
      << "s0 | go | succ: p, 1 - p |\n";  // truncated reward
  std::ofstream(dir / "macro.txt")
      << "mode single\ninit m0\ntargets done\n"
      << "call m0 | p = 1/2 | exits = done\n";
  std::ofstream(dir / "bundle.json")
      << R"({"template": "template.txt", "macro": "macro.txt", "config": {}})";
  CliResult r = cli("enumerate " + dir.string());
  CHECK(r.code == 1);
  CHECK(r.err.find("error: line 4") != std::string::npos);
}

TEST_CASE("a mode flag that contradicts the bundle is rejected") {
  fs::path dir = gen_token("mode");
  CliResult r = cli("solve " + dir.string() + " --mode success-target");
  CHECK(r.code == 1);
  CHECK(r.err.find("does not match") != std::string::npos);
  CHECK(cli("solve " + dir.string() + " --eta 0.5 --mode single").code == 0);
}

TEST_CASE("the step cap flushes partial bounds and the trace") {
  fs::path dir = gen_token("cap");
  fs::path trace = dir / "partial.json";
  CliResult r = cli("solve " + dir.string() +
                    " --eta 0.9999 --max-iterations 1 --trace " +
                    trace.string());
  CHECK(r.code == 2);
  CHECK(r.err.find("step cap") != std::string::npos);
  CHECK(grab(r.out, "lower bound") == doctest::Approx(7.68).epsilon(1e-9));
  CHECK(grab(r.out, "upper bound") == doctest::Approx(18.75).epsilon(1e-9));
  nlohmann::json arr = nlohmann::json::parse(read_file(trace));
  REQUIRE(arr.is_array());
  CHECK(arr.size() == 1);
}

TEST_CASE("usage mistakes never look like engine failures") {
  CHECK(cli("").code == 1);
  CHECK(cli("frobnicate now").code == 1);
  CHECK(cli("solve").code == 1);
  CliResult r = cli("gen cycle-soup --out /tmp/hmdp_cli_na");
  CHECK(r.code == 1);
  CHECK(r.err.find("unknown family") != std::string::npos);
}
