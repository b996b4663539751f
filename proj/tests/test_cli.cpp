#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "pubproj/json_io.hpp"

using namespace pubproj;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
};

// Runs the installed binary; stderr is dropped unless merge_stderr, so
// artifact comparisons see exactly what lands in stdout.
CliResult run_cli(const std::string& args, bool merge_stderr = false) {
  std::string cmd = std::string(PUBPROJ_CLI_PATH) + " " + args +
                    (merge_stderr ? " 2>&1" : " 2>/dev/null");
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult res;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) res.out.append(buf, got);
  int status = pclose(pipe);
  res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::string fixture(const std::string& name, const std::string& content) {
  std::string path = std::string(PUBPROJ_TEST_DIR) + "/" + name;
  std::ofstream f(path, std::ios::binary);
  REQUIRE(f.good());
  f << content;
  return path;
}

const char* kTiny = R"({"n":1,"m":1,"k":1,"players":[
  {"type":"coverage","universe":[{"id":"a","weight":1.0}],"sets":{"1":["a"]}}]})";

// two players with disjoint interests; k=1 forces an externality on player 1
const char* kSwap = R"({"n":2,"m":2,"k":1,"players":[
  {"type":"coverage","universe":[{"id":"u","weight":1.0}],"sets":{"1":["u"]}},
  {"type":"coverage","universe":[{"id":"w","weight":0.6}],"sets":{"2":["w"]}}]})";

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("help exits zero, missing subcommand does not") {
  CHECK(run_cli("--help").code == 0);
  CHECK(run_cli("").code == 2);
  CHECK(run_cli("allocate --no-such-flag").code == 2);
  CHECK(run_cli("solve --tol 0 --instance whatever.json").code == 2);
}

TEST_CASE("allocate is byte-identical across repeated seeded runs") {
  std::string path = fixture("tiny.json", kTiny);
  CliResult a = run_cli("allocate --instance " + path + " --seed 7");
  CliResult b = run_cli("allocate --instance " + path + " --seed 7");
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);

  Json j = Json::parse(a.out);
  CHECK(j["chosen"] == "1");
  CHECK(j["chosen_indices"] == Json::array({1}));
  CHECK(j["expected_payments"][0].get<double>() == 0.0);
  CHECK(j["payments"][0].get<double>() == 0.0);
  CHECK(j["ratio"].get<double>() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(j["rng_trace"]["master_seed"] == 7);
}

TEST_CASE("allocate prices the displaced player") {
  std::string path = fixture("swap.json", kSwap);
  CliResult r = run_cli("allocate --instance " + path + " --seed 1");
  REQUIRE(r.code == 0);
  Json j = Json::parse(r.out);
  CHECK(j["chosen"] == "1");
  CHECK(j["expected_payments"][0].get<double>() == doctest::Approx(0.6).epsilon(1e-6));
  CHECK(j["expected_payments"][1].get<double>() == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(j["expected_welfare"].get<double>() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("parse failures report the location and exit 2") {
  std::string bad = fixture("bad.json", "{\"n\": 1, \"m\": ");
  CliResult r = run_cli("allocate --instance " + bad, /*merge_stderr=*/true);
  CHECK(r.code == 2);
  CHECK(r.out.find("input error") != std::string::npos);
  CHECK(r.out.find("bad.json") != std::string::npos);

  std::string neg = fixture("neg.json", R"({"n":1,"m":1,"k":1,"players":[
    {"type":"coverage","universe":[{"id":"a","weight":-0.5}],"sets":{"1":["a"]}}]})");
  CliResult nr = run_cli("audit --instance " + neg, /*merge_stderr=*/true);
  CHECK(nr.code == 2);
  CHECK(nr.out.find("weight") != std::string::npos);

  CHECK(run_cli("allocate --instance " + std::string(PUBPROJ_TEST_DIR) +
                "/does_not_exist.json").code == 2);
}

TEST_CASE("distribution table output: frozen small cases") {
  CliResult r = run_cli("distribution --x 1,1 --k 2 --format table");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("{1,2}: 0.500000000") != std::string::npos);
  CHECK(r.out.find("{1}: 0.250000000") != std::string::npos);
  CHECK(r.out.find("{2}: 0.250000000") != std::string::npos);
  CHECK(r.out.find("sum = 1.000000000") != std::string::npos);

  CliResult s = run_cli("distribution --x 0.3 --k 1 --format table");
  REQUIRE(s.code == 0);
  CHECK(s.out.find("{1}: 0.300000000") != std::string::npos);
  CHECK(s.out.find("{}: 0.700000000") != std::string::npos);
}

TEST_CASE("distribution input guards") {
  CHECK(run_cli("distribution --x 0.3,zebra --k 1").code == 2);
  CHECK(run_cli("distribution --x 0.3").code == 2);     // no k anywhere
  CHECK(run_cli("distribution --k 2").code == 2);       // no x source
  std::string wide;
  for (int j = 0; j < 21; ++j) wide += (j ? ",0.05" : "0.05");
  CHECK(run_cli("distribution --x " + wide + " --k 2").code == 3);
}

TEST_CASE("distribution consumes solve artifacts") {
  std::string path = fixture("swap.json", kSwap);
  std::string artifact = std::string(PUBPROJ_TEST_DIR) + "/solve_artifact.json";
  CliResult sr = run_cli("solve --instance " + path + " --out " + artifact);
  REQUIRE(sr.code == 0);
  CHECK(sr.out.empty());  // --out diverts the artifact

  CliResult dr = run_cli("distribution --from-solve " + artifact);
  REQUIRE(dr.code == 0);
  Json j = Json::parse(dr.out);
  CHECK(j["k"] == 1);
  CHECK(j["m"] == 2);
  CHECK(j["probabilities"]["1"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));

  CHECK(run_cli("distribution --from-solve " + std::string(PUBPROJ_TEST_DIR) +
                "/missing_artifact.json").code == 2);
}

TEST_CASE("distribution monte carlo column converges") {
  CliResult r = run_cli("distribution --x 0.4,0.7 --k 2 --mc-samples 200000 --seed 5");
  REQUIRE(r.code == 0);
  Json j = Json::parse(r.out);
  CHECK(j["mc_samples"] == 200000);
  CHECK(j["mc_tv_distance"].get<double>() < 0.01);
}

TEST_CASE("payments agree with the allocate artifact") {
  std::string path = fixture("swap.json", kSwap);
  Json alloc = Json::parse(run_cli("allocate --instance " + path + " --seed 4").out);
  Json pay = Json::parse(run_cli("payments --instance " + path + " --seed 4").out);
  CHECK(pay["expected"] == alloc["expected_payments"]);
  CHECK(pay["realized"] == alloc["payments"]);
}

TEST_CASE("k override reshapes the run") {
  std::string path = fixture("swap.json", kSwap);
  Json j = Json::parse(run_cli("solve --instance " + path + " --k 2").out);
  CHECK(j["instance"]["k"] == 2);
  CHECK(j["x_star"][0].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(j["x_star"][1].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("audit smoke suite exits zero") {
  CliResult r = run_cli("audit --suite smoke --seed 2026 --format table");
  CHECK(r.code == 0);
  CHECK(r.out.find("all checks passed") != std::string::npos);
}

TEST_CASE("audit on an instance is deterministic and green") {
  std::string path = fixture("swap.json", kSwap);
  CliResult a = run_cli("audit --instance " + path + " --misreports 2 --seed 3");
  CliResult b = run_cli("audit --instance " + path + " --misreports 2 --seed 3");
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  Json j = Json::parse(a.out);
  CHECK(j["all_passed"] == true);
}

TEST_CASE("bench emits deterministic JSON on stdout, timing on stderr") {
  CliResult quiet = run_cli("bench --seed 1 --max-iters 300");
  REQUIRE(quiet.code == 0);
  Json j = Json::parse(quiet.out);
  CHECK(j["results"].size() == 8);
  CliResult noisy = run_cli("bench --seed 1 --max-iters 300", /*merge_stderr=*/true);
  CHECK(noisy.out.find(" ms, ") != std::string::npos);
}

TEST_CASE("rounding flag shows up in the artifact trace") {
  std::string path = fixture("tiny.json", kTiny);
  Json j = Json::parse(
      run_cli("allocate --instance " + path + " --rounding rkplus --seed 2").out);
  CHECK(j["rounding"] == "rkplus");
  CHECK(j["rng_trace"].contains("cancel_branch"));
  CHECK(run_cli("allocate --instance " + path + " --rounding bogus").code == 2);
}

TEST_CASE("instance serialization is canonical-form idempotent") {
  std::string path = fixture("swap.json", kSwap);
  Instance inst = load_instance_file(path);
  std::string once = canonical_dump(instance_to_json(inst));
  Instance reparsed = instance_from_json(Json::parse(once));
  std::string twice = canonical_dump(instance_to_json(reparsed));
  CHECK(once == twice);

  // terms + graphic matroid round-trip through relabeled vertices
  Instance g(2, {MrsValuation::from_terms(
                    3, {{1.5, Matroid::graphic({{4, 9}, {9, 2}, {4, 2}})}})});
  std::string g1 = canonical_dump(instance_to_json(g));
  std::string g2 = canonical_dump(instance_to_json(instance_from_json(Json::parse(g1))));
  CHECK(g1 == g2);
}

TEST_CASE("out flag writes the same bytes stdout would carry") {
  std::string path = fixture("tiny.json", kTiny);
  std::string target = std::string(PUBPROJ_TEST_DIR) + "/alloc_out.json";
  CliResult direct = run_cli("allocate --instance " + path + " --seed 12");
  CliResult redirected =
      run_cli("allocate --instance " + path + " --seed 12 --out " + target);
  REQUIRE(redirected.code == 0);
  CHECK(redirected.out.empty());
  CHECK(read_file(target) == direct.out);
}
