#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string cli = CLFSYN_CLI_PATH;
const std::string bench_dir = CLFSYN_BENCH_DIR;

int run(const std::string& args) {
  const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("synth scalar integrator and round trip through verify") {
  fs::path out = fs::temp_directory_path() / "clfsyn_cli_scalar";
  fs::remove_all(out);
  const int rc = run("synth " + bench_dir + "/scalar_integrator.json --out " + out.string());
  CHECK(rc == 0);
  REQUIRE(fs::exists(out / "result.json"));
  REQUIRE(fs::exists(out / "certificate.json"));
  REQUIRE(fs::exists(out / "runlog.jsonl"));
  json result;
  std::ifstream(out / "result.json") >> result;
  CHECK(result["status"] == "certificate");
  CHECK(result["schema"] == 1);
  CHECK(result["audit"]["failures"] == 0);
  // the emitted certificate re-verifies
  CHECK(run("verify " + bench_dir + "/scalar_integrator.json " + (out / "certificate.json").string()) == 0);
}

TEST_CASE("verify rejects an indefinite candidate with exit 2") {
  fs::path cert = fs::temp_directory_path() / "clfsyn_bad_cert.json";
  {
    json c;
    c["schema"] = 1;
    c["V"] = json::array();
    c["V"].push_back({{"coeff", 1.0}, {"exp", {2, 0}}});
    c["V"].push_back({{"coeff", -1.0}, {"exp", {0, 2}}});
    std::ofstream f(cert);
    f << c.dump();
  }
  CHECK(run("verify " + bench_dir + "/local2d.json " + cert.string()) == 2);
}

TEST_CASE("missing problem file exits 1") {
  CHECK(run("synth /nonexistent/problem.json") == 1);
}

TEST_CASE("inexpressive basis override fails with exit 2") {
  fs::path out = fs::temp_directory_path() / "clfsyn_cli_weak";
  const int rc = run("synth " + bench_dir + "/local2d.json --basis monomials:deg=1 --out " + out.string());
  CHECK(rc == 2);
}

TEST_CASE("simulate produces traces and a summary") {
  fs::path out = fs::temp_directory_path() / "clfsyn_cli_sim";
  fs::remove_all(out);
  fs::path synth_out = fs::temp_directory_path() / "clfsyn_cli_scalar";
  if (!fs::exists(synth_out / "certificate.json")) {
    REQUIRE(run("synth " + bench_dir + "/scalar_integrator.json --out " + synth_out.string()) == 0);
  }
  const int rc = run("simulate " + bench_dir + "/scalar_integrator.json " +
                     (synth_out / "certificate.json").string() +
                     " --x0 1.0 --x0 -0.5 --duration 10 --dt 0.01 --out " + out.string());
  CHECK(rc == 0);
  REQUIRE(fs::exists(out / "summary.json"));
  json summary;
  std::ifstream(out / "summary.json") >> summary;
  REQUIRE(summary["traces"].size() == 2);
  for (const auto& t : summary["traces"]) CHECK(t["diverged"] == false);
  CHECK(fs::exists(out / "trace_0.csv"));
  // empty x0 list is a usage error
  CHECK(run("simulate " + bench_dir + "/scalar_integrator.json " +
            (synth_out / "certificate.json").string()) == 1);
}

TEST_CASE("bench runs a small manifest") {
  fs::path out = fs::temp_directory_path() / "clfsyn_cli_bench";
  fs::remove_all(out);
  fs::path manifest = fs::temp_directory_path() / "clfsyn_manifest.json";
  {
    json m;
    m["schema"] = 1;
    m["rows"] = json::array();
    m["rows"].push_back({{"problem", "scalar_integrator.json"}, {"D", 2}});
    m["rows"].push_back({{"problem", "local2d.json"}, {"D", 2}, {"strategy", "cheby"}});
    std::ofstream f(manifest);
    f << m.dump();
  }
  // manifest paths resolve relative to the manifest location
  fs::copy(manifest, fs::temp_directory_path() / "m2.json", fs::copy_options::overwrite_existing);
  fs::path local_manifest = fs::path(bench_dir) / "_tmp_manifest.json";
  fs::copy(manifest, local_manifest, fs::copy_options::overwrite_existing);
  const int rc = run("bench " + local_manifest.string() + " --out " + out.string());
  fs::remove(local_manifest);
  CHECK(rc == 0);
  REQUIRE(fs::exists(out / "bench.csv"));
  std::ifstream csv(out / "bench.csv");
  std::string line;
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 3);  // header + 2 rows

  // empty manifest exits 1
  fs::path empty = fs::temp_directory_path() / "clfsyn_empty_manifest.json";
  {
    std::ofstream f(empty);
    f << "{\"rows\": []}";
  }
  CHECK(run("bench " + empty.string()) == 1);
}

TEST_CASE("identical seeds give byte-identical results") {
  fs::path out1 = fs::temp_directory_path() / "clfsyn_cli_seed1";
  fs::path out2 = fs::temp_directory_path() / "clfsyn_cli_seed2";
  fs::remove_all(out1);
  fs::remove_all(out2);
  REQUIRE(run("synth " + bench_dir + "/local2d.json --seed 7 --out " + out1.string()) == 0);
  REQUIRE(run("synth " + bench_dir + "/local2d.json --seed 7 --out " + out2.string()) == 0);
  std::ostringstream a, b;
  a << std::ifstream((out1 / "result.json").string()).rdbuf();
  b << std::ifstream((out2 / "result.json").string()).rdbuf();
  // strip the timing fields, everything else must match byte for byte
  json ja = json::parse(a.str()), jb = json::parse(b.str());
  ja["stats"].erase("verifier_seconds");
  ja["stats"].erase("total_seconds");
  jb["stats"].erase("verifier_seconds");
  jb["stats"].erase("total_seconds");
  CHECK(ja.dump() == jb.dump());
}
