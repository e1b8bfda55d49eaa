// End-to-end checks of the installed binary. The path comes from the
// EVIGP_CLI_PATH environment variable (set by the ctest registration); the
// suite is skipped when it is missing so the unit binary stays runnable on
// its own.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const char* cli_path() { return std::getenv("EVIGP_CLI_PATH"); }

int run_cli(const std::string& args) {
  std::string cmd = std::string(cli_path()) + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const char* tag) {
    path = fs::temp_directory_path() / (std::string("evigp_cli_") + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("benchmark runs are byte-identical across invocations") {
  if (!cli_path()) return;
  TempDir dir("bench");
  write_file(dir.path / "cfg.json",
             R"({"benchmark":"toy","method":"map","mean_model":"constant","reps":2})");
  std::string cfg = (dir.path / "cfg.json").string();
  REQUIRE(run_cli("benchmark --config " + cfg + " --out " + (dir.path / "a").string()) == 0);
  REQUIRE(run_cli("benchmark --config " + cfg + " --out " + (dir.path / "b").string()) == 0);

  for (const char* name : {"rmspe_reps.csv", "summary.csv"}) {
    std::string a = slurp(dir.path / "a" / name);
    std::string b = slurp(dir.path / "b" / name);
    CHECK(!a.empty());
    CHECK(a == b);
  }
  // 2 replications -> header + 2 rows
  std::istringstream lines(slurp(dir.path / "a" / "rmspe_reps.csv"));
  int count = 0;
  std::string line;
  while (std::getline(lines, line))
    if (!line.empty()) ++count;
  CHECK(count == 3);
}

TEST_CASE("fit then predict round-trips through the artifact") {
  if (!cli_path()) return;
  TempDir dir("fitpred");
  write_file(dir.path / "cfg.json",
             R"({"benchmark":"toy","method":"map","mean_model":"linear"})");
  std::string fit_dir = (dir.path / "fit").string();
  REQUIRE(run_cli("fit --config " + (dir.path / "cfg.json").string() + " --out " + fit_dir) ==
          0);
  CHECK(fs::exists(fit_dir + "/fit.json"));
  CHECK(fs::exists(fit_dir + "/train.csv"));

  write_file(dir.path / "query.csv", "x1\n0.1\n0.5\n0.9\n");
  write_file(dir.path / "pred.json", std::string("{\"fit\":\"") + fit_dir +
                                         "/fit.json\",\"query\":\"" +
                                         (dir.path / "query.csv").string() + "\"}");
  std::string pred_dir = (dir.path / "pred").string();
  REQUIRE(run_cli("predict --config " + (dir.path / "pred.json").string() + " --out " +
                  pred_dir) == 0);

  std::string preds = slurp(fs::path(pred_dir) / "predictions.csv");
  REQUIRE(!preds.empty());
  std::istringstream lines(preds);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "x1,mean,variance,lower95,upper95");
  int rows = 0;
  std::string line;
  while (std::getline(lines, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3);

  // a second predict run is byte-identical
  std::string pred2 = (dir.path / "pred2").string();
  REQUIRE(run_cli("predict --config " + (dir.path / "pred.json").string() + " --out " +
                  pred2) == 0);
  CHECK(slurp(fs::path(pred2) / "predictions.csv") == preds);
}

TEST_CASE("particle fits carry their ensemble through the artifact") {
  if (!cli_path()) return;
  TempDir dir("post");
  write_file(dir.path / "cfg.json",
             R"({"benchmark":"toy","method":"post","n_particles":10,"evi":{"max_outer":25}})");
  std::string fit_dir = (dir.path / "fit").string();
  REQUIRE(run_cli("fit --config " + (dir.path / "cfg.json").string() + " --out " + fit_dir) ==
          0);
  std::string artifact = slurp(fs::path(fit_dir) / "fit.json");
  CHECK(artifact.find("\"particles\"") != std::string::npos);

  write_file(dir.path / "query.csv", "x1\n0.3\n0.7\n");
  write_file(dir.path / "pred.json", std::string("{\"fit\":\"") + fit_dir +
                                         "/fit.json\",\"query\":\"" +
                                         (dir.path / "query.csv").string() + "\"}");
  REQUIRE(run_cli("predict --config " + (dir.path / "pred.json").string() + " --out " +
                  (dir.path / "pred").string()) == 0);
  CHECK(fs::exists(dir.path / "pred" / "predictions.csv"));
}

TEST_CASE("seed flag overrides the config seed") {
  if (!cli_path()) return;
  TempDir dir("seed");
  write_file(dir.path / "cfg.json",
             R"({"benchmark":"toy","method":"map","reps":1,"seed":100})");
  std::string cfg = (dir.path / "cfg.json").string();
  REQUIRE(run_cli("benchmark --config " + cfg + " --out " + (dir.path / "a").string()) == 0);
  REQUIRE(run_cli("benchmark --config " + cfg + " --seed 200 --out " +
                  (dir.path / "b").string()) == 0);
  CHECK(slurp(dir.path / "a" / "rmspe_reps.csv") != slurp(dir.path / "b" / "rmspe_reps.csv"));
}

TEST_CASE("usage and config errors exit with code 2") {
  if (!cli_path()) return;
  TempDir dir("err");
  CHECK(run_cli("") == 2);                              // missing subcommand
  CHECK(run_cli("benchmark --config /nonexistent.json") == 2);
  write_file(dir.path / "bad.json", R"({"benchmark":"nope"})");
  CHECK(run_cli("benchmark --config " + (dir.path / "bad.json").string()) == 2);
  write_file(dir.path / "badmethod.json", R"({"benchmark":"toy","method":"walk"})");
  CHECK(run_cli("benchmark --config " + (dir.path / "badmethod.json").string()) == 2);
}
