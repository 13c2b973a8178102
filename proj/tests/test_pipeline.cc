#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sara/feature_io.h"
#include "sara/pipeline.h"
#include "support/fixtures.h"

using namespace sara;
using fixture::TempDir;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args, const TempDir& dir) {
  const fs::path log = dir / "cli.log";
  const std::string cmd = std::string(SARA_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = fixture::read_file(log);
  return r;
}

size_t line_count(const std::string& text) { return static_cast<size_t>(std::count(text.begin(), text.end(), '\n')); }

std::set<std::string> lines_of(const std::string& text) {
  std::set<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.insert(line);
  return out;
}

std::string synth(const TempDir& dir, const std::string& name, int n, const std::string& extra = "") {
  const fs::path out = dir / name;
  const CliResult r = run_cli("synth --out-dir " + out.string() + " --n-cameras " + std::to_string(n) +
                                  " --seed 3 " + extra,
                              dir);
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  return (out / "manifest.json").string();
}

}  // namespace

TEST_CASE("synth writes a dataset") {
  TempDir dir;
  synth(dir, "a", 20);
  synth(dir, "b", 20);
  size_t sarf = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    const std::string name = e.path().filename().string();
    if (e.path().extension() == ".sarf") ++sarf;
    CHECK(fixture::read_file(e.path()) == fixture::read_file(dir / "b" / name));
  }
  CHECK(sarf == 20);
  CHECK(fs::exists(dir / "a" / "manifest.json"));
  CHECK(fs::exists(dir / "a" / "truth.json"));
  CHECK(load_manifest(dir / "a" / "manifest.json").size() == 20);
  CHECK(run_cli("synth --out-dir " + (dir / "c").string() + " --n-cameras 1", dir).exit_code == 1);
}

TEST_CASE("select errors and exit codes") {
  TempDir dir;
  const fs::path missing = dir / "nowhere" / "manifest.json";
  const CliResult r = run_cli("select --manifest " + missing.string() + " --out-pairs " +
                                  (dir / "p.txt").string() + " --out-report " + (dir / "r.json").string(),
                              dir);
  CHECK(r.exit_code == 2);
  CHECK(r.output.find(missing.string()) != std::string::npos);
  CHECK(run_cli("select --manifest", dir).exit_code == 1);
  CHECK(run_cli("bogus", dir).exit_code == 1);
  const std::string m = synth(dir, "s", 6);
  CHECK(run_cli("select --manifest " + m + " --out-pairs " + (dir / "p.txt").string() + " --out-report " +
                    (dir / "r.json").string() + " --k 0",
                dir)
            .exit_code == 1);
}

TEST_CASE("select is deterministic across thread counts") {
  TempDir dir;
  const std::string m = synth(dir, "s", 30, "--noise-px 0.5");
  std::vector<std::pair<std::string, std::string>> outputs;
  for (const int threads : {1, 2, 4}) {
    const std::string tag = std::to_string(threads);
    const CliResult r = run_cli("select --manifest " + m + " --out-pairs " + (dir / ("p" + tag)).string() +
                                    " --out-report " + (dir / ("r" + tag)).string() + " --threads " + tag,
                                dir);
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    outputs.emplace_back(fixture::read_file(dir / ("p" + tag)), fixture::read_file(dir / ("r" + tag)));
  }
  CHECK(!outputs[0].first.empty());
  CHECK(outputs[1] == outputs[0]);
  CHECK(outputs[2] == outputs[0]);
}

TEST_CASE("base-only mode and the 50-image reduction") {
  TempDir dir;
  const std::string m = synth(dir, "s", 50);
  const auto select = [&](const std::string& tag, const std::string& extra) {
    const CliResult r = run_cli("select --manifest " + m + " --out-pairs " + (dir / (tag + ".txt")).string() +
                                    " --out-report " + (dir / (tag + ".json")).string() + " " + extra,
                                dir);
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    return nlohmann::json::parse(fixture::read_file(dir / (tag + ".json")));
  };
  const auto full = select("full", "");
  const auto base = select("base", "--budget-loop 0 --budget-anchor 0 --budget-weak 0");
  const size_t full_lines = line_count(fixture::read_file(dir / "full.txt"));
  const size_t base_lines = line_count(fixture::read_file(dir / "base.txt"));
  CHECK(base_lines == 49);
  CHECK(full_lines <= 49 + 10 + 3 + 5);
  CHECK(full_lines > base_lines);
  CHECK(full["summary"]["reduction_ratio"].get<double>() >= 0.90);
  CHECK(base["summary"]["edges_by_role"]["tree"] == 49);
  CHECK(base["summary"]["edges_by_role"]["loop"] == 0);
  const auto base_set = lines_of(fixture::read_file(dir / "base.txt"));
  const auto full_set = lines_of(fixture::read_file(dir / "full.txt"));
  CHECK(std::includes(full_set.begin(), full_set.end(), base_set.begin(), base_set.end()));
}

TEST_CASE("ablation writes every variant") {
  TempDir dir;
  const std::string m = synth(dir, "s", 25, "--plant-weak-view");
  const CliResult r = run_cli("ablate --manifest " + m + " --out-dir " + (dir / "abl").string(), dir);
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  for (const AblationVariant& v : ablation_variants()) {
    CHECK(fs::exists(dir / "abl" / (v.name + ".pairs.txt")));
    CHECK(fs::exists(dir / "abl" / (v.name + ".report.json")));
  }
  const auto summary = nlohmann::json::parse(fixture::read_file(dir / "abl" / "ablation.json"));
  CHECK(summary.size() == ablation_variants().size());
  const auto base = lines_of(fixture::read_file(dir / "abl" / "base_only.pairs.txt"));
  const auto only_msl = lines_of(fixture::read_file(dir / "abl" / "only_msl.pairs.txt"));
  const auto full = lines_of(fixture::read_file(dir / "abl" / "full.pairs.txt"));
  const auto wo_msl = lines_of(fixture::read_file(dir / "abl" / "wo_msl.pairs.txt"));
  CHECK(std::includes(only_msl.begin(), only_msl.end(), base.begin(), base.end()));
  CHECK(wo_msl.size() <= full.size());
}
