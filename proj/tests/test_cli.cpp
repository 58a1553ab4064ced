#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string err;
};

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fracfield_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome run_cli(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd =
      std::string("\"") + FRACFIELD_CLI_PATH + "\" " + args + " 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.err = slurp(err);
  return o;
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

std::string config(const std::string& name) { return std::string(FRACFIELD_CONFIG_DIR) + "/" + name; }

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

TEST(Cli, VerifyExtensionEmitsClosedFormRow) {
  const auto dir = scratch_dir("ext");
  const auto out = run_cli("verify-extension --config \"" + config("verify_extension.json") +
                               "\" --out \"" + (dir / "o").string() + "\" --quiet",
                           dir);
  ASSERT_EQ(out.code, 0) << out.err;
  const auto rows = read_csv(dir / "o" / "extension.csv");
  ASSERT_GE(rows.size(), 2u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"alpha", "mu", "computed", "expected", "rel_err"}));
  bool found = false;
  for (const auto& r : rows) {
    if (r.size() != 5 || r[0] != "0.5" || r[1] != "1") continue;
    found = true;
    EXPECT_NEAR(std::stod(r[2]), 1.0, 1e-5);
    EXPECT_EQ(std::stod(r[3]), 1.0);
    EXPECT_LT(std::stod(r[4]), 1e-5);
  }
  EXPECT_TRUE(found);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(std::stod(rows[i][4]), 1e-5);
}

TEST(Cli, SolveOnDefaultDiskReturnsOneConvergedRecord) {
  const auto dir = scratch_dir("solve");
  const auto out = run_cli("solve --config \"" + config("disk_solve.json") + "\" --out \"" +
                               (dir / "o").string() + "\" --quiet",
                           dir);
  ASSERT_EQ(out.code, 0) << out.err;
  const auto doc = nlohmann::json::parse(slurp(dir / "o" / "results.json"));
  ASSERT_EQ(doc["records"].size(), 1u);
  EXPECT_TRUE(doc["records"][0]["converged"].get<bool>());
  EXPECT_GT(doc["records"][0]["energy"].get<double>(), 0.0);
  EXPECT_EQ(doc["schema_version"], 1);
  const auto rows = read_csv(dir / "o" / "solutions.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"lambda", "level", "residual", "iterations",
                                               "barycenter_x", "barycenter_y", "morse_index"}));
  EXPECT_TRUE(fs::exists(dir / "o" / "field_ground_state.csv"));
}

TEST(Cli, MissingAlphaIsAConfigError) {
  const auto dir = scratch_dir("noalpha");
  const auto cfg = write_config(dir, "c.json", R"({
  "task": "solve",
  "domain": {"shape": "disk", "params": {"radius": 1.0}, "lambda": 2.0, "h": 0.25},
  "model": {"p": 2.0, "theta": 3.0, "q": 3.5}
})");
  const auto out = run_cli("solve --config \"" + cfg.string() + "\" --out \"" +
                               (dir / "o").string() + "\"",
                           dir);
  EXPECT_EQ(out.code, 2);
  EXPECT_NE(out.err.find("alpha"), std::string::npos) << out.err;
}

TEST(Cli, JsonSyntaxErrorNamesTheLine) {
  const auto dir = scratch_dir("syntax");
  const auto cfg = write_config(dir, "c.json", "{\n  \"task\": \"solve\",\n  \"model\": {\"alpha\": }\n}\n");
  const auto out = run_cli("--config \"" + cfg.string() + "\" --out \"" + (dir / "o").string() + "\"",
                           dir);
  EXPECT_EQ(out.code, 2);
  EXPECT_NE(out.err.find("line 3"), std::string::npos) << out.err;
}

TEST(Cli, UnknownFlagIsAUsageError) {
  const auto dir = scratch_dir("flag");
  EXPECT_EQ(run_cli("solve --frobnicate", dir).code, 2);
  EXPECT_EQ(run_cli("solve", dir).code, 2);
}

TEST(Cli, SolverFailureExitsWithThreeAndNamesTheStage) {
  const auto dir = scratch_dir("fail");
  const auto cfg = write_config(dir, "c.json", R"({
  "task": "solve",
  "domain": {"shape": "disk", "params": {"radius": 1.0}, "lambda": 2.0, "h": 0.25},
  "model": {"alpha": 0.5},
  "solver": {"max_iter": 1, "n_starts": 1}
})");
  const auto out = run_cli("--config \"" + cfg.string() + "\" --out \"" + (dir / "o").string() + "\"",
                           dir);
  EXPECT_EQ(out.code, 3);
  EXPECT_NE(out.err.find("stage"), std::string::npos) << out.err;
}

TEST(Cli, ResultsAreByteIdenticalAcrossRunsAndWorkerCounts) {
  const auto dir = scratch_dir("repro");
  auto morse_into = [&](const std::string& sub, const std::string& extra) {
    return run_cli("morse --config \"" + config("disk_morse.json") + "\" --quiet --seed 11 " +
                       extra + " --out \"" + (dir / sub).string() + "\"",
                   dir)
        .code;
  };
  ASSERT_EQ(morse_into("a", ""), 0);
  ASSERT_EQ(morse_into("b", ""), 0);
  ASSERT_EQ(morse_into("c", "--workers 3"), 0);
  const auto a = slurp(dir / "a" / "results.json");
  ASSERT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir / "b" / "results.json"));
  EXPECT_EQ(a, slurp(dir / "c" / "results.json"));
  const auto other = dir / "d";
  ASSERT_EQ(run_cli("morse --config \"" + config("disk_morse.json") + "\" --quiet --seed 12 --out \"" +
                        other.string() + "\"",
                    dir)
                .code,
            0);
  EXPECT_NE(nlohmann::json::parse(a)["config_hash"],
            nlohmann::json::parse(slurp(other / "results.json"))["config_hash"]);
}

TEST(Cli, EveryOutputCarriesHashAndSchemaVersion) {
  const auto dir = scratch_dir("hash");
  ASSERT_EQ(run_cli("morse --config \"" + config("disk_morse.json") + "\" --quiet --out \"" +
                        (dir / "o").string() + "\"",
                    dir)
                .code,
            0);
  const auto doc = nlohmann::json::parse(slurp(dir / "o" / "results.json"));
  const std::string hash = doc["config_hash"];
  EXPECT_EQ(hash.size(), 16u);
  int files = 0;
  for (const auto& entry : fs::directory_iterator(dir / "o")) {
    const auto text = slurp(entry.path());
    EXPECT_NE(text.find(hash), std::string::npos) << entry.path();
    EXPECT_NE(text.find("schema_version"), std::string::npos) << entry.path();
    ++files;
  }
  EXPECT_GE(files, 3);
  EXPECT_EQ(doc["hessian"]["morse_index"], 1);
  EXPECT_TRUE(doc["morse_count"]["matches"].get<bool>());
}

TEST(Cli, DiskSweepLevelsDecreaseAndNodesQuadruple) {
  const auto dir = scratch_dir("sweep");
  const auto out = run_cli("sweep-lambda --config \"" + config("disk_sweep.json") +
                               "\" --quiet --out \"" + (dir / "o").string() + "\"",
                           dir);
  ASSERT_EQ(out.code, 0) << out.err;
  const auto rows = read_csv(dir / "o" / "sweep.csv");
  ASSERT_EQ(rows.size(), 4u);
  ASSERT_EQ(rows[0][1], "c_level");
  ASSERT_EQ(rows[0][9], "nodes");
  ASSERT_EQ(rows[0][10], "runtime_s");
  for (std::size_t i = 2; i < rows.size(); ++i) {
    EXPECT_LT(std::stod(rows[i][1]), std::stod(rows[i - 1][1])) << "row " << i;
    const double growth = std::stod(rows[i][9]) / std::stod(rows[i - 1][9]);
    EXPECT_NEAR(growth, 4.0, 0.4) << "row " << i;
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i][11], "ok");
    EXPECT_GT(std::stod(rows[i][8]), 0.0) << "limit margin, row " << i;
    EXPECT_GE(std::stod(rows[i][10]), 0.0);
  }
}
