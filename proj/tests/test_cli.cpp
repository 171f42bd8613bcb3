#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sentinel/reference_model.hpp"
#include "sentinel/stream_io.hpp"

using namespace sentinel;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "sentinel-cli-tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the CLI with stdout and stderr captured to files in `dir`.
int run(const fs::path& dir, const std::string& args) {
  const std::string cmd = std::string(SENTINEL_CLI) + " " + args + " >" +
                          (dir / "stdout.txt").string() + " 2>" + (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path labelled_stream(const fs::path& dir, const std::vector<int>& per_class) {
  QueryStream qs;
  qs.dim = 2;
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    for (int i = 0; i < per_class[c]; ++i) {
      Vector f(2);
      f << 10.0 * c + i, 0.5 * i - c;
      qs.records.push_back({"train", f, static_cast<int>(c)});
    }
  }
  const auto p = dir / "train.addq";
  write_query_stream(p, qs);
  return p;
}

}  // namespace

TEST_CASE("cli fit") {
  const auto dir = scratch("fit");
  const auto in = labelled_stream(dir, {4, 5, 6});
  CHECK(run(dir, "fit --in " + in.string() + " --out " + (dir / "m1.addref").string()) == 0);
  CHECK(fs::exists(dir / "m1.addref"));
  CHECK(slurp(dir / "stdout.txt").find("K=3\n") != std::string::npos);
  const auto model = load_reference(dir / "m1.addref");
  CHECK(model.num_classes() == 3);
  CHECK(model.stats(2).count == 6);
  CHECK(run(dir, "fit --in " + in.string() + " --out " + (dir / "m2.addref").string()) == 0);
  CHECK(slurp(dir / "m1.addref") == slurp(dir / "m2.addref"));

  const auto thin = labelled_stream(dir, {4, 1, 6});
  CHECK(run(dir, "fit --in " + thin.string() + " --out " + (dir / "m3.addref").string()) == 2);
  CHECK(slurp(dir / "stderr.txt").find("ClassTooSmall") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "m3.addref"));
}

TEST_CASE("cli exit codes") {
  const auto dir = scratch("exit");
  CHECK(run(dir, "") == 1);
  CHECK(run(dir, "fit --in " + (dir / "missing.addq").string() + " --out x") == 1);
  CHECK(run(dir, "score --bogus") == 1);
  std::ofstream(dir / "junk.addref") << "not a model";
  std::ofstream(dir / "q.addq") << "not a stream";
  CHECK(run(dir, "score --model " + (dir / "junk.addref").string() + " --in " +
                     (dir / "q.addq").string()) == 2);
}

TEST_CASE("cli simulate is reproducible from its manifest") {
  const auto dir = scratch("simulate");
  const fs::path cfg = fs::path(SCENARIO_DIR) / "detection.cfg";
  REQUIRE(run(dir, "simulate --config " + cfg.string() + " --out " + (dir / "a").string()) == 0);
  for (const char* f : {"manifest.txt", "verdicts.csv", "metrics.txt", "curve.csv", "train.addq",
                        "benign.addq", "malicious.addq"}) {
    CHECK(fs::exists(dir / "a" / f));
  }
  REQUIRE(run(dir, "simulate --config " + (dir / "a" / "manifest.txt").string() + " --out " +
                       (dir / "b").string()) == 0);
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    const auto name = entry.path().filename();
    CHECK_MESSAGE(slurp(entry.path()) == slurp(dir / "b" / name), name.string());
  }

  // The written streams feed the fit, calibrate and score commands.
  const auto a = dir / "a";
  REQUIRE(run(dir, "fit --in " + (a / "train.addq").string() + " --out " +
                       (a / "model.addref").string()) == 0);
  REQUIRE(run(dir, "calibrate --model " + (a / "model.addref").string() + " --calib " +
                       (a / "benign.addq").string() + " --train " + (a / "train.addq").string() +
                       " --window-size 8 --out " + (dir / "cal").string()) == 0);
  CHECK(fs::exists(dir / "cal" / "calibration.txt"));
  CHECK(fs::exists(dir / "cal" / "sweep.csv"));
  REQUIRE(run(dir, "score --model " + (a / "model.addref").string() + " --in " +
                       (a / "malicious.addq").string() + " --train " + (a / "train.addq").string() +
                       " --window-size 8 --tau 1e9 --out " + (dir / "score").string()) == 0);
  CHECK(slurp(dir / "score" / "summary.txt").find("flagged=0") != std::string::npos);
}

TEST_CASE("cli study scenarios") {
  const auto dir = scratch("studies");
  const fs::path cfg = fs::path(SCENARIO_DIR) / "separation-study.cfg";
  REQUIRE(run(dir, "simulate --config " + cfg.string() + " --out " + (dir / "sep").string()) == 0);
  const auto sep = slurp(dir / "sep" / "separation.csv");
  CHECK(sep.rfind("N,mean_gap\n", 0) == 0);
  CHECK(std::count(sep.begin(), sep.end(), '\n') == 5);

  std::ofstream(dir / "ls.cfg") << "scenario = label-subset\nseed = 1\nsurrogate_classes = 2\n"
                                   "separation = 2\nsurrogate_radius = 3\nN = 8\n"
                                   "benign_queries = 300\nmalicious_queries = 300\ntrials = 2\n";
  REQUIRE(run(dir, "simulate --config " + (dir / "ls.cfg").string() + " --out " +
                       (dir / "ls").string()) == 0);
  const auto variants = slurp(dir / "ls" / "variants.csv");
  for (const char* v : {"\nadd,", "\new,", "\ngdd,"}) CHECK(variants.find(v) != std::string::npos);

  std::ofstream(dir / "ad.cfg") << "scenario = adaptive\nsurrogate_classes = 1\ncov_scale = 0.05\n"
                                   "bl_budgets = 100\nevasion_percents = 10\nwindow_sizes = 4,16\n";
  REQUIRE(run(dir, "simulate --config " + (dir / "ad.cfg").string() + " --out " +
                       (dir / "ad").string()) == 0);
  const auto adaptive = slurp(dir / "ad" / "adaptive.csv");
  CHECK(adaptive.find(",400,400,") != std::string::npos);
  CHECK(adaptive.find(",1000,1000,") != std::string::npos);
}
