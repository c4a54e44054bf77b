#include <fstream>
#include <sstream>

#include "afresnet/cli.hpp"
#include "afresnet/eval.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace afresnet;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("params prints the count") {
  auto r = cli({"params", "--config", testing::bench_row(1).config});
  CHECK(r.code == kExitOk);
  CHECK(r.out == "3658\n");
  CHECK(r.err.find("seed=0") != std::string::npos);
  CHECK(r.err.find(std::string("config=") + testing::bench_row(1).config) != std::string::npos);

  r = cli({"params", "--config", "ResNet34"});
  CHECK(r.code == kExitOk);
  CHECK(r.out == "7217474\n");
}

TEST_CASE("params table") {
  const auto r = cli({"params", "--table"});
  CHECK(r.code == kExitOk);
  std::istringstream lines(r.out);
  std::string line;
  std::size_t pass = 0;
  while (std::getline(lines, line)) pass += line.rfind("PASS ", 0) == 0;
  CHECK(pass == 30);
  CHECK(r.out.find("30/30 PASS") != std::string::npos);
}

TEST_CASE("usage errors exit with 1") {
  CHECK(cli({"params", "--config", "8; cxa; [4]; [1]"}).code == kExitUsage);
  CHECK(cli({"params", "--config", "8; cna; [4"}).code == kExitUsage);
  CHECK(cli({"params"}).code == kExitUsage);
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"train", "--config", "8; cna; [4]; [1]"}).code == kExitUsage);
  const auto bad = cli({"params", "--config", "8; cna; [4,8]; [1,2,3]"});
  CHECK(bad.err.find("filters/blocks length mismatch") != std::string::npos);
}

TEST_CASE("version and help") {
  const auto v = cli({"--version"});
  CHECK(v.code == kExitOk);
  CHECK(v.out.find(kVersion) != std::string::npos);
  const auto h = cli({"--help"});
  CHECK(h.code == kExitOk);
  CHECK(h.out.find("bench") != std::string::npos);
}

TEST_CASE("train with zero epochs is a usage error") {
  testing::TempDir dir("cli_zero");
  REQUIRE(cli({"synth", "--out", (dir / "data").string(), "--n", "4", "--seed", "1"}).code == kExitOk);
  const auto r = cli({"train", "--config", "8; cna; [4]; [1]", "--data", (dir / "data" / "manifest.csv").string(),
                      "--epochs", "0", "--out", (dir / "run").string()});
  CHECK(r.code == kExitUsage);
}

TEST_CASE("data errors exit with 2") {
  testing::TempDir dir("cli_data");
  const auto r = cli({"train", "--config", "8; cna; [4]; [1]", "--data", (dir / "missing.csv").string(), "--epochs",
                      "1", "--out", (dir / "run").string()});
  CHECK(r.code == kExitData);
  CHECK(cli({"eval", "--model", (dir / "nope.ckpt").string(), "--data", (dir / "m.csv").string()}).code == kExitData);
  CHECK(cli({"report", "--results", (dir / "none.csv").string(), "--out", (dir / "rep").string()}).code == kExitData);
}

TEST_CASE("quickstart end to end") {
  testing::TempDir dir("cli_e2e");
  const std::string data = (dir / "data").string(), manifest = (dir / "data" / "manifest.csv").string();
  const std::string run = (dir / "run").string(), rep = (dir / "report").string();

  auto s = cli({"synth", "--out", data, "--n", "20", "--af-frac", "0.5", "--seed", "3"});
  REQUIRE(s.code == kExitOk);
  CHECK(std::filesystem::exists(manifest));
  CHECK(std::filesystem::exists(dir / "data" / "synth_config.txt"));

  auto t = cli({"train", "--config", "8; cna; [4, 4]; [1, 1]", "--data", manifest, "--epochs", "2", "--batch", "8",
                "--crop-len", "512", "--seed", "5", "--out", run, "--quiet"});
  REQUIRE(t.code == kExitOk);
  CHECK(t.out.find("f1_af=") != std::string::npos);
  CHECK(t.err.find("seed=5") != std::string::npos);
  const std::string sidecar = read_file(dir / "run" / "train_config.txt");
  CHECK(sidecar.find("epochs=2") != std::string::npos);
  CHECK(sidecar.find("config=8; cna; [4, 4]; [1, 1]") != std::string::npos);
  const auto results = read_results(dir / "run" / "results.csv");
  REQUIRE(results.size() == 1);
  CHECK(results[0].seed == 5);
  CHECK(count_lines(read_file(dir / "run" / "loss.csv")) == 3);
  const std::string ckpt = (dir / "run" / results[0].checkpoint).string();
  REQUIRE(std::filesystem::exists(ckpt));

  auto e1 = cli({"eval", "--model", ckpt, "--data", manifest, "--crop-len", "512", "--both-classes", "--out",
                 (dir / "eval").string()});
  auto e2 = cli({"eval", "--model", ckpt, "--data", manifest, "--crop-len", "512", "--both-classes"});
  REQUIRE(e1.code == kExitOk);
  CHECK(e1.out == e2.out);
  CHECK(e1.out.find("f1_non_af=") != std::string::npos);
  CHECK(count_lines(read_file(dir / "eval" / "predictions.csv")) == 21);
  CHECK(std::filesystem::exists(dir / "eval" / "eval_config.txt"));

  auto v = cli({"eval", "--model", ckpt, "--data", manifest, "--crop-len", "512", "--split", "valid"});
  CHECK(v.code == kExitOk);
  CHECK(v.out.find("records=4") != std::string::npos);

  auto r = cli({"report", "--results", (dir / "run" / "results.csv").string(), "--out", rep});
  REQUIRE(r.code == kExitOk);
  CHECK(count_lines(read_file(dir / "report" / "table_a1.csv")) == 2);
  CHECK(std::filesystem::exists(dir / "report" / "report_meta.txt"));
}

TEST_CASE("bench writes repeats x configs rows") {
  testing::TempDir dir("cli_bench");
  const std::string manifest = (dir / "data" / "manifest.csv").string();
  REQUIRE(cli({"synth", "--out", (dir / "data").string(), "--n", "12", "--af-frac", "0.5"}).code == kExitOk);
  std::ofstream(dir / "grid.txt") << "# two configs\n8; cna; [4, 4]; [1, 1]\n\n8; cnacna; [4]; [1]\n";
  auto b = cli({"bench", "--grid", (dir / "grid.txt").string(), "--data", manifest, "--repeats", "3", "--seed", "7",
                "--epochs", "1", "--batch", "8", "--crop-len", "512", "--out", (dir / "out").string(), "--no-timing"});
  REQUIRE(b.code == kExitOk);
  const auto results = read_results(dir / "out" / "results.csv");
  CHECK(results.size() == 6);
  CHECK(b.out.find("executed=6") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "out" / "bench_config.txt"));

  auto again = cli({"bench", "--grid", (dir / "grid.txt").string(), "--data", manifest, "--repeats", "3", "--seed",
                    "7", "--epochs", "1", "--batch", "8", "--crop-len", "512", "--out", (dir / "out").string()});
  CHECK(again.out.find("executed=0 skipped=6") != std::string::npos);

  std::ofstream(dir / "bad.txt") << "8; cxa; [4]; [1]\n";
  CHECK(cli({"bench", "--grid", (dir / "bad.txt").string(), "--data", manifest, "--out", (dir / "o2").string()}).code ==
        kExitUsage);
}
