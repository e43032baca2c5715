#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>

#include <unistd.h>

#include "doctest.h"
#include "lvtts/cli/app.hpp"
#include "lvtts/config/config.hpp"
#include "lvtts/errors.hpp"

using namespace lvtts;
using namespace lvtts::config;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("lvtts_cli_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("defaults resolve and round trip through the text format") {
  Config a;
  const ExperimentConfig x = typed(a);
  CHECK(x.decoder.arch == decoder::Arch::Salad);
  CHECK(x.decoder_train.schedule == trainer::Schedule::Noam);
  CHECK(x.vocoder.levels == 256);
  CHECK(x.vocoder.cond_dim == 43);
  CHECK(x.decoder.in_dim == 48);
  CHECK(x.bench.lengths_s.size() == 10);

  Config b;
  b.parse_text(a.resolved());
  CHECK(b.resolved() == a.resolved());
}

TEST_CASE("file values, overrides and environment") {
  Config c;
  c.parse_text("# comment\n[decoder]\narch = rnn\n\n[experiment]\nseed=7\n");
  CHECK(c.get("decoder.arch") == "rnn");
  CHECK(typed(c).decoder_train.schedule == trainer::Schedule::Constant);
  c.apply_override("--experiment.seed=9");
  CHECK(c.get_int("experiment.seed") == 9);
  c.apply_override("decoder_train.schedule=step");
  CHECK(typed(c).decoder_train.schedule == trainer::Schedule::Step);

  const ExperimentConfig x = typed(c);
  CHECK(x.corpus.seed != x.decoder_train.seed);
  CHECK(x.decoder_train.seed != x.vocoder_train.seed);

  ::setenv("LV_SEED", "123", 1);
  apply_env(c);
  ::unsetenv("LV_SEED");
  CHECK(c.get_int("experiment.seed") == 123);
}

TEST_CASE("invalid configuration is rejected") {
  Config c;
  CHECK_THROWS_AS(c.parse_text("[nope]\n"), ConfigError);
  CHECK_THROWS_AS(c.parse_text("[decoder]\nwidth = 3\n"), ConfigError);
  CHECK_THROWS_AS(c.parse_text("arch = rnn\n"), ConfigError);
  CHECK_THROWS_AS(c.parse_text("[decoder]\narch\n"), ConfigError);
  CHECK_THROWS_AS(c.apply_override("--decoder.arch"), ConfigError);
  CHECK_THROWS_AS(c.get("x.y"), ConfigError);

  const auto bad = [](const std::string& key, const std::string& value) {
    Config c;
    c.set(key, value);
    CHECK_THROWS_AS(typed(c), ConfigError);
  };
  bad("decoder.arch", "lstm");
  bad("decoder.heads", "3");
  bad("decoder.ffn_dropout", "1");
  bad("codec.bits", "0");
  bad("vocoder.fs_mid", "5");
  bad("vocoder_train.window", "100");
  bad("vocoder_train.schedule", "noam");
  bad("vocoder_train.mode", "joint");
  bad("corpus.min_frames", "20");
  bad("experiment.seed", "x");
  bad("faults.mismatched_normalization", "maybe");
  bad("benchmark.lengths", "1,-2");
}

TEST_CASE("exit codes") {
  TempDir tmp;
  const std::string out = (tmp.path / "run").string();
  CHECK(cli::run({}) == cli::kExitConfig);
  CHECK(cli::run({"fly"}) == cli::kExitConfig);
  CHECK(cli::run({"gen-corpus", "--out", out, "--decoder.nope=1"}) == cli::kExitConfig);
  CHECK(cli::run({"gen-corpus", "--out", out, "stray"}) == cli::kExitConfig);
  CHECK(cli::run({"train-decoder", "--out", out}) == cli::kExitPrecondition);
  CHECK(cli::run({"train-vocoder", "--out", out, "--mode", "imnv"}) == cli::kExitPrecondition);
  CHECK(cli::run({"train-vocoder", "--out", out, "--mode", "jmnv", "--decoder", "missing.lvnn"}) ==
        cli::kExitPrecondition);
  CHECK(cli::run({"evaluate", "--out", out}) == cli::kExitPrecondition);
  CHECK(cli::run({"synthesize", "--out", out}) == cli::kExitPrecondition);
  CHECK(cli::run({"gradcheck", "--out", out, "--seeds", "1"}) == 0);
  CHECK(fs::exists(fs::path(out) / "metrics" / "gradcheck.tsv"));
}

TEST_CASE("gen-corpus is deterministic and writes the resolved config") {
  TempDir tmp;
  const std::vector<std::string> small = {"--corpus.utterances=6", "--corpus.min_frames=60",
                                          "--corpus.max_frames=70"};
  for (const char* run : {"a", "b"}) {
    std::vector<std::string> args = {"gen-corpus", "--out", (tmp.path / run).string()};
    args.insert(args.end(), small.begin(), small.end());
    REQUIRE(cli::run(args) == 0);
  }
  const fs::path a = tmp.path / "a", b = tmp.path / "b";
  CHECK(slurp(a / "config.resolved") == slurp(b / "config.resolved"));
  CHECK(slurp(a / "config.resolved").find("utterances = 6") != std::string::npos);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(a / "corpus")) {
    ++files;
    CHECK(slurp(e.path()) == slurp(b / "corpus" / e.path().filename()));
  }
  CHECK(files == 6 * 3 + 2);

  // a resolved config reproduces the run
  const std::string c = (tmp.path / "c").string();
  REQUIRE(cli::run({"gen-corpus", "--out", c, "--config", (a / "config.resolved").string()}) == 0);
  CHECK(slurp(a / "corpus" / "manifest.tsv") == slurp(fs::path(c) / "corpus" / "manifest.tsv"));
}
