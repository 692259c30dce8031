#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using mapseg::testing::scratch_dir;

namespace {

int cli(const std::string& args) {
  const std::string cmd = std::string("\"") + MAPSEG_CLI + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

// One small synthetic dataset shared by the tests below.
const fs::path& dataset() {
  static const fs::path dir = [] {
    const auto d = scratch_dir("cli_data");
    EXPECT_EQ(cli("synth --seed 2 --tiles 6 --size 32 --out " + q(d)), 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST(Cli, MissingSeedIsAConfigError) {
  const auto dir = scratch_dir("cli_noseed");
  EXPECT_EQ(cli("synth --out " + q(dir)), 2);
  EXPECT_EQ(cli("train --matrix " + q(dataset() / "manifest.json")), 2);
}

TEST(Cli, BadValuesAreConfigErrors) {
  const auto out = scratch_dir("cli_bad");
  const std::string manifest = q(dataset() / "manifest.json");
  EXPECT_EQ(cli("run --manifest " + manifest + " --task 3 --seed 0 --out " + q(out)), 2);
  EXPECT_EQ(cli("run --manifest " + manifest + " --classifier svm --seed 0 --out " + q(out)), 2);
  EXPECT_EQ(cli("run --manifest " + manifest + " --task 1 --spec red,lidar --seed 0 --out " + q(out)), 2);
  EXPECT_EQ(cli("frobnicate"), 2);
  EXPECT_EQ(cli(""), 2);
}

TEST(Cli, MissingDataIsADataError) {
  const auto dir = scratch_dir("cli_missing");
  fs::copy(dataset(), dir / "data", fs::copy_options::recursive);
  fs::remove(dir / "data/lidar/tile_001.tiff");
  EXPECT_EQ(cli("features --manifest " + q(dir / "data/manifest.json") + " --out " + q(dir / "m.bin")), 3);
  EXPECT_EQ(cli("run --manifest " + q(dir / "data/manifest.json") + " --seed 0 --out " + q(dir / "run")), 3);
  EXPECT_TRUE(fs::exists(dir / "run/FAILED"));
}

TEST(Cli, StagesComposeToTheSameArtifactsAsRun) {
  const auto dir = scratch_dir("cli_stages");
  const std::string common = " --task 2 --boundary-mask";
  ASSERT_EQ(cli("run --manifest " + q(dataset() / "manifest.json") + common + " --classifier gbdt --seed 5 --out " +
                q(dir / "run")),
            0);

  ASSERT_EQ(cli("features --manifest " + q(dir / "run/train_manifest.json") + common + " --out " +
                   q(dir / "matrix.bin")),
            0);
  EXPECT_EQ(slurp(dir / "matrix.bin"), slurp(dir / "run/matrix.bin"));

  ASSERT_EQ(cli("train --matrix " + q(dir / "matrix.bin") + " --classifier gbdt --seed 5 --out " +
                   q(dir / "model.json")),
            0);
  EXPECT_EQ(slurp(dir / "model.json"), slurp(dir / "run/model.json"));

  ASSERT_EQ(cli("predict --model " + q(dir / "model.json") + " --manifest " + q(dir / "run/test_manifest.json") +
                   " --out " + q(dir / "pred")),
            0);
  std::size_t masks = 0;
  for (const auto& e : fs::directory_iterator(dir / "run/pred")) {
    EXPECT_EQ(slurp(e.path()), slurp(dir / "pred" / e.path().filename())) << e.path();
    ++masks;
  }
  EXPECT_EQ(masks, 1u);

  const auto train_entries = nlohmann::json::parse(slurp(dir / "run/train_manifest.json")).at("entries").size();
  ASSERT_EQ(cli("eval --pred " + q(dir / "pred") + " --gt " + q(dataset() / "masks") + " --task 2 --model " +
                   q(dir / "model.json") + " --images " + std::to_string(train_entries) +
                   " --boundary-mask --out " + q(dir / "report.json")),
            0);
  EXPECT_EQ(slurp(dir / "report.json"), slurp(dir / "run/report.json"));
  EXPECT_EQ(slurp(dir / "report.txt"), slurp(dir / "run/report.txt"));
}

TEST(Cli, RunIsDeterministic) {
  const auto dir = scratch_dir("cli_determinism");
  for (const char* name : {"a", "b"}) {
    ASSERT_EQ(cli("run --manifest " + q(dataset() / "manifest.json") + " --classifier rf --seed 1 --out " +
                     q(dir / name)),
              0);
  }
  EXPECT_EQ(slurp(dir / "a/model.json"), slurp(dir / "b/model.json"));
  EXPECT_EQ(slurp(dir / "a/report.json"), slurp(dir / "b/report.json"));
}

TEST(Cli, BoundaryMaskSubcommandWritesRings) {
  const auto dir = scratch_dir("cli_bm");
  ASSERT_EQ(cli("boundary-mask --in " + q(dataset() / "masks") + " --out " + q(dir) + " --kernel 7"), 0);
  std::size_t count = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++count;
  EXPECT_EQ(count, 6u);
  EXPECT_EQ(cli("boundary-mask --in " + q(dataset() / "masks") + " --out " + q(dir) + " --kernel 4"), 2);
}

TEST(Cli, ImportanceListsEveryFeatureSummingToOne) {
  const auto dir = scratch_dir("cli_importance");
  ASSERT_EQ(cli("run --manifest " + q(dataset() / "manifest.json") + " --seed 0 --out " + q(dir / "run")), 0);
  ASSERT_EQ(cli("importance --model " + q(dir / "run/model.json") + " --out " + q(dir / "imp.json")), 0);
  const auto doc = nlohmann::json::parse(slurp(dir / "imp.json"));
  ASSERT_EQ(doc.size(), 5u);
  double sum = 0.0;
  for (const auto& item : doc) sum += item.at("importance").get<double>();
  EXPECT_NEAR(sum, 1.0, 1e-9);
}
