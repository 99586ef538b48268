#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "otf/commands.hpp"
#include "otf/io.hpp"
#include "otf/pretrain.hpp"
#include "otf/ranking.hpp"

namespace fs = std::filesystem;
using namespace otf;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "otf-sbir");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

// Value of `key=` in a space-separated report line.
std::string field(const std::string& line, const std::string& key) {
  const std::string tag = key + "=";
  std::size_t pos = line.rfind(" " + tag);
  pos = pos == std::string::npos ? (line.rfind(tag, 0) == 0 ? 0 : std::string::npos) : pos + 1;
  if (pos == std::string::npos) return "<missing>";
  const std::size_t start = pos + tag.size();
  return line.substr(start, line.find_first_of(" \n", start) - start);
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("otf_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string config(const std::string& name, const std::string& json) const {
    write_file_atomic(path(name), json);
    return path(name);
  }

  // Small end-to-end configuration that runs in well under a second.
  std::string small_config() const {
    return config("small.json", R"({
      "sim": {"num_photos": 12, "n_train": 24, "n_test": 8, "steps": 5, "feature_dim": 8, "seed": 3},
      "pretrain": {"epochs": 5, "embed_dim": 4, "lr": 1e-3, "batch_size": 8},
      "train": {"epochs": 4, "episodes_per_batch": 4}
    })");
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"gen-synth"}).code, kExitUsage);
  EXPECT_EQ(run({"gen-synth", "--out", path("d.jsonl"), "--bogus"}).code, kExitUsage);
  EXPECT_EQ(run({"gen-synth", "--out", path("d.jsonl"), "--seed", "abc"}).code, kExitUsage);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST_F(Cli, DataErrorsExitWithTwo) {
  const auto bad = config("bad.json", R"({"train": {"epoch": 3}})");
  const Outcome o = run({"gen-synth", "--config", bad, "--out", path("d.jsonl")});
  EXPECT_EQ(o.code, kExitData);
  EXPECT_NE(o.err.find("train.epoch"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("d.jsonl")));

  write_file_atomic(path("junk.jsonl"), "{\"kind\":\"header\"}\n");
  ASSERT_EQ(run({"gen-synth", "--config", small_config(), "--out", path("d.jsonl")}).code, kExitOk);
  EXPECT_EQ(run({"pretrain", "--dataset", path("junk.jsonl"), "--out", path("h.json")}).code, kExitData);

  ASSERT_EQ(run({"pretrain", "--config", small_config(), "--dataset", path("d.jsonl"), "--out", path("h.json")}).code,
            kExitOk);
  const Outcome missing = run({"replay", "--config", small_config(), "--model", path("h.json"), "--dataset",
                               path("d.jsonl"), "--episode", "no-such-episode"});
  EXPECT_EQ(missing.code, kExitData);
}

TEST_F(Cli, DivergentTrainingExitsWithThree) {
  const auto cfg = config("huge.json", R"({
      "sim": {"num_photos": 6, "n_train": 8, "n_test": 2, "steps": 3, "feature_dim": 4},
      "pretrain": {"epochs": 0, "embed_dim": 3},
      "train": {"epochs": 3, "episodes_per_batch": 4, "lr_initial": 1e308, "lr_final": 1e308}
    })");
  ASSERT_EQ(run({"gen-synth", "--config", cfg, "--out", path("d.jsonl")}).code, kExitOk);
  ASSERT_EQ(run({"pretrain", "--config", cfg, "--dataset", path("d.jsonl"), "--out", path("h.json")}).code, kExitOk);
  const Outcome o = run({"train-rl", "--config", cfg, "--dataset", path("d.jsonl"), "--head", path("h.json"), "--out",
                         path("p.json"), "--history", path("h.csv")});
  EXPECT_EQ(o.code, kExitNumeric) << o.err;
  EXPECT_FALSE(fs::exists(path("p.json")));
}

TEST_F(Cli, GenSynthIsReproducibleAndSeedable) {
  const auto cfg = small_config();
  const Outcome a = run({"gen-synth", "--config", cfg, "--out", path("a.jsonl")});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(a.out, "photos=12 train=24 test=8 feature_dim=8 T=5\n");
  ASSERT_EQ(run({"gen-synth", "--config", cfg, "--out", path("b.jsonl")}).code, kExitOk);
  EXPECT_EQ(read_file(path("a.jsonl")), read_file(path("b.jsonl")));
  ASSERT_EQ(run({"gen-synth", "--config", cfg, "--seed", "4", "--out", path("c.jsonl")}).code, kExitOk);
  EXPECT_NE(read_file(path("a.jsonl")), read_file(path("c.jsonl")));
}

TEST_F(Cli, MinimalDatasetHasExpectedLines) {
  const auto cfg = config("min.json", R"({"sim": {"num_photos": 2, "n_train": 2, "n_test": 1, "steps": 1}})");
  ASSERT_EQ(run({"gen-synth", "--config", cfg, "--out", path("d.jsonl")}).code, kExitOk);
  EXPECT_EQ(lines(read_file(path("d.jsonl"))).size(), 1u + 2u + 3u);
}

TEST_F(Cli, ZeroEpochsKeepTheInitialModels) {
  const auto cfg = config("zero.json", R"({
      "sim": {"num_photos": 5, "n_train": 6, "n_test": 3, "steps": 4, "feature_dim": 6},
      "pretrain": {"epochs": 0, "embed_dim": 3, "seed": 9},
      "train": {"epochs": 0}
    })");
  ASSERT_EQ(run({"gen-synth", "--config", cfg, "--out", path("d.jsonl")}).code, kExitOk);
  ASSERT_EQ(run({"pretrain", "--config", cfg, "--dataset", path("d.jsonl"), "--out", path("h.json")}).code, kExitOk);
  const ModelFile head = load_model(path("h.json"));
  PretrainConfig pc;
  pc.embed_dim = 3;
  pc.seed = 9;
  pc.epochs = 0;
  EXPECT_EQ(head.head, initial_head(pc, 6));

  const Outcome rl = run({"train-rl", "--config", cfg, "--dataset", path("d.jsonl"), "--head", path("h.json"),
                          "--out", path("p.json"), "--history", path("hist.csv")});
  ASSERT_EQ(rl.code, kExitOk) << rl.err;
  const ModelFile policy = load_model(path("p.json"));
  EXPECT_EQ(policy.kind, ModelKind::kPolicy);
  EXPECT_EQ(policy.head, head.head);
  EXPECT_EQ(policy.photo_head(), head.head);
  EXPECT_EQ(policy.sigma, Vector(3, 1.0));
  EXPECT_EQ(lines(read_file(path("hist.csv"))).size(), 2u);
}

TEST_F(Cli, PipelineOutputsHaveDocumentedShapes) {
  const auto cfg = small_config();
  ASSERT_EQ(run({"gen-synth", "--config", cfg, "--out", path("d.jsonl")}).code, kExitOk);
  const Outcome pre =
      run({"pretrain", "--config", cfg, "--dataset", path("d.jsonl"), "--out", path("h.json")});
  ASSERT_EQ(pre.code, kExitOk) << pre.err;
  EXPECT_EQ(field(pre.out, "epochs"), "5");
  const Outcome rl = run({"train-rl", "--config", cfg, "--dataset", path("d.jsonl"), "--head", path("h.json"),
                          "--out", path("p.json"), "--history", path("hist.csv")});
  ASSERT_EQ(rl.code, kExitOk) << rl.err;
  EXPECT_EQ(lines(read_file(path("hist.csv"))).size(), 1u + 5u);

  const Outcome ev = run({"eval", "--config", cfg, "--model", path("p.json"), "--dataset", path("d.jsonl"), "--out",
                          path("s.csv")});
  ASSERT_EQ(ev.code, kExitOk) << ev.err;
  const auto summary = lines(read_file(path("s.csv")));
  ASSERT_EQ(summary.size(), 2u);
  EXPECT_EQ(summary[0], summary_csv_header().substr(0, summary_csv_header().size() - 1));
  EXPECT_EQ(summary[1].rfind("inverse_rank,8,", 0), 0u) << summary[1];

  const auto curve = lines(read_file(path("s.csv.curve.csv")));
  ASSERT_EQ(curve.size(), 1u + 5u);
  Vector mean_percentile;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const auto a = curve[i].find(','), b = curve[i].find(',', a + 1);
    mean_percentile.push_back(std::strtod(curve[i].substr(a + 1, b - a - 1).c_str(), nullptr));
  }
  EXPECT_EQ(format_real(stroke_backlash_index(mean_percentile)), field(ev.out, "sbi"));

  const Outcome all = run({"eval", "--config", cfg, "--model", path("h.json"), "--dataset", path("d.jsonl"), "--out",
                           path("all.csv"), "--curve", path("c.csv"), "--all-schemes"});
  ASSERT_EQ(all.code, kExitOk) << all.err;
  EXPECT_EQ(lines(read_file(path("all.csv"))).size(), 1u + 6u);
  EXPECT_TRUE(fs::exists(path("c.csv")));
}

TEST_F(Cli, ReplayTraceIsConsistentAndRepeatable) {
  const auto cfg = small_config();
  ASSERT_EQ(run({"gen-synth", "--config", cfg, "--out", path("d.jsonl")}).code, kExitOk);
  ASSERT_EQ(run({"pretrain", "--config", cfg, "--dataset", path("d.jsonl"), "--out", path("h.json")}).code, kExitOk);
  const Dataset d = load_dataset(path("d.jsonl"));
  const std::vector<std::string> args{"replay", "--config", cfg, "--model", path("h.json"), "--dataset",
                                      path("d.jsonl"), "--episode", d.test[0].id, "--dump-lists"};
  const Outcome a = run(args);
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(run(args).out, a.out);

  const auto ls = lines(a.out);
  ASSERT_EQ(ls.size(), 5u);
  std::vector<RankList> lists;
  for (std::size_t t = 0; t < ls.size(); ++t) {
    EXPECT_EQ(field(ls[t], "step"), std::to_string(t + 1));
    RankList list;
    std::istringstream in(field(ls[t], "list"));
    for (std::string item; std::getline(in, item, ',');) list.push_back(std::stoul(item));
    ASSERT_EQ(list.size(), 12u);
    // The reported rank is the paired photo's position in the dumped list.
    std::size_t paired = 0;
    while (d.photos[paired].id != d.test[0].paired_photo_id) ++paired;
    const auto at = std::find(list.begin(), list.end(), paired);
    EXPECT_EQ(field(ls[t], "rank"), std::to_string(at - list.begin() + 1));
    lists.push_back(list);
  }
  EXPECT_EQ(field(ls[0], "tau"), "");
  for (std::size_t t = 1; t < ls.size(); ++t) {
    EXPECT_EQ(field(ls[t], "tau"), format_real(kendall_tau_normalized(lists[t - 1], lists[t])));
  }

  ASSERT_EQ(run({"replay", "--config", cfg, "--model", path("h.json"), "--dataset", path("d.jsonl"), "--episode",
                 d.test[0].id, "--out", path("r.txt")})
                .code,
            kExitOk);
  EXPECT_NE(read_file(path("r.txt")).find("step=5 "), std::string::npos);
}

TEST_F(Cli, ReplaySingleStepHasEmptyTau) {
  const auto cfg = config("t1.json", R"({
      "sim": {"num_photos": 3, "n_train": 2, "n_test": 1, "steps": 1, "feature_dim": 4},
      "pretrain": {"epochs": 0, "embed_dim": 2}
    })");
  ASSERT_EQ(run({"gen-synth", "--config", cfg, "--out", path("d.jsonl")}).code, kExitOk);
  ASSERT_EQ(run({"pretrain", "--config", cfg, "--dataset", path("d.jsonl"), "--out", path("h.json")}).code, kExitOk);
  const Dataset d = load_dataset(path("d.jsonl"));
  const Outcome o = run({"replay", "--config", cfg, "--model", path("h.json"), "--dataset", path("d.jsonl"),
                         "--episode", d.test[0].id});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  const auto ls = lines(o.out);
  ASSERT_EQ(ls.size(), 1u);
  EXPECT_EQ(ls[0].substr(ls[0].size() - 4), "tau=");
}

TEST_F(Cli, PretrainSeparatesAToyDataset) {
  // Two well separated photos; every sketch state sits next to its photo.
  Dataset d;
  d.feature_dim = 2;
  d.steps = 2;
  d.photos = {{"p0", {1.0, 0.0}}, {"p1", {0.0, 1.0}}};
  for (int i = 0; i < 8; ++i) {
    const bool first = i % 2 == 0;
    SketchEpisode e;
    e.id = "e" + std::to_string(i);
    e.paired_photo_id = first ? "p0" : "p1";
    const double j = 0.01 * i;
    e.states = first ? std::vector<Vector>{{0.8, 0.1 + j}, {0.9, j}} : std::vector<Vector>{{0.1 + j, 0.8}, {j, 0.9}};
    (i < 6 ? d.train : d.test).push_back(e);
  }
  save_dataset(d, path("toy.jsonl"));
  const auto cfg = config("toy.json", R"({"pretrain": {"epochs": 50, "embed_dim": 2, "lr": 1e-2, "batch_size": 4}})");
  const Outcome o = run({"pretrain", "--config", cfg, "--dataset", path("toy.jsonl"), "--out", path("h.json")});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  EXPECT_EQ(field(o.out, "train_acc1"), "1");
  EXPECT_EQ(field(o.out, "test_acc1"), "1");
}

TEST(CliBinary, ExitCodesReachTheShell) {
  const std::string bin = OTF_CLI_PATH;
  const auto status = [&](const std::string& args) {
    const int raw = std::system((bin + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  EXPECT_EQ(status("--help"), 0);
  EXPECT_EQ(status("nope"), 1);
  EXPECT_EQ(status("pretrain --dataset /dev/null --out /tmp/otf_cli_binary_head.json"), 2);
}
