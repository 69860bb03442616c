#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "../tools/config.hpp"
#include "bratsos/csv.hpp"
#include "bratsos/nifti.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;
using namespace bratsos;

namespace {

struct Run {
  int code;
  std::string out, err;
};

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = fs::temp_directory_path() / ("bratsos_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run_cli(const fs::path& dir, const std::string& args) {
  const fs::path o = dir / "stdout.txt", e = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + BRATSOS_CLI_PATH + "\" " + args + " >\"" + o.string() + "\" 2>\"" + e.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(o), slurp(e)};
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

std::string features_args(const synth::Dataset& ds, const fs::path& out, const std::string& sets) {
  return "features --seg-dir " + q(ds.seg_dir) + " --t1ce-dir " + q(ds.t1ce_dir) + " --atlas " + q(ds.atlas) +
         " --metadata " + q(ds.metadata) + " --sets " + sets + " --output " + q(out);
}

}  // namespace

TEST(ConfigFile, ParsesKeyValueLines) {
  const auto kv = cli::parse_config_text(
      "# pipeline\n[features]\nseg-dir = \"/data/seg\"\nsets = bc  # trailing\n\nn_trees=5\n", "test");
  EXPECT_EQ(kv.at("seg_dir"), "/data/seg");
  EXPECT_EQ(kv.at("sets"), "bc");
  EXPECT_EQ(kv.at("n_trees"), "5");
  EXPECT_THROW(cli::parse_config_text("just words\n", "test"), Error);

  cli::PipelineConfig cfg;
  cli::apply_config(cfg, kv);
  EXPECT_EQ(cfg.seg_dir, fs::path("/data/seg"));
  EXPECT_EQ(cfg.gbdt.n_trees, 5u);
  EXPECT_TRUE(cfg.sets.handcrafted && cfg.sets.posenc && !cfg.sets.deep);
  EXPECT_THROW(cli::apply_config(cfg, {{"n_tree", "5"}}), ArgumentError);
  EXPECT_THROW(cli::apply_config(cfg, {{"sets", "bx"}}), ArgumentError);
  EXPECT_THROW(cli::apply_config(cfg, {{"pool", "median"}}), ArgumentError);
}

TEST(Cli, HandcraftedFeaturesTrainPredictEvaluate) {
  TempDir tmp("hc");
  const auto ds = synth::write_dataset(tmp / "data", 8, {40, 44, 30}, 3);
  const auto feats = tmp / "features.csv";
  auto r = run_cli(tmp.path(), features_args(ds, feats, "b"));
  ASSERT_EQ(r.code, 0) << r.err;
  const CsvTable t = read_csv(feats);
  EXPECT_EQ(t.header.size(), 37u);
  EXPECT_EQ(t.header.front(), "id");
  EXPECT_EQ(t.rows.size(), 8u);
  EXPECT_TRUE(fs::exists(feats.string() + ".manifest.json"));
  // subject 3 has an empty resection field
  const auto gtr = *t.column("resection_gtr"), str = *t.column("resection_str");
  EXPECT_EQ(t.rows[3][gtr] + t.rows[3][str], "00");

  const auto cfg = tmp / "run.conf";
  std::ofstream(cfg) << "sets = b\nn_trees = 1\nmax_depth = -1\nlearning_rate = 1\nmin_leaf = 1\n";
  const auto model = tmp / "model.json";
  r = run_cli(tmp.path(), "train --config " + q(cfg) + " --features " + q(feats) + " --metadata " + q(ds.metadata) +
                          " --model " + q(model));
  ASSERT_EQ(r.code, 0) << r.err;

  const auto pred = tmp / "pred.csv";
  r = run_cli(tmp.path(), "predict --model " + q(model) + " --features " + q(feats) + " --output " + q(pred));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_csv(pred).header, (std::vector<std::string>{"id", "Survival_days"}));

  r = run_cli(tmp.path(), "evaluate --predictions " + q(pred) + " --truth " + q(ds.metadata));
  ASSERT_EQ(r.code, 0) << r.err;
  const CsvTable m = parse_csv(r.out, "stdout");
  EXPECT_EQ(m.header, (std::vector<std::string>{"Accuracy", "MSE", "medianSE", "stdSE", "SpearmanR"}));
  EXPECT_EQ(*parse_real(m.rows.at(0).at(0)), 1.0);
  EXPECT_LT(*parse_real(m.rows.at(0).at(1)), 1e-6);

  // same run twice gives a byte-identical model
  const auto model2 = tmp / "model2.json";
  ASSERT_EQ(run_cli(tmp.path(), "train --config " + q(cfg) + " --features " + q(feats) + " --metadata " +
                                q(ds.metadata) + " --model " + q(model2))
                .code,
            0);
  EXPECT_EQ(slurp(model), slurp(model2));
}

TEST(Cli, FeaturesWithPositionEncodingHaveAllColumns) {
  TempDir tmp("pe");
  const auto ds = synth::write_dataset(tmp / "data", 2, {240, 240, 155}, 5);
  const auto feats = tmp / "features.csv";
  const auto r = run_cli(tmp.path(), features_args(ds, feats, "bc"));
  ASSERT_EQ(r.code, 0) << r.err;
  const CsvTable t = read_csv(feats);
  EXPECT_EQ(t.header.size(), 1u + 36u + 12400u);
  EXPECT_EQ(t.header[37], "pe_00000");
  EXPECT_EQ(t.header.back(), "pe_12399");
  ASSERT_EQ(t.rows.size(), 2u);
  double mass = 0.0;
  for (std::size_t c = 37; c < t.header.size(); ++c) mass += *parse_real(t.rows[0][c]);
  EXPECT_GT(mass, 0.0);
}

TEST(Cli, FeaturesRejectMissingInputsBeforeWork) {
  TempDir tmp("missing");
  const auto ds = synth::write_dataset(tmp / "data", 2, {20, 20, 10}, 1);
  auto args = features_args(ds, tmp / "f.csv", "b");
  args.replace(args.find(ds.atlas.string()), ds.atlas.string().size(), (tmp / "nope.nii.gz").string());
  const auto r = run_cli(tmp.path(), args);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("atlas not found"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(tmp / "f.csv"));
}

TEST(Cli, FeaturesReportPartialFailure) {
  TempDir tmp("partial");
  const auto ds = synth::write_dataset(tmp / "data", 3, {20, 20, 10}, 1);
  fs::remove(ds.seg_dir / (ds.ids[1] + "_seg.nii.gz"));
  const auto feats = tmp / "f.csv";
  const auto r = run_cli(tmp.path(), features_args(ds, feats, "b"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(ds.ids[1]), std::string::npos);
  EXPECT_EQ(read_csv(feats).rows.size(), 3u);
}

TEST(Cli, TrainRejectsIdMismatch) {
  TempDir tmp("mismatch");
  const auto ds = synth::write_dataset(tmp / "data", 4, {20, 20, 10}, 2);
  const auto feats = tmp / "f.csv";
  ASSERT_EQ(run_cli(tmp.path(), features_args(ds, feats, "b")).code, 0);
  std::ofstream(tmp / "labels.csv") << "BraTS19ID,Age,Survival_days,ResectionStatus\n"
                                    << ds.ids[0] << ",50,100,GTR\n"
                                    << ds.ids[1] << ",50,200,GTR\nBraTS19_OTHER_1,50,300,GTR\n";
  const auto r = run_cli(tmp.path(), "train --features " + q(feats) + " --metadata " + q(tmp / "labels.csv") +
                                     " --model " + q(tmp / "m.json"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("BraTS19_OTHER_1"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find(ds.ids[2]), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(tmp / "m.json"));
}

TEST(Cli, SegmetricsOnIdenticalAndUnpairedInputs) {
  TempDir tmp("seg");
  const Dims d{16, 16, 12};
  fs::create_directories(tmp / "pred");
  fs::create_directories(tmp / "gt");
  const VolumeGrid a = synth::tumor_labels(d, {8, 8, 6, 4});
  write_nifti(a, tmp / "pred" / "S1_seg.nii.gz");
  write_nifti(a, tmp / "gt" / "S1_seg.nii.gz");
  // edema only: ET empty in both volumes
  std::vector<double> e(voxel_count(d), 0.0);
  e[5 + 16 * 5 + 256 * 5] = 2;
  write_nifti(VolumeGrid(d, {1, 1, 1}, e, ValueKind::kLabel), tmp / "pred" / "S2_seg.nii.gz");
  write_nifti(VolumeGrid(d, {1, 1, 1}, e, ValueKind::kLabel), tmp / "gt" / "S2_seg.nii.gz");

  auto r = run_cli(tmp.path(), "segmetrics --pred-dir " + q(tmp / "pred") + " --gt-dir " + q(tmp / "gt"));
  ASSERT_EQ(r.code, 0) << r.err;
  CsvTable t = parse_csv(r.out, "stdout");
  ASSERT_EQ(t.header.size(), 7u);
  for (const auto& row : t.rows) {
    for (std::size_t c = 1; c <= 3; ++c) EXPECT_EQ(*parse_real(row[c]), 1.0) << row[0];
    for (std::size_t c = 4; c <= 6; ++c) EXPECT_EQ(*parse_real(row[c]), 0.0) << row[0];
  }

  write_nifti(a, tmp / "pred" / "S3_seg.nii.gz");
  r = run_cli(tmp.path(), "segmetrics --pred-dir " + q(tmp / "pred") + " --gt-dir " + q(tmp / "gt"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("S3"), std::string::npos);
}

TEST(Cli, GradcheckExitCodesAndDeterminism) {
  TempDir tmp("grad");
  const auto a = run_cli(tmp.path(), "gradcheck --seed 7");
  EXPECT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(run_cli(tmp.path(), "gradcheck --seed 7").out, a.out);
  EXPECT_EQ(run_cli(tmp.path(), "gradcheck --seed 7 --tolerance 1e-14").code, 1);
  EXPECT_EQ(run_cli(tmp.path(), "frobnicate").code, 1);
  EXPECT_EQ(run_cli(tmp.path(), "--help").code, 0);
}
