// bratsos: survival-prediction pipeline from tumor segmentations.
//
//   bratsos features   --config run.toml [--seg-dir ... --atlas ... --sets bc]
//   bratsos train      --features f.csv --metadata survival.csv --model model.json
//   bratsos predict    --model model.json --features f.csv --output pred.csv
//   bratsos evaluate   --predictions pred.csv --truth survival.csv
//   bratsos segmetrics --pred-dir pred/ --gt-dir gt/
//   bratsos gradcheck  --seed 42 --tolerance 1e-3

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "bratsos/error.hpp"
#include "commands.hpp"
#include "config.hpp"

namespace {

using bratsos::cli::PipelineConfig;
using KeyValues = std::map<std::string, std::string>;

struct ConfigSource {
  std::string config_file;
  KeyValues flags;
};

// Registers --name bound to a config key; the value lands in src.flags only
// when the flag is given, so flags override the config file.
void add_key(CLI::App* app, ConfigSource& src, const std::string& flag, const std::string& key,
             const std::string& help) {
  app->add_option_function<std::string>(flag, [&src, key](const std::string& v) { src.flags[key] = v; }, help);
}

void add_config(CLI::App* app, ConfigSource& src) {
  app->add_option("--config", src.config_file, "key = value pipeline config; flags override it")
      ->check(CLI::ExistingFile);
}

void add_gbdt_keys(CLI::App* app, ConfigSource& src) {
  add_key(app, src, "--n-trees", "n_trees", "boosting stages (default 200)");
  add_key(app, src, "--max-depth", "max_depth", "tree depth, negative = unbounded (default 3)");
  add_key(app, src, "--learning-rate", "learning_rate", "shrinkage (default 0.1)");
  add_key(app, src, "--min-leaf", "min_leaf", "minimum rows per leaf (default 2)");
  add_key(app, src, "--select-top-k", "select_top_k", "refit on the k most important features (0 = all)");
  add_key(app, src, "--pca-components", "pca_components", "PCA dims for deep features (0 = off)");
}

void add_bucket_keys(CLI::App* app, ConfigSource& src) {
  add_key(app, src, "--bucket-short", "bucket_short", "short-survival bound in days (default 300)");
  add_key(app, src, "--bucket-long", "bucket_long", "long-survival bound in days (default 450)");
}

PipelineConfig resolve(const ConfigSource& src) {
  PipelineConfig cfg;
  if (!src.config_file.empty()) bratsos::cli::apply_config(cfg, bratsos::cli::read_config_file(src.config_file));
  if (auto w = bratsos::cli::workers_from_env()) cfg.workers = *w;
  bratsos::cli::apply_config(cfg, src.flags);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Brain-tumor survival prediction: features, GBDT regression, evaluation"};
  app.require_subcommand(1);

  ConfigSource src;

  auto* features = app.add_subcommand("features", "extract handcrafted / position-encoding features");
  add_config(features, src);
  add_key(features, src, "--seg-dir", "seg_dir", "directory of segmentation label maps");
  add_key(features, src, "--t1ce-dir", "t1ce_dir", "directory of T1ce volumes (brain = nonzero voxels)");
  add_key(features, src, "--brain-mask-dir", "brain_mask_dir", "directory of explicit brain masks");
  add_key(features, src, "--atlas", "atlas", "pre-aligned parcellation label volume");
  add_key(features, src, "--metadata", "metadata", "BraTS survival CSV");
  add_key(features, src, "--deep-features", "deep_features", "id-keyed deep-feature CSV (set a)");
  add_key(features, src, "--sets", "sets", "feature groups: a deep, b handcrafted, c position encoding");
  add_key(features, src, "--pool", "pool", "position-encoding pooling: mean or max");
  add_key(features, src, "--workers", "workers", "parallel subjects (env BRATSOS_WORKERS)");
  add_key(features, src, "--output,-o", "output", "features CSV to write");

  bratsos::cli::TrainArgs train_args;
  auto* train = app.add_subcommand("train", "fit the GBDT survival model");
  add_config(train, src);
  train->add_option("--features", train_args.features, "features CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--metadata,--labels", train_args.metadata, "BraTS survival CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--model,-o", train_args.model_out, "model JSON to write")->required();
  add_key(train, src, "--sets", "sets", "feature groups to use (default bc)");
  add_gbdt_keys(train, src);
  add_bucket_keys(train, src);

  bratsos::cli::PredictArgs predict_args;
  auto* predict = app.add_subcommand("predict", "predict survival days");
  predict->add_option("--model", predict_args.model, "model JSON")->required()->check(CLI::ExistingFile);
  predict->add_option("--features", predict_args.features, "features CSV")->required()->check(CLI::ExistingFile);
  predict->add_option("--output,-o", predict_args.output, "predictions CSV (id,Survival_days)")->required();

  bratsos::cli::EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "Accuracy, MSE, medianSE, stdSE, SpearmanR");
  add_config(evaluate, src);
  evaluate->add_option("--predictions", eval_args.predictions, "predictions CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--truth", eval_args.truth, "CSV with id/BraTS19ID and Survival_days")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--output,-o", eval_args.output, "metrics CSV (also printed)");
  add_bucket_keys(evaluate, src);

  bratsos::cli::SegmetricsArgs seg_args;
  auto* segmetrics = app.add_subcommand("segmetrics", "Dice / Hausdorff for ET, WT, TC");
  add_config(segmetrics, src);
  segmetrics->add_option("--pred-dir", seg_args.pred_dir, "predicted label maps")->required();
  segmetrics->add_option("--gt-dir", seg_args.gt_dir, "ground-truth label maps")->required();
  segmetrics->add_option("--output,-o", seg_args.output, "CSV to write (default stdout)");
  add_key(segmetrics, src, "--hd-percentile", "hd_percentile", "100 = classic Hausdorff, 95 = HD95");

  bratsos::cli::GradcheckArgs grad_args;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the semi-supervised loss gradient");
  gradcheck->add_option("--seed", grad_args.seed, "RNG seed")->capture_default_str();
  gradcheck->add_option("--tolerance", grad_args.tolerance, "max relative error accepted")->capture_default_str();
  gradcheck->add_option("--points", grad_args.points, "random evaluation points")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0; usage errors map to the validation-failure code.
    return app.exit(e) == 0 ? bratsos::cli::kOk : bratsos::cli::kValidationFailure;
  }

  try {
    if (*features) return bratsos::cli::cmd_features(resolve(src), std::cerr);
    if (*train) return bratsos::cli::cmd_train(resolve(src), train_args, std::cerr);
    if (*predict) return bratsos::cli::cmd_predict(predict_args, std::cerr);
    if (*evaluate) return bratsos::cli::cmd_evaluate(resolve(src), eval_args, std::cout, std::cerr);
    if (*segmetrics) return bratsos::cli::cmd_segmetrics(resolve(src), seg_args, std::cout, std::cerr);
    if (*gradcheck) return bratsos::cli::cmd_gradcheck(grad_args, std::cout);
  } catch (const bratsos::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return bratsos::cli::kValidationFailure;
  }
  return bratsos::cli::kValidationFailure;
}
