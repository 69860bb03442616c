#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace bratsos::cli {

enum ExitCode : int { kOk = 0, kValidationFailure = 1, kPartialFailure = 2 };

int cmd_features(const PipelineConfig& cfg, std::ostream& log);

struct TrainArgs {
  std::filesystem::path features;
  std::filesystem::path metadata;
  std::filesystem::path model_out;
};
int cmd_train(const PipelineConfig& cfg, const TrainArgs& args, std::ostream& log);

struct PredictArgs {
  std::filesystem::path model;
  std::filesystem::path features;
  std::filesystem::path output;
};
int cmd_predict(const PredictArgs& args, std::ostream& log);

struct EvaluateArgs {
  std::filesystem::path predictions;
  std::filesystem::path truth;
  std::filesystem::path output;  // empty: stdout only
};
int cmd_evaluate(const PipelineConfig& cfg, const EvaluateArgs& args, std::ostream& out, std::ostream& log);

struct SegmetricsArgs {
  std::filesystem::path pred_dir;
  std::filesystem::path gt_dir;
  std::filesystem::path output;  // empty: stdout
};
int cmd_segmetrics(const PipelineConfig& cfg, const SegmetricsArgs& args, std::ostream& out, std::ostream& log);

struct GradcheckArgs {
  std::uint64_t seed = 42;
  double tolerance = 1e-3;
  std::size_t points = 5;
};
int cmd_gradcheck(const GradcheckArgs& args, std::ostream& out);

/// Finds `<dir>/<id>.nii[.gz]` or `<dir>/<id>_<suffix>.nii[.gz]`; exact stem wins.
std::optional<std::filesystem::path> find_subject_volume(const std::filesystem::path& dir, const std::string& id);

}  // namespace bratsos::cli
