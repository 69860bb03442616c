#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "bratsos/bratsos.hpp"

namespace bratsos::cli {

namespace fs = std::filesystem;

namespace {

std::string volume_stem(const fs::path& p) {
  std::string name = p.filename().string();
  for (const char* ext : {".nii.gz", ".nii"}) {
    const std::string e(ext);
    if (name.size() > e.size() && name.compare(name.size() - e.size(), e.size(), e) == 0)
      return name.substr(0, name.size() - e.size());
  }
  return {};
}

// stem → path for every NIfTI file in dir.
std::map<std::string, fs::path> list_volumes(const fs::path& dir) {
  std::map<std::string, fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string stem = volume_stem(e.path());
    if (!stem.empty()) out.emplace(std::move(stem), e.path());
  }
  return out;
}

// Runs fn(i) for i in [0, n) on up to `workers` threads.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

bool is_posenc_column(const std::string& name) { return name.rfind("pe_", 0) == 0; }

bool is_handcrafted_column(const std::string& name) {
  return std::find(kHandcraftedNames.begin(), kHandcraftedNames.end(), name) != kHandcraftedNames.end();
}

std::size_t id_column(const CsvTable& t, const std::string& source) {
  for (const char* name : {"id", "BraTS19ID", "ID"})
    if (auto c = t.column(name)) return *c;
  throw FormatError(source + ": no id column (expected 'id' or 'BraTS19ID')");
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? ", " : "") + ids[i];
  return s;
}

struct IdTable {
  std::vector<std::string> ids;
  FeatureMatrix x;
};

// Reads an id-keyed features CSV, keeping the columns accepted by `keep`.
template <typename Keep>
IdTable read_feature_table(const fs::path& path, Keep&& keep) {
  const CsvTable t = read_csv(path);
  const std::size_t cid = id_column(t, path.string());
  std::vector<std::size_t> cols;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c == cid || !keep(t.header[c])) continue;
    cols.push_back(c);
    names.push_back(t.header[c]);
  }
  IdTable out{{}, FeatureMatrix(names, t.rows.size())};
  std::vector<std::string> bad;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out.ids.push_back(t.rows[r][cid]);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      auto v = parse_real(t.rows[r][cols[k]]);
      if (!v || std::isnan(*v)) {
        bad.push_back(t.rows[r][cid]);
        break;
      }
      out.x(r, k) = *v;
    }
  }
  if (!bad.empty()) throw FormatError(path.string() + ": missing or non-numeric values for subject(s): " + join_ids(bad));
  return out;
}

void write_features_manifest(const fs::path& path, const FeatureSets& sets, const std::vector<std::string>& deep_cols) {
  nlohmann::json j;
  j["format"] = "bratsos-features";
  j["version"] = 1;
  j["sets"] = sets.str();
  if (sets.handcrafted) j["handcrafted"] = std::vector<std::string>(kHandcraftedNames.begin(), kHandcraftedNames.end());
  if (sets.posenc)
    j["posenc"] = {{"count", kPosEncLength},
                   {"prefix", "pe_"},
                   {"layout", "z-major over pooled (z, y, x) = (31, 20, 20)"},
                   {"kernel_xyz", {kPosEncKernel[0], kPosEncKernel[1], kPosEncKernel[2]}}};
  if (sets.deep) j["deep"] = deep_cols;
  std::ofstream out(path);
  out << j.dump(1) << '\n';
}

}  // namespace

std::optional<fs::path> find_subject_volume(const fs::path& dir, const std::string& id) {
  std::optional<fs::path> prefixed;
  for (const auto& [stem, path] : list_volumes(dir)) {
    if (stem == id) return path;
    if (!prefixed && stem.size() > id.size() && stem.compare(0, id.size(), id) == 0 && stem[id.size()] == '_')
      prefixed = path;
  }
  return prefixed;
}

// ---------------------------------------------------------------------------

int cmd_features(const PipelineConfig& cfg, std::ostream& log) {
  // Validate every input path before touching any subject.
  std::vector<std::string> problems;
  auto need_file = [&](const fs::path& p, const char* what) {
    if (p.empty()) problems.push_back(std::string(what) + " not set");
    else if (!fs::is_regular_file(p)) problems.push_back(std::string(what) + " not found: " + p.string());
  };
  auto need_dir = [&](const fs::path& p, const char* what) {
    if (p.empty()) problems.push_back(std::string(what) + " not set");
    else if (!fs::is_directory(p)) problems.push_back(std::string(what) + " not a directory: " + p.string());
  };
  need_file(cfg.metadata, "metadata");
  if (cfg.sets.handcrafted || cfg.sets.posenc) need_dir(cfg.seg_dir, "seg_dir");
  if (cfg.sets.handcrafted) {
    need_file(cfg.atlas, "atlas");
    if (!cfg.brain_mask_dir.empty()) need_dir(cfg.brain_mask_dir, "brain_mask_dir");
    else need_dir(cfg.t1ce_dir, "t1ce_dir (or brain_mask_dir)");
  }
  if (cfg.sets.deep) need_file(cfg.deep_features, "deep_features");
  if (cfg.output.empty()) problems.push_back("output not set");
  if (!problems.empty()) {
    for (const auto& p : problems) log << "error: " << p << '\n';
    return kValidationFailure;
  }

  std::vector<SubjectRecord> subjects;
  std::optional<AtlasLabelMap> atlas;
  std::optional<IdTable> deep;
  std::unordered_map<std::string, std::size_t> deep_row;
  try {
    subjects = read_subjects(cfg.metadata);
    if (cfg.sets.handcrafted) atlas.emplace(read_nifti(cfg.atlas, ValueKind::kAtlas).grid);
    if (cfg.sets.deep) {
      deep = read_feature_table(cfg.deep_features, [](const std::string&) { return true; });
      for (std::size_t r = 0; r < deep->ids.size(); ++r) deep_row.emplace(deep->ids[r], r);
    }
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kValidationFailure;
  }

  // Missing ages are imputed with the mean age of subjects that carry a
  // survival label (the training set), falling back to all known ages.
  std::optional<double> age_fill;
  for (bool labeled_only : {true, false}) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : subjects)
      if (s.age && (!labeled_only || s.survival_days)) {
        sum += *s.age;
        ++n;
      }
    if (n > 0) {
      age_fill = sum / static_cast<double>(n);
      break;
    }
  }

  std::vector<std::string> header{"id"};
  if (cfg.sets.deep) header.insert(header.end(), deep->x.names().begin(), deep->x.names().end());
  if (cfg.sets.handcrafted) header.insert(header.end(), kHandcraftedNames.begin(), kHandcraftedNames.end());
  if (cfg.sets.posenc) {
    auto pe = posenc_column_names();
    header.insert(header.end(), pe.begin(), pe.end());
  }

  struct Result {
    std::vector<std::string> fields;
    std::vector<std::string> notes;
    std::string error;
  };
  std::vector<Result> results(subjects.size());
  const fs::path brain_dir = cfg.brain_mask_dir.empty() ? cfg.t1ce_dir : cfg.brain_mask_dir;

  parallel_for(subjects.size(), cfg.workers, [&](std::size_t i) {
    const SubjectRecord& s = subjects[i];
    Result& res = results[i];
    try {
      std::vector<double> values;
      if (cfg.sets.deep) {
        auto it = deep_row.find(s.id);
        if (it == deep_row.end()) throw ArgumentError("no deep-feature row");
        auto row = deep->x.row(it->second);
        values.insert(values.end(), row.begin(), row.end());
      }
      if (cfg.sets.handcrafted || cfg.sets.posenc) {
        auto seg_path = find_subject_volume(cfg.seg_dir, s.id);
        if (!seg_path) throw IoError("segmentation not found in " + cfg.seg_dir.string());
        const SegLabelMap seg(read_nifti(*seg_path, ValueKind::kLabel).grid);
        if (cfg.sets.handcrafted) {
          auto brain_path = find_subject_volume(brain_dir, s.id);
          if (!brain_path) throw IoError("brain mask / T1ce volume not found in " + brain_dir.string());
          const Mask brain = Mask::nonzero(read_nifti(*brain_path).grid);
          HandcraftedOptions opts{age_fill};
          const auto hf = assemble_handcrafted(s, seg, brain, *atlas, opts);
          values.insert(values.end(), hf.values.begin(), hf.values.end());
          res.notes = hf.notes;
        }
        if (cfg.sets.posenc) {
          const auto pe = pooled_segmentation(seg, cfg.pool);
          values.insert(values.end(), pe.values.begin(), pe.values.end());
        }
      }
      res.fields.reserve(values.size() + 1);
      res.fields.push_back(s.id);
      for (double v : values) res.fields.push_back(format_real(v));
    } catch (const std::exception& e) {
      res.error = e.what();
      res.fields.assign(header.size(), "");
      res.fields[0] = s.id;
    }
  });

  std::ofstream out(cfg.output);
  if (!out) {
    log << "error: cannot write " << cfg.output.string() << '\n';
    return kValidationFailure;
  }
  write_csv_row(out, header);
  std::size_t failures = 0;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    write_csv_row(out, results[i].fields);
    for (const auto& n : results[i].notes) log << "note: " << subjects[i].id << ": " << n << '\n';
    if (!results[i].error.empty()) {
      ++failures;
      log << "error: " << subjects[i].id << ": " << results[i].error << '\n';
    }
  }
  out.close();
  write_features_manifest(fs::path(cfg.output.string() + ".manifest.json"), cfg.sets,
                          deep ? deep->x.names() : std::vector<std::string>{});
  log << "features: " << subjects.size() - failures << "/" << subjects.size() << " subjects, " << header.size() - 1
      << " columns -> " << cfg.output.string() << '\n';
  return failures ? kPartialFailure : kOk;
}

// ---------------------------------------------------------------------------

int cmd_train(const PipelineConfig& cfg, const TrainArgs& args, std::ostream& log) {
  try {
    const FeatureSets sets = cfg.sets;
    auto keep = [&](const std::string& name) {
      if (is_handcrafted_column(name)) return sets.handcrafted;
      if (is_posenc_column(name)) return sets.posenc;
      return sets.deep;
    };
    const IdTable table = read_feature_table(args.features, keep);
    if (table.x.cols() == 0) {
      log << "error: no feature columns for sets '" << sets.str() << "' in " << args.features.string() << '\n';
      return kValidationFailure;
    }
    const auto subjects = read_subjects(args.metadata);
    std::unordered_map<std::string, const SubjectRecord*> by_id;
    for (const auto& s : subjects) by_id.emplace(s.id, &s);

    std::vector<std::string> offenders;
    std::set<std::string> feature_ids(table.ids.begin(), table.ids.end());
    for (const auto& id : table.ids)
      if (!by_id.count(id)) offenders.push_back(id + " (features only)");
    for (const auto& s : subjects)
      if (s.survival_days && !feature_ids.count(s.id)) offenders.push_back(s.id + " (labels only)");
    if (!offenders.empty()) {
      log << "error: id mismatch between features and labels: " << join_ids(offenders) << '\n';
      return kValidationFailure;
    }

    std::vector<std::size_t> rows;
    std::vector<double> y;
    for (std::size_t r = 0; r < table.ids.size(); ++r) {
      const auto* s = by_id.at(table.ids[r]);
      if (!s->survival_days) continue;
      rows.push_back(r);
      y.push_back(*s->survival_days);
    }
    if (rows.size() < 2) {
      log << "error: need at least 2 labeled subjects, have " << rows.size() << '\n';
      return kValidationFailure;
    }
    FeatureMatrix x(table.x.names(), rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k)
      for (std::size_t c = 0; c < x.cols(); ++c) x(k, c) = table.x(rows[k], c);

    TrainOptions opts;
    opts.gbdt = cfg.gbdt;
    opts.buckets = cfg.buckets;
    opts.select_top_k = cfg.select_top_k;
    if (cfg.pca_components > 0) {
      for (const auto& n : x.names())
        if (!is_handcrafted_column(n) && !is_posenc_column(n)) opts.pca_columns.push_back(n);
      opts.pca_components = opts.pca_columns.empty() ? 0 : cfg.pca_components;
    }
    const SurvivalModel model = train_survival_model(x, y, opts);
    save_model(model, args.model_out);
    log << "train: " << rows.size() << " subjects, " << model.feature_names.size() << " features, "
        << model.selected.size() << " used, " << model.gbdt.trees.size() << " trees -> " << args.model_out.string()
        << '\n';
    return kOk;
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kValidationFailure;
  }
}

// ---------------------------------------------------------------------------

int cmd_predict(const PredictArgs& args, std::ostream& log) {
  try {
    const SurvivalModel model = load_model(args.model);
    const std::set<std::string> wanted(model.input_columns.begin(), model.input_columns.end());
    const IdTable table = read_feature_table(args.features, [&](const std::string& n) { return wanted.count(n) > 0; });
    const auto pred = predict_survival(model, table.x);
    std::ofstream out(args.output);
    if (!out) throw IoError("cannot write " + args.output.string());
    write_csv_row(out, {"id", "Survival_days"});
    for (std::size_t r = 0; r < pred.size(); ++r) write_csv_row(out, {table.ids[r], format_real(pred[r])});
    log << "predict: " << pred.size() << " subjects -> " << args.output.string() << '\n';
    return kOk;
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kValidationFailure;
  }
}

// ---------------------------------------------------------------------------

int cmd_evaluate(const PipelineConfig& cfg, const EvaluateArgs& args, std::ostream& out, std::ostream& log) {
  try {
    const CsvTable pred = read_csv(args.predictions);
    const std::size_t pid = id_column(pred, args.predictions.string());
    const std::size_t pval = pred.require_column("Survival_days", args.predictions.string());
    const CsvTable truth = read_csv(args.truth);
    const std::size_t tid = id_column(truth, args.truth.string());
    const std::size_t tval = truth.require_column("Survival_days", args.truth.string());

    std::unordered_map<std::string, double> truth_days;
    for (const auto& row : truth.rows)
      if (auto v = parse_real(row[tval])) truth_days.emplace(row[tid], *v);

    std::vector<double> yp, yt;
    std::vector<std::string> offenders;
    for (const auto& row : pred.rows) {
      auto it = truth_days.find(row[pid]);
      auto v = parse_real(row[pval]);
      if (it == truth_days.end() || !v) {
        offenders.push_back(row[pid]);
        continue;
      }
      yp.push_back(*v);
      yt.push_back(it->second);
    }
    if (!offenders.empty()) {
      log << "error: predictions without a survival label: " << join_ids(offenders) << '\n';
      return kValidationFailure;
    }
    const EvalReport r = evaluate(yp, yt, cfg.buckets);
    std::ostringstream csv;
    write_csv_row(csv, {"Accuracy", "MSE", "medianSE", "stdSE", "SpearmanR"});
    write_csv_row(csv, {format_real(r.accuracy), format_real(r.mse), format_real(r.median_se), format_real(r.std_se),
                        format_real(r.spearman_r)});
    out << csv.str();
    if (!args.output.empty()) {
      std::ofstream f(args.output);
      if (!f) throw IoError("cannot write " + args.output.string());
      f << csv.str();
    }
    return kOk;
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kValidationFailure;
  }
}

// ---------------------------------------------------------------------------

int cmd_segmetrics(const PipelineConfig& cfg, const SegmetricsArgs& args, std::ostream& out, std::ostream& log) {
  if (!fs::is_directory(args.pred_dir) || !fs::is_directory(args.gt_dir)) {
    log << "error: pred_dir and gt_dir must be directories\n";
    return kValidationFailure;
  }
  const auto pred = list_volumes(args.pred_dir);
  const auto gt = list_volumes(args.gt_dir);
  std::vector<std::string> unpaired;
  for (const auto& [id, p] : pred)
    if (!gt.count(id)) unpaired.push_back(id + " (no ground truth)");
  for (const auto& [id, p] : gt)
    if (!pred.count(id)) unpaired.push_back(id + " (no prediction)");
  for (const auto& u : unpaired) log << "warning: unpaired subject " << u << ", skipped\n";

  constexpr std::array<Region, 3> regions{Region::kET, Region::kWT, Region::kTC};
  std::ostringstream csv;
  write_csv_row(csv, {"id", "Dice_ET", "Dice_WT", "Dice_TC", "Hausdorff_ET", "Hausdorff_WT", "Hausdorff_TC"});
  std::array<double, 6> sum{};
  std::array<std::size_t, 6> count{};
  bool failed = false;
  for (const auto& [id, ppath] : pred) {
    auto git = gt.find(id);
    if (git == gt.end()) continue;
    try {
      const SegLabelMap p(read_nifti(ppath, ValueKind::kLabel).grid);
      const SegLabelMap g(read_nifti(git->second, ValueKind::kLabel).grid);
      if (p.dims() != g.dims()) throw ArgumentError("prediction and ground truth dims differ");
      std::array<double, 6> m{};
      for (std::size_t k = 0; k < 3; ++k) {
        const Mask a = region_mask(p, regions[k]);
        const Mask b = region_mask(g, regions[k]);
        m[k] = dice(a, b);
        if (a.is_empty() && b.is_empty()) m[3 + k] = 0.0;
        else if (a.is_empty() || b.is_empty()) m[3 + k] = std::nan("");
        else m[3 + k] = hausdorff(a, b, g.spacing(), cfg.hd_percentile);
      }
      std::vector<std::string> row{id};
      for (std::size_t k = 0; k < 6; ++k) {
        row.push_back(format_real(m[k]));
        if (std::isfinite(m[k])) {
          sum[k] += m[k];
          ++count[k];
        }
      }
      write_csv_row(csv, row);
    } catch (const Error& e) {
      log << "error: " << id << ": " << e.what() << '\n';
      failed = true;
    }
  }
  std::vector<std::string> mean_row{"mean"};
  for (std::size_t k = 0; k < 6; ++k)
    mean_row.push_back(count[k] ? format_real(sum[k] / static_cast<double>(count[k])) : "nan");
  write_csv_row(csv, mean_row);

  if (args.output.empty()) {
    out << csv.str();
  } else {
    std::ofstream f(args.output);
    if (!f) {
      log << "error: cannot write " << args.output.string() << '\n';
      return kValidationFailure;
    }
    f << csv.str();
  }
  return (failed || !unpaired.empty()) ? kPartialFailure : kOk;
}

// ---------------------------------------------------------------------------

int cmd_gradcheck(const GradcheckArgs& args, std::ostream& out) {
  using namespace nn;
  std::mt19937_64 rng(args.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t dim = 8, n_classes = 3;
  double worst = 0.0;
  bool ok = true;
  for (std::size_t pt = 0; pt < args.points; ++pt) {
    LossParams params;
    params.n_classes = n_classes;
    SoftmaxHead head(n_classes, dim);
    for (double& w : head.weight) w = 0.5 * normal(rng);
    for (double& b : head.bias) b = 0.5 * normal(rng);
    Centroids cents = Centroids::zeros(n_classes, dim);
    for (auto& c : cents.c)
      for (double& v : c) v = normal(rng);
    MiniBatch batch;
    for (std::size_t i = 0; i < 4; ++i) {
      Vec z(dim);
      for (double& v : z) v = normal(rng);
      if (i % 2 == 0) batch.add_labeled(std::move(z), i / 2 % n_classes);
      else batch.add_unlabeled(std::move(z));
    }
    const GradCheckReport r = grad_check(batch, cents, head, params);
    ok = ok && r.ok;
    worst = std::max(worst, r.max_relative_error);
    if (!r.ok) out << "point " << pt << ": " << r.message << '\n';
  }
  out.precision(6);
  out << "gradcheck seed=" << args.seed << " points=" << args.points << " max_relative_error=" << std::scientific
      << worst << " tolerance=" << args.tolerance << '\n';
  return (ok && worst <= args.tolerance) ? kOk : kValidationFailure;
}

}  // namespace bratsos::cli
