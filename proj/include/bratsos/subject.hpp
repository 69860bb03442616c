#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bratsos/csv.hpp"
#include "bratsos/error.hpp"

namespace bratsos {

enum class Resection { kGTR, kSTR, kNA };

inline std::string_view to_string(Resection r) {
  switch (r) {
    case Resection::kGTR: return "GTR";
    case Resection::kSTR: return "STR";
    case Resection::kNA: return "NA";
  }
  return "NA";
}

// Empty and unrecognized status strings are treated as unknown.
inline Resection parse_resection(std::string_view s) {
  if (s == "GTR") return Resection::kGTR;
  if (s == "STR") return Resection::kSTR;
  return Resection::kNA;
}

// Digit code used on the network input path: GTR 2, STR 1, NA 0.
inline int resection_digit(Resection r) {
  switch (r) {
    case Resection::kGTR: return 2;
    case Resection::kSTR: return 1;
    case Resection::kNA: return 0;
  }
  return 0;
}

struct SubjectRecord {
  std::string id;
  std::optional<double> age;  // years
  Resection resection = Resection::kNA;
  std::optional<double> survival_days;

  void validate() const {
    if (id.empty()) throw ArgumentError("SubjectRecord: empty id");
    if (age && !(*age > 0.0 && std::isfinite(*age)))
      throw ArgumentError("SubjectRecord " + id + ": age must be positive");
    if (survival_days && !(*survival_days >= 0.0 && std::isfinite(*survival_days)))
      throw ArgumentError("SubjectRecord " + id + ": survival_days must be >= 0");
  }
};

/// Parses the BraTS survival CSV
/// (`BraTS19ID,Age,Survival_days,ResectionStatus`). Survival entries that are
/// not plain numbers (e.g. "ALIVE (361 days later)") are read as missing.
inline std::vector<SubjectRecord> parse_subjects(const CsvTable& table, std::string_view source) {
  const std::size_t c_id = table.require_column("BraTS19ID", source);
  const auto c_age = table.column("Age");
  const auto c_surv = table.column("Survival_days");
  const auto c_res = table.column("ResectionStatus");
  std::vector<SubjectRecord> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    SubjectRecord s;
    s.id = row[c_id];
    if (c_age) s.age = parse_real(row[*c_age]);
    if (c_surv) s.survival_days = parse_real(row[*c_surv]);
    if (c_res) s.resection = parse_resection(row[*c_res]);
    s.validate();
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<SubjectRecord> read_subjects(const std::filesystem::path& path) {
  return parse_subjects(read_csv(path), path.string());
}

}  // namespace bratsos
