#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace rap {

struct EvalError : std::runtime_error {
  explicit EvalError(const std::string& what) : std::runtime_error(what) {}
};

// One theorem's outcome. The generated_* fields are present exactly when the
// proof succeeded; proof strings are tactics joined by single spaces.
struct EvalRecord {
  std::string theorem_id;
  bool proved = false;
  std::optional<std::string> generated_proof;
  std::string human_proof;
  int human_length = 1;
  std::optional<int> generated_length;
  std::optional<int> edit_distance;
  double wall_time_s = 0.0;

  bool operator==(const EvalRecord&) const = default;
};

// Unit-cost insert/delete/substitute edit distance over characters.
int levenshtein(const std::string& a, const std::string& b);

// Number of tactics; empty scripts are a caller bug.
int proof_length(const std::vector<std::string>& tactics);

// Tactics joined by single spaces, the normalization used for edit distance.
std::string canonical_proof_string(const std::vector<std::string>& tactics);

// Assembles a record from the human script and (if proved) the generated one,
// computing lengths and the edit distance between the canonical strings.
EvalRecord make_eval_record(const std::string& theorem_id,
                            const std::vector<std::string>& human_tactics,
                            const std::vector<std::string>* generated_tactics,
                            double wall_time_s);

struct Bucket {
  int lo = 0;                // inclusive
  std::optional<int> hi;     // exclusive; absent for the open-ended last bucket
  int n = 0;
  int n_proved = 0;
  double success_rate = 0.0;  // 0 when the bucket is empty

  bool operator==(const Bucket&) const = default;
};

struct Report {
  int n_theorems = 0;
  int n_proved = 0;
  double prove_rate = 0.0;  // 0 when there are no records
  // Over proved records only; absent when nothing was proved.
  std::optional<double> mean_generated_length;
  std::optional<double> median_generated_length;
  std::optional<double> mean_edit_distance;
  std::optional<double> median_edit_distance;
  std::vector<Bucket> buckets;

  bool operator==(const Report&) const = default;
};

// Success-rate buckets echo the usual length histogram shape.
inline const std::vector<int> kDefaultBucketEdges{1, 2, 3, 4, 6, 9, 13, 21};

// Aggregates records into a Report. bucket_edges must be strictly increasing
// and cover every human_length (the last bucket is open-ended); medians use
// the lower-middle convention on even counts. Record order never matters.
Report summarize(const std::vector<EvalRecord>& records, const std::vector<int>& bucket_edges);

// Combined counts for two runs over the same theorems.
struct DiffReport {
  int n_theorems = 0;
  int union_proved = 0;
  int a_only = 0;
  int b_only = 0;
  int both = 0;

  bool operator==(const DiffReport&) const = default;
};

// Both lists must cover exactly the same theorem_id set, once each; a
// mismatch throws std::invalid_argument listing the symmetric difference.
DiffReport diff_tools(const std::vector<EvalRecord>& a, const std::vector<EvalRecord>& b);

// File formats. Records and reports carry schema_version 1; unknown versions
// or missing fields throw EvalError naming the file.
inline constexpr int kEvalSchemaVersion = 1;

nlohmann::json record_to_json(const EvalRecord& record);
EvalRecord record_from_json(const nlohmann::json& j, const std::string& where);
void write_record(const EvalRecord& record, const std::string& path);

// Reads every *.record.json directly inside dir, sorted by theorem_id.
std::vector<EvalRecord> load_records(const std::string& dir);

nlohmann::json report_to_json(const Report& report);
nlohmann::json diff_to_json(const DiffReport& diff);
// One row per bucket plus a closing "total" row.
std::string report_to_csv(const Report& report);
void write_report_files(const Report& report, const std::string& dir);

}  // namespace rap
