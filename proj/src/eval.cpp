#include "rap/eval.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace rap {
namespace {

using json = nlohmann::json;

double mean_of(const std::vector<int>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Lower-middle convention: the median of an even count is the smaller of the
// two central values, so it is always an observed value.
double median_of(std::vector<int> xs) {
  std::sort(xs.begin(), xs.end());
  return static_cast<double>(xs[(xs.size() - 1) / 2]);
}

// Shortest round-trip decimal form, so CSV and JSON agree byte for byte.
std::string number_text(double x) { return json(x).dump(); }

void check_record(const EvalRecord& r, const std::string& where) {
  if (r.theorem_id.empty()) throw EvalError(where + ": empty theorem_id");
  if (r.human_length < 1) throw EvalError(where + ": human_length must be positive");
  const bool has_generated =
      r.generated_proof.has_value() && r.generated_length.has_value() &&
      r.edit_distance.has_value();
  const bool lacks_generated =
      !r.generated_proof.has_value() && !r.generated_length.has_value() &&
      !r.edit_distance.has_value();
  if (r.proved ? !has_generated : !lacks_generated)
    throw EvalError(where + ": generated fields must be present exactly when proved");
  if (r.generated_length && *r.generated_length < 1)
    throw EvalError(where + ": generated_length must be positive");
  if (r.edit_distance && *r.edit_distance < 0)
    throw EvalError(where + ": edit_distance must be nonnegative");
}

}  // namespace

int levenshtein(const std::string& a, const std::string& b) {
  // Single-row DP; prev is the cost of transforming a[0..i) into b[0..j).
  std::vector<int> row(b.size() + 1);
  std::iota(row.begin(), row.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    int diag = row[0];  // row[i-1][j-1]
    row[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int up = row[j];
      const int substitute = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({row[j - 1] + 1, up + 1, substitute});
      diag = up;
    }
  }
  return row[b.size()];
}

int proof_length(const std::vector<std::string>& tactics) {
  if (tactics.empty()) throw std::invalid_argument("proof_length: empty tactic list");
  return static_cast<int>(tactics.size());
}

std::string canonical_proof_string(const std::vector<std::string>& tactics) {
  std::string out;
  for (const std::string& t : tactics) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

EvalRecord make_eval_record(const std::string& theorem_id,
                            const std::vector<std::string>& human_tactics,
                            const std::vector<std::string>* generated_tactics,
                            double wall_time_s) {
  EvalRecord r;
  r.theorem_id = theorem_id;
  r.human_proof = canonical_proof_string(human_tactics);
  r.human_length = proof_length(human_tactics);
  r.wall_time_s = wall_time_s;
  if (generated_tactics != nullptr) {
    r.proved = true;
    r.generated_proof = canonical_proof_string(*generated_tactics);
    r.generated_length = proof_length(*generated_tactics);
    r.edit_distance = levenshtein(*r.generated_proof, r.human_proof);
  }
  check_record(r, "make_eval_record(" + theorem_id + ")");
  return r;
}

Report summarize(const std::vector<EvalRecord>& records, const std::vector<int>& bucket_edges) {
  if (bucket_edges.empty()) throw std::invalid_argument("summarize: no bucket edges");
  for (std::size_t i = 1; i < bucket_edges.size(); ++i)
    if (bucket_edges[i] <= bucket_edges[i - 1])
      throw std::invalid_argument("summarize: bucket edges must be strictly increasing");

  Report report;
  report.n_theorems = static_cast<int>(records.size());
  for (std::size_t i = 0; i < bucket_edges.size(); ++i) {
    Bucket b;
    b.lo = bucket_edges[i];
    if (i + 1 < bucket_edges.size()) b.hi = bucket_edges[i + 1];
    report.buckets.push_back(b);
  }

  std::vector<int> lengths;
  std::vector<int> distances;
  for (const EvalRecord& r : records) {
    check_record(r, "summarize(" + r.theorem_id + ")");
    if (r.human_length < bucket_edges.front())
      throw std::invalid_argument("summarize: human_length " + std::to_string(r.human_length) +
                                  " below the first bucket edge");
    // Last bucket whose lower edge does not exceed the length.
    std::size_t slot = 0;
    while (slot + 1 < report.buckets.size() && report.buckets[slot + 1].lo <= r.human_length)
      ++slot;
    ++report.buckets[slot].n;
    if (r.proved) {
      ++report.buckets[slot].n_proved;
      ++report.n_proved;
      lengths.push_back(*r.generated_length);
      distances.push_back(*r.edit_distance);
    }
  }

  if (report.n_theorems > 0)
    report.prove_rate = static_cast<double>(report.n_proved) / report.n_theorems;
  for (Bucket& b : report.buckets)
    if (b.n > 0) b.success_rate = static_cast<double>(b.n_proved) / b.n;
  if (!lengths.empty()) {
    report.mean_generated_length = mean_of(lengths);
    report.median_generated_length = median_of(lengths);
    report.mean_edit_distance = mean_of(distances);
    report.median_edit_distance = median_of(distances);
  }
  return report;
}

DiffReport diff_tools(const std::vector<EvalRecord>& a, const std::vector<EvalRecord>& b) {
  auto ids_of = [](const std::vector<EvalRecord>& rs, const char* side) {
    std::set<std::string> ids;
    for (const EvalRecord& r : rs)
      if (!ids.insert(r.theorem_id).second)
        throw std::invalid_argument(std::string("diff_tools: duplicate theorem_id in ") + side +
                                    ": " + r.theorem_id);
    return ids;
  };
  const std::set<std::string> ids_a = ids_of(a, "a");
  const std::set<std::string> ids_b = ids_of(b, "b");
  if (ids_a != ids_b) {
    std::string msg = "diff_tools: theorem_id sets differ;";
    auto list_missing = [&msg](const std::set<std::string>& have,
                               const std::set<std::string>& lack, const char* side) {
      std::vector<std::string> only;
      std::set_difference(have.begin(), have.end(), lack.begin(), lack.end(),
                          std::back_inserter(only));
      if (only.empty()) return;
      msg += std::string(" only in ") + side + ":";
      for (const std::string& id : only) msg += " " + id;
      msg += ";";
    };
    list_missing(ids_a, ids_b, "a");
    list_missing(ids_b, ids_a, "b");
    throw std::invalid_argument(msg);
  }

  std::map<std::string, bool> proved_a;
  for (const EvalRecord& r : a) proved_a[r.theorem_id] = r.proved;
  DiffReport diff;
  diff.n_theorems = static_cast<int>(ids_a.size());
  for (const EvalRecord& r : b) {
    const bool in_a = proved_a.at(r.theorem_id);
    if (in_a && r.proved) ++diff.both;
    if (in_a && !r.proved) ++diff.a_only;
    if (!in_a && r.proved) ++diff.b_only;
  }
  diff.union_proved = diff.both + diff.a_only + diff.b_only;
  return diff;
}

nlohmann::json record_to_json(const EvalRecord& record) {
  check_record(record, "record_to_json(" + record.theorem_id + ")");
  json j{{"schema_version", kEvalSchemaVersion},
         {"theorem_id", record.theorem_id},
         {"proved", record.proved},
         {"human_proof", record.human_proof},
         {"human_length", record.human_length},
         {"wall_time_s", record.wall_time_s}};
  if (record.generated_proof) j["generated_proof"] = *record.generated_proof;
  if (record.generated_length) j["generated_length"] = *record.generated_length;
  if (record.edit_distance) j["edit_distance"] = *record.edit_distance;
  return j;
}

EvalRecord record_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw EvalError(where + ": record is not an object");
  auto field = [&](const char* name) -> const json& {
    auto it = j.find(name);
    if (it == j.end()) throw EvalError(where + ": missing field '" + name + "'");
    return *it;
  };
  const json& version = field("schema_version");
  if (!version.is_number_integer() || version.get<int>() != kEvalSchemaVersion)
    throw EvalError(where + ": unsupported schema_version " + version.dump());
  EvalRecord r;
  try {
    r.theorem_id = field("theorem_id").get<std::string>();
    r.proved = field("proved").get<bool>();
    r.human_proof = field("human_proof").get<std::string>();
    r.human_length = field("human_length").get<int>();
    r.wall_time_s = field("wall_time_s").get<double>();
    if (j.contains("generated_proof")) r.generated_proof = j["generated_proof"].get<std::string>();
    if (j.contains("generated_length")) r.generated_length = j["generated_length"].get<int>();
    if (j.contains("edit_distance")) r.edit_distance = j["edit_distance"].get<int>();
  } catch (const json::exception& e) {
    throw EvalError(where + ": " + e.what());
  }
  check_record(r, where);
  return r;
}

void write_record(const EvalRecord& record, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw EvalError("cannot write record: " + path);
  out << record_to_json(record).dump(2) << "\n";
}

std::vector<EvalRecord> load_records(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw EvalError("not a directory: " + dir);
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() > 12 && name.substr(name.size() - 12) == ".record.json")
      paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<EvalRecord> records;
  for (const fs::path& p : paths) {
    std::ifstream in(p, std::ios::binary);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw EvalError(p.string() + ": " + e.what());
    }
    records.push_back(record_from_json(j, p.string()));
  }
  std::sort(records.begin(), records.end(),
            [](const EvalRecord& x, const EvalRecord& y) { return x.theorem_id < y.theorem_id; });
  return records;
}

nlohmann::json report_to_json(const Report& report) {
  json j{{"schema_version", kEvalSchemaVersion},
         {"n_theorems", report.n_theorems},
         {"n_proved", report.n_proved},
         {"prove_rate", report.prove_rate}};
  if (report.mean_generated_length) {
    j["generated_length"] = {{"mean", *report.mean_generated_length},
                             {"median", *report.median_generated_length}};
    j["edit_distance"] = {{"mean", *report.mean_edit_distance},
                          {"median", *report.median_edit_distance}};
  } else {
    j["generated_length"] = nullptr;
    j["edit_distance"] = nullptr;
  }
  j["buckets"] = json::array();
  for (const Bucket& b : report.buckets) {
    json jb{{"lo", b.lo}, {"n", b.n}, {"n_proved", b.n_proved},
            {"success_rate", b.success_rate}};
    jb["hi"] = b.hi ? json(*b.hi) : json(nullptr);
    j["buckets"].push_back(std::move(jb));
  }
  return j;
}

nlohmann::json diff_to_json(const DiffReport& diff) {
  return json{{"schema_version", kEvalSchemaVersion},
              {"n_theorems", diff.n_theorems},
              {"union_proved", diff.union_proved},
              {"a_only", diff.a_only},
              {"b_only", diff.b_only},
              {"both", diff.both}};
}

std::string report_to_csv(const Report& report) {
  std::ostringstream out;
  out << "bucket_lo,bucket_hi,n,n_proved,success_rate\n";
  for (const Bucket& b : report.buckets) {
    out << b.lo << ",";
    if (b.hi) out << *b.hi;
    out << "," << b.n << "," << b.n_proved << "," << number_text(b.success_rate) << "\n";
  }
  out << "total,," << report.n_theorems << "," << report.n_proved << ","
      << number_text(report.prove_rate) << "\n";
  return out.str();
}

void write_report_files(const Report& report, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "report.json", std::ios::binary | std::ios::trunc);
    if (!out) throw EvalError("cannot write report.json under " + dir);
    out << report_to_json(report).dump(2) << "\n";
  }
  {
    std::ofstream out(fs::path(dir) / "report.csv", std::ios::binary | std::ios::trunc);
    if (!out) throw EvalError("cannot write report.csv under " + dir);
    out << report_to_csv(report);
  }
}

}  // namespace rap
