#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <rap/eval.hpp>
#include <rap/generation.hpp>

using namespace rap;
using nlohmann::json;

namespace {

const std::string kFixtures = RAP_FIXTURES_DIR;

// Plain memoized recursion on the textbook recurrence, kept independent of
// the production implementation (which runs a rolling DP row).
int lev_reference(const std::string& a, const std::string& b) {
  std::map<std::pair<std::size_t, std::size_t>, int> memo;
  auto go = [&](auto&& self, std::size_t i, std::size_t j) -> int {
    if (i == a.size()) return static_cast<int>(b.size() - j);
    if (j == b.size()) return static_cast<int>(a.size() - i);
    const auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    int best = std::min(self(self, i + 1, j), self(self, i, j + 1)) + 1;
    best = std::min(best, self(self, i + 1, j + 1) + (a[i] == b[j] ? 0 : 1));
    memo[key] = best;
    return best;
  };
  return go(go, 0, 0);
}

std::string random_word(std::mt19937_64& rng, int max_len) {
  std::uniform_int_distribution<int> len(0, max_len);
  std::uniform_int_distribution<int> pick(0, 3);  // tiny alphabet forces overlaps
  std::string s;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) s.push_back("abcd"[pick(rng)]);
  return s;
}

EvalRecord proved_record(const std::string& id, int human_len, int generated_len) {
  std::vector<std::string> human(human_len, "auto.");
  std::vector<std::string> generated(generated_len, "auto.");
  return make_eval_record(id, human, &generated, 0.5);
}

EvalRecord failed_record(const std::string& id, int human_len) {
  std::vector<std::string> human(human_len, "auto.");
  return make_eval_record(id, human, nullptr, 0.5);
}

}  // namespace

TEST_CASE("levenshtein distance on known pairs") {
  CHECK(levenshtein("", "") == 0);
  CHECK(levenshtein("abc", "") == 3);
  CHECK(levenshtein("", "abc") == 3);
  CHECK(levenshtein("abc", "abc") == 0);
  CHECK(levenshtein("kitten", "sitting") == 3);
  CHECK(levenshtein("flaw", "lawn") == 2);
  CHECK(levenshtein("intro.", "intros.") == 1);
  CHECK(levenshtein("ab", "ba") == 2);
}

TEST_CASE("levenshtein distance matches a memoized reference on random pairs") {
  std::mt19937_64 rng(20240817);
  for (int i = 0; i < 1000; ++i) {
    const std::string a = random_word(rng, 12);
    const std::string b = random_word(rng, 12);
    CAPTURE(a);
    CAPTURE(b);
    CHECK(levenshtein(a, b) == lev_reference(a, b));
  }
}

TEST_CASE("levenshtein distance satisfies the metric axioms") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const std::string a = random_word(rng, 8);
    const std::string b = random_word(rng, 8);
    const std::string c = random_word(rng, 8);
    const int ab = levenshtein(a, b);
    CHECK(ab >= 0);
    CHECK((ab == 0) == (a == b));
    CHECK(ab == levenshtein(b, a));
    CHECK(levenshtein(a, c) <= ab + levenshtein(b, c));
  }
}

TEST_CASE("proof length counts tactics") {
  CHECK(proof_length({"intros.", "auto."}) == 2);
  CHECK(proof_length({"trivial."}) == 1);
  CHECK_THROWS_AS(proof_length({}), std::invalid_argument);

  // A semicolon-chained compound stays a single tactic; the script splitter
  // agrees with the length the report uses.
  const std::string script =
      "intros. inv H; inv H0; econstructor. auto. eapply val_inject_compose; eauto.";
  CHECK(proof_length(split_script(script)) == 4);
}

TEST_CASE("canonical proof strings join tactics with single spaces") {
  CHECK(canonical_proof_string({"intro H.", "exact H."}) == "intro H. exact H.");
  CHECK(canonical_proof_string({"trivial."}) == "trivial.");
}

TEST_CASE("make_eval_record fills the derived fields") {
  const std::vector<std::string> human{"intro H.", "split.", "exact H."};
  const std::vector<std::string> generated{"intro H.", "trivial."};

  SUBCASE("proved") {
    const EvalRecord r = make_eval_record("p:f.v:10", human, &generated, 1.25);
    CHECK(r.theorem_id == "p:f.v:10");
    CHECK(r.proved);
    CHECK(r.human_length == 3);
    CHECK(r.human_proof == "intro H. split. exact H.");
    REQUIRE(r.generated_proof.has_value());
    CHECK(*r.generated_proof == "intro H. trivial.");
    CHECK(r.generated_length == 2);
    CHECK(r.edit_distance == levenshtein("intro H. trivial.", "intro H. split. exact H."));
    CHECK(r.wall_time_s == 1.25);
  }

  SUBCASE("failed attempts carry no generated fields") {
    const EvalRecord r = make_eval_record("p:f.v:10", human, nullptr, 2.0);
    CHECK_FALSE(r.proved);
    CHECK_FALSE(r.generated_proof.has_value());
    CHECK_FALSE(r.generated_length.has_value());
    CHECK_FALSE(r.edit_distance.has_value());
    CHECK(r.human_length == 3);
  }
}

TEST_CASE("summarize basic aggregates and medians") {
  SUBCASE("no records") {
    const Report r = summarize({}, kDefaultBucketEdges);
    CHECK(r.n_theorems == 0);
    CHECK(r.n_proved == 0);
    CHECK(r.prove_rate == 0.0);
    CHECK_FALSE(r.mean_generated_length.has_value());
    CHECK_FALSE(r.median_generated_length.has_value());
    REQUIRE(r.buckets.size() == kDefaultBucketEdges.size());
    for (const Bucket& b : r.buckets) {
      CHECK(b.n == 0);
      CHECK(b.success_rate == 0.0);
    }
    CHECK_FALSE(r.buckets.back().hi.has_value());
  }

  SUBCASE("even count takes the lower middle, odd the middle") {
    const std::vector<EvalRecord> even{proved_record("t1", 2, 4), proved_record("t2", 3, 4),
                                       failed_record("t3", 5)};
    const Report re = summarize(even, kDefaultBucketEdges);
    CHECK(re.n_theorems == 3);
    CHECK(re.n_proved == 2);
    CHECK(re.prove_rate == doctest::Approx(2.0 / 3.0));
    CHECK(re.median_generated_length == 4.0);
    CHECK(re.mean_generated_length == 4.0);

    const std::vector<EvalRecord> odd{proved_record("t1", 2, 3), proved_record("t2", 3, 6),
                                      proved_record("t3", 4, 6)};
    CHECK(summarize(odd, kDefaultBucketEdges).median_generated_length == 6.0);

    const std::vector<EvalRecord> pair{proved_record("t1", 2, 3), proved_record("t2", 3, 6)};
    CHECK(summarize(pair, kDefaultBucketEdges).median_generated_length == 3.0);
  }

  SUBCASE("human length below the first edge is rejected") {
    const std::vector<EvalRecord> records{proved_record("t1", 1, 1)};
    CHECK_THROWS_WITH_AS(summarize(records, {2, 5}),
                         doctest::Contains("human_length 1"), std::invalid_argument);
  }

  SUBCASE("edges must be strictly increasing and nonempty") {
    CHECK_THROWS_AS(summarize({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(summarize({}, {1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(summarize({}, {3, 2}), std::invalid_argument);
  }
}

TEST_CASE("summarize buckets partition the records") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> human(1, 30);
  std::uniform_int_distribution<int> coin(0, 1);
  std::vector<EvalRecord> records;
  for (int i = 0; i < 100; ++i) {
    const std::string id = "t" + std::to_string(i);
    records.push_back(coin(rng) ? proved_record(id, human(rng), 2)
                                : failed_record(id, human(rng)));
  }

  const Report r = summarize(records, kDefaultBucketEdges);
  REQUIRE(r.buckets.size() == kDefaultBucketEdges.size());

  int total_n = 0, total_proved = 0;
  for (std::size_t i = 0; i < r.buckets.size(); ++i) {
    const Bucket& b = r.buckets[i];
    CHECK(b.lo == kDefaultBucketEdges[i]);
    if (i + 1 < r.buckets.size())
      CHECK(b.hi == kDefaultBucketEdges[i + 1]);
    else
      CHECK_FALSE(b.hi.has_value());

    // Recount membership straight from the records.
    int n = 0, proved = 0;
    for (const EvalRecord& rec : records) {
      const bool in = rec.human_length >= b.lo && (!b.hi || rec.human_length < *b.hi);
      if (!in) continue;
      ++n;
      proved += rec.proved ? 1 : 0;
    }
    CHECK(b.n == n);
    CHECK(b.n_proved == proved);
    if (n == 0)
      CHECK(b.success_rate == 0.0);
    else
      CHECK(b.success_rate == doctest::Approx(double(proved) / n));
    total_n += b.n;
    total_proved += b.n_proved;
  }
  CHECK(total_n == r.n_theorems);
  CHECK(total_proved == r.n_proved);

  // Record order never changes the report.
  std::vector<EvalRecord> shuffled = records;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  CHECK(summarize(shuffled, kDefaultBucketEdges) == r);
}

TEST_CASE("summarize reproduces the committed report for the fixture records") {
  const std::vector<EvalRecord> records = load_records(kFixtures + "/eval_records");
  REQUIRE(records.size() == 20);
  CHECK(std::is_sorted(records.begin(), records.end(),
                       [](const EvalRecord& a, const EvalRecord& b) {
                         return a.theorem_id < b.theorem_id;
                       }));

  const Report report = summarize(records, kDefaultBucketEdges);
  std::ifstream in(kFixtures + "/eval_expected/report.expected.json");
  REQUIRE(in.good());
  const json expected = json::parse(in);
  CHECK(report_to_json(report) == expected);
}

TEST_CASE("report CSV lists one bucket per row plus a total") {
  const std::vector<EvalRecord> records = load_records(kFixtures + "/eval_records");
  const Report report = summarize(records, kDefaultBucketEdges);
  CHECK(report_to_csv(report) ==
        "bucket_lo,bucket_hi,n,n_proved,success_rate\n"
        "1,2,2,1,0.5\n"
        "2,3,2,2,1.0\n"
        "3,4,2,1,0.5\n"
        "4,6,3,2,0.6666666666666666\n"
        "6,9,3,2,0.6666666666666666\n"
        "9,13,3,1,0.3333333333333333\n"
        "13,21,3,2,0.6666666666666666\n"
        "21,,2,1,0.5\n"
        "total,,20,12,0.6\n");
}

TEST_CASE("diff_tools combines two runs over the same theorems") {
  SUBCASE("hand-checked overlap") {
    std::vector<EvalRecord> a{proved_record("t1", 2, 2), proved_record("t2", 2, 2),
                              failed_record("t3", 2), failed_record("t4", 2)};
    std::vector<EvalRecord> b{failed_record("t1", 2), proved_record("t2", 2, 2),
                              proved_record("t3", 2, 2), failed_record("t4", 2)};
    const DiffReport d = diff_tools(a, b);
    CHECK(d.n_theorems == 4);
    CHECK(d.union_proved == 3);
    CHECK(d.a_only == 1);
    CHECK(d.b_only == 1);
    CHECK(d.both == 1);

    // Order never matters.
    std::mt19937_64 rng(1);
    std::shuffle(b.begin(), b.end(), rng);
    CHECK(diff_tools(a, b) == d);

    const json j = diff_to_json(d);
    CHECK(j.at("schema_version") == 1);
    CHECK(j.at("union_proved") == 3);
  }

  SUBCASE("identical runs") {
    const std::vector<EvalRecord> a{proved_record("t1", 2, 2), failed_record("t2", 2)};
    const DiffReport d = diff_tools(a, a);
    CHECK(d.n_theorems == 2);
    CHECK(d.union_proved == 1);
    CHECK(d.a_only == 0);
    CHECK(d.b_only == 0);
    CHECK(d.both == 1);
  }

  SUBCASE("randomized set algebra") {
    std::mt19937_64 rng(4242);
    std::uniform_int_distribution<int> coin(0, 1);
    std::vector<EvalRecord> a, b;
    std::set<std::string> pa, pb;
    for (int i = 0; i < 50; ++i) {
      const std::string id = "t" + std::to_string(i);
      if (coin(rng)) {
        a.push_back(proved_record(id, 2, 2));
        pa.insert(id);
      } else {
        a.push_back(failed_record(id, 2));
      }
      if (coin(rng)) {
        b.push_back(proved_record(id, 2, 2));
        pb.insert(id);
      } else {
        b.push_back(failed_record(id, 2));
      }
    }
    const DiffReport d = diff_tools(a, b);
    std::set<std::string> inter, uni;
    std::set_intersection(pa.begin(), pa.end(), pb.begin(), pb.end(),
                          std::inserter(inter, inter.end()));
    std::set_union(pa.begin(), pa.end(), pb.begin(), pb.end(), std::inserter(uni, uni.end()));
    CHECK(d.n_theorems == 50);
    CHECK(d.union_proved == static_cast<int>(uni.size()));
    CHECK(d.both == static_cast<int>(inter.size()));
    CHECK(d.a_only == static_cast<int>(pa.size() - inter.size()));
    CHECK(d.b_only == static_cast<int>(pb.size() - inter.size()));
  }

  SUBCASE("mismatched theorem sets name the symmetric difference") {
    const std::vector<EvalRecord> a{proved_record("common", 2, 2), failed_record("only_in_a", 2)};
    const std::vector<EvalRecord> b{proved_record("common", 2, 2), failed_record("only_in_b", 2)};
    CHECK_THROWS_WITH_AS(diff_tools(a, b), doctest::Contains("only_in_a"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(diff_tools(a, b), doctest::Contains("only_in_b"),
                         std::invalid_argument);
  }

  SUBCASE("duplicate ids are rejected") {
    const std::vector<EvalRecord> a{proved_record("t1", 2, 2), failed_record("t1", 2)};
    const std::vector<EvalRecord> b{proved_record("t1", 2, 2), failed_record("t2", 2)};
    CHECK_THROWS_WITH_AS(diff_tools(a, b), doctest::Contains("duplicate"),
                         std::invalid_argument);
  }
}

TEST_CASE("eval records round-trip through JSON") {
  const EvalRecord proved = proved_record("p:f.v:10", 3, 2);
  const EvalRecord failed = failed_record("p:f.v:99", 5);

  for (const EvalRecord& r : {proved, failed}) {
    const json j = record_to_json(r);
    CHECK(j.at("schema_version") == kEvalSchemaVersion);
    CHECK(record_from_json(j, "roundtrip") == r);
  }

  SUBCASE("unknown fields are tolerated") {
    json j = record_to_json(proved);
    j["an_unknown_extra"] = true;
    CHECK(record_from_json(j, "x") == proved);
  }

  SUBCASE("missing field names the file and the field") {
    json j = record_to_json(proved);
    j.erase("human_proof");
    CHECK_THROWS_WITH_AS(record_from_json(j, "some/file.json"),
                         doctest::Contains("some/file.json"), EvalError);
    CHECK_THROWS_WITH_AS(record_from_json(j, "some/file.json"),
                         doctest::Contains("human_proof"), EvalError);
  }

  SUBCASE("unsupported schema version is rejected") {
    json j = record_to_json(proved);
    j["schema_version"] = 2;
    CHECK_THROWS_AS(record_from_json(j, "x"), EvalError);
  }

  SUBCASE("generated fields must match the proved flag") {
    json j = record_to_json(proved);
    j["proved"] = false;
    CHECK_THROWS_AS(record_from_json(j, "x"), EvalError);
  }
}

TEST_CASE("write_record and load_records round-trip through a directory") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "rap_eval_records_test";
  fs::remove_all(dir);
  fs::create_directories(dir);

  const EvalRecord r1 = proved_record("zeta", 2, 2);
  const EvalRecord r2 = failed_record("alpha", 4);
  write_record(r1, (dir / "b.record.json").string());
  write_record(r2, (dir / "a.record.json").string());
  // Files that do not match *.record.json are left alone.
  std::ofstream(dir / "notes.txt") << "ignore me";

  const std::vector<EvalRecord> loaded = load_records(dir.string());
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0] == r2);  // sorted by theorem_id, not by filename
  CHECK(loaded[1] == r1);

  CHECK_THROWS_AS(load_records((dir / "nope").string()), EvalError);
  fs::remove_all(dir);
}
