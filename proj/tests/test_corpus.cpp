#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <rap/corpus.hpp>

using namespace rap;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = RAP_FIXTURES_DIR;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("rap_corpus_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
}

TheoremRecord make_theorem(const std::string& statement, int n_steps, Position pos,
                           bool complete = true) {
  TheoremRecord t;
  t.statement = statement;
  t.position = std::move(pos);
  t.is_proof_complete = complete;
  for (int i = 0; i < n_steps; ++i) {
    ProofStep step;
    step.tactic_text = "step" + std::to_string(i) + ".";
    step.state_before = {"state " + statement + " " + std::to_string(i), i};
    t.steps.push_back(std::move(step));
  }
  return t;
}

// The visibility rule, written as the direct predicate over one record.
bool visible_from(const Corpus& c, const Position& pos, const Position& at) {
  if (pos.project != at.project) return false;
  if (pos.path == at.path) return pos.offset_in_file < at.offset_in_file;
  return c.dep_rank_at(pos) < c.dep_rank_at(at);
}

}  // namespace

TEST_CASE("minimal corpus: one file, one theorem, two steps") {
  TempDir tmp;
  Corpus c;
  c.files.push_back({"p", "a.v", 0, {}});
  c.theorems.push_back(make_theorem("A -> A", 2, {"p", "a.v", 1, 0}));
  save_corpus(c, tmp.path.string());

  const Corpus loaded = load_corpus(tmp.path.string());
  REQUIRE(loaded.theorems.size() == 1);
  REQUIRE(loaded.theorems[0].steps.size() == 2);
  CHECK(loaded.theorems[0].steps[0].state_before.step_index == 0);
  CHECK(loaded.theorems[0].steps[1].state_before.step_index == 1);
  CHECK(loaded.total_steps() == 2);
}

TEST_CASE("load/save round-trip is structurally equal") {
  TempDir tmp;
  Corpus c;
  c.files.push_back({"p", "base.v", 0, {}});
  c.files.push_back({"p", "top.v", 1, {"base.v"}});
  c.theorems.push_back(make_theorem("A", 1, {"p", "base.v", 1, 0}));
  c.theorems.push_back(make_theorem("B", 2, {"p", "top.v", 3, 10}, false));
  c.theorems.back().steps[1].premises_used = {"base.lem"};
  c.lemmas.push_back({"base.lem", "A -> A", {"p", "base.v", 1, 0}});
  c.file_text["p"]["base.v"] = "Lemma A ...\n";
  save_corpus(c, tmp.path.string());

  const Corpus loaded = load_corpus(tmp.path.string());
  CHECK(loaded == c);

  TempDir tmp2;
  save_corpus(loaded, tmp2.path.string());
  CHECK(load_corpus(tmp2.path.string()) == loaded);
}

TEST_CASE("dep_rank respects the transitive import order") {
  TempDir tmp;
  write_file(tmp.path / "p/files.json",
             R"([{"path":"c.v","imports":["b.v"]},{"path":"b.v","imports":["a.v"]},{"path":"a.v","imports":[]}])");
  write_file(tmp.path / "p/theorems.jsonl", "");
  write_file(tmp.path / "p/lemmas.jsonl", "");

  const Corpus c = load_corpus(tmp.path.string());
  auto rank = [&](const std::string& p) { return c.find_file("p", p)->dep_rank; };
  CHECK(rank("a.v") < rank("b.v"));
  CHECK(rank("b.v") < rank("c.v"));
  // Transitivity: a.v is reachable from c.v through b.v.
  CHECK(rank("a.v") < rank("c.v"));
}

TEST_CASE("import cycle is reported with the cycle spelled out") {
  TempDir tmp;
  write_file(tmp.path / "p/files.json",
             R"([{"path":"a.v","imports":["b.v"]},{"path":"b.v","imports":["a.v"]}])");
  write_file(tmp.path / "p/theorems.jsonl", "");
  write_file(tmp.path / "p/lemmas.jsonl", "");
  try {
    load_corpus(tmp.path.string());
    FAIL("expected CorpusError");
  } catch (const CorpusError& e) {
    const std::string what = e.what();
    CHECK(what.find("cycle") != std::string::npos);
    CHECK(what.find("a.v") != std::string::npos);
    CHECK(what.find("b.v") != std::string::npos);
  }
}

TEST_CASE("malformed records name the file and line") {
  TempDir tmp;
  write_file(tmp.path / "p/files.json", R"([{"path":"a.v","imports":[]}])");
  write_file(tmp.path / "p/lemmas.jsonl", "");

  SUBCASE("broken json") {
    write_file(tmp.path / "p/theorems.jsonl",
               R"({"statement":"A","steps":[],"position":{"path":"a.v","line":1,"offset_in_file":0},"is_proof_complete":true})"
               "\n{not json\n");
    try {
      load_corpus(tmp.path.string());
      FAIL("expected CorpusError");
    } catch (const CorpusError& e) {
      const std::string what = e.what();
      CHECK(what.find("theorems.jsonl") != std::string::npos);
      CHECK(what.find("line 2") != std::string::npos);
    }
  }
  SUBCASE("missing required field") {
    write_file(tmp.path / "p/theorems.jsonl",
               R"({"steps":[],"position":{"path":"a.v","line":1,"offset_in_file":0},"is_proof_complete":true})"
               "\n");
    CHECK_THROWS_AS(load_corpus(tmp.path.string()), CorpusError);
  }
  SUBCASE("position names an unknown file") {
    write_file(tmp.path / "p/theorems.jsonl",
               R"({"statement":"A","steps":[],"position":{"path":"zz.v","line":1,"offset_in_file":0},"is_proof_complete":true})"
               "\n");
    CHECK_THROWS_AS(load_corpus(tmp.path.string()), CorpusError);
  }
  SUBCASE("step_index out of order") {
    write_file(tmp.path / "p/theorems.jsonl",
               R"({"statement":"A","steps":[{"tactic_text":"x.","state_before":{"text":"s","step_index":1},"premises_used":[]}],"position":{"path":"a.v","line":1,"offset_in_file":0},"is_proof_complete":true})"
               "\n");
    CHECK_THROWS_AS(load_corpus(tmp.path.string()), CorpusError);
  }
  SUBCASE("offsets within a file must ascend") {
    const char* record =
        R"({"statement":"%s","steps":[],"position":{"path":"a.v","line":1,"offset_in_file":%d},"is_proof_complete":true})";
    char l1[256], l2[256];
    std::snprintf(l1, sizeof l1, record, "A", 50);
    std::snprintf(l2, sizeof l2, record, "B", 10);
    write_file(tmp.path / "p/theorems.jsonl", std::string(l1) + "\n" + l2 + "\n");
    CHECK_THROWS_AS(load_corpus(tmp.path.string()), CorpusError);
  }
  SUBCASE("unknown fields are ignored") {
    write_file(tmp.path / "p/theorems.jsonl",
               R"({"statement":"A","steps":[],"position":{"path":"a.v","line":1,"offset_in_file":0},"is_proof_complete":true,"future_field":42})"
               "\n");
    CHECK(load_corpus(tmp.path.string()).theorems.size() == 1);
  }
}

TEST_CASE("missing corpus root") {
  CHECK_THROWS_AS(load_corpus("/nonexistent/rap/corpus"), CorpusError);
}

TEST_CASE("tiny_project census") {
  const Corpus c = load_corpus(kFixtures + "/tiny_project");
  CHECK(c.files.size() == 3);
  CHECK(c.theorems.size() == 8);
  CHECK(c.lemmas.size() == 5);
  CHECK(c.total_steps() == 23);
}

TEST_CASE("proof banks: same-file prefix rule") {
  TempDir tmp;
  Corpus c;
  c.files.push_back({"p", "a.v", 0, {}});
  c.theorems.push_back(make_theorem("T1", 1, {"p", "a.v", 1, 0}));
  c.theorems.push_back(make_theorem("T2", 1, {"p", "a.v", 5, 40}));
  c.theorems.push_back(make_theorem("T3", 1, {"p", "a.v", 9, 80}));
  save_corpus(c, tmp.path.string());
  const Corpus loaded = load_corpus(tmp.path.string());

  // Nothing precedes the first theorem.
  CHECK(proof_bank_at(loaded, {"p", "a.v", 1, 0}).entries.empty());

  const ProofBank at_third = proof_bank_at(loaded, {"p", "a.v", 9, 80});
  REQUIRE(at_third.entries.size() == 2);
  CHECK(at_third.entries[0]->statement == "T1");
  CHECK(at_third.entries[1]->statement == "T2");

  CHECK_THROWS_AS(proof_bank_at(loaded, {"p", "zz.v", 1, 0}), CorpusError);
}

TEST_CASE("banks on tiny_project match the brute-force visibility predicate") {
  const Corpus c = load_corpus(kFixtures + "/tiny_project");

  // Probe from every theorem position plus a synthetic late position per file.
  std::vector<Position> probes;
  for (const auto& t : c.theorems) probes.push_back(t.position);
  for (const auto& f : c.files) probes.push_back({f.project, f.path, 9999, 1u << 20});

  for (const Position& at : probes) {
    const ProofBank bank = proof_bank_at(c, at);
    std::vector<const TheoremRecord*> expect;
    for (const auto& t : c.theorems)
      if (t.is_proof_complete && visible_from(c, t.position, at)) expect.push_back(&t);
    std::sort(expect.begin(), expect.end(),
              [&](const TheoremRecord* a, const TheoremRecord* b) {
                return std::tuple(c.dep_rank_at(a->position), a->position.offset_in_file) <
                       std::tuple(c.dep_rank_at(b->position), b->position.offset_in_file);
              });
    CHECK(bank.entries == expect);

    const LemmaBank lemmas = lemma_bank_at(c, at);
    std::vector<const LemmaStatement*> expect_lemmas;
    for (const auto& l : c.lemmas)
      if (visible_from(c, l.position, at)) expect_lemmas.push_back(&l);
    std::sort(expect_lemmas.begin(), expect_lemmas.end(),
              [&](const LemmaStatement* a, const LemmaStatement* b) {
                return std::tuple(c.dep_rank_at(a->position), a->position.offset_in_file) <
                       std::tuple(c.dep_rank_at(b->position), b->position.offset_in_file);
              });
    CHECK(lemmas.entries == expect_lemmas);
  }
}

TEST_CASE("bank monotonicity within a file") {
  const Corpus c = load_corpus(kFixtures + "/tiny_project");
  for (const auto& f : c.files) {
    std::vector<const TheoremRecord*> in_file;
    for (const auto& t : c.theorems)
      if (t.position.path == f.path && t.position.project == f.project) in_file.push_back(&t);
    for (std::size_t i = 1; i < in_file.size(); ++i) {
      const auto earlier = proof_bank_at(c, in_file[i - 1]->position).entries;
      const auto later = proof_bank_at(c, in_file[i]->position).entries;
      const std::set<const TheoremRecord*> later_set(later.begin(), later.end());
      for (const TheoremRecord* e : earlier) CHECK(later_set.count(e) == 1);
    }
  }
}

TEST_CASE("incomplete proofs are excluded from proof banks") {
  const Corpus c = load_corpus(kFixtures + "/tiny_project");
  bool saw_incomplete = false;
  for (const auto& t : c.theorems) saw_incomplete |= !t.is_proof_complete;
  CHECK(saw_incomplete);  // the fixture ends with an admitted proof
  const ProofBank bank = proof_bank_at(c, {"tiny", "top.v", 9999, 1u << 20});
  for (const TheoremRecord* t : bank.entries) CHECK(t->is_proof_complete);
}

TEST_CASE("dedup removes whole files on exact trimmed statement matches") {
  Corpus train;
  train.files.push_back({"p", "a.v", 0, {}});
  train.files.push_back({"p", "b.v", 1, {}});
  train.theorems.push_back(make_theorem("A -> A", 1, {"p", "a.v", 1, 0}));
  train.theorems.push_back(make_theorem("B -> B", 1, {"p", "a.v", 2, 30}));
  train.theorems.push_back(make_theorem("C -> C", 1, {"p", "b.v", 1, 0}));
  train.lemmas.push_back({"p.keep", "C", {"p", "b.v", 1, 0}});
  train.lemmas.push_back({"p.drop", "A", {"p", "a.v", 1, 0}});

  SUBCASE("empty held-out leaves the corpus unchanged") {
    CHECK(dedup_against(train, Corpus{}) == train);
  }
  SUBCASE("one hit drops the file and everything in it") {
    Corpus held;
    held.files.push_back({"q", "x.v", 0, {}});
    // Leading/trailing whitespace is trimmed before comparison.
    held.theorems.push_back(make_theorem("  A -> A \n", 0, {"q", "x.v", 1, 0}));
    const Corpus out = dedup_against(train, held);
    REQUIRE(out.files.size() == 1);
    CHECK(out.files[0].path == "b.v");
    REQUIRE(out.theorems.size() == 1);  // B -> B went down with a.v
    CHECK(out.theorems[0].statement == "C -> C");
    REQUIRE(out.lemmas.size() == 1);
    CHECK(out.lemmas[0].name == "p.keep");
  }
  SUBCASE("internal whitespace differences are not a match") {
    Corpus held;
    held.files.push_back({"q", "x.v", 0, {}});
    held.theorems.push_back(make_theorem("A  ->  A", 0, {"q", "x.v", 1, 0}));
    CHECK(dedup_against(train, held) == train);
  }
}
