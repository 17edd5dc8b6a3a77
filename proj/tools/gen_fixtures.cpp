// Writes the committed test fixtures under a target directory (default
// "fixtures"): four corpora whose recorded proof states come from running
// each script through the kernel, the scripted suggestion table for the
// best-first tree case, and the synthetic evaluation records.
//
// Everything here is deterministic, so regenerating produces byte-identical
// files.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rap/corpus.hpp"
#include "rap/eval.hpp"
#include "rap/kernel.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace rap;

namespace {

[[noreturn]] void die(const std::string& message) { throw std::runtime_error(message); }

// Accumulates one project: real file text plus the mined records, with every
// state produced by the kernel so fixture states match checker renderings
// exactly.
class ProjectBuilder {
 public:
  explicit ProjectBuilder(std::string project) : project_(std::move(project)) {}

  void open(const std::string& path, std::vector<std::string> imports) {
    close();
    FileId file;
    file.project = project_;
    file.path = path;
    file.dep_rank = static_cast<int>(corpus_.files.size());
    file.imports = std::move(imports);
    corpus_.files.push_back(std::move(file));
    path_ = path;
  }

  // complete=false renders "Admitted." but still records whatever steps the
  // script produces, matching a miner that saw the interactive session.
  void theorem(const std::string& name, const std::string& statement,
               const std::vector<std::string>& tactics, bool complete = true) {
    TheoremRecord record;
    record.statement = statement;
    record.position = here();
    record.is_proof_complete = complete;

    KernelState state;
    state.goals.push_back(parse_goal(statement));
    for (std::size_t i = 0; i < tactics.size(); ++i) {
      ProofStep step;
      step.tactic_text = tactics[i];
      step.state_before = render_state(state, static_cast<int>(i));
      CheckResult result = apply_tactic(state, tactics[i]);
      if (result.status == CheckResult::Status::invalid)
        die(project_ + "/" + name + ": step " + std::to_string(i) + " rejected: " +
            result.message);
      state = result.next;
      record.steps.push_back(std::move(step));
    }
    if (complete && !state.complete())
      die(project_ + "/" + name + ": script leaves open goals");
    corpus_.theorems.push_back(std::move(record));

    text_ += "Lemma " + name + " : " + statement + ".\n";
    text_ += "Proof.\n";
    for (const std::string& t : tactics) text_ += "  " + t + "\n";
    text_ += complete ? "Qed.\n\n" : "Admitted.\n\n";
  }

  void lemma(const std::string& name, const std::string& statement) {
    LemmaStatement record;
    record.name = name;
    record.statement_text = statement;
    record.position = here();
    corpus_.lemmas.push_back(std::move(record));
    text_ += "Axiom " + name + " : " + statement + ".\n\n";
  }

  Corpus finish() {
    close();
    return std::move(corpus_);
  }

 private:
  void close() {
    if (!path_.empty()) corpus_.file_text[project_][path_] = text_;
    path_.clear();
    text_.clear();
  }

  Position here() const {
    Position pos;
    pos.project = project_;
    pos.path = path_;
    pos.line = 1 + static_cast<int>(std::count(text_.begin(), text_.end(), '\n'));
    pos.offset_in_file = text_.size();
    return pos;
  }

  std::string project_;
  Corpus corpus_;
  std::string path_;
  std::string text_;
};

// Twelve theorems covering every tactic, each proof verified by the kernel as
// it is recorded. The replay-mode mock drives these end to end.
void write_toy_suite(const fs::path& root) {
  ProjectBuilder p("toy");
  p.open("toy.v", {});
  p.theorem("truth", "True", {"trivial."});
  p.theorem("id", "A -> A", {"intro H.", "exact H."});
  p.theorem("const", "A -> B -> A", {"intro HA.", "intro HB.", "exact HA."});
  p.theorem("dup", "A -> A /\\ A", {"intro H.", "split.", "exact H.", "exact H."});
  p.theorem("pair", "A -> B -> A /\\ B",
            {"intro HA.", "intro HB.", "split.", "exact HA.", "exact HB."});
  p.theorem("inl", "A -> A \\/ B", {"intro H.", "left.", "exact H."});
  p.theorem("inr", "B -> A \\/ B", {"intro H.", "right.", "exact H."});
  p.theorem("mp", "(A -> B) -> A -> B", {"intro H.", "intro HA.", "apply H.", "exact HA."});
  p.theorem("compose", "(A -> B) -> (B -> C) -> A -> C",
            {"intro HAB.", "intro HBC.", "intro HA.", "apply HBC.", "apply HAB.", "exact HA."});
  p.theorem("with_truth", "A -> True /\\ A", {"intro H.", "split.", "trivial.", "exact H."});
  p.theorem("conj_id", "A /\\ B -> A /\\ B", {"intro H.", "exact H."});
  p.theorem("double_premise", "(A -> A -> B) -> A -> B",
            {"intro H.", "intro HA.", "apply H.", "exact HA.", "exact HA."});
  save_corpus(p.finish(), (root / "toy_suite").string());
}

// Three files with a linear import chain, eight theorems (one admitted), five
// lemma statements. The census and visibility tests lean on exact counts.
void write_tiny_project(const fs::path& root) {
  ProjectBuilder p("tiny");

  p.open("base.v", {});
  p.theorem("truth", "True", {"trivial."});
  p.lemma("base.true_intro", "True");
  p.theorem("id", "A -> A", {"intro H.", "exact H."});
  p.lemma("base.id_a", "A -> A");

  p.open("mid.v", {"base.v"});
  p.theorem("const", "A -> B -> A", {"intro HA.", "intro HB.", "exact HA."});
  p.theorem("or_l", "A -> A \\/ B", {"intro H.", "left.", "exact H."});
  p.lemma("mid.or_intro_l", "A -> A \\/ B");
  p.theorem("or_r", "B -> A \\/ B", {"intro H.", "right.", "exact H."});
  p.lemma("mid.or_intro_r", "B -> A \\/ B");

  p.open("top.v", {"mid.v"});
  p.theorem("pair", "A -> B -> A /\\ B",
            {"intro HA.", "intro HB.", "split.", "exact HA.", "exact HB."});
  p.lemma("top.conj_intro", "A -> B -> A /\\ B");
  p.theorem("mp", "(A -> B) -> A -> B", {"intro H.", "intro HA.", "apply H.", "exact HA."});
  p.theorem("half_done", "A -> (B -> A) /\\ (A \\/ C)", {"intro H.", "split."},
            /*complete=*/false);

  save_corpus(p.finish(), (root / "tiny_project").string());
}

// lib.v carries the context proofs; targets.v carries the theorems a hint-fed
// generator should prove. Easy targets have a same-statement twin whose steps
// align with theirs at every index, so even retrieval frozen at step 0 keeps
// working. Each mid target has two library proofs passing through its state
// after the opening intro: a same-statement 9-tactic path (too long for the
// test depth limit) and a differently-stated 4-tactic path whose tail is
// short enough. Re-ranking at every step ties the two at the shared state and
// prefers the one closer to the query, which is the short one; retrieval
// frozen at step 0 stays with the long twin and runs out of depth.
void write_hint_suite(const fs::path& root) {
  ProjectBuilder p("hint");

  const auto atom = [](const char* base, int i) { return std::string(base) + std::to_string(i); };

  const auto easy = [&atom](ProjectBuilder& b, const std::string& name, int i) {
    const std::string e = atom("E", i);
    const std::string f = atom("F", i);
    switch (i % 3) {
      case 0:
        b.theorem(name, e + " -> " + e + " /\\ " + e,
                  {"intro H" + e + ".", "split.", "exact H" + e + ".", "exact H" + e + "."});
        break;
      case 1:
        b.theorem(name, e + " -> " + e + " \\/ " + f,
                  {"intro H" + e + ".", "left.", "exact H" + e + "."});
        break;
      default:
        b.theorem(name, f + " -> " + e + " \\/ " + f,
                  {"intro H" + f + ".", "right.", "exact H" + f + "."});
        break;
    }
  };

  p.open("lib.v", {});
  for (int i = 1; i <= 12; ++i) easy(p, "easy_twin_" + std::to_string(i), i);
  std::vector<std::string> mid_statements;
  for (int j = 1; j <= 8; ++j) {
    const std::string a = atom("A", j);
    const std::string z = atom("Z", j);
    const std::string h = "HA" + std::to_string(j);
    const std::string ladder = a + " /\\ (" + a + " /\\ (" + a + " /\\ " + a + "))";
    const std::string target_statement = a + " -> " + ladder + " \\/ " + a;
    mid_statements.push_back(target_statement);
    p.theorem("long_twin_" + std::to_string(j), target_statement,
              {"intro " + h + ".", "left.", "split.", "exact " + h + ".", "split.",
               "exact " + h + ".", "split.", "exact " + h + ".", "exact " + h + "."});
    p.theorem("shortcut_" + std::to_string(j),
              a + " -> (" + ladder + " \\/ " + a + ") \\/ " + z,
              {"intro " + h + ".", "left.", "right.", "exact " + h + "."});
  }

  p.open("targets.v", {"lib.v"});
  for (int i = 1; i <= 12; ++i) easy(p, "easy_" + std::to_string(i), i);
  for (int j = 1; j <= 8; ++j) {
    const std::string h = "HA" + std::to_string(j);
    p.theorem("mid_" + std::to_string(j), mid_statements[static_cast<std::size_t>(j - 1)],
              {"intro " + h + ".", "right.", "exact " + h + "."});
  }

  save_corpus(p.finish(), (root / "hint_suite").string());
}

// dep.v twins are reachable only through retrieval (imported, never in the
// file prefix); the admitted main.v twins are reachable only through the file
// prefix (excluded from the proof bank, but their statements and scripts sit
// in the stored text). Hybrid alternation covers both halves.
void write_hybrid_suite(const fs::path& root) {
  ProjectBuilder p("hybrid");

  const auto twin = [](ProjectBuilder& b, const std::string& name, const std::string& a,
                       bool complete) {
    const std::string h = "H" + a;
    b.theorem(name, a + " -> " + a + " /\\ " + a,
              {"intro " + h + ".", "split.", "exact " + h + ".", "exact " + h + "."}, complete);
  };

  p.open("dep.v", {});
  for (int m = 1; m <= 6; ++m)
    twin(p, "ret_twin_" + std::to_string(m), "R" + std::to_string(m), true);

  p.open("main.v", {"dep.v"});
  for (int k = 1; k <= 6; ++k)
    twin(p, "pre_twin_" + std::to_string(k), "P" + std::to_string(k), false);
  for (int m = 1; m <= 6; ++m)
    twin(p, "ret_target_" + std::to_string(m), "R" + std::to_string(m), true);
  for (int k = 1; k <= 6; ++k)
    twin(p, "pre_target_" + std::to_string(k), "P" + std::to_string(k), true);

  save_corpus(p.finish(), (root / "hybrid_suite").string());
}

// Scripted suggestions for the best-first bookkeeping case. The greedy child
// of the root dies, its sibling leads to a state whose only productive child
// duplicates an already-enqueued state, and the proof comes from the
// lowest-scored root child.
void write_tree_table(const fs::path& root) {
  KernelState start;
  start.goals.push_back(parse_goal("True \\/ True /\\ True"));
  const auto after = [](const KernelState& s, const std::string& tactic) {
    CheckResult r = apply_tactic(s, tactic);
    if (r.status != CheckResult::Status::incomplete) die("tree fixture: " + tactic);
    return r.next;
  };
  const KernelState b = after(start, "right.");  // |- True /\ True
  const KernelState a = after(start, "left.");   // |- True
  const KernelState c = after(b, "split.");      // two True goals

  const auto key = [](const KernelState& s) { return render_state_text(s).substr(0, 64); };
  const auto option = [](const char* tactic, double log_prob) {
    return json{{"tactic", tactic}, {"log_prob", log_prob}};
  };
  json table;
  table[key(start)] = json::array(
      {option("trivial.", -0.1), option("right.", -0.5), option("left.", -0.9),
       option("split.", -2.5)});
  table[key(b)] = json::array(
      {option("split.", -0.2), option("trivial.", -0.4), option("left.", -3.0)});
  table[key(c)] = json::array({option("trivial.", -0.3), option("split.", -1.0)});
  table[key(a)] = json::array({option("trivial.", -0.2)});

  std::ofstream out(root / "tree_table.json", std::ios::binary | std::ios::trunc);
  out << table.dump(2) << "\n";
}

// Twenty synthetic outcomes spanning all the default buckets. The matching
// aggregate numbers live in eval_expected/report.expected.json, recomputed by
// hand, not by the code under test.
void write_eval_records(const fs::path& root) {
  struct Row {
    int human_length;
    int generated_length;  // 0 = not proved
    int edit_distance;
  };
  const std::vector<Row> rows{
      {1, 1, 0},   {1, 0, 0},   {2, 2, 4},   {2, 3, 12},  {3, 0, 0},
      {3, 2, 7},   {4, 4, 0},   {5, 0, 0},   {5, 6, 22},  {6, 5, 10},
      {7, 0, 0},   {8, 8, 3},   {9, 0, 0},   {10, 9, 15}, {12, 0, 0},
      {13, 11, 30}, {16, 0, 0}, {20, 18, 41}, {21, 0, 0}, {30, 24, 55},
  };

  const fs::path dir = root / "eval_records";
  fs::create_directories(dir);
  const auto script_of = [](int n) {
    std::vector<std::string> tactics(static_cast<std::size_t>(n), "auto.");
    return tactics;
  };
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& row = rows[i];
    char id[8];
    std::snprintf(id, sizeof id, "r%02zu", i + 1);
    EvalRecord record;
    record.theorem_id = id;
    record.human_proof = canonical_proof_string(script_of(row.human_length));
    record.human_length = row.human_length;
    record.wall_time_s = 0.01 * static_cast<double>(i + 1);
    if (row.generated_length > 0) {
      record.proved = true;
      record.generated_proof = canonical_proof_string(script_of(row.generated_length));
      record.generated_length = row.generated_length;
      record.edit_distance = row.edit_distance;
    }
    write_record(record, (dir / (std::string(id) + ".record.json")).string());
  }
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? argv[1] : "fixtures";
  try {
    fs::create_directories(root);
    write_toy_suite(root);
    write_tiny_project(root);
    write_hint_suite(root);
    write_hybrid_suite(root);
    write_tree_table(root);
    write_eval_records(root);
  } catch (const std::exception& e) {
    std::cerr << "gen-fixtures: " << e.what() << "\n";
    return 1;
  }
  std::cout << "fixtures written under " << root.string() << "\n";
  return 0;
}
