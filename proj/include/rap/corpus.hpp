#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace rap {

struct CorpusError : std::runtime_error {
  explicit CorpusError(const std::string& what) : std::runtime_error(what) {}
};

// A source file inside one project. dep_rank is a topological index over the
// project's import graph: if a file (transitively) imports another, the
// imported file has the strictly smaller rank.
struct FileId {
  std::string project;
  std::string path;                  // project-relative
  int dep_rank = 0;
  std::vector<std::string> imports;  // direct imports, as declared

  bool operator==(const FileId&) const = default;
};

struct Position {
  std::string project;
  std::string path;
  int line = 0;                // 1-based
  std::size_t offset_in_file = 0;

  bool operator==(const Position&) const = default;
};

struct ProofState {
  std::string text;
  int step_index = 0;  // ordinal within the proof, 0-based

  bool operator==(const ProofState&) const = default;
};

struct ProofStep {
  std::string tactic_text;  // ends with the tactic terminator '.'
  ProofState state_before;
  std::vector<std::string> premises_used;

  bool operator==(const ProofStep&) const = default;
};

struct TheoremRecord {
  std::string statement;
  std::vector<ProofStep> steps;
  Position position;
  bool is_proof_complete = false;

  bool operator==(const TheoremRecord&) const = default;
};

struct LemmaStatement {
  std::string name;            // qualified, e.g. "list.app_assoc"
  std::string statement_text;  // statement only, never the proof body
  Position position;

  bool operator==(const LemmaStatement&) const = default;
};

struct Corpus {
  std::vector<FileId> files;
  std::vector<TheoremRecord> theorems;  // ordered (project, dep_rank, offset)
  std::vector<LemmaStatement> lemmas;
  // Raw file contents where available, keyed by project then path. Needed for
  // file-prefix prompts; optional otherwise.
  std::map<std::string, std::map<std::string, std::string>> file_text;

  const FileId* find_file(const std::string& project, const std::string& path) const;
  // Throws CorpusError if the position references an unknown file.
  int dep_rank_at(const Position& pos) const;
  std::size_t total_steps() const;

  bool operator==(const Corpus&) const = default;
};

// Banks hold pointers into a Corpus; the corpus must outlive them.
struct ProofBank {
  std::vector<const TheoremRecord*> entries;  // ordered (dep_rank, offset)
};

struct LemmaBank {
  std::vector<const LemmaStatement*> entries;
};

// Loads every project directory (any immediate subdirectory containing a
// files.json) under `root`. Validation failures throw CorpusError naming the
// offending file and line.
Corpus load_corpus(const std::string& root);

// Inverse of load_corpus: writes files.json, theorems.jsonl, lemmas.jsonl and
// any stored file text. Reloading yields a structurally equal corpus.
void save_corpus(const Corpus& corpus, const std::string& root);

// Everything visible from `pos`: complete proofs of the same project that are
// earlier in the same file, or that live in a file of smaller dep_rank.
ProofBank proof_bank_at(const Corpus& corpus, const Position& pos);
LemmaBank lemma_bank_at(const Corpus& corpus, const Position& pos);

// Removes from `train` every file containing a theorem whose trimmed
// statement also appears (trimmed) in `held_out`.
Corpus dedup_against(const Corpus& train, const Corpus& held_out);

}  // namespace rap
