#include "rap/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace rap {
namespace {

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("cannot write " + path.string());
  out << text;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void record_error(const std::string& where, int line, const std::string& what) {
  throw CorpusError(where + " line " + std::to_string(line) + ": " + what);
}

// Pulls a required field, reporting the jsonl location on failure.
template <typename T>
T require(const json& j, const char* key, const std::string& where, int line) {
  if (!j.contains(key)) record_error(where, line, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    record_error(where, line, std::string("field '") + key + "' has the wrong type");
  }
}

// Topological ranks for one project's import graph; deterministic (ready set
// processed in path order). Throws on cycles, naming one cycle.
std::map<std::string, int> dep_ranks(const std::string& project,
                                     const std::vector<std::pair<std::string, std::vector<std::string>>>& files) {
  std::map<std::string, std::vector<std::string>> imports_of;
  for (const auto& [path, imports] : files) {
    if (imports_of.count(path))
      throw CorpusError(project + ": duplicate file entry '" + path + "'");
    imports_of[path] = imports;
  }
  for (const auto& [path, imports] : imports_of)
    for (const auto& dep : imports)
      if (!imports_of.count(dep))
        throw CorpusError(project + ": '" + path + "' imports unknown file '" + dep + "'");

  std::map<std::string, int> pending;  // unprocessed import count
  std::map<std::string, std::vector<std::string>> importers;
  for (const auto& [path, imports] : imports_of) {
    pending[path] = static_cast<int>(imports.size());
    for (const auto& dep : imports) importers[dep].push_back(path);
  }
  std::set<std::string> ready;
  for (const auto& [path, n] : pending)
    if (n == 0) ready.insert(path);

  std::map<std::string, int> rank;
  while (!ready.empty()) {
    std::string path = *ready.begin();
    ready.erase(ready.begin());
    rank[path] = static_cast<int>(rank.size());
    for (const auto& up : importers[path])
      if (--pending[up] == 0) ready.insert(up);
  }
  if (rank.size() != imports_of.size()) {
    // Walk an unresolved node's imports until a repeat to show one cycle.
    std::string start;
    for (const auto& [path, n] : pending)
      if (n > 0 && !rank.count(path)) {
        start = path;
        break;
      }
    std::vector<std::string> chain{start};
    std::set<std::string> seen{start};
    std::string cur = start;
    while (true) {
      const auto& deps = imports_of[cur];
      std::string next;
      for (const auto& d : deps)
        if (!rank.count(d)) {
          next = d;
          break;
        }
      chain.push_back(next);
      if (seen.count(next)) break;
      seen.insert(next);
      cur = next;
    }
    std::string msg = project + ": dependency cycle: ";
    for (std::size_t i = 0; i < chain.size(); ++i) {
      if (i) msg += " -> ";
      msg += chain[i];
    }
    throw CorpusError(msg);
  }
  return rank;
}

Position parse_position(const json& j, const std::string& project, const std::string& where,
                        int line) {
  json pj = j.contains("position") ? j.at("position") : json();
  if (!pj.is_object()) record_error(where, line, "missing field 'position'");
  Position pos;
  pos.project = project;
  pos.path = require<std::string>(pj, "path", where, line);
  pos.line = require<int>(pj, "line", where, line);
  pos.offset_in_file = require<std::size_t>(pj, "offset_in_file", where, line);
  return pos;
}

}  // namespace

const FileId* Corpus::find_file(const std::string& project, const std::string& path) const {
  for (const auto& f : files)
    if (f.project == project && f.path == path) return &f;
  return nullptr;
}

int Corpus::dep_rank_at(const Position& pos) const {
  const FileId* f = find_file(pos.project, pos.path);
  if (!f) throw CorpusError("unknown file " + pos.project + "/" + pos.path);
  return f->dep_rank;
}

std::size_t Corpus::total_steps() const {
  std::size_t n = 0;
  for (const auto& t : theorems) n += t.steps.size();
  return n;
}

Corpus load_corpus(const std::string& root) {
  if (!fs::is_directory(root)) throw CorpusError("corpus root is not a directory: " + root);

  std::vector<std::string> projects;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory() && fs::exists(entry.path() / "files.json"))
      projects.push_back(entry.path().filename().string());
  std::sort(projects.begin(), projects.end());
  if (projects.empty()) throw CorpusError("no project directories under " + root);

  Corpus corpus;
  for (const auto& project : projects) {
    fs::path dir = fs::path(root) / project;
    std::string files_where = project + "/files.json";

    json files_json;
    try {
      files_json = json::parse(read_text_file(dir / "files.json"));
    } catch (const json::exception& e) {
      throw CorpusError(files_where + ": " + e.what());
    }
    if (!files_json.is_array()) throw CorpusError(files_where + ": expected an array");

    std::vector<std::pair<std::string, std::vector<std::string>>> file_entries;
    for (const auto& fj : files_json) {
      std::string path = require<std::string>(fj, "path", files_where, 1);
      std::vector<std::string> imports;
      if (fj.contains("imports")) imports = fj.at("imports").get<std::vector<std::string>>();
      file_entries.emplace_back(std::move(path), std::move(imports));
    }
    std::map<std::string, int> ranks = dep_ranks(project, file_entries);

    for (const auto& [path, imports] : file_entries) {
      corpus.files.push_back(FileId{project, path, ranks.at(path), imports});
      fs::path text_path = dir / path;
      if (fs::is_regular_file(text_path))
        corpus.file_text[project][path] = read_text_file(text_path);
    }

    auto check_position = [&](const Position& pos, const std::string& where, int line) {
      if (!ranks.count(pos.path))
        record_error(where, line, "position references unknown file '" + pos.path + "'");
      auto text_it = corpus.file_text.find(project);
      if (text_it != corpus.file_text.end()) {
        auto it = text_it->second.find(pos.path);
        if (it != text_it->second.end() && pos.offset_in_file > it->second.size())
          record_error(where, line, "offset_in_file past the end of " + pos.path);
      }
    };

    std::string thm_where = project + "/theorems.jsonl";
    std::ifstream thm_in(dir / "theorems.jsonl");
    if (!thm_in) throw CorpusError("cannot open " + thm_where);
    std::string line_text;
    int line_no = 0;
    while (std::getline(thm_in, line_text)) {
      ++line_no;
      if (trim(line_text).empty()) continue;
      json j;
      try {
        j = json::parse(line_text);
      } catch (const json::exception& e) {
        record_error(thm_where, line_no, e.what());
      }
      TheoremRecord rec;
      rec.statement = require<std::string>(j, "statement", thm_where, line_no);
      rec.position = parse_position(j, project, thm_where, line_no);
      rec.is_proof_complete = require<bool>(j, "is_proof_complete", thm_where, line_no);
      check_position(rec.position, thm_where, line_no);
      if (!j.contains("steps")) record_error(thm_where, line_no, "missing field 'steps'");
      int step_index = 0;
      for (const auto& sj : j.at("steps")) {
        ProofStep step;
        step.tactic_text = require<std::string>(sj, "tactic_text", thm_where, line_no);
        std::string t = trim(step.tactic_text);
        if (t.empty() || t.back() != '.')
          record_error(thm_where, line_no, "tactic_text must end with '.'");
        if (!sj.contains("state_before"))
          record_error(thm_where, line_no, "missing field 'state_before'");
        const json& stj = sj.at("state_before");
        step.state_before.text = require<std::string>(stj, "text", thm_where, line_no);
        step.state_before.step_index = require<int>(stj, "step_index", thm_where, line_no);
        if (step.state_before.text.empty())
          record_error(thm_where, line_no, "state_before.text must be non-empty");
        if (step.state_before.step_index != step_index)
          record_error(thm_where, line_no,
                       "state_before.step_index out of order (expected " +
                           std::to_string(step_index) + ")");
        if (sj.contains("premises_used"))
          step.premises_used = sj.at("premises_used").get<std::vector<std::string>>();
        rec.steps.push_back(std::move(step));
        ++step_index;
      }
      corpus.theorems.push_back(std::move(rec));
    }

    std::string lem_where = project + "/lemmas.jsonl";
    std::ifstream lem_in(dir / "lemmas.jsonl");
    if (!lem_in) throw CorpusError("cannot open " + lem_where);
    line_no = 0;
    while (std::getline(lem_in, line_text)) {
      ++line_no;
      if (trim(line_text).empty()) continue;
      json j;
      try {
        j = json::parse(line_text);
      } catch (const json::exception& e) {
        record_error(lem_where, line_no, e.what());
      }
      LemmaStatement lemma;
      lemma.name = require<std::string>(j, "name", lem_where, line_no);
      lemma.statement_text = require<std::string>(j, "statement_text", lem_where, line_no);
      lemma.position = parse_position(j, project, lem_where, line_no);
      check_position(lemma.position, lem_where, line_no);
      corpus.lemmas.push_back(std::move(lemma));
    }

    // Theorems must be recorded in ascending offset order within each file.
    std::map<std::string, std::size_t> last_offset;
    for (const auto& t : corpus.theorems) {
      if (t.position.project != project) continue;
      auto [it, fresh] = last_offset.try_emplace(t.position.path, t.position.offset_in_file);
      if (!fresh) {
        if (t.position.offset_in_file <= it->second)
          throw CorpusError(thm_where + ": offsets in " + t.position.path +
                            " are not strictly ascending");
        it->second = t.position.offset_in_file;
      }
    }
  }

  auto order = [&corpus](const Position& p) {
    return std::tuple(p.project, corpus.dep_rank_at(p), p.offset_in_file);
  };
  std::stable_sort(corpus.theorems.begin(), corpus.theorems.end(),
                   [&](const TheoremRecord& a, const TheoremRecord& b) {
                     return order(a.position) < order(b.position);
                   });
  std::stable_sort(corpus.lemmas.begin(), corpus.lemmas.end(),
                   [&](const LemmaStatement& a, const LemmaStatement& b) {
                     return order(a.position) < order(b.position);
                   });
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& root) {
  std::set<std::string> projects;
  for (const auto& f : corpus.files) projects.insert(f.project);

  for (const auto& project : projects) {
    fs::path dir = fs::path(root) / project;
    fs::create_directories(dir);

    json files_json = json::array();
    std::vector<const FileId*> files;
    for (const auto& f : corpus.files)
      if (f.project == project) files.push_back(&f);
    std::sort(files.begin(), files.end(),
              [](const FileId* a, const FileId* b) { return a->dep_rank < b->dep_rank; });
    for (const FileId* f : files) files_json.push_back({{"path", f->path}, {"imports", f->imports}});
    write_text_file(dir / "files.json", files_json.dump(2) + "\n");

    std::ofstream thm_out(dir / "theorems.jsonl", std::ios::binary);
    for (const auto& t : corpus.theorems) {
      if (t.position.project != project) continue;
      json steps = json::array();
      for (const auto& s : t.steps)
        steps.push_back({{"tactic_text", s.tactic_text},
                         {"state_before",
                          {{"text", s.state_before.text}, {"step_index", s.state_before.step_index}}},
                         {"premises_used", s.premises_used}});
      json j = {{"statement", t.statement},
                {"steps", std::move(steps)},
                {"position",
                 {{"path", t.position.path},
                  {"line", t.position.line},
                  {"offset_in_file", t.position.offset_in_file}}},
                {"is_proof_complete", t.is_proof_complete}};
      thm_out << j.dump() << "\n";
    }

    std::ofstream lem_out(dir / "lemmas.jsonl", std::ios::binary);
    for (const auto& l : corpus.lemmas) {
      if (l.position.project != project) continue;
      json j = {{"name", l.name},
                {"statement_text", l.statement_text},
                {"position",
                 {{"path", l.position.path},
                  {"line", l.position.line},
                  {"offset_in_file", l.position.offset_in_file}}}};
      lem_out << j.dump() << "\n";
    }

    auto text_it = corpus.file_text.find(project);
    if (text_it != corpus.file_text.end())
      for (const auto& [path, text] : text_it->second) write_text_file(dir / path, text);
  }
}

ProofBank proof_bank_at(const Corpus& corpus, const Position& pos) {
  int pos_rank = corpus.dep_rank_at(pos);
  ProofBank bank;
  for (const auto& t : corpus.theorems) {
    if (!t.is_proof_complete) continue;
    if (t.position.project != pos.project) continue;
    bool same_file = t.position.path == pos.path;
    bool visible = (same_file && t.position.offset_in_file < pos.offset_in_file) ||
                   (!same_file && corpus.dep_rank_at(t.position) < pos_rank);
    if (visible) bank.entries.push_back(&t);
  }
  std::sort(bank.entries.begin(), bank.entries.end(),
            [&](const TheoremRecord* a, const TheoremRecord* b) {
              return std::tuple(corpus.dep_rank_at(a->position), a->position.offset_in_file) <
                     std::tuple(corpus.dep_rank_at(b->position), b->position.offset_in_file);
            });
  return bank;
}

LemmaBank lemma_bank_at(const Corpus& corpus, const Position& pos) {
  int pos_rank = corpus.dep_rank_at(pos);
  LemmaBank bank;
  for (const auto& l : corpus.lemmas) {
    if (l.position.project != pos.project) continue;
    bool same_file = l.position.path == pos.path;
    bool visible = (same_file && l.position.offset_in_file < pos.offset_in_file) ||
                   (!same_file && corpus.dep_rank_at(l.position) < pos_rank);
    if (visible) bank.entries.push_back(&l);
  }
  std::sort(bank.entries.begin(), bank.entries.end(),
            [&](const LemmaStatement* a, const LemmaStatement* b) {
              return std::tuple(corpus.dep_rank_at(a->position), a->position.offset_in_file) <
                     std::tuple(corpus.dep_rank_at(b->position), b->position.offset_in_file);
            });
  return bank;
}

Corpus dedup_against(const Corpus& train, const Corpus& held_out) {
  std::set<std::string> held_statements;
  for (const auto& t : held_out.theorems) held_statements.insert(trim(t.statement));

  std::set<std::pair<std::string, std::string>> drop;  // (project, path)
  for (const auto& t : train.theorems)
    if (held_statements.count(trim(t.statement)))
      drop.insert({t.position.project, t.position.path});

  Corpus out;
  for (const auto& f : train.files) {
    if (drop.count({f.project, f.path})) continue;
    FileId kept = f;
    // Dropped files disappear from import lists too, so the result reloads.
    std::erase_if(kept.imports,
                  [&](const std::string& dep) { return drop.count({f.project, dep}) != 0; });
    out.files.push_back(std::move(kept));
  }
  for (const auto& t : train.theorems)
    if (!drop.count({t.position.project, t.position.path})) out.theorems.push_back(t);
  for (const auto& l : train.lemmas)
    if (!drop.count({l.position.project, l.position.path})) out.lemmas.push_back(l);
  for (const auto& [project, by_path] : train.file_text)
    for (const auto& [path, text] : by_path)
      if (!drop.count({project, path})) out.file_text[project][path] = text;
  return out;
}

}  // namespace rap
