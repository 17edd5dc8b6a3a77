#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "rap/corpus.hpp"

namespace rap {

// Every knob of a prove run. Values come from (highest precedence first)
// command-line flags, RAP_MODEL_URL for the model URL, the TOML config file,
// then these defaults.
struct RunConfig {
  std::string corpus_path;
  std::string out_dir = "out";
  std::string generator = "mock";  // http | mock
  std::string model_url;
  std::string mock_script;
  std::string mock_mode = "replay";  // table | hint | replay
  std::string checker = "kernel";    // kernel | external
  std::string checker_command;
  std::string strategy = "rollout";
  std::string retrieval = "every-step";
  std::string proof_scorer = "bm25";
  std::string lemma_scorer = "tfidf";
  int k_proofs = 20;
  int j_lemmas = 50;
  double timeout_s = 600.0;
  int max_depth = 50;
  int b = 4;
  std::uint64_t seed = 0;
  int rollout_budget = 0;
  int n_samples = 1;
  double temperature = 1.0;
  int max_new_tokens = 128;
  std::size_t budget_proofs = 1024;
  std::size_t budget_lemmas = 512;
  std::size_t budget_theorem = 512;
  std::size_t budget_state = 1024;
  std::size_t budget_output = 128;
  std::string token_counter = "default";
  std::string dense_url;
  bool dense_fallback = false;
  std::string filter;  // substring of theorem_id
  int jobs = 1;
};

// Full knob dump, used by the configuration snapshot test and echoed into the
// output directory for reproducibility.
nlohmann::json run_config_json(const RunConfig& cfg);

// Stable per-theorem identity and the filename-safe form used for outputs.
std::string theorem_id_of(const TheoremRecord& theorem);
std::string sanitize_filename(const std::string& name);

// Per-theorem seed: base_seed XOR FNV-1a(theorem_id), so adding or filtering
// theorems never shifts another theorem's randomness.
std::uint64_t theorem_seed(std::uint64_t base_seed, const std::string& theorem_id);

// Subcommand bodies; each returns a process exit status (0 success, 1 any
// failure). cmd_prove exits 0 even when proofs fail — failed proofs are data
// — and 1 only on infrastructure errors.
int cmd_index(const std::string& corpus_path, const std::string& out_dir);
int cmd_prove(const RunConfig& cfg);
int cmd_eval(const std::string& dir_a, const std::string& dir_b, const std::string& out_dir);

// Argument parsing + dispatch for the rap binary.
int run_cli(int argc, const char* const* argv);

}  // namespace rap
