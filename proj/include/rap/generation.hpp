#pragma once

#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rap/prompt.hpp"

namespace rap {

struct GeneratorError : std::runtime_error {
  explicit GeneratorError(const std::string& what) : std::runtime_error(what) {}
};

struct Completion {
  std::string text;
  double log_prob = 0.0;  // nonpositive
};

struct TacticSuggestion {
  std::string tactic_text;
  double log_prob = 0.0;
};

struct GeneratorConfig {
  int n_samples = 1;
  double temperature = 1.0;
  int max_new_tokens = 128;
};

enum class DecodeMode { sample, beam };

class TacticGenerator {
 public:
  virtual ~TacticGenerator() = default;
  virtual std::vector<Completion> generate(const std::string& prompt, int n, double temperature,
                                           int max_new_tokens, DecodeMode mode) = 0;
};

// First full tactic of a raw completion: everything through the first '.'
// that sits outside double-quoted strings, outside (possibly nested) (* *)
// comments, and is not squeezed between two identifier characters. Leading
// whitespace is trimmed; no such terminator means no tactic.
std::optional<std::string> truncate_to_tactic(std::string_view raw);

// Splits a whole script into tactics with the same scanner.
std::vector<std::string> split_script(std::string_view script);

// Sampling wrapper: requests cfg.n_samples completions, truncates each to one
// tactic, drops empties, and deduplicates by tactic text keeping the highest
// log_prob (first-seen order preserved).
std::vector<TacticSuggestion> sample_tactics(TacticGenerator& generator, const Prompt& prompt,
                                             const GeneratorConfig& cfg);

// Beam wrapper: up to b distinct suggestions sorted by log_prob descending,
// ties broken toward the lexicographically smaller tactic.
std::vector<TacticSuggestion> beam_tactics(TacticGenerator& generator, const Prompt& prompt,
                                           int b, const GeneratorConfig& cfg);

// POST <base_url>/generate with {"prompt","n","temperature","max_new_tokens",
// "mode"}; reply {"completions":[{"text","log_prob"},...]}. One retry on
// transport failure, then GeneratorError.
class HttpTacticGenerator : public TacticGenerator {
 public:
  explicit HttpTacticGenerator(std::string base_url, double timeout_s = 120.0);
  std::vector<Completion> generate(const std::string& prompt, int n, double temperature,
                                   int max_new_tokens, DecodeMode mode) override;

 private:
  std::string base_url_;
  double timeout_s_;
};

// Deterministic stand-in for a model server, driven by fixture data.
//
//   table  — a JSON map from prompt fingerprint (first 64 characters of the
//            state section) to weighted tactics; beam mode returns the top-n
//            by log_prob, sample mode draws from the seeded softmax.
//   hint   — answers only when the proof of the current state is visible in
//            the prompt: scans <RELEVANT-PROOFS> items from most relevant
//            (last) to least, or statements quoted in <FILE-PREFIX>, for a
//            known proof passing through exactly the current state, and
//            plays that proof's next tactic; otherwise a failing tactic.
//   replay — looks the theorem up by the statement in <THEOREM-AND-SCRIPT>
//            and plays the recorded human proof's next tactic.
//
// hint and replay are loaded from a corpus directory; table from a JSON file.
class MockTacticGenerator : public TacticGenerator {
 public:
  enum class Mode { table, hint, replay };

  MockTacticGenerator(const std::string& script_path, Mode mode, std::uint64_t seed = 0);
  std::vector<Completion> generate(const std::string& prompt, int n, double temperature,
                                   int max_new_tokens, DecodeMode mode) override;

  static Mode mode_from_name(const std::string& name);

 private:
  struct KnownStep {
    std::string state_text;
    std::string tactic_text;
  };
  struct KnownProof {
    std::string statement;
    std::vector<KnownStep> steps;
    std::vector<std::string> script;
  };

  std::vector<Completion> lookup_table(const std::string& prompt, int n, double temperature,
                                       DecodeMode mode);
  std::vector<Completion> lookup_hint(const std::string& prompt);
  std::vector<Completion> lookup_replay(const std::string& prompt);

  Mode mode_;
  std::map<std::string, std::vector<Completion>> table_;
  std::map<std::string, std::vector<const KnownProof*>> by_statement_;
  std::vector<std::unique_ptr<KnownProof>> proofs_;
  std::mt19937_64 rng_;
};

// Section extraction helpers shared with tests: text between a sentinel line
// and the next sentinel (or end). Returns nothing when the header is absent.
std::optional<std::string> prompt_section(const std::string& rendered, std::string_view header);

}  // namespace rap
