#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "rap/corpus.hpp"
#include "rap/retrieval.hpp"

namespace rap {

struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;  // half-open
};

// Token counting is pluggable so a deployment can mirror its model's
// tokenizer; cuts happen only at span boundaries, so counters report spans
// and the count falls out of spans().size().
class TokenCounter {
 public:
  virtual ~TokenCounter() = default;
  virtual const std::string& name() const = 0;
  virtual std::vector<TokenSpan> spans(std::string_view text) const = 0;
  std::size_t count(std::string_view text) const { return spans(text).size(); }
};

// One token per maximal run of [A-Za-z0-9_'], one per any other
// non-whitespace character; whitespace is free.
class DefaultTokenCounter : public TokenCounter {
 public:
  const std::string& name() const override;
  std::vector<TokenSpan> spans(std::string_view text) const override;
};

// Known counters: "default". Unknown names throw std::invalid_argument.
std::unique_ptr<TokenCounter> make_token_counter(const std::string& name);

struct TokenBudget {
  std::size_t proofs = 1024;
  std::size_t lemmas = 512;
  std::size_t theorem_script = 512;
  std::size_t state = 1024;
  std::size_t output = 128;
};

// Longest prefix of items whose blank-line-joined rendering stays within
// budget; items are never split.
std::vector<std::string> fit_whole_items(const std::vector<std::string>& items,
                                         std::size_t budget, const TokenCounter& counter);

// Longest suffix (resp. prefix) of text cut at a token boundary, at most
// `budget` tokens. Text already within budget comes back unchanged.
std::string fit_suffix(std::string_view text, std::size_t budget, const TokenCounter& counter);
std::string fit_prefix(std::string_view text, std::size_t budget, const TokenCounter& counter);

struct Prompt {
  enum class Kind { retrieval, prefix };

  Kind kind = Kind::retrieval;
  std::string proofs_section;
  std::string lemmas_section;
  std::string prefix_section;  // prefix prompts only
  std::string theorem_script_section;
  std::string state_section;
  std::string rendered;
};

// Sentinel lines of the wire format; fixed ASCII so tests and scripted
// generators can parse prompts.
inline constexpr std::string_view kProofsHeader = "<RELEVANT-PROOFS>";
inline constexpr std::string_view kLemmasHeader = "<RELEVANT-LEMMAS>";
inline constexpr std::string_view kFilePrefixHeader = "<FILE-PREFIX>";
inline constexpr std::string_view kTheoremHeader = "<THEOREM-AND-SCRIPT>";
inline constexpr std::string_view kStateHeader = "<PROOF-STATE>";
inline constexpr std::string_view kNextTacticHeader = "<NEXT-TACTIC>";

// Statement on one line, then the tactic script joined by single spaces.
std::string render_proof_for_prompt(const TheoremRecord& theorem);
std::string render_script(const std::string& statement, const std::vector<std::string>& tactics);

// Proofs/lemmas arrive most-relevant-first; the kept items are emitted in
// reverse so the most relevant sits nearest the generation point.
Prompt assemble_prompt(const std::vector<ScoredProof>& proofs,
                       const std::vector<ScoredLemma>& lemmas,
                       const std::string& theorem_and_script, const ProofState& state,
                       const TokenBudget& budget, const TokenCounter& counter);

// PRE-style prompt: the proofs and lemmas sections give way to a single
// <FILE-PREFIX> section holding the tail of the file text before the theorem,
// budgeted at proofs + lemmas. theorem_offset past the end of file_text
// throws std::invalid_argument.
Prompt assemble_prefix_prompt(const std::string& file_text, std::size_t theorem_offset,
                              const std::string& theorem_and_script, const ProofState& state,
                              const TokenBudget& budget, const TokenCounter& counter);

}  // namespace rap
