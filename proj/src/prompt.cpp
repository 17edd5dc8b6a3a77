#include "rap/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace rap {
namespace {

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}

std::string join_with_blank_lines(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += "\n\n";
    out += items[i];
  }
  return out;
}

// Rebuilds a section from most-relevant-first items: keep the longest
// affordable prefix, then reverse so relevance increases toward the end. The
// final while loop re-checks the joined text because an exotic counter may
// price the reversed join differently.
std::string budgeted_section(std::vector<std::string> items, std::size_t budget,
                             const TokenCounter& counter) {
  std::vector<std::string> kept = fit_whole_items(items, budget, counter);
  std::reverse(kept.begin(), kept.end());
  std::string section = join_with_blank_lines(kept);
  while (!kept.empty() && counter.count(section) > budget) {
    kept.erase(kept.begin());  // least relevant sits first after the reverse
    section = join_with_blank_lines(kept);
  }
  return section;
}

}  // namespace

const std::string& DefaultTokenCounter::name() const {
  static const std::string n = "default";
  return n;
}

std::vector<TokenSpan> DefaultTokenCounter::spans(std::string_view text) const {
  std::vector<TokenSpan> out;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (is_word_char(c)) {
      std::size_t start = i;
      while (i < text.size() && is_word_char(text[i])) ++i;
      out.push_back({start, i});
    } else {
      out.push_back({i, i + 1});
      ++i;
    }
  }
  return out;
}

std::unique_ptr<TokenCounter> make_token_counter(const std::string& name) {
  if (name == "default") return std::make_unique<DefaultTokenCounter>();
  throw std::invalid_argument("unknown tokenizer '" + name + "'");
}

std::vector<std::string> fit_whole_items(const std::vector<std::string>& items,
                                         std::size_t budget, const TokenCounter& counter) {
  std::vector<std::string> kept;
  std::string joined;
  for (const auto& item : items) {
    std::string candidate = kept.empty() ? item : joined + "\n\n" + item;
    if (counter.count(candidate) > budget) break;
    kept.push_back(item);
    joined = std::move(candidate);
  }
  return kept;
}

std::string fit_suffix(std::string_view text, std::size_t budget, const TokenCounter& counter) {
  if (budget == 0) return "";
  std::vector<TokenSpan> spans = counter.spans(text);
  if (spans.size() <= budget) return std::string(text);
  std::size_t cut = spans[spans.size() - budget].begin;
  return std::string(text.substr(cut));
}

std::string fit_prefix(std::string_view text, std::size_t budget, const TokenCounter& counter) {
  if (budget == 0) return "";
  std::vector<TokenSpan> spans = counter.spans(text);
  if (spans.size() <= budget) return std::string(text);
  std::size_t cut = spans[budget - 1].end;
  return std::string(text.substr(0, cut));
}

std::string render_proof_for_prompt(const TheoremRecord& theorem) {
  std::vector<std::string> tactics;
  tactics.reserve(theorem.steps.size());
  for (const auto& s : theorem.steps) tactics.push_back(s.tactic_text);
  return render_script(theorem.statement, tactics);
}

std::string render_script(const std::string& statement, const std::vector<std::string>& tactics) {
  if (tactics.empty()) return statement;
  std::string out = statement + "\n";
  for (std::size_t i = 0; i < tactics.size(); ++i) {
    if (i) out += ' ';
    out += tactics[i];
  }
  return out;
}

Prompt assemble_prompt(const std::vector<ScoredProof>& proofs,
                       const std::vector<ScoredLemma>& lemmas,
                       const std::string& theorem_and_script, const ProofState& state,
                       const TokenBudget& budget, const TokenCounter& counter) {
  std::vector<std::string> proof_items;
  proof_items.reserve(proofs.size());
  for (const auto& p : proofs) proof_items.push_back(render_proof_for_prompt(*p.theorem));
  std::vector<std::string> lemma_items;
  lemma_items.reserve(lemmas.size());
  for (const auto& l : lemmas) lemma_items.push_back(l.lemma->statement_text);

  Prompt prompt;
  prompt.kind = Prompt::Kind::retrieval;
  prompt.proofs_section = budgeted_section(std::move(proof_items), budget.proofs, counter);
  prompt.lemmas_section = budgeted_section(std::move(lemma_items), budget.lemmas, counter);
  prompt.theorem_script_section = fit_suffix(theorem_and_script, budget.theorem_script, counter);
  prompt.state_section = fit_suffix(state.text, budget.state, counter);
  prompt.rendered = std::string(kProofsHeader) + "\n" + prompt.proofs_section + "\n" +
                    std::string(kLemmasHeader) + "\n" + prompt.lemmas_section + "\n" +
                    std::string(kTheoremHeader) + "\n" + prompt.theorem_script_section + "\n" +
                    std::string(kStateHeader) + "\n" + prompt.state_section + "\n" +
                    std::string(kNextTacticHeader) + "\n";
  return prompt;
}

Prompt assemble_prefix_prompt(const std::string& file_text, std::size_t theorem_offset,
                              const std::string& theorem_and_script, const ProofState& state,
                              const TokenBudget& budget, const TokenCounter& counter) {
  if (theorem_offset > file_text.size())
    throw std::invalid_argument("theorem_offset " + std::to_string(theorem_offset) +
                                " past the end of the file text (" +
                                std::to_string(file_text.size()) + " bytes)");
  Prompt prompt;
  prompt.kind = Prompt::Kind::prefix;
  prompt.prefix_section = fit_suffix(std::string_view(file_text).substr(0, theorem_offset),
                                     budget.proofs + budget.lemmas, counter);
  prompt.theorem_script_section = fit_suffix(theorem_and_script, budget.theorem_script, counter);
  prompt.state_section = fit_suffix(state.text, budget.state, counter);
  prompt.rendered = std::string(kFilePrefixHeader) + "\n" + prompt.prefix_section + "\n" +
                    std::string(kTheoremHeader) + "\n" + prompt.theorem_script_section + "\n" +
                    std::string(kStateHeader) + "\n" + prompt.state_section + "\n" +
                    std::string(kNextTacticHeader) + "\n";
  return prompt;
}

}  // namespace rap
