#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rap/checker.hpp"
#include "rap/corpus.hpp"
#include "rap/generation.hpp"
#include "rap/prompt.hpp"
#include "rap/retrieval.hpp"

namespace rap {

struct SearchError : std::runtime_error {
  explicit SearchError(const std::string& what) : std::runtime_error(what) {}
};

enum class SearchStrategy { rollout, best_first_beam, best_first_temp, rollout_pre, hybrid };
enum class RetrievalMode { every_step, first_step_only, none, prefix };

SearchStrategy strategy_from_name(const std::string& name);
std::string strategy_name(SearchStrategy s);
RetrievalMode retrieval_mode_from_name(const std::string& name);
std::string retrieval_mode_name(RetrievalMode m);

struct SearchConfig {
  SearchStrategy strategy = SearchStrategy::rollout;
  RetrievalMode retrieval_mode = RetrievalMode::every_step;
  double timeout_s = 600.0;
  int max_depth = 50;
  int b = 4;  // best-first branching
  std::uint64_t seed = 0;
  int rollout_budget = 0;  // 0 = no cap; searches end on proof or timeout
  GeneratorConfig generator;
};

struct RetrievalOptions {
  Scorer proof_scorer = Scorer::bm25;
  Scorer lemma_scorer = Scorer::tfidf;
  int k_proofs = 20;
  int j_lemmas = 50;
  EmbeddingAdapter* adapter = nullptr;
  // When the dense adapter fails mid-search, fall back to bm25 instead of
  // aborting.
  bool dense_fallback_bm25 = false;
};

struct SearchContext {
  const Corpus* corpus = nullptr;
  ProofChecker* checker = nullptr;
  TacticGenerator* generator = nullptr;
  RetrievalOptions retrieval;
  TokenBudget budget;
  const TokenCounter* counter = nullptr;
};

// first_step_only retrieves once per theorem and replays the same items at
// every later step; the cache lives outside step_context so callers control
// its extent.
struct FrozenRetrieval {
  bool ready = false;
  std::vector<ScoredProof> proofs;
  std::vector<ScoredLemma> lemmas;
};

Prompt step_context(const TheoremRecord& theorem, const std::vector<std::string>& tactics_so_far,
                    const ProofState& state, const SearchContext& ctx, RetrievalMode mode,
                    FrozenRetrieval* frozen = nullptr);

struct TranscriptEvent {
  double ts = 0.0;  // seconds since the search started
  std::string kind;
  nlohmann::json payload;
};

struct Transcript {
  std::vector<TranscriptEvent> events;
  void write_jsonl(const std::string& path) const;
};

enum class SearchOutcome { proved, exhausted, timeout, error };
std::string outcome_name(SearchOutcome o);

struct SearchResult {
  SearchOutcome outcome = SearchOutcome::exhausted;
  std::optional<std::vector<std::string>> proof;
  int n_rollouts = 0;  // expansions for the best-first strategies
  int n_generator_calls = 0;
  double wall_time_s = 0.0;
  std::string error_message;
  Transcript transcript;
};

// Repeated independent rollouts, one sampled tactic per step; an invalid
// tactic abandons the rollout. rollout_pre swaps in file-prefix prompts.
SearchResult rollout_search(const TheoremRecord& theorem, const SearchContext& ctx,
                            const SearchConfig& cfg);

// Priority-queue search keyed by cumulative log-prob (ties: shorter script,
// then lexicographic); at most b children per expansion; invalid children are
// dropped and states already seen (whitespace-normalized text) are never
// re-enqueued.
SearchResult best_first_search(const TheoremRecord& theorem, const SearchContext& ctx,
                               const SearchConfig& cfg);

// Rollout search alternating retrieval prompts (even rollouts) with
// file-prefix prompts (odd rollouts) under one clock and one budget.
SearchResult hybrid_search(const TheoremRecord& theorem, const SearchContext& ctx,
                           const SearchConfig& cfg);

// Dispatches on cfg.strategy.
SearchResult run_search(const TheoremRecord& theorem, const SearchContext& ctx,
                        const SearchConfig& cfg);

}  // namespace rap
