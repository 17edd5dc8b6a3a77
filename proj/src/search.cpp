#include "rap/search.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <utility>

namespace rap {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Whitespace-insensitive key for the best-first visited set: runs of
// whitespace collapse to one space, leading/trailing whitespace goes away.
std::string canonical_state(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c);
  }
  return out;
}

const TokenCounter& counter_or_default(const SearchContext& ctx) {
  static const DefaultTokenCounter fallback;
  return ctx.counter != nullptr ? *ctx.counter : fallback;
}

// Builds the per-step prompt for one theorem, holding the visibility banks
// and the first_step_only cache for the search's duration.
class StepPrompter {
 public:
  StepPrompter(const TheoremRecord& theorem, const SearchContext& ctx)
      : theorem_(theorem), ctx_(ctx) {}

  Prompt build(RetrievalMode mode, const std::vector<std::string>& tactics_so_far,
               const ProofState& state, FrozenRetrieval* frozen) {
    const std::string script = render_script(theorem_.statement, tactics_so_far);
    const TokenCounter& counter = counter_or_default(ctx_);
    switch (mode) {
      case RetrievalMode::none:
        return assemble_prompt({}, {}, script, state, ctx_.budget, counter);
      case RetrievalMode::prefix:
        return assemble_prefix_prompt(file_text(), theorem_.position.offset_in_file, script,
                                      state, ctx_.budget, counter);
      case RetrievalMode::every_step: {
        auto proofs = score_proofs(state);
        auto lemmas = score_lemmas(state);
        return assemble_prompt(proofs, lemmas, script, state, ctx_.budget, counter);
      }
      case RetrievalMode::first_step_only: {
        FrozenRetrieval local;
        FrozenRetrieval* cache = frozen != nullptr ? frozen : &local;
        if (!cache->ready) {
          cache->proofs = score_proofs(state);
          cache->lemmas = score_lemmas(state);
          cache->ready = true;
        }
        return assemble_prompt(cache->proofs, cache->lemmas, script, state, ctx_.budget,
                               counter);
      }
    }
    throw SearchError("unknown retrieval mode");
  }

 private:
  const std::string& file_text() {
    if (ctx_.corpus == nullptr) throw SearchError("prefix prompts need a corpus");
    const Position& pos = theorem_.position;
    auto project = ctx_.corpus->file_text.find(pos.project);
    if (project != ctx_.corpus->file_text.end()) {
      auto file = project->second.find(pos.path);
      if (file != project->second.end()) return file->second;
    }
    throw SearchError("no stored file text for " + pos.project + ":" + pos.path);
  }

  void ensure_banks() {
    if (banks_ready_) return;
    if (ctx_.corpus == nullptr) throw SearchError("retrieval prompts need a corpus");
    proof_bank_ = proof_bank_at(*ctx_.corpus, theorem_.position);
    lemma_bank_ = lemma_bank_at(*ctx_.corpus, theorem_.position);
    banks_ready_ = true;
  }

  std::vector<ScoredProof> score_proofs(const ProofState& state) {
    ensure_banks();
    const RetrievalOptions& opt = ctx_.retrieval;
    try {
      return proof_relevance(proof_bank_, state, opt.k_proofs, opt.proof_scorer, opt.adapter);
    } catch (const RetrievalError&) {
      if (opt.proof_scorer == Scorer::dense && opt.dense_fallback_bm25)
        return proof_relevance(proof_bank_, state, opt.k_proofs, Scorer::bm25, nullptr);
      throw;
    }
  }

  std::vector<ScoredLemma> score_lemmas(const ProofState& state) {
    ensure_banks();
    const RetrievalOptions& opt = ctx_.retrieval;
    try {
      return lemma_relevance(lemma_bank_, state, opt.j_lemmas, opt.lemma_scorer, opt.adapter);
    } catch (const RetrievalError&) {
      if (opt.lemma_scorer == Scorer::dense && opt.dense_fallback_bm25)
        return lemma_relevance(lemma_bank_, state, opt.j_lemmas, Scorer::bm25, nullptr);
      throw;
    }
  }

  const TheoremRecord& theorem_;
  const SearchContext& ctx_;
  bool banks_ready_ = false;
  ProofBank proof_bank_;
  LemmaBank lemma_bank_;
};

// Shared bookkeeping for one search run: the clock, the transcript, and the
// uniform terminal events.
struct Run {
  Clock::time_point start = Clock::now();
  double deadline_s = 0.0;
  SearchResult result;

  explicit Run(double timeout_s) : deadline_s(timeout_s) {}

  bool timed_out() const { return seconds_since(start) >= deadline_s; }

  void event(std::string kind, json payload) {
    result.transcript.events.push_back({seconds_since(start), std::move(kind),
                                        std::move(payload)});
  }

  SearchResult finish(SearchOutcome outcome, std::string error_message = {}) {
    result.outcome = outcome;
    result.error_message = std::move(error_message);
    result.wall_time_s = seconds_since(start);
    json payload{{"outcome", outcome_name(outcome)},
                 {"n_rollouts", result.n_rollouts},
                 {"n_generator_calls", result.n_generator_calls},
                 {"wall_time_s", result.wall_time_s}};
    if (result.proof) payload["proof"] = *result.proof;
    if (!result.error_message.empty()) payload["error"] = result.error_message;
    event("result", std::move(payload));
    return std::move(result);
  }
};

json start_payload(const TheoremRecord& theorem, const SearchConfig& cfg) {
  return json{{"statement", theorem.statement},
              {"strategy", strategy_name(cfg.strategy)},
              {"retrieval_mode", retrieval_mode_name(cfg.retrieval_mode)},
              {"timeout_s", cfg.timeout_s},
              {"max_depth", cfg.max_depth},
              {"b", cfg.b},
              {"seed", cfg.seed},
              {"rollout_budget", cfg.rollout_budget}};
}

// Retrieval mode of a given rollout. Hybrid alternates: even rollouts use
// retrieval prompts, odd rollouts use file-prefix prompts.
RetrievalMode rollout_mode(const SearchConfig& cfg, int rollout) {
  if (cfg.strategy == SearchStrategy::hybrid)
    return rollout % 2 == 0 ? RetrievalMode::every_step : RetrievalMode::prefix;
  if (cfg.strategy == SearchStrategy::rollout_pre) return RetrievalMode::prefix;
  return cfg.retrieval_mode;
}

SearchResult rollout_impl(const TheoremRecord& theorem, const SearchContext& ctx,
                          const SearchConfig& cfg) {
  Run run(cfg.timeout_s);
  run.event("search_start", start_payload(theorem, cfg));
  if (ctx.checker == nullptr || ctx.generator == nullptr)
    return run.finish(SearchOutcome::error, "search context lacks a checker or generator");

  StepPrompter prompter(theorem, ctx);
  FrozenRetrieval frozen;
  GeneratorConfig gen_cfg = cfg.generator;
  gen_cfg.n_samples = 1;  // rollouts sample exactly one tactic per step

  try {
    CheckerVerdict opening = ctx.checker->begin(theorem.statement);
    if (opening.status == CheckerVerdict::Status::invalid)
      return run.finish(SearchOutcome::error, "statement rejected: " + opening.message);
    if (opening.status == CheckerVerdict::Status::complete) {
      run.result.proof.emplace();
      return run.finish(SearchOutcome::proved);
    }

    for (int rollout = 0;; ++rollout) {
      if (cfg.rollout_budget > 0 && rollout >= cfg.rollout_budget)
        return run.finish(SearchOutcome::exhausted);
      if (run.timed_out()) return run.finish(SearchOutcome::timeout);
      const RetrievalMode mode = rollout_mode(cfg, rollout);
      run.result.n_rollouts = rollout + 1;
      run.event("rollout_start", {{"rollout", rollout}, {"mode", retrieval_mode_name(mode)}});

      std::vector<std::string> tactics;
      std::string token = opening.state_token;
      std::string state_text = opening.state_text;
      for (int step = 0;; ++step) {
        if (step >= cfg.max_depth) {
          run.event("abandon", {{"rollout", rollout}, {"reason", "depth_limit"}});
          break;
        }
        if (run.timed_out()) return run.finish(SearchOutcome::timeout);
        Prompt prompt = prompter.build(mode, tactics, ProofState{state_text, step}, &frozen);
        run.event("prompt", {{"rollout", rollout},
                             {"step", step},
                             {"kind", prompt.kind == Prompt::Kind::prefix ? "prefix"
                                                                          : "retrieval"},
                             {"text", prompt.rendered}});
        ++run.result.n_generator_calls;
        std::vector<TacticSuggestion> suggestions;
        try {
          suggestions = sample_tactics(*ctx.generator, prompt, gen_cfg);
        } catch (const GeneratorError& e) {
          run.event("abandon", {{"rollout", rollout},
                                {"reason", "generator_error"},
                                {"message", e.what()}});
          break;
        }
        if (suggestions.empty()) {
          run.event("abandon", {{"rollout", rollout}, {"reason", "no_suggestion"}});
          break;
        }
        const TacticSuggestion& pick = suggestions.front();
        run.event("suggestion", {{"rollout", rollout},
                                 {"step", step},
                                 {"tactic", pick.tactic_text},
                                 {"log_prob", pick.log_prob}});
        if (run.timed_out()) return run.finish(SearchOutcome::timeout);
        CheckerVerdict verdict = ctx.checker->apply(token, pick.tactic_text);
        json check{{"rollout", rollout}, {"step", step}, {"tactic", pick.tactic_text}};
        switch (verdict.status) {
          case CheckerVerdict::Status::complete:
            check["result"] = "complete";
            run.event("check", std::move(check));
            tactics.push_back(pick.tactic_text);
            run.result.proof = std::move(tactics);
            return run.finish(SearchOutcome::proved);
          case CheckerVerdict::Status::invalid:
            check["result"] = "invalid";
            check["message"] = verdict.message;
            run.event("check", std::move(check));
            run.event("abandon", {{"rollout", rollout}, {"reason", "invalid"}});
            break;
          case CheckerVerdict::Status::incomplete:
            check["result"] = "incomplete";
            check["state"] = verdict.state_text;
            run.event("check", std::move(check));
            tactics.push_back(pick.tactic_text);
            token = verdict.state_token;
            state_text = verdict.state_text;
            continue;
        }
        break;  // invalid: next rollout
      }
    }
  } catch (const GeneratorError& e) {
    return run.finish(SearchOutcome::error, std::string("generator: ") + e.what());
  } catch (const CheckerError& e) {
    return run.finish(SearchOutcome::error, std::string("checker: ") + e.what());
  } catch (const RetrievalError& e) {
    return run.finish(SearchOutcome::error, std::string("retrieval: ") + e.what());
  } catch (const SearchError& e) {
    return run.finish(SearchOutcome::error, e.what());
  }
}

struct Node {
  double cum_log_prob = 0.0;
  std::vector<std::string> tactics;
  std::string state_token;
  std::string state_text;
};

// Highest cumulative log-prob first; ties prefer the shorter script, then the
// lexicographically smaller one, so expansion order is total and stable.
struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.cum_log_prob != b.cum_log_prob) return a.cum_log_prob > b.cum_log_prob;
    if (a.tactics.size() != b.tactics.size()) return a.tactics.size() < b.tactics.size();
    return a.tactics < b.tactics;
  }
};

SearchResult best_first_impl(const TheoremRecord& theorem, const SearchContext& ctx,
                             const SearchConfig& cfg) {
  Run run(cfg.timeout_s);
  run.event("search_start", start_payload(theorem, cfg));
  if (ctx.checker == nullptr || ctx.generator == nullptr)
    return run.finish(SearchOutcome::error, "search context lacks a checker or generator");

  StepPrompter prompter(theorem, ctx);
  FrozenRetrieval frozen;
  GeneratorConfig gen_cfg = cfg.generator;
  gen_cfg.n_samples = cfg.b;

  try {
    CheckerVerdict opening = ctx.checker->begin(theorem.statement);
    if (opening.status == CheckerVerdict::Status::invalid)
      return run.finish(SearchOutcome::error, "statement rejected: " + opening.message);
    if (opening.status == CheckerVerdict::Status::complete) {
      run.result.proof.emplace();
      return run.finish(SearchOutcome::proved);
    }

    std::set<Node, NodeOrder> frontier;
    std::set<std::string> visited;
    visited.insert(canonical_state(opening.state_text));
    frontier.insert(Node{0.0, {}, opening.state_token, opening.state_text});

    while (!frontier.empty()) {
      Node node = *frontier.begin();
      frontier.erase(frontier.begin());
      if (static_cast<int>(node.tactics.size()) >= cfg.max_depth) {
        run.event("prune", {{"script", node.tactics}, {"reason", "depth_limit"}});
        continue;
      }
      ++run.result.n_rollouts;
      run.event("expand", {{"script", node.tactics},
                           {"cum_log_prob", node.cum_log_prob},
                           {"state", node.state_text}});

      if (run.timed_out()) return run.finish(SearchOutcome::timeout);
      Prompt prompt = prompter.build(cfg.retrieval_mode, node.tactics,
                                     ProofState{node.state_text,
                                                static_cast<int>(node.tactics.size())},
                                     &frozen);
      run.event("prompt", {{"script", node.tactics},
                           {"kind", prompt.kind == Prompt::Kind::prefix ? "prefix"
                                                                        : "retrieval"},
                           {"text", prompt.rendered}});
      ++run.result.n_generator_calls;
      std::vector<TacticSuggestion> suggestions;
      try {
        suggestions = cfg.strategy == SearchStrategy::best_first_temp
                          ? sample_tactics(*ctx.generator, prompt, gen_cfg)
                          : beam_tactics(*ctx.generator, prompt, cfg.b, gen_cfg);
      } catch (const GeneratorError& e) {
        run.event("abandon", {{"script", node.tactics},
                              {"reason", "generator_error"},
                              {"message", e.what()}});
        continue;
      }

      for (const TacticSuggestion& s : suggestions) {
        if (run.timed_out()) return run.finish(SearchOutcome::timeout);
        CheckerVerdict verdict = ctx.checker->apply(node.state_token, s.tactic_text);
        json child{{"script", node.tactics},
                   {"tactic", s.tactic_text},
                   {"log_prob", s.log_prob}};
        switch (verdict.status) {
          case CheckerVerdict::Status::complete: {
            child["action"] = "proof";
            run.event("child", std::move(child));
            std::vector<std::string> proof = node.tactics;
            proof.push_back(s.tactic_text);
            run.result.proof = std::move(proof);
            return run.finish(SearchOutcome::proved);
          }
          case CheckerVerdict::Status::invalid:
            child["action"] = "invalid";
            child["message"] = verdict.message;
            run.event("child", std::move(child));
            continue;
          case CheckerVerdict::Status::incomplete: {
            std::string canon = canonical_state(verdict.state_text);
            if (!visited.insert(canon).second) {
              child["action"] = "redundant";
              run.event("child", std::move(child));
              continue;
            }
            child["action"] = "enqueue";
            child["state"] = verdict.state_text;
            run.event("child", std::move(child));
            Node next;
            next.cum_log_prob = node.cum_log_prob + s.log_prob;
            next.tactics = node.tactics;
            next.tactics.push_back(s.tactic_text);
            next.state_token = verdict.state_token;
            next.state_text = verdict.state_text;
            frontier.insert(std::move(next));
            continue;
          }
        }
      }
    }
    return run.finish(SearchOutcome::exhausted);
  } catch (const GeneratorError& e) {
    return run.finish(SearchOutcome::error, std::string("generator: ") + e.what());
  } catch (const CheckerError& e) {
    return run.finish(SearchOutcome::error, std::string("checker: ") + e.what());
  } catch (const RetrievalError& e) {
    return run.finish(SearchOutcome::error, std::string("retrieval: ") + e.what());
  } catch (const SearchError& e) {
    return run.finish(SearchOutcome::error, e.what());
  }
}

}  // namespace

SearchStrategy strategy_from_name(const std::string& name) {
  if (name == "rollout") return SearchStrategy::rollout;
  if (name == "best-first-beam") return SearchStrategy::best_first_beam;
  if (name == "best-first-temp") return SearchStrategy::best_first_temp;
  if (name == "rollout-pre") return SearchStrategy::rollout_pre;
  if (name == "hybrid") return SearchStrategy::hybrid;
  throw SearchError("unknown search strategy: " + name);
}

std::string strategy_name(SearchStrategy s) {
  switch (s) {
    case SearchStrategy::rollout: return "rollout";
    case SearchStrategy::best_first_beam: return "best-first-beam";
    case SearchStrategy::best_first_temp: return "best-first-temp";
    case SearchStrategy::rollout_pre: return "rollout-pre";
    case SearchStrategy::hybrid: return "hybrid";
  }
  return "rollout";
}

RetrievalMode retrieval_mode_from_name(const std::string& name) {
  if (name == "every-step") return RetrievalMode::every_step;
  if (name == "first-step") return RetrievalMode::first_step_only;
  if (name == "none") return RetrievalMode::none;
  if (name == "prefix") return RetrievalMode::prefix;
  throw SearchError("unknown retrieval mode: " + name);
}

std::string retrieval_mode_name(RetrievalMode m) {
  switch (m) {
    case RetrievalMode::every_step: return "every-step";
    case RetrievalMode::first_step_only: return "first-step";
    case RetrievalMode::none: return "none";
    case RetrievalMode::prefix: return "prefix";
  }
  return "every-step";
}

std::string outcome_name(SearchOutcome o) {
  switch (o) {
    case SearchOutcome::proved: return "proved";
    case SearchOutcome::exhausted: return "exhausted";
    case SearchOutcome::timeout: return "timeout";
    case SearchOutcome::error: return "error";
  }
  return "error";
}

Prompt step_context(const TheoremRecord& theorem, const std::vector<std::string>& tactics_so_far,
                    const ProofState& state, const SearchContext& ctx, RetrievalMode mode,
                    FrozenRetrieval* frozen) {
  StepPrompter prompter(theorem, ctx);
  return prompter.build(mode, tactics_so_far, state, frozen);
}

void Transcript::write_jsonl(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SearchError("cannot write transcript: " + path);
  for (const TranscriptEvent& e : events) {
    nlohmann::json line = e.payload;
    line["ts"] = e.ts;
    line["kind"] = e.kind;
    out << line.dump() << "\n";
  }
}

SearchResult rollout_search(const TheoremRecord& theorem, const SearchContext& ctx,
                            const SearchConfig& cfg) {
  return rollout_impl(theorem, ctx, cfg);
}

SearchResult best_first_search(const TheoremRecord& theorem, const SearchContext& ctx,
                               const SearchConfig& cfg) {
  return best_first_impl(theorem, ctx, cfg);
}

SearchResult hybrid_search(const TheoremRecord& theorem, const SearchContext& ctx,
                           const SearchConfig& cfg) {
  return rollout_impl(theorem, ctx, cfg);
}

SearchResult run_search(const TheoremRecord& theorem, const SearchContext& ctx,
                        const SearchConfig& cfg) {
  switch (cfg.strategy) {
    case SearchStrategy::rollout:
    case SearchStrategy::rollout_pre:
      return rollout_search(theorem, ctx, cfg);
    case SearchStrategy::hybrid:
      return hybrid_search(theorem, ctx, cfg);
    case SearchStrategy::best_first_beam:
    case SearchStrategy::best_first_temp:
      return best_first_search(theorem, ctx, cfg);
  }
  return rollout_search(theorem, ctx, cfg);
}

}  // namespace rap
