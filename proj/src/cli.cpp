#include "rap/cli.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "rap/checker.hpp"
#include "rap/eval.hpp"
#include "rap/generation.hpp"
#include "rap/search.hpp"

namespace rap {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::unique_ptr<TacticGenerator> make_generator(const RunConfig& cfg, std::uint64_t seed) {
  if (cfg.generator == "http") {
    if (cfg.model_url.empty())
      throw GeneratorError("generator http needs --model-url or RAP_MODEL_URL");
    return std::make_unique<HttpTacticGenerator>(cfg.model_url);
  }
  if (cfg.generator == "mock") {
    if (cfg.mock_script.empty()) throw GeneratorError("generator mock needs --mock-script");
    return std::make_unique<MockTacticGenerator>(
        cfg.mock_script, MockTacticGenerator::mode_from_name(cfg.mock_mode), seed);
  }
  throw GeneratorError("unknown generator kind: " + cfg.generator);
}

std::unique_ptr<ProofChecker> make_checker(const RunConfig& cfg) {
  if (cfg.checker == "kernel") return std::make_unique<KernelChecker>();
  if (cfg.checker == "external") {
    if (cfg.checker_command.empty())
      throw CheckerError("checker external needs --checker-command");
    return std::make_unique<ExternalChecker>(cfg.checker_command);
  }
  throw CheckerError("unknown checker kind: " + cfg.checker);
}

SearchConfig make_search_config(const RunConfig& cfg, std::uint64_t seed) {
  SearchConfig sc;
  sc.strategy = strategy_from_name(cfg.strategy);
  sc.retrieval_mode = retrieval_mode_from_name(cfg.retrieval);
  sc.timeout_s = cfg.timeout_s;
  sc.max_depth = cfg.max_depth;
  sc.b = cfg.b;
  sc.seed = seed;
  sc.rollout_budget = cfg.rollout_budget;
  sc.generator.n_samples = cfg.n_samples;
  sc.generator.temperature = cfg.temperature;
  sc.generator.max_new_tokens = cfg.max_new_tokens;
  return sc;
}

TokenBudget make_budget(const RunConfig& cfg) {
  return TokenBudget{cfg.budget_proofs, cfg.budget_lemmas, cfg.budget_theorem, cfg.budget_state,
                     cfg.budget_output};
}

// The one place proofs are accepted: re-check every returned proof before
// reporting it, so a search bug can never claim a phantom success.
bool recheck_proof(const TheoremRecord& theorem, const std::vector<std::string>& proof) {
  try {
    return check_script(parse_goal(theorem.statement), proof).status ==
           CheckResult::Status::complete;
  } catch (const ParseError&) {
    return false;
  }
}

struct ProveStats {
  std::atomic<int> proved{0};
  std::atomic<bool> infra_error{false};
  std::mutex print_mutex;
};

void prove_one(const RunConfig& cfg, const Corpus& corpus, const TokenCounter& counter,
               const TheoremRecord& theorem, ProveStats& stats) {
  const std::string id = theorem_id_of(theorem);
  const std::string base = (fs::path(cfg.out_dir) / sanitize_filename(id)).string();
  const std::uint64_t seed = theorem_seed(cfg.seed, id);
  try {
    std::unique_ptr<TacticGenerator> generator = make_generator(cfg, seed);
    std::unique_ptr<ProofChecker> checker = make_checker(cfg);
    std::unique_ptr<HttpEmbeddingAdapter> adapter;
    SearchContext ctx;
    ctx.corpus = &corpus;
    ctx.checker = checker.get();
    ctx.generator = generator.get();
    ctx.retrieval.proof_scorer = scorer_from_name(cfg.proof_scorer);
    ctx.retrieval.lemma_scorer = scorer_from_name(cfg.lemma_scorer);
    ctx.retrieval.k_proofs = cfg.k_proofs;
    ctx.retrieval.j_lemmas = cfg.j_lemmas;
    ctx.retrieval.dense_fallback_bm25 = cfg.dense_fallback;
    if (!cfg.dense_url.empty()) {
      adapter = std::make_unique<HttpEmbeddingAdapter>(cfg.dense_url);
      ctx.retrieval.adapter = adapter.get();
    }
    ctx.budget = make_budget(cfg);
    ctx.counter = &counter;

    SearchResult result = run_search(theorem, ctx, make_search_config(cfg, seed));
    result.transcript.write_jsonl(base + ".transcript.jsonl");

    if (result.outcome == SearchOutcome::proved && cfg.checker == "kernel" &&
        !recheck_proof(theorem, *result.proof)) {
      result.outcome = SearchOutcome::error;
      result.error_message = "returned proof failed re-checking";
      result.proof.reset();
    }

    std::vector<std::string> human;
    for (const ProofStep& step : theorem.steps) human.push_back(step.tactic_text);
    const std::vector<std::string>* generated =
        result.outcome == SearchOutcome::proved ? &*result.proof : nullptr;
    write_record(make_eval_record(id, human, generated, result.wall_time_s),
                 base + ".record.json");

    std::lock_guard<std::mutex> lock(stats.print_mutex);
    if (result.outcome == SearchOutcome::proved) {
      ++stats.proved;
      std::cout << "[proved] " << id << " tactics=" << result.proof->size()
                << " rollouts=" << result.n_rollouts << "\n";
    } else if (result.outcome == SearchOutcome::error) {
      stats.infra_error = true;
      std::cout << "[error] " << id << " " << result.error_message << "\n";
    } else {
      std::cout << "[failed] " << id << " outcome=" << outcome_name(result.outcome) << "\n";
    }
  } catch (const std::exception& e) {
    stats.infra_error = true;
    std::lock_guard<std::mutex> lock(stats.print_mutex);
    std::cout << "[error] " << id << " " << e.what() << "\n";
  }
}

}  // namespace

nlohmann::json run_config_json(const RunConfig& cfg) {
  return json{{"corpus", cfg.corpus_path},
              {"out", cfg.out_dir},
              {"generator", cfg.generator},
              {"model_url", cfg.model_url},
              {"mock_script", cfg.mock_script},
              {"mock_mode", cfg.mock_mode},
              {"checker", cfg.checker},
              {"checker_command", cfg.checker_command},
              {"strategy", cfg.strategy},
              {"retrieval", cfg.retrieval},
              {"proof_scorer", cfg.proof_scorer},
              {"lemma_scorer", cfg.lemma_scorer},
              {"k_proofs", cfg.k_proofs},
              {"j_lemmas", cfg.j_lemmas},
              {"timeout_s", cfg.timeout_s},
              {"max_depth", cfg.max_depth},
              {"b", cfg.b},
              {"seed", cfg.seed},
              {"rollout_budget", cfg.rollout_budget},
              {"n_samples", cfg.n_samples},
              {"temperature", cfg.temperature},
              {"max_new_tokens", cfg.max_new_tokens},
              {"budget_proofs", cfg.budget_proofs},
              {"budget_lemmas", cfg.budget_lemmas},
              {"budget_theorem", cfg.budget_theorem},
              {"budget_state", cfg.budget_state},
              {"budget_output", cfg.budget_output},
              {"token_counter", cfg.token_counter},
              {"dense_url", cfg.dense_url},
              {"dense_fallback", cfg.dense_fallback},
              {"filter", cfg.filter},
              {"jobs", cfg.jobs}};
}

std::string theorem_id_of(const TheoremRecord& theorem) {
  return theorem.position.project + ":" + theorem.position.path + ":" +
         std::to_string(theorem.position.offset_in_file);
}

std::string sanitize_filename(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '.' || c == '_' || c == '-';
    if (!ok) c = '_';
  }
  return out;
}

std::uint64_t theorem_seed(std::uint64_t base_seed, const std::string& theorem_id) {
  std::uint64_t hash = 14695981039346656037ULL;  // FNV-1a
  for (unsigned char c : theorem_id) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return base_seed ^ hash;
}

int cmd_index(const std::string& corpus_path, const std::string& out_dir) {
  try {
    Corpus corpus = load_corpus(corpus_path);

    std::vector<std::string> proof_docs;
    for (const TheoremRecord& t : corpus.theorems) {
      if (t.steps.empty()) proof_docs.push_back(t.statement);
      for (const ProofStep& s : t.steps) proof_docs.push_back(s.state_before.text);
    }
    std::vector<std::string> lemma_docs;
    for (const LemmaStatement& l : corpus.lemmas) lemma_docs.push_back(l.statement_text);
    const SparseIndex proof_index = build_index(proof_docs);
    const SparseIndex lemma_index = build_index(lemma_docs);

    fs::create_directories(out_dir);
    json cache{{"schema_version", 1},
               {"files", corpus.files.size()},
               {"theorems", corpus.theorems.size()},
               {"lemmas", corpus.lemmas.size()},
               {"steps", corpus.total_steps()},
               {"proof_index",
                {{"n_docs", proof_index.n_docs},
                 {"avg_doc_length", proof_index.avg_doc_length},
                 {"vocabulary", proof_index.doc_freq.size()}}},
               {"lemma_index",
                {{"n_docs", lemma_index.n_docs},
                 {"avg_doc_length", lemma_index.avg_doc_length},
                 {"vocabulary", lemma_index.doc_freq.size()}}}};
    std::ofstream out(fs::path(out_dir) / "index_cache.json",
                      std::ios::binary | std::ios::trunc);
    if (!out) throw CorpusError("cannot write index cache under " + out_dir);
    out << cache.dump(2) << "\n";

    std::cout << "files=" << corpus.files.size() << " theorems=" << corpus.theorems.size()
              << " lemmas=" << corpus.lemmas.size() << " steps=" << corpus.total_steps() << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "index: " << e.what() << "\n";
    return 1;
  }
}

int cmd_prove(const RunConfig& cfg) {
  Corpus corpus;
  try {
    corpus = load_corpus(cfg.corpus_path);
  } catch (const std::exception& e) {
    std::cerr << "prove: " << e.what() << "\n";
    return 1;
  }

  std::unique_ptr<TokenCounter> counter;
  try {
    counter = make_token_counter(cfg.token_counter);
    // Fail fast on configuration the workers would hit per theorem anyway;
    // for an http generator that includes one live round-trip, so a dead
    // server is an immediate infrastructure error, not a slow timeout.
    make_search_config(cfg, cfg.seed);
    scorer_from_name(cfg.proof_scorer);
    scorer_from_name(cfg.lemma_scorer);
    std::unique_ptr<TacticGenerator> preflight = make_generator(cfg, cfg.seed);
    if (cfg.generator == "http") preflight->generate("ping", 1, 1.0, 1, DecodeMode::sample);
    fs::create_directories(cfg.out_dir);
    std::ofstream echo(fs::path(cfg.out_dir) / "run_config.json",
                       std::ios::binary | std::ios::trunc);
    echo << run_config_json(cfg).dump(2) << "\n";
  } catch (const std::exception& e) {
    std::cerr << "prove: " << e.what() << "\n";
    return 1;
  }

  std::vector<const TheoremRecord*> targets;
  for (const TheoremRecord& t : corpus.theorems) {
    if (!t.is_proof_complete) continue;  // nothing to replay or score against
    if (!cfg.filter.empty() && theorem_id_of(t).find(cfg.filter) == std::string::npos) continue;
    targets.push_back(&t);
  }

  ProveStats stats;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= targets.size()) return;
      prove_one(cfg, corpus, *counter, *targets[i], stats);
    }
  };
  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  std::cout << "proved " << stats.proved.load() << "/" << targets.size() << "\n";
  return stats.infra_error.load() ? 1 : 0;
}

int cmd_eval(const std::string& dir_a, const std::string& dir_b, const std::string& out_dir) {
  try {
    const std::vector<EvalRecord> records_a = load_records(dir_a);
    const Report report = summarize(records_a, kDefaultBucketEdges);
    const std::string out = out_dir.empty() ? dir_a : out_dir;
    write_report_files(report, out);
    std::cout << "theorems=" << report.n_theorems << " proved=" << report.n_proved
              << " rate=" << json(report.prove_rate).dump() << "\n";

    if (!dir_b.empty()) {
      const std::vector<EvalRecord> records_b = load_records(dir_b);
      const DiffReport diff = diff_tools(records_a, records_b);
      std::ofstream combined(fs::path(out) / "combined.json",
                             std::ios::binary | std::ios::trunc);
      if (!combined) throw EvalError("cannot write combined.json under " + out);
      combined << diff_to_json(diff).dump(2) << "\n";
      std::cout << "union=" << diff.union_proved << " a_only=" << diff.a_only
                << " b_only=" << diff.b_only << " both=" << diff.both << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "eval: " << e.what() << "\n";
    return 1;
  }
}

namespace {

// CLI11 only reads config files attached to the root app, so the prove config
// is expanded by hand instead: every top-level `key = value` becomes a
// synthetic `--key=value` argument placed before the real command line. With
// take-last options, "flags override file values" then falls out of argument
// order.
std::vector<std::string> expand_config_args(int argc, const char* const* argv) {
  std::string path;
  for (int i = 2; i < argc; ++i) {
    const std::string_view arg = argv[i];
    if (arg == "--config" && i + 1 < argc)
      path = argv[i + 1];
    else if (arg.rfind("--config=", 0) == 0)
      path = std::string(arg.substr(9));
  }
  std::vector<std::string> args(argv, argv + argc);
  if (path.empty()) return args;

  std::vector<std::string> rebuilt{args[0], args[1]};
  for (const CLI::ConfigItem& item : CLI::ConfigTOML().from_file(path)) {
    if (!item.parents.empty())
      throw std::runtime_error("config key '" + item.fullname() +
                               "': sections are not supported");
    if (item.name == "config") throw std::runtime_error("config files cannot set 'config'");
    if (item.inputs.size() != 1)
      throw std::runtime_error("config key '" + item.name + "' needs exactly one value");
    rebuilt.push_back("--" + item.name + "=" + item.inputs.front());
  }
  rebuilt.insert(rebuilt.end(), args.begin() + 2, args.end());
  return rebuilt;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"retrieval-augmented proof search"};
  app.require_subcommand(1);

  std::string index_corpus;
  std::string index_out = "out";
  CLI::App* index = app.add_subcommand("index", "load a corpus and build retrieval indices");
  index->add_option("corpus", index_corpus, "corpus directory")->required();
  index->add_option("--out", index_out, "output directory for the index cache");

  RunConfig cfg;
  std::string config_path;
  CLI::App* prove = app.add_subcommand("prove", "search for proofs over a corpus");
  prove->add_option("--config", config_path,
                    "TOML run configuration; flags override file values");
  prove->add_option("--corpus", cfg.corpus_path, "corpus directory");
  prove->add_option("--out", cfg.out_dir, "output directory for transcripts and records");
  prove->add_option("--generator", cfg.generator, "tactic generator kind")
      ->check(CLI::IsMember({"http", "mock"}));
  prove->add_option("--model-url", cfg.model_url, "generation server base URL");
  prove->add_option("--mock-script", cfg.mock_script, "mock generator data path");
  prove->add_option("--mock-mode", cfg.mock_mode, "mock generator behavior")
      ->check(CLI::IsMember({"table", "hint", "replay"}));
  prove->add_option("--checker", cfg.checker, "proof checker kind")
      ->check(CLI::IsMember({"kernel", "external"}));
  prove->add_option("--checker-command", cfg.checker_command, "external checker command line");
  prove->add_option("--strategy", cfg.strategy, "search strategy")
      ->check(CLI::IsMember({"rollout", "best-first-beam", "best-first-temp", "rollout-pre",
                             "hybrid"}));
  prove->add_option("--retrieval", cfg.retrieval, "retrieval mode")
      ->check(CLI::IsMember({"every-step", "first-step", "none", "prefix"}));
  prove->add_option("--scorer", cfg.proof_scorer, "proof retrieval scorer")
      ->check(CLI::IsMember({"bm25", "tfidf", "dense"}));
  prove->add_option("--lemma-scorer", cfg.lemma_scorer, "lemma retrieval scorer")
      ->check(CLI::IsMember({"bm25", "tfidf", "dense"}));
  prove->add_option("--k-proofs", cfg.k_proofs, "max retrieved proofs per step");
  prove->add_option("--j-lemmas", cfg.j_lemmas, "max retrieved lemmas per step");
  prove->add_option("--timeout-s", cfg.timeout_s, "per-theorem wall-clock timeout");
  prove->add_option("--max-depth", cfg.max_depth, "max tactics per rollout or candidate");
  prove->add_option("--b", cfg.b, "best-first branching factor");
  prove->add_option("--seed", cfg.seed, "base random seed");
  prove->add_option("--rollout-budget", cfg.rollout_budget, "max rollouts, 0 = unlimited");
  prove->add_option("--n-samples", cfg.n_samples, "completions per generator call");
  prove->add_option("--temperature", cfg.temperature, "sampling temperature");
  prove->add_option("--max-new-tokens", cfg.max_new_tokens, "generation length cap");
  prove->add_option("--budget-proofs", cfg.budget_proofs, "prompt tokens for proofs");
  prove->add_option("--budget-lemmas", cfg.budget_lemmas, "prompt tokens for lemmas");
  prove->add_option("--budget-theorem", cfg.budget_theorem, "prompt tokens for the script");
  prove->add_option("--budget-state", cfg.budget_state, "prompt tokens for the state");
  prove->add_option("--budget-output", cfg.budget_output, "output token allowance");
  prove->add_option("--token-counter", cfg.token_counter, "token counter name");
  prove->add_option("--dense-url", cfg.dense_url, "embedding server base URL");
  prove->add_flag("--dense-fallback", cfg.dense_fallback,
                  "fall back to bm25 when the embedding server fails");
  prove->add_option("--filter", cfg.filter, "only theorems whose id contains this substring");
  prove->add_option("--jobs", cfg.jobs, "concurrent theorem searches");
  // Later occurrences win, so synthetic config arguments yield to user flags.
  for (CLI::Option* opt : prove->get_options())
    opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::string eval_a;
  std::string eval_b;
  std::string eval_out;
  CLI::App* eval = app.add_subcommand("eval", "aggregate prove results into reports");
  eval->add_option("results", eval_a, "directory of .record.json files")->required();
  eval->add_option("results_b", eval_b, "second results directory for combined counts");
  eval->add_option("--out", eval_out, "report output directory (default: results dir)");

  std::vector<std::string> args;
  try {
    args = (argc >= 2 && std::string_view(argv[1]) == "prove")
               ? expand_config_args(argc, argv)
               : std::vector<std::string>(argv, argv + argc);
  } catch (const std::exception& e) {
    std::cerr << "prove: " << e.what() << "\n";
    return 1;
  }
  std::vector<const char*> arg_ptrs;
  arg_ptrs.reserve(args.size());
  for (const std::string& a : args) arg_ptrs.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(arg_ptrs.size()), arg_ptrs.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (index->parsed()) return cmd_index(index_corpus, index_out);
  if (prove->parsed()) {
    // Model URL precedence: --model-url flag, then RAP_MODEL_URL, then config.
    bool url_flag = false;
    for (int i = 0; i < argc; ++i) {
      const std::string_view arg = argv[i];
      if (arg == "--model-url" || arg.rfind("--model-url=", 0) == 0) url_flag = true;
    }
    if (!url_flag) {
      if (const char* env = std::getenv("RAP_MODEL_URL"); env != nullptr && *env != '\0')
        cfg.model_url = env;
    }
    return cmd_prove(cfg);
  }
  if (eval->parsed()) return cmd_eval(eval_a, eval_b, eval_out);
  std::cerr << "no subcommand\n";
  return 1;
}

}  // namespace rap
