#include "rap/generation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "rap/corpus.hpp"

using nlohmann::json;

namespace rap {
namespace {

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}

// Index of the first tactic terminator: a '.' outside strings and (nested)
// comments that is not flanked by identifier characters on both sides.
std::optional<std::size_t> find_terminator(std::string_view text) {
  bool in_string = false;
  int comment_depth = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (c == '"') in_string = false;
      continue;
    }
    if (comment_depth > 0) {
      if (c == '(' && i + 1 < text.size() && text[i + 1] == '*') {
        ++comment_depth;
        ++i;
      } else if (c == '*' && i + 1 < text.size() && text[i + 1] == ')') {
        --comment_depth;
        ++i;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
      continue;
    }
    if (c == '(' && i + 1 < text.size() && text[i + 1] == '*') {
      comment_depth = 1;
      ++i;
      continue;
    }
    if (c == '.') {
      bool prev_ident = i > 0 && is_ident_char(text[i - 1]);
      bool next_ident = i + 1 < text.size() && is_ident_char(text[i + 1]);
      if (prev_ident && next_ident) continue;  // qualified name or numeral
      return i;
    }
  }
  return std::nullopt;
}

std::string trim_leading(std::string_view s) {
  std::size_t b = 0;
  while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  return std::string(s.substr(b));
}

// Shared post-processing: keep one tactic per completion, drop the rest,
// deduplicate by text keeping the best score.
std::vector<TacticSuggestion> to_suggestions(const std::vector<Completion>& completions) {
  std::vector<TacticSuggestion> out;
  std::map<std::string, std::size_t> seen;
  for (const auto& c : completions) {
    std::optional<std::string> tactic = truncate_to_tactic(c.text);
    if (!tactic) continue;
    auto it = seen.find(*tactic);
    if (it != seen.end()) {
      out[it->second].log_prob = std::max(out[it->second].log_prob, c.log_prob);
    } else {
      seen[*tactic] = out.size();
      out.push_back({*tactic, c.log_prob});
    }
  }
  return out;
}

}  // namespace

std::optional<std::string> truncate_to_tactic(std::string_view raw) {
  std::optional<std::size_t> dot = find_terminator(raw);
  if (!dot) return std::nullopt;
  return trim_leading(raw.substr(0, *dot + 1));
}

std::vector<std::string> split_script(std::string_view script) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < script.size()) {
    std::optional<std::size_t> dot = find_terminator(script.substr(pos));
    if (!dot) break;
    std::string tactic = trim_leading(script.substr(pos, *dot + 1));
    if (!tactic.empty()) out.push_back(std::move(tactic));
    pos += *dot + 1;
  }
  return out;
}

std::vector<TacticSuggestion> sample_tactics(TacticGenerator& generator, const Prompt& prompt,
                                             const GeneratorConfig& cfg) {
  std::vector<Completion> completions = generator.generate(
      prompt.rendered, cfg.n_samples, cfg.temperature, cfg.max_new_tokens, DecodeMode::sample);
  return to_suggestions(completions);
}

std::vector<TacticSuggestion> beam_tactics(TacticGenerator& generator, const Prompt& prompt,
                                           int b, const GeneratorConfig& cfg) {
  std::vector<Completion> completions =
      generator.generate(prompt.rendered, b, cfg.temperature, cfg.max_new_tokens, DecodeMode::beam);
  std::vector<TacticSuggestion> out = to_suggestions(completions);
  std::sort(out.begin(), out.end(), [](const TacticSuggestion& x, const TacticSuggestion& y) {
    if (x.log_prob != y.log_prob) return x.log_prob > y.log_prob;
    return x.tactic_text < y.tactic_text;
  });
  if (out.size() > static_cast<std::size_t>(b)) out.resize(b);
  return out;
}

HttpTacticGenerator::HttpTacticGenerator(std::string base_url, double timeout_s)
    : base_url_(std::move(base_url)), timeout_s_(timeout_s) {}

std::vector<Completion> HttpTacticGenerator::generate(const std::string& prompt, int n,
                                                      double temperature, int max_new_tokens,
                                                      DecodeMode mode) {
  json body = {{"prompt", prompt},
               {"n", n},
               {"temperature", temperature},
               {"max_new_tokens", max_new_tokens},
               {"mode", mode == DecodeMode::beam ? "beam" : "sample"}};
  std::string payload = body.dump();

  httplib::Result res;
  for (int attempt = 0; attempt < 2; ++attempt) {  // one retry on transport failure
    httplib::Client client(base_url_);
    client.set_connection_timeout(std::chrono::duration<double>(timeout_s_));
    client.set_read_timeout(std::chrono::duration<double>(timeout_s_));
    res = client.Post("/generate", payload, "application/json");
    if (res) break;
  }
  if (!res) throw GeneratorError("generator unreachable at " + base_url_);
  if (res->status != 200)
    throw GeneratorError("generator returned status " + std::to_string(res->status));

  json reply;
  try {
    reply = json::parse(res->body);
  } catch (const json::exception& e) {
    throw GeneratorError(std::string("generator sent malformed JSON: ") + e.what());
  }
  if (!reply.contains("completions") || !reply.at("completions").is_array())
    throw GeneratorError("generator reply lacks 'completions'");
  std::vector<Completion> out;
  for (const auto& cj : reply.at("completions")) {
    if (!cj.contains("text") || !cj.contains("log_prob"))
      throw GeneratorError("generator completion lacks 'text' or 'log_prob'");
    out.push_back({cj.at("text").get<std::string>(), cj.at("log_prob").get<double>()});
  }
  return out;
}

std::optional<std::string> prompt_section(const std::string& rendered, std::string_view header) {
  static const std::string_view kHeaders[] = {kProofsHeader,  kLemmasHeader, kFilePrefixHeader,
                                              kTheoremHeader, kStateHeader,  kNextTacticHeader};
  std::string needle = std::string(header) + "\n";
  std::size_t at = rendered.find(needle);
  while (at != std::string::npos && at != 0 && rendered[at - 1] != '\n')
    at = rendered.find(needle, at + 1);
  if (at == std::string::npos) return std::nullopt;
  std::size_t start = at + needle.size();
  std::size_t end = rendered.size();
  for (std::string_view h : kHeaders) {
    std::string next = "\n" + std::string(h) + "\n";
    std::size_t p = rendered.find(next, start > 0 ? start - 1 : 0);
    if (p != std::string::npos && p + 1 >= start) end = std::min(end, p);
  }
  return rendered.substr(start, end - start);
}

MockTacticGenerator::Mode MockTacticGenerator::mode_from_name(const std::string& name) {
  if (name == "table") return Mode::table;
  if (name == "hint") return Mode::hint;
  if (name == "replay") return Mode::replay;
  throw GeneratorError("unknown mock mode '" + name + "'");
}

MockTacticGenerator::MockTacticGenerator(const std::string& script_path, Mode mode,
                                         std::uint64_t seed)
    : mode_(mode), rng_(seed) {
  if (mode_ == Mode::table) {
    std::ifstream in(script_path);
    if (!in) throw GeneratorError("cannot open mock table " + script_path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw GeneratorError("mock table " + script_path + ": " + e.what());
    }
    for (const auto& [fingerprint, entries] : j.items()) {
      std::vector<Completion> options;
      for (const auto& ej : entries)
        options.push_back(
            {ej.at("tactic").get<std::string>(), ej.at("log_prob").get<double>()});
      table_[fingerprint] = std::move(options);
    }
    return;
  }
  // hint and replay know the fixture proofs, incomplete ones included.
  Corpus corpus = load_corpus(script_path);
  for (const auto& t : corpus.theorems) {
    auto proof = std::make_unique<KnownProof>();
    proof->statement = t.statement;
    for (const auto& s : t.steps) {
      proof->steps.push_back({s.state_before.text, s.tactic_text});
      proof->script.push_back(s.tactic_text);
    }
    by_statement_[t.statement].push_back(proof.get());
    proofs_.push_back(std::move(proof));
  }
}

std::vector<Completion> MockTacticGenerator::generate(const std::string& prompt, int n,
                                                      double temperature, int max_new_tokens,
                                                      DecodeMode mode) {
  (void)max_new_tokens;
  switch (mode_) {
    case Mode::table: return lookup_table(prompt, n, temperature, mode);
    case Mode::hint: return lookup_hint(prompt);
    case Mode::replay: return lookup_replay(prompt);
  }
  return {};
}

std::vector<Completion> MockTacticGenerator::lookup_table(const std::string& prompt, int n,
                                                          double temperature, DecodeMode mode) {
  std::optional<std::string> state = prompt_section(prompt, kStateHeader);
  if (!state) return {};
  std::string fingerprint = state->substr(0, 64);
  auto it = table_.find(fingerprint);
  if (it == table_.end()) return {};
  std::vector<Completion> options = it->second;

  if (mode == DecodeMode::beam) {
    std::sort(options.begin(), options.end(), [](const Completion& a, const Completion& b) {
      if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
      return a.text < b.text;
    });
    if (options.size() > static_cast<std::size_t>(n)) options.resize(n);
    return options;
  }

  // Hand-rolled categorical draw over exp(log_prob / temperature): the
  // mt19937_64 stream is portable, so transcripts replay bit-for-bit.
  double temp = temperature > 0.0 ? temperature : 1.0;
  std::vector<double> weights;
  weights.reserve(options.size());
  double total = 0.0;
  for (const auto& o : options) {
    weights.push_back(std::exp(o.log_prob / temp));
    total += weights.back();
  }
  std::vector<Completion> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    double u = std::ldexp(static_cast<double>(rng_()), -64) * total;
    std::size_t pick = 0;
    for (double acc = 0.0; pick + 1 < weights.size(); ++pick) {
      acc += weights[pick];
      if (u < acc) break;
    }
    out.push_back(options[pick]);
  }
  return out;
}

std::vector<Completion> MockTacticGenerator::lookup_hint(const std::string& prompt) {
  std::optional<std::string> state = prompt_section(prompt, kStateHeader);
  if (!state) return {};
  constexpr double kHintLogProb = -0.25;

  std::optional<std::string> proofs = prompt_section(prompt, kProofsHeader);
  if (proofs) {
    // Items are blank-line separated and most relevant last; scan backwards.
    std::vector<std::string> items;
    std::size_t pos = 0;
    while (pos <= proofs->size()) {
      std::size_t next = proofs->find("\n\n", pos);
      if (next == std::string::npos) {
        items.push_back(proofs->substr(pos));
        break;
      }
      items.push_back(proofs->substr(pos, next - pos));
      pos = next + 2;
    }
    for (auto it = items.rbegin(); it != items.rend(); ++it) {
      const std::size_t nl = it->find('\n');
      const std::string statement = it->substr(0, nl);
      const std::string script_line = nl == std::string::npos ? "" : it->substr(nl + 1);
      auto known = by_statement_.find(statement);
      if (known == by_statement_.end()) continue;
      for (const KnownProof* proof : known->second) {
        // One statement can label several known proofs; the item's script
        // line pins down which proof is actually on display.
        std::string joined;
        for (const std::string& t : proof->script) {
          if (!joined.empty()) joined += ' ';
          joined += t;
        }
        if (joined != script_line) continue;
        for (const auto& step : proof->steps)
          if (step.state_text == *state) return {{step.tactic_text, kHintLogProb}};
      }
    }
  } else if (std::optional<std::string> prefix = prompt_section(prompt, kFilePrefixHeader)) {
    for (const auto& [statement, known_proofs] : by_statement_) {
      if (prefix->find(statement) == std::string::npos) continue;
      for (const KnownProof* proof : known_proofs)
        for (const auto& step : proof->steps)
          if (step.state_text == *state) return {{step.tactic_text, kHintLogProb}};
    }
  }
  return {{"fail.", -9.0}};
}

std::vector<Completion> MockTacticGenerator::lookup_replay(const std::string& prompt) {
  std::optional<std::string> section = prompt_section(prompt, kTheoremHeader);
  if (!section) return {};
  std::size_t nl = section->find('\n');
  std::string statement = section->substr(0, nl);
  auto known = by_statement_.find(statement);
  if (known == by_statement_.end()) return {};
  std::size_t done = nl == std::string::npos ? 0 : split_script(section->substr(nl + 1)).size();
  for (const KnownProof* proof : known->second) {
    if (done < proof->script.size()) return {{proof->script[done], -0.25}};
  }
  return {};
}

}  // namespace rap
