#include "rap/retrieval.hpp"

#include <cctype>
#include <cmath>

#include <httplib.h>
#include <json.hpp>

using nlohmann::json;

namespace rap {
namespace {

constexpr double kBm25K1 = 1.2;
constexpr double kBm25B = 0.75;

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_cont(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}

double dot_self(const std::map<std::string, double>& v) {
  double s = 0.0;
  for (const auto& [t, w] : v) s += w * w;
  return s;
}

std::map<std::string, double> tfidf_weights(const TermVector& v, const SparseIndex& index) {
  std::map<std::string, double> w;
  for (const auto& [term, tf] : v.counts) {
    auto it = index.doc_freq.find(term);
    int df = it == index.doc_freq.end() ? 0 : it->second;
    w[term] = tf * (std::log((1.0 + index.n_docs) / (1.0 + df)) + 1.0);
  }
  return w;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Shared by proof_relevance/lemma_relevance: every doc belongs to one owner;
// owners are ranked by their best doc. Ties go to the owner later in the bank
// (closer to the query position); zero scores never surface.
std::vector<std::pair<int, double>> rank_owners(const std::vector<std::string>& docs,
                                                const std::vector<int>& owner_of,
                                                int n_owners, const std::string& query_text,
                                                int limit, Scorer scorer,
                                                EmbeddingAdapter* adapter) {
  std::vector<ScoredDoc> scored;
  if (scorer == Scorer::dense) {
    if (!adapter) throw RetrievalError("dense scorer requires an embedding adapter");
    scored = dense_scores(*adapter, docs, query_text);
  } else {
    SparseIndex index = build_index(docs);
    TermVector query = tokenize(query_text);
    scored = scorer == Scorer::bm25 ? bm25_scores(index, query) : tfidf_scores(index, query);
  }

  std::vector<double> best(n_owners, 0.0);
  std::vector<bool> seen(n_owners, false);
  for (const auto& sd : scored) {
    int owner = owner_of[sd.doc];
    if (!seen[owner] || sd.score > best[owner]) {
      best[owner] = sd.score;
      seen[owner] = true;
    }
  }

  std::vector<std::pair<int, double>> ranked;
  for (int i = 0; i < n_owners; ++i)
    if (seen[i] && best[i] > 0.0) ranked.emplace_back(i, best[i]);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first > b.first;
  });
  if (limit >= 0 && ranked.size() > static_cast<std::size_t>(limit)) ranked.resize(limit);
  return ranked;
}

}  // namespace

TermVector tokenize(std::string_view text) {
  TermVector v;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_ident_start(text[i])) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < text.size() && is_ident_cont(text[i])) ++i;
    // A single '.' joining this run to another keeps the qualified name whole.
    while (i + 1 < text.size() && text[i] == '.' && is_ident_start(text[i + 1])) {
      ++i;
      while (i < text.size() && is_ident_cont(text[i])) ++i;
    }
    std::string term(text.substr(start, i - start));
    ++v.counts[term];
    ++v.length;
  }
  return v;
}

SparseIndex build_index(const std::vector<std::string>& docs) {
  SparseIndex index;
  index.n_docs = static_cast<int>(docs.size());
  double total_length = 0.0;
  for (const auto& d : docs) {
    TermVector v = tokenize(d);
    total_length += v.length;
    for (const auto& [term, tf] : v.counts) ++index.doc_freq[term];
    index.docs.push_back(std::move(v));
  }
  index.avg_doc_length = index.n_docs ? total_length / index.n_docs : 0.0;
  return index;
}

std::vector<ScoredDoc> bm25_scores(const SparseIndex& index, const TermVector& query) {
  std::vector<ScoredDoc> out;
  if (index.n_docs == 0) return out;
  out.reserve(index.docs.size());
  for (std::size_t d = 0; d < index.docs.size(); ++d) {
    const TermVector& doc = index.docs[d];
    double norm = kBm25K1 * (1.0 - kBm25B + kBm25B * doc.length / index.avg_doc_length);
    double score = 0.0;
    for (const auto& [term, qtf] : query.counts) {
      (void)qtf;  // multiplicity in the query is ignored
      auto it = doc.counts.find(term);
      if (it == doc.counts.end()) continue;
      auto df_it = index.doc_freq.find(term);
      int df = df_it == index.doc_freq.end() ? 0 : df_it->second;
      double idf = std::log(1.0 + (index.n_docs - df + 0.5) / (df + 0.5));
      double tf = it->second;
      score += idf * tf * (kBm25K1 + 1.0) / (tf + norm);
    }
    out.push_back({static_cast<int>(d), score});
  }
  return out;
}

std::vector<ScoredDoc> tfidf_scores(const SparseIndex& index, const TermVector& query) {
  std::vector<ScoredDoc> out;
  if (index.n_docs == 0) return out;
  std::map<std::string, double> qw = tfidf_weights(query, index);
  double qnorm = dot_self(qw);
  out.reserve(index.docs.size());
  for (std::size_t d = 0; d < index.docs.size(); ++d) {
    std::map<std::string, double> dw = tfidf_weights(index.docs[d], index);
    double dnorm = dot_self(dw);
    double score = 0.0;
    if (qnorm > 0.0 && dnorm > 0.0) {
      double dot = 0.0;
      for (const auto& [term, w] : qw) {
        auto it = dw.find(term);
        if (it != dw.end()) dot += w * it->second;
      }
      score = dot / (std::sqrt(qnorm) * std::sqrt(dnorm));
    }
    out.push_back({static_cast<int>(d), score});
  }
  return out;
}

HttpEmbeddingAdapter::HttpEmbeddingAdapter(std::string base_url, double timeout_s)
    : base_url_(std::move(base_url)), timeout_s_(timeout_s) {}

std::vector<std::vector<double>> HttpEmbeddingAdapter::embed(
    const std::vector<std::string>& texts) {
  httplib::Client client(base_url_);
  client.set_connection_timeout(std::chrono::duration<double>(timeout_s_));
  client.set_read_timeout(std::chrono::duration<double>(timeout_s_));
  json body = {{"texts", texts}};
  httplib::Result res = client.Post("/embed", body.dump(), "application/json");
  if (!res) throw RetrievalError("embedding adapter unreachable at " + base_url_);
  if (res->status != 200)
    throw RetrievalError("embedding adapter returned status " + std::to_string(res->status));
  json reply;
  try {
    reply = json::parse(res->body);
  } catch (const json::exception& e) {
    throw RetrievalError(std::string("embedding adapter sent malformed JSON: ") + e.what());
  }
  if (!reply.contains("vectors") || !reply.at("vectors").is_array())
    throw RetrievalError("embedding adapter reply lacks 'vectors'");
  std::vector<std::vector<double>> vectors;
  try {
    vectors = reply.at("vectors").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw RetrievalError(std::string("embedding adapter vectors malformed: ") + e.what());
  }
  if (vectors.size() != texts.size())
    throw RetrievalError("embedding adapter returned " + std::to_string(vectors.size()) +
                         " vectors for " + std::to_string(texts.size()) + " texts");
  return vectors;
}

std::vector<ScoredDoc> dense_scores(EmbeddingAdapter& adapter,
                                    const std::vector<std::string>& docs,
                                    const std::string& query) {
  if (docs.empty()) return {};
  std::vector<std::string> texts = docs;
  texts.push_back(query);
  std::vector<std::vector<double>> vectors = adapter.embed(texts);
  const std::vector<double>& qv = vectors.back();
  for (const auto& v : vectors)
    if (v.size() != qv.size())
      throw RetrievalError("embedding dimension mismatch (" + std::to_string(v.size()) + " vs " +
                           std::to_string(qv.size()) + ")");
  std::vector<ScoredDoc> out;
  out.reserve(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d)
    out.push_back({static_cast<int>(d), cosine(vectors[d], qv)});
  return out;
}

Scorer scorer_from_name(const std::string& name) {
  if (name == "bm25") return Scorer::bm25;
  if (name == "tfidf") return Scorer::tfidf;
  if (name == "dense") return Scorer::dense;
  throw RetrievalError("unknown scorer '" + name + "'");
}

std::string scorer_name(Scorer s) {
  switch (s) {
    case Scorer::bm25: return "bm25";
    case Scorer::tfidf: return "tfidf";
    case Scorer::dense: return "dense";
  }
  return "?";
}

std::vector<ScoredProof> proof_relevance(const ProofBank& bank, const ProofState& state,
                                         int k_max, Scorer scorer, EmbeddingAdapter* adapter) {
  std::vector<std::string> docs;
  std::vector<int> owner_of;
  for (std::size_t i = 0; i < bank.entries.size(); ++i) {
    const TheoremRecord* t = bank.entries[i];
    if (t->steps.empty()) {
      docs.push_back(t->statement);  // statement doubles as the only state
      owner_of.push_back(static_cast<int>(i));
    } else {
      for (const auto& s : t->steps) {
        docs.push_back(s.state_before.text);
        owner_of.push_back(static_cast<int>(i));
      }
    }
  }
  auto ranked = rank_owners(docs, owner_of, static_cast<int>(bank.entries.size()), state.text,
                            k_max, scorer, adapter);
  std::vector<ScoredProof> out;
  out.reserve(ranked.size());
  for (const auto& [owner, score] : ranked) out.push_back({bank.entries[owner], score});
  return out;
}

std::vector<ScoredLemma> lemma_relevance(const LemmaBank& bank, const ProofState& state,
                                         int j_max, Scorer scorer, EmbeddingAdapter* adapter) {
  std::vector<std::string> docs;
  std::vector<int> owner_of;
  for (std::size_t i = 0; i < bank.entries.size(); ++i) {
    docs.push_back(bank.entries[i]->statement_text);
    owner_of.push_back(static_cast<int>(i));
  }
  auto ranked = rank_owners(docs, owner_of, static_cast<int>(bank.entries.size()), state.text,
                            j_max, scorer, adapter);
  std::vector<ScoredLemma> out;
  out.reserve(ranked.size());
  for (const auto& [owner, score] : ranked) out.push_back({bank.entries[owner], score});
  return out;
}

}  // namespace rap
