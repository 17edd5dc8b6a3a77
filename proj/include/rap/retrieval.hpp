#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rap/corpus.hpp"

namespace rap {

struct RetrievalError : std::runtime_error {
  explicit RetrievalError(const std::string& what) : std::runtime_error(what) {}
};

// Raw term counts of one document or query. Terms are identifier runs
// [A-Za-z_][A-Za-z0-9_']*; runs joined by a single '.' that is immediately
// followed by another run form one qualified term ("Int.swap_cmpu").
// Case-sensitive; everything else is a separator.
struct TermVector {
  std::map<std::string, int> counts;
  int length = 0;  // sum of counts

  bool operator==(const TermVector&) const = default;
};

TermVector tokenize(std::string_view text);

struct SparseIndex {
  std::vector<TermVector> docs;
  std::map<std::string, int> doc_freq;  // #docs containing the term
  double avg_doc_length = 0.0;          // positive when docs is non-empty
  int n_docs = 0;
};

SparseIndex build_index(const std::vector<std::string>& docs);

struct ScoredDoc {
  int doc = 0;
  double score = 0.0;
};

// Okapi BM-25 with k1 = 1.2, b = 0.75 and the nonnegative smoothed idf
// ln(1 + (N - df + 0.5)/(df + 0.5)). Query term multiplicity is ignored.
// Scores every doc (zeros included); empty index yields an empty list.
std::vector<ScoredDoc> bm25_scores(const SparseIndex& index, const TermVector& query);

// Cosine over tf-idf weights tf * (ln((1+N)/(1+df)) + 1); zero-norm vectors
// score 0.
std::vector<ScoredDoc> tfidf_scores(const SparseIndex& index, const TermVector& query);

class EmbeddingAdapter {
 public:
  virtual ~EmbeddingAdapter() = default;
  // One vector per input text, all of equal dimension.
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
};

// Talks to POST <base_url>/embed, body {"texts": [...]}, reply
// {"vectors": [[...], ...]}. Transport or shape failures throw RetrievalError.
class HttpEmbeddingAdapter : public EmbeddingAdapter {
 public:
  explicit HttpEmbeddingAdapter(std::string base_url, double timeout_s = 30.0);
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

 private:
  std::string base_url_;
  double timeout_s_;
};

// Embeds docs and query in one call and scores by cosine similarity.
std::vector<ScoredDoc> dense_scores(EmbeddingAdapter& adapter,
                                    const std::vector<std::string>& docs,
                                    const std::string& query);

enum class Scorer { bm25, tfidf, dense };

Scorer scorer_from_name(const std::string& name);
std::string scorer_name(Scorer s);

struct ScoredProof {
  const TheoremRecord* theorem = nullptr;
  double score = 0.0;
};

struct ScoredLemma {
  const LemmaStatement* lemma = nullptr;
  double score = 0.0;
};

// Relevance of a proof is the maximum similarity between the query state and
// any recorded state of that proof (the statement standing in for proofs with
// no steps). Zero-score entries are dropped; ties prefer the entry closer to
// the query in visibility order; at most k_max results.
std::vector<ScoredProof> proof_relevance(const ProofBank& bank, const ProofState& state,
                                         int k_max, Scorer scorer,
                                         EmbeddingAdapter* adapter = nullptr);

// Lemma similarity is scored against the statement text alone.
std::vector<ScoredLemma> lemma_relevance(const LemmaBank& bank, const ProofState& state,
                                         int j_max, Scorer scorer,
                                         EmbeddingAdapter* adapter = nullptr);

}  // namespace rap
