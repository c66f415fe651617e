#include "stbm/init.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>

namespace stbm {

namespace {

constexpr std::size_t kLdaRuns = 5;

double cosine(const SparseCounts& a, const SparseCounts& b, double na, double nb) {
  double dot = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].word < b[j].word) {
      ++i;
    } else if (b[j].word < a[i].word) {
      ++j;
    } else {
      dot += static_cast<double>(a[i].count) * b[j].count;
      ++i;
      ++j;
    }
  }
  return dot / (na * nb);
}

/// Topic k starts as an even mix of the corpus word frequencies and one
/// document; documents are picked with D^2 weights on cosine distance.
Matrix seeded_beta(std::span<const SparseCounts> docs, std::size_t V, std::size_t K, std::mt19937_64& rng) {
  std::vector<double> corpus_freq(V, 0.0);
  double total = 0.0;
  std::vector<std::size_t> nonempty;
  std::vector<double> norm(docs.size(), 0.0);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (const auto& wc : docs[d]) {
      corpus_freq[wc.word] += wc.count;
      total += wc.count;
      norm[d] += static_cast<double>(wc.count) * wc.count;
    }
    norm[d] = std::sqrt(norm[d]);
    if (!docs[d].empty()) nonempty.push_back(d);
  }

  std::vector<std::size_t> picks;
  std::vector<double> nearest(nonempty.size(), 1.0);
  picks.push_back(nonempty[std::uniform_int_distribution<std::size_t>(0, nonempty.size() - 1)(rng)]);
  while (picks.size() < K) {
    const auto& last = docs[picks.back()];
    std::vector<double> w(nonempty.size());
    for (std::size_t i = 0; i < nonempty.size(); ++i) {
      const std::size_t d = nonempty[i];
      nearest[i] = std::min(nearest[i], std::max(0.0, 1.0 - cosine(docs[d], last, norm[d], norm[picks.back()])));
      w[i] = nearest[i] * nearest[i];
    }
    if (std::accumulate(w.begin(), w.end(), 0.0) <= 0.0) std::fill(w.begin(), w.end(), 1.0);
    std::discrete_distribution<std::size_t> draw(w.begin(), w.end());
    picks.push_back(nonempty[draw(rng)]);
  }

  Matrix beta(K, V);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& doc = docs[picks[k]];
    const double n = static_cast<double>(total_count(doc));
    auto row = beta.row(k);
    for (std::size_t v = 0; v < V; ++v) row[v] = 0.5 * corpus_freq[v] / total + 1e-10;
    for (const auto& wc : doc) row[wc.word] += 0.5 * wc.count / n;
    const double sum = std::accumulate(row.begin(), row.end(), 0.0);
    for (double& x : row) x /= sum;
  }
  return beta;
}

struct DocPass {
  double word = 0.0;     // sum c phi log beta
  double phi_log_phi = 0.0;
};

}  // namespace

LdaResult lda_vem(std::span<const SparseCounts> docs, std::size_t vocab_size, std::size_t num_topics,
                  std::span<const double> alpha, const LdaOptions& options) {
  const std::size_t D = docs.size();
  const std::size_t K = num_topics;
  const std::size_t V = vocab_size;
  if (K < 1) throw std::invalid_argument("lda_vem needs at least one topic");
  if (D == 0) throw std::invalid_argument("lda_vem needs at least one document");
  if (alpha.size() != K) throw std::invalid_argument("alpha must have K entries");
  std::uint64_t tokens = 0;
  for (const auto& doc : docs) {
    for (const auto& wc : doc) {
      if (wc.word >= V) throw std::invalid_argument("word id outside the vocabulary");
    }
    tokens += total_count(doc);
  }
  if (tokens == 0) throw std::invalid_argument("every document is empty");

  std::mt19937_64 rng(options.seed);
  LdaResult res;
  if (options.beta_init) {
    if (options.beta_init->rows() != K || options.beta_init->cols() != V) {
      throw std::invalid_argument("beta_init must be K x V");
    }
    res.beta = *options.beta_init;
  } else {
    res.beta = seeded_beta(docs, V, K, rng);
  }

  res.gamma = Matrix(D, K);
  res.topic_counts = Matrix(D, K);
  for (std::size_t d = 0; d < D; ++d) {
    const double n = static_cast<double>(total_count(docs[d]));
    for (std::size_t k = 0; k < K; ++k) res.gamma(d, k) = alpha[k] + n / static_cast<double>(K);
  }

  const double alpha_sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
  double log_norm_alpha = std::lgamma(alpha_sum);
  for (double a : alpha) log_norm_alpha -= std::lgamma(a);

  Matrix log_beta(K, V);
  Matrix word_topic(K, V);
  std::vector<double> elog(K), weight(K), phi_buf;
  double previous = 0.0;

  for (std::size_t outer = 1; outer <= options.max_outer; ++outer) {
    res.iterations = outer;
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t v = 0; v < V; ++v) {
        const double b = res.beta(k, v);
        log_beta(k, v) = b > 0.0 ? std::log(b) : 0.0;
      }
    }
    word_topic.fill(0.0);
    double rest = 0.0;

    for (std::size_t d = 0; d < D; ++d) {
      const auto& doc = docs[d];
      auto gamma = res.gamma.row(d);
      auto counts = res.topic_counts.row(d);
      phi_buf.assign(doc.size() * K, 0.0);
      double bound_prev = 0.0;
      double doc_rest = 0.0;

      for (std::size_t inner = 1; inner <= options.max_inner; ++inner) {
        const double psi_sum = digamma(std::accumulate(gamma.begin(), gamma.end(), 0.0));
        for (std::size_t k = 0; k < K; ++k) {
          elog[k] = digamma(gamma[k]) - psi_sum;
          weight[k] = std::exp(elog[k]);
        }

        DocPass pass;
        std::fill(counts.begin(), counts.end(), 0.0);
        for (std::size_t w = 0; w < doc.size(); ++w) {
          const WordId v = doc[w].word;
          const double c = doc[w].count;
          double* phi = phi_buf.data() + w * K;
          double z = 0.0;
          for (std::size_t k = 0; k < K; ++k) {
            phi[k] = res.beta(k, v) * weight[k];
            z += phi[k];
          }
          if (!(z > 0.0)) throw NumericalError("a word has zero probability under every topic");
          double plp = -std::log(z);
          double word = 0.0;
          for (std::size_t k = 0; k < K; ++k) {
            phi[k] /= z;
            if (phi[k] > 0.0) {
              plp += phi[k] * (log_beta(k, v) + elog[k]);
              word += phi[k] * log_beta(k, v);
            }
            counts[k] += c * phi[k];
          }
          pass.word += c * word;
          pass.phi_log_phi += c * plp;
        }

        for (std::size_t k = 0; k < K; ++k) gamma[k] = alpha[k] + counts[k];

        const double psi_new = digamma(std::accumulate(gamma.begin(), gamma.end(), 0.0));
        double log_norm_gamma = std::lgamma(std::accumulate(gamma.begin(), gamma.end(), 0.0));
        doc_rest = log_norm_alpha - pass.phi_log_phi;
        for (std::size_t k = 0; k < K; ++k) {
          const double e = digamma(gamma[k]) - psi_new;
          doc_rest += counts[k] * e + (alpha[k] - 1.0) * e - (gamma[k] - 1.0) * e;
          log_norm_gamma -= std::lgamma(gamma[k]);
        }
        doc_rest -= log_norm_gamma;
        const double bound = pass.word + doc_rest;
        if (!std::isfinite(bound)) throw NumericalError("non-finite LDA bound");
        if (inner > 1 && std::abs(bound - bound_prev) <= options.tol * std::abs(bound_prev)) break;
        bound_prev = bound;
      }

      rest += doc_rest;
      for (std::size_t w = 0; w < doc.size(); ++w) {
        const double c = doc[w].count;
        for (std::size_t k = 0; k < K; ++k) word_topic(k, doc[w].word) += c * phi_buf[w * K + k];
      }
    }

    // M-step, identical to the block model's beta update.
    for (std::size_t k = 0; k < K; ++k) {
      auto s = word_topic.row(k);
      auto row = res.beta.row(k);
      const double total = std::accumulate(s.begin(), s.end(), 0.0);
      for (std::size_t v = 0; v < V; ++v) row[v] = total > 0.0 ? s[v] / total : 1.0 / static_cast<double>(V);
      if (options.beta_smoothing > 0.0) {
        double sum = 0.0;
        for (double& x : row) {
          x += options.beta_smoothing;
          sum += x;
        }
        for (double& x : row) x /= sum;
      }
    }
    double bound = rest;
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t v = 0; v < V; ++v) {
        if (word_topic(k, v) > 0.0) bound += word_topic(k, v) * std::log(res.beta(k, v));
      }
    }
    if (!std::isfinite(bound)) throw NumericalError("non-finite LDA bound");
    res.bound_trace.push_back(bound);
    if (options.observer) options.observer(outer, bound);

    if (outer > 1 && std::abs(bound - previous) <= options.tol * std::abs(previous)) {
      res.converged = true;
      break;
    }
    previous = bound;
  }
  return res;
}

IntMatrix build_X(const Corpus& corpus, const Matrix& topic_counts) {
  if (topic_counts.rows() != corpus.num_edges()) {
    throw std::invalid_argument("topic_counts needs one row per edge");
  }
  IntMatrix X(corpus.num_vertices());
  for (std::size_t e = 0; e < corpus.num_edges(); ++e) {
    const auto& edge = corpus.edge(e);
    const auto k = static_cast<std::int32_t>(argmax(topic_counts.row(e))) + 1;
    X(edge.source, edge.target) = k;
    if (!corpus.directed()) X(edge.target, edge.source) = k;
  }
  return X;
}

IntMatrix distance_matrix(const IntMatrix& X) {
  const std::size_t M = X.size();
  IntMatrix delta(M);
  std::vector<std::size_t> nbrs;
  for (std::size_t h = 0; h < M; ++h) {
    // Pairs i, j that both point to h.
    nbrs.clear();
    for (std::size_t i = 0; i < M; ++i) {
      if (X(i, h) > 0) nbrs.push_back(i);
    }
    for (std::size_t a = 0; a < nbrs.size(); ++a) {
      for (std::size_t b = a + 1; b < nbrs.size(); ++b) {
        if (X(nbrs[a], h) != X(nbrs[b], h)) {
          ++delta(nbrs[a], nbrs[b]);
          ++delta(nbrs[b], nbrs[a]);
        }
      }
    }
    // Pairs i, j that h points to.
    nbrs.clear();
    for (std::size_t i = 0; i < M; ++i) {
      if (X(h, i) > 0) nbrs.push_back(i);
    }
    for (std::size_t a = 0; a < nbrs.size(); ++a) {
      for (std::size_t b = a + 1; b < nbrs.size(); ++b) {
        if (X(h, nbrs[a]) != X(h, nbrs[b])) {
          ++delta(nbrs[a], nbrs[b]);
          ++delta(nbrs[b], nbrs[a]);
        }
      }
    }
  }
  return delta;
}

Assignment kmeans_like(const IntMatrix& distance, std::size_t num_clusters, std::uint64_t seed,
                       std::size_t max_iter) {
  const std::size_t M = distance.size();
  const std::size_t Q = num_clusters;
  if (Q < 1) throw std::invalid_argument("kmeans_like needs at least one cluster");
  if (Q > M) throw std::invalid_argument("more clusters than vertices");
  std::mt19937_64 rng(seed);

  std::vector<std::size_t> medoids;
  std::vector<bool> chosen(M, false);
  std::vector<double> nearest(M, std::numeric_limits<double>::infinity());
  auto take = [&](std::size_t m) {
    medoids.push_back(m);
    chosen[m] = true;
    for (std::size_t i = 0; i < M; ++i) nearest[i] = std::min(nearest[i], static_cast<double>(distance(i, m)));
  };
  take(std::uniform_int_distribution<std::size_t>(0, M - 1)(rng));
  while (medoids.size() < Q) {
    std::vector<double> w(M, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
      if (!chosen[i]) {
        w[i] = nearest[i] * nearest[i];
        total += w[i];
      }
    }
    if (total <= 0.0) {
      for (std::size_t i = 0; i < M; ++i) w[i] = chosen[i] ? 0.0 : 1.0;
    }
    std::discrete_distribution<std::size_t> draw(w.begin(), w.end());
    take(draw(rng));
  }

  Assignment y{Q, std::vector<int>(M, 0)};
  for (std::size_t i = 0; i < M; ++i) {
    std::size_t best = 0;
    for (std::size_t q = 1; q < Q; ++q) {
      if (distance(i, medoids[q]) < distance(i, medoids[best])) best = q;
    }
    y.labels[i] = static_cast<int>(best);
  }
  for (std::size_t q = 0; q < Q; ++q) y.labels[medoids[q]] = static_cast<int>(q);

  // Batch k-means steps: a vertex joins the cluster with the smallest mean
  // distance to its other members. Sole members stay put.
  std::vector<double> size(Q), total(Q);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    std::fill(size.begin(), size.end(), 0.0);
    for (int l : y.labels) size[static_cast<std::size_t>(l)] += 1.0;
    std::vector<int> labels(M);
    for (std::size_t i = 0; i < M; ++i) {
      const auto own = static_cast<std::size_t>(y.labels[i]);
      if (size[own] <= 1.0) {
        labels[i] = y.labels[i];
        continue;
      }
      std::fill(total.begin(), total.end(), 0.0);
      for (std::size_t j = 0; j < M; ++j) total[static_cast<std::size_t>(y.labels[j])] += distance(i, j);
      std::size_t best = Q;
      double best_cost = 0.0;
      for (std::size_t q = 0; q < Q; ++q) {
        const double n = size[q] - (q == own ? 1.0 : 0.0);
        if (n <= 0.0) continue;
        const double cost = total[q] / n;
        if (best == Q || cost < best_cost) {
          best = q;
          best_cost = cost;
        }
      }
      labels[i] = static_cast<int>(best);
    }
    // Never empty a cluster: its lowest-index leaver stays behind.
    std::vector<double> kept(Q, 0.0);
    for (std::size_t i = 0; i < M; ++i) {
      if (labels[i] == y.labels[i]) kept[static_cast<std::size_t>(labels[i])] += 1.0;
    }
    for (std::size_t i = 0; i < M; ++i) {
      const auto own = static_cast<std::size_t>(y.labels[i]);
      if (kept[own] == 0.0) {
        bool arriving = false;
        for (std::size_t j = 0; j < M && !arriving; ++j) arriving = labels[j] == y.labels[i] && j != i;
        if (!arriving) {
          labels[i] = y.labels[i];
          kept[own] = 1.0;
        }
      }
    }
    if (labels == y.labels) break;
    y.labels = std::move(labels);
  }
  return y;
}

InitResult init_assignments(const Corpus& corpus, std::size_t num_clusters, std::size_t num_topics,
                            std::size_t n_restarts, std::uint64_t seed) {
  if (n_restarts < 1) throw std::invalid_argument("n_restarts must be at least 1");
  const std::size_t M = corpus.num_vertices();
  if (num_clusters > M) throw std::invalid_argument("more clusters than vertices");

  std::vector<SparseCounts> docs;
  docs.reserve(corpus.num_edges());
  for (std::size_t e = 0; e < corpus.num_edges(); ++e) docs.push_back(corpus.edge(e).totals);
  std::vector<double> alpha(num_topics, 1.0);
  std::optional<LdaResult> lda;
  for (std::size_t run = 0; run < kLdaRuns; ++run) {
    LdaOptions lda_opts;
    lda_opts.seed = derive_seed(seed, 0x1000 + run);
    auto candidate = lda_vem(docs, corpus.vocabulary().size(), num_topics, alpha, lda_opts);
    if (!lda || candidate.bound_trace.back() > lda->bound_trace.back()) lda = std::move(candidate);
  }

  const IntMatrix delta = distance_matrix(build_X(corpus, lda->topic_counts));

  InitResult out;
  out.beta = std::move(lda->beta);
  for (std::size_t r = 0; r < n_restarts; ++r) {
    out.assignments.push_back(kmeans_like(delta, num_clusters, derive_seed(seed, r + 1)));
  }

  std::mt19937_64 rng(derive_seed(seed, 0xffffffffULL));
  std::vector<std::size_t> order(M);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  Assignment random{num_clusters, std::vector<int>(M)};
  std::uniform_int_distribution<int> label(0, static_cast<int>(num_clusters) - 1);
  for (std::size_t i = 0; i < M; ++i) {
    random.labels[order[i]] = i < num_clusters ? static_cast<int>(i) : label(rng);
  }
  out.assignments.push_back(std::move(random));
  return out;
}

}  // namespace stbm
