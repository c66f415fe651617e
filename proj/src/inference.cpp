#include "stbm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace stbm {

BlockLayout::BlockLayout(std::size_t num_clusters, bool directed)
    : Q_(num_clusters), directed_(directed) {}

std::size_t BlockLayout::index(std::size_t q, std::size_t r) const {
  if (directed_) return q * Q_ + r;
  if (q > r) std::swap(q, r);
  // Row-major upper triangle.
  return q * Q_ - q * (q - 1) / 2 + (r - q);
}

std::pair<std::size_t, std::size_t> BlockLayout::clusters(std::size_t block) const {
  if (directed_) return {block / Q_, block % Q_};
  for (std::size_t q = 0; q < Q_; ++q) {
    const std::size_t start = index(q, q);
    if (block < start + (Q_ - q)) return {q, q + (block - start)};
  }
  throw std::out_of_range("block index out of range");
}

namespace {

std::size_t block_of(const BlockLayout& layout, const Assignment& y, const EdgeDocuments& e) {
  return layout.index(static_cast<std::size_t>(y[e.source]), static_cast<std::size_t>(y[e.target]));
}

std::vector<double> cluster_sizes(const Assignment& y) {
  std::vector<double> n(y.num_clusters, 0.0);
  for (int label : y.labels) n[static_cast<std::size_t>(label)] += 1.0;
  return n;
}

/// Number of dyads between clusters q and r (ordered pairs when directed).
double dyad_count(const BlockLayout& layout, const std::vector<double>& n, std::size_t q,
                  std::size_t r) {
  if (layout.directed()) return q == r ? n[q] * (n[q] - 1.0) : n[q] * n[r];
  return q == r ? n[q] * (n[q] - 1.0) / 2.0 : n[q] * n[r];
}

Matrix block_edge_counts(const Corpus& corpus, const Assignment& y) {
  const std::size_t Q = y.num_clusters;
  Matrix counts(Q, Q);
  for (const auto& e : corpus.edges()) {
    auto q = static_cast<std::size_t>(y[e.source]);
    auto r = static_cast<std::size_t>(y[e.target]);
    if (!corpus.directed() && q > r) std::swap(q, r);
    counts(q, r) += 1.0;
  }
  return counts;
}

void check_shapes(const Corpus& corpus, const Assignment& y, const Matrix& gamma, std::size_t K) {
  y.validate(corpus.num_vertices());
  const BlockLayout layout(y.num_clusters, corpus.directed());
  if (gamma.rows() != layout.count() || gamma.cols() != K) {
    throw std::invalid_argument("gamma has the wrong shape for this assignment");
  }
}

}  // namespace

Matrix expected_log_theta(const Matrix& gamma) {
  Matrix out(gamma.rows(), gamma.cols());
  for (std::size_t b = 0; b < gamma.rows(); ++b) {
    auto g = gamma.row(b);
    const double psi_sum = digamma(std::accumulate(g.begin(), g.end(), 0.0));
    for (std::size_t k = 0; k < g.size(); ++k) out(b, k) = digamma(g[k]) - psi_sum;
  }
  return out;
}

PhiStats update_phi(const Corpus& corpus, const Assignment& y, const Matrix& gamma,
                    const Matrix& beta) {
  const std::size_t K = beta.rows();
  const std::size_t V = beta.cols();
  if (V != corpus.vocabulary().size()) throw std::invalid_argument("beta width differs from vocabulary size");
  check_shapes(corpus, y, gamma, K);
  const BlockLayout layout(y.num_clusters, corpus.directed());
  const Matrix elog_theta = expected_log_theta(gamma);

  Matrix log_beta(K, V);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t v = 0; v < V; ++v) {
      log_beta(k, v) = beta(k, v) > 0.0 ? std::log(beta(k, v)) : -std::numeric_limits<double>::infinity();
    }
  }

  const std::size_t E = corpus.num_edges();
  PhiStats stats{Matrix(E, K), Matrix(K, V), std::vector<double>(E, 0.0)};

  // Edges grouped by block so one V x K scratch table serves every block.
  std::vector<std::size_t> order(E);
  std::vector<std::size_t> edge_block(E);
  for (std::size_t e = 0; e < E; ++e) edge_block[e] = block_of(layout, y, corpus.edge(e));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return edge_block[a] < edge_block[b]; });

  Matrix phi_cache(V, K);
  std::vector<double> h_cache(V, 0.0);
  std::vector<std::size_t> stamp(V, std::numeric_limits<std::size_t>::max());
  std::vector<double> logits(K);

  for (std::size_t e : order) {
    const std::size_t b = edge_block[e];
    const auto elog = elog_theta.row(b);
    auto totals = stats.edge_topic_totals.row(e);
    double phi_log_phi = 0.0;
    for (const auto& wc : corpus.edge(e).totals) {
      const WordId v = wc.word;
      if (stamp[v] != b) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < K; ++k) {
          logits[k] = log_beta(k, v) + elog[k];
          best = std::max(best, logits[k]);
        }
        if (!std::isfinite(best)) {
          throw NumericalError("word '" + corpus.vocabulary().word(v) +
                               "' has zero probability under every topic");
        }
        auto phi = phi_cache.row(v);
        double z = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          phi[k] = std::exp(logits[k] - best);
          z += phi[k];
        }
        double h = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          phi[k] /= z;
          h += xlogx(phi[k]);
        }
        h_cache[v] = h;
        stamp[v] = b;
      }
      const auto phi = phi_cache.row(v);
      const double c = wc.count;
      for (std::size_t k = 0; k < K; ++k) {
        totals[k] += c * phi[k];
        stats.word_topic(k, v) += c * phi[k];
      }
      phi_log_phi += c * h_cache[v];
    }
    stats.edge_phi_log_phi[e] = phi_log_phi;
  }
  return stats;
}

Matrix update_gamma(const Corpus& corpus, const Assignment& y, const PhiStats& phi,
                    std::span<const double> alpha) {
  const std::size_t K = alpha.size();
  y.validate(corpus.num_vertices());
  if (phi.edge_topic_totals.rows() != corpus.num_edges() || phi.edge_topic_totals.cols() != K) {
    throw std::invalid_argument("phi statistics do not match the corpus");
  }
  const BlockLayout layout(y.num_clusters, corpus.directed());
  Matrix gamma(layout.count(), K);
  for (std::size_t b = 0; b < layout.count(); ++b) {
    std::copy(alpha.begin(), alpha.end(), gamma.row(b).begin());
  }
  for (std::size_t e = 0; e < corpus.num_edges(); ++e) {
    auto g = gamma.row(block_of(layout, y, corpus.edge(e)));
    const auto n = phi.edge_topic_totals.row(e);
    for (std::size_t k = 0; k < K; ++k) g[k] += n[k];
  }
  return gamma;
}

Matrix m_step_beta(const PhiStats& phi, double smoothing) {
  const std::size_t K = phi.word_topic.rows();
  const std::size_t V = phi.word_topic.cols();
  Matrix beta(K, V);
  for (std::size_t k = 0; k < K; ++k) {
    const auto s = phi.word_topic.row(k);
    auto row = beta.row(k);
    const double total = std::accumulate(s.begin(), s.end(), 0.0);
    for (std::size_t v = 0; v < V; ++v) {
      row[v] = total > 0.0 ? s[v] / total : 1.0 / static_cast<double>(V);
    }
    if (smoothing > 0.0) {
      double sum = 0.0;
      for (double& x : row) {
        x += smoothing;
        sum += x;
      }
      for (double& x : row) x /= sum;
    }
  }
  return beta;
}

std::vector<double> m_step_rho(const Assignment& y) {
  auto rho = cluster_sizes(y);
  const double M = static_cast<double>(y.size());
  for (double& x : rho) x = M > 0 ? x / M : 0.0;
  return rho;
}

Matrix m_step_pi(const Corpus& corpus, const Assignment& y) {
  y.validate(corpus.num_vertices());
  const std::size_t Q = y.num_clusters;
  const BlockLayout layout(Q, corpus.directed());
  const auto n = cluster_sizes(y);
  const Matrix edges = block_edge_counts(corpus, y);
  Matrix pi(Q, Q);
  for (std::size_t q = 0; q < Q; ++q) {
    for (std::size_t r = 0; r < Q; ++r) {
      if (!corpus.directed() && r < q) continue;
      const double dyads = dyad_count(layout, n, q, r);
      pi(q, r) = dyads > 0 ? edges(q, r) / dyads : 0.0;
      if (!corpus.directed()) pi(r, q) = pi(q, r);
    }
  }
  return pi;
}

double sbm_log_likelihood(const Corpus& corpus, const Assignment& y, std::span<const double> rho,
                          const Matrix& pi) {
  y.validate(corpus.num_vertices());
  const std::size_t Q = y.num_clusters;
  const BlockLayout layout(Q, corpus.directed());
  const auto n = cluster_sizes(y);
  const Matrix edges = block_edge_counts(corpus, y);
  double ll = 0.0;
  for (std::size_t q = 0; q < Q; ++q) {
    for (std::size_t r = 0; r < Q; ++r) {
      if (!corpus.directed() && r < q) continue;
      const double present = edges(q, r);
      const double absent = dyad_count(layout, n, q, r) - present;
      if (present > 0) ll += present * safe_log(pi(q, r));
      if (absent > 0) ll += absent * safe_log(1.0 - pi(q, r));
    }
  }
  for (std::size_t q = 0; q < Q; ++q) {
    if (n[q] > 0) ll += n[q] * safe_log(rho[q]);
  }
  return ll;
}

BoundTerms bound_terms(const Corpus& corpus, const Assignment& y, const ModelParams& params,
                       const VariationalState& state) {
  const std::size_t K = params.alpha.size();
  check_shapes(corpus, y, state.gamma, K);
  const BlockLayout layout(y.num_clusters, corpus.directed());
  const Matrix elog_theta = expected_log_theta(state.gamma);
  BoundTerms t;

  const auto& S = state.phi.word_topic;
  for (std::size_t k = 0; k < S.rows(); ++k) {
    for (std::size_t v = 0; v < S.cols(); ++v) {
      if (S(k, v) > 0.0) t.word += S(k, v) * std::log(params.beta(k, v));
    }
  }

  for (std::size_t e = 0; e < corpus.num_edges(); ++e) {
    const auto elog = elog_theta.row(block_of(layout, y, corpus.edge(e)));
    const auto n = state.phi.edge_topic_totals.row(e);
    for (std::size_t k = 0; k < K; ++k) t.topic += n[k] * elog[k];
    t.phi_entropy -= state.phi.edge_phi_log_phi[e];
  }

  const double alpha_sum = std::accumulate(params.alpha.begin(), params.alpha.end(), 0.0);
  double log_norm_alpha = std::lgamma(alpha_sum);
  for (double a : params.alpha) log_norm_alpha -= std::lgamma(a);
  for (std::size_t b = 0; b < layout.count(); ++b) {
    const auto g = state.gamma.row(b);
    const auto elog = elog_theta.row(b);
    t.prior += log_norm_alpha;
    double log_norm_gamma = std::lgamma(std::accumulate(g.begin(), g.end(), 0.0));
    for (std::size_t k = 0; k < K; ++k) {
      t.prior += (params.alpha[k] - 1.0) * elog[k];
      log_norm_gamma -= std::lgamma(g[k]);
      t.gamma_entropy -= (g[k] - 1.0) * elog[k];
    }
    t.gamma_entropy -= log_norm_gamma;
  }

  const auto n = cluster_sizes(y);
  t.sbm_labels = 0.0;
  for (std::size_t q = 0; q < y.num_clusters; ++q) {
    if (n[q] > 0) t.sbm_labels += n[q] * safe_log(params.rho[q]);
  }
  t.sbm_edges = sbm_log_likelihood(corpus, y, params.rho, params.pi) - t.sbm_labels;
  return t;
}

double lower_bound(const Corpus& corpus, const Assignment& y, const ModelParams& params,
                   const VariationalState& state) {
  return bound_terms(corpus, y, params, state).total();
}

double lda_bound(const Corpus& corpus, const Assignment& y, const Matrix& beta,
                 std::span<const double> alpha, const VariationalState& state) {
  ModelParams p;
  p.beta = beta;
  p.alpha.assign(alpha.begin(), alpha.end());
  p.rho.assign(y.num_clusters, 1.0);
  p.pi = Matrix(y.num_clusters, y.num_clusters);
  return bound_terms(corpus, y, p, state).lda();
}

namespace {

/// Bound terms that depend on the label of a single vertex, evaluated for
/// every candidate label with all other labels fixed.
class VertexScorer {
 public:
  VertexScorer(const Corpus& corpus, const ModelParams& params, const VariationalState& state,
               std::size_t num_clusters)
      : corpus_(corpus),
        layout_(num_clusters, corpus.directed()),
        Q_(num_clusters),
        K_(params.alpha.size()),
        elog_theta_(expected_log_theta(state.gamma)),
        totals_(state.phi.edge_topic_totals),
        log_pi_(num_clusters, num_clusters),
        log_not_pi_(num_clusters, num_clusters),
        log_rho_(num_clusters),
        out_(num_clusters),
        in_(num_clusters),
        score_(num_clusters) {
    for (std::size_t q = 0; q < Q_; ++q) {
      log_rho_[q] = safe_log(params.rho[q]);
      for (std::size_t r = 0; r < Q_; ++r) {
        log_pi_(q, r) = safe_log(params.pi(q, r));
        log_not_pi_(q, r) = safe_log(1.0 - params.pi(q, r));
      }
    }
  }

  /// `sizes` are the cluster sizes including v at its current label.
  const std::vector<double>& score(const Assignment& y, const std::vector<double>& sizes, VertexId v) {
    std::fill(out_.begin(), out_.end(), 0.0);
    std::fill(in_.begin(), in_.end(), 0.0);
    for (auto e : corpus_.out_edges(v)) out_[static_cast<std::size_t>(y[corpus_.edge(e).target])] += 1.0;
    for (auto e : corpus_.in_edges(v)) in_[static_cast<std::size_t>(y[corpus_.edge(e).source])] += 1.0;
    const auto own = static_cast<std::size_t>(y[v]);

    for (std::size_t a = 0; a < Q_; ++a) {
      double s = log_rho_[a];
      for (std::size_t c = 0; c < Q_; ++c) {
        const double others = sizes[c] - (c == own ? 1.0 : 0.0);
        if (corpus_.directed()) {
          s += out_[c] * log_pi_(a, c) + (others - out_[c]) * log_not_pi_(a, c);
          s += in_[c] * log_pi_(c, a) + (others - in_[c]) * log_not_pi_(c, a);
        } else {
          const double linked = out_[c] + in_[c];
          s += linked * log_pi_(a, c) + (others - linked) * log_not_pi_(a, c);
        }
      }
      for (auto e : corpus_.out_edges(v)) {
        const auto other = static_cast<std::size_t>(y[corpus_.edge(e).target]);
        s += topic_term(e, layout_.index(a, other));
      }
      for (auto e : corpus_.in_edges(v)) {
        const auto other = static_cast<std::size_t>(y[corpus_.edge(e).source]);
        s += topic_term(e, layout_.index(other, a));
      }
      score_[a] = s;
    }
    return score_;
  }

 private:
  double topic_term(std::size_t edge, std::size_t block) const {
    const auto n = totals_.row(edge);
    const auto elog = elog_theta_.row(block);
    double s = 0.0;
    for (std::size_t k = 0; k < K_; ++k) s += n[k] * elog[k];
    return s;
  }

  const Corpus& corpus_;
  BlockLayout layout_;
  std::size_t Q_;
  std::size_t K_;
  Matrix elog_theta_;
  const Matrix& totals_;
  Matrix log_pi_;
  Matrix log_not_pi_;
  std::vector<double> log_rho_;
  std::vector<double> out_;
  std::vector<double> in_;
  std::vector<double> score_;
};

constexpr double kSwapThreshold = 1e-10;

}  // namespace

double swap_delta(const Corpus& corpus, const Assignment& y, const ModelParams& params,
                  const VariationalState& state, VertexId v, int label) {
  check_shapes(corpus, y, state.gamma, params.alpha.size());
  VertexScorer scorer(corpus, params, state, y.num_clusters);
  const auto sizes = cluster_sizes(y);
  const auto& s = scorer.score(y, sizes, v);
  return s[static_cast<std::size_t>(label)] - s[static_cast<std::size_t>(y[v])];
}

SwapResult greedy_swap_Y(const Corpus& corpus, const Assignment& y, const ModelParams& params,
                         const VariationalState& state, std::mt19937_64& rng) {
  check_shapes(corpus, y, state.gamma, params.alpha.size());
  SwapResult result{y, false, 0};
  const std::size_t Q = y.num_clusters;
  if (Q < 2) return result;

  VertexScorer scorer(corpus, params, state, Q);
  auto sizes = cluster_sizes(y);
  std::vector<VertexId> order(corpus.num_vertices());
  std::iota(order.begin(), order.end(), VertexId{0});
  std::shuffle(order.begin(), order.end(), rng);

  for (VertexId v : order) {
    const auto& s = scorer.score(result.y, sizes, v);
    const auto current = static_cast<std::size_t>(result.y[v]);
    std::size_t best = current;
    double best_gain = kSwapThreshold;
    for (std::size_t a = 0; a < Q; ++a) {
      if (a == current) continue;
      const double gain = s[a] - s[current];
      if (gain > best_gain) {
        best_gain = gain;
        best = a;
      }
    }
    if (best != current) {
      result.y.labels[v] = static_cast<int>(best);
      sizes[current] -= 1.0;
      sizes[best] += 1.0;
      result.improved = true;
      ++result.swaps;
    }
  }
  return result;
}

Matrix random_beta(const Corpus& corpus, std::size_t num_topics, std::mt19937_64& rng) {
  const std::size_t V = corpus.vocabulary().size();
  std::vector<double> freq(V, 1.0);
  for (const auto& e : corpus.edges()) {
    for (const auto& wc : e.totals) freq[wc.word] += wc.count;
  }
  std::uniform_real_distribution<double> jitter(0.5, 1.5);
  Matrix beta(num_topics, V);
  for (std::size_t k = 0; k < num_topics; ++k) {
    auto row = beta.row(k);
    double sum = 0.0;
    for (std::size_t v = 0; v < V; ++v) {
      row[v] = freq[v] * jitter(rng);
      sum += row[v];
    }
    for (double& x : row) x /= sum;
  }
  return beta;
}

FitResult fit(const Corpus& corpus, std::size_t num_clusters, std::size_t num_topics,
              const Assignment& init, const FitOptions& options) {
  const std::size_t M = corpus.num_vertices();
  const std::size_t Q = num_clusters;
  const std::size_t K = num_topics;
  const std::size_t V = corpus.vocabulary().size();
  if (Q < 1 || K < 1) throw std::invalid_argument("Q and K must be at least 1");
  if (Q > M) throw std::invalid_argument("Q exceeds the number of vertices");
  if (V == 0) throw std::invalid_argument("corpus has an empty vocabulary");
  if (init.num_clusters != Q) throw std::invalid_argument("initial assignment has a different Q");
  init.validate(M);

  std::mt19937_64 rng(options.seed);
  FitResult res;
  res.num_clusters = Q;
  res.num_topics = K;
  res.seed = options.seed;
  res.assignment = init;
  auto& y = res.assignment;
  auto& params = res.params;
  auto& state = res.vstate;

  params.alpha = options.alpha.empty() ? std::vector<double>(K, 1.0) : options.alpha;
  if (params.alpha.size() != K) throw std::invalid_argument("alpha must have K entries");
  if (options.beta_init) {
    if (options.beta_init->rows() != K || options.beta_init->cols() != V) {
      throw std::invalid_argument("beta_init must be K x V");
    }
    params.beta = *options.beta_init;
  } else {
    params.beta = random_beta(corpus, K, rng);
  }

  const BlockLayout layout(Q, corpus.directed());
  state.gamma = Matrix(layout.count(), K);
  {
    std::vector<double> tokens(layout.count(), 0.0);
    for (const auto& e : corpus.edges()) tokens[block_of(layout, y, e)] += static_cast<double>(e.token_count);
    for (std::size_t b = 0; b < layout.count(); ++b) {
      for (std::size_t k = 0; k < K; ++k) state.gamma(b, k) = params.alpha[k] + tokens[b] / static_cast<double>(K);
    }
  }
  params.rho = m_step_rho(y);
  params.pi = m_step_pi(corpus, y);

  auto check_finite = [&](double value, const char* where) {
    if (!std::isfinite(value)) {
      throw NumericalError(std::string("non-finite lower bound after ") + where + " (outer iteration " +
                           std::to_string(res.iterations) + ")");
    }
  };

  double previous = 0.0;
  for (std::size_t outer = 1; outer <= options.max_outer; ++outer) {
    res.iterations = outer;

    // Variational E-step on R(Z, theta) with Y and beta fixed.
    double inner_prev = 0.0;
    for (std::size_t inner = 1; inner <= options.max_inner; ++inner) {
      state.phi = update_phi(corpus, y, state.gamma, params.beta);
      state.gamma = update_gamma(corpus, y, state.phi, params.alpha);
      const double lt = lda_bound(corpus, y, params.beta, params.alpha, state);
      check_finite(lt, "E-step");
      if (inner > 1 && std::abs(lt - inner_prev) <= options.tol * std::abs(inner_prev)) break;
      inner_prev = lt;
    }

    params.beta = m_step_beta(state.phi, options.beta_smoothing);
    if (options.observer) {
      options.observer({outer, state.gamma, params.beta,
                        lda_bound(corpus, y, params.beta, params.alpha, state)});
    }

    for (std::size_t sweep = 0; sweep < options.max_sweeps; ++sweep) {
      auto swap = greedy_swap_Y(corpus, y, params, state, rng);
      if (!swap.improved) break;
      y = std::move(swap.y);
    }
    params.rho = m_step_rho(y);
    params.pi = m_step_pi(corpus, y);

    const double bound = lower_bound(corpus, y, params, state);
    check_finite(bound, "M-step");
    res.bound_trace.push_back(bound);

    if (outer > 1 && std::abs(bound - previous) <= options.tol * std::abs(previous)) {
      // Refreshed rho and pi can open new improving swaps; only stop at a
      // labelling that is a local optimum for the final parameters.
      auto swap = greedy_swap_Y(corpus, y, params, state, rng);
      if (!swap.improved) {
        res.converged = true;
        break;
      }
      y = std::move(swap.y);
      params.rho = m_step_rho(y);
      params.pi = m_step_pi(corpus, y);
    }
    previous = bound;
  }
  res.final_bound = lower_bound(corpus, y, params, state);
  return res;
}

std::vector<int> edge_majority_topics(const Corpus& corpus, const VariationalState& state) {
  std::vector<int> topics(corpus.num_edges());
  for (std::size_t e = 0; e < corpus.num_edges(); ++e) {
    topics[e] = static_cast<int>(argmax(state.phi.edge_topic_totals.row(e)));
  }
  return topics;
}

}  // namespace stbm
