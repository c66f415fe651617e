#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "stbm/corpus.hpp"
#include "stbm/numeric.hpp"

namespace stbm {

/// Indexing of cluster pairs: Q*Q ordered pairs for directed networks,
/// Q(Q+1)/2 unordered pairs (q <= r) for undirected ones.
class BlockLayout {
 public:
  BlockLayout(std::size_t num_clusters, bool directed);

  std::size_t num_clusters() const { return Q_; }
  bool directed() const { return directed_; }
  std::size_t count() const { return directed_ ? Q_ * Q_ : Q_ * (Q_ + 1) / 2; }
  std::size_t index(std::size_t q, std::size_t r) const;
  std::pair<std::size_t, std::size_t> clusters(std::size_t block) const;

 private:
  std::size_t Q_;
  bool directed_;
};

struct ModelParams {
  std::vector<double> rho;    // Q
  Matrix pi;                  // Q x Q, symmetric when undirected
  Matrix beta;                // K x V
  std::vector<double> alpha;  // K, fixed
};

/// Sufficient statistics of the word-topic responsibilities phi. phi only
/// depends on the word type and the cluster pair of the edge, so it is
/// evaluated once per (edge, word type) and weighted by the count.
struct PhiStats {
  Matrix edge_topic_totals;           // E x K: n_ij,k
  Matrix word_topic;                  // K x V: S_kv
  std::vector<double> edge_phi_log_phi;  // E: sum over tokens of sum_k phi log phi
};

struct VariationalState {
  Matrix gamma;  // blocks x K
  PhiStats phi;
};

/// E[log theta_bk] = psi(gamma_bk) - psi(sum_l gamma_bl), one row per block.
Matrix expected_log_theta(const Matrix& gamma);

PhiStats update_phi(const Corpus& corpus, const Assignment& y, const Matrix& gamma,
                    const Matrix& beta);
Matrix update_gamma(const Corpus& corpus, const Assignment& y, const PhiStats& phi,
                    std::span<const double> alpha);
/// Row-normalised S, all-zero rows become uniform; then `smoothing` is
/// added to every entry and rows renormalised.
Matrix m_step_beta(const PhiStats& phi, double smoothing = 1e-10);
std::vector<double> m_step_rho(const Assignment& y);
Matrix m_step_pi(const Corpus& corpus, const Assignment& y);

/// The pieces of the lower bound. lda() is the text part, sbm() the
/// complete-data log-likelihood of the graph and the labels.
struct BoundTerms {
  double word = 0;           // sum S_kv log beta_kv
  double topic = 0;          // sum n_ij,k E[log theta]
  double prior = 0;          // E[log p(theta)]
  double phi_entropy = 0;    // -sum phi log phi
  double gamma_entropy = 0;  // -E[log R(theta)]
  double sbm_edges = 0;
  double sbm_labels = 0;

  double lda() const { return word + topic + prior + phi_entropy + gamma_entropy; }
  double sbm() const { return sbm_edges + sbm_labels; }
  double total() const { return lda() + sbm(); }
};

BoundTerms bound_terms(const Corpus& corpus, const Assignment& y, const ModelParams& params,
                       const VariationalState& state);
double lower_bound(const Corpus& corpus, const Assignment& y, const ModelParams& params,
                   const VariationalState& state);
double lda_bound(const Corpus& corpus, const Assignment& y, const Matrix& beta,
                 std::span<const double> alpha, const VariationalState& state);
/// log p(A, Y | rho, pi) with probabilities floored inside logs.
double sbm_log_likelihood(const Corpus& corpus, const Assignment& y, std::span<const double> rho,
                          const Matrix& pi);

/// Change of the lower bound when vertex `v` alone moves to `label`,
/// with params and variational state held fixed.
double swap_delta(const Corpus& corpus, const Assignment& y, const ModelParams& params,
                  const VariationalState& state, VertexId v, int label);

struct SwapResult {
  Assignment y;
  bool improved = false;
  std::size_t swaps = 0;
};

/// One sweep over the vertices in random order, moving each to the label
/// with the largest strict increase of the bound.
SwapResult greedy_swap_Y(const Corpus& corpus, const Assignment& y, const ModelParams& params,
                         const VariationalState& state, std::mt19937_64& rng);

struct IterationSnapshot {
  std::size_t iteration;
  const Matrix& gamma;
  const Matrix& beta;
  double lda_bound;  // with the freshly estimated beta
};

struct FitOptions {
  std::size_t max_outer = 100;
  std::size_t max_inner = 50;
  std::size_t max_sweeps = 100;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  double beta_smoothing = 1e-10;
  std::optional<Matrix> beta_init;
  std::vector<double> alpha;  // empty: all ones
  std::function<void(const IterationSnapshot&)> observer;
};

struct FitResult {
  Assignment assignment;
  ModelParams params;
  VariationalState vstate;
  std::vector<double> bound_trace;
  double final_bound = 0;
  double icl = 0;
  std::size_t num_clusters = 0;
  std::size_t num_topics = 0;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Starting topic-word matrix: corpus word frequencies with seeded
/// multiplicative jitter, one row per topic.
Matrix random_beta(const Corpus& corpus, std::size_t num_topics, std::mt19937_64& rng);

/// Classification variational EM from the initial labels `init`.
/// Throws NumericalError when the bound stops being finite.
FitResult fit(const Corpus& corpus, std::size_t num_clusters, std::size_t num_topics,
              const Assignment& init, const FitOptions& options = {});

/// Per edge: argmax_k n_ij,k (ties to the lowest topic).
std::vector<int> edge_majority_topics(const Corpus& corpus, const VariationalState& state);

}  // namespace stbm
