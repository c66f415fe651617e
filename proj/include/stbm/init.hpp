#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "stbm/corpus.hpp"
#include "stbm/numeric.hpp"

namespace stbm {

/// Square matrix of small integers (topic types, discordance counts).
class IntMatrix {
 public:
  IntMatrix() = default;
  explicit IntMatrix(std::size_t n) : n_(n), data_(n * n, 0) {}

  std::size_t size() const { return n_; }
  std::int32_t& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  std::int32_t operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  friend bool operator==(const IntMatrix&, const IntMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::int32_t> data_;
};

struct LdaOptions {
  std::size_t max_outer = 100;
  std::size_t max_inner = 50;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  double beta_smoothing = 1e-10;
  std::optional<Matrix> beta_init;
  /// Called after each beta update with the bound under the new beta.
  std::function<void(std::size_t iteration, double bound)> observer;
};

struct LdaResult {
  Matrix gamma;        // D x K
  Matrix topic_counts; // D x K, expected topic counts per document
  Matrix beta;         // K x V
  std::vector<double> bound_trace;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Plain variational EM for LDA with a fixed symmetric-or-not prior alpha.
LdaResult lda_vem(std::span<const SparseCounts> docs, std::size_t vocab_size, std::size_t num_topics,
                  std::span<const double> alpha, const LdaOptions& options = {});

/// X(i,j) = 1 + majority topic of edge (i,j), 0 without an edge. Ties go
/// to the lowest topic. `topic_counts` has one row per corpus edge.
IntMatrix build_X(const Corpus& corpus, const Matrix& topic_counts);

/// Number of discordant topic types over common out- and in-neighbours.
/// The adjacency is read off X (X(i,j) > 0).
IntMatrix distance_matrix(const IntMatrix& X);

/// k-medoids on a precomputed distance with D^2 seeding.
Assignment kmeans_like(const IntMatrix& distance, std::size_t num_clusters, std::uint64_t seed,
                       std::size_t max_iter = 50);

/// Fits LDA on the pairwise aggregates (best bound of a few seeded runs),
/// builds X and the distance, then clusters it n_restarts times.
struct InitResult {
  /// n_restarts k-medoids partitions, then one uniform random partition.
  std::vector<Assignment> assignments;
  /// Topics found on the pairwise aggregates; a natural beta start for fit.
  Matrix beta;
};

InitResult init_assignments(const Corpus& corpus, std::size_t num_clusters, std::size_t num_topics,
                            std::size_t n_restarts, std::uint64_t seed);

}  // namespace stbm
