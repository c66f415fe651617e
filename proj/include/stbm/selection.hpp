#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "stbm/corpus.hpp"
#include "stbm/inference.hpp"

namespace stbm {

struct IclBreakdown {
  double bound_lda = 0;
  double pen_lda = 0;
  double sbm_loglik = 0;
  double pen_pi = 0;
  double pen_rho = 0;
  double icl = -std::numeric_limits<double>::infinity();
};

/// Penalties and total for given fitted quantities.
IclBreakdown icl_from_parts(double bound_lda, double sbm_loglik, std::size_t Q, std::size_t K,
                            std::size_t V, std::size_t M, bool directed);

/// ICL of a fit: final text bound, SBM log-likelihood at the MLE of rho
/// and pi for the fitted labels, minus the BIC-type penalties.
IclBreakdown icl(const FitResult& fit, const Corpus& corpus);

struct RestartOptions {
  std::size_t restarts = 10;
  std::uint64_t init_seed = 0;
  FitOptions fit;
};

struct BestFit {
  FitResult fit;
  std::size_t restart = 0;
  /// Final bound of every restart (NaN when it failed numerically).
  std::vector<double> restart_bounds;
  std::vector<std::vector<double>> restart_traces;
};

/// Runs init_assignments, fits every starting partition and keeps the
/// highest final bound, preferring converged restarts. `init` bypasses the
/// initialisation with a single user-provided partition.
BestFit fit_best_of_restarts(const Corpus& corpus, std::size_t Q, std::size_t K,
                             const RestartOptions& options, const Assignment* init = nullptr);

struct GridCell {
  std::size_t Q = 0;
  std::size_t K = 0;
  IclBreakdown icl;
  bool converged = false;
  /// Set when the cell threw or did not converge; its icl is -inf.
  bool failed = false;
  std::string error;
};

struct GridResult {
  std::vector<GridCell> table;  // ordered by (Q, K)
  std::size_t best_Q = 0;
  std::size_t best_K = 0;
  FitResult best_fit;
};

struct GridOptions {
  RestartOptions restart;
  std::size_t jobs = 1;
  bool restrict_k_le_q = false;
};

GridResult grid_search(const Corpus& corpus, const std::vector<std::size_t>& q_range,
                       const std::vector<std::size_t>& k_range, const GridOptions& options);

}  // namespace stbm
