#include "stbm/selection.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>

#include "stbm/init.hpp"

namespace stbm {

IclBreakdown icl_from_parts(double bound_lda, double sbm_loglik, std::size_t Q, std::size_t K,
                            std::size_t V, std::size_t M, bool directed) {
  const double q = static_cast<double>(Q);
  const double k = static_cast<double>(K);
  const double v = static_cast<double>(V);
  const double m = static_cast<double>(M);
  IclBreakdown b;
  b.bound_lda = bound_lda;
  b.sbm_loglik = sbm_loglik;
  b.pen_lda = k * (v - 1.0) / 2.0 * std::log(q * q);
  if (directed) {
    b.pen_pi = q * q / 2.0 * std::log(m * (m - 1.0));
  } else {
    b.pen_pi = q * (q + 1.0) / 4.0 * std::log(m * (m - 1.0) / 2.0);
  }
  b.pen_rho = (q - 1.0) / 2.0 * std::log(m);
  b.icl = b.bound_lda - b.pen_lda + b.sbm_loglik - b.pen_pi - b.pen_rho;
  return b;
}

IclBreakdown icl(const FitResult& fit, const Corpus& corpus) {
  const auto& y = fit.assignment;
  const double bound = lda_bound(corpus, y, fit.params.beta, fit.params.alpha, fit.vstate);
  const double sbm = sbm_log_likelihood(corpus, y, m_step_rho(y), m_step_pi(corpus, y));
  return icl_from_parts(bound, sbm, fit.num_clusters, fit.num_topics, corpus.vocabulary().size(),
                        corpus.num_vertices(), corpus.directed());
}

BestFit fit_best_of_restarts(const Corpus& corpus, std::size_t Q, std::size_t K,
                             const RestartOptions& options, const Assignment* init) {
  std::vector<Assignment> starts;
  FitOptions fit_opts = options.fit;
  if (init) {
    starts.push_back(*init);
  } else {
    auto prepared = init_assignments(corpus, Q, K, options.restarts, options.init_seed);
    starts = std::move(prepared.assignments);
    if (!fit_opts.beta_init) fit_opts.beta_init = std::move(prepared.beta);
  }

  BestFit best;
  bool have = false;
  std::exception_ptr first_error;
  for (std::size_t r = 0; r < starts.size(); ++r) {
    FitOptions o = fit_opts;
    o.seed = derive_seed(options.fit.seed, r);
    try {
      FitResult f = fit(corpus, Q, K, starts[r], o);
      best.restart_bounds.push_back(f.final_bound);
      best.restart_traces.push_back(f.bound_trace);
      const bool better = !have || (f.converged && !best.fit.converged) ||
                          (f.converged == best.fit.converged && f.final_bound > best.fit.final_bound);
      if (better) {
        best.fit = std::move(f);
        best.restart = r;
        have = true;
      }
    } catch (const NumericalError&) {
      best.restart_bounds.push_back(std::nan(""));
      best.restart_traces.emplace_back();
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (!have) std::rethrow_exception(first_error);
  best.fit.icl = icl(best.fit, corpus).icl;
  return best;
}

namespace {

bool better_cell(const GridCell& a, const GridCell& b) {
  if (a.icl.icl != b.icl.icl) return a.icl.icl > b.icl.icl;
  if (a.Q != b.Q) return a.Q < b.Q;
  return a.K < b.K;
}

}  // namespace

GridResult grid_search(const Corpus& corpus, const std::vector<std::size_t>& q_range,
                       const std::vector<std::size_t>& k_range, const GridOptions& options) {
  if (q_range.empty() || k_range.empty()) throw std::invalid_argument("grid ranges must be non-empty");
  GridResult result;
  for (std::size_t Q : q_range) {
    for (std::size_t K : k_range) {
      if (options.restrict_k_le_q && K > Q) continue;
      result.table.push_back({Q, K, {}, false, false, {}});
    }
  }
  if (result.table.empty()) throw std::invalid_argument("no grid cell satisfies K <= Q");

  std::mutex mutex;
  std::atomic<std::size_t> next{0};
  std::size_t best_index = result.table.size();

  auto worker = [&] {
    for (std::size_t i = next++; i < result.table.size(); i = next++) {
      GridCell& cell = result.table[i];
      std::optional<FitResult> fitted;
      try {
        auto best = fit_best_of_restarts(corpus, cell.Q, cell.K, options.restart);
        cell.icl = icl(best.fit, corpus);
        cell.converged = best.fit.converged;
        if (!cell.converged) {
          cell.failed = true;
          cell.error = "did not converge";
          cell.icl.icl = -std::numeric_limits<double>::infinity();
        }
        fitted = std::move(best.fit);
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
        cell.icl.icl = -std::numeric_limits<double>::infinity();
      }
      std::lock_guard lock(mutex);
      if (fitted && !cell.failed &&
          (best_index == result.table.size() || better_cell(cell, result.table[best_index]))) {
        best_index = i;
        result.best_fit = std::move(*fitted);
      }
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, result.table.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  if (best_index == result.table.size()) throw NumericalError("every grid cell failed");
  result.best_Q = result.table[best_index].Q;
  result.best_K = result.table[best_index].K;
  return result;
}

}  // namespace stbm
