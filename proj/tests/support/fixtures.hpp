#pragma once

#include <random>

#include "oracles.hpp"
#include "stbm/inference.hpp"

// A consistent random point of the variational problem: labels, model
// parameters, gamma and the phi statistics implied by them.
struct RandomPoint {
  stbm::Assignment y;
  stbm::ModelParams params;
  stbm::VariationalState state;
};

inline RandomPoint random_point(const stbm::Corpus& corpus, std::size_t Q, std::size_t K,
                                std::mt19937_64& rng) {
  RandomPoint p;
  p.y = oracle::random_assignment(corpus.num_vertices(), Q, rng);
  const stbm::BlockLayout layout(Q, corpus.directed());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  p.params.alpha.assign(K, 1.0);
  for (auto& a : p.params.alpha) a = 0.5 + unit(rng);
  p.params.beta = oracle::random_stochastic(K, corpus.vocabulary().size(), rng);
  p.params.rho = oracle::random_stochastic(1, Q, rng).data();
  p.params.pi = stbm::Matrix(Q, Q);
  for (std::size_t q = 0; q < Q; ++q)
    for (std::size_t r = 0; r < Q; ++r) {
      if (!corpus.directed() && r < q) {
        p.params.pi(q, r) = p.params.pi(r, q);
      } else {
        p.params.pi(q, r) = 0.05 + 0.9 * unit(rng);
      }
    }
  p.state.gamma = stbm::Matrix(layout.count(), K);
  for (std::size_t b = 0; b < layout.count(); ++b)
    for (std::size_t k = 0; k < K; ++k) p.state.gamma(b, k) = p.params.alpha[k] + 5.0 * unit(rng);
  p.state.phi = stbm::update_phi(corpus, p.y, p.state.gamma, p.params.beta);
  return p;
}
