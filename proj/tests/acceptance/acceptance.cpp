// Acceptance checks. Each criterion prints exactly one PASS/FAIL line on
// stdout; per-run details go to stderr.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "stbm/eval.hpp"
#include "stbm/generator.hpp"
#include "stbm/init.hpp"
#include "stbm/inference.hpp"
#include "stbm/selection.hpp"

using namespace stbm;

namespace {

struct Settings {
  bool full = false;
  std::size_t restarts = 10;
};

struct Outcome {
  bool pass = false;
  std::string summary;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

const TopicWords& seed_topics() {
  static const TopicWords tw = beta_from_texts(bundled_seed_texts());
  return tw;
}

const char* name_of(Scenario s) { return s == Scenario::A ? "A" : s == Scenario::B ? "B" : "C"; }
const char* name_of(Difficulty d) {
  return d == Difficulty::Easy ? "easy" : d == Difficulty::Hard1 ? "hard1" : "hard2";
}

// Largest decrease between consecutive bounds, absolute and relative to
// max(1, |previous|).
struct Drop {
  double absolute = 0.0;
  double relative = 0.0;
  std::size_t steps = 0;
  void add(const std::vector<double>& trace) {
    for (std::size_t i = 1; i < trace.size(); ++i) {
      const double d = trace[i - 1] - trace[i];
      absolute = std::max(absolute, d);
      relative = std::max(relative, d / std::max(1.0, std::abs(trace[i - 1])));
      ++steps;
    }
  }
};

struct Recovery {
  double node_ari = 0.0;
  double edge_ari = 0.0;
  double seconds = 0.0;
};

Recovery fit_and_score(Scenario s, Difficulty d, std::uint64_t seed, const Settings& st, Drop* drop = nullptr) {
  const auto t0 = Clock::now();
  const auto sim = sample_corpus(scenario_config(s, d, seed_topics(), seed));
  const auto cfg = scenario_config(s, d, seed_topics(), seed);
  RestartOptions ro;
  ro.restarts = st.restarts;
  ro.init_seed = seed;
  ro.fit.seed = seed;
  const auto best = fit_best_of_restarts(sim.corpus, cfg.num_clusters, cfg.num_topics, ro);
  if (drop)
    for (const auto& t : best.restart_traces) drop->add(t);
  Recovery r;
  r.node_ari = ari(sim.truth.y.labels, best.fit.assignment.labels);
  r.edge_ari = ari(sim.truth.edge_majority_topic, edge_majority_topics(sim.corpus, best.fit.vstate));
  r.seconds = seconds_since(t0);
  std::cerr << "  " << name_of(s) << "/" << name_of(d) << " seed " << seed << ": node " << fixed(r.node_ari)
            << " edge " << fixed(r.edge_ari) << " (" << fixed(r.seconds, 1) << " s"
            << (best.fit.converged ? "" : ", not converged") << ")\n";
  return r;
}

struct Means {
  double node = 0.0, edge = 0.0;
};

Means batch(Scenario s, Difficulty d, std::size_t sims, const Settings& st) {
  Means m;
  for (std::size_t i = 1; i <= sims; ++i) {
    const auto r = fit_and_score(s, d, i, st);
    m.node += r.node_ari / static_cast<double>(sims);
    m.edge += r.edge_ari / static_cast<double>(sims);
  }
  return m;
}

Outcome recovery() {
  Settings st;
  Outcome o{true, "easy scenarios, 20 sims, 10 restarts:"};
  for (auto s : {Scenario::A, Scenario::B, Scenario::C}) {
    const auto m = batch(s, Difficulty::Easy, 20, st);
    o.pass = o.pass && m.node >= 0.90 && m.edge >= 0.90;
    o.summary += std::string(" ") + name_of(s) + " node " + fixed(m.node) + " edge " + fixed(m.edge) + ";";
  }
  o.summary += " gate mean >= 0.90";
  return o;
}

Outcome hard1() {
  Settings st;
  Outcome o{true, "hard1 (between-community pi 0.2), 20 sims:"};
  for (auto s : {Scenario::A, Scenario::C}) {
    const auto m = batch(s, Difficulty::Hard1, 20, st);
    o.pass = o.pass && m.node >= 0.90;
    o.summary += std::string(" ") + name_of(s) + " node " + fixed(m.node) + " (edge " + fixed(m.edge) + ");";
  }
  o.summary += " gate mean node >= 0.90";
  return o;
}

Outcome hard2() {
  Settings st;
  const auto a = batch(Scenario::A, Difficulty::Hard2, 20, st);
  const auto b = batch(Scenario::B, Difficulty::Hard2, 20, st);
  Outcome o;
  o.pass = a.node >= 0.90 && a.edge >= 0.90;
  o.summary = "hard2 (40% topic noise), 20 sims: A node " + fixed(a.node) + " edge " + fixed(a.edge) +
              " (gate >= 0.90); B node " + fixed(b.node) + " edge " + fixed(b.edge) + " (reported only)";
  return o;
}

Outcome selection(const Settings& st) {
  const std::size_t hi = st.full ? 6 : 5;
  const std::size_t sims = st.full ? 20 : 10;
  std::vector<std::size_t> range(hi);
  std::iota(range.begin(), range.end(), 1);
  Outcome o{true, "ICL grid 1.." + std::to_string(hi) + " x 1.." + std::to_string(hi) + ", " + std::to_string(sims) +
                      " sims, 10 restarts per cell:"};
  for (auto s : {Scenario::A, Scenario::B, Scenario::C}) {
    std::size_t hits = 0;
    for (std::size_t i = 1; i <= sims; ++i) {
      const auto t0 = Clock::now();
      const auto cfg = scenario_config(s, Difficulty::Easy, seed_topics(), 1000 + i);
      const auto sim = sample_corpus(cfg);
      GridOptions go;
      go.restart.restarts = st.restarts;
      go.restart.init_seed = i;
      go.restart.fit.seed = i;
      const auto g = grid_search(sim.corpus, range, range, go);
      const bool hit = g.best_Q == cfg.num_clusters && g.best_K == cfg.num_topics;
      hits += hit;
      std::cerr << "  " << name_of(s) << " sim " << i << ": selected (" << g.best_Q << "," << g.best_K << ")"
                << (hit ? "" : " miss") << " (" << fixed(seconds_since(t0), 1) << " s)\n";
    }
    const double rate = static_cast<double>(hits) / static_cast<double>(sims);
    o.pass = o.pass && rate >= 0.60;
    o.summary += std::string(" ") + name_of(s) + " " + std::to_string(hits) + "/" + std::to_string(sims) + ";";
  }
  o.summary += " gate >= 60%";
  return o;
}

Outcome monotonicity() {
  Settings st;
  Drop drop;
  std::size_t fits = 0;
  for (auto s : {Scenario::A, Scenario::B, Scenario::C})
    for (auto d : {Difficulty::Easy, Difficulty::Hard1, Difficulty::Hard2})
      for (std::uint64_t seed = 101; seed <= 102; ++seed) {
        fit_and_score(s, d, seed, st, &drop);
        fits += st.restarts + 1;
      }

  // Undirected versions of the scenarios.
  for (auto s : {Scenario::A, Scenario::C}) {
    auto cfg = scenario_config(s, Difficulty::Easy, seed_topics(), 7);
    cfg.directed = false;
    const auto sim = sample_corpus(cfg);
    RestartOptions ro;
    ro.init_seed = 7;
    const auto best = fit_best_of_restarts(sim.corpus, cfg.num_clusters, cfg.num_topics, ro);
    for (const auto& t : best.restart_traces) drop.add(t);
    fits += best.restart_traces.size();
  }

  // Small random corpora over a spread of (Q, K), both orientations.
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const bool directed = trial % 2 == 0;
    const std::size_t M = 6 + trial % 15;
    const std::size_t Q = 1 + trial % 5, K = 1 + (trial / 5) % 4;
    const auto c = oracle::random_corpus(M, 12, directed, 0.3, 15, rng);
    FitOptions fo;
    fo.seed = static_cast<std::uint64_t>(trial);
    drop.add(fit(c, Q, K, oracle::random_assignment(M, Q, rng), fo).bound_trace);
    ++fits;
  }

  Outcome o;
  o.pass = drop.relative <= 1e-8;
  o.summary = std::to_string(fits) + " fits, " + std::to_string(drop.steps) +
              " outer steps: largest decrease " + sci(drop.absolute) + " absolute, " + sci(drop.relative) +
              " relative (gate 1e-8 relative)";
  return o;
}

Corpus five_document_corpus() {
  CorpusBuilder b(true);
  for (auto n : {"ann", "bob", "cy"}) b.add_vertex(n);
  b.add_edge(0, 1);
  b.add_edge(1, 2);
  b.add_edge(2, 0);
  b.add_document(0, 1, tokenize("market shares fell as the bank raised rates"));
  b.add_document(0, 1, tokenize("the match ended with a late goal and a red card"));
  b.add_document(1, 2, tokenize("rates and shares rose while the bank held"));
  b.add_document(2, 0, tokenize("goal after goal the match turned late"));
  b.add_document(2, 0, tokenize("card bank goal rates market match"));
  return std::move(b).build();
}

Outcome oracles() {
  std::vector<std::string> parts;
  bool all = true;
  auto record = [&](const std::string& tag, bool ok, const std::string& what) {
    all = all && ok;
    parts.push_back(tag + (ok ? " ok" : " FAILED") + " (" + what + ")");
  };

  {  // (a) single-cluster fit against token-level LDA
    const auto c = five_document_corpus();
    std::vector<std::vector<std::uint32_t>> docs;
    for (const auto& e : c.edges())
      for (const auto& d : e.docs) {
        std::vector<std::uint32_t> t;
        for (const auto& wc : d) t.insert(t.end(), wc.count, wc.word);
        docs.push_back(t);
      }
    double worst = 0.0;
    std::size_t iterations = 0;
    for (std::size_t K : {2, 3, 4}) {
      std::mt19937_64 rng(K);
      const Matrix beta0 = oracle::random_stochastic(K, c.vocabulary().size(), rng);
      FitOptions fo;
      fo.beta_init = beta0;
      fo.tol = 1e-10;
      std::vector<double> bounds;
      std::vector<std::vector<double>> gammas;
      fo.observer = [&](const IterationSnapshot& s) {
        bounds.push_back(s.lda_bound);
        gammas.emplace_back(s.gamma.row(0).begin(), s.gamma.row(0).end());
      };
      const auto f = fit(c, 1, K, Assignment{1, {0, 0, 0}}, fo);
      const auto ref = oracle::shared_theta_lda(docs, c.vocabulary().size(), K, beta0, f.iterations, fo.max_inner,
                                                fo.tol, fo.beta_smoothing);
      for (std::size_t i = 0; i < bounds.size(); ++i) {
        worst = std::max(worst, std::abs(bounds[i] - ref.bounds[i]));
        for (std::size_t k = 0; k < K; ++k) worst = std::max(worst, std::abs(gammas[i][k] - ref.gammas[i][k]));
      }
      iterations += bounds.size();
    }
    record("a", worst <= 1e-8, std::to_string(iterations) + " iterations, max gap " + sci(worst));
  }

  {  // (b) discordance distance against the triple loop
    std::mt19937_64 rng(55);
    std::size_t agree = 0;
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t M = 2 + trial % 29;
      IntMatrix X(M);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      std::uniform_int_distribution<int> topic(1, 1 + trial % 6);
      const double density = unit(rng);
      for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = 0; j < M; ++j)
          if (i != j && unit(rng) < density) X(i, j) = topic(rng);
      agree += distance_matrix(X) == oracle::brute_distance(X);
    }
    record("b", agree == 50, std::to_string(agree) + "/50 exact");
  }

  {  // (c) ARI against pair counting
    std::mt19937_64 rng(99);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 1 + rng() % 50;
      std::uniform_int_distribution<int> la(0, static_cast<int>(rng() % 7)), lb(0, static_cast<int>(rng() % 7));
      std::vector<int> a(n), b(n);
      for (auto& x : a) x = la(rng);
      for (auto& x : b) x = lb(rng);
      worst = std::max(worst, std::abs(ari(a, b) - oracle::pair_counting_ari(a, b)));
    }
    record("c", worst <= 1e-12, "100 pairs, max gap " + sci(worst));
  }

  {  // (d) swap deltas against full recomputation
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const bool directed = trial % 3 != 0;
      const std::size_t Q = 2 + trial % 4, K = 1 + trial % 4;
      const auto c = oracle::random_corpus(6 + trial % 10, 10, directed, 0.35, 10, rng);
      const auto pt = random_point(c, Q, K, rng);
      const auto v = static_cast<VertexId>(rng() % c.num_vertices());
      int label = pt.y[v];
      while (label == pt.y[v]) label = static_cast<int>(rng() % Q);
      auto moved = pt.y;
      moved.labels[v] = label;
      const double full = lower_bound(c, moved, pt.params, pt.state) - lower_bound(c, pt.y, pt.params, pt.state);
      worst = std::max(worst, std::abs(swap_delta(c, pt.y, pt.params, pt.state, v, label) - full));
    }
    record("d", worst <= 1e-6, "100 swaps, max gap " + sci(worst));
  }

  {  // (e) bound below the exact complete-data log-likelihood
    std::mt19937_64 rng(77);
    std::size_t checked = 0, below = 0;
    double tightest = -INFINITY;
    while (checked < 100) {
      const bool directed = checked % 2 == 0;
      const auto c = oracle::random_corpus(3 + checked % 3, 2 + checked % 3, directed, 0.35, 2, rng);
      if (c.total_tokens() > 4) continue;
      const std::size_t Q = 1 + checked % 2;
      const auto pt = random_point(c, Q, 2, rng);
      const double exact = oracle::complete_log_likelihood_k2(c, pt.y, pt.params.rho, pt.params.pi, pt.params.beta,
                                                              pt.params.alpha);
      const double bound = lower_bound(c, pt.y, pt.params, pt.state);
      tightest = std::max(tightest, bound - exact);
      below += bound <= exact + 1e-9;
      ++checked;
    }
    record("e", below == checked, std::to_string(below) + "/" + std::to_string(checked) +
                                      " instances, max bound - exact " + sci(tightest));
  }

  Outcome o{all, ""};
  for (std::size_t i = 0; i < parts.size(); ++i) o.summary += (i ? "; " : "") + parts[i];
  return o;
}

Outcome normalization() {
  std::mt19937_64 rng(8);
  double phi_gap = 0.0, beta_gap = 0.0, rho_gap = 0.0, gamma_floor = 0.0;
  std::size_t updates = 0;
  auto row_gap = [](const Matrix& m) {
    double g = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      double s = 0.0;
      for (double x : m.row(r)) s += x;
      g = std::max(g, std::abs(s - 1.0));
    }
    return g;
  };
  auto floor_gap = [](const Matrix& gamma, const std::vector<double>& alpha) {
    double g = 0.0;
    for (std::size_t b = 0; b < gamma.rows(); ++b)
      for (std::size_t k = 0; k < gamma.cols(); ++k) g = std::max(g, alpha[k] - gamma(b, k));
    return g;
  };

  for (int trial = 0; trial < 200; ++trial) {
    const bool directed = trial % 2 == 1;
    const std::size_t Q = 1 + trial % 5, K = 1 + trial % 6;
    const auto c = oracle::random_corpus(5 + trial % 12, 15, directed, 0.4, 20, rng);
    const auto pt = random_point(c, Q, K, rng);
    const auto phi = update_phi(c, pt.y, pt.state.gamma, pt.params.beta);
    for (std::size_t e = 0; e < c.num_edges(); ++e) {
      double s = 0.0;
      for (double x : phi.edge_topic_totals.row(e)) s += x;
      phi_gap = std::max(phi_gap, std::abs(s / static_cast<double>(c.edge(e).token_count) - 1.0));
    }
    gamma_floor = std::max(gamma_floor, floor_gap(update_gamma(c, pt.y, phi, pt.params.alpha), pt.params.alpha));
    beta_gap = std::max(beta_gap, row_gap(m_step_beta(phi)));
    const auto rho = m_step_rho(pt.y);
    rho_gap = std::max(rho_gap, std::abs(std::accumulate(rho.begin(), rho.end(), 0.0) - 1.0));
    updates += 5;

    // The same quantities after every outer iteration of a fit.
    FitOptions fo;
    fo.seed = static_cast<std::uint64_t>(trial);
    fo.alpha = pt.params.alpha;
    fo.observer = [&](const IterationSnapshot& s) {
      beta_gap = std::max(beta_gap, row_gap(s.beta));
      gamma_floor = std::max(gamma_floor, floor_gap(s.gamma, pt.params.alpha));
      updates += 2;
    };
    const auto f = fit(c, Q, K, pt.y, fo);
    for (std::size_t e = 0; e < c.num_edges(); ++e) {
      double s = 0.0;
      for (double x : f.vstate.phi.edge_topic_totals.row(e)) s += x;
      phi_gap = std::max(phi_gap, std::abs(s / static_cast<double>(c.edge(e).token_count) - 1.0));
    }
    rho_gap = std::max(rho_gap, std::abs(std::accumulate(f.params.rho.begin(), f.params.rho.end(), 0.0) - 1.0));
  }
  Outcome o;
  o.pass = phi_gap <= 1e-8 && beta_gap <= 1e-8 && rho_gap <= 1e-8 && gamma_floor <= 0.0;
  o.summary = std::to_string(updates) + " updates: max |sum-1| phi " + sci(phi_gap) + ", beta " + sci(beta_gap) +
              ", rho " + sci(rho_gap) + "; max(alpha - gamma) " + sci(gamma_floor) + " (gate 1e-8, gamma >= alpha)";
  return o;
}

GenConfig dirichlet_topics_config(std::size_t M, std::size_t Q, std::size_t K, std::size_t V, bool directed,
                                  double within, double between, std::uint64_t seed) {
  GenConfig g;
  g.num_vertices = M;
  g.num_clusters = Q;
  g.num_topics = K;
  g.directed = directed;
  g.rho.assign(Q, 1.0 / static_cast<double>(Q));
  g.pi = Matrix(Q, Q);
  for (std::size_t q = 0; q < Q; ++q)
    for (std::size_t r = 0; r < Q; ++r) g.pi(q, r) = q == r ? within : between;
  g.alpha.assign(K, 0.3);
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> draw(0.05, 1.0);
  g.beta = Matrix(K, V);
  for (std::size_t k = 0; k < K; ++k) {
    double s = 0.0;
    for (std::size_t v = 0; v < V; ++v) s += (g.beta(k, v) = draw(rng) + 1e-12);
    for (std::size_t v = 0; v < V; ++v) g.beta(k, v) /= s;
  }
  for (std::size_t v = 0; v < V; ++v) g.vocabulary.push_back("w" + std::to_string(v));
  g.seed = seed;
  return g;
}

// Fits here may need more than the default 100 outer iterations: the text
// bound keeps creeping on corpora of this size. Both fits must converge.
Outcome scale() {
  Settings st;
  std::ostringstream s;
  bool pass = true;

  {
    auto cfg = dirichlet_topics_config(150, 10, 5, 2000, true, 0.35, 0.025, 11);
    cfg.doc_length = 60;
    cfg.extra_docs_mean = 1.4;
    const auto sim = sample_corpus(cfg);
    std::size_t docs = 0;
    for (const auto& e : sim.corpus.edges()) docs += e.docs.size();
    const auto t0 = Clock::now();
    RestartOptions ro;
    ro.restarts = st.restarts;
    ro.init_seed = 1;
    ro.fit.max_outer = 1000;
    const auto best = fit_best_of_restarts(sim.corpus, 10, 5, ro);
    const double secs = seconds_since(t0);
    const bool ok = secs < 300.0 && best.fit.converged;
    pass = pass && ok;
    s << "directed M=150, " << sim.corpus.num_edges() << " edges, " << docs << " docs, (10,5) with " << st.restarts
      << " restarts: " << fixed(secs, 1) << " s (limit 300, node ARI " << fixed(ari(sim.truth.y.labels, best.fit.assignment.labels))
      << (best.fit.converged ? "" : ", not converged") << ")";
  }
  {
    auto cfg = dirichlet_topics_config(2000, 13, 7, 3000, false, 0.06, 0.0055, 3);
    cfg.doc_length = 100;
    const auto sim = sample_corpus(cfg);
    const auto t0 = Clock::now();
    RestartOptions ro;
    ro.restarts = st.restarts;
    ro.init_seed = 1;
    ro.fit.max_outer = 1000;
    const auto best = fit_best_of_restarts(sim.corpus, 13, 7, ro);
    const double secs = seconds_since(t0);
    const bool ok = secs < 1800.0 && best.fit.converged;
    pass = pass && ok;
    s << "; undirected M=2000, " << sim.corpus.num_edges() << " edges, " << sim.corpus.total_tokens()
      << " tokens, (13,7) with " << st.restarts << " restarts: " << fixed(secs, 1) << " s (limit 1800, node ARI "
      << fixed(ari(sim.truth.y.labels, best.fit.assignment.labels)) << (best.fit.converged ? "" : ", not converged")
      << ")";
  }
  return {pass, s.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> only;
  Settings st;
  app.add_option("--criterion", only, "Run only these criteria (1-8)")->check(CLI::Range(1, 8));
  app.add_flag("--full", st.full, "Full-size model selection study (6 x 6 grid, 20 simulations)");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"scenario recovery", recovery},
      {"hard1 robustness", hard1},
      {"hard2 robustness", hard2},
      {"ICL selection", [&] { return selection(st); }},
      {"bound monotonicity", monotonicity},
      {"oracle equivalences", oracles},
      {"normalization", normalization},
      {"scale", scale},
  };

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), number) == only.end()) continue;
    const auto t0 = Clock::now();
    std::cerr << "criterion " << number << ": " << criteria[i].first << "\n";
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << number << " (" << criteria[i].first
              << "): " << o.summary << " [" << fixed(seconds_since(t0), 1) << " s]" << std::endl;
  }
  return all ? 0 : 1;
}
