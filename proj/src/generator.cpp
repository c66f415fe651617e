#include "stbm/generator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace stbm {

namespace {

constexpr double kSimplexTol = 1e-12;

void check_simplex(std::span<const double> p, const std::string& what) {
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0)) throw std::invalid_argument(what + " has a negative or NaN entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > kSimplexTol * std::max<std::size_t>(1, p.size())) {
    throw std::invalid_argument(what + " does not sum to 1");
  }
}

std::vector<double> sample_dirichlet(std::span<const double> alpha, std::mt19937_64& rng) {
  std::vector<double> out(alpha.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    std::gamma_distribution<double> g(alpha[k], 1.0);
    out[k] = g(rng);
    sum += out[k];
  }
  for (double& x : out) x /= sum;
  return out;
}

}  // namespace

void GenConfig::validate() const {
  const std::size_t Q = num_clusters;
  const std::size_t K = num_topics;
  if (num_vertices == 0 || Q == 0 || K == 0) {
    throw std::invalid_argument("num_vertices, num_clusters and num_topics must be positive");
  }
  if (rho.size() != Q) throw std::invalid_argument("rho must have num_clusters entries");
  check_simplex(rho, "rho");
  if (pi.rows() != Q || pi.cols() != Q) throw std::invalid_argument("pi must be Q x Q");
  for (std::size_t q = 0; q < Q; ++q) {
    for (std::size_t r = 0; r < Q; ++r) {
      if (!(pi(q, r) >= 0.0 && pi(q, r) <= 1.0)) throw std::invalid_argument("pi entries must lie in [0,1]");
      if (!directed && pi(q, r) != pi(r, q)) throw std::invalid_argument("pi must be symmetric when undirected");
    }
  }
  if (theta.rows() > 0) {
    if (theta.rows() != Q * Q || theta.cols() != K) throw std::invalid_argument("theta must be (Q*Q) x K");
    for (std::size_t b = 0; b < Q * Q; ++b) check_simplex(theta.row(b), "theta row");
  } else {
    if (alpha.size() != K) throw std::invalid_argument("alpha must have num_topics entries when theta is absent");
    for (double a : alpha) {
      if (!(a > 0.0)) throw std::invalid_argument("alpha entries must be positive");
    }
  }
  if (beta.rows() != K || beta.cols() == 0) throw std::invalid_argument("beta must be K x V");
  if (vocabulary.size() != beta.cols()) throw std::invalid_argument("vocabulary size must match beta columns");
  for (std::size_t k = 0; k < K; ++k) check_simplex(beta.row(k), "beta row");
  if (!(topic_noise >= 0.0 && topic_noise <= 1.0)) throw std::invalid_argument("topic_noise must lie in [0,1]");
  if (topic_noise > 0.0 && K < 2) throw std::invalid_argument("topic_noise needs at least two topics");
  if (doc_length == 0) throw std::invalid_argument("doc_length must be positive");
  if (!(extra_docs_mean >= 0.0)) throw std::invalid_argument("extra_docs_mean must be non-negative");
}

Simulation sample_corpus(const GenConfig& config) {
  config.validate();
  const std::size_t M = config.num_vertices;
  const std::size_t Q = config.num_clusters;
  const std::size_t K = config.num_topics;
  std::mt19937_64 rng(config.seed);

  Assignment y{Q, std::vector<int>(M)};
  std::discrete_distribution<int> cluster_draw(config.rho.begin(), config.rho.end());
  for (auto& label : y.labels) label = cluster_draw(rng);

  Matrix theta = config.theta;
  if (theta.rows() == 0) {
    theta = Matrix(Q * Q, K);
    for (std::size_t q = 0; q < Q; ++q) {
      for (std::size_t r = 0; r < Q; ++r) {
        if (!config.directed && r < q) continue;
        auto row = sample_dirichlet(config.alpha, rng);
        std::copy(row.begin(), row.end(), theta.row(q * Q + r).begin());
        if (!config.directed) std::copy(row.begin(), row.end(), theta.row(r * Q + q).begin());
      }
    }
  }

  std::vector<std::discrete_distribution<int>> topic_draw;
  for (std::size_t b = 0; b < Q * Q; ++b) {
    auto row = theta.row(b);
    topic_draw.emplace_back(row.begin(), row.end());
  }
  std::vector<std::discrete_distribution<int>> word_draw;
  for (std::size_t k = 0; k < K; ++k) {
    auto row = config.beta.row(k);
    word_draw.emplace_back(row.begin(), row.end());
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> other_topic(0, K > 1 ? static_cast<int>(K) - 2 : 0);
  std::poisson_distribution<int> extra_docs(config.extra_docs_mean > 0 ? config.extra_docs_mean : 1.0);

  CorpusBuilder builder(config.directed);
  for (std::size_t i = 0; i < M; ++i) builder.add_vertex(std::to_string(i + 1));

  std::vector<std::vector<int>> edge_topics;
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = config.directed ? 0 : i + 1; j < M; ++j) {
      if (i == j) continue;
      const auto q = static_cast<std::size_t>(y[i]);
      const auto r = static_cast<std::size_t>(y[j]);
      if (unit(rng) >= config.pi(q, r)) continue;
      builder.add_edge(static_cast<VertexId>(i), static_cast<VertexId>(j));
      std::size_t n_docs = config.docs_per_edge;
      if (config.extra_docs_mean > 0) n_docs += static_cast<std::size_t>(extra_docs(rng));
      std::vector<int> topics;
      topics.reserve(n_docs * config.doc_length);
      for (std::size_t d = 0; d < n_docs; ++d) {
        tokens.clear();
        for (std::size_t n = 0; n < config.doc_length; ++n) {
          int k = topic_draw[q * Q + r](rng);
          if (config.topic_noise > 0.0 && unit(rng) < config.topic_noise) {
            const int alt = other_topic(rng);
            k = alt >= k ? alt + 1 : alt;
          }
          topics.push_back(k);
          tokens.push_back(config.vocabulary[static_cast<std::size_t>(word_draw[k](rng))]);
        }
        builder.add_document(static_cast<VertexId>(i), static_cast<VertexId>(j), tokens);
      }
      edge_topics.push_back(std::move(topics));
    }
  }

  Simulation sim{std::move(builder).build(), {}};
  sim.truth.y = std::move(y);
  sim.truth.edge_majority_topic.reserve(edge_topics.size());
  for (const auto& topics : edge_topics) {
    std::vector<double> hist(K, 0.0);
    for (int k : topics) hist[static_cast<std::size_t>(k)] += 1.0;
    sim.truth.edge_majority_topic.push_back(static_cast<int>(argmax(hist)));
  }
  sim.truth.edge_topics = std::move(edge_topics);
  return sim;
}

Scenario parse_scenario(std::string_view name) {
  if (name == "A" || name == "a") return Scenario::A;
  if (name == "B" || name == "b") return Scenario::B;
  if (name == "C" || name == "c") return Scenario::C;
  throw std::invalid_argument("unknown scenario '" + std::string(name) + "' (expected A, B or C)");
}

Difficulty parse_difficulty(std::string_view name) {
  if (name == "easy") return Difficulty::Easy;
  if (name == "hard1") return Difficulty::Hard1;
  if (name == "hard2") return Difficulty::Hard2;
  throw std::invalid_argument("unknown difficulty '" + std::string(name) +
                              "' (expected easy, hard1 or hard2)");
}

TopicWords beta_from_texts(std::span<const std::string> texts, const TokenizerOptions& options) {
  if (texts.empty()) throw std::invalid_argument("beta_from_texts needs at least one text");
  TopicWords out;
  std::vector<std::vector<WordId>> tokenized;
  for (const auto& text : texts) {
    auto tokens = tokenize(text, options);
    if (tokens.empty()) throw InputError("seed text is empty after tokenization");
    std::vector<WordId> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(out.vocabulary.add(t));
    tokenized.push_back(std::move(ids));
  }
  const std::size_t V = out.vocabulary.size();
  out.beta = Matrix(texts.size(), V);
  for (std::size_t k = 0; k < tokenized.size(); ++k) {
    auto row = out.beta.row(k);
    for (WordId w : tokenized[k]) row[w] += 1.0;
    const double n = static_cast<double>(tokenized[k].size());
    double sum = 0.0;
    for (double& x : row) {
      x = x / n + 1e-6;
      sum += x;
    }
    for (double& x : row) x /= sum;
  }
  return out;
}

GenConfig scenario_config(Scenario scenario, Difficulty difficulty, const TopicWords& seeds,
                          std::uint64_t seed) {
  GenConfig cfg;
  cfg.num_vertices = 100;
  cfg.directed = true;
  cfg.doc_length = 150;
  cfg.docs_per_edge = 1;
  cfg.seed = seed;
  switch (scenario) {
    case Scenario::A: cfg.num_clusters = 3; cfg.num_topics = 4; break;
    case Scenario::B: cfg.num_clusters = 2; cfg.num_topics = 3; break;
    case Scenario::C: cfg.num_clusters = 4; cfg.num_topics = 3; break;
  }
  const std::size_t Q = cfg.num_clusters;
  const std::size_t K = cfg.num_topics;
  if (seeds.beta.rows() < K) {
    throw std::invalid_argument("scenario needs at least " + std::to_string(K) + " seed texts");
  }

  cfg.rho.assign(Q, 1.0 / static_cast<double>(Q));
  const double between = difficulty == Difficulty::Hard1 ? 0.2 : 0.01;
  cfg.pi = Matrix(Q, Q);
  cfg.theta = Matrix(Q * Q, K);
  for (std::size_t q = 0; q < Q; ++q) {
    for (std::size_t r = 0; r < Q; ++r) {
      switch (scenario) {
        case Scenario::A:
          cfg.pi(q, r) = q == r ? 0.25 : between;
          cfg.theta(q * Q + r, q == r ? q : 3) = 1.0;
          break;
        case Scenario::B:
          cfg.pi(q, r) = 0.25;
          cfg.theta(q * Q + r, q == r ? q : 2) = 1.0;
          break;
        case Scenario::C: {
          // Groups 3 and 4 (0-based 2, 3) form one community.
          const bool same_community = q == r || (q >= 2 && r >= 2);
          cfg.pi(q, r) = same_community ? 0.25 : between;
          // Within-group topics: 1 for groups 1 and 3, 2 for groups 2 and 4.
          cfg.theta(q * Q + r, q == r ? q % 2 : 2) = 1.0;
          break;
        }
      }
    }
  }
  if (difficulty == Difficulty::Hard2) cfg.topic_noise = 0.4;

  cfg.beta = Matrix(K, seeds.beta.cols());
  for (std::size_t k = 0; k < K; ++k) {
    auto src = seeds.beta.row(k);
    std::copy(src.begin(), src.end(), cfg.beta.row(k).begin());
  }
  cfg.vocabulary = seeds.vocabulary.words();
  return cfg;
}

std::vector<std::string> bundled_seed_texts(const std::filesystem::path& dir) {
  const std::filesystem::path root = dir.empty() ? std::filesystem::path(STBM_DATA_DIR) / "seed_texts" : dir;
  std::vector<std::filesystem::path> files;
  if (!std::filesystem::is_directory(root)) throw InputError("seed text directory not found: " + root.string());
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError("no seed texts found in " + root.string());
  std::vector<std::string> texts;
  for (const auto& f : files) texts.push_back(read_file(f));
  return texts;
}

}  // namespace stbm
