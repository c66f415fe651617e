#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "stbm/corpus.hpp"
#include "stbm/numeric.hpp"

namespace stbm {

/// Parameters of a synthetic network with textual edges.
///
/// `theta` holds one topic-proportion row per cluster pair (row q*Q + r).
/// When it is empty, each row is drawn from Dirichlet(alpha) instead.
struct GenConfig {
  std::size_t num_vertices = 100;
  std::size_t num_clusters = 1;
  std::size_t num_topics = 1;
  bool directed = true;
  std::vector<double> rho;
  Matrix pi;
  Matrix theta;
  std::vector<double> alpha;
  Matrix beta;
  std::vector<std::string> vocabulary;
  std::size_t doc_length = 150;
  std::size_t docs_per_edge = 1;
  /// Each edge carries docs_per_edge + Poisson(extra_docs_mean) documents.
  double extra_docs_mean = 0.0;
  /// Probability that a word's topic is redrawn uniformly among the other topics.
  double topic_noise = 0.0;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
};

struct GroundTruth {
  Assignment y;
  /// Per corpus edge: topic of every sampled word, in sampling order.
  std::vector<std::vector<int>> edge_topics;
  /// Per corpus edge: argmax of the topic histogram (ties to the lowest topic).
  std::vector<int> edge_majority_topic;
};

struct Simulation {
  Corpus corpus;
  GroundTruth truth;
};

Simulation sample_corpus(const GenConfig& config);

enum class Scenario { A, B, C };
enum class Difficulty { Easy, Hard1, Hard2 };

Scenario parse_scenario(std::string_view name);
Difficulty parse_difficulty(std::string_view name);

struct TopicWords {
  Matrix beta;
  Vocabulary vocabulary;
};

/// Row k is the smoothed empirical word distribution of texts[k] over the
/// union vocabulary.
TopicWords beta_from_texts(std::span<const std::string> texts, const TokenizerOptions& options = {});

/// Benchmark settings: A (3 communities, 4 topics), B (2 groups told apart
/// only by topics), C (4 groups, two of which share a community and differ
/// by topic). Hard1 weakens communities to 0.25 vs 0.2 (B unchanged); Hard2
/// redraws 40% of word topics.
GenConfig scenario_config(Scenario scenario, Difficulty difficulty, const TopicWords& seeds,
                          std::uint64_t seed = 0);

/// The four seed texts shipped in data/seed_texts (or `dir` when given).
std::vector<std::string> bundled_seed_texts(const std::filesystem::path& dir = {});

}  // namespace stbm
