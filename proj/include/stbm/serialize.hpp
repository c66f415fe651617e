#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "stbm/corpus.hpp"
#include "stbm/eval.hpp"
#include "stbm/generator.hpp"
#include "stbm/inference.hpp"
#include "stbm/selection.hpp"

namespace stbm {

using Json = nlohmann::ordered_json;

// Corpus files in the format read by load_corpus. Every vertex is
// declared first so isolated vertices survive a round trip; documents are
// written as their bag of words in word-id order.
void write_edge_file(const Corpus& corpus, const std::filesystem::path& path);
void write_docs_file(const Corpus& corpus, const std::filesystem::path& path);

/// Simulation settings read from JSON. Unless `beta` and `vocabulary` are
/// given, topics come from the seed texts (`seed_texts_dir` or bundled).
GenConfig gen_config_from_json(const Json& j);

struct TruthFile {
  std::vector<std::string> vertices;
  Assignment y;
  EdgeLabels edge_majority_topic;  // 0-based topics
  std::string corpus_hash;
};

Json truth_to_json(const Simulation& sim, const std::string& corpus_hash);
TruthFile truth_from_json(const Json& j);

/// Everything written about a fitted model; enough to rebuild the report.
struct FitSummary {
  std::size_t Q = 0, K = 0, M = 0, V = 0;
  bool directed = true;
  std::vector<std::string> vertices;
  Assignment y;
  std::vector<double> rho;
  Matrix pi;
  std::vector<double> alpha;
  Matrix gamma;  // row q*Q + r, mirrored when undirected
  std::vector<std::vector<std::string>> top_words;
  std::vector<std::vector<std::string>> specific_words;
  std::vector<double> bound_trace;
  double final_bound = 0;
  IclBreakdown icl;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  bool converged = false;
  std::string corpus_hash;
  EdgeLabels edge_majority_topic;  // 0-based topics
};

FitSummary summarize_fit(const FitResult& fit, const Corpus& corpus, const std::string& corpus_hash,
                         std::size_t n_top = 10);
Json fit_to_json(const FitSummary& s);
FitSummary fit_from_json(const Json& j);

/// Words ranked by beta_kv (top) and by beta_kv / sum_l beta_lv (specific).
std::vector<std::vector<std::string>> top_words(const Matrix& beta, const Vocabulary& vocab, std::size_t n);
std::vector<std::vector<std::string>> specific_words(const Matrix& beta, const Vocabulary& vocab, std::size_t n);

/// Cluster-level network in GML: nodes sized by rho, edges weighted by pi
/// and labelled with the dominant topic of the cluster pair.
std::string meta_network_gml(const FitSummary& s);

/// Plain-text summary of clusters, topics and connection probabilities.
std::string text_report(const FitSummary& s);

/// Dense beta as TSV: a header line of words, then one row per topic.
void write_beta_tsv(const Matrix& beta, const Vocabulary& vocab, const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::map<std::string, std::uint64_t> seeds;
  std::map<std::string, std::string> input_hashes;
  std::map<std::string, std::string> output_hashes;
  std::string version;
  double wall_clock_seconds = 0;
};

Json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const Json& j);

/// Content hash of a file (FNV-1a, hex).
std::string file_hash(const std::filesystem::path& path);

Json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace stbm
