#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace stbm {

using WordId = std::uint32_t;
using VertexId = std::uint32_t;

struct WordCount {
  WordId word = 0;
  std::uint32_t count = 0;
  friend bool operator==(const WordCount&, const WordCount&) = default;
};

/// Bag of words: entries sorted by word id, every count positive.
using SparseCounts = std::vector<WordCount>;

std::uint64_t total_count(const SparseCounts& counts);

/// Element-wise sum of two sparse count vectors.
SparseCounts add_counts(const SparseCounts& a, const SparseCounts& b);

/// Hard cluster labels, 0-based internally (files use 1-based labels).
struct Assignment {
  std::size_t num_clusters = 0;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  int operator[](std::size_t i) const { return labels[i]; }
  /// Throws std::invalid_argument unless size()==M and every label is in [0, num_clusters).
  void validate(std::size_t num_vertices) const;
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> words);

  /// Returns the id of `word`, inserting it if needed.
  WordId add(std::string_view word);
  std::optional<WordId> find(std::string_view word) const;

  const std::string& word(WordId id) const { return words_[id]; }
  const std::vector<std::string>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> index_;
};

/// Documents attached to one present edge. For undirected corpora
/// source < target always holds.
struct EdgeDocuments {
  VertexId source = 0;
  VertexId target = 0;
  std::vector<SparseCounts> docs;
  /// Sum of all docs; the quantity every inference step consumes.
  SparseCounts totals;
  std::uint64_t token_count = 0;
};

/// Immutable network with textual edges.
class Corpus {
 public:
  std::size_t num_vertices() const { return names_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  bool directed() const { return directed_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  const std::vector<std::string>& vertex_names() const { return names_; }
  const std::vector<EdgeDocuments>& edges() const { return edges_; }
  const EdgeDocuments& edge(std::size_t e) const { return edges_[e]; }

  /// A_ij. Symmetric for undirected corpora. A_ii == 0.
  bool has_edge(VertexId i, VertexId j) const;
  std::optional<std::size_t> edge_index(VertexId i, VertexId j) const;

  /// Edges whose stored source (resp. target) is `v`. For undirected
  /// corpora the union of both lists is the incidence list of `v`.
  std::span<const std::uint32_t> out_edges(VertexId v) const { return out_[v]; }
  std::span<const std::uint32_t> in_edges(VertexId v) const { return in_[v]; }

  std::uint64_t total_tokens() const { return total_tokens_; }
  std::optional<VertexId> vertex_id(std::string_view name) const;

 private:
  friend class CorpusBuilder;
  std::uint64_t key(VertexId i, VertexId j) const;

  bool directed_ = true;
  std::vector<std::string> names_;
  std::unordered_map<std::string, VertexId> name_index_;
  Vocabulary vocab_;
  std::vector<EdgeDocuments> edges_;
  std::unordered_map<std::uint64_t, std::uint32_t> edge_lookup_;
  std::vector<std::vector<std::uint32_t>> out_;
  std::vector<std::vector<std::uint32_t>> in_;
  std::uint64_t total_tokens_ = 0;
};

/// Incremental construction shared by the file loader and the simulator,
/// so both produce identical vertex and vocabulary orderings.
class CorpusBuilder {
 public:
  explicit CorpusBuilder(bool directed);

  VertexId add_vertex(std::string_view name);
  /// Duplicate edges merge. Throws InputError on self-loops.
  void add_edge(VertexId source, VertexId target);
  /// Throws InputError when the pair is not an edge or `tokens` is empty.
  void add_document(VertexId source, VertexId target, std::span<const std::string> tokens);

  std::size_t num_vertices() const { return corpus_.names_.size(); }
  bool has_vertex(std::string_view name) const;
  VertexId vertex(std::string_view name) const;

  /// Drops words seen fewer than `min_count` times; documents left empty
  /// by the filter are dropped.
  Corpus build(std::size_t min_count = 1) &&;

 private:
  std::pair<VertexId, VertexId> canonical(VertexId s, VertexId t) const;

  Corpus corpus_;
  std::vector<std::uint64_t> word_totals_;
};

struct TokenizerOptions {
  bool lowercase = true;
  bool strip_punctuation = true;
  std::unordered_set<std::string> stop_words;
};

/// Whitespace split, then ASCII lowercase and punctuation removal per options.
std::vector<std::string> tokenize(std::string_view text, const TokenizerOptions& options = {});

std::unordered_set<std::string> read_stop_words(const std::filesystem::path& path);

struct LoadOptions {
  TokenizerOptions tokenizer;
  std::size_t min_count = 1;
  /// Overrides the header line of the edge file when set.
  std::optional<bool> directed;
};

/// Reads the edge file (header `directed`/`undirected`, then `src<TAB>dst`
/// lines; a single-field line declares an isolated vertex; `#` starts a
/// comment) and the docs file (`src<TAB>dst<TAB>text`).
Corpus load_corpus(const std::filesystem::path& edge_file, const std::filesystem::path& docs_file,
                   const LoadOptions& options = {});

/// Sum of the count vectors of all documents on edge (i, j).
SparseCounts aggregate_pair_documents(const Corpus& corpus, VertexId i, VertexId j);

/// Meta-documents: entry q*Q + r sums documents on edges from cluster q to
/// cluster r. For undirected corpora entries (q,r) and (r,q) are equal and
/// hold every edge between the two clusters.
std::vector<SparseCounts> aggregate_cluster_documents(const Corpus& corpus, const Assignment& y,
                                                      std::size_t num_clusters);

/// FNV-1a over the edge and docs file contents.
std::string corpus_file_hash(const std::filesystem::path& edge_file,
                             const std::filesystem::path& docs_file);

std::string read_file(const std::filesystem::path& path);

}  // namespace stbm
