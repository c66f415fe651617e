#include "stbm/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "stbm/numeric.hpp"

namespace stbm {

std::uint64_t total_count(const SparseCounts& counts) {
  std::uint64_t n = 0;
  for (const auto& wc : counts) n += wc.count;
  return n;
}

SparseCounts add_counts(const SparseCounts& a, const SparseCounts& b) {
  SparseCounts out;
  out.reserve(a.size() + b.size());
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->word < ib->word)) {
      out.push_back(*ia++);
    } else if (ia == a.end() || ib->word < ia->word) {
      out.push_back(*ib++);
    } else {
      out.push_back({ia->word, ia->count + ib->count});
      ++ia;
      ++ib;
    }
  }
  return out;
}

void Assignment::validate(std::size_t num_vertices) const {
  if (labels.size() != num_vertices) {
    throw std::invalid_argument("assignment has " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(num_vertices) + " vertices");
  }
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= num_clusters) {
      throw std::invalid_argument("assignment label out of range");
    }
  }
}

Vocabulary::Vocabulary(std::vector<std::string> words) {
  for (auto& w : words) {
    if (index_.count(w)) throw std::invalid_argument("duplicate vocabulary word: " + w);
    index_.emplace(w, static_cast<WordId>(words_.size()));
    words_.push_back(std::move(w));
  }
}

WordId Vocabulary::add(std::string_view word) {
  auto it = index_.find(std::string(word));
  if (it != index_.end()) return it->second;
  const auto id = static_cast<WordId>(words_.size());
  words_.emplace_back(word);
  index_.emplace(words_.back(), id);
  return id;
}

std::optional<WordId> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t Corpus::key(VertexId i, VertexId j) const {
  if (!directed_ && i > j) std::swap(i, j);
  return (static_cast<std::uint64_t>(i) << 32) | j;
}

bool Corpus::has_edge(VertexId i, VertexId j) const { return edge_index(i, j).has_value(); }

std::optional<std::size_t> Corpus::edge_index(VertexId i, VertexId j) const {
  auto it = edge_lookup_.find(key(i, j));
  if (it == edge_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<VertexId> Corpus::vertex_id(std::string_view name) const {
  auto it = name_index_.find(std::string(name));
  if (it == name_index_.end()) return std::nullopt;
  return it->second;
}

CorpusBuilder::CorpusBuilder(bool directed) { corpus_.directed_ = directed; }

VertexId CorpusBuilder::add_vertex(std::string_view name) {
  auto [it, inserted] =
      corpus_.name_index_.emplace(std::string(name), static_cast<VertexId>(corpus_.names_.size()));
  if (inserted) {
    corpus_.names_.emplace_back(name);
    corpus_.out_.emplace_back();
    corpus_.in_.emplace_back();
  }
  return it->second;
}

bool CorpusBuilder::has_vertex(std::string_view name) const {
  return corpus_.name_index_.count(std::string(name)) > 0;
}

VertexId CorpusBuilder::vertex(std::string_view name) const {
  auto it = corpus_.name_index_.find(std::string(name));
  if (it == corpus_.name_index_.end()) throw InputError("unknown vertex '" + std::string(name) + "'");
  return it->second;
}

std::pair<VertexId, VertexId> CorpusBuilder::canonical(VertexId s, VertexId t) const {
  if (!corpus_.directed_ && s > t) std::swap(s, t);
  return {s, t};
}

void CorpusBuilder::add_edge(VertexId source, VertexId target) {
  if (source == target) {
    throw InputError("self-loop on vertex '" + corpus_.names_.at(source) + "'");
  }
  auto [s, t] = canonical(source, target);
  const auto k = corpus_.key(s, t);
  if (corpus_.edge_lookup_.count(k)) return;
  const auto e = static_cast<std::uint32_t>(corpus_.edges_.size());
  corpus_.edge_lookup_.emplace(k, e);
  EdgeDocuments ed;
  ed.source = s;
  ed.target = t;
  corpus_.edges_.push_back(std::move(ed));
  corpus_.out_[s].push_back(e);
  corpus_.in_[t].push_back(e);
}

void CorpusBuilder::add_document(VertexId source, VertexId target,
                                 std::span<const std::string> tokens) {
  auto e = corpus_.edge_index(source, target);
  if (!e) {
    throw InputError("document attached to non-edge (" + corpus_.names_.at(source) + ", " +
                     corpus_.names_.at(target) + ")");
  }
  if (tokens.empty()) {
    throw InputError("empty document on edge (" + corpus_.names_.at(source) + ", " +
                     corpus_.names_.at(target) + ")");
  }
  std::map<WordId, std::uint32_t> counts;
  for (const auto& tok : tokens) {
    const WordId w = corpus_.vocab_.add(tok);
    if (w >= word_totals_.size()) word_totals_.resize(w + 1, 0);
    ++word_totals_[w];
    ++counts[w];
  }
  SparseCounts doc;
  doc.reserve(counts.size());
  for (auto [w, c] : counts) doc.push_back({w, c});
  corpus_.edges_[*e].docs.push_back(std::move(doc));
}

Corpus CorpusBuilder::build(std::size_t min_count) && {
  Corpus c = std::move(corpus_);
  if (min_count > 1) {
    std::vector<std::string> kept;
    std::vector<std::int64_t> remap(c.vocab_.size(), -1);
    for (WordId w = 0; w < c.vocab_.size(); ++w) {
      if (word_totals_[w] >= min_count) {
        remap[w] = static_cast<std::int64_t>(kept.size());
        kept.push_back(c.vocab_.word(w));
      }
    }
    for (auto& edge : c.edges_) {
      std::vector<SparseCounts> docs;
      for (const auto& doc : edge.docs) {
        SparseCounts filtered;
        for (const auto& wc : doc) {
          if (remap[wc.word] >= 0) filtered.push_back({static_cast<WordId>(remap[wc.word]), wc.count});
        }
        if (!filtered.empty()) docs.push_back(std::move(filtered));
      }
      edge.docs = std::move(docs);
    }
    c.vocab_ = Vocabulary(std::move(kept));
  }
  c.total_tokens_ = 0;
  for (auto& edge : c.edges_) {
    edge.totals.clear();
    for (const auto& doc : edge.docs) edge.totals = add_counts(edge.totals, doc);
    edge.token_count = total_count(edge.totals);
    c.total_tokens_ += edge.token_count;
  }
  return c;
}

std::vector<std::string> tokenize(std::string_view text, const TokenizerOptions& options) {
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    std::size_t end = pos;
    while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
    if (end > pos) {
      std::string tok;
      tok.reserve(end - pos);
      for (std::size_t i = pos; i < end; ++i) {
        const auto ch = static_cast<unsigned char>(text[i]);
        if (options.strip_punctuation && ch < 128 && std::ispunct(ch)) continue;
        tok.push_back(options.lowercase && ch < 128 ? static_cast<char>(std::tolower(ch))
                                                    : static_cast<char>(ch));
      }
      if (!tok.empty() && !options.stop_words.count(tok)) tokens.push_back(std::move(tok));
    }
    pos = end;
  }
  return tokens;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::unordered_set<std::string> read_stop_words(const std::filesystem::path& path) {
  std::unordered_set<std::string> words;
  TokenizerOptions plain;
  for (auto& w : tokenize(read_file(path), plain)) words.insert(std::move(w));
  return words;
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line, std::size_t max_fields) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (fields.size() + 1 < max_fields) {
    auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) break;
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  fields.push_back(line.substr(start));
  return fields;
}

std::string_view trim_eol(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.remove_suffix(1);
  return line;
}

bool blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char ch) { return std::isspace(ch); });
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& edge_file, const std::filesystem::path& docs_file,
                   const LoadOptions& options) {
  std::ifstream edges(edge_file);
  if (!edges) throw InputError("cannot open edge file " + edge_file.string());

  std::string raw;
  std::optional<bool> directed;
  std::size_t line_no = 0;
  while (!directed && std::getline(edges, raw)) {
    ++line_no;
    auto line = trim_eol(raw);
    if (blank(line) || line.front() == '#') continue;
    if (line == "directed") {
      directed = true;
    } else if (line == "undirected") {
      directed = false;
    } else {
      throw InputError(edge_file.string() + ":" + std::to_string(line_no) +
                       ": expected header 'directed' or 'undirected'");
    }
  }
  if (!directed) throw InputError(edge_file.string() + ": missing header line");
  if (options.directed) directed = options.directed;

  CorpusBuilder builder(*directed);
  while (std::getline(edges, raw)) {
    ++line_no;
    auto line = trim_eol(raw);
    if (blank(line) || line.front() == '#') continue;
    auto fields = split_tabs(line, 3);
    if (fields.size() == 1) {
      builder.add_vertex(fields[0]);
    } else if (fields.size() == 2 && !fields[0].empty() && !fields[1].empty()) {
      const auto s = builder.add_vertex(fields[0]);
      const auto t = builder.add_vertex(fields[1]);
      try {
        builder.add_edge(s, t);
      } catch (const InputError& err) {
        throw InputError(edge_file.string() + ":" + std::to_string(line_no) + ": " + err.what());
      }
    } else {
      throw InputError(edge_file.string() + ":" + std::to_string(line_no) +
                       ": expected 'src<TAB>dst'");
    }
  }

  std::ifstream docs(docs_file);
  if (!docs) throw InputError("cannot open docs file " + docs_file.string());
  line_no = 0;
  while (std::getline(docs, raw)) {
    ++line_no;
    auto line = trim_eol(raw);
    if (blank(line)) continue;
    auto fields = split_tabs(line, 3);
    const auto where = docs_file.string() + ":" + std::to_string(line_no) + ": ";
    if (fields.size() != 3) throw InputError(where + "expected 'src<TAB>dst<TAB>text'");
    if (!builder.has_vertex(fields[0]) || !builder.has_vertex(fields[1])) {
      throw InputError(where + "document attached to a non-edge");
    }
    const auto tokens = tokenize(fields[2], options.tokenizer);
    try {
      builder.add_document(builder.vertex(fields[0]), builder.vertex(fields[1]), tokens);
    } catch (const InputError& err) {
      throw InputError(where + err.what());
    }
  }
  return std::move(builder).build(options.min_count);
}

SparseCounts aggregate_pair_documents(const Corpus& corpus, VertexId i, VertexId j) {
  auto e = corpus.edge_index(i, j);
  if (!e) throw std::invalid_argument("no edge between the requested vertices");
  return corpus.edge(*e).totals;
}

std::vector<SparseCounts> aggregate_cluster_documents(const Corpus& corpus, const Assignment& y,
                                                      std::size_t num_clusters) {
  if (y.num_clusters != num_clusters) throw std::invalid_argument("assignment cluster count mismatch");
  y.validate(corpus.num_vertices());
  const std::size_t Q = num_clusters;
  const std::size_t V = corpus.vocabulary().size();
  std::vector<std::vector<std::uint64_t>> dense(Q * Q);
  for (const auto& edge : corpus.edges()) {
    auto q = static_cast<std::size_t>(y[edge.source]);
    auto r = static_cast<std::size_t>(y[edge.target]);
    if (!corpus.directed() && q > r) std::swap(q, r);
    auto& acc = dense[q * Q + r];
    if (acc.empty()) acc.assign(V, 0);
    for (const auto& wc : edge.totals) acc[wc.word] += wc.count;
  }
  std::vector<SparseCounts> out(Q * Q);
  for (std::size_t b = 0; b < Q * Q; ++b) {
    for (std::size_t v = 0; v < dense[b].size(); ++v) {
      if (dense[b][v] > 0) {
        out[b].push_back({static_cast<WordId>(v), static_cast<std::uint32_t>(dense[b][v])});
      }
    }
  }
  if (!corpus.directed()) {
    for (std::size_t q = 0; q < Q; ++q) {
      for (std::size_t r = 0; r < q; ++r) out[q * Q + r] = out[r * Q + q];
    }
  }
  return out;
}

std::string corpus_file_hash(const std::filesystem::path& edge_file,
                             const std::filesystem::path& docs_file) {
  auto h = fnv1a(read_file(edge_file));
  h = fnv1a(read_file(docs_file), h);
  return hex64(h);
}

}  // namespace stbm
