#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "scratch.hpp"
#include "stbm/corpus.hpp"
#include "stbm/numeric.hpp"

using namespace stbm;

namespace {

SparseCounts counts_of(const Corpus& c, std::initializer_list<std::pair<const char*, std::uint32_t>> wc) {
  SparseCounts out;
  for (auto [w, n] : wc) out.push_back({*c.vocabulary().find(w), n});
  std::sort(out.begin(), out.end(), [](auto a, auto b) { return a.word < b.word; });
  return out;
}

Corpus load(const ScratchDir& dir, const std::string& edges, const std::string& docs,
            const LoadOptions& opts = {}) {
  return load_corpus(dir.write("e.tsv", edges), dir.write("d.tsv", docs), opts);
}

}  // namespace

TEST_CASE("tokenize lowercases and strips punctuation") {
  auto toks = tokenize("Hello, World!  it's  --  fine");
  CHECK(toks == std::vector<std::string>{"hello", "world", "its", "fine"});

  TokenizerOptions keep;
  keep.lowercase = false;
  keep.strip_punctuation = false;
  CHECK(tokenize("A, b", keep) == std::vector<std::string>{"A,", "b"});

  TokenizerOptions stop;
  stop.stop_words = {"the"};
  CHECK(tokenize("The cat the", stop) == std::vector<std::string>{"cat"});
}

TEST_CASE("vocabulary index is the inverse of the word list") {
  Vocabulary v;
  CHECK(v.add("x") == 0);
  CHECK(v.add("y") == 1);
  CHECK(v.add("x") == 0);
  CHECK(v.size() == 2);
  CHECK(*v.find("y") == 1);
  CHECK_FALSE(v.find("z"));
  CHECK_THROWS_AS(Vocabulary({"a", "a"}), std::invalid_argument);
}

TEST_CASE("two vertices, one edge, text a b a") {
  ScratchDir dir;
  auto c = load(dir, "directed\n1\t2\n", "1\t2\ta b a\n");
  CHECK(c.num_vertices() == 2);
  CHECK(c.vocabulary().size() == 2);
  CHECK(c.directed());
  CHECK(c.has_edge(0, 1));
  CHECK_FALSE(c.has_edge(1, 0));
  CHECK(c.edge(0).totals == counts_of(c, {{"a", 2}, {"b", 1}}));
  CHECK(c.total_tokens() == 3);
}

TEST_CASE("duplicate edge lines merge their documents") {
  ScratchDir dir;
  auto c = load(dir, "directed\na\tb\na\tb\n", "a\tb\tx\na\tb\tx y\n");
  CHECK(c.num_edges() == 1);
  CHECK(c.edge(0).docs.size() == 2);
  CHECK(c.edge(0).totals == counts_of(c, {{"x", 2}, {"y", 1}}));
}

TEST_CASE("comments, blank lines and isolated vertices") {
  ScratchDir dir;
  auto c = load(dir, "# header comment\n\ndirected\nlonely\nu\tv\n# more\n", "u\tv\thi\n");
  CHECK(c.num_vertices() == 3);
  CHECK(c.vertex_names()[0] == "lonely");
  CHECK(c.out_edges(0).empty());
  CHECK(c.in_edges(0).empty());
}

TEST_CASE("CRLF line endings are accepted") {
  ScratchDir dir;
  auto c = load(dir, "directed\r\na\tb\r\n", "a\tb\tone two\r\n");
  CHECK(c.vertex_names()[1] == "b");
  CHECK(c.edge(0).token_count == 2);
}

TEST_CASE("load errors") {
  ScratchDir dir;
  CHECK_THROWS_AS(load(dir, "directed\na\ta\n", ""), InputError);
  CHECK_THROWS_AS(load(dir, "directed\na\tb\n", "b\ta\ttext\n"), InputError);
  CHECK_THROWS_AS(load(dir, "directed\na\tb\nc\n", "a\tc\ttext\n"), InputError);
  CHECK_THROWS_AS(load(dir, "directed\na\tb\n", "a\tb\t!!!\n"), InputError);
  CHECK_THROWS_AS(load(dir, "directed\na\tb\n", "a\tb\n"), InputError);
  CHECK_THROWS_AS(load(dir, "sideways\na\tb\n", ""), InputError);
  CHECK_THROWS_AS(load(dir, "", ""), InputError);
  CHECK_THROWS_AS(load_corpus(dir / "missing.tsv", dir / "missing2.tsv"), InputError);

  try {
    load(dir, "directed\na\tb\nc\tc\n", "");
    FAIL("expected a self-loop error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
}

TEST_CASE("undirected corpora store each pair once") {
  ScratchDir dir;
  auto c = load(dir, "undirected\nb\ta\na\tb\n", "a\tb\tx\nb\ta\ty\n");
  CHECK_FALSE(c.directed());
  CHECK(c.num_edges() == 1);
  CHECK(c.has_edge(0, 1));
  CHECK(c.has_edge(1, 0));
  CHECK(c.edge(0).source < c.edge(0).target);
  CHECK(c.edge(0).docs.size() == 2);
  CHECK(aggregate_pair_documents(c, 0, 1) == aggregate_pair_documents(c, 1, 0));
}

TEST_CASE("directed override of the header") {
  ScratchDir dir;
  LoadOptions opts;
  opts.directed = false;
  auto c = load(dir, "directed\na\tb\nb\ta\n", "a\tb\tx\n", opts);
  CHECK_FALSE(c.directed());
  CHECK(c.num_edges() == 1);
}

TEST_CASE("min_count drops rare words and emptied documents") {
  ScratchDir dir;
  LoadOptions opts;
  opts.min_count = 2;
  auto c = load(dir, "directed\na\tb\nb\tc\n", "a\tb\tx x y\nb\tc\tz\n", opts);
  CHECK(c.vocabulary().size() == 1);
  CHECK(c.vocabulary().word(0) == "x");
  CHECK(c.edge(0).token_count == 2);
  CHECK(c.edge(1).docs.empty());
  CHECK(c.has_edge(1, 2));
  CHECK(c.total_tokens() == 2);
}

TEST_CASE("stop-word file") {
  ScratchDir dir;
  auto sw = read_stop_words(dir.write("stop.txt", "The\nand\n\n"));
  CHECK(sw.count("the"));
  CHECK(sw.count("and"));
  LoadOptions opts;
  opts.tokenizer.stop_words = sw;
  auto c = load(dir, "directed\na\tb\n", "a\tb\tthe cat and dog\n", opts);
  CHECK(c.vocabulary().size() == 2);
}

TEST_CASE("aggregate_pair_documents") {
  ScratchDir dir;
  auto c = load(dir, "directed\n1\t2\n2\t1\n", "1\t2\ta\n1\t2\ta a b\n2\t1\tc\n");
  CHECK(aggregate_pair_documents(c, 0, 1) == counts_of(c, {{"a", 3}, {"b", 1}}));
  CHECK(aggregate_pair_documents(c, 1, 0) == counts_of(c, {{"c", 1}}));
  CHECK_THROWS_AS(aggregate_pair_documents(c, 0, 0), std::invalid_argument);
}

TEST_CASE("aggregate_cluster_documents") {
  ScratchDir dir;
  auto c = load(dir, "directed\n1\n2\n3\n1\t3\n2\t3\n", "1\t3\ta\n2\t3\tb\n");
  Assignment y{2, {0, 0, 1}};
  auto meta = aggregate_cluster_documents(c, y, 2);
  REQUIRE(meta.size() == 4);
  CHECK(meta[0 * 2 + 1] == counts_of(c, {{"a", 1}, {"b", 1}}));
  CHECK(meta[1 * 2 + 0].empty());
  CHECK(meta[0].empty());

  Assignment one{1, {0, 0, 0}};
  auto all = aggregate_cluster_documents(c, one, 1);
  CHECK(all.size() == 1);
  CHECK(total_count(all[0]) == c.total_tokens());
}

TEST_CASE("property: token totals and identity aggregation on random corpora") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const bool directed = trial % 2 == 0;
    auto c = oracle::random_corpus(3 + trial % 8, 6, directed, 0.4, 5, rng);
    std::uint64_t sum = 0;
    for (const auto& e : c.edges())
      for (const auto& d : e.docs) sum += total_count(d);
    CHECK(sum == c.total_tokens());

    const auto M = c.num_vertices();
    Assignment id{M, std::vector<int>(M)};
    std::iota(id.labels.begin(), id.labels.end(), 0);
    auto meta = aggregate_cluster_documents(c, id, M);
    for (VertexId i = 0; i < M; ++i)
      for (VertexId j = 0; j < M; ++j) {
        if (c.has_edge(i, j)) {
          CHECK(meta[i * M + j] == aggregate_pair_documents(c, i, j));
        } else {
          CHECK(meta[i * M + j].empty());
        }
        if (!directed) CHECK(c.has_edge(i, j) == c.has_edge(j, i));
      }
    for (VertexId i = 0; i < M; ++i) CHECK_FALSE(c.has_edge(i, i));
  }
}

TEST_CASE("assignment validation") {
  Assignment y{2, {0, 1, 1}};
  CHECK_NOTHROW(y.validate(3));
  CHECK_THROWS_AS(y.validate(4), std::invalid_argument);
  Assignment bad{2, {0, 2, 1}};
  CHECK_THROWS_AS(bad.validate(3), std::invalid_argument);
}

TEST_CASE("corpus_file_hash changes with content") {
  ScratchDir dir;
  auto e = dir.write("e.tsv", "directed\na\tb\n");
  auto d = dir.write("d.tsv", "a\tb\tx\n");
  auto h1 = corpus_file_hash(e, d);
  CHECK(h1 == corpus_file_hash(e, d));
  dir.write("d.tsv", "a\tb\ty\n");
  CHECK(h1 != corpus_file_hash(e, d));
}
