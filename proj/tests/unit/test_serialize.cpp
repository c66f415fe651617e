#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "scratch.hpp"
#include "stbm/serialize.hpp"

using namespace stbm;

namespace {

void check_same_corpus(const Corpus& a, const Corpus& b) {
  REQUIRE(a.vertex_names() == b.vertex_names());
  REQUIRE(a.vocabulary().words() == b.vocabulary().words());
  REQUIRE(a.num_edges() == b.num_edges());
  CHECK(a.directed() == b.directed());
  for (std::size_t e = 0; e < a.num_edges(); ++e) {
    CHECK(a.edge(e).source == b.edge(e).source);
    CHECK(a.edge(e).target == b.edge(e).target);
    CHECK(a.edge(e).docs == b.edge(e).docs);
  }
}

Json small_config_json() {
  return Json::parse(R"({
    "num_vertices": 12, "num_clusters": 2, "num_topics": 2,
    "rho": [0.5, 0.5], "pi": [[0.6, 0.1], [0.1, 0.6]],
    "theta": [[1, 0], [0.5, 0.5], [0.5, 0.5], [0, 1]],
    "beta": [[0.7, 0.3, 0.0], [0.0, 0.2, 0.8]], "vocabulary": ["sun", "rain", "snow"],
    "doc_length": 5, "seed": 4
  })");
}

}  // namespace

TEST_CASE("corpus files round-trip") {
  ScratchDir dir;
  std::mt19937_64 rng(1);
  for (bool directed : {true, false}) {
    auto c = oracle::random_corpus(9, 7, directed, 0.3, 6, rng);
    write_edge_file(c, dir / "e.tsv");
    write_docs_file(c, dir / "d.tsv");
    check_same_corpus(c, load_corpus(dir / "e.tsv", dir / "d.tsv"));
  }
  auto sim = sample_corpus(gen_config_from_json(small_config_json()));
  write_edge_file(sim.corpus, dir / "e.tsv");
  write_docs_file(sim.corpus, dir / "d.tsv");
  check_same_corpus(sim.corpus, load_corpus(dir / "e.tsv", dir / "d.tsv"));
}

TEST_CASE("simulation config from JSON") {
  auto cfg = gen_config_from_json(small_config_json());
  CHECK(cfg.num_vertices == 12);
  CHECK(cfg.doc_length == 5);
  CHECK(cfg.directed);
  CHECK(cfg.seed == 4);
  CHECK(cfg.theta.rows() == 4);

  auto j = small_config_json();
  j.erase("beta");
  j.erase("vocabulary");
  auto bundled = gen_config_from_json(j);
  CHECK(bundled.beta.rows() == 2);
  CHECK(bundled.vocabulary.size() == bundled.beta.cols());

  auto bad = small_config_json();
  bad["rho"] = {0.9, 0.3};
  CHECK_THROWS_AS(gen_config_from_json(bad), InputError);
  bad = small_config_json();
  bad.erase("pi");
  CHECK_THROWS_AS(gen_config_from_json(bad), InputError);
  bad = small_config_json();
  bad["pi"] = {{0.5, 0.1}, {0.2}};
  CHECK_THROWS_AS(gen_config_from_json(bad), InputError);
  bad = small_config_json();
  bad["num_topics"] = "two";
  CHECK_THROWS_AS(gen_config_from_json(bad), InputError);
  bad = small_config_json();
  bad.erase("beta");
  bad.erase("vocabulary");
  bad["num_topics"] = 9;
  bad.erase("theta");
  CHECK_THROWS_AS(gen_config_from_json(bad), InputError);
}

TEST_CASE("truth file round-trip") {
  auto sim = sample_corpus(gen_config_from_json(small_config_json()));
  auto t = truth_from_json(truth_to_json(sim, "abc"));
  CHECK(t.vertices == sim.corpus.vertex_names());
  CHECK(t.y == sim.truth.y);
  CHECK(t.corpus_hash == "abc");
  CHECK(edge_partition(t.edge_majority_topic, sim.corpus) == sim.truth.edge_majority_topic);
  auto j = truth_to_json(sim, "abc");
  CHECK(j["y"][0].get<int>() >= 1);
  j["y"][0] = 0;
  CHECK_THROWS_AS(truth_from_json(j), InputError);
  CHECK_THROWS_AS(truth_from_json(Json::parse("{}")), InputError);
}

TEST_CASE("fit summary round-trip and report") {
  auto sim = sample_corpus(gen_config_from_json(small_config_json()));
  FitOptions opts;
  auto f = fit(sim.corpus, 2, 2, sim.truth.y, opts);
  f.icl = icl(f, sim.corpus).icl;
  auto s = summarize_fit(f, sim.corpus, "h1", 2);
  CHECK(s.top_words.size() == 2);
  CHECK(s.top_words[0].size() == 2);
  CHECK(s.icl.icl == doctest::Approx(f.icl));
  auto back = fit_from_json(fit_to_json(s));
  CHECK(back.y == s.y);
  CHECK(back.rho == s.rho);
  CHECK(back.pi == s.pi);
  CHECK(back.gamma == s.gamma);
  CHECK(back.bound_trace == s.bound_trace);
  CHECK(back.icl.pen_pi == s.icl.pen_pi);
  CHECK(back.edge_majority_topic == s.edge_majority_topic);
  CHECK(fit_to_json(back).dump() == fit_to_json(s).dump());

  const auto gml = meta_network_gml(s);
  CHECK(gml.rfind("graph [", 0) == 0);
  CHECK(gml.find("node [") != std::string::npos);
  const auto report = text_report(s);
  CHECK(report.find("Q=2 K=2") != std::string::npos);
  CHECK(report.find("most specific words") != std::string::npos);
}

TEST_CASE("top and specific words") {
  Vocabulary v({"a", "b", "c"});
  Matrix beta(2, 3);
  beta(0, 0) = 0.5, beta(0, 1) = 0.4, beta(0, 2) = 0.1;
  beta(1, 0) = 0.6, beta(1, 1) = 0.1, beta(1, 2) = 0.3;
  auto top = top_words(beta, v, 2);
  CHECK(top[0] == std::vector<std::string>{"a", "b"});
  CHECK(top[1] == std::vector<std::string>{"a", "c"});
  auto spec = specific_words(beta, v, 1);
  CHECK(spec[0] == std::vector<std::string>{"b"});
  CHECK(spec[1] == std::vector<std::string>{"c"});
}

TEST_CASE("manifest and beta file") {
  RunManifest m;
  m.command = "fit";
  m.argv = {"fit", "--Q", "2"};
  m.seeds = {{"seed", 3}};
  m.input_hashes = {{"edges", "00ff"}};
  m.output_hashes = {{"fit.json", "abcd"}};
  m.version = "x";
  m.wall_clock_seconds = 1.5;
  auto back = manifest_from_json(manifest_to_json(m));
  CHECK(back.argv == m.argv);
  CHECK(back.seeds == m.seeds);
  CHECK(back.output_hashes == m.output_hashes);
  CHECK_THROWS_AS(manifest_from_json(Json::parse("{\"command\": 1}")), InputError);

  ScratchDir dir;
  Vocabulary v({"x", "y"});
  Matrix beta(1, 2);
  beta(0, 0) = 0.25, beta(0, 1) = 0.75;
  write_beta_tsv(beta, v, dir / "sub" / "beta.tsv");
  CHECK(read_file(dir / "sub" / "beta.tsv") == "x\ty\n0.25\t0.75\n");
  CHECK(file_hash(dir / "sub" / "beta.tsv") == hex64(fnv1a("x\ty\n0.25\t0.75\n")));
  dir.write("bad.json", "{not json");
  CHECK_THROWS_AS(read_json(dir / "bad.json"), InputError);
}
