#include "stbm/serialize.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace stbm {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, const char* what) {
  if (!j.is_array()) throw InputError(std::string(what) + " must be an array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? j[0].size() : 0;
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw InputError(std::string(what) + " rows differ in length");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

Json edge_labels_to_json(const EdgeLabels& labels) {
  Json out = Json::array();
  for (const auto& [key, k] : labels) out.push_back(Json::array({key.first, key.second, k + 1}));
  return out;
}

EdgeLabels edge_labels_from_json(const Json& j) {
  EdgeLabels out;
  for (const auto& item : j) {
    if (!item.is_array() || item.size() != 3) throw InputError("edge label entries must be [source, target, topic]");
    out[{item[0].get<std::string>(), item[1].get<std::string>()}] = item[2].get<int>() - 1;
  }
  return out;
}

std::vector<int> one_based(const Assignment& y) {
  std::vector<int> out(y.labels);
  for (int& l : out) ++l;
  return out;
}

Assignment from_one_based(const std::vector<int>& labels, std::size_t Q) {
  Assignment y{Q, labels};
  for (int& l : y.labels) --l;
  y.validate(labels.size());
  return y;
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

std::string gml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"') out += "&quot;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace

void write_edge_file(const Corpus& corpus, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << (corpus.directed() ? "directed" : "undirected") << '\n';
  const auto& names = corpus.vertex_names();
  for (const auto& name : names) out << name << '\n';
  for (const auto& e : corpus.edges()) out << names[e.source] << '\t' << names[e.target] << '\n';
}

void write_docs_file(const Corpus& corpus, const std::filesystem::path& path) {
  auto out = open_out(path);
  const auto& names = corpus.vertex_names();
  const auto& vocab = corpus.vocabulary();
  for (const auto& e : corpus.edges()) {
    for (const auto& doc : e.docs) {
      out << names[e.source] << '\t' << names[e.target] << '\t';
      bool first = true;
      for (const auto& wc : doc) {
        for (std::uint32_t c = 0; c < wc.count; ++c) {
          if (!first) out << ' ';
          out << vocab.word(wc.word);
          first = false;
        }
      }
      out << '\n';
    }
  }
}

GenConfig gen_config_from_json(const Json& j) {
  try {
    GenConfig c;
    c.num_vertices = j.at("num_vertices").get<std::size_t>();
    c.num_clusters = j.at("num_clusters").get<std::size_t>();
    c.num_topics = j.at("num_topics").get<std::size_t>();
    c.directed = get_or(j, "directed", true);
    c.rho = j.at("rho").get<std::vector<double>>();
    c.pi = matrix_from_json(j.at("pi"), "pi");
    if (j.contains("theta")) c.theta = matrix_from_json(j.at("theta"), "theta");
    c.alpha = get_or(j, "alpha", std::vector<double>(c.num_topics, 1.0));
    c.doc_length = get_or<std::size_t>(j, "doc_length", 150);
    c.docs_per_edge = get_or<std::size_t>(j, "docs_per_edge", 1);
    c.extra_docs_mean = get_or(j, "extra_docs_mean", 0.0);
    c.topic_noise = get_or(j, "topic_noise", 0.0);
    c.seed = get_or<std::uint64_t>(j, "seed", 0);
    if (j.contains("beta")) {
      c.beta = matrix_from_json(j.at("beta"), "beta");
      c.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
    } else {
      const auto texts = bundled_seed_texts(get_or<std::string>(j, "seed_texts_dir", ""));
      auto seeds = beta_from_texts(texts);
      if (seeds.beta.rows() < c.num_topics) {
        throw InputError("config asks for more topics than there are seed texts");
      }
      c.beta = Matrix(c.num_topics, seeds.beta.cols());
      for (std::size_t k = 0; k < c.num_topics; ++k) {
        std::copy(seeds.beta.row(k).begin(), seeds.beta.row(k).end(), c.beta.row(k).begin());
      }
      c.vocabulary = seeds.vocabulary.words();
    }
    c.validate();
    return c;
  } catch (const Json::exception& e) {
    throw InputError(std::string("bad simulation config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("bad simulation config: ") + e.what());
  }
}

Json truth_to_json(const Simulation& sim, const std::string& corpus_hash) {
  Json j;
  j["vertices"] = sim.corpus.vertex_names();
  j["num_clusters"] = sim.truth.y.num_clusters;
  j["y"] = one_based(sim.truth.y);
  j["edge_majority_topic"] = edge_labels_to_json(label_edges(sim.corpus, sim.truth.edge_majority_topic));
  j["corpus_hash"] = corpus_hash;
  return j;
}

TruthFile truth_from_json(const Json& j) {
  try {
    TruthFile t;
    t.vertices = j.at("vertices").get<std::vector<std::string>>();
    t.y = from_one_based(j.at("y").get<std::vector<int>>(), j.at("num_clusters").get<std::size_t>());
    if (t.y.size() != t.vertices.size()) throw InputError("truth: y and vertices differ in length");
    t.edge_majority_topic = edge_labels_from_json(j.at("edge_majority_topic"));
    t.corpus_hash = j.at("corpus_hash").get<std::string>();
    return t;
  } catch (const Json::exception& e) {
    throw InputError(std::string("bad truth file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("bad truth file: ") + e.what());
  }
}

std::vector<std::vector<std::string>> top_words(const Matrix& beta, const Vocabulary& vocab, std::size_t n) {
  std::vector<std::vector<std::string>> out(beta.rows());
  std::vector<std::size_t> order(beta.cols());
  for (std::size_t k = 0; k < beta.rows(); ++k) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t take = std::min(n, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        return beta(k, a) != beta(k, b) ? beta(k, a) > beta(k, b) : a < b;
                      });
    for (std::size_t i = 0; i < take; ++i) out[k].push_back(vocab.word(static_cast<WordId>(order[i])));
  }
  return out;
}

std::vector<std::vector<std::string>> specific_words(const Matrix& beta, const Vocabulary& vocab, std::size_t n) {
  const std::size_t K = beta.rows();
  const std::size_t V = beta.cols();
  std::vector<double> col_sum(V, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t v = 0; v < V; ++v) col_sum[v] += beta(k, v);
  }
  std::vector<std::vector<std::string>> out(K);
  std::vector<std::size_t> order(V);
  for (std::size_t k = 0; k < K; ++k) {
    auto score = [&](std::size_t v) { return col_sum[v] > 0 ? beta(k, v) / col_sum[v] : 0.0; };
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t take = std::min(n, V);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        const double sa = score(a), sb = score(b);
                        if (sa != sb) return sa > sb;
                        if (beta(k, a) != beta(k, b)) return beta(k, a) > beta(k, b);
                        return a < b;
                      });
    for (std::size_t i = 0; i < take; ++i) out[k].push_back(vocab.word(static_cast<WordId>(order[i])));
  }
  return out;
}

FitSummary summarize_fit(const FitResult& fit, const Corpus& corpus, const std::string& corpus_hash,
                         std::size_t n_top) {
  FitSummary s;
  s.Q = fit.num_clusters;
  s.K = fit.num_topics;
  s.M = corpus.num_vertices();
  s.V = corpus.vocabulary().size();
  s.directed = corpus.directed();
  s.vertices = corpus.vertex_names();
  s.y = fit.assignment;
  s.rho = fit.params.rho;
  s.pi = fit.params.pi;
  s.alpha = fit.params.alpha;
  const BlockLayout layout(s.Q, s.directed);
  s.gamma = Matrix(s.Q * s.Q, s.K);
  for (std::size_t q = 0; q < s.Q; ++q) {
    for (std::size_t r = 0; r < s.Q; ++r) {
      auto src = fit.vstate.gamma.row(layout.index(q, r));
      std::copy(src.begin(), src.end(), s.gamma.row(q * s.Q + r).begin());
    }
  }
  s.top_words = top_words(fit.params.beta, corpus.vocabulary(), n_top);
  s.specific_words = specific_words(fit.params.beta, corpus.vocabulary(), n_top);
  s.bound_trace = fit.bound_trace;
  s.final_bound = fit.final_bound;
  s.icl = icl(fit, corpus);
  s.seed = fit.seed;
  s.iterations = fit.iterations;
  s.converged = fit.converged;
  s.corpus_hash = corpus_hash;
  s.edge_majority_topic = label_edges(corpus, edge_majority_topics(corpus, fit.vstate));
  return s;
}

Json fit_to_json(const FitSummary& s) {
  Json j;
  j["Q"] = s.Q;
  j["K"] = s.K;
  j["directed"] = s.directed;
  j["M"] = s.M;
  j["V"] = s.V;
  j["vertices"] = s.vertices;
  j["y"] = one_based(s.y);
  j["rho"] = s.rho;
  j["pi"] = matrix_to_json(s.pi);
  j["alpha"] = s.alpha;
  Json gamma = Json::array();
  for (std::size_t q = 0; q < s.Q; ++q) {
    Json row = Json::array();
    for (std::size_t r = 0; r < s.Q; ++r) {
      auto g = s.gamma.row(q * s.Q + r);
      row.push_back(std::vector<double>(g.begin(), g.end()));
    }
    gamma.push_back(std::move(row));
  }
  j["gamma"] = std::move(gamma);
  j["beta_top_words"] = s.top_words;
  j["specific_words"] = s.specific_words;
  j["bound_trace"] = s.bound_trace;
  j["final_bound"] = s.final_bound;
  j["bound_lda"] = s.icl.bound_lda;
  j["icl"] = s.icl.icl;
  j["icl_breakdown"] = {{"bound_lda", s.icl.bound_lda}, {"pen_lda", s.icl.pen_lda},
                        {"sbm_loglik", s.icl.sbm_loglik}, {"pen_pi", s.icl.pen_pi},
                        {"pen_rho", s.icl.pen_rho},       {"icl", s.icl.icl}};
  j["seed"] = s.seed;
  j["iterations"] = s.iterations;
  j["converged"] = s.converged;
  j["corpus_hash"] = s.corpus_hash;
  j["edge_majority_topic"] = edge_labels_to_json(s.edge_majority_topic);
  return j;
}

FitSummary fit_from_json(const Json& j) {
  try {
    FitSummary s;
    s.Q = j.at("Q").get<std::size_t>();
    s.K = j.at("K").get<std::size_t>();
    s.directed = j.at("directed").get<bool>();
    s.M = j.at("M").get<std::size_t>();
    s.V = j.at("V").get<std::size_t>();
    s.vertices = j.at("vertices").get<std::vector<std::string>>();
    s.y = from_one_based(j.at("y").get<std::vector<int>>(), s.Q);
    s.rho = j.at("rho").get<std::vector<double>>();
    s.pi = matrix_from_json(j.at("pi"), "pi");
    s.alpha = j.at("alpha").get<std::vector<double>>();
    s.gamma = Matrix(s.Q * s.Q, s.K);
    const auto& gamma = j.at("gamma");
    for (std::size_t q = 0; q < s.Q; ++q) {
      for (std::size_t r = 0; r < s.Q; ++r) {
        const auto g = gamma.at(q).at(r).get<std::vector<double>>();
        if (g.size() != s.K) throw InputError("gamma entries must have K values");
        std::copy(g.begin(), g.end(), s.gamma.row(q * s.Q + r).begin());
      }
    }
    s.top_words = j.at("beta_top_words").get<std::vector<std::vector<std::string>>>();
    s.specific_words = j.at("specific_words").get<std::vector<std::vector<std::string>>>();
    s.bound_trace = j.at("bound_trace").get<std::vector<double>>();
    s.final_bound = j.at("final_bound").get<double>();
    const auto& b = j.at("icl_breakdown");
    s.icl = {b.at("bound_lda").get<double>(), b.at("pen_lda").get<double>(), b.at("sbm_loglik").get<double>(),
             b.at("pen_pi").get<double>(),    b.at("pen_rho").get<double>(), b.at("icl").get<double>()};
    s.seed = j.at("seed").get<std::uint64_t>();
    s.iterations = j.at("iterations").get<std::size_t>();
    s.converged = j.at("converged").get<bool>();
    s.corpus_hash = j.at("corpus_hash").get<std::string>();
    s.edge_majority_topic = edge_labels_from_json(j.at("edge_majority_topic"));
    return s;
  } catch (const Json::exception& e) {
    throw InputError(std::string("bad fit file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("bad fit file: ") + e.what());
  }
}

std::string meta_network_gml(const FitSummary& s) {
  std::ostringstream out;
  out << std::setprecision(10);
  out << "graph [\n  directed " << (s.directed ? 1 : 0) << '\n';
  for (std::size_t q = 0; q < s.Q; ++q) {
    out << "  node [\n    id " << q + 1 << "\n    label \"cluster " << q + 1 << "\"\n    size " << s.rho[q]
        << "\n  ]\n";
  }
  for (std::size_t q = 0; q < s.Q; ++q) {
    for (std::size_t r = 0; r < s.Q; ++r) {
      if (!s.directed && r < q) continue;
      if (s.pi(q, r) <= 0.0) continue;
      std::vector<double> counts(s.K);
      for (std::size_t k = 0; k < s.K; ++k) counts[k] = s.gamma(q * s.Q + r, k) - s.alpha[k];
      const std::size_t topic = argmax(counts) + 1;
      std::string words;
      if (topic - 1 < s.top_words.size()) {
        for (std::size_t i = 0; i < std::min<std::size_t>(3, s.top_words[topic - 1].size()); ++i) {
          words += (i ? " " : "") + s.top_words[topic - 1][i];
        }
      }
      out << "  edge [\n    source " << q + 1 << "\n    target " << r + 1 << "\n    weight " << s.pi(q, r)
          << "\n    topic " << topic << "\n    label \"" << gml_escape(words) << "\"\n  ]\n";
    }
  }
  out << "]\n";
  return out.str();
}

std::string text_report(const FitSummary& s) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "Q=" << s.Q << " K=" << s.K << " M=" << s.M << " V=" << s.V << (s.directed ? " directed" : " undirected")
      << "\n";
  out << "converged=" << (s.converged ? "yes" : "no") << " iterations=" << s.iterations
      << " bound=" << s.final_bound << " icl=" << s.icl.icl << "\n\n";

  std::vector<std::size_t> sizes(s.Q, 0);
  for (int l : s.y.labels) ++sizes[static_cast<std::size_t>(l)];
  out << "clusters\n";
  for (std::size_t q = 0; q < s.Q; ++q) {
    out << "  " << q + 1 << ": " << sizes[q] << " vertices, rho=" << s.rho[q] << "\n";
  }
  out << "\nconnection probabilities (row -> column)\n";
  for (std::size_t q = 0; q < s.Q; ++q) {
    out << " ";
    for (std::size_t r = 0; r < s.Q; ++r) out << ' ' << s.pi(q, r);
    out << "\n";
  }
  out << "\ntop words\n";
  for (std::size_t k = 0; k < s.top_words.size(); ++k) {
    out << "  topic " << k + 1 << ":";
    for (const auto& w : s.top_words[k]) out << ' ' << w;
    out << "\n";
  }
  out << "\nmost specific words\n";
  for (std::size_t k = 0; k < s.specific_words.size(); ++k) {
    out << "  topic " << k + 1 << ":";
    for (const auto& w : s.specific_words[k]) out << ' ' << w;
    out << "\n";
  }
  return out.str();
}

void write_beta_tsv(const Matrix& beta, const Vocabulary& vocab, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << std::setprecision(17);
  for (std::size_t v = 0; v < vocab.size(); ++v) out << (v ? "\t" : "") << vocab.word(static_cast<WordId>(v));
  out << '\n';
  for (std::size_t k = 0; k < beta.rows(); ++k) {
    for (std::size_t v = 0; v < beta.cols(); ++v) out << (v ? "\t" : "") << beta(k, v);
    out << '\n';
  }
}

Json manifest_to_json(const RunManifest& m) {
  Json j;
  j["command"] = m.command;
  j["argv"] = m.argv;
  j["seeds"] = m.seeds;
  j["input_hashes"] = m.input_hashes;
  j["output_hashes"] = m.output_hashes;
  j["version"] = m.version;
  j["wall_clock_seconds"] = m.wall_clock_seconds;
  return j;
}

RunManifest manifest_from_json(const Json& j) {
  try {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.argv = j.at("argv").get<std::vector<std::string>>();
    m.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
    m.input_hashes = j.at("input_hashes").get<std::map<std::string, std::string>>();
    m.output_hashes = j.at("output_hashes").get<std::map<std::string, std::string>>();
    m.version = j.at("version").get<std::string>();
    m.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
    return m;
  } catch (const Json::exception& e) {
    throw InputError(std::string("bad manifest: ") + e.what());
  }
}

std::string file_hash(const std::filesystem::path& path) { return hex64(fnv1a(read_file(path))); }

Json read_json(const std::filesystem::path& path) {
  const auto text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

}  // namespace stbm
