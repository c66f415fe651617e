#include "stbm/cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "stbm/corpus.hpp"
#include "stbm/eval.hpp"
#include "stbm/generator.hpp"
#include "stbm/inference.hpp"
#include "stbm/selection.hpp"
#include "stbm/serialize.hpp"

namespace stbm::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonFlags {
  std::uint64_t seed = 1;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  double tol = 1e-6;
  std::size_t max_iter = 100;
  std::size_t restarts = 10;
  bool undirected = false;
};

struct CorpusFlags {
  std::string edges;
  std::string docs;
  std::size_t min_count = 1;
  std::string stop_words;
};

struct SimulateFlags {
  std::string scenario;
  std::string difficulty = "easy";
  std::string config;
  std::string seed_texts;
  std::string out_dir = ".";
  std::string prefix = "sim";
};

struct FitFlags {
  std::size_t Q = 0;
  std::size_t K = 0;
  std::optional<std::uint64_t> init_seed;
  std::string init_labels;
  std::string out_dir = ".";
  std::string prefix = "fit";
  std::string beta_out;
};

struct SelectFlags {
  std::vector<std::size_t> q_range{1, 6};
  std::vector<std::size_t> k_range{1, 6};
  bool restrict_k_le_q = false;
  std::optional<std::uint64_t> init_seed;
  std::string out_dir = ".";
  std::string prefix = "select";
};

struct EvaluateFlags {
  std::string truth;
  std::string fit;
};

struct ReportFlags {
  std::string fit;
  std::string out_dir;
  std::string prefix = "report";
};

void add_common(CLI::App* app, CommonFlags& f, bool fitting) {
  app->add_option("--seed", f.seed, "Random seed")->capture_default_str();
  app->add_option("--jobs", f.jobs, "Worker threads")->check(CLI::PositiveNumber);
  if (fitting) {
    app->add_option("--tol", f.tol, "Relative tolerance on the bound")->capture_default_str();
    app->add_option("--max-iter", f.max_iter, "Maximum outer iterations")->capture_default_str();
    app->add_option("--restarts", f.restarts, "k-medoids initialisations")->check(CLI::PositiveNumber)->capture_default_str();
  }
  app->add_flag("--undirected", f.undirected, "Treat the network as undirected");
}

void add_corpus(CLI::App* app, CorpusFlags& f) {
  app->add_option("--edges", f.edges, "Edge file")->required();
  app->add_option("--docs", f.docs, "Document file")->required();
  app->add_option("--min-count", f.min_count, "Drop words seen fewer times")->capture_default_str();
  app->add_option("--stop-words", f.stop_words, "File of words to ignore");
}

Corpus load(const CorpusFlags& f, const CommonFlags& c) {
  LoadOptions opts;
  opts.min_count = f.min_count;
  if (!f.stop_words.empty()) opts.tokenizer.stop_words = read_stop_words(f.stop_words);
  if (c.undirected) opts.directed = false;
  return load_corpus(f.edges, f.docs, opts);
}

/// Hash of the loaded corpus files, folding in flags that change the corpus.
std::string corpus_hash(const CorpusFlags& f, const CommonFlags& c) {
  auto h = corpus_file_hash(f.edges, f.docs);
  if (c.undirected || f.min_count != 1 || !f.stop_words.empty()) {
    std::string extra = h + (c.undirected ? "u" : "d") + std::to_string(f.min_count);
    if (!f.stop_words.empty()) extra += read_file(f.stop_words);
    h = hex64(fnv1a(extra));
  }
  return h;
}

FitOptions fit_options(const CommonFlags& c) {
  FitOptions o;
  o.tol = c.tol;
  o.max_outer = c.max_iter;
  o.seed = c.seed;
  return o;
}

Assignment read_labels(const fs::path& path, const Corpus& corpus, std::size_t Q) {
  std::istringstream in(read_file(path));
  Assignment y{Q, std::vector<int>(corpus.num_vertices(), -1)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (tab == std::string::npos) throw InputError(where + "expected 'vertex<TAB>label'");
    const auto v = corpus.vertex_id(line.substr(0, tab));
    if (!v) throw InputError(where + "unknown vertex '" + line.substr(0, tab) + "'");
    int label = 0;
    try {
      label = std::stoi(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw InputError(where + "label is not an integer");
    }
    if (label < 1 || static_cast<std::size_t>(label) > Q) throw InputError(where + "label outside 1..Q");
    y.labels[*v] = label - 1;
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y.labels[i] < 0) throw InputError(path.string() + ": no label for vertex '" + corpus.vertex_names()[i] + "'");
  }
  return y;
}

class Recorder {
 public:
  Recorder(std::string command, const std::vector<std::string>& args)
      : start_(std::chrono::steady_clock::now()) {
    m_.command = std::move(command);
    m_.argv = args;
    m_.version = kVersion;
  }
  void seed(const std::string& name, std::uint64_t value) { m_.seeds[name] = value; }
  void input(const fs::path& path) { m_.input_hashes[path.string()] = file_hash(path); }
  void output(const fs::path& path, const std::string& text) {
    write_text(path, text);
    m_.output_hashes[path.string()] = hex64(fnv1a(text));
  }
  void output_file(const fs::path& path) { m_.output_hashes[path.string()] = file_hash(path); }
  void finish(const fs::path& path) {
    m_.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_text(path, manifest_to_json(m_).dump(2) + "\n");
  }

 private:
  RunManifest m_;
  std::chrono::steady_clock::time_point start_;
};

fs::path out_path(const std::string& dir, const std::string& prefix, const std::string& suffix) {
  return fs::path(dir) / (prefix + suffix);
}

int cmd_simulate(const std::vector<std::string>& args, const SimulateFlags& f, const CommonFlags& c,
                 std::ostream& out) {
  GenConfig cfg;
  if (!f.config.empty()) {
    if (!f.scenario.empty()) throw UsageError("--config and --scenario are exclusive");
    cfg = gen_config_from_json(read_json(f.config));
  } else {
    if (f.scenario.empty()) throw UsageError("simulate needs --scenario or --config");
    Scenario s;
    Difficulty d;
    try {
      s = parse_scenario(f.scenario);
      d = parse_difficulty(f.difficulty);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    cfg = scenario_config(s, d, beta_from_texts(bundled_seed_texts(f.seed_texts)), c.seed);
  }
  // An explicit --seed overrides the config file's seed.
  if (f.config.empty() || std::find(args.begin(), args.end(), "--seed") != args.end()) cfg.seed = c.seed;
  if (c.undirected) cfg.directed = false;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }

  Recorder rec("simulate", args);
  rec.seed("seed", cfg.seed);
  if (!f.config.empty()) rec.input(f.config);
  const auto sim = sample_corpus(cfg);
  const auto edges = out_path(f.out_dir, f.prefix, ".edges.tsv");
  const auto docs = out_path(f.out_dir, f.prefix, ".docs.tsv");
  write_edge_file(sim.corpus, edges);
  write_docs_file(sim.corpus, docs);
  rec.output_file(edges);
  rec.output_file(docs);
  const auto truth = out_path(f.out_dir, f.prefix, ".truth.json");
  rec.output(truth, truth_to_json(sim, corpus_file_hash(edges, docs)).dump(2) + "\n");
  rec.finish(out_path(f.out_dir, f.prefix, ".manifest.json"));
  out << "wrote " << edges.string() << ", " << docs.string() << ", " << truth.string() << " (M="
      << sim.corpus.num_vertices() << ", edges=" << sim.corpus.num_edges()
      << ", tokens=" << sim.corpus.total_tokens() << ")\n";
  return kOk;
}

int cmd_fit(const std::vector<std::string>& args, const CorpusFlags& cf, const FitFlags& f,
            const CommonFlags& c, std::ostream& out, std::ostream& err) {
  const Corpus corpus = load(cf, c);
  const auto hash = corpus_hash(cf, c);
  if (f.Q < 1 || f.K < 1) throw UsageError("--Q and --K must be at least 1");
  if (f.Q > corpus.num_vertices()) throw UsageError("--Q exceeds the number of vertices");

  Recorder rec("fit", args);
  rec.input(cf.edges);
  rec.input(cf.docs);
  RestartOptions ro;
  ro.restarts = c.restarts;
  ro.init_seed = f.init_seed.value_or(c.seed);
  ro.fit = fit_options(c);
  rec.seed("seed", c.seed);
  rec.seed("init_seed", ro.init_seed);

  std::optional<Assignment> labels;
  if (!f.init_labels.empty()) {
    rec.input(f.init_labels);
    labels = read_labels(f.init_labels, corpus, f.Q);
  }
  const auto best = fit_best_of_restarts(corpus, f.Q, f.K, ro, labels ? &*labels : nullptr);
  const auto summary = summarize_fit(best.fit, corpus, hash);

  rec.output(out_path(f.out_dir, f.prefix, ".json"), fit_to_json(summary).dump(2) + "\n");
  const auto report = text_report(summary);
  rec.output(out_path(f.out_dir, f.prefix, ".report.txt"), report);
  rec.output(out_path(f.out_dir, f.prefix, ".gml"), meta_network_gml(summary));
  if (!f.beta_out.empty()) {
    write_beta_tsv(best.fit.params.beta, corpus.vocabulary(), f.beta_out);
    rec.output_file(f.beta_out);
  }
  rec.finish(out_path(f.out_dir, f.prefix, ".manifest.json"));
  out << report;

  if (!best.fit.converged) {
    err << "fit did not converge within " << c.max_iter << " iterations; bound trace:\n";
    err << std::setprecision(12);
    for (double b : best.fit.bound_trace) err << "  " << b << "\n";
    return kNumericalFailure;
  }
  return kOk;
}

std::vector<std::size_t> expand_range(const std::vector<std::size_t>& r, const char* name) {
  if (r.size() != 2 || r[0] < 1 || r[0] > r[1]) {
    throw UsageError(std::string(name) + " expects two values lo hi with 1 <= lo <= hi");
  }
  std::vector<std::size_t> out;
  for (std::size_t v = r[0]; v <= r[1]; ++v) out.push_back(v);
  return out;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(12) << v;
  return s.str();
}

int cmd_select(const std::vector<std::string>& args, const CorpusFlags& cf, const SelectFlags& f,
               const CommonFlags& c, std::ostream& out) {
  const auto qs = expand_range(f.q_range, "--Q-range");
  const auto ks = expand_range(f.k_range, "--K-range");
  const Corpus corpus = load(cf, c);
  if (qs.back() > corpus.num_vertices()) throw UsageError("--Q-range exceeds the number of vertices");
  const auto hash = corpus_hash(cf, c);

  Recorder rec("select", args);
  rec.input(cf.edges);
  rec.input(cf.docs);
  GridOptions go;
  go.jobs = c.jobs;
  go.restrict_k_le_q = f.restrict_k_le_q;
  go.restart.restarts = c.restarts;
  go.restart.init_seed = f.init_seed.value_or(c.seed);
  go.restart.fit = fit_options(c);
  rec.seed("seed", c.seed);
  rec.seed("init_seed", go.restart.init_seed);

  const auto grid = grid_search(corpus, qs, ks, go);

  std::ostringstream csv;
  csv << "Q,K,icl,bound_lda,sbm_loglik,pen_lda,pen_pi,pen_rho,converged\n";
  for (const auto& cell : grid.table) {
    csv << cell.Q << ',' << cell.K << ',' << fmt(cell.icl.icl) << ',' << fmt(cell.icl.bound_lda) << ','
        << fmt(cell.icl.sbm_loglik) << ',' << fmt(cell.icl.pen_lda) << ',' << fmt(cell.icl.pen_pi) << ','
        << fmt(cell.icl.pen_rho) << ',' << (cell.converged ? 1 : 0) << '\n';
  }
  const auto csv_path = out_path(f.out_dir, f.prefix, ".grid.csv");
  const auto best_path = out_path(f.out_dir, f.prefix, ".best_fit.json");
  rec.output(csv_path, csv.str());
  const auto summary = summarize_fit(grid.best_fit, corpus, hash);
  rec.output(best_path, fit_to_json(summary).dump(2) + "\n");
  Json sel;
  sel["best"] = {{"Q", grid.best_Q}, {"K", grid.best_K}, {"icl", summary.icl.icl}};
  sel["best_fit"] = best_path.filename().string();
  sel["grid"] = csv_path.filename().string();
  Json failed = Json::array();
  for (const auto& cell : grid.table) {
    if (cell.failed) failed.push_back({{"Q", cell.Q}, {"K", cell.K}, {"error", cell.error}});
  }
  sel["failed_cells"] = std::move(failed);
  rec.output(out_path(f.out_dir, f.prefix, ".selection.json"), sel.dump(2) + "\n");
  rec.finish(out_path(f.out_dir, f.prefix, ".manifest.json"));

  out << csv.str() << "selected Q=" << grid.best_Q << " K=" << grid.best_K << "\n";
  return kOk;
}

int cmd_evaluate(const EvaluateFlags& f, std::ostream& out) {
  const auto truth = truth_from_json(read_json(f.truth));
  const auto fit = fit_from_json(read_json(f.fit));
  if (truth.corpus_hash != fit.corpus_hash) {
    throw InputError("truth and fit were computed on different corpora (hash " + truth.corpus_hash + " vs " +
                     fit.corpus_hash + ")");
  }
  if (truth.vertices != fit.vertices) throw InputError("truth and fit list different vertices");
  const double node = ari(truth.y.labels, fit.y.labels);
  std::vector<int> truth_edges;
  for (const auto& [key, k] : truth.edge_majority_topic) truth_edges.push_back(k);
  const auto fit_edges = edge_partition(fit.edge_majority_topic, truth.edge_majority_topic);
  const double edge = truth_edges.empty() ? 1.0 : ari(truth_edges, fit_edges);
  Json j{{"node_ari", node}, {"edge_ari", edge}};
  out << j.dump() << "\n";
  return kOk;
}

int cmd_report(const ReportFlags& f, std::ostream& out) {
  const auto summary = fit_from_json(read_json(f.fit));
  const auto report = text_report(summary);
  if (!f.out_dir.empty()) {
    write_text(out_path(f.out_dir, f.prefix, ".report.txt"), report);
    write_text(out_path(f.out_dir, f.prefix, ".gml"), meta_network_gml(summary));
  }
  out << report;
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Joint clustering of networks with textual edges", "stbm"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonFlags common;
  CorpusFlags corpus;
  SimulateFlags sim;
  FitFlags fit;
  SelectFlags sel;
  EvaluateFlags eva;
  ReportFlags rep;

  auto* s = app.add_subcommand("simulate", "Sample a synthetic corpus");
  add_common(s, common, false);
  s->add_option("--scenario", sim.scenario, "A, B or C");
  s->add_option("--difficulty", sim.difficulty, "easy, hard1 or hard2")->capture_default_str();
  s->add_option("--config", sim.config, "JSON simulation settings");
  s->add_option("--seed-texts", sim.seed_texts, "Directory of .txt files used as topics");
  s->add_option("--out-dir", sim.out_dir)->capture_default_str();
  s->add_option("--prefix", sim.prefix)->capture_default_str();

  auto* f = app.add_subcommand("fit", "Fit the model at fixed Q and K");
  add_common(f, common, true);
  add_corpus(f, corpus);
  f->add_option("--Q", fit.Q, "Number of clusters")->required();
  f->add_option("--K", fit.K, "Number of topics")->required();
  f->add_option("--init-seed", fit.init_seed, "Seed of the initialisation (default: --seed)");
  f->add_option("--init-labels", fit.init_labels, "File of 'vertex<TAB>label' lines, labels 1..Q");
  f->add_option("--out-dir", fit.out_dir)->capture_default_str();
  f->add_option("--prefix", fit.prefix)->capture_default_str();
  f->add_option("--beta-out", fit.beta_out, "Write the dense topic-word matrix here");

  auto* g = app.add_subcommand("select", "Choose Q and K by ICL over a grid");
  add_common(g, common, true);
  add_corpus(g, corpus);
  g->add_option("--Q-range", sel.q_range, "lo hi")->expected(2)->capture_default_str();
  g->add_option("--K-range", sel.k_range, "lo hi")->expected(2)->capture_default_str();
  g->add_flag("--restrict-k-le-q", sel.restrict_k_le_q, "Skip cells with K > Q");
  g->add_option("--init-seed", sel.init_seed, "Seed of the initialisation (default: --seed)");
  g->add_option("--out-dir", sel.out_dir)->capture_default_str();
  g->add_option("--prefix", sel.prefix)->capture_default_str();

  auto* e = app.add_subcommand("evaluate", "Node and edge ARI of a fit against the truth");
  e->add_option("--truth", eva.truth)->required();
  e->add_option("--fit", eva.fit)->required();

  auto* r = app.add_subcommand("report", "Rebuild the text report and meta-network from a fit");
  r->add_option("--fit", rep.fit)->required();
  r->add_option("--out-dir", rep.out_dir, "Also write report files here");
  r->add_option("--prefix", rep.prefix)->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  try {
    if (*s) return cmd_simulate(args, sim, common, out);
    if (*f) return cmd_fit(args, corpus, fit, common, out, err);
    if (*g) return cmd_select(args, corpus, sel, common, out);
    if (*e) return cmd_evaluate(eva, out);
    if (*r) return cmd_report(rep, out);
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << "\n";
    return kUsage;
  } catch (const InputError& ex) {
    err << "input error: " << ex.what() << "\n";
    return kInputError;
  } catch (const fs::filesystem_error& ex) {
    err << "input error: " << ex.what() << "\n";
    return kInputError;
  } catch (const NumericalError& ex) {
    err << "numerical failure: " << ex.what() << "\n";
    return kNumericalFailure;
  } catch (const std::invalid_argument& ex) {
    err << "error: " << ex.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace stbm::cli
