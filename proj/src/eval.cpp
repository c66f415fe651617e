#include "stbm/eval.hpp"

#include <stdexcept>
#include <unordered_map>

#include "stbm/numeric.hpp"

namespace stbm {

namespace {

double choose2(double n) { return n * (n - 1.0) / 2.0; }

std::vector<std::size_t> compact(std::span<const int> labels, std::size_t& count) {
  std::unordered_map<int, std::size_t> ids;
  std::vector<std::size_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out[i] = ids.try_emplace(labels[i], ids.size()).first->second;
  }
  count = ids.size();
  return out;
}

}  // namespace

double ari(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw std::invalid_argument("ari: label vectors differ in length");
  if (a.empty()) throw std::invalid_argument("ari: empty label vectors");
  std::size_t ra = 0, rb = 0;
  const auto ca = compact(a, ra);
  const auto cb = compact(b, rb);

  std::vector<double> table(ra * rb, 0.0), rows(ra, 0.0), cols(rb, 0.0);
  for (std::size_t i = 0; i < ca.size(); ++i) {
    table[ca[i] * rb + cb[i]] += 1.0;
    rows[ca[i]] += 1.0;
    cols[cb[i]] += 1.0;
  }
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (double n : table) index += choose2(n);
  for (double n : rows) sum_rows += choose2(n);
  for (double n : cols) sum_cols += choose2(n);

  const double pairs = choose2(static_cast<double>(a.size()));
  if (pairs == 0.0) return 1.0;
  const double expected = sum_rows * sum_cols / pairs;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

EdgeLabels label_edges(const Corpus& corpus, std::span<const int> per_edge) {
  if (per_edge.size() != corpus.num_edges()) throw std::invalid_argument("one label per edge expected");
  EdgeLabels out;
  const auto& names = corpus.vertex_names();
  for (std::size_t e = 0; e < corpus.num_edges(); ++e) {
    const auto& edge = corpus.edge(e);
    out.emplace(std::make_pair(names[edge.source], names[edge.target]), per_edge[e]);
  }
  return out;
}

std::vector<int> edge_partition(const EdgeLabels& labels, const Corpus& corpus) {
  if (labels.size() != corpus.num_edges()) throw InputError("edge sets differ in size");
  const auto& names = corpus.vertex_names();
  std::vector<int> out;
  out.reserve(corpus.num_edges());
  for (const auto& edge : corpus.edges()) {
    auto it = labels.find({names[edge.source], names[edge.target]});
    if (it == labels.end()) {
      throw InputError("edge " + names[edge.source] + " -> " + names[edge.target] + " has no label");
    }
    out.push_back(it->second);
  }
  return out;
}

std::vector<int> edge_partition(const EdgeLabels& labels, const EdgeLabels& reference) {
  if (labels.size() != reference.size()) throw InputError("edge sets differ in size");
  std::vector<int> out;
  out.reserve(reference.size());
  for (const auto& [key, _] : reference) {
    auto it = labels.find(key);
    if (it == labels.end()) throw InputError("edge " + key.first + " -> " + key.second + " has no label");
    out.push_back(it->second);
  }
  return out;
}

}  // namespace stbm
