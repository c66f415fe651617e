#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stbm/corpus.hpp"

namespace stbm {

/// Adjusted Rand index of two labelings of the same items. Returns 1 when
/// the chance-corrected denominator vanishes (both partitions trivial).
/// Throws std::invalid_argument on a length mismatch or empty input.
double ari(std::span<const int> a, std::span<const int> b);

/// Edge labels keyed by (source name, target name); undirected keys use
/// the corpus's stored orientation.
using EdgeLabels = std::map<std::pair<std::string, std::string>, int>;

EdgeLabels label_edges(const Corpus& corpus, std::span<const int> per_edge);

/// Labels in corpus edge order. Throws InputError when the key set is not
/// exactly the corpus edge set.
std::vector<int> edge_partition(const EdgeLabels& labels, const Corpus& corpus);

/// Labels of `labels` in the key order of `reference`; same error rule.
std::vector<int> edge_partition(const EdgeLabels& labels, const EdgeLabels& reference);

}  // namespace stbm
