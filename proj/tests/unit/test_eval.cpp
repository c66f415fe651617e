#include <algorithm>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "stbm/eval.hpp"

using namespace stbm;

TEST_CASE("ari on small partitions") {
  std::vector<int> a{0, 0, 1, 1, 2, 2};
  CHECK(ari(a, a) == 1.0);
  std::vector<int> relabeled{2, 2, 0, 0, 1, 1};
  CHECK(ari(a, relabeled) == 1.0);
  std::vector<int> b{0, 0, 0, 1, 1, 1};
  CHECK(ari(a, b) == doctest::Approx(oracle::pair_counting_ari(a, b)).epsilon(1e-14));
  CHECK(ari(a, b) == doctest::Approx(0.24242424242424243));

  std::vector<int> one{3, 3, 3};
  CHECK(ari(one, one) == 1.0);
  std::vector<int> singletons{0, 1, 2};
  CHECK(ari(singletons, std::vector<int>{5, 6, 7}) == 1.0);
  CHECK(ari(std::vector<int>{4}, std::vector<int>{9}) == 1.0);
}

TEST_CASE("ari errors") {
  std::vector<int> a{0, 1}, b{0};
  CHECK_THROWS_AS(ari(a, b), std::invalid_argument);
  std::vector<int> e;
  CHECK_THROWS_AS(ari(e, e), std::invalid_argument);
}

TEST_CASE("ari matches pair counting, is symmetric and label-invariant") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + trial % 50;
    std::uniform_int_distribution<int> la(0, trial % 6), lb(0, (trial / 6) % 6);
    std::vector<int> a(n), b(n);
    for (auto& x : a) x = la(rng);
    for (auto& x : b) x = lb(rng);
    const double want = oracle::pair_counting_ari(a, b);
    CHECK(std::abs(ari(a, b) - want) < 1e-12);
    CHECK(ari(a, b) == ari(b, a));
    std::vector<int> perm{7, 3, 11, 0, 5, 9};
    std::vector<int> ap(n);
    for (std::size_t i = 0; i < n; ++i) ap[i] = perm[a[i]];
    CHECK(std::abs(ari(ap, b) - ari(a, b)) < 1e-12);
  }
}

TEST_CASE("random edge labels have ARI near zero") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> topic(0, 2);
  std::vector<int> a(600), b(600);
  for (auto& x : a) x = topic(rng);
  for (auto& x : b) x = topic(rng);
  CHECK(std::abs(ari(a, b)) < 0.1);
}

TEST_CASE("edge labels and edge partitions") {
  std::mt19937_64 rng(3);
  auto c = oracle::random_corpus(6, 4, true, 0.5, 3, rng);
  std::vector<int> topics(c.num_edges());
  for (std::size_t e = 0; e < topics.size(); ++e) topics[e] = static_cast<int>(e % 3);
  auto labels = label_edges(c, topics);
  CHECK(labels.size() == c.num_edges());
  CHECK(edge_partition(labels, c) == topics);
  CHECK(ari(edge_partition(labels, c), topics) == 1.0);

  auto missing = labels;
  missing.erase(missing.begin());
  CHECK_THROWS_AS(edge_partition(missing, c), InputError);
  auto extra = labels;
  extra[{"nobody", "v0"}] = 1;
  CHECK_THROWS_AS(edge_partition(extra, c), InputError);

  CHECK(edge_partition(labels, labels).size() == labels.size());
  CHECK_THROWS_AS(edge_partition(missing, labels), InputError);
  CHECK_THROWS_AS(label_edges(c, std::vector<int>(c.num_edges() + 1)), std::invalid_argument);
}
