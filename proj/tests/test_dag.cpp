#include <doctest.h>

#include <radgp/dag.hpp>
#include <radgp/rng.hpp>

using namespace radgp;

namespace {

Matrix random_points(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rng.uniform();
  return m;
}

std::vector<int> parent_vec(const RadialDag& g, int pos) {
  auto [b, e] = g.parents(pos);
  return {b, e};
}

}  // namespace

TEST_CASE("two nearby points give a single edge") {
  Matrix m(2, 2);
  m << 0, 0, 0.5, 0;
  LocationSet set(m);
  auto p = make_partition(set, 1.0, 1);
  REQUIRE(p.M() == 2);
  auto g = build_dag(p, set);
  CHECK(g.n_parents(0) == 0);
  REQUIRE(g.n_parents(1) == 1);
  CHECK(parent_vec(g, 1) == std::vector<int>{0});
}

TEST_CASE("rho beyond the diameter yields the complete ordered graph") {
  Matrix m = random_points(25, 2, 5);
  LocationSet set(m);
  double rho = set.diameter() * 1.01;
  auto p = make_partition(set, rho, 3);
  CHECK(p.M() == 25);  // no two points can share a subset
  auto g = build_dag(p, set);
  for (int i = 0; i < 25; ++i) {
    auto pa = parent_vec(g, i);
    REQUIRE(static_cast<int>(pa.size()) == i);
    for (int j = 0; j < i; ++j) {
      CHECK(pa[j] == j);
      CHECK(set.distance(g.order[i], g.order[j]) < rho);  // brute-force confirmation
    }
  }
}

TEST_CASE("1-D chain: radial edges are exactly the consecutive pairs") {
  Matrix m(4, 1);
  m << 0.0, 0.3, 0.6, 0.9;
  LocationSet set(m);
  auto p = make_partition(set, 0.4, 21);
  auto g = build_dag(p, set);
  // enumerate all pairs: distance < 0.4 only between consecutive points;
  // longer edges may appear only as the rule-3 fallback inside D_1
  const int first_block = static_cast<int>(p.subsets[0].size());
  int radial_edges = 0;
  for (int i = 0; i < 4; ++i) {
    for (int j : parent_vec(g, i)) {
      double gap = std::abs(set.coords()(g.order[i], 0) - set.coords()(g.order[j], 0));
      if (gap < 0.4) {
        ++radial_edges;
        CHECK(gap == doctest::Approx(0.3));
      } else {
        CHECK(i < first_block);  // rule-3 edge, child in D_1
      }
    }
  }
  CHECK(radial_edges == 3);
}

TEST_CASE("radial completeness and topological soundness on random sets") {
  const double rho = 0.22;
  Matrix m = random_points(150, 2, 33);
  LocationSet set(m);
  auto p = make_partition(set, rho, 12);
  auto g = build_dag(p, set);
  const int first_block = static_cast<int>(p.subsets[0].size());
  for (int i = 0; i < 150; ++i) {
    auto pa = parent_vec(g, i);
    for (int j : pa) CHECK(j < i);
    CHECK(std::is_sorted(pa.begin(), pa.end()));
    if (i >= 1 && i < first_block) CHECK(!pa.empty());  // rule-3 connectivity
    for (int j = 0; j < i; ++j) {
      bool close = set.distance(g.order[i], g.order[j]) < rho;
      bool edge = std::binary_search(pa.begin(), pa.end(), j);
      auto paj = parent_vec(g, j);
      bool back_edge = std::binary_search(paj.begin(), paj.end(), i);
      CHECK(!back_edge);
      if (close) CHECK(edge);
    }
  }
}

TEST_CASE("prediction parents use the open ball over training locations") {
  Matrix m(1, 2);
  m << 0.5, 0.5;
  LocationSet train(m);
  auto p = make_partition(train, 0.25, 1);
  auto g = build_dag(p, train);

  Eigen::RowVectorXd at_rho(2);
  at_rho << 0.75, 0.5;  // distance exactly rho (representable exactly)
  CHECK(prediction_parents(g, train, at_rho).empty());

  Eigen::RowVectorXd inside(2);
  inside << 0.625, 0.5;
  auto pa = prediction_parents(g, train, inside);
  REQUIRE(pa.size() == 1);
  CHECK(pa[0] == 0);

  CHECK_THROWS_WITH_AS(prediction_parents(g, train, train.point(0)),
                       doctest::Contains("already observed"), Error);
}

TEST_CASE("prediction parents match a linear scan on random queries") {
  Matrix m = random_points(100, 2, 3);
  LocationSet train(m);
  auto p = make_partition(train, 0.18, 4);
  auto g = build_dag(p, train);
  Rng rng(55);
  for (int t = 0; t < 20; ++t) {
    Eigen::RowVectorXd s(2);
    s << rng.uniform(), rng.uniform();
    std::vector<int> want;
    for (int j = 0; j < 100; ++j)
      if ((m.row(j) - s).norm() < 0.18 && (m.row(j) - s).norm() > 0.0) want.push_back(j);
    CHECK(prediction_parents(g, train, s) == want);
  }
}
