#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "csgrl/eval.hpp"
#include "csgrl/rng.hpp"
#include "doctest.h"
#include "metric_fixtures.hpp"

using namespace csgrl;

namespace {

// Jacobi eigensolver for small symmetric matrices; the oracle for PCA.
std::pair<std::vector<double>, Mat> jacobi_eigen(Mat a) {
  int n = a.rows;
  Mat v(n, n);
  for (int i = 0; i < n; ++i) v(i, i) = 1.0;
  for (int sweep = 0; sweep < 200; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-24) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-18) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < n; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }
  std::vector<double> eig(n);
  for (int i = 0; i < n; ++i) eig[i] = a(i, i);
  return {eig, v};
}

Mat gaussian_blobs(int per_cluster, const std::vector<std::pair<double, double>>& centers,
                   double sigma, uint64_t seed, std::vector<int32_t>* labels) {
  Mat m(per_cluster * int(centers.size()), 2);
  Rng rng(seed);
  int row = 0;
  for (size_t c = 0; c < centers.size(); ++c)
    for (int i = 0; i < per_cluster; ++i, ++row) {
      m(row, 0) = centers[c].first + sigma * rng.normal();
      m(row, 1) = centers[c].second + sigma * rng.normal();
      if (labels) labels->push_back(int32_t(c));
    }
  return m;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("metric fixtures match the hand-computed values") {
  CHECK(std::abs(eval::macro_f1_score(fixtures::f1_pred, fixtures::f1_truth, 3) -
                 fixtures::f1_macro) <= fixtures::metric_tol);
  CHECK(std::abs(eval::micro_f1_score(fixtures::f1_pred, fixtures::f1_truth) -
                 fixtures::f1_micro) <= fixtures::metric_tol);
  CHECK(std::abs(eval::binary_auc(fixtures::auc_scores, fixtures::auc_positive) -
                 fixtures::auc_expected) <= fixtures::metric_tol);
  CHECK(std::abs(eval::nmi(fixtures::clu_a, fixtures::clu_b) - fixtures::nmi_expected) <=
        fixtures::metric_tol);
  CHECK(std::abs(eval::ari(fixtures::clu_a, fixtures::clu_b) - fixtures::ari_expected) <=
        fixtures::metric_tol);
  CHECK(std::abs(eval::silhouette(fixtures::silhouette_points(),
                                  fixtures::silhouette_labels) -
                 fixtures::silhouette_expected) <= fixtures::metric_tol);
}

TEST_CASE("f1 handles absent classes") {
  // Class 2 never appears: its F1 term is 0 but still divides the macro mean.
  std::vector<int32_t> t = {0, 0, 1, 1};
  std::vector<int32_t> p = {0, 0, 1, 1};
  CHECK(eval::macro_f1_score(p, t, 3) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(eval::micro_f1_score(p, t) == 1.0);
}

TEST_CASE("auc extremes") {
  std::vector<double> s = {0.1, 0.2, 0.8, 0.9};
  std::vector<char> pos = {0, 0, 1, 1};
  CHECK(eval::binary_auc(s, pos) == 1.0);
  std::vector<char> inv = {1, 1, 0, 0};
  CHECK(eval::binary_auc(s, inv) == 0.0);
  std::vector<double> tied = {0.5, 0.5, 0.5, 0.5};
  CHECK(eval::binary_auc(tied, pos) == 0.5);
  CHECK_THROWS_AS(eval::binary_auc(s, std::vector<char>{1, 1, 1, 1}),
                  std::invalid_argument);
}

TEST_CASE("nmi and ari invariances") {
  std::vector<int32_t> a = {0, 0, 1, 1, 2, 2};
  std::vector<int32_t> relabeled = {2, 2, 0, 0, 1, 1};
  CHECK(eval::nmi(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(eval::ari(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(eval::nmi(a, relabeled) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(eval::ari(a, relabeled) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(eval::nmi(a, relabeled) == doctest::Approx(eval::nmi(relabeled, a)).epsilon(1e-15));

  // Degenerate conventions: two constant labelings agree perfectly; one
  // constant against a varying one carries no information.
  std::vector<int32_t> c = {0, 0, 0, 0, 0, 0};
  CHECK(eval::nmi(c, c) == 1.0);
  CHECK(eval::ari(c, c) == 1.0);
  CHECK(eval::nmi(c, a) == 0.0);
}

TEST_CASE("kmeans recovers well separated blobs") {
  std::vector<int32_t> truth;
  Mat pts = gaussian_blobs(20, {{0, 0}, {10, 0}, {0, 10}}, 0.4, 77, &truth);
  std::vector<int32_t> got = eval::kmeans_cluster(pts, 3, 5, 10);
  CHECK(eval::ari(got, truth) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(eval::nmi(got, truth) == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<int32_t> again = eval::kmeans_cluster(pts, 3, 5, 10);
  CHECK(got == again);
}

TEST_CASE("kmeans with k equal to the point count is a bijection") {
  Mat pts(5, 2);
  for (int i = 0; i < 5; ++i) pts(i, 0) = i;  // distinct rows
  std::vector<int32_t> got = eval::kmeans_cluster(pts, 5, 0, 3);
  std::set<int32_t> distinct(got.begin(), got.end());
  CHECK(distinct.size() == 5);
}

TEST_CASE("kmeans argument validation") {
  Mat pts(4, 1);
  for (int i = 0; i < 4; ++i) pts(i, 0) = i % 2;  // only 2 distinct rows
  CHECK_THROWS_AS(eval::kmeans_cluster(pts, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(eval::kmeans_cluster(pts, 5, 0), std::invalid_argument);
  CHECK_THROWS_AS(eval::kmeans_cluster(pts, 3, 0), std::invalid_argument);
  CHECK_NOTHROW(eval::kmeans_cluster(pts, 2, 0));
}

TEST_CASE("silhouette behavior") {
  std::vector<int32_t> truth;
  Mat pts = gaussian_blobs(15, {{0, 0}, {8, 8}}, 0.5, 88, &truth);
  CHECK(eval::silhouette(pts, truth) > 0.5);
  CHECK_THROWS_AS(eval::silhouette(pts, std::vector<int32_t>(30, 0)),
                  std::invalid_argument);
}

TEST_CASE("pca matches a Jacobi eigensolver oracle") {
  std::vector<int32_t> ignore;
  Mat x = gaussian_blobs(25, {{0, 0}, {6, 2}}, 1.0, 99, &ignore);
  int n = x.rows;

  Mat scores = eval::pca_project(x, 2);
  REQUIRE(scores.rows == n);
  REQUIRE(scores.cols == 2);

  // Covariance (unscaled) of the centered data.
  double mean0 = 0, mean1 = 0;
  for (int i = 0; i < n; ++i) {
    mean0 += x(i, 0);
    mean1 += x(i, 1);
  }
  mean0 /= n;
  mean1 /= n;
  Mat cov(2, 2);
  for (int i = 0; i < n; ++i) {
    double c0 = x(i, 0) - mean0, c1 = x(i, 1) - mean1;
    cov(0, 0) += c0 * c0;
    cov(0, 1) += c0 * c1;
    cov(1, 0) += c1 * c0;
    cov(1, 1) += c1 * c1;
  }
  auto [eig, vecs] = jacobi_eigen(cov);
  int top = eig[0] >= eig[1] ? 0 : 1;

  // Compare projections up to sign.
  for (int comp = 0; comp < 2; ++comp) {
    int col = comp == 0 ? top : 1 - top;
    double dot = 0, n_or = 0, n_got = 0;
    for (int i = 0; i < n; ++i) {
      double o = (x(i, 0) - mean0) * vecs(0, col) + (x(i, 1) - mean1) * vecs(1, col);
      dot += o * scores(i, comp);
      n_or += o * o;
      n_got += scores(i, comp) * scores(i, comp);
    }
    double cosine = dot / std::sqrt(n_or * n_got);
    CHECK(std::abs(std::abs(cosine) - 1.0) < 1e-6);
    // Projection variance equals the eigenvalue.
    CHECK(n_got == doctest::Approx(eig[col]).epsilon(1e-6));
  }
}

TEST_CASE("pca on rank-1 data zeroes the second component") {
  Mat x(6, 3);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 3; ++j) x(i, j) = (i - 2.5) * (j + 1.0);
  Mat scores = eval::pca_project(x, 2);
  double second = 0.0;
  for (int i = 0; i < 6; ++i) second += std::abs(scores(i, 1));
  CHECK(second == 0.0);
  // First component carries all the variance.
  double var = 0.0, total = 0.0;
  for (int i = 0; i < 6; ++i) var += scores(i, 0) * scores(i, 0);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 3; ++j) total += (i - 2.5) * (j + 1.0) * (i - 2.5) * (j + 1.0);
  CHECK(var == doctest::Approx(total).epsilon(1e-9));
}

TEST_CASE("probe split invariants") {
  std::vector<int32_t> labels;
  for (int i = 0; i < 90; ++i) labels.push_back(i % 3);
  eval::ProbeSplit s = eval::make_probe_split(labels, 5, 4);

  std::set<int32_t> seen;
  for (int32_t v : s.train_nodes) CHECK(seen.insert(v).second);
  for (int32_t v : s.val_nodes) CHECK(seen.insert(v).second);
  for (int32_t v : s.test_nodes) CHECK(seen.insert(v).second);
  CHECK(s.val_nodes.size() == 22);  // 90 / 4
  CHECK(s.test_nodes.size() == 22);

  std::vector<int> per_class(3, 0);
  for (int32_t v : s.train_nodes) per_class[labels[v]] += 1;
  for (int c = 0; c < 3; ++c) {
    CHECK(per_class[c] >= 1);
    CHECK(per_class[c] <= 5);
  }
  CHECK(std::is_sorted(s.train_nodes.begin(), s.train_nodes.end()));

  eval::ProbeSplit s2 = eval::make_probe_split(labels, 5, 4);
  CHECK(s.train_nodes == s2.train_nodes);
  CHECK(s.val_nodes == s2.val_nodes);
  CHECK(s.test_nodes == s2.test_nodes);
  eval::ProbeSplit s3 = eval::make_probe_split(labels, 5, 5);
  CHECK(s.train_nodes != s3.train_nodes);
}

TEST_CASE("linear probe separates one-hot embeddings and not shuffled labels") {
  int n = 60;
  std::vector<int32_t> labels;
  Mat emb(n, 3);
  Rng rng(55);
  for (int i = 0; i < n; ++i) {
    int32_t c = i % 3;
    labels.push_back(c);
    for (int j = 0; j < 3; ++j) emb(i, j) = (j == c ? 1.0 : 0.0) + 0.05 * rng.normal();
  }
  eval::ProbeSplit split = eval::make_probe_split(labels, 5, 1);
  eval::ProbeMetrics good = eval::linear_probe(emb, labels, split);
  CHECK(good.macro_f1 > 0.95);
  CHECK(good.auc > 0.95);

  std::vector<int32_t> shuffled = labels;
  Rng shuffler(56);
  shuffler.shuffle(shuffled);
  eval::ProbeSplit split2 = eval::make_probe_split(shuffled, 5, 1);
  eval::ProbeMetrics bad = eval::linear_probe(emb, shuffled, split2);
  CHECK(bad.macro_f1 < 0.66);
}

}  // TEST_SUITE
