#pragma once

#include <vector>

#include "csgrl/mat.hpp"

// Small labeled fixtures with expected metric values worked out by hand from
// the contingency tables (exact rational arithmetic, logs evaluated to high
// precision), stated to 12 decimal places.
namespace fixtures {

// 8 points, 3 classes. Per-class F1: 4/5, 2/3, 4/5; macro = 34/45.
inline const std::vector<int32_t> f1_truth = {0, 0, 0, 1, 1, 1, 2, 2};
inline const std::vector<int32_t> f1_pred = {0, 0, 1, 1, 1, 2, 2, 2};
inline constexpr double f1_macro = 0.755555555556;
inline constexpr double f1_micro = 0.750000000000;

// 6 points, one tied score pair across classes. Positive ranks 2.5 + 5 + 6,
// U = 7.5, AUC = 7.5 / 9 = 5/6.
inline const std::vector<double> auc_scores = {0.1, 0.4, 0.35, 0.8, 0.35, 0.6};
inline const std::vector<char> auc_positive = {0, 0, 1, 1, 0, 1};
inline constexpr double auc_expected = 0.833333333333;

// 10 points. Contingency [[3,2,0],[0,2,3]]: MI = 0.6 ln 2, H(a) = ln 2,
// H(b) = -(0.6 ln 0.3 + 0.4 ln 0.4); ARI = (8 - 16/3) / (16 - 16/3) = 1/4.
inline const std::vector<int32_t> clu_a = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
inline const std::vector<int32_t> clu_b = {0, 0, 0, 1, 1, 1, 1, 2, 2, 2};
inline constexpr double nmi_expected = 0.466753426763;
inline constexpr double ari_expected = 0.250000000000;

// 6 integer-coordinate points in the plane, two clusters of three.
inline csgrl::Mat silhouette_points() {
  csgrl::Mat m(6, 2);
  const double xy[6][2] = {{0, 0}, {0, 1}, {1, 0}, {4, 0}, {4, 1}, {5, 0}};
  for (int i = 0; i < 6; ++i) {
    m(i, 0) = xy[i][0];
    m(i, 1) = xy[i][1];
  }
  return m;
}
inline const std::vector<int32_t> silhouette_labels = {0, 0, 0, 1, 1, 1};
inline constexpr double silhouette_expected = 0.715619846211;

inline constexpr double metric_tol = 1e-12;

}  // namespace fixtures
