#pragma once

#include <cstdint>
#include <vector>

#include "csgrl/mat.hpp"

namespace csgrl::eval {

struct ProbeSplit {
  std::vector<int32_t> train_nodes;
  std::vector<int32_t> val_nodes;
  std::vector<int32_t> test_nodes;
  int labels_per_class = 20;
  uint64_t seed = 0;
};

/// Deterministic split: one seeded shuffle; validation and test take 25% each
/// (1000 each on graphs of >= 4000 nodes), then up to `per_class` training
/// nodes per class from the remainder. Throws if a class ends up with no
/// training node.
ProbeSplit make_probe_split(const std::vector<int32_t>& labels, int per_class,
                            uint64_t seed);

struct ProbeMetrics {
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  double auc = 0.0;  // one-vs-rest, macro-averaged over test classes
};

/// Softmax linear classifier on frozen embeddings: AdamW lr 1e-2, no decay,
/// 500 full-batch epochs, parameters snapshotted at the best validation
/// macro-F1. Reports test metrics.
ProbeMetrics linear_probe(const Mat& emb, const std::vector<int32_t>& labels,
                          const ProbeSplit& split);

/// Lloyd's algorithm with k-means++ seeding, best of `restarts` runs by
/// within-cluster sum of squares (ties keep the earlier restart).
std::vector<int32_t> kmeans_cluster(const Mat& emb, int k, uint64_t seed,
                                    int restarts = 10);

double nmi(const std::vector<int32_t>& a, const std::vector<int32_t>& b);
double ari(const std::vector<int32_t>& a, const std::vector<int32_t>& b);

/// Mean silhouette over all points, Euclidean distance; singleton clusters
/// score 0. Requires at least two distinct clusters.
double silhouette(const Mat& emb, const std::vector<int32_t>& labels);

/// Mean-centered projection onto the top principal directions via power
/// iteration with deflation. Components beyond the data rank come out zero.
Mat pca_project(const Mat& emb, int out_dim = 2);

// Shared pieces, exposed for tests.
double macro_f1_score(const std::vector<int32_t>& pred,
                      const std::vector<int32_t>& truth, int num_classes);
double micro_f1_score(const std::vector<int32_t>& pred,
                      const std::vector<int32_t>& truth);
/// Mann-Whitney AUC of `scores` against binary relevance, ties averaged.
double binary_auc(const std::vector<double>& scores,
                  const std::vector<char>& positive);

}  // namespace csgrl::eval
