#include "csgrl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "csgrl/autodiff.hpp"
#include "csgrl/kernels.hpp"
#include "csgrl/optim.hpp"
#include "csgrl/rng.hpp"

namespace csgrl::eval {

static int num_classes_of(const std::vector<int32_t>& labels) {
  int k = 0;
  for (int32_t l : labels) {
    if (l < 0) throw std::invalid_argument("negative label");
    k = std::max(k, int(l) + 1);
  }
  if (k < 2) throw std::invalid_argument("need at least 2 classes");
  return k;
}

ProbeSplit make_probe_split(const std::vector<int32_t>& labels, int per_class,
                            uint64_t seed) {
  int n = static_cast<int>(labels.size());
  int k = num_classes_of(labels);
  if (per_class < 1) throw std::invalid_argument("per_class must be >= 1");
  int n_val = n < 4000 ? n / 4 : 1000;
  int n_test = n_val;
  if (n_val + n_test >= n)
    throw std::invalid_argument("too few nodes for a probe split");

  std::vector<int32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  rng.shuffle(perm);

  ProbeSplit s;
  s.labels_per_class = per_class;
  s.seed = seed;
  s.val_nodes.assign(perm.begin(), perm.begin() + n_val);
  s.test_nodes.assign(perm.begin() + n_val, perm.begin() + n_val + n_test);
  std::vector<int> taken(k, 0);
  for (int i = n_val + n_test; i < n; ++i) {
    int32_t node = perm[i];
    int32_t c = labels[node];
    if (taken[c] < per_class) {
      s.train_nodes.push_back(node);
      ++taken[c];
    }
  }
  for (int c = 0; c < k; ++c)
    if (taken[c] == 0)
      throw std::runtime_error("class " + std::to_string(c) +
                               " has no training node in the split");
  std::sort(s.train_nodes.begin(), s.train_nodes.end());
  std::sort(s.val_nodes.begin(), s.val_nodes.end());
  std::sort(s.test_nodes.begin(), s.test_nodes.end());
  return s;
}

double macro_f1_score(const std::vector<int32_t>& pred,
                      const std::vector<int32_t>& truth, int num_classes) {
  if (pred.size() != truth.size())
    throw std::invalid_argument("label length mismatch");
  std::vector<int64_t> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
  for (size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == truth[i]) {
      ++tp[pred[i]];
    } else {
      ++fp[pred[i]];
      ++fn[truth[i]];
    }
  }
  double sum = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    int64_t denom = 2 * tp[c] + fp[c] + fn[c];
    sum += denom == 0 ? 0.0 : 2.0 * double(tp[c]) / double(denom);
  }
  return sum / double(num_classes);
}

double micro_f1_score(const std::vector<int32_t>& pred,
                      const std::vector<int32_t>& truth) {
  if (pred.size() != truth.size())
    throw std::invalid_argument("label length mismatch");
  if (pred.empty()) throw std::invalid_argument("empty label vectors");
  int64_t hit = 0;
  for (size_t i = 0; i < pred.size(); ++i) hit += pred[i] == truth[i];
  return double(hit) / double(pred.size());
}

double binary_auc(const std::vector<double>& scores,
                  const std::vector<char>& positive) {
  size_t n = scores.size();
  if (positive.size() != n) throw std::invalid_argument("auc length mismatch");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return scores[x] < scores[y]; });
  std::vector<double> rank(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    double mean_rank = 0.5 * double(i + 1 + j + 1);  // 1-based, averaged ties
    for (size_t t = i; t <= j; ++t) rank[order[t]] = mean_rank;
    i = j + 1;
  }
  int64_t np = 0;
  double rank_sum = 0.0;
  for (size_t t = 0; t < n; ++t)
    if (positive[t]) {
      ++np;
      rank_sum += rank[t];
    }
  int64_t nn = int64_t(n) - np;
  if (np == 0 || nn == 0)
    throw std::invalid_argument("auc needs both positives and negatives");
  double u = rank_sum - 0.5 * double(np) * double(np + 1);
  return u / (double(np) * double(nn));
}

static std::vector<int32_t> argmax_rows(const Mat& logits,
                                        const std::vector<int32_t>& rows) {
  std::vector<int32_t> out;
  out.reserve(rows.size());
  for (int32_t r : rows) {
    const double* p = logits.row(r);
    int best = 0;
    for (int c = 1; c < logits.cols; ++c)
      if (p[c] > p[best]) best = c;
    out.push_back(best);
  }
  return out;
}

static std::vector<int32_t> gather(const std::vector<int32_t>& labels,
                                   const std::vector<int32_t>& rows) {
  std::vector<int32_t> out;
  out.reserve(rows.size());
  for (int32_t r : rows) out.push_back(labels[r]);
  return out;
}

ProbeMetrics linear_probe(const Mat& emb, const std::vector<int32_t>& labels,
                          const ProbeSplit& split) {
  int n = emb.rows, d = emb.cols;
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("labels length != embedding rows");
  int k = num_classes_of(labels);
  {
    std::vector<int> seen(k, 0);
    for (int32_t r : split.train_nodes) seen[labels[r]] = 1;
    for (int c = 0; c < k; ++c)
      if (!seen[c])
        throw std::invalid_argument("class " + std::to_string(c) +
                                    " absent from training split");
  }

  opt::ParamSet ps;
  ps.add("W", Mat(d, k));
  ps.add("b", Mat(1, k));
  opt::AdamWConfig oc;
  oc.lr = 1e-2;
  oc.weight_decay = 0.0;
  opt::AdamWState st(oc);

  Mat logits(n, k);
  auto eval_logits = [&](const Mat& W, const Mat& b) {
    kernels::matmul_nn(emb.data(), W.data(), logits.data(), n, d, k);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < k; ++c) logits(r, c) += b(0, c);
  };

  Mat best_w, best_b;
  double best_val = -1.0;
  std::vector<int32_t> val_truth = gather(labels, split.val_nodes);
  for (int epoch = 0; epoch < 500; ++epoch) {
    ad::Tape tape;
    ps.zero_grads();
    ad::Tensor W = tape.watch(ps.at("W"));
    ad::Tensor b = tape.watch(ps.at("b"));
    ad::Tensor out = ad::add_row_bias(ad::matmul(ad::constant(emb), W), b);
    ad::Tensor loss = ad::masked_cross_entropy(out, labels, split.train_nodes);
    tape.backward(loss);
    opt::adamw_step(ps.all(), st);

    eval_logits(ps.at("W").value, ps.at("b").value);
    double vf1 = macro_f1_score(argmax_rows(logits, split.val_nodes), val_truth, k);
    if (vf1 > best_val) {
      best_val = vf1;
      best_w = ps.at("W").value;
      best_b = ps.at("b").value;
    }
  }

  eval_logits(best_w, best_b);
  std::vector<int32_t> test_truth = gather(labels, split.test_nodes);
  ProbeMetrics m;
  m.macro_f1 = macro_f1_score(argmax_rows(logits, split.test_nodes), test_truth, k);
  m.micro_f1 = micro_f1_score(argmax_rows(logits, split.test_nodes), test_truth);

  // One-vs-rest AUC over softmax probabilities, macro over classes that have
  // both positives and negatives in the test set.
  size_t nt = split.test_nodes.size();
  std::vector<std::vector<double>> probs(static_cast<size_t>(k), std::vector<double>(nt));
  for (size_t t = 0; t < nt; ++t) {
    const double* p = logits.row(split.test_nodes[t]);
    double mx = p[0];
    for (int c = 1; c < k; ++c) mx = std::max(mx, p[c]);
    double z = 0.0;
    for (int c = 0; c < k; ++c) z += std::exp(p[c] - mx);
    for (int c = 0; c < k; ++c) probs[c][t] = std::exp(p[c] - mx) / z;
  }
  double auc_sum = 0.0;
  int auc_classes = 0;
  for (int c = 0; c < k; ++c) {
    std::vector<char> pos(nt);
    int64_t np = 0;
    for (size_t t = 0; t < nt; ++t) {
      pos[t] = test_truth[t] == c;
      np += pos[t];
    }
    if (np == 0 || np == int64_t(nt)) continue;
    auc_sum += binary_auc(probs[c], pos);
    ++auc_classes;
  }
  m.auc = auc_classes > 0 ? auc_sum / auc_classes : 0.5;
  return m;
}

static double row_dist2(const Mat& a, int i, const double* c) {
  const double* p = a.row(i);
  double s = 0.0;
  for (int j = 0; j < a.cols; ++j) {
    double t = p[j] - c[j];
    s += t * t;
  }
  return s;
}

static int64_t count_distinct_rows(const Mat& m) {
  std::vector<int> order(m.rows);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    return std::lexicographical_compare(m.row(x), m.row(x) + m.cols, m.row(y),
                                        m.row(y) + m.cols);
  });
  int64_t distinct = m.rows > 0 ? 1 : 0;
  for (int i = 1; i < m.rows; ++i)
    if (!std::equal(m.row(order[i]), m.row(order[i]) + m.cols,
                    m.row(order[i - 1])))
      ++distinct;
  return distinct;
}

std::vector<int32_t> kmeans_cluster(const Mat& emb, int k, uint64_t seed,
                                    int restarts) {
  int n = emb.rows, d = emb.cols;
  if (k < 2) throw std::invalid_argument("k must be >= 2");
  if (k > n) throw std::invalid_argument("k exceeds point count");
  if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
  if (count_distinct_rows(emb) < k)
    throw std::invalid_argument("k exceeds distinct point count");

  Rng rng(seed);
  std::vector<int32_t> best_labels;
  double best_wcss = std::numeric_limits<double>::infinity();

  for (int r = 0; r < restarts; ++r) {
    Mat centers(k, d);
    std::vector<double> d2(n);
    int first = int(rng.uniform_int(uint64_t(n)));
    std::copy(emb.row(first), emb.row(first) + d, centers.row(0));
    for (int i = 0; i < n; ++i) d2[i] = row_dist2(emb, i, centers.row(0));
    for (int c = 1; c < k; ++c) {
      double total = std::accumulate(d2.begin(), d2.end(), 0.0);
      double t = rng.uniform() * total;
      int pick = n - 1;
      double cum = 0.0;
      for (int i = 0; i < n; ++i) {
        cum += d2[i];
        if (cum > t) {
          pick = i;
          break;
        }
      }
      std::copy(emb.row(pick), emb.row(pick) + d, centers.row(c));
      for (int i = 0; i < n; ++i)
        d2[i] = std::min(d2[i], row_dist2(emb, i, centers.row(c)));
    }

    std::vector<int32_t> labels(n, -1);
    auto assign = [&]() {
      bool changed = false;
      for (int i = 0; i < n; ++i) {
        int best = 0;
        double bd = row_dist2(emb, i, centers.row(0));
        for (int c = 1; c < k; ++c) {
          double dist = row_dist2(emb, i, centers.row(c));
          if (dist < bd) {
            bd = dist;
            best = c;
          }
        }
        if (labels[i] != best) {
          labels[i] = best;
          changed = true;
        }
      }
      return changed;
    };
    assign();
    for (int iter = 0; iter < 300; ++iter) {
      centers.fill(0.0);
      std::vector<int64_t> counts(k, 0);
      for (int i = 0; i < n; ++i) {
        double* c = centers.row(labels[i]);
        const double* p = emb.row(i);
        for (int j = 0; j < d; ++j) c[j] += p[j];
        ++counts[labels[i]];
      }
      for (int c = 0; c < k; ++c)
        if (counts[c] > 0)
          for (int j = 0; j < d; ++j) centers(c, j) /= double(counts[c]);
      // Reseed empty clusters from the points farthest off their centers.
      std::vector<char> grabbed(n, 0);
      for (int c = 0; c < k; ++c) {
        if (counts[c] > 0) continue;
        int far = -1;
        double fd = -1.0;
        for (int i = 0; i < n; ++i) {
          if (grabbed[i]) continue;
          double dist = row_dist2(emb, i, centers.row(labels[i]));
          if (dist > fd) {
            fd = dist;
            far = i;
          }
        }
        std::copy(emb.row(far), emb.row(far) + d, centers.row(c));
        grabbed[far] = 1;
      }
      if (!assign()) break;
    }

    double wcss = 0.0;
    for (int i = 0; i < n; ++i) wcss += row_dist2(emb, i, centers.row(labels[i]));
    if (wcss < best_wcss) {
      best_wcss = wcss;
      best_labels = labels;
    }
  }
  return best_labels;
}

static std::vector<std::vector<int64_t>> contingency(
    const std::vector<int32_t>& a, const std::vector<int32_t>& b, int& ka,
    int& kb) {
  if (a.size() != b.size()) throw std::invalid_argument("label length mismatch");
  if (a.empty()) throw std::invalid_argument("empty labelings");
  ka = 0;
  kb = 0;
  for (int32_t x : a) {
    if (x < 0) throw std::invalid_argument("negative label");
    ka = std::max(ka, int(x) + 1);
  }
  for (int32_t x : b) {
    if (x < 0) throw std::invalid_argument("negative label");
    kb = std::max(kb, int(x) + 1);
  }
  std::vector<std::vector<int64_t>> c(ka, std::vector<int64_t>(kb, 0));
  for (size_t i = 0; i < a.size(); ++i) ++c[a[i]][b[i]];
  return c;
}

double nmi(const std::vector<int32_t>& a, const std::vector<int32_t>& b) {
  int ka, kb;
  auto c = contingency(a, b, ka, kb);
  double n = double(a.size());
  std::vector<int64_t> ra(ka, 0), cb(kb, 0);
  for (int i = 0; i < ka; ++i)
    for (int j = 0; j < kb; ++j) {
      ra[i] += c[i][j];
      cb[j] += c[i][j];
    }
  double ha = 0.0, hb = 0.0, mi = 0.0;
  for (int i = 0; i < ka; ++i)
    if (ra[i] > 0) ha -= ra[i] / n * std::log(ra[i] / n);
  for (int j = 0; j < kb; ++j)
    if (cb[j] > 0) hb -= cb[j] / n * std::log(cb[j] / n);
  for (int i = 0; i < ka; ++i)
    for (int j = 0; j < kb; ++j)
      if (c[i][j] > 0)
        mi += c[i][j] / n * std::log(n * c[i][j] / (double(ra[i]) * double(cb[j])));
  if (ha == 0.0 && hb == 0.0) return 1.0;
  if (ha == 0.0 || hb == 0.0) return 0.0;
  return mi / (0.5 * (ha + hb));
}

double ari(const std::vector<int32_t>& a, const std::vector<int32_t>& b) {
  int ka, kb;
  auto c = contingency(a, b, ka, kb);
  auto pairs = [](int64_t m) { return double(m) * double(m - 1) / 2.0; };
  std::vector<int64_t> ra(ka, 0), cb(kb, 0);
  double index = 0.0;
  for (int i = 0; i < ka; ++i)
    for (int j = 0; j < kb; ++j) {
      ra[i] += c[i][j];
      cb[j] += c[i][j];
      index += pairs(c[i][j]);
    }
  double sa = 0.0, sb = 0.0;
  for (int64_t x : ra) sa += pairs(x);
  for (int64_t x : cb) sb += pairs(x);
  double total = pairs(int64_t(a.size()));
  double expected = sa * sb / total;
  double maximum = 0.5 * (sa + sb);
  double denom = maximum - expected;
  if (denom == 0.0) return 1.0;
  return (index - expected) / denom;
}

double silhouette(const Mat& emb, const std::vector<int32_t>& labels) {
  int n = emb.rows;
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("labels length != embedding rows");
  int k = 0;
  for (int32_t l : labels) {
    if (l < 0) throw std::invalid_argument("negative label");
    k = std::max(k, int(l) + 1);
  }
  std::vector<int64_t> counts(k, 0);
  for (int32_t l : labels) ++counts[l];
  int present = 0;
  for (int64_t c : counts) present += c > 0;
  if (present < 2)
    throw std::invalid_argument("silhouette needs at least 2 clusters");

  double total = 0.0;
  std::vector<double> sum(k);
  for (int i = 0; i < n; ++i) {
    std::fill(sum.begin(), sum.end(), 0.0);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      sum[labels[j]] += std::sqrt(row_dist2(emb, j, emb.row(i)));
    }
    int32_t own = labels[i];
    if (counts[own] == 1) continue;  // singleton scores 0
    double a = sum[own] / double(counts[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c == own || counts[c] == 0) continue;
      b = std::min(b, sum[c] / double(counts[c]));
    }
    double m = std::max(a, b);
    total += m == 0.0 ? 0.0 : (b - a) / m;
  }
  return total / double(n);
}

Mat pca_project(const Mat& emb, int out_dim) {
  int n = emb.rows, d = emb.cols;
  if (out_dim < 1) throw std::invalid_argument("out_dim must be >= 1");
  if (n < out_dim) throw std::invalid_argument("fewer rows than components");
  Mat x = emb;
  for (int j = 0; j < d; ++j) {
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += x(i, j);
    mean /= double(n);
    for (int i = 0; i < n; ++i) x(i, j) -= mean;
  }
  double var0 = 0.0;
  for (double v : x.v) var0 += v * v;
  if (var0 == 0.0) throw std::invalid_argument("zero-variance input");

  Rng rng(0x9e3779b97f4a7c15ULL);
  double scale = n > 1 ? 1.0 / double(n - 1) : 1.0;
  Mat out(n, out_dim);
  std::vector<double> v(d), u(n), w(d);
  for (int comp = 0; comp < out_dim; ++comp) {
    double resid = 0.0;
    for (double t : x.v) resid += t * t;
    if (resid * scale < 1e-24) break;  // rank exhausted, columns stay zero

    for (int j = 0; j < d; ++j) v[j] = rng.normal();
    double nv = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (int j = 0; j < d; ++j) v[j] /= nv;
    double prev = 0.0;
    for (int iter = 0; iter < 10000; ++iter) {
      kernels::matmul_nn(x.data(), v.data(), u.data(), n, d, 1);
      kernels::matmul_tn(x.data(), u.data(), w.data(), d, n, 1);
      for (int j = 0; j < d; ++j) w[j] *= scale;
      double lambda =
          std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
      if (lambda < 1e-300) break;
      for (int j = 0; j < d; ++j) v[j] = w[j] / lambda;
      if (std::abs(lambda - prev) <= 1e-10 * std::max(1.0, lambda)) break;
      prev = lambda;
    }
    int top = 0;
    for (int j = 1; j < d; ++j)
      if (std::abs(v[j]) > std::abs(v[top])) top = j;
    if (v[top] < 0.0)
      for (int j = 0; j < d; ++j) v[j] = -v[j];

    kernels::matmul_nn(x.data(), v.data(), u.data(), n, d, 1);
    for (int i = 0; i < n; ++i) {
      out(i, comp) = u[i];
      double* row = x.row(i);
      for (int j = 0; j < d; ++j) row[j] -= u[i] * v[j];
    }
  }
  return out;
}

}  // namespace csgrl::eval
