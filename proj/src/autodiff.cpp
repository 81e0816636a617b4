#include "csgrl/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "csgrl/kernels.hpp"

namespace csgrl::ad {

namespace {

void ensure_finite(const Mat& m, const char* op) {
  if (!m.all_finite())
    throw NumericError(std::string(op) + ": non-finite output");
}

Tape* merge_tapes(std::initializer_list<const Tensor*> ts, const char* op) {
  Tape* tape = nullptr;
  for (const Tensor* t : ts) {
    if (!t->tracked()) continue;
    if (tape == nullptr)
      tape = t->tape;
    else if (tape != t->tape)
      throw std::invalid_argument(std::string(op) + ": operands recorded on different tapes");
  }
  return tape;
}

Tensor finish(Tape* tape, std::shared_ptr<Mat> val, const char* op,
              std::function<std::function<void()>(int)> pull_factory) {
  ensure_finite(*val, op);
  Tensor out;
  out.value = std::move(val);
  if (tape != nullptr) {
    out.tape = tape;
    out.node = tape->add_node(out.value);
    tape->set_pull(out.node, pull_factory(out.node));
  }
  return out;
}

}  // namespace

double Tensor::scalar() const {
  if (rows() != 1 || cols() != 1)
    throw std::invalid_argument("Tensor::scalar: tensor is " + shape_str(*value));
  return value->v[0];
}

Tensor constant(Mat m) {
  Tensor t;
  t.value = std::make_shared<Mat>(std::move(m));
  return t;
}

Tensor Tape::watch(Parameter& p) {
  auto it = watched_.find(&p);
  if (it != watched_.end()) {
    Tensor t;
    t.value = nodes_[it->second].value;
    t.tape = this;
    t.node = it->second;
    return t;
  }
  Tensor t;
  t.value = std::make_shared<Mat>(p.value);
  t.tape = this;
  t.node = add_node(t.value, &p);
  watched_.emplace(&p, t.node);
  return t;
}

int Tape::add_node(std::shared_ptr<Mat> value, Parameter* param) {
  Node n;
  n.value = std::move(value);
  n.param = param;
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::set_pull(int node, std::function<void()> pull) {
  nodes_[node].pull = std::move(pull);
}

Mat& Tape::grad(int node) {
  Node& n = nodes_[node];
  if (!n.grad_ready) {
    n.grad_mat = Mat(n.value->rows, n.value->cols);
    n.grad_ready = true;
  }
  return n.grad_mat;
}

void Tape::backward(const Tensor& loss) {
  if (backward_done_)
    throw std::runtime_error("Tape::backward: called twice without re-recording");
  if (!loss.tracked() || loss.tape != this)
    throw std::invalid_argument("Tape::backward: loss not recorded on this tape");
  if (loss.rows() != 1 || loss.cols() != 1)
    throw std::invalid_argument("Tape::backward: loss is not a scalar");
  backward_done_ = true;

  grad(loss.node)(0, 0) = 1.0;
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    if (!nodes_[i].grad_ready) continue;  // not reachable from the loss
    if (nodes_[i].pull) nodes_[i].pull();
  }
  for (auto& [p, node] : watched_) {
    Node& n = nodes_[node];
    if (!n.grad_ready) continue;
    Parameter* param = n.param;
    kernels::axpy(1.0, n.grad_mat.data(), param->grad.data(), param->grad.size());
  }
}

ActivationKind activation_from_string(const std::string& s) {
  if (s == "tanh") return ActivationKind::Tanh;
  if (s == "elu") return ActivationKind::Elu;
  throw std::invalid_argument("unknown activation: " + s);
}

std::string to_string(ActivationKind k) {
  return k == ActivationKind::Tanh ? "tanh" : "elu";
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: shape mismatch " + shape_str(a.val()) + " * " +
                                shape_str(b.val()));
  Tape* tape = merge_tapes({&a, &b}, "matmul");
  auto val = std::make_shared<Mat>(a.rows(), b.cols());
  kernels::matmul_nn(a.value->data(), b.value->data(), val->data(), a.rows(), a.cols(),
                     b.cols());
  return finish(tape, val, "matmul", [=](int out) {
    return [tape, out, a, b]() {
      const Mat& dc = tape->grad(out);
      int n = a.rows(), k = a.cols(), m = b.cols();
      if (a.tracked())
        kernels::matmul_nt(dc.data(), b.value->data(), tape->grad(a.node).data(), n, m, k,
                           true);
      if (b.tracked())
        kernels::matmul_tn(a.value->data(), dc.data(), tape->grad(b.node).data(), k, n, m,
                           true);
    };
  });
}

Tensor transpose(const Tensor& a) {
  Tape* tape = merge_tapes({&a}, "transpose");
  auto val = std::make_shared<Mat>(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) (*val)(j, i) = (*a.value)(i, j);
  return finish(tape, val, "transpose", [=](int out) {
    return [tape, out, a]() {
      if (!a.tracked()) return;
      const Mat& dc = tape->grad(out);
      Mat& da = tape->grad(a.node);
      for (int i = 0; i < dc.rows; ++i)
        for (int j = 0; j < dc.cols; ++j) da(j, i) += dc(i, j);
    };
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.value->same_shape(*b.value))
    throw std::invalid_argument("add: shape mismatch " + shape_str(a.val()) + " vs " +
                                shape_str(b.val()));
  Tape* tape = merge_tapes({&a, &b}, "add");
  auto val = std::make_shared<Mat>(a.rows(), a.cols());
  for (size_t i = 0; i < val->size(); ++i) val->v[i] = a.value->v[i] + b.value->v[i];
  return finish(tape, val, "add", [=](int out) {
    return [tape, out, a, b]() {
      const Mat& dc = tape->grad(out);
      if (a.tracked()) kernels::axpy(1.0, dc.data(), tape->grad(a.node).data(), dc.size());
      if (b.tracked()) kernels::axpy(1.0, dc.data(), tape->grad(b.node).data(), dc.size());
    };
  });
}

Tensor add_row_bias(const Tensor& a, const Tensor& bias_row) {
  if (bias_row.rows() != 1 || bias_row.cols() != a.cols())
    throw std::invalid_argument("add_row_bias: bias is " + shape_str(bias_row.val()) +
                                ", expected 1x" + std::to_string(a.cols()));
  Tape* tape = merge_tapes({&a, &bias_row}, "add_row_bias");
  auto val = std::make_shared<Mat>(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) (*val)(i, j) = (*a.value)(i, j) + (*bias_row.value)(0, j);
  return finish(tape, val, "add_row_bias", [=](int out) {
    return [tape, out, a, bias_row]() {
      const Mat& dc = tape->grad(out);
      if (a.tracked()) kernels::axpy(1.0, dc.data(), tape->grad(a.node).data(), dc.size());
      if (bias_row.tracked()) {
        Mat& db = tape->grad(bias_row.node);
        for (int i = 0; i < dc.rows; ++i)
          for (int j = 0; j < dc.cols; ++j) db(0, j) += dc(i, j);
      }
    };
  });
}

Tensor activation(const Tensor& a, ActivationKind kind) {
  Tape* tape = merge_tapes({&a}, "activation");
  auto val = std::make_shared<Mat>(a.rows(), a.cols());
  if (kind == ActivationKind::Tanh)
    kernels::tanh_forward(a.value->data(), val->data(), val->size());
  else
    kernels::elu_forward(a.value->data(), val->data(), val->size());
  auto y = val;
  return finish(tape, val, "activation", [=](int out) {
    return [tape, out, a, y, kind]() {
      if (!a.tracked()) return;
      const Mat& dc = tape->grad(out);
      Mat& da = tape->grad(a.node);
      if (kind == ActivationKind::Tanh)
        kernels::tanh_backward(y->data(), dc.data(), da.data(), dc.size());
      else
        kernels::elu_backward(y->data(), dc.data(), da.data(), dc.size());
    };
  });
}

Tensor spmm(const SparseMatrix& s, const Tensor& d) {
  if (s.cols() != d.rows())
    throw std::invalid_argument("spmm: operator has " + std::to_string(s.cols()) +
                                " columns, dense input has " + std::to_string(d.rows()) +
                                " rows");
  Tape* tape = merge_tapes({&d}, "spmm");
  auto val = std::make_shared<Mat>(s.rows(), d.cols());
  kernels::spmm(s.rows(), s.structure.row_offsets.data(), s.structure.col_indices.data(),
                s.weights.data(), d.value->data(), d.cols(), val->data());
  const SparseMatrix* sp = &s;  // aggregation operators outlive every tape
  return finish(tape, val, "spmm", [=](int out) {
    return [tape, out, d, sp]() {
      if (!d.tracked()) return;
      const Mat& dc = tape->grad(out);
      kernels::spmm(sp->t_structure.rows, sp->t_structure.row_offsets.data(),
                    sp->t_structure.col_indices.data(), sp->t_weights.data(), dc.data(),
                    dc.cols, tape->grad(d.node).data(), true);
    };
  });
}

Tensor row_scale(const Tensor& a, const std::vector<double>& coeff) {
  if (static_cast<int>(coeff.size()) != a.rows())
    throw std::invalid_argument("row_scale: coefficient count != rows");
  Tape* tape = merge_tapes({&a}, "row_scale");
  auto val = std::make_shared<Mat>(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) (*val)(i, j) = coeff[i] * (*a.value)(i, j);
  auto c = std::make_shared<std::vector<double>>(coeff);
  return finish(tape, val, "row_scale", [=](int out) {
    return [tape, out, a, c]() {
      if (!a.tracked()) return;
      const Mat& dc = tape->grad(out);
      Mat& da = tape->grad(a.node);
      for (int i = 0; i < dc.rows; ++i)
        for (int j = 0; j < dc.cols; ++j) da(i, j) += (*c)[i] * dc(i, j);
    };
  });
}

Tensor weighted_sum(const std::vector<Tensor>& ts, const Tensor& w) {
  if (ts.empty()) throw std::invalid_argument("weighted_sum: empty tensor list");
  if (w.rows() != 1 || w.cols() != static_cast<int>(ts.size()))
    throw std::invalid_argument("weighted_sum: weights are " + shape_str(w.val()) +
                                ", expected 1x" + std::to_string(ts.size()));
  for (const auto& t : ts)
    if (!t.value->same_shape(*ts[0].value))
      throw std::invalid_argument("weighted_sum: mismatched channel shapes");

  std::vector<const Tensor*> all{&w};
  for (const auto& t : ts) all.push_back(&t);
  Tape* tape = nullptr;
  for (const Tensor* t : all) {
    if (!t->tracked()) continue;
    if (tape == nullptr)
      tape = t->tape;
    else if (tape != t->tape)
      throw std::invalid_argument("weighted_sum: operands recorded on different tapes");
  }

  auto val = std::make_shared<Mat>(ts[0].rows(), ts[0].cols());
  for (size_t t = 0; t < ts.size(); ++t)
    kernels::axpy((*w.value)(0, static_cast<int>(t)), ts[t].value->data(), val->data(),
                  val->size());
  auto channels = std::make_shared<std::vector<Tensor>>(ts);
  return finish(tape, val, "weighted_sum", [=](int out) {
    return [tape, out, channels, w]() {
      const Mat& dc = tape->grad(out);
      for (size_t t = 0; t < channels->size(); ++t) {
        const Tensor& ct = (*channels)[t];
        if (ct.tracked())
          kernels::axpy((*w.value)(0, static_cast<int>(t)), dc.data(),
                        tape->grad(ct.node).data(), dc.size());
        if (w.tracked()) {
          double s = 0.0;
          for (size_t i = 0; i < dc.size(); ++i) s += dc.v[i] * ct.value->v[i];
          tape->grad(w.node)(0, static_cast<int>(t)) += s;
        }
      }
    };
  });
}

Tensor softmax_vec(const Tensor& v) {
  if (v.rows() != 1) throw std::invalid_argument("softmax_vec: expected a 1xT tensor");
  Tape* tape = merge_tapes({&v}, "softmax_vec");
  int t = v.cols();
  auto val = std::make_shared<Mat>(1, t);
  double mx = *std::max_element(v.value->v.begin(), v.value->v.end());
  double z = 0.0;
  for (int j = 0; j < t; ++j) z += std::exp((*v.value)(0, j) - mx);
  for (int j = 0; j < t; ++j) (*val)(0, j) = std::exp((*v.value)(0, j) - mx) / z;
  auto beta = val;
  return finish(tape, val, "softmax_vec", [=](int out) {
    return [tape, out, v, beta]() {
      if (!v.tracked()) return;
      const Mat& db = tape->grad(out);
      double dot = 0.0;
      for (int j = 0; j < db.cols; ++j) dot += db(0, j) * (*beta)(0, j);
      Mat& dv = tape->grad(v.node);
      for (int j = 0; j < db.cols; ++j) dv(0, j) += (*beta)(0, j) * (db(0, j) - dot);
    };
  });
}

Tensor mean_rows(const Tensor& a) {
  if (a.rows() < 1) throw std::invalid_argument("mean_rows: empty tensor");
  Tape* tape = merge_tapes({&a}, "mean_rows");
  auto val = std::make_shared<Mat>(1, a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) (*val)(0, j) += (*a.value)(i, j);
  double inv = 1.0 / a.rows();
  for (int j = 0; j < a.cols(); ++j) (*val)(0, j) *= inv;
  return finish(tape, val, "mean_rows", [=](int out) {
    return [tape, out, a, inv]() {
      if (!a.tracked()) return;
      const Mat& dc = tape->grad(out);
      Mat& da = tape->grad(a.node);
      for (int i = 0; i < da.rows; ++i)
        for (int j = 0; j < da.cols; ++j) da(i, j) += inv * dc(0, j);
    };
  });
}

Tensor concat_scalars(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_scalars: empty list");
  Tape* tape = nullptr;
  for (const auto& x : xs) {
    if (x.rows() != 1 || x.cols() != 1)
      throw std::invalid_argument("concat_scalars: inputs must be 1x1");
    if (!x.tracked()) continue;
    if (tape == nullptr)
      tape = x.tape;
    else if (tape != x.tape)
      throw std::invalid_argument("concat_scalars: operands recorded on different tapes");
  }
  auto val = std::make_shared<Mat>(1, static_cast<int>(xs.size()));
  for (size_t j = 0; j < xs.size(); ++j) (*val)(0, static_cast<int>(j)) = xs[j].value->v[0];
  auto inputs = std::make_shared<std::vector<Tensor>>(xs);
  return finish(tape, val, "concat_scalars", [=](int out) {
    return [tape, out, inputs]() {
      const Mat& dc = tape->grad(out);
      for (size_t j = 0; j < inputs->size(); ++j)
        if ((*inputs)[j].tracked())
          tape->grad((*inputs)[j].node)(0, 0) += dc(0, static_cast<int>(j));
    };
  });
}

Tensor cosine_pair_loss(const Tensor& p, const Tensor& z, const PositiveSet& positives) {
  if (!p.value->same_shape(*z.value))
    throw std::invalid_argument("cosine_pair_loss: shape mismatch " + shape_str(p.val()) +
                                " vs " + shape_str(z.val()));
  if (z.tracked())
    throw std::invalid_argument("cosine_pair_loss: target matrix must be detached");
  int n = p.rows();
  if (static_cast<int>(positives.neighbors.size()) != n)
    throw std::invalid_argument("cosine_pair_loss: positive set covers " +
                                std::to_string(positives.neighbors.size()) + " nodes, need " +
                                std::to_string(n));
  for (int i = 0; i < n; ++i)
    if (positives.neighbors[i].empty())
      throw std::invalid_argument("cosine_pair_loss: empty positive set for node " +
                                  std::to_string(i));

  constexpr double kEps = 1e-8;
  int d = p.cols();
  auto norms = std::make_shared<std::vector<double>>();  // p-row norms, clamped
  auto znorms = std::make_shared<std::vector<double>>();
  norms->resize(n);
  znorms->resize(n);
  for (int i = 0; i < n; ++i) {
    double sp = 0.0, sz = 0.0;
    for (int j = 0; j < d; ++j) {
      sp += (*p.value)(i, j) * (*p.value)(i, j);
      sz += (*z.value)(i, j) * (*z.value)(i, j);
    }
    (*norms)[i] = std::max(std::sqrt(sp), kEps);
    (*znorms)[i] = std::max(std::sqrt(sz), kEps);
  }

  double scale = -2.0 / static_cast<double>(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* pi = p.value->row(i);
    for (int32_t j : positives.neighbors[i]) {
      if (j < 0 || j >= n)
        throw std::invalid_argument("cosine_pair_loss: positive id out of range");
      const double* zj = z.value->row(j);
      double dot = 0.0;
      for (int c = 0; c < d; ++c) dot += pi[c] * zj[c];
      total += dot / ((*norms)[i] * (*znorms)[j]);
    }
  }
  auto val = std::make_shared<Mat>(1, 1);
  (*val)(0, 0) = scale * total;

  Tape* tape = merge_tapes({&p}, "cosine_pair_loss");
  auto pos = std::make_shared<PositiveSet>(positives);
  return finish(tape, val, "cosine_pair_loss", [=](int out) {
    return [tape, out, p, z, pos, norms, znorms, scale]() {
      if (!p.tracked()) return;
      double g = tape->grad(out)(0, 0) * scale;
      Mat& dp = tape->grad(p.node);
      int n = p.rows(), d = p.cols();
      for (int i = 0; i < n; ++i) {
        const double* pi = p.value->row(i);
        double npi = (*norms)[i];
        double sp = 0.0;
        for (int c = 0; c < d; ++c) sp += pi[c] * pi[c];
        bool clamped = std::sqrt(sp) < npi;  // true norm below the floor
        double* dpi = dp.row(i);
        for (int32_t j : pos->neighbors[i]) {
          const double* zj = z.value->row(j);
          double inv = 1.0 / (npi * (*znorms)[j]);
          double dot = 0.0;
          for (int c = 0; c < d; ++c) dot += pi[c] * zj[c];
          // d cos / d p_i = z_j/(|p||z|) - cos * p_i/|p|^2 ; the second term
          // vanishes when the norm is clamped (denominator constant in p).
          double coef = clamped ? 0.0 : dot * inv / (npi * npi);
          for (int c = 0; c < d; ++c) dpi[c] += g * (zj[c] * inv - coef * pi[c]);
        }
      }
    };
  });
}

Tensor masked_cross_entropy(const Tensor& logits, const std::vector<int32_t>& labels,
                            const std::vector<int32_t>& rows) {
  int n = logits.rows(), c = logits.cols();
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("masked_cross_entropy: label count != rows");
  if (rows.empty()) throw std::invalid_argument("masked_cross_entropy: empty row subset");
  for (int32_t r : rows) {
    if (r < 0 || r >= n)
      throw std::invalid_argument("masked_cross_entropy: row index out of range");
    if (labels[r] < 0 || labels[r] >= c)
      throw std::invalid_argument("masked_cross_entropy: label out of range at row " +
                                  std::to_string(r));
  }
  Tape* tape = merge_tapes({&logits}, "masked_cross_entropy");

  // Per selected row: softmax probabilities, kept for the backward rule.
  auto probs = std::make_shared<Mat>(static_cast<int>(rows.size()), c);
  double total = 0.0;
  for (size_t k = 0; k < rows.size(); ++k) {
    const double* lr = logits.value->row(rows[k]);
    double mx = lr[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, lr[j]);
    double z = 0.0;
    for (int j = 0; j < c; ++j) z += std::exp(lr[j] - mx);
    double logz = std::log(z) + mx;
    for (int j = 0; j < c; ++j) (*probs)(static_cast<int>(k), j) = std::exp(lr[j] - logz);
    total += logz - lr[labels[rows[k]]];
  }
  auto val = std::make_shared<Mat>(1, 1);
  (*val)(0, 0) = total / static_cast<double>(rows.size());

  auto rows_copy = std::make_shared<std::vector<int32_t>>(rows);
  auto labels_copy = std::make_shared<std::vector<int32_t>>(labels);
  return finish(tape, val, "masked_cross_entropy", [=](int out) {
    return [tape, out, logits, probs, rows_copy, labels_copy]() {
      if (!logits.tracked()) return;
      double g = tape->grad(out)(0, 0) / static_cast<double>(rows_copy->size());
      Mat& dl = tape->grad(logits.node);
      int c = dl.cols;
      for (size_t k = 0; k < rows_copy->size(); ++k) {
        int32_t r = (*rows_copy)[k];
        double* dr = dl.row(r);
        const double* pr = probs->row(static_cast<int>(k));
        for (int j = 0; j < c; ++j) dr[j] += g * pr[j];
        dr[(*labels_copy)[r]] -= g;
      }
    };
  });
}

double finite_diff_check(const std::function<Tensor(Tape&)>& f,
                         const std::vector<Parameter*>& params, double step) {
  auto eval = [&]() {
    Tape t;
    return f(t).scalar();
  };
  double base1 = eval();
  double base2 = eval();
  if (base1 != base2)
    throw std::runtime_error("finite_diff_check: forward closure is non-deterministic");

  // Tape gradients at the current point, on scratch accumulators.
  std::vector<Mat> saved_grads;
  saved_grads.reserve(params.size());
  for (Parameter* p : params) {
    saved_grads.push_back(p->grad);
    p->grad.fill(0.0);
  }
  {
    Tape t;
    Tensor loss = f(t);
    t.backward(loss);
  }

  double worst = 0.0;
  for (Parameter* p : params) {
    for (size_t i = 0; i < p->value.size(); ++i) {
      double orig = p->value.v[i];
      p->value.v[i] = orig + step;
      double up = eval();
      p->value.v[i] = orig - step;
      double down = eval();
      p->value.v[i] = orig;
      double fd = (up - down) / (2.0 * step);
      double ad = p->grad.v[i];
      double err = std::abs(fd - ad) / std::max({1.0, std::abs(fd), std::abs(ad)});
      worst = std::max(worst, err);
    }
  }
  for (size_t k = 0; k < params.size(); ++k) params[k]->grad = saved_grads[k];
  return worst;
}

}  // namespace csgrl::ad
