#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "csgrl/csr.hpp"
#include "csgrl/hetgraph.hpp"
#include "csgrl/mat.hpp"

namespace csgrl::ad {

/// Thrown when a computation produces non-finite values.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Tape;

/// Dense matrix value, optionally recorded on a tape. A Tensor without a tape
/// node is a constant: no gradient ever flows into it.
struct Tensor {
  std::shared_ptr<Mat> value;
  Tape* tape = nullptr;
  int node = -1;

  int rows() const { return value->rows; }
  int cols() const { return value->cols; }
  const Mat& val() const { return *value; }
  bool tracked() const { return tape != nullptr && node >= 0; }

  /// Value of a 1x1 tensor.
  double scalar() const;
};

Tensor constant(Mat m);

/// Named trainable matrix with a same-shape gradient accumulator.
struct Parameter {
  std::string name;
  Mat value;
  Mat grad;

  Parameter() = default;
  Parameter(std::string n, Mat v) : name(std::move(n)), value(std::move(v)) {
    grad = Mat(value.rows, value.cols);
  }
};

/// Ordered record of forward ops; backward replays them in exact reverse
/// order. Single-threaded by contract; independent tapes may run in parallel.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers p as a leaf; repeated calls return the same node, and
  /// backward() accumulates (+=) into p.grad.
  Tensor watch(Parameter& p);

  /// Seeds d(loss)/d(loss) = 1 and pulls gradients back to every watched
  /// parameter reachable from loss. loss must be a 1x1 tensor recorded on
  /// this tape; a second call without re-recording throws.
  void backward(const Tensor& loss);

  size_t num_nodes() const { return nodes_.size(); }

  // Internal surface for the op implementations.
  int add_node(std::shared_ptr<Mat> value, Parameter* param = nullptr);
  void set_pull(int node, std::function<void()> pull);
  Mat& grad(int node);
  const Mat& value(int node) const { return *nodes_[node].value; }

 private:
  struct Node {
    std::shared_ptr<Mat> value;
    Mat grad_mat;
    bool grad_ready = false;
    std::function<void()> pull;
    Parameter* param = nullptr;
  };
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> watched_;
  bool backward_done_ = false;
};

enum class ActivationKind { Tanh, Elu };

ActivationKind activation_from_string(const std::string& s);
std::string to_string(ActivationKind k);

// Each op validates shapes, computes the forward value, checks it is finite,
// and records the backward rule when any input is tracked. Sparse operands
// are constants: gradient flows only to the dense input.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor add_row_bias(const Tensor& a, const Tensor& bias_row);
Tensor activation(const Tensor& a, ActivationKind kind);
Tensor spmm(const SparseMatrix& s, const Tensor& d);
Tensor row_scale(const Tensor& a, const std::vector<double>& coeff);
Tensor weighted_sum(const std::vector<Tensor>& ts, const Tensor& w);
Tensor softmax_vec(const Tensor& v);
Tensor mean_rows(const Tensor& a);
Tensor concat_scalars(const std::vector<Tensor>& xs);

/// -(2/|V|) sum_i sum_{j in N_i} cos(p_i, z_j). The target matrix z must be
/// detached; rows with norm below 1e-8 use a clamped denominator.
Tensor cosine_pair_loss(const Tensor& p, const Tensor& z, const PositiveSet& positives);

/// Mean softmax cross-entropy of logits over the given rows.
Tensor masked_cross_entropy(const Tensor& logits, const std::vector<int32_t>& labels,
                            const std::vector<int32_t>& rows);

/// Central-difference check of tape gradients for a deterministic scalar
/// forward closure. Returns the worst per-entry error |fd - ad| scaled by
/// max(1, |fd|, |ad|). Parameter values and gradients are restored on exit.
double finite_diff_check(const std::function<Tensor(Tape&)>& f,
                         const std::vector<Parameter*>& params, double step);

}  // namespace csgrl::ad
