#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace lsr::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A trainable tensor. `grad` accumulates across every tape that references it
// until zeroed by the optimizer.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)) {
    grad = Matrix::Zero(value.rows(), value.cols());
  }
  std::size_t size() const { return static_cast<std::size_t>(value.size()); }
};

struct Var {
  int id = -1;
};

// Reverse-mode differentiation over 2-D row-major matrices. Every op
// evaluates eagerly; when recording, it also stores a backward closure.
// backward() walks the nodes in reverse creation order.
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var param(Parameter& p);
  // Read-only binding; only valid on a non-recording tape.
  Var param(const Parameter& p);
  Var constant(Matrix m);
  const Matrix& value(Var v) const;
  double scalar(Var v) const { return value(v)(0, 0); }

  // Seeds d(out)/d(out) = 1 for a 1x1 output and propagates.
  void backward(Var out);

  Var matmul(Var a, Var b);
  Var matmul_bt(Var a, Var b);  // a * b^T
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var add_scalar(Var a, double s);
  Var add_row(Var a, Var row);  // broadcast a 1 x c row over every row of a
  Var mul_row(Var a, Var row);
  Var add_const(Var a, const Matrix& c);
  Var tanh(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var clamp(Var a, double lo, double hi);
  Var softmax_rows(Var a);
  Var layer_norm_rows(Var a, Var gamma, Var beta, double eps = 1e-5);
  Var gather_rows(Var table, std::span<const int> ids);
  Var reshape(Var a, int rows, int cols);
  Var concat_rows(std::span<const Var> parts);
  Var concat_cols(std::span<const Var> parts);
  Var slice_rows(Var a, int r0, int n);
  Var slice_cols(Var a, int c0, int n);
  Var mean_rows(Var a);
  Var sum(Var a);
  // Sum over rows of -log softmax(logits)[row, target[row]].
  Var cross_entropy_rows(Var logits, std::span<const int> targets);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Parameter* param = nullptr;
    Matrix grad;
    std::function<void()> backward;
  };

  Var push(Matrix value, std::function<void()> backward = {});
  Matrix& grad(int id);
  bool has_grad(int id) const;

  bool record_;
  std::vector<Node> nodes_;
  std::unordered_map<Parameter*, int> param_ids_;
};

}  // namespace lsr::ad
