#include "autodiff.hpp"

#include <cmath>

#include "errors.hpp"

namespace lsr::ad {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
}

}  // namespace

Var Tape::push(Matrix value, std::function<void()> backward) {
  Node n;
  n.value = std::move(value);
  if (record_) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(Parameter& p) {
  if (auto it = param_ids_.find(&p); it != param_ids_.end()) return Var{it->second};
  Node n;
  n.param = &p;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_ids_.emplace(&p, id);
  return Var{id};
}

Var Tape::param(const Parameter& p) {
  if (record_) throw InvalidArgument("const parameter bound to a recording tape");
  return param(const_cast<Parameter&>(p));
}

Var Tape::constant(Matrix m) { return push(std::move(m)); }

const Matrix& Tape::value(Var v) const {
  const Node& n = nodes_[static_cast<std::size_t>(v.id)];
  return n.param ? n.param->value : n.value;
}

Matrix& Tape::grad(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.param) return n.param->grad;
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

bool Tape::has_grad(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  return n.grad.size() != 0;
}

void Tape::backward(Var out) {
  if (!record_) throw InvalidArgument("backward() on a non-recording tape");
  const Matrix& v = value(out);
  if (v.rows() != 1 || v.cols() != 1) throw ShapeError("backward() needs a scalar output");
  grad(out.id)(0, 0) += 1.0;
  for (int i = out.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.param || !n.backward || !has_grad(i)) continue;
    n.backward();
  }
}

Var Tape::matmul(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  if (A.cols() != B.rows()) throw ShapeError("matmul: inner dimensions differ");
  Matrix out(A.rows(), B.cols());
  out.noalias() = A * B;
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), [this, a, b, id] {
    const Matrix& g = grad(id);
    grad(a.id).noalias() += g * value(b).transpose();
    grad(b.id).noalias() += value(a).transpose() * g;
  });
}

Var Tape::matmul_bt(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  if (A.cols() != B.cols()) throw ShapeError("matmul_bt: inner dimensions differ");
  Matrix out(A.rows(), B.rows());
  out.noalias() = A * B.transpose();
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), [this, a, b, id] {
    const Matrix& g = grad(id);
    grad(a.id).noalias() += g * value(b);
    grad(b.id).noalias() += g.transpose() * value(a);
  });
}

Var Tape::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  const int id = static_cast<int>(nodes_.size());
  return push(value(a) + value(b), [this, a, b, id] {
    grad(a.id) += grad(id);
    grad(b.id) += grad(id);
  });
}

Var Tape::sub(Var a, Var b) {
  require_same_shape(value(a), value(b), "sub");
  const int id = static_cast<int>(nodes_.size());
  return push(value(a) - value(b), [this, a, b, id] {
    grad(a.id) += grad(id);
    grad(b.id) -= grad(id);
  });
}

Var Tape::mul(Var a, Var b) {
  require_same_shape(value(a), value(b), "mul");
  const int id = static_cast<int>(nodes_.size());
  return push(value(a).cwiseProduct(value(b)), [this, a, b, id] {
    const Matrix& g = grad(id);
    grad(a.id) += g.cwiseProduct(value(b));
    grad(b.id) += g.cwiseProduct(value(a));
  });
}

Var Tape::scale(Var a, double s) {
  const int id = static_cast<int>(nodes_.size());
  return push(value(a) * s, [this, a, s, id] { grad(a.id) += grad(id) * s; });
}

Var Tape::add_scalar(Var a, double s) {
  const int id = static_cast<int>(nodes_.size());
  return push(value(a).array() + s, [this, a, id] { grad(a.id) += grad(id); });
}

Var Tape::add_row(Var a, Var row) {
  const Matrix& A = value(a);
  const Matrix& R = value(row);
  if (R.rows() != 1 || R.cols() != A.cols()) throw ShapeError("add_row: row shape mismatch");
  Matrix out = A;
  out.rowwise() += R.row(0);
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), [this, a, row, id] {
    const Matrix& g = grad(id);
    grad(a.id) += g;
    grad(row.id) += g.colwise().sum();
  });
}

Var Tape::mul_row(Var a, Var row) {
  const Matrix& A = value(a);
  const Matrix& R = value(row);
  if (R.rows() != 1 || R.cols() != A.cols()) throw ShapeError("mul_row: row shape mismatch");
  Matrix out = A.array().rowwise() * R.row(0).array();
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), [this, a, row, id] {
    const Matrix& g = grad(id);
    grad(a.id).array() += g.array().rowwise() * value(row).row(0).array();
    grad(row.id) += g.cwiseProduct(value(a)).colwise().sum();
  });
}

Var Tape::add_const(Var a, const Matrix& c) {
  require_same_shape(value(a), c, "add_const");
  const int id = static_cast<int>(nodes_.size());
  return push(value(a) + c, [this, a, id] { grad(a.id) += grad(id); });
}

Var Tape::tanh(Var a) {
  const int id = static_cast<int>(nodes_.size());
  return push(value(a).array().tanh().matrix(), [this, a, id] {
    const Matrix& y = value(Var{id});
    grad(a.id).array() += grad(id).array() * (1.0 - y.array().square());
  });
}

Var Tape::exp(Var a) {
  const int id = static_cast<int>(nodes_.size());
  return push(value(a).array().exp().matrix(), [this, a, id] {
    grad(a.id) += grad(id).cwiseProduct(value(Var{id}));
  });
}

Var Tape::log(Var a) {
  const int id = static_cast<int>(nodes_.size());
  return push(value(a).array().log().matrix(), [this, a, id] {
    grad(a.id).array() += grad(id).array() / value(a).array();
  });
}

Var Tape::clamp(Var a, double lo, double hi) {
  const int id = static_cast<int>(nodes_.size());
  return push(value(a).cwiseMax(lo).cwiseMin(hi), [this, a, lo, hi, id] {
    const Matrix& x = value(a);
    const Matrix& g = grad(id);
    Matrix& ga = grad(a.id);
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (x.data()[i] > lo && x.data()[i] < hi) ga.data()[i] += g.data()[i];
  });
}

Var Tape::softmax_rows(Var a) {
  const Matrix& A = value(a);
  Matrix out(A.rows(), A.cols());
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    const double mx = A.row(r).maxCoeff();
    out.row(r) = (A.row(r).array() - mx).exp();
    out.row(r) /= out.row(r).sum();
  }
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), [this, a, id] {
    const Matrix& y = value(Var{id});
    const Matrix& g = grad(id);
    Matrix& ga = grad(a.id);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const double dot = g.row(r).dot(y.row(r));
      ga.row(r).array() += y.row(r).array() * (g.row(r).array() - dot);
    }
  });
}

Var Tape::layer_norm_rows(Var a, Var gamma, Var beta, double eps) {
  const Matrix& A = value(a);
  const Matrix& G = value(gamma);
  const Matrix& B = value(beta);
  if (G.rows() != 1 || G.cols() != A.cols() || B.rows() != 1 || B.cols() != A.cols())
    throw ShapeError("layer_norm_rows: gain/bias shape mismatch");
  const Eigen::Index n = A.cols();
  Matrix xhat(A.rows(), n);
  Eigen::VectorXd inv_std(A.rows());
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    const double mean = A.row(r).mean();
    const double var = (A.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (A.row(r).array() - mean) * inv_std(r);
  }
  Matrix out = xhat.array().rowwise() * G.row(0).array();
  out.rowwise() += B.row(0);
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), [this, a, gamma, beta, id, xhat = std::move(xhat),
                               inv_std = std::move(inv_std), n] {
    const Matrix& g = grad(id);
    grad(beta.id) += g.colwise().sum();
    grad(gamma.id) += g.cwiseProduct(xhat).colwise().sum();
    const auto& G = value(gamma);
    Matrix& ga = grad(a.id);
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      const Eigen::ArrayXd dxhat = (g.row(r).array() * G.row(0).array()).transpose();
      const Eigen::ArrayXd xh = xhat.row(r).transpose().array();
      const double s1 = dxhat.sum();
      const double s2 = (dxhat * xh).sum();
      const Eigen::ArrayXd dx =
          (inv_std(r) / static_cast<double>(n)) * (static_cast<double>(n) * dxhat - s1 - xh * s2);
      ga.row(r).array() += dx.transpose();
    }
  });
}

Var Tape::gather_rows(Var table, std::span<const int> ids) {
  const Matrix& T = value(table);
  Matrix out(static_cast<Eigen::Index>(ids.size()), T.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= T.rows()) throw ShapeError("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = T.row(ids[i]);
  }
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), [this, table, id, idx = std::vector<int>(ids.begin(), ids.end())] {
    const Matrix& g = grad(id);
    Matrix& gt = grad(table.id);
    for (std::size_t i = 0; i < idx.size(); ++i) gt.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
  });
}

Var Tape::reshape(Var a, int rows, int cols) {
  const Matrix& A = value(a);
  if (static_cast<Eigen::Index>(rows) * cols != A.size()) throw ShapeError("reshape: size mismatch");
  Matrix out = Eigen::Map<const Matrix>(A.data(), rows, cols);
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), [this, a, id] {
    Matrix& ga = grad(a.id);
    const Matrix& g = grad(id);
    Eigen::Map<Matrix>(ga.data(), g.rows(), g.cols()) += g;
  });
}

Var Tape::concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const Eigen::Index cols = value(parts[0]).cols();
  Eigen::Index rows = 0;
  for (Var p : parts) {
    if (value(p).cols() != cols) throw ShapeError("concat_rows: column mismatch");
    rows += value(p).rows();
  }
  Matrix out(rows, cols);
  Eigen::Index r = 0;
  for (Var p : parts) {
    out.middleRows(r, value(p).rows()) = value(p);
    r += value(p).rows();
  }
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), [this, id, ps = std::vector<Var>(parts.begin(), parts.end())] {
    const Matrix& g = grad(id);
    Eigen::Index r0 = 0;
    for (Var p : ps) {
      const Eigen::Index n = value(p).rows();
      grad(p.id) += g.middleRows(r0, n);
      r0 += n;
    }
  });
}

Var Tape::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const Eigen::Index rows = value(parts[0]).rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    if (value(p).rows() != rows) throw ShapeError("concat_cols: row mismatch");
    cols += value(p).cols();
  }
  Matrix out(rows, cols);
  Eigen::Index c = 0;
  for (Var p : parts) {
    out.middleCols(c, value(p).cols()) = value(p);
    c += value(p).cols();
  }
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), [this, id, ps = std::vector<Var>(parts.begin(), parts.end())] {
    const Matrix& g = grad(id);
    Eigen::Index c0 = 0;
    for (Var p : ps) {
      const Eigen::Index n = value(p).cols();
      grad(p.id) += g.middleCols(c0, n);
      c0 += n;
    }
  });
}

Var Tape::slice_rows(Var a, int r0, int n) {
  const Matrix& A = value(a);
  if (r0 < 0 || n < 0 || r0 + n > A.rows()) throw ShapeError("slice_rows: out of range");
  const int id = static_cast<int>(nodes_.size());
  return push(A.middleRows(r0, n), [this, a, r0, n, id] { grad(a.id).middleRows(r0, n) += grad(id); });
}

Var Tape::slice_cols(Var a, int c0, int n) {
  const Matrix& A = value(a);
  if (c0 < 0 || n < 0 || c0 + n > A.cols()) throw ShapeError("slice_cols: out of range");
  const int id = static_cast<int>(nodes_.size());
  return push(A.middleCols(c0, n), [this, a, c0, n, id] { grad(a.id).middleCols(c0, n) += grad(id); });
}

Var Tape::mean_rows(Var a) {
  const Matrix& A = value(a);
  const double inv = 1.0 / static_cast<double>(A.rows());
  const int id = static_cast<int>(nodes_.size());
  return push(A.colwise().sum() * inv, [this, a, inv, id] {
    grad(a.id).rowwise() += grad(id).row(0) * inv;
  });
}

Var Tape::sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = value(a).sum();
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), [this, a, id] { grad(a.id).array() += grad(id)(0, 0); });
}

Var Tape::cross_entropy_rows(Var logits, std::span<const int> targets) {
  const Matrix& L = value(logits);
  if (static_cast<Eigen::Index>(targets.size()) != L.rows())
    throw ShapeError("cross_entropy_rows: one target per row required");
  Matrix probs(L.rows(), L.cols());
  double total = 0.0;
  for (Eigen::Index r = 0; r < L.rows(); ++r) {
    const double mx = L.row(r).maxCoeff();
    probs.row(r) = (L.row(r).array() - mx).exp();
    const double z = probs.row(r).sum();
    probs.row(r) /= z;
    const int t = targets[static_cast<std::size_t>(r)];
    if (t < 0 || t >= L.cols()) throw ShapeError("cross_entropy_rows: target out of range");
    total += -(L(r, t) - mx - std::log(z));
  }
  Matrix out(1, 1);
  out(0, 0) = total;
  const int id = static_cast<int>(nodes_.size());
  return push(std::move(out), [this, logits, id, probs = std::move(probs),
                               tg = std::vector<int>(targets.begin(), targets.end())] {
    const double g = grad(id)(0, 0);
    Matrix& gl = grad(logits.id);
    gl += probs * g;
    for (std::size_t r = 0; r < tg.size(); ++r) gl(static_cast<Eigen::Index>(r), tg[r]) -= g;
  });
}

}  // namespace lsr::ad
