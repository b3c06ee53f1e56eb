#pragma once

// Minimal reverse-mode automatic differentiation over dense row-major
// matrices. Every op records a closure on the result node; backward() walks
// the graph in reverse topological order. Parameters are ordinary leaf nodes
// that outlive a single graph and accumulate gradients until zero_grad().

#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace topicshift::ag {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  void accumulate(const Matrix& g);
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Var constant(Matrix value);
  static Var parameter(Matrix value);

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  /// Zero matrix of the right shape when no gradient has arrived.
  Matrix grad() const;
  bool has_grad() const { return node_->grad.size() != 0; }
  void zero_grad() { node_->grad.resize(0, 0); }
  bool requires_grad() const { return node_->requires_grad; }

  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  double item() const;

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Seeds d(root)/d(root) = 1 (root must be 1x1) and back-propagates.
void backward(const Var& root);

bool grad_enabled();

/// Disables graph recording in the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Linear algebra
Var matmul(const Var& a, const Var& b);
/// a * b^T
Var matmul_nt(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
/// Adds a 1 x n row to every row of a.
Var add_row(const Var& a, const Var& row);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_constant(const Var& a, const Matrix& c);

// Elementwise nonlinearities
Var relu(const Var& a);
Var tanh(const Var& a);
Var sigmoid(const Var& a);

// Structure
Var gather_rows(const Var& table, std::span<const int> rows);
Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count);
Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);

// Normalisation and attention
Var softmax_rows(const Var& a);
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);
/// Multi-head scaled dot-product attention. q: Lq x d, k/v: Lk x d.
Var attention(const Var& q, const Var& k, const Var& v, int heads, bool causal);
Var dropout(const Var& a, double p, std::mt19937_64& rng);

// Reductions and losses
Var sum(const Var& a);
Var sum_all(std::span<const Var> scalars);
/// Mean over rows of -log softmax(logits)[row, targets[row]]; returns 1 x 1.
Var cross_entropy(const Var& logits, std::span<const int> targets);

Matrix softmax_rows(const Matrix& a);

}  // namespace topicshift::ag
