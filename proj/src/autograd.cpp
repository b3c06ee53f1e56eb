#include "topicshift/autograd.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>

#include "topicshift/error.hpp"

namespace topicshift::ag {

namespace {

thread_local bool g_grad_enabled = true;

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw ShapeError(std::string(op) + ": " + detail);
}

// Builds the result node. The closure receives the result node; it reads
// parents through node.parents so no shared_ptr cycle is created.
Var make(Matrix value, std::initializer_list<const Var*> parents,
         std::function<void(Node&)> fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (g_grad_enabled) {
    bool any = false;
    for (const Var* p : parents) any = any || p->requires_grad();
    if (any) {
      node->requires_grad = true;
      for (const Var* p : parents) node->parents.push_back(p->shared());
      node->backward = std::move(fn);
    }
  }
  return Var(std::move(node));
}

Var make_many(Matrix value, std::span<const Var> parents, std::function<void(Node&)> fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (g_grad_enabled) {
    bool any = false;
    for (const auto& p : parents) any = any || p.requires_grad();
    if (any) {
      node->requires_grad = true;
      for (const auto& p : parents) node->parents.push_back(p.shared());
      node->backward = std::move(fn);
    }
  }
  return Var(std::move(node));
}

inline void push(Node& self, std::size_t i, const Matrix& g) {
  Node& p = *self.parents[i];
  if (p.requires_grad) p.accumulate(g);
}

}  // namespace

void Node::accumulate(const Matrix& g) {
  if (grad.size() == 0) {
    grad = g;
  } else {
    grad += g;
  }
}

Var Var::constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var Var::parameter(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

Matrix Var::grad() const {
  if (node_->grad.size() == 0) return Matrix::Zero(rows(), cols());
  return node_->grad;
}

double Var::item() const {
  require(rows() == 1 && cols() == 1, "item", "expected 1x1, got " + shape(value()));
  return value()(0, 0);
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

void backward(const Var& root) {
  require(root.rows() == 1 && root.cols() == 1, "backward", "root must be 1x1");
  if (!root.requires_grad()) return;

  // Iterative post-order DFS yields a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.node(), 0}};
  visited.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && parent->backward && !visited.contains(parent)) {
        visited.insert(parent);
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->accumulate(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && node->grad.size() != 0) node->backward(*node);
  }
  // Interior gradients are not needed after the pass.
  for (Node* node : order) {
    if (node->backward) node->grad.resize(0, 0);
  }
}

// ---------------------------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  require(a.cols() == b.rows(), "matmul", shape(a.value()) + " * " + shape(b.value()));
  return make(a.value() * b.value(), {&a, &b}, [](Node& self) {
    const Matrix& A = self.parents[0]->value;
    const Matrix& B = self.parents[1]->value;
    if (self.parents[0]->requires_grad) push(self, 0, self.grad * B.transpose());
    if (self.parents[1]->requires_grad) push(self, 1, A.transpose() * self.grad);
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  require(a.cols() == b.cols(), "matmul_nt", shape(a.value()) + " * T(" + shape(b.value()) + ")");
  return make(a.value() * b.value().transpose(), {&a, &b}, [](Node& self) {
    const Matrix& A = self.parents[0]->value;
    const Matrix& B = self.parents[1]->value;
    if (self.parents[0]->requires_grad) push(self, 0, self.grad * B);
    if (self.parents[1]->requires_grad) push(self, 1, self.grad.transpose() * A);
  });
}

Var add(const Var& a, const Var& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add",
          shape(a.value()) + " + " + shape(b.value()));
  return make(a.value() + b.value(), {&a, &b}, [](Node& self) {
    push(self, 0, self.grad);
    push(self, 1, self.grad);
  });
}

Var add_row(const Var& a, const Var& row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row",
          shape(a.value()) + " + row " + shape(row.value()));
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return make(std::move(out), {&a, &row}, [](Node& self) {
    push(self, 0, self.grad);
    if (self.parents[1]->requires_grad) push(self, 1, self.grad.colwise().sum());
  });
}

Var sub(const Var& a, const Var& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sub",
          shape(a.value()) + " - " + shape(b.value()));
  return make(a.value() - b.value(), {&a, &b}, [](Node& self) {
    push(self, 0, self.grad);
    if (self.parents[1]->requires_grad) push(self, 1, -self.grad);
  });
}

Var mul(const Var& a, const Var& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "mul",
          shape(a.value()) + " .* " + shape(b.value()));
  return make(a.value().cwiseProduct(b.value()), {&a, &b}, [](Node& self) {
    if (self.parents[0]->requires_grad) push(self, 0, self.grad.cwiseProduct(self.parents[1]->value));
    if (self.parents[1]->requires_grad) push(self, 1, self.grad.cwiseProduct(self.parents[0]->value));
  });
}

Var scale(const Var& a, double s) {
  return make(a.value() * s, {&a}, [s](Node& self) { push(self, 0, self.grad * s); });
}

Var add_constant(const Var& a, const Matrix& c) {
  require(a.rows() == c.rows() && a.cols() == c.cols(), "add_constant", shape(a.value()));
  return make(a.value() + c, {&a}, [](Node& self) { push(self, 0, self.grad); });
}

Var relu(const Var& a) {
  return make(a.value().cwiseMax(0.0), {&a}, [](Node& self) {
    const Matrix& x = self.parents[0]->value;
    push(self, 0, (x.array() > 0.0).select(self.grad, 0.0));
  });
}

Var tanh(const Var& a) {
  return make(a.value().array().tanh().matrix(), {&a}, [](Node& self) {
    const Matrix& y = self.value;
    push(self, 0, (self.grad.array() * (1.0 - y.array().square())).matrix());
  });
}

Var sigmoid(const Var& a) {
  Matrix y = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return make(std::move(y), {&a}, [](Node& self) {
    const Matrix& y = self.value;
    push(self, 0, (self.grad.array() * y.array() * (1.0 - y.array())).matrix());
  });
}

Var gather_rows(const Var& table, std::span<const int> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), table.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && rows[i] < table.rows(), "gather_rows",
            "row " + std::to_string(rows[i]) + " out of range " + shape(table.value()));
    out.row(static_cast<Eigen::Index>(i)) = table.value().row(rows[i]);
  }
  std::vector<int> idx(rows.begin(), rows.end());
  return make(std::move(out), {&table}, [idx = std::move(idx)](Node& self) {
    Node& t = *self.parents[0];
    if (!t.requires_grad) return;
    if (t.grad.size() == 0) t.grad = Matrix::Zero(t.value.rows(), t.value.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      t.grad.row(idx[i]) += self.grad.row(static_cast<Eigen::Index>(i));
    }
  });
}

Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows", shape(a.value()));
  return make(a.value().middleRows(start, count), {&a}, [start, count](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    if (p.grad.size() == 0) p.grad = Matrix::Zero(p.value.rows(), p.value.cols());
    p.grad.middleRows(start, count) += self.grad;
  });
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols", shape(a.value()));
  return make(a.value().middleCols(start, count), {&a}, [start, count](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    if (p.grad.size() == 0) p.grad = Matrix::Zero(p.value.rows(), p.value.cols());
    p.grad.middleCols(start, count) += self.grad;
  });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows", "no inputs");
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts[0].cols();
  for (const auto& p : parts) {
    require(p.cols() == cols, "concat_rows", "column mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return make_many(std::move(out), parts, [](Node& self) {
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < self.parents.size(); ++i) {
      const Eigen::Index n = self.parents[i]->value.rows();
      if (self.parents[i]->requires_grad) push(self, i, self.grad.middleRows(r, n));
      r += n;
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols", "no inputs");
  Eigen::Index cols = 0;
  const Eigen::Index rows = parts[0].rows();
  for (const auto& p : parts) {
    require(p.rows() == rows, "concat_cols", "row mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return make_many(std::move(out), parts, [](Node& self) {
    Eigen::Index c = 0;
    for (std::size_t i = 0; i < self.parents.size(); ++i) {
      const Eigen::Index n = self.parents[i]->value.cols();
      if (self.parents[i]->requires_grad) push(self, i, self.grad.middleCols(c, n));
      c += n;
    }
  });
}

Matrix softmax_rows(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const double m = a.row(r).maxCoeff();
    out.row(r) = (a.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

Var softmax_rows(const Var& a) {
  return make(softmax_rows(a.value()), {&a}, [](Node& self) {
    const Matrix& y = self.value;
    Matrix g(y.rows(), y.cols());
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const double dot = self.grad.row(r).dot(y.row(r));
      g.row(r) = y.row(r).cwiseProduct((self.grad.row(r).array() - dot).matrix());
    }
    push(self, 0, g);
  });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  const Eigen::Index n = x.cols();
  require(gain.rows() == 1 && gain.cols() == n && bias.rows() == 1 && bias.cols() == n,
          "layer_norm", shape(x.value()));
  Matrix xhat(x.rows(), n);
  Eigen::VectorXd inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.value().row(r).mean();
    const double var = (x.value().row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (x.value().row(r).array() - mean) * inv_std(r);
  }
  Matrix out = xhat;
  out.array().rowwise() *= gain.value().row(0).array();
  out.rowwise() += bias.value().row(0);
  return make(std::move(out), {&x, &gain, &bias},
              [xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
                const Matrix& dy = self.grad;
                const Matrix& g = self.parents[1]->value;
                if (self.parents[1]->requires_grad) {
                  push(self, 1, dy.cwiseProduct(xhat).colwise().sum());
                }
                if (self.parents[2]->requires_grad) push(self, 2, dy.colwise().sum());
                if (self.parents[0]->requires_grad) {
                  Matrix dxhat = dy;
                  dxhat.array().rowwise() *= g.row(0).array();
                  Matrix dx(dy.rows(), dy.cols());
                  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
                    const double m1 = dxhat.row(r).mean();
                    const double m2 = dxhat.row(r).dot(xhat.row(r)) / static_cast<double>(dy.cols());
                    dx.row(r) = ((dxhat.row(r).array() - m1 - xhat.row(r).array() * m2) * inv_std(r))
                                    .matrix();
                  }
                  push(self, 0, dx);
                }
              });
}

Var attention(const Var& q, const Var& k, const Var& v, int heads, bool causal) {
  const Eigen::Index d = q.cols();
  require(heads > 0 && d % heads == 0, "attention", "model width not divisible by heads");
  require(k.cols() == d && v.cols() == d && k.rows() == v.rows(), "attention",
          "q " + shape(q.value()) + " k " + shape(k.value()) + " v " + shape(v.value()));
  const Eigen::Index dk = d / heads;
  const double s = 1.0 / std::sqrt(static_cast<double>(dk));
  const Eigen::Index lq = q.rows();
  const Eigen::Index lk = k.rows();

  std::vector<Matrix> probs(static_cast<std::size_t>(heads));
  Matrix out(lq, d);
  for (int h = 0; h < heads; ++h) {
    Matrix scores = (q.value().middleCols(h * dk, dk) * k.value().middleCols(h * dk, dk).transpose()) * s;
    if (causal) {
      for (Eigen::Index i = 0; i < lq; ++i) {
        for (Eigen::Index j = i + 1; j < lk; ++j) scores(i, j) = -std::numeric_limits<double>::infinity();
      }
    }
    probs[static_cast<std::size_t>(h)] = softmax_rows(scores);
    out.middleCols(h * dk, dk) = probs[static_cast<std::size_t>(h)] * v.value().middleCols(h * dk, dk);
  }

  return make(std::move(out), {&q, &k, &v},
              [probs = std::move(probs), heads, dk, s](Node& self) {
                const Matrix& Q = self.parents[0]->value;
                const Matrix& K = self.parents[1]->value;
                const Matrix& V = self.parents[2]->value;
                Matrix dQ = Matrix::Zero(Q.rows(), Q.cols());
                Matrix dK = Matrix::Zero(K.rows(), K.cols());
                Matrix dV = Matrix::Zero(V.rows(), V.cols());
                for (int h = 0; h < heads; ++h) {
                  const Matrix& P = probs[static_cast<std::size_t>(h)];
                  const auto dO = self.grad.middleCols(h * dk, dk);
                  dV.middleCols(h * dk, dk) += P.transpose() * dO;
                  Matrix dP = dO * V.middleCols(h * dk, dk).transpose();
                  Matrix dS(P.rows(), P.cols());
                  for (Eigen::Index r = 0; r < P.rows(); ++r) {
                    const double dot = dP.row(r).dot(P.row(r));
                    dS.row(r) = P.row(r).cwiseProduct((dP.row(r).array() - dot).matrix());
                  }
                  dS *= s;
                  dQ.middleCols(h * dk, dk) += dS * K.middleCols(h * dk, dk);
                  dK.middleCols(h * dk, dk) += dS.transpose() * Q.middleCols(h * dk, dk);
                }
                push(self, 0, dQ);
                push(self, 1, dK);
                push(self, 2, dV);
              });
}

Var dropout(const Var& a, double p, std::mt19937_64& rng) {
  if (p <= 0.0) return a;
  require(p < 1.0, "dropout", "probability must be below 1");
  std::bernoulli_distribution keep(1.0 - p);
  Matrix mask(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? 1.0 / (1.0 - p) : 0.0;
  Matrix out = a.value().cwiseProduct(mask);
  return make(std::move(out), {&a}, [mask = std::move(mask)](Node& self) {
    push(self, 0, self.grad.cwiseProduct(mask));
  });
}

Var sum(const Var& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return make(std::move(out), {&a}, [](Node& self) {
    const Node& p = *self.parents[0];
    push(self, 0, Matrix::Constant(p.value.rows(), p.value.cols(), self.grad(0, 0)));
  });
}

Var sum_all(std::span<const Var> scalars) {
  require(!scalars.empty(), "sum_all", "no inputs");
  Matrix out = Matrix::Zero(1, 1);
  for (const auto& s : scalars) {
    require(s.rows() == 1 && s.cols() == 1, "sum_all", "inputs must be 1x1");
    out(0, 0) += s.item();
  }
  return make_many(std::move(out), scalars, [](Node& self) {
    for (std::size_t i = 0; i < self.parents.size(); ++i) push(self, i, self.grad);
  });
}

Var cross_entropy(const Var& logits, std::span<const int> targets) {
  require(static_cast<Eigen::Index>(targets.size()) == logits.rows() && !targets.empty(),
          "cross_entropy",
          "logits " + shape(logits.value()) + " vs " + std::to_string(targets.size()) + " targets");
  Matrix probs = softmax_rows(logits.value());
  double loss = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const int t = targets[i];
    require(t >= 0 && t < logits.cols(), "cross_entropy", "target id out of range");
    const auto r = static_cast<Eigen::Index>(i);
    const double m = logits.value().row(r).maxCoeff();
    const double lse = m + std::log((logits.value().row(r).array() - m).exp().sum());
    loss += lse - logits.value()(r, t);
  }
  const double n = static_cast<double>(targets.size());
  Matrix out(1, 1);
  out(0, 0) = loss / n;
  std::vector<int> tgt(targets.begin(), targets.end());
  return make(std::move(out), {&logits},
              [probs = std::move(probs), tgt = std::move(tgt), n](Node& self) {
                Matrix g = probs;
                for (std::size_t i = 0; i < tgt.size(); ++i) g(static_cast<Eigen::Index>(i), tgt[i]) -= 1.0;
                g *= self.grad(0, 0) / n;
                push(self, 0, g);
              });
}

}  // namespace topicshift::ag
