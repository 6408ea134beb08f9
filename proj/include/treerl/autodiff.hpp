#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "treerl/errors.hpp"
#include "treerl/tensor.hpp"

namespace treerl {

// Named parameters with persistent identity across examples, plus matching
// gradient accumulators.
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor grad;
  };

  int add(const std::string& name, Tensor init) {
    if (index_.count(name)) throw ShapeError("duplicate parameter: " + name);
    Entry e;
    e.grad = Tensor::zeros(init.shape);
    e.value = std::move(init);
    e.name = name;
    entries_.push_back(std::move(e));
    index_[name] = static_cast<int>(entries_.size()) - 1;
    return static_cast<int>(entries_.size()) - 1;
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  int index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ShapeError("unknown parameter: " + name);
    return it->second;
  }

  Entry& at(int i) { return entries_[static_cast<std::size_t>(i)]; }
  const Entry& at(int i) const { return entries_[static_cast<std::size_t>(i)]; }
  Entry& at(const std::string& name) { return entries_[index_of(name)]; }
  const Entry& at(const std::string& name) const {
    return entries_[index_of(name)];
  }

  std::size_t size() const { return entries_.size(); }

  void zero_grad() {
    for (auto& e : entries_) std::fill(e.grad.v.begin(), e.grad.v.end(), 0.0);
  }

  bool grads_finite() const {
    for (const auto& e : entries_)
      if (!e.grad.finite()) return false;
    return true;
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> index_;
};

enum class Op {
  Const,
  Param,
  GatherRow,    // row slice of a matrix
  MatVec,       // A x
  MatTVec,      // A^T x
  Add,          // n-ary elementwise sum
  Mul,          // elementwise product
  Concat,       // vector concatenation
  Sigmoid,
  Tanh,
  Relu,
  SqDiff,       // (a - b)^2 elementwise
  Sum,          // reduce to scalar
  Scale,        // multiply by a fixed constant
  LogSoftmax,   // max-subtracted for stability
  NllPick,      // -logp[k] from a log-probability vector
};

inline const char* op_name(Op op) {
  switch (op) {
    case Op::Const: return "const";
    case Op::Param: return "param";
    case Op::GatherRow: return "gather_row";
    case Op::MatVec: return "matvec";
    case Op::MatTVec: return "matvec_t";
    case Op::Add: return "add";
    case Op::Mul: return "mul";
    case Op::Concat: return "concat";
    case Op::Sigmoid: return "sigmoid";
    case Op::Tanh: return "tanh";
    case Op::Relu: return "relu";
    case Op::SqDiff: return "sqdiff";
    case Op::Sum: return "sum";
    case Op::Scale: return "scale";
    case Op::LogSoftmax: return "log_softmax";
    case Op::NllPick: return "nll_pick";
  }
  return "?";
}

// Per-example computation graph. Nodes are appended in topological order
// (inputs always precede consumers) and the graph is consumed by a single
// backward pass, mirroring the one-example-one-graph training loop.
class Graph {
 public:
  struct Node {
    Op op;
    std::vector<int> in;
    Tensor out;          // unused for Param nodes (value lives in the store)
    int param = -1;      // ParameterStore index for Param leaves
    std::size_t index = 0;  // gather row / nll class
    double factor = 1.0;    // scale constant
  };

  explicit Graph(ParameterStore* params) : params_(params) {}

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

  const Tensor& value(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.op == Op::Param) return params_->at(n.param).value;
    return n.out;
  }

  double scalar_value(int id) const {
    const Tensor& t = value(id);
    assert(t.is_scalar());
    return t.v[0];
  }

  int constant(Tensor t) { return push(Op::Const, {}, std::move(t)); }

  int zeros(std::size_t n) { return constant(Tensor::zeros({n})); }

  // Param nodes reference the store; repeated requests share one node.
  int param(int store_index) {
    auto it = param_nodes_.find(store_index);
    if (it != param_nodes_.end()) return it->second;
    Node n;
    n.op = Op::Param;
    n.param = store_index;
    nodes_.push_back(std::move(n));
    int id = static_cast<int>(nodes_.size()) - 1;
    param_nodes_[store_index] = id;
    return id;
  }

  int param(const std::string& name) { return param(params_->index_of(name)); }

  int gather_row(int a, std::size_t row) {
    const Tensor& A = value(a);
    if (!A.is_matrix() || row >= A.rows())
      throw ShapeError(std::string("gather_row: row ") + std::to_string(row) +
                       " of " + A.shape_str());
    Tensor out = Tensor::zeros({A.cols()});
    std::copy_n(&A.v[row * A.cols()], A.cols(), out.v.begin());
    int id = push(Op::GatherRow, {a}, std::move(out));
    nodes_.back().index = row;
    return id;
  }

  int matvec(int a, int x) {
    const Tensor& A = value(a);
    const Tensor& X = value(x);
    if (!A.is_matrix() || !X.is_vector() || A.cols() != X.size())
      throw ShapeError(std::string("matvec: ") + A.shape_str() + " * " +
                       X.shape_str());
    Tensor out = Tensor::zeros({A.rows()});
    for (std::size_t i = 0; i < A.rows(); ++i) {
      const double* row = &A.v[i * A.cols()];
      double s = 0.0;
      for (std::size_t j = 0; j < A.cols(); ++j) s += row[j] * X.v[j];
      out.v[i] = s;
    }
    return push(Op::MatVec, {a, x}, std::move(out));
  }

  int matvec_t(int a, int x) {
    const Tensor& A = value(a);
    const Tensor& X = value(x);
    if (!A.is_matrix() || !X.is_vector() || A.rows() != X.size())
      throw ShapeError(std::string("matvec_t: ") + A.shape_str() + "^T * " +
                       X.shape_str());
    Tensor out = Tensor::zeros({A.cols()});
    for (std::size_t i = 0; i < A.rows(); ++i) {
      const double* row = &A.v[i * A.cols()];
      double xi = X.v[i];
      for (std::size_t j = 0; j < A.cols(); ++j) out.v[j] += row[j] * xi;
    }
    return push(Op::MatTVec, {a, x}, std::move(out));
  }

  int add(std::vector<int> in) {
    if (in.empty()) throw ShapeError("add: no inputs");
    const Tensor& first = value(in[0]);
    Tensor out = first;
    for (std::size_t k = 1; k < in.size(); ++k) {
      const Tensor& t = value(in[k]);
      if (!same_shape(first, t))
        throw ShapeError(std::string("add: ") + first.shape_str() + " vs " +
                         t.shape_str());
      for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += t.v[i];
    }
    return push(Op::Add, std::move(in), std::move(out));
  }

  int add(int a, int b) { return add(std::vector<int>{a, b}); }

  int mul(int a, int b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (!same_shape(A, B))
      throw ShapeError(std::string("mul: ") + A.shape_str() + " vs " +
                       B.shape_str());
    Tensor out = A;
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] *= B.v[i];
    return push(Op::Mul, {a, b}, std::move(out));
  }

  int concat(const std::vector<int>& in) {
    if (in.empty()) throw ShapeError("concat: no inputs");
    std::size_t total = 0;
    for (int id : in) {
      const Tensor& t = value(id);
      if (!t.is_vector())
        throw ShapeError(std::string("concat: non-vector input ") +
                         t.shape_str());
      total += t.size();
    }
    Tensor out = Tensor::zeros({total});
    std::size_t off = 0;
    for (int id : in) {
      const Tensor& t = value(id);
      std::copy(t.v.begin(), t.v.end(), out.v.begin() + off);
      off += t.size();
    }
    return push(Op::Concat, in, std::move(out));
  }

  int sigmoid(int x) {
    Tensor out = value(x);
    for (double& e : out.v) {
      if (e >= 0.0) {
        e = 1.0 / (1.0 + std::exp(-e));
      } else {
        double z = std::exp(e);
        e = z / (1.0 + z);
      }
    }
    return push(Op::Sigmoid, {x}, std::move(out));
  }

  int tanh(int x) {
    Tensor out = value(x);
    for (double& e : out.v) e = std::tanh(e);
    return push(Op::Tanh, {x}, std::move(out));
  }

  int relu(int x) {
    Tensor out = value(x);
    for (double& e : out.v) e = e > 0.0 ? e : 0.0;
    return push(Op::Relu, {x}, std::move(out));
  }

  int sqdiff(int a, int b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (!same_shape(A, B))
      throw ShapeError(std::string("sqdiff: ") + A.shape_str() + " vs " +
                       B.shape_str());
    Tensor out = A;
    for (std::size_t i = 0; i < out.size(); ++i) {
      double d = A.v[i] - B.v[i];
      out.v[i] = d * d;
    }
    return push(Op::SqDiff, {a, b}, std::move(out));
  }

  int sum(int x) {
    const Tensor& X = value(x);
    double s = 0.0;
    for (double e : X.v) s += e;
    return push(Op::Sum, {x}, Tensor::scalar(s));
  }

  int scale(int x, double factor) {
    Tensor out = value(x);
    for (double& e : out.v) e *= factor;
    int id = push(Op::Scale, {x}, std::move(out));
    nodes_.back().factor = factor;
    return id;
  }

  int log_softmax(int x) {
    const Tensor& X = value(x);
    if (!X.is_vector() || X.size() == 0)
      throw ShapeError(std::string("log_softmax: ") + X.shape_str());
    double m = X.v[0];
    for (double e : X.v) m = std::max(m, e);
    double lse = 0.0;
    for (double e : X.v) lse += std::exp(e - m);
    lse = m + std::log(lse);
    Tensor out = X;
    for (double& e : out.v) e -= lse;
    return push(Op::LogSoftmax, {x}, std::move(out));
  }

  int nll_pick(int logp, std::size_t k) {
    const Tensor& L = value(logp);
    if (!L.is_vector() || k >= L.size())
      throw ShapeError(std::string("nll_pick: class ") + std::to_string(k) +
                       " of " + L.shape_str());
    int id = push(Op::NllPick, {logp}, Tensor::scalar(-L.v[k]));
    nodes_.back().index = k;
    return id;
  }

  // Reverse sweep from a scalar root. Returns the adjoint of every node
  // (entries never reached stay empty, meaning zero) and accumulates
  // parameter-leaf adjoints into the store. One backward per graph.
  std::vector<Tensor> backward(int root) {
    if (consumed_) throw ShapeError("backward: graph already consumed");
    if (root < 0 || root >= static_cast<int>(nodes_.size()))
      throw ShapeError("backward: bad root id");
    if (!value(root).is_scalar())
      throw ShapeError(std::string("backward: root not scalar, shape ") +
                       value(root).shape_str());
    consumed_ = true;

    std::vector<Tensor> adj(nodes_.size());
    auto at = [&](int id) -> Tensor& {
      Tensor& t = adj[static_cast<std::size_t>(id)];
      if (t.v.empty()) t = Tensor::zeros(value(id).shape);
      return t;
    };
    at(root).v[0] = 1.0;

    for (int id = root; id >= 0; --id) {
      if (adj[static_cast<std::size_t>(id)].v.empty()) continue;
      const Node& n = nodes_[static_cast<std::size_t>(id)];
      const Tensor& a = adj[static_cast<std::size_t>(id)];
      switch (n.op) {
        case Op::Const:
        case Op::Param:
          break;
        case Op::GatherRow: {
          Tensor& g = at(n.in[0]);
          std::size_t c = value(n.in[0]).cols();
          for (std::size_t j = 0; j < a.size(); ++j)
            g.v[n.index * c + j] += a.v[j];
          break;
        }
        case Op::MatVec: {
          const Tensor& A = value(n.in[0]);
          const Tensor& X = value(n.in[1]);
          Tensor& gA = at(n.in[0]);
          Tensor& gX = at(n.in[1]);
          for (std::size_t i = 0; i < A.rows(); ++i) {
            double ai = a.v[i];
            if (ai == 0.0) continue;
            const double* row = &A.v[i * A.cols()];
            double* grow = &gA.v[i * A.cols()];
            for (std::size_t j = 0; j < A.cols(); ++j) {
              grow[j] += ai * X.v[j];
              gX.v[j] += ai * row[j];
            }
          }
          break;
        }
        case Op::MatTVec: {
          const Tensor& A = value(n.in[0]);
          const Tensor& X = value(n.in[1]);
          Tensor& gA = at(n.in[0]);
          Tensor& gX = at(n.in[1]);
          for (std::size_t i = 0; i < A.rows(); ++i) {
            const double* row = &A.v[i * A.cols()];
            double* grow = &gA.v[i * A.cols()];
            double xi = X.v[i];
            double acc = 0.0;
            for (std::size_t j = 0; j < A.cols(); ++j) {
              grow[j] += xi * a.v[j];
              acc += row[j] * a.v[j];
            }
            gX.v[i] += acc;
          }
          break;
        }
        case Op::Add:
          for (int in_id : n.in) {
            Tensor& g = at(in_id);
            for (std::size_t i = 0; i < a.size(); ++i) g.v[i] += a.v[i];
          }
          break;
        case Op::Mul: {
          const Tensor& A = value(n.in[0]);
          const Tensor& B = value(n.in[1]);
          Tensor& gA = at(n.in[0]);
          Tensor& gB = at(n.in[1]);
          for (std::size_t i = 0; i < a.size(); ++i) {
            gA.v[i] += a.v[i] * B.v[i];
            gB.v[i] += a.v[i] * A.v[i];
          }
          break;
        }
        case Op::Concat: {
          std::size_t off = 0;
          for (int in_id : n.in) {
            Tensor& g = at(in_id);
            for (std::size_t i = 0; i < g.size(); ++i) g.v[i] += a.v[off + i];
            off += g.size();
          }
          break;
        }
        case Op::Sigmoid: {
          Tensor& g = at(n.in[0]);
          for (std::size_t i = 0; i < a.size(); ++i) {
            double s = n.out.v[i];
            g.v[i] += a.v[i] * s * (1.0 - s);
          }
          break;
        }
        case Op::Tanh: {
          Tensor& g = at(n.in[0]);
          for (std::size_t i = 0; i < a.size(); ++i) {
            double t = n.out.v[i];
            g.v[i] += a.v[i] * (1.0 - t * t);
          }
          break;
        }
        case Op::Relu: {
          Tensor& g = at(n.in[0]);
          for (std::size_t i = 0; i < a.size(); ++i)
            if (n.out.v[i] > 0.0) g.v[i] += a.v[i];
          break;
        }
        case Op::SqDiff: {
          const Tensor& A = value(n.in[0]);
          const Tensor& B = value(n.in[1]);
          Tensor& gA = at(n.in[0]);
          Tensor& gB = at(n.in[1]);
          for (std::size_t i = 0; i < a.size(); ++i) {
            double d = 2.0 * (A.v[i] - B.v[i]) * a.v[i];
            gA.v[i] += d;
            gB.v[i] -= d;
          }
          break;
        }
        case Op::Sum: {
          Tensor& g = at(n.in[0]);
          for (std::size_t i = 0; i < g.size(); ++i) g.v[i] += a.v[0];
          break;
        }
        case Op::Scale: {
          Tensor& g = at(n.in[0]);
          for (std::size_t i = 0; i < a.size(); ++i)
            g.v[i] += n.factor * a.v[i];
          break;
        }
        case Op::LogSoftmax: {
          Tensor& g = at(n.in[0]);
          double asum = 0.0;
          for (double e : a.v) asum += e;
          for (std::size_t i = 0; i < a.size(); ++i)
            g.v[i] += a.v[i] - std::exp(n.out.v[i]) * asum;
          break;
        }
        case Op::NllPick: {
          Tensor& g = at(n.in[0]);
          g.v[n.index] -= a.v[0];
          break;
        }
      }
    }

    for (std::size_t id = 0; id < nodes_.size(); ++id) {
      const Node& n = nodes_[id];
      if (n.op != Op::Param || adj[id].v.empty()) continue;
      Tensor& g = params_->at(n.param).grad;
      for (std::size_t k = 0; k < g.v.size(); ++k) g.v[k] += adj[id].v[k];
    }
    return adj;
  }

 private:
  int push(Op op, std::vector<int> in, Tensor out) {
    Node n;
    n.op = op;
    n.in = std::move(in);
    n.out = std::move(out);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  ParameterStore* params_;
  std::vector<Node> nodes_;
  std::unordered_map<int, int> param_nodes_;
  bool consumed_ = false;
};

struct FdParamReport {
  std::string name;
  double max_rel_err = 0.0;
  bool pass = true;
};

struct FdReport {
  std::vector<FdParamReport> params;
  double max_rel_err = 0.0;
  bool pass = true;
};

// Central-difference check of analytic gradients. fn(true) must rebuild the
// computation, run backward, and leave gradients in the store; fn(false)
// returns the objective value only. fn must be deterministic (any sampling
// frozen by a fixed seed). The relative error uses an absolute floor so that
// finite-difference noise on near-zero coordinates does not register as a
// relative failure.
inline FdReport finite_difference_check(const std::function<double(bool)>& fn,
                                        ParameterStore& params, double step,
                                        double tolerance,
                                        double denom_floor = 1e-2) {
  params.zero_grad();
  double f0 = fn(true);
  if (!std::isfinite(f0))
    throw NumericError("finite_difference_check: objective is non-finite");
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i)
    analytic.push_back(params.at(static_cast<int>(i)).grad);
  params.zero_grad();

  FdReport report;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& entry = params.at(static_cast<int>(i));
    FdParamReport pr;
    pr.name = entry.name;
    for (std::size_t k = 0; k < entry.value.size(); ++k) {
      double saved = entry.value.v[k];
      entry.value.v[k] = saved + step;
      double fp = fn(false);
      entry.value.v[k] = saved - step;
      double fm = fn(false);
      entry.value.v[k] = saved;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw NumericError(
            "finite_difference_check: objective is non-finite at " +
            entry.name);
      double fd = (fp - fm) / (2.0 * step);
      double g = analytic[i].v[k];
      double rel = std::abs(g - fd) /
                   std::max({std::abs(g), std::abs(fd), denom_floor});
      pr.max_rel_err = std::max(pr.max_rel_err, rel);
    }
    pr.pass = pr.max_rel_err < tolerance;
    report.max_rel_err = std::max(report.max_rel_err, pr.max_rel_err);
    report.pass = report.pass && pr.pass;
    report.params.push_back(std::move(pr));
  }
  return report;
}

}  // namespace treerl
