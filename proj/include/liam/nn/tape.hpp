#pragma once

#include <functional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "liam/nn/parameter_store.hpp"

namespace liam::nn {

template <typename Scalar>
class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid until the
/// tape is cleared.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(Tape<Scalar>* tape, int id) : tape_(tape), id_(id) {}

  const Tensor<Scalar>& value() const { return tape_->value(id_); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Scalar item() const { return value()(0, 0); }

  int id() const { return id_; }
  Tape<Scalar>* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr && id_ >= 0; }
  bool requires_grad() const { return tape_->requires_grad(id_); }

 private:
  Tape<Scalar>* tape_ = nullptr;
  int id_ = -1;
};

/// Dynamic reverse-mode tape. Nodes are appended in evaluation order, so
/// the node list is already topologically sorted; backward() walks it once
/// in reverse.
template <typename Scalar>
class Tape {
 public:
  using Mat = Tensor<Scalar>;
  using BackwardFn = std::function<void(Tape&, int self)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  Var<Scalar> constant(Mat value) {
    Node node;
    node.value = std::move(value);
    return push(std::move(node));
  }

  /// Leaf bound to a stored parameter. The value is referenced, not copied.
  /// Repeated calls with the same parameter return the same node.
  Var<Scalar> parameter(Parameter<Scalar>& p) {
    auto it = leaves_.find(&p);
    if (it != leaves_.end()) return Var<Scalar>(this, it->second);
    Node node;
    node.external = &p.value;
    node.param = &p;
    node.requires_grad = grad_enabled_;
    Var<Scalar> v = push(std::move(node));
    leaves_.emplace(&p, v.id());
    return v;
  }

  /// Records an op output. The node needs a gradient when any input does.
  Var<Scalar> record(Mat value, std::initializer_list<Var<Scalar>> inputs, BackwardFn fn) {
    bool needs = false;
    for (const auto& in : inputs) needs = needs || requires_grad(in.id());
    return record_if(std::move(value), needs, std::move(fn));
  }

  Var<Scalar> record_if(Mat value, bool needs_grad, BackwardFn fn) {
    Node node;
    node.value = std::move(value);
    node.requires_grad = needs_grad;
    if (needs_grad) node.backward = std::move(fn);
    return push(std::move(node));
  }

  const Mat& value(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.external != nullptr ? *n.external : n.value;
  }
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  const Mat& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

  template <typename Derived>
  void accumulate(int id, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  /// Accumulates d(loss)/d(param) into every reachable parameter's gradient
  /// array, then clears the tape.
  void backward(Var<Scalar> loss) {
    const Mat& out = value(loss.id());
    if (out.rows() != 1 || out.cols() != 1) {
      throw UsageError("backward: loss must be a 1x1 scalar, got " + shape_string(out));
    }
    if (!requires_grad(loss.id())) {
      clear();
      return;
    }
    nodes_[static_cast<std::size_t>(loss.id())].grad = Mat::Ones(1, 1);
    for (int id = loss.id(); id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (!n.requires_grad || n.grad.size() == 0) continue;
      if (n.backward) n.backward(*this, id);
      if (n.param != nullptr) n.param->grad += n.grad;
    }
    clear();
  }

  void clear() {
    nodes_.clear();
    leaves_.clear();
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    const Mat* external = nullptr;
    Mat grad;
    bool requires_grad = false;
    BackwardFn backward;
    Parameter<Scalar>* param = nullptr;
  };

  Var<Scalar> push(Node node) {
    nodes_.push_back(std::move(node));
    return Var<Scalar>(this, static_cast<int>(nodes_.size()) - 1);
  }

  bool grad_enabled_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<Scalar>*, int> leaves_;
};

}  // namespace liam::nn
