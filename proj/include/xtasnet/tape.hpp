#ifndef XTASNET_TAPE_HPP
#define XTASNET_TAPE_HPP

#include <functional>
#include <utility>
#include <vector>

#include "xtasnet/common.hpp"

namespace xtasnet::ad {

template <class S>
class Tape;

// Handle to a node on a tape. Cheap to copy; valid only while its tape
// lives and has not been cleared.
template <class S>
class Var {
 public:
  Var() = default;
  Var(Tape<S>* tape, int id) : tape_(tape), id_(id) {}

  const MatrixX<S>& value() const { return tape_->value(id_); }
  const MatrixX<S>& grad() const { return tape_->grad(id_); }
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  S scalar() const { return value()(0, 0); }

  int id() const { return id_; }
  Tape<S>* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr && id_ >= 0; }

 private:
  Tape<S>* tape_ = nullptr;
  int id_ = -1;
};

// Define-by-run reverse-mode trace. Nodes are appended in evaluation
// order; backward() walks them in reverse. A fresh trace is recorded for
// every training step.
template <class S>
class Tape {
 public:
  struct Node {
    MatrixX<S> value;
    MatrixX<S> grad;  // sized lazily during backward
    std::function<void(Tape&)> pull;
    bool needs_grad = false;
  };

  // Differentiable leaf (parameters, inputs under a gradient check).
  Var<S> leaf(MatrixX<S> value) {
    nodes_.push_back(Node{std::move(value), {}, {}, true});
    return Var<S>(this, static_cast<int>(nodes_.size()) - 1);
  }

  // Non-differentiable input.
  Var<S> constant(MatrixX<S> value) {
    nodes_.push_back(Node{std::move(value), {}, {}, false});
    return Var<S>(this, static_cast<int>(nodes_.size()) - 1);
  }

  Var<S> make(MatrixX<S> value, bool needs_grad,
              std::function<void(Tape&)> pull) {
    nodes_.push_back(
        Node{std::move(value), {}, needs_grad ? std::move(pull) : nullptr,
             needs_grad});
    return Var<S>(this, static_cast<int>(nodes_.size()) - 1);
  }

  const MatrixX<S>& value(int id) const { return nodes_[id].value; }
  const MatrixX<S>& grad(int id) const { return nodes_[id].grad; }
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }

  // Accumulation buffer for a node's gradient, allocated on first use.
  MatrixX<S>& grad_buffer(int id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0)
      n.grad = MatrixX<S>::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  // Reverse sweep from a scalar loss. Gradients of all needs_grad nodes
  // reachable from the loss are accumulated into their buffers.
  void backward(const Var<S>& loss) {
    if (loss.tape() != this) throw ContractError("backward: foreign var");
    if (loss.rows() != 1 || loss.cols() != 1)
      throw ContractError("backward: loss must be a 1x1 scalar");
    if (!nodes_[loss.id()].needs_grad)
      throw ContractError("backward: loss does not depend on any leaf");
    grad_buffer(loss.id())(0, 0) = S(1);
    for (int i = loss.id(); i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.needs_grad && n.pull && n.grad.size() != 0) n.pull(*this);
    }
  }

  std::size_t size() const { return nodes_.size(); }

  void clear() { nodes_.clear(); }

 private:
  std::vector<Node> nodes_;
};

}  // namespace xtasnet::ad

#endif  // XTASNET_TAPE_HPP
