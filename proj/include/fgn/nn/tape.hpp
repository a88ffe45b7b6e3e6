#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <unordered_map>
#include <vector>

#include "fgn/nn/tensor.hpp"

namespace fgn::nn {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  bool requires_grad() const;
  bool valid() const { return tape_ != nullptr; }

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode recording of the forward computation. Nodes are appended in
// evaluation order, so reverse insertion order is a valid topological order
// for the backward sweep.
class Tape {
 public:
  // Receives the gradient of the loss w.r.t. the node's value and adds the
  // contributions into its parents via Tape::grad.
  using Backward = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf bound to a parameter; backward adds into p.grad. Repeated calls with
  // the same parameter return the same leaf.
  Var parameter(Parameter& p);
  Var constant(Tensor value);
  // requires_grad is inherited from the parents; `backward` is dropped when no
  // parent needs a gradient.
  Var record(Tensor value, std::initializer_list<Var> parents, Backward backward);
  Var record(Tensor value, const std::vector<Var>& parents, Backward backward);

  // Gradient accumulator of v, allocated as zeros on first access.
  Tensor& grad(const Var& v);

  // Seeds d(loss)/d(loss) = 1 and sweeps backward. Throws ArgumentError when
  // loss is not a single element.
  void backward(const Var& loss);

  // Max-type reductions mix their argmax decisions in here so that callers can
  // detect when a perturbation moved the routing (a pooling tie point).
  void note_routing(std::uint64_t decision);
  std::uint64_t routing_signature() const { return routing_; }

  std::size_t size() const { return nodes_.size(); }

 private:
  friend class Var;

  struct Node {
    Tensor owned;
    const Tensor* view = nullptr;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    Backward backward;
    Parameter* param = nullptr;

    const Tensor& value() const { return view ? *view : owned; }
  };

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_leaf_;
  std::uint64_t routing_ = 0xcbf29ce484222325ULL;
};

}  // namespace fgn::nn
