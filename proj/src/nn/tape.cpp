#include "fgn/nn/tape.hpp"

#include "fgn/errors.hpp"

namespace fgn::nn {

const Tensor& Var::value() const { return tape_->nodes_[id_].value(); }

bool Var::requires_grad() const { return tape_->nodes_[id_].requires_grad; }

Var Tape::parameter(Parameter& p) {
  if (auto it = param_leaf_.find(&p); it != param_leaf_.end()) return Var(this, it->second);
  Node node;
  node.view = &p.value;
  node.requires_grad = true;
  node.param = &p;
  nodes_.push_back(std::move(node));
  param_leaf_[&p] = nodes_.size() - 1;
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node node;
  node.owned = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, Backward backward) {
  bool needs = false;
  for (const Var& p : parents) needs = needs || p.requires_grad();
  Node node;
  node.owned = std::move(value);
  node.requires_grad = needs;
  if (needs) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, const std::vector<Var>& parents, Backward backward) {
  bool needs = false;
  for (const Var& p : parents) needs = needs || p.requires_grad();
  Node node;
  node.owned = std::move(value);
  node.requires_grad = needs;
  if (needs) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad(const Var& v) {
  Node& node = nodes_[v.id()];
  if (!node.has_grad) {
    node.grad = Tensor(node.value().shape());
    node.has_grad = true;
  }
  return node.grad;
}

void Tape::backward(const Var& loss) {
  if (loss.size() != 1)
    throw ArgumentError("backward requires a scalar loss, got shape " + shape_string(loss.shape()));
  grad(loss)[0] += 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.has_grad || !node.requires_grad) continue;
    if (node.backward) {
      node.backward(*this, node.grad);
    } else if (node.param) {
      auto dst = node.param->grad.data();
      auto src = node.grad.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
}

void Tape::note_routing(std::uint64_t decision) {
  // FNV-1a style mixing; only equality of signatures matters.
  routing_ ^= decision + 0x9e3779b97f4a7c15ULL + (routing_ << 6) + (routing_ >> 2);
  routing_ *= 0x100000001b3ULL;
}

}  // namespace fgn::nn
