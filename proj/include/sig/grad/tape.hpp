#pragma once

#include <cmath>
#include <functional>
#include <initializer_list>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sig/common/error.hpp"
#include "sig/grad/param_store.hpp"

namespace sig::grad {

template <typename T>
class Tape;

/// Handle to a tensor recorded on a Tape. Cheap to copy; valid while the
/// tape lives.
template <typename T>
class Var {
 public:
  Var() = default;

  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  Tape<T>& tape() const { return *tape_; }
  const std::vector<T>& value() const { return tape_->value(id_); }
  const Shape& shape() const { return tape_->shape(id_); }
  std::int64_t size() const { return static_cast<std::int64_t>(value().size()); }
  bool requires_grad() const { return tape_->requires_grad(id_); }
  T item() const;

 private:
  friend class Tape<T>;
  Var(Tape<T>* tape, int id) : tape_(tape), id_(id) {}

  Tape<T>* tape_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode recorder for a fixed set of tensor operations.
///
/// Each op pushes one node holding its output value and a closure that maps
/// the node's output gradient onto the gradients of its inputs. Nodes are
/// appended after their inputs, so a single reverse sweep over node ids is a
/// valid topological order. Parameter leaves are bound to groups of a
/// ParamStore; only groups in the active set receive gradients, and no
/// backward work is done for subgraphs that do not reach an active leaf.
template <typename T>
class Tape {
 public:
  using value_type = T;
  using Backward = std::function<void(Tape&, std::span<const T> out_grad)>;

  Tape() = default;
  Tape(const ParamStore<T>& params, std::set<std::string, std::less<>> active)
      : params_(&params), active_(std::move(active)) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf without gradient.
  Var<T> constant(std::vector<T> values, Shape shape) {
    check_size(values, shape, "constant");
    return push_node("constant", std::move(values), std::move(shape), {}, false, nullptr);
  }

  Var<T> scalar(T v) { return constant({v}, {}); }

  /// Leaf bound to a ParamStore group. Repeated calls return the same node.
  Var<T> param(std::string_view name) {
    if (params_ == nullptr) throw_config_error("tape has no parameter store");
    for (const auto& [n, id] : param_leaves_)
      if (n == name) return Var<T>(this, id);
    const auto& g = params_->group(name);
    const bool active = active_.find(name) != active_.end();
    const int id = push_node("param", g.values, g.shape, {}, active, nullptr).id();
    param_leaves_.emplace_back(std::string(name), id);
    return Var<T>(this, id);
  }

  bool has_param(std::string_view name) const { return params_ != nullptr && params_->contains(name); }
  bool is_active(std::string_view name) const { return active_.find(name) != active_.end(); }

  /// Records an op output. The backward closure is kept only when at least
  /// one input requires a gradient. Throws if the value is not finite.
  Var<T> record(std::string_view op, std::vector<T> value, Shape shape,
                std::initializer_list<Var<T>> inputs, Backward backward) {
    return record(op, std::move(value), std::move(shape), std::vector<Var<T>>(inputs), std::move(backward));
  }

  Var<T> record(std::string_view op, std::vector<T> value, Shape shape,
                const std::vector<Var<T>>& inputs, Backward backward) {
    check_size(value, shape, op);
    for (std::size_t i = 0; i < value.size(); ++i) {
      if (!std::isfinite(value[i])) {
        throw_numeric_error("non-finite value produced by op '" + std::string(op) + "' (node " +
                            std::to_string(nodes_.size()) + ", element " + std::to_string(i) + ")");
      }
    }
    std::vector<int> ids;
    bool needs = false;
    for (const auto& v : inputs) {
      if (v.tape_ != this) throw_config_error("op '" + std::string(op) + "' mixes tapes");
      ids.push_back(v.id_);
      needs = needs || nodes_[v.id_].requires_grad;
    }
    return push_node(op, std::move(value), std::move(shape), std::move(ids), needs,
                     needs ? std::move(backward) : Backward{});
  }

  const std::vector<T>& value(int id) const { return nodes_.at(id).value; }
  const Shape& shape(int id) const { return nodes_.at(id).shape; }
  bool requires_grad(int id) const { return nodes_.at(id).requires_grad; }
  const std::string& op_name(int id) const { return nodes_.at(id).op; }
  std::size_t node_count() const { return nodes_.size(); }

  /// Gradient buffer of a node, zero-initialised on first access.
  std::span<T> grad(int id) {
    auto& n = nodes_.at(id);
    if (n.grad.empty() && !n.value.empty()) n.grad.assign(n.value.size(), T(0));
    return n.grad;
  }
  std::span<T> grad(const Var<T>& v) { return grad(v.id()); }

  /// Reverse sweep from a scalar root (seeded with 1).
  void backward(const Var<T>& root) {
    if (root.tape_ != this) throw_config_error("backward root belongs to another tape");
    if (nodes_[root.id_].value.size() != 1) throw_shape_error("backward root must be a scalar");
    if (!nodes_[root.id_].requires_grad) return;
    grad(root.id_)[0] += T(1);
    for (int id = root.id_; id >= 0; --id) {
      auto& n = nodes_[id];
      if (!n.backward || n.grad.empty()) continue;
      n.backward(*this, std::span<const T>(n.grad));
      for (int in : n.inputs) {
        const auto& g = nodes_[in].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (!std::isfinite(g[i])) {
            throw_numeric_error("non-finite gradient propagated by op '" + n.op + "' (node " +
                                std::to_string(id) + ")");
          }
        }
      }
    }
  }

  /// Gradients of every active group, zero-filled for groups the objective
  /// never touched.
  Gradients<T> gradients() const {
    Gradients<T> out;
    if (params_ == nullptr) return out;
    for (const auto& name : active_) {
      if (!params_->contains(name)) continue;
      out[name] = std::vector<T>(params_->values(name).size(), T(0));
    }
    for (const auto& [name, id] : param_leaves_) {
      auto it = out.find(name);
      if (it == out.end()) continue;
      const auto& g = nodes_[id].grad;
      if (!g.empty()) it->second = g;
    }
    return out;
  }

 private:
  struct Node {
    std::string op;
    std::vector<T> value;
    Shape shape;
    std::vector<int> inputs;
    bool requires_grad = false;
    Backward backward;
    std::vector<T> grad;
  };

  static void check_size(const std::vector<T>& values, const Shape& shape, std::string_view op) {
    if (numel(shape) != static_cast<std::int64_t>(values.size())) {
      throw_shape_error("op '" + std::string(op) + "' produced " + std::to_string(values.size()) +
                        " values for shape " + shape_string(shape));
    }
  }

  Var<T> push_node(std::string_view op, std::vector<T> value, Shape shape, std::vector<int> inputs,
                   bool requires_grad, Backward backward) {
    nodes_.push_back(Node{std::string(op), std::move(value), std::move(shape), std::move(inputs),
                          requires_grad, std::move(backward), {}});
    return Var<T>(this, static_cast<int>(nodes_.size()) - 1);
  }

  const ParamStore<T>* params_ = nullptr;
  std::set<std::string, std::less<>> active_;
  std::vector<std::pair<std::string, int>> param_leaves_;
  std::vector<Node> nodes_;
};

template <typename T>
T Var<T>::item() const {
  const auto& v = value();
  if (v.size() != 1) throw_shape_error("item() on a tensor with " + std::to_string(v.size()) + " values");
  return v[0];
}

/// Scalar objective built from tape ops. The same callable feeds both
/// value_and_grad and the finite-difference oracle.
template <typename T>
using Objective = std::function<Var<T>(Tape<T>&)>;

template <typename T>
struct ValueAndGrad {
  T value{};
  Gradients<T> grads;
};

/// Evaluates the objective and its exact reverse-mode gradient for the
/// active groups. Groups outside `active` get no entry.
template <typename T>
ValueAndGrad<T> value_and_grad(const Objective<T>& objective, const ParamStore<T>& params,
                               const std::set<std::string, std::less<>>& active) {
  for (const auto& name : active) {
    if (!params.contains(name)) throw_config_error("active group '" + name + "' not in parameter store");
  }
  Tape<T> tape(params, active);
  Var<T> out = objective(tape);
  const T value = out.item();
  tape.backward(out);
  return {value, tape.gradients()};
}

/// Objective value without gradient bookkeeping.
template <typename T>
T evaluate(const Objective<T>& objective, const ParamStore<T>& params) {
  Tape<T> tape(params, {});
  return objective(tape).item();
}

}  // namespace sig::grad
