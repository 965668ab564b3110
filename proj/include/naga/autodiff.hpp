// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode differentiation over the small op set the Naga graph needs.
//
// A Tape records values in creation order; each recorded node keeps the ids
// of its inputs and a closure that maps the node's output gradient onto its
// inputs. Since nodes are appended after their inputs, walking the tape
// backwards is a valid topological order.
//
//   ad::Tape tape;
//   auto w = tape.param("W", w0);
//   auto x = tape.constant(x0);
//   auto loss = ad::sum(ad::matmul(x, w));
//   ad::Gradients g = tape.grads(loss);
//   const Tensor& dw = g.at("W");
#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "naga/tensor.hpp"

namespace naga::ad {

class MissingParameterError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class Tape;

/// Handle to a recorded node. Cheap to copy; valid while its tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
};

/// Parameter gradients keyed by registration name.
class Gradients {
 public:
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const { return grads_.count(name) != 0; }
  std::size_t size() const { return grads_.size(); }
  auto begin() const { return grads_.begin(); }
  auto end() const { return grads_.end(); }

  Tensor& mutable_at(const std::string& name);
  void insert(std::string name, Tensor g) { grads_.insert_or_assign(std::move(name), std::move(g)); }

 private:
  std::map<std::string, Tensor> grads_;
};

class Tape {
 public:
  /// Maps the output gradient onto the gradients of the node's inputs.
  /// Entries of `inputs` are null for inputs that do not need a gradient.
  using Backward =
      std::function<void(const Tape& tape, const Tensor& grad_out, std::span<Tensor* const> inputs)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers a differentiable leaf. Names must be unique per tape.
  Var param(std::string name, Tensor value);
  /// Like param(), but reads `value` in place; it must outlive the tape.
  Var param_ref(std::string name, const Tensor& value);
  /// Leaf that never receives a gradient.
  Var constant(Tensor value);

  Var record(Tensor value, std::vector<std::size_t> inputs, Backward backward);

  const Tensor& value(std::size_t id) const {
    const Node& n = nodes_.at(id);
    return n.external ? *n.external : n.value;
  }
  const Tensor& value(Var v) const { return value(v.id); }
  std::size_t size() const { return nodes_.size(); }
  bool has_param(const std::string& name) const;

  /// d loss / d param for every registered parameter. Parameters that the
  /// loss does not depend on get zero tensors.
  Gradients grads(Var loss) const;

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    Backward backward;
    bool needs_grad = false;
    const Tensor* external = nullptr;
  };

  std::vector<Node> nodes_;
  std::vector<std::pair<std::string, std::size_t>> params_;
};

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double s);
Var add_row_bias(Var x, Var bias);
Var flip_time(Var x);
Var silu(Var x);
Var layernorm_feature(Var x, double eps);
Var causal_conv1d(Var x, Var w, Var bias);
Var slice_cols(Var x, std::size_t begin, std::size_t end);
Var reshape(Var x, Shape shape);
Var last_row(Var x);
/// Scalar sum of all elements (shape [1]).
Var sum(Var x);
/// Scalar sum of squares (shape [1]).
Var sum_squares(Var x);

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate.
Tensor finite_diff(const std::function<double(const Tensor&)>& f, const Tensor& x, double h);

}  // namespace naga::ad
