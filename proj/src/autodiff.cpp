// SPDX-License-Identifier: Apache-2.0
#include "naga/autodiff.hpp"

#include <cmath>

#include "naga/kernels.hpp"
#include "naga/ops.hpp"

namespace naga::ad {

const Tensor& Var::value() const { return tape->value(id); }

const Tensor& Gradients::at(const std::string& name) const {
  auto it = grads_.find(name);
  if (it == grads_.end()) {
    throw MissingParameterError("no gradient recorded for parameter '" + name + "'");
  }
  return it->second;
}

Tensor& Gradients::mutable_at(const std::string& name) {
  auto it = grads_.find(name);
  if (it == grads_.end()) {
    throw MissingParameterError("no gradient recorded for parameter '" + name + "'");
  }
  return it->second;
}

Var Tape::param(std::string name, Tensor value) {
  if (has_param(name)) throw std::invalid_argument("parameter '" + name + "' registered twice");
  nodes_.push_back(Node{std::move(value), {}, {}, true});
  params_.emplace_back(std::move(name), nodes_.size() - 1);
  return Var{this, nodes_.size() - 1};
}

Var Tape::param_ref(std::string name, const Tensor& value) {
  if (has_param(name)) throw std::invalid_argument("parameter '" + name + "' registered twice");
  nodes_.push_back(Node{Tensor(), {}, {}, true, &value});
  params_.emplace_back(std::move(name), nodes_.size() - 1);
  return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, Backward backward) {
  bool needs = false;
  for (std::size_t i : inputs) needs = needs || nodes_.at(i).needs_grad;
  nodes_.push_back(Node{std::move(value), std::move(inputs), std::move(backward), needs, nullptr});
  return Var{this, nodes_.size() - 1};
}

bool Tape::has_param(const std::string& name) const {
  for (const auto& [n, id] : params_) {
    if (n == name) return true;
  }
  return false;
}

Gradients Tape::grads(Var loss) const {
  if (loss.tape != this) throw std::invalid_argument("loss belongs to a different tape");
  if (value(loss).size() != 1) {
    throw DimensionError("grads: loss must be a scalar, got " + value(loss).shape().str());
  }
  std::vector<Tensor> g(nodes_.size());
  g[loss.id] = Tensor::ones(value(loss).shape());
  std::vector<Tensor*> slots;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    if (!node.needs_grad || !node.backward || g[id].size() == 0) continue;
    slots.clear();
    for (std::size_t in : node.inputs) {
      if (!nodes_[in].needs_grad) {
        slots.push_back(nullptr);
        continue;
      }
      if (g[in].size() == 0) g[in] = Tensor::zeros(value(in).shape());
      slots.push_back(&g[in]);
    }
    node.backward(*this, g[id], slots);
  }
  Gradients out;
  for (const auto& [name, id] : params_) {
    out.insert(name, g[id].size() ? std::move(g[id]) : Tensor::zeros(value(id).shape()));
  }
  return out;
}

namespace {

Tape& same_tape(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) throw std::invalid_argument("vars from different tapes");
  return *a.tape;
}

void accumulate(Tensor* dst, const Tensor& src) {
  if (!dst) return;
  for (std::size_t i = 0; i < src.size(); ++i) (*dst)[i] += src[i];
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  return tape.record(naga::matmul(a.value(), b.value()), {a.id, b.id},
                     [ai = a.id, bi = b.id](const Tape& t, const Tensor& g, std::span<Tensor* const> in) {
                       const Tensor& av = t.value(ai);
                       const Tensor& bv = t.value(bi);
                       const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
                       if (in[0]) kernels::parallel::gemm_nt_acc({m, n, k}, g.data(), bv.data(), in[0]->data());
                       if (in[1]) kernels::parallel::gemm_tn_acc({k, m, n}, av.data(), g.data(), in[1]->data());
                     });
}

Var add(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  return tape.record(naga::add(a.value(), b.value()), {a.id, b.id},
                     [](const Tape&, const Tensor& g, std::span<Tensor* const> in) {
                       accumulate(in[0], g);
                       accumulate(in[1], g);
                     });
}

Var sub(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  return tape.record(naga::sub(a.value(), b.value()), {a.id, b.id},
                     [](const Tape&, const Tensor& g, std::span<Tensor* const> in) {
                       accumulate(in[0], g);
                       if (in[1]) {
                         for (std::size_t i = 0; i < g.size(); ++i) (*in[1])[i] -= g[i];
                       }
                     });
}

Var hadamard(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  return tape.record(naga::hadamard(a.value(), b.value()), {a.id, b.id},
                     [ai = a.id, bi = b.id](const Tape& t, const Tensor& g, std::span<Tensor* const> in) {
                       const Tensor& av = t.value(ai);
                       const Tensor& bv = t.value(bi);
                       if (in[0]) {
                         for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i] * bv[i];
                       }
                       if (in[1]) {
                         for (std::size_t i = 0; i < g.size(); ++i) (*in[1])[i] += g[i] * av[i];
                       }
                     });
}

Var scale(Var a, double s) {
  return a.tape->record(naga::scale(a.value(), s), {a.id},
                        [s](const Tape&, const Tensor& g, std::span<Tensor* const> in) {
                          for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += s * g[i];
                        });
}

Var add_row_bias(Var x, Var bias) {
  Tape& tape = same_tape(x, bias);
  return tape.record(naga::add_row_bias(x.value(), bias.value()), {x.id, bias.id},
                     [](const Tape&, const Tensor& g, std::span<Tensor* const> in) {
                       accumulate(in[0], g);
                       if (in[1]) {
                         const std::size_t n = g.dim(1);
                         for (std::size_t i = 0; i < g.dim(0); ++i) {
                           for (std::size_t j = 0; j < n; ++j) (*in[1])[j] += g[i * n + j];
                         }
                       }
                     });
}

Var flip_time(Var x) {
  return x.tape->record(naga::flip_time(x.value()), {x.id},
                        [](const Tape&, const Tensor& g, std::span<Tensor* const> in) {
                          accumulate(in[0], naga::flip_time(g));
                        });
}

Var silu(Var x) {
  return x.tape->record(naga::silu(x.value()), {x.id},
                        [xi = x.id](const Tape& t, const Tensor& g, std::span<Tensor* const> in) {
                          const Tensor& xv = t.value(xi);
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            const double s = naga::sigmoid(xv[i]);
                            (*in[0])[i] += g[i] * s * (1.0 + xv[i] * (1.0 - s));
                          }
                        });
}

Var layernorm_feature(Var x, double eps) {
  return x.tape->record(naga::layernorm_feature(x.value(), eps), {x.id},
      [xi = x.id, eps](const Tape& t, const Tensor& g, std::span<Tensor* const> in) {
        const Tensor& xv = t.value(xi);
        const std::size_t d = xv.cols();
        const std::size_t rows = xv.rows();
        const double inv_d = 1.0 / static_cast<double>(d);
        std::vector<double> y(d);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* xr = xv.data().data() + r * d;
          const double* gr = g.data().data() + r * d;
          double mu = 0.0;
          for (std::size_t j = 0; j < d; ++j) mu += xr[j];
          mu *= inv_d;
          double var = 0.0;
          for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
          var *= inv_d;
          const double inv_std = 1.0 / std::sqrt(var + eps);
          double g_mean = 0.0, gy_mean = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            y[j] = (xr[j] - mu) * inv_std;
            g_mean += gr[j];
            gy_mean += gr[j] * y[j];
          }
          g_mean *= inv_d;
          gy_mean *= inv_d;
          for (std::size_t j = 0; j < d; ++j) {
            (*in[0])[r * d + j] += inv_std * (gr[j] - g_mean - y[j] * gy_mean);
          }
        }
      });
}

Var causal_conv1d(Var x, Var w, Var bias) {
  Tape& tape = same_tape(x, w);
  same_tape(w, bias);
  return tape.record(naga::causal_conv1d(x.value(), w.value(), bias.value()), {x.id, w.id, bias.id},
      [xi = x.id, wi = w.id](const Tape& t, const Tensor& g, std::span<Tensor* const> in) {
        const Tensor& xv = t.value(xi);
        const Tensor& wv = t.value(wi);
        const kernels::ConvDims d{xv.dim(0), wv.dim(1), wv.dim(2), wv.dim(0)};
        // The kernel writes all three buffers; route unneeded ones to scratch.
        Tensor sx, sw, sb;
        Tensor& dx = in[0] ? *in[0] : (sx = Tensor::zeros(xv.shape()));
        Tensor& dw = in[1] ? *in[1] : (sw = Tensor::zeros(wv.shape()));
        Tensor& db = in[2] ? *in[2] : (sb = Tensor::zeros(Shape{d.c_out}));
        kernels::parallel::causal_conv1d_backward(d, xv.data(), wv.data(), g.data(), dx.data(),
                                                  dw.data(), db.data());
      });
}

Var slice_cols(Var x, std::size_t begin, std::size_t end) {
  return x.tape->record(naga::slice_cols(x.value(), begin, end), {x.id},
                        [begin](const Tape&, const Tensor& g, std::span<Tensor* const> in) {
                          const std::size_t w = g.dim(1);
                          for (std::size_t i = 0; i < g.dim(0); ++i) {
                            for (std::size_t j = 0; j < w; ++j) in[0]->at(i, begin + j) += g[i * w + j];
                          }
                        });
}

Var reshape(Var x, Shape shape) {
  return x.tape->record(x.value().reshaped(shape), {x.id},
                        [](const Tape&, const Tensor& g, std::span<Tensor* const> in) {
                          accumulate(in[0], g);
                        });
}

Var last_row(Var x) {
  return x.tape->record(naga::last_row(x.value()), {x.id},
                        [](const Tape&, const Tensor& g, std::span<Tensor* const> in) {
                          const std::size_t c = g.size();
                          const std::size_t last = in[0]->dim(0) - 1;
                          for (std::size_t j = 0; j < c; ++j) (*in[0])[last * c + j] += g[j];
                        });
}

Var sum(Var x) {
  return x.tape->record(Tensor::vector({naga::sum(x.value())}), {x.id},
                        [](const Tape&, const Tensor& g, std::span<Tensor* const> in) {
                          for (auto& v : in[0]->storage()) v += g[0];
                        });
}

Var sum_squares(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v * v;
  return x.tape->record(Tensor::vector({s}), {x.id},
                        [xi = x.id](const Tape& t, const Tensor& g, std::span<Tensor* const> in) {
                          const Tensor& xv = t.value(xi);
                          for (std::size_t i = 0; i < xv.size(); ++i) (*in[0])[i] += 2.0 * xv[i] * g[0];
                        });
}

Tensor finite_diff(const std::function<double(const Tensor&)>& f, const Tensor& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff: step must be positive");
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = f(probe);
    probe[i] = orig - h;
    const double down = f(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace naga::ad
