#include "fgn/nn/ops.hpp"

#include <algorithm>
#include <cmath>

#include "fgn/errors.hpp"

namespace fgn::nn {
namespace {

void require_same_size(const Var& a, const Var& b, const char* op) {
  if (a.size() != b.size())
    throw ShapeError(std::string(op) + ": size mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
}

void accumulate(Tape& tape, const Var& target, const Tensor& g) {
  if (!target.requires_grad()) return;
  auto dst = tape.grad(target).data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

std::size_t pooled_extent(std::size_t extent, std::size_t window, std::size_t stride, const char* op) {
  if (window == 0 || stride == 0) throw ShapeError(std::string(op) + ": window and stride must be >= 1");
  if (window > extent)
    throw ShapeError(std::string(op) + ": window " + std::to_string(window) + " larger than input extent " +
                     std::to_string(extent));
  return (extent - window) / stride + 1;
}

}  // namespace

Var maxpool2d(const Var& input, std::size_t window, std::size_t stride) {
  const Shape& s = input.shape();
  if (s.size() < 3) throw ShapeError("maxpool2d expects [C,H,W] or [C,T,H,W], got " + shape_string(s));
  const std::size_t H = s[s.size() - 2], W = s[s.size() - 1];
  const std::size_t C = input.size() / (H * W);
  const std::size_t Ho = pooled_extent(H, window, stride, "maxpool2d");
  const std::size_t Wo = pooled_extent(W, window, stride, "maxpool2d");
  Shape out_shape = s;
  out_shape[s.size() - 2] = Ho;
  out_shape[s.size() - 1] = Wo;
  Tensor out(out_shape);
  std::vector<std::size_t> argmax(out.size());
  const auto in = input.value().data();
  std::uint64_t routing = 0;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t oy = 0; oy < Ho; ++oy) {
      for (std::size_t ox = 0; ox < Wo; ++ox) {
        std::size_t best = (c * H + oy * stride) * W + ox * stride;
        for (std::size_t dy = 0; dy < window; ++dy) {
          for (std::size_t dx = 0; dx < window; ++dx) {
            std::size_t idx = (c * H + oy * stride + dy) * W + ox * stride + dx;
            if (in[idx] > in[best]) best = idx;
          }
        }
        std::size_t o = (c * Ho + oy) * Wo + ox;
        out[o] = in[best];
        argmax[o] = best;
        routing = routing * 31 + best;
      }
    }
  }
  input.tape().note_routing(routing);
  return input.tape().record(std::move(out), {input}, [input, argmax = std::move(argmax)](Tape& tape, const Tensor& go) {
    auto gin = tape.grad(input).data();
    for (std::size_t o = 0; o < argmax.size(); ++o) gin[argmax[o]] += go[o];
  });
}

Var pool1d(const Var& input, std::size_t window, std::size_t stride, PoolMode mode) {
  const std::size_t D = input.size();
  const std::size_t Do = pooled_extent(D, window, stride, "pool1d");
  const auto in = input.value().data();
  Tensor out({Do});
  if (mode == PoolMode::avg) {
    for (std::size_t o = 0; o < Do; ++o) {
      double s = 0.0;
      for (std::size_t k = 0; k < window; ++k) s += in[o * stride + k];
      out[o] = s / static_cast<double>(window);
    }
    return input.tape().record(std::move(out), {input}, [input, window, stride](Tape& tape, const Tensor& go) {
      auto gin = tape.grad(input).data();
      const double inv = 1.0 / static_cast<double>(window);
      for (std::size_t o = 0; o < go.size(); ++o)
        for (std::size_t k = 0; k < window; ++k) gin[o * stride + k] += go[o] * inv;
    });
  }
  std::vector<std::size_t> argmax(Do);
  std::uint64_t routing = 0;
  for (std::size_t o = 0; o < Do; ++o) {
    std::size_t best = o * stride;
    for (std::size_t k = 1; k < window; ++k)
      if (in[o * stride + k] > in[best]) best = o * stride + k;
    out[o] = in[best];
    argmax[o] = best;
    routing = routing * 31 + best;
  }
  input.tape().note_routing(routing);
  return input.tape().record(std::move(out), {input}, [input, argmax = std::move(argmax)](Tape& tape, const Tensor& go) {
    auto gin = tape.grad(input).data();
    for (std::size_t o = 0; o < argmax.size(); ++o) gin[argmax[o]] += go[o];
  });
}

Var matvec(const Var& weight, const Var& x) {
  const Shape& ws = weight.shape();
  if (ws.size() != 2 || ws[1] != x.size())
    throw ShapeError("matvec: weight " + shape_string(ws) + " incompatible with input " + shape_string(x.shape()));
  const std::size_t R = ws[0], K = ws[1];
  const auto w = weight.value().data();
  const auto xv = x.value().data();
  Tensor out({R});
  for (std::size_t r = 0; r < R; ++r) {
    const double* wr = w.data() + r * K;
    double s = 0.0;
    for (std::size_t k = 0; k < K; ++k) s += wr[k] * xv[k];
    out[r] = s;
  }
  return x.tape().record(std::move(out), {weight, x}, [weight, x, R, K](Tape& tape, const Tensor& go) {
    const auto w = weight.value().data();
    const auto xv = x.value().data();
    if (weight.requires_grad()) {
      auto gw = tape.grad(weight).data();
      for (std::size_t r = 0; r < R; ++r) {
        const double g = go[r];
        if (g == 0.0) continue;
        double* gr = gw.data() + r * K;
        for (std::size_t k = 0; k < K; ++k) gr[k] += g * xv[k];
      }
    }
    if (x.requires_grad()) {
      auto gx = tape.grad(x).data();
      for (std::size_t r = 0; r < R; ++r) {
        const double g = go[r];
        if (g == 0.0) continue;
        const double* wr = w.data() + r * K;
        for (std::size_t k = 0; k < K; ++k) gx[k] += g * wr[k];
      }
    }
  });
}

Var affine(const Var& x, const Var& weight, const Var& bias) {
  if (weight.shape().size() != 2 || bias.size() != weight.shape()[0])
    throw ShapeError("affine: weight " + shape_string(weight.shape()) + " incompatible with bias " +
                     shape_string(bias.shape()));
  return add(matvec(weight, x), bias);
}

Var sigmoid(const Var& x) {
  Tensor out(x.shape());
  const auto in = x.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-in[i]));
  Tensor saved = out;
  return x.tape().record(std::move(out), {x}, [x, saved = std::move(saved)](Tape& tape, const Tensor& go) {
    auto gx = tape.grad(x).data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * saved[i] * (1.0 - saved[i]);
  });
}

Var tanh(const Var& x) {
  Tensor out(x.shape());
  const auto in = x.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(in[i]);
  Tensor saved = out;
  return x.tape().record(std::move(out), {x}, [x, saved = std::move(saved)](Tape& tape, const Tensor& go) {
    auto gx = tape.grad(x).data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * (1.0 - saved[i] * saved[i]);
  });
}

Var softmax(const Var& x) {
  const auto in = x.value().data();
  Tensor out(x.shape());
  const double m = *std::max_element(in.begin(), in.end());
  double z = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) z += (out[i] = std::exp(in[i] - m));
  for (double& v : out.data()) v /= z;
  Tensor saved = out;
  return x.tape().record(std::move(out), {x}, [x, saved = std::move(saved)](Tape& tape, const Tensor& go) {
    double inner = 0.0;
    for (std::size_t i = 0; i < saved.size(); ++i) inner += go[i] * saved[i];
    auto gx = tape.grad(x).data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += saved[i] * (go[i] - inner);
  });
}

Var dropout(const Var& x, double rate, bool training, std::mt19937_64& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ArgumentError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  Tensor mask(x.shape());
  for (double& m : mask.data()) m = keep(rng) ? scale : 0.0;
  Tensor out(x.shape());
  const auto in = x.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] * mask[i];
  return x.tape().record(std::move(out), {x}, [x, mask = std::move(mask)](Tape& tape, const Tensor& go) {
    auto gx = tape.grad(x).data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * mask[i];
  });
}

Var add(const Var& a, const Var& b) {
  require_same_size(a, b, "add");
  Tensor out(a.shape());
  const auto av = a.value().data();
  const auto bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& tape, const Tensor& go) {
    accumulate(tape, a, go);
    accumulate(tape, b, go);
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_size(a, b, "mul");
  Tensor out(a.shape());
  const auto av = a.value().data();
  const auto bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& tape, const Tensor& go) {
    const auto av = a.value().data();
    const auto bv = b.value().data();
    if (a.requires_grad()) {
      auto ga = tape.grad(a).data();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go[i] * bv[i];
    }
    if (b.requires_grad()) {
      auto gb = tape.grad(b).data();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += go[i] * av[i];
    }
  });
}

Var scale(const Var& x, double factor) {
  Tensor out(x.shape());
  const auto in = x.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] * factor;
  return x.tape().record(std::move(out), {x}, [x, factor](Tape& tape, const Tensor& go) {
    auto gx = tape.grad(x).data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * factor;
  });
}

Var sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return x.tape().record(Tensor::scalar(s), {x}, [x](Tape& tape, const Tensor& go) {
    for (double& g : tape.grad(x).data()) g += go[0];
  });
}

Var dot(const Var& a, const Var& b) {
  require_same_size(a, b, "dot");
  const auto av = a.value().data();
  const auto bv = b.value().data();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  return a.tape().record(Tensor::scalar(s), {a, b}, [a, b](Tape& tape, const Tensor& go) {
    const auto av = a.value().data();
    const auto bv = b.value().data();
    if (a.requires_grad()) {
      auto ga = tape.grad(a).data();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go[0] * bv[i];
    }
    if (b.requires_grad()) {
      auto gb = tape.grad(b).data();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += go[0] * av[i];
    }
  });
}

Var outer(const Var& a, const Var& b) {
  const auto av = a.value().data();
  const auto bv = b.value().data();
  const std::size_t A = av.size(), B = bv.size();
  Tensor out({A * B});
  for (std::size_t i = 0; i < A; ++i)
    for (std::size_t j = 0; j < B; ++j) out[i * B + j] = av[i] * bv[j];
  return a.tape().record(std::move(out), {a, b}, [a, b, A, B](Tape& tape, const Tensor& go) {
    const auto av = a.value().data();
    const auto bv = b.value().data();
    if (a.requires_grad()) {
      auto ga = tape.grad(a).data();
      for (std::size_t i = 0; i < A; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < B; ++j) s += go[i * B + j] * bv[j];
        ga[i] += s;
      }
    }
    if (b.requires_grad()) {
      auto gb = tape.grad(b).data();
      for (std::size_t i = 0; i < A; ++i)
        for (std::size_t j = 0; j < B; ++j) gb[j] += go[i * B + j] * av[i];
    }
  });
}

Var reshape(const Var& x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return x.tape().record(std::move(out), {x}, [x](Tape& tape, const Tensor& go) {
    auto gx = tape.grad(x).data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i];
  });
}

Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat of zero parts");
  std::vector<double> data;
  for (const Var& p : parts) data.insert(data.end(), p.value().data().begin(), p.value().data().end());
  return parts.front().tape().record(Tensor::vector(std::move(data)), parts, [parts](Tape& tape, const Tensor& go) {
    std::size_t off = 0;
    for (const Var& p : parts) {
      if (p.requires_grad()) {
        auto gp = tape.grad(p).data();
        for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += go[off + i];
      }
      off += p.size();
    }
  });
}

Var slice(const Var& x, std::size_t offset, std::size_t length) {
  if (length == 0 || offset + length > x.size())
    throw ShapeError("slice [" + std::to_string(offset) + ", " + std::to_string(offset + length) +
                     ") out of bounds for size " + std::to_string(x.size()));
  const auto in = x.value().data();
  std::vector<double> data(in.begin() + offset, in.begin() + offset + length);
  return x.tape().record(Tensor::vector(std::move(data)), {x}, [x, offset](Tape& tape, const Tensor& go) {
    auto gx = tape.grad(x).data();
    for (std::size_t i = 0; i < go.size(); ++i) gx[offset + i] += go[i];
  });
}

Var row(const Var& table, std::size_t index) {
  const Shape& s = table.shape();
  if (s.size() != 2 || index >= s[0])
    throw ShapeError("row " + std::to_string(index) + " out of range for table " + shape_string(s));
  const std::size_t D = s[1];
  const auto in = table.value().data();
  std::vector<double> data(in.begin() + index * D, in.begin() + (index + 1) * D);
  return table.tape().record(Tensor::vector(std::move(data)), {table}, [table, index, D](Tape& tape, const Tensor& go) {
    auto gt = tape.grad(table).data();
    for (std::size_t i = 0; i < D; ++i) gt[index * D + i] += go[i];
  });
}

Var stack(const std::vector<Var>& rows) {
  if (rows.empty()) throw ShapeError("stack of zero rows");
  const std::size_t D = rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * D);
  for (const Var& r : rows) {
    require_same_size(rows.front(), r, "stack");
    data.insert(data.end(), r.value().data().begin(), r.value().data().end());
  }
  return rows.front().tape().record(Tensor({rows.size(), D}, std::move(data)), rows,
                                    [rows, D](Tape& tape, const Tensor& go) {
                                      for (std::size_t r = 0; r < rows.size(); ++r) {
                                        if (!rows[r].requires_grad()) continue;
                                        auto g = tape.grad(rows[r]).data();
                                        for (std::size_t i = 0; i < D; ++i) g[i] += go[r * D + i];
                                      }
                                    });
}

Var frame(const Var& x, std::size_t t) {
  const Shape& s = x.shape();
  if (s.size() != 4 || t >= s[1]) throw ShapeError("frame " + std::to_string(t) + " out of range for " + shape_string(s));
  const std::size_t C = s[0], T = s[1], HW = s[2] * s[3];
  Tensor out({C, s[2], s[3]});
  const auto in = x.value().data();
  for (std::size_t c = 0; c < C; ++c)
    std::copy_n(in.begin() + (c * T + t) * HW, HW, out.data().begin() + c * HW);
  return x.tape().record(std::move(out), {x}, [x, t, C, T, HW](Tape& tape, const Tensor& go) {
    auto gx = tape.grad(x).data();
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t i = 0; i < HW; ++i) gx[(c * T + t) * HW + i] += go[c * HW + i];
  });
}

Var weighted_sum(const Var& weights, const std::vector<Var>& items) {
  if (items.empty() || weights.size() != items.size())
    throw ShapeError("weighted_sum: " + std::to_string(weights.size()) + " weights for " +
                     std::to_string(items.size()) + " items");
  const std::size_t D = items.front().size();
  const auto a = weights.value().data();
  Tensor out({D});
  for (std::size_t i = 0; i < items.size(); ++i) {
    require_same_size(items.front(), items[i], "weighted_sum");
    const auto m = items[i].value().data();
    for (std::size_t k = 0; k < D; ++k) out[k] += a[i] * m[k];
  }
  std::vector<Var> parents = items;
  parents.push_back(weights);
  return weights.tape().record(std::move(out), parents, [weights, items, D](Tape& tape, const Tensor& go) {
    const auto a = weights.value().data();
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto m = items[i].value().data();
      if (weights.requires_grad()) {
        double s = 0.0;
        for (std::size_t k = 0; k < D; ++k) s += go[k] * m[k];
        tape.grad(weights)[i] += s;
      }
      if (items[i].requires_grad()) {
        auto g = tape.grad(items[i]).data();
        for (std::size_t k = 0; k < D; ++k) g[k] += a[i] * go[k];
      }
    }
  });
}

Var mean_of(const std::vector<Var>& items) {
  if (items.empty()) throw ShapeError("mean_of zero items");
  const std::size_t D = items.front().size();
  const double inv = 1.0 / static_cast<double>(items.size());
  Tensor out({D});
  for (const Var& it : items) {
    require_same_size(items.front(), it, "mean_of");
    const auto m = it.value().data();
    // inv * m summed in item order, matching weighted_sum with uniform weights bit for bit.
    for (std::size_t k = 0; k < D; ++k) out[k] += inv * m[k];
  }
  return items.front().tape().record(std::move(out), items, [items, inv](Tape& tape, const Tensor& go) {
    for (const Var& it : items) {
      if (!it.requires_grad()) continue;
      auto g = tape.grad(it).data();
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += go[k] * inv;
    }
  });
}

Var max_of(const std::vector<Var>& items) {
  if (items.empty()) throw ShapeError("max_of zero items");
  const std::size_t D = items.front().size();
  Tensor out({D});
  std::vector<std::size_t> argmax(D, 0);
  for (std::size_t k = 0; k < D; ++k) out[k] = items.front().value()[k];
  for (std::size_t i = 1; i < items.size(); ++i) {
    require_same_size(items.front(), items[i], "max_of");
    const auto m = items[i].value().data();
    for (std::size_t k = 0; k < D; ++k)
      if (m[k] > out[k]) {
        out[k] = m[k];
        argmax[k] = i;
      }
  }
  std::uint64_t routing = 0;
  for (std::size_t k : argmax) routing = routing * 31 + k;
  items.front().tape().note_routing(routing);
  return items.front().tape().record(std::move(out), items, [items, argmax = std::move(argmax)](Tape& tape, const Tensor& go) {
    for (std::size_t k = 0; k < argmax.size(); ++k) {
      const Var& src = items[argmax[k]];
      if (src.requires_grad()) tape.grad(src)[k] += go[k];
    }
  });
}

LstmParams::LstmParams(const std::string& name, std::size_t input_dim, std::size_t hidden_dim, std::mt19937_64& rng)
    : weight(name + ".weight", Tensor({4 * hidden_dim, input_dim + hidden_dim})),
      bias(name + ".bias", Tensor({4 * hidden_dim})) {
  glorot_uniform(weight.value, input_dim + hidden_dim, 4 * hidden_dim, rng);
}

LstmState lstm_step(const Var& x, const LstmState& prev, const Var& weight, const Var& bias) {
  const std::size_t H = prev.h.size();
  if (bias.size() != 4 * H || prev.c.size() != H || weight.shape().size() != 2 ||
      weight.shape()[1] != x.size() + H)
    throw ShapeError("lstm_step: weight " + shape_string(weight.shape()) + " incompatible with input " +
                     std::to_string(x.size()) + " and hidden " + std::to_string(H));
  Var gates = affine(concat({x, prev.h}), weight, bias);
  Var in_gate = sigmoid(slice(gates, 0, H));
  Var forget_gate = sigmoid(slice(gates, H, H));
  Var candidate = tanh(slice(gates, 2 * H, H));
  Var out_gate = sigmoid(slice(gates, 3 * H, H));
  Var c = add(mul(forget_gate, prev.c), mul(in_gate, candidate));
  Var h = mul(out_gate, tanh(c));
  return {h, c};
}

}  // namespace fgn::nn
