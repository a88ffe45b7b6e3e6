#include <algorithm>
#include <optional>

#include <Eigen/Core>

#include "fgn/errors.hpp"
#include "fgn/nn/ops.hpp"

namespace fgn::nn {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

constexpr std::size_t kDirectMaxOutputChannels = 16;

struct ConvGeometry {
  std::size_t cin, cout, t, h, w;
  std::size_t kt, kh, kw;

  std::size_t columns() const { return t * h * w; }
  std::size_t patch() const { return cin * kt * kh * kw; }
};

// Output positions [lo, hi) along one axis whose input index o + k - pad is in range.
inline void tap_range(std::size_t k, std::size_t pad, std::size_t extent, std::size_t& lo, std::size_t& hi) {
  lo = k < pad ? pad - k : 0;
  hi = std::min(extent, extent + pad - k);
}

// Visits every (patch row, output row) pair with the input row it reads from:
// fn(col_row_ptr_offset, input_offset, x0, x1), where column x of the output
// row reads input element input_offset + x.
template <typename Fn>
void for_each_tap(const ConvGeometry& g, Fn&& fn) {
  const std::size_t pt = g.kt / 2, ph = g.kh / 2, pw = g.kw / 2;
  const std::size_t frame = g.h * g.w, vol = g.t * frame;
  std::size_t row = 0;
  for (std::size_t ci = 0; ci < g.cin; ++ci) {
    for (std::size_t dt = 0; dt < g.kt; ++dt) {
      std::size_t t0, t1;
      tap_range(dt, pt, g.t, t0, t1);
      for (std::size_t dy = 0; dy < g.kh; ++dy) {
        std::size_t y0, y1;
        tap_range(dy, ph, g.h, y0, y1);
        for (std::size_t dx = 0; dx < g.kw; ++dx, ++row) {
          std::size_t x0, x1;
          tap_range(dx, pw, g.w, x0, x1);
          for (std::size_t t = t0; t < t1; ++t) {
            for (std::size_t y = y0; y < y1; ++y) {
              const std::size_t col = row * vol + t * frame + y * g.w;
              const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(ci * vol + (t + dt - pt) * frame +
                                                                     (y + dy - ph) * g.w) +
                                         static_cast<std::ptrdiff_t>(dx) - static_cast<std::ptrdiff_t>(pw);
              fn(col, src, x0, x1);
            }
          }
        }
      }
    }
  }
}

// cols [patch, columns]: cols[(ci,dt,dy,dx)][(t,y,x)] = zero-padded input.
void im2col(const ConvGeometry& g, const double* in, double* cols) {
  std::fill(cols, cols + g.patch() * g.columns(), 0.0);
  for_each_tap(g, [&](std::size_t col, std::ptrdiff_t src, std::size_t x0, std::size_t x1) {
    for (std::size_t x = x0; x < x1; ++x) cols[col + x] = in[src + static_cast<std::ptrdiff_t>(x)];
  });
}

void col2im_add(const ConvGeometry& g, const double* cols, double* in) {
  for_each_tap(g, [&](std::size_t col, std::ptrdiff_t src, std::size_t x0, std::size_t x1) {
    for (std::size_t x = x0; x < x1; ++x) in[src + static_cast<std::ptrdiff_t>(x)] += cols[col + x];
  });
}

// The direct kernels work on 8-wide row chunks. Rows are zero-padded to a whole
// number of chunks plus the kernel halo so the inner loops never bounds-check.
constexpr std::size_t kLanes = 8;
using Lane = Eigen::Array<double, kLanes, 1>;
using LaneMap = Eigen::Map<const Lane>;

inline std::size_t round_up_lanes(std::size_t w) { return (w + kLanes - 1) / kLanes * kLanes; }

struct Padded {
  std::vector<double> data;
  std::size_t channels, tp, hp, wp;

  Padded(std::size_t c, const ConvGeometry& g)
      : channels(c), tp(g.t + g.kt - 1), hp(g.h + g.kh - 1), wp(round_up_lanes(g.w) + g.kw - 1) {
    data.assign(channels * tp * hp * wp, 0.0);
  }
  double* row(std::size_t c, std::size_t t, std::size_t y) { return data.data() + ((c * tp + t) * hp + y) * wp; }
  const double* row(std::size_t c, std::size_t t, std::size_t y) const {
    return data.data() + ((c * tp + t) * hp + y) * wp;
  }
};

// Copies a [C,T,H,W] block into the padded layout, offset by the kernel halo
// when with_halo is set (inputs) or at the origin otherwise (output gradients).
Padded pad(const ConvGeometry& g, std::size_t channels, const double* in, bool with_halo) {
  Padded p(channels, g);
  const std::size_t pt = with_halo ? g.kt / 2 : 0, ph = with_halo ? g.kh / 2 : 0, pw = with_halo ? g.kw / 2 : 0;
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t t = 0; t < g.t; ++t)
      for (std::size_t y = 0; y < g.h; ++y)
        std::copy_n(in + ((c * g.t + t) * g.h + y) * g.w, g.w, p.row(c, t + pt, y + ph) + pw);
  return p;
}

// out[x] += sum_{ci,dt,dy,dx} k[ci,dt,dy,dx] * in[ci, t+dt, y+dy, x0+x+dx] for NC chunks.
template <std::size_t NC, std::size_t KW>
inline void correlate_chunks(const ConvGeometry& g, const Padded& p, const double* kc, std::size_t t, std::size_t y,
                             std::size_t x0, double* out) {
  Lane acc[NC];
  for (Lane& a : acc) a.setZero();
  const std::size_t taps = g.kt * g.kh * KW;
  for (std::size_t ci = 0; ci < g.cin; ++ci) {
    const double* kr = kc + ci * taps;
    for (std::size_t dt = 0; dt < g.kt; ++dt)
      for (std::size_t dy = 0; dy < g.kh; ++dy, kr += KW) {
        const double* src = p.row(ci, t + dt, y + dy) + x0;
        for (std::size_t dx = 0; dx < KW; ++dx) {
          const double w = kr[dx];
          for (std::size_t c = 0; c < NC; ++c) acc[c] += w * LaneMap(src + c * kLanes + dx);
        }
      }
  }
  for (std::size_t c = 0; c < NC; ++c) Eigen::Map<Lane>(out + c * kLanes) += acc[c];
}

template <std::size_t KW>
void correlate_rows(const ConvGeometry& g, const Padded& p, const double* k, double* out) {
  const std::size_t taps = g.kt * g.kh * KW;
  const std::size_t chunks = round_up_lanes(g.w) / kLanes;
  std::vector<double> row(chunks * kLanes);
  for (std::size_t co = 0; co < g.cout; ++co) {
    const double* kc = k + co * g.cin * taps;
    for (std::size_t t = 0; t < g.t; ++t)
      for (std::size_t y = 0; y < g.h; ++y) {
        std::fill(row.begin(), row.end(), 0.0);
        std::size_t c = 0;
        for (; c + 4 <= chunks; c += 4) correlate_chunks<4, KW>(g, p, kc, t, y, c * kLanes, row.data() + c * kLanes);
        switch (chunks - c) {
          case 3: correlate_chunks<3, KW>(g, p, kc, t, y, c * kLanes, row.data() + c * kLanes); break;
          case 2: correlate_chunks<2, KW>(g, p, kc, t, y, c * kLanes, row.data() + c * kLanes); break;
          case 1: correlate_chunks<1, KW>(g, p, kc, t, y, c * kLanes, row.data() + c * kLanes); break;
          default: break;
        }
        double* dst = out + ((co * g.t + t) * g.h + y) * g.w;
        for (std::size_t x = 0; x < g.w; ++x) dst[x] += row[x];
      }
  }
}

// Generic fallback for kernel widths without a specialised kernel.
void correlate_generic(const ConvGeometry& g, const Padded& p, const double* k, double* out) {
  const std::size_t taps = g.kt * g.kh * g.kw;
  for (std::size_t co = 0; co < g.cout; ++co)
    for (std::size_t t = 0; t < g.t; ++t)
      for (std::size_t y = 0; y < g.h; ++y) {
        double* acc = out + ((co * g.t + t) * g.h + y) * g.w;
        for (std::size_t ci = 0; ci < g.cin; ++ci)
          for (std::size_t dt = 0; dt < g.kt; ++dt)
            for (std::size_t dy = 0; dy < g.kh; ++dy) {
              const double* src = p.row(ci, t + dt, y + dy);
              const double* kr = k + (co * g.cin + ci) * taps + (dt * g.kh + dy) * g.kw;
              for (std::size_t dx = 0; dx < g.kw; ++dx)
                for (std::size_t x = 0; x < g.w; ++x) acc[x] += kr[dx] * src[x + dx];
            }
      }
}

// Accumulates the correlation of the padded input with k into out [Co,T,H,W].
void correlate(const ConvGeometry& g, const Padded& p, const double* k, double* out) {
  if (g.kw == 3)
    correlate_rows<3>(g, p, k, out);
  else
    correlate_generic(g, p, k, out);
}

// gk[co,ci,dt,dy,dx] += sum_{t,y,x} gout[co,t,y,x] * in[ci,t+dt,y+dy,x+dx], with one
// lane-vector accumulator per tap held across the whole (t,y,x) sweep.
template <std::size_t KT, std::size_t KH, std::size_t KW>
void kernel_gradient_fixed(const ConvGeometry& g, const Padded& p, const Padded& go, double* gk) {
  constexpr std::size_t taps = KT * KH * KW;
  const std::size_t chunks = round_up_lanes(g.w) / kLanes;
  for (std::size_t co = 0; co < g.cout; ++co)
    for (std::size_t ci = 0; ci < g.cin; ++ci) {
      Lane acc[taps];
      for (Lane& a : acc) a.setZero();
      for (std::size_t t = 0; t < g.t; ++t)
        for (std::size_t y = 0; y < g.h; ++y) {
          const double* grow = go.row(co, t, y);
          for (std::size_t c = 0; c < chunks; ++c) {
            const Lane gv = LaneMap(grow + c * kLanes);
            for (std::size_t dt = 0; dt < KT; ++dt)
              for (std::size_t dy = 0; dy < KH; ++dy) {
                const double* src = p.row(ci, t + dt, y + dy) + c * kLanes;
                for (std::size_t dx = 0; dx < KW; ++dx) acc[(dt * KH + dy) * KW + dx] += gv * LaneMap(src + dx);
              }
          }
        }
      double* dst = gk + (co * g.cin + ci) * taps;
      for (std::size_t i = 0; i < taps; ++i) dst[i] += acc[i].sum();
    }
}

void kernel_gradient_generic(const ConvGeometry& g, const Padded& p, const Padded& go, double* gk) {
  const std::size_t taps = g.kt * g.kh * g.kw;
  for (std::size_t co = 0; co < g.cout; ++co)
    for (std::size_t ci = 0; ci < g.cin; ++ci)
      for (std::size_t dt = 0; dt < g.kt; ++dt)
        for (std::size_t dy = 0; dy < g.kh; ++dy)
          for (std::size_t dx = 0; dx < g.kw; ++dx) {
            double s = 0.0;
            for (std::size_t t = 0; t < g.t; ++t)
              for (std::size_t y = 0; y < g.h; ++y) {
                const double* grow = go.row(co, t, y);
                const double* src = p.row(ci, t + dt, y + dy);
                for (std::size_t x = 0; x < g.w; ++x) s += grow[x] * src[x + dx];
              }
            gk[(co * g.cin + ci) * taps + (dt * g.kh + dy) * g.kw + dx] += s;
          }
}

void kernel_gradient(const ConvGeometry& g, const Padded& p, const Padded& go, double* gk) {
  if (g.kh == 3 && g.kw == 3 && g.kt == 3)
    kernel_gradient_fixed<3, 3, 3>(g, p, go, gk);
  else if (g.kh == 3 && g.kw == 3 && g.kt == 1)
    kernel_gradient_fixed<1, 3, 3>(g, p, go, gk);
  else
    kernel_gradient_generic(g, p, go, gk);
}

// Input gradient is a correlation of the padded output gradient with the
// flipped kernel, channels swapped.
void input_gradient(const ConvGeometry& g, const double* k, const double* gout, double* gin) {
  const ConvGeometry gt{g.cout, g.cin, g.t, g.h, g.w, g.kt, g.kh, g.kw};
  const std::size_t taps = g.kt * g.kh * g.kw;
  std::vector<double> flipped(g.cout * g.cin * taps);
  for (std::size_t co = 0; co < g.cout; ++co)
    for (std::size_t ci = 0; ci < g.cin; ++ci)
      for (std::size_t i = 0; i < taps; ++i)
        flipped[(ci * g.cout + co) * taps + (taps - 1 - i)] = k[(co * g.cin + ci) * taps + i];
  correlate(gt, pad(gt, gt.cin, gout, true), flipped.data(), gin);
}

bool prefer_direct(const ConvGeometry& g) { return g.cout <= kDirectMaxOutputChannels; }

Var conv_direct(const Var& input, const Var& kernels, std::optional<Var> bias, const ConvGeometry& g,
                const Shape& out_shape) {
  Tensor out(out_shape);
  const std::size_t plane = g.columns();
  if (bias)
    for (std::size_t c = 0; c < g.cout; ++c)
      std::fill_n(out.data().begin() + static_cast<std::ptrdiff_t>(c * plane), plane, bias->value().data()[c]);
  correlate(g, pad(g, g.cin, input.value().data().data(), true), kernels.value().data().data(), out.data().data());

  std::vector<Var> parents{input, kernels};
  if (bias) parents.push_back(*bias);
  return input.tape().record(std::move(out), parents, [input, kernels, bias, g, plane](Tape& tape, const Tensor& go) {
    if (bias && bias->requires_grad()) {
      auto gb = tape.grad(*bias).data();
      for (std::size_t c = 0; c < g.cout; ++c)
        for (std::size_t i = 0; i < plane; ++i) gb[c] += go.data()[c * plane + i];
    }
    if (kernels.requires_grad())
      kernel_gradient(g, pad(g, g.cin, input.value().data().data(), true), pad(g, g.cout, go.data().data(), false),
                      tape.grad(kernels).data().data());
    if (input.requires_grad())
      input_gradient(g, kernels.value().data().data(), go.data().data(), tape.grad(input).data().data());
  });
}

Var conv_gemm(const Var& input, const Var& kernels, std::optional<Var> bias, const ConvGeometry& g,
              const Shape& out_shape) {
  const auto K = static_cast<Eigen::Index>(g.patch());
  const auto N = static_cast<Eigen::Index>(g.columns());
  const auto Co = static_cast<Eigen::Index>(g.cout);

  std::vector<double> cols(g.patch() * g.columns());
  im2col(g, input.value().data().data(), cols.data());
  Tensor out(out_shape);
  MatrixMap o(out.data().data(), Co, N);
  o.noalias() = ConstMatrixMap(kernels.value().data().data(), Co, K) * ConstMatrixMap(cols.data(), K, N);
  if (bias) {
    const auto b = bias->value().data();
    for (Eigen::Index c = 0; c < Co; ++c) o.row(c).array() += b[c];
  }

  std::vector<Var> parents{input, kernels};
  if (bias) parents.push_back(*bias);
  // Columns are rebuilt in backward rather than kept alive on the tape.
  return input.tape().record(std::move(out), parents, [input, kernels, bias, g, K, N, Co](Tape& tape, const Tensor& go) {
    ConstMatrixMap gout(go.data().data(), Co, N);
    if (bias && bias->requires_grad()) {
      auto gb = tape.grad(*bias).data();
      for (Eigen::Index c = 0; c < Co; ++c) gb[c] += gout.row(c).sum();
    }
    if (kernels.requires_grad()) {
      std::vector<double> cols(static_cast<std::size_t>(K * N));
      im2col(g, input.value().data().data(), cols.data());
      MatrixMap gk(tape.grad(kernels).data().data(), Co, K);
      gk.noalias() += gout * ConstMatrixMap(cols.data(), K, N).transpose();
    }
    if (input.requires_grad()) {
      std::vector<double> gcols(static_cast<std::size_t>(K * N));
      MatrixMap gc(gcols.data(), K, N);
      gc.noalias() = ConstMatrixMap(kernels.value().data().data(), Co, K).transpose() * gout;
      col2im_add(g, gcols.data(), tape.grad(input).data().data());
    }
  });
}

Var conv_impl(const Var& input, const Var& kernels, std::optional<Var> bias, const ConvGeometry& g,
              const Shape& out_shape) {
  if (g.kt % 2 == 0 || g.kh % 2 == 0 || g.kw % 2 == 0)
    throw ShapeError("same-padded convolution requires odd kernel extents, got " + shape_string(kernels.shape()));
  if (bias && bias->size() != g.cout)
    throw ShapeError("convolution bias has " + std::to_string(bias->size()) + " entries for " +
                     std::to_string(g.cout) + " output channels");
  return prefer_direct(g) ? conv_direct(input, kernels, bias, g, out_shape)
                          : conv_gemm(input, kernels, bias, g, out_shape);
}

}  // namespace

Var conv3d(const Var& input, const Var& kernels, std::optional<Var> bias) {
  const Shape& is = input.shape();
  const Shape& ks = kernels.shape();
  if (is.size() != 4 || ks.size() != 5)
    throw ShapeError("conv3d expects input [C,T,H,W] and kernels [Co,Ci,kt,kh,kw], got " + shape_string(is) +
                     " and " + shape_string(ks));
  if (ks[1] != is[0])
    throw ShapeError("conv3d channel mismatch: input has " + std::to_string(is[0]) + ", kernels expect " +
                     std::to_string(ks[1]));
  ConvGeometry g{is[0], ks[0], is[1], is[2], is[3], ks[2], ks[3], ks[4]};
  return conv_impl(input, kernels, bias, g, {ks[0], is[1], is[2], is[3]});
}

Var conv2d(const Var& input, const Var& kernels, std::optional<Var> bias) {
  const Shape& is = input.shape();
  const Shape& ks = kernels.shape();
  if (is.size() != 3 || ks.size() != 4)
    throw ShapeError("conv2d expects input [C,H,W] and kernels [Co,Ci,k,k], got " + shape_string(is) + " and " +
                     shape_string(ks));
  if (ks[1] != is[0])
    throw ShapeError("conv2d channel mismatch: input has " + std::to_string(is[0]) + ", kernels expect " +
                     std::to_string(ks[1]));
  ConvGeometry g{is[0], ks[0], 1, is[1], is[2], 1, ks[2], ks[3]};
  return conv_impl(input, kernels, bias, g, {ks[0], is[1], is[2]});
}

Var conv2d_frames(const Var& input, const Var& kernels, std::optional<Var> bias) {
  const Shape& is = input.shape();
  const Shape& ks = kernels.shape();
  if (is.size() != 4 || ks.size() != 4)
    throw ShapeError("conv2d_frames expects input [C,T,H,W] and kernels [Co,Ci,k,k], got " + shape_string(is) +
                     " and " + shape_string(ks));
  if (ks[1] != is[0])
    throw ShapeError("conv2d_frames channel mismatch: input has " + std::to_string(is[0]) + ", kernels expect " +
                     std::to_string(ks[1]));
  ConvGeometry g{is[0], ks[0], is[1], is[2], is[3], 1, ks[2], ks[3]};
  return conv_impl(input, kernels, bias, g, {ks[0], is[1], is[2], is[3]});
}

}  // namespace fgn::nn
