#include <doctest.h>

#include "fgn/errors.hpp"
#include "fgn/nn/grad_check.hpp"
#include "fgn/nn/ops.hpp"
#include "test_util.hpp"

using namespace fgn;
using namespace fgn::nn;
using fgn::test::random_tensor;

namespace {

// Straight six-loop cross-correlation with zero padding, [Cin,T,H,W] -> [Cout,T,H,W].
Tensor reference_conv3d(const Tensor& x, const Tensor& k, const Tensor* bias) {
  const std::size_t cin = x.dim(0), t = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t cout = k.dim(0), kt = k.dim(2), kh = k.dim(3), kw = k.dim(4);
  Tensor y({cout, t, h, w});
  for (std::size_t o = 0; o < cout; ++o)
    for (std::size_t z = 0; z < t; ++z)
      for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
          double acc = bias ? (*bias)[o] : 0.0;
          for (std::size_t i = 0; i < cin; ++i)
            for (std::size_t dz = 0; dz < kt; ++dz)
              for (std::size_t dr = 0; dr < kh; ++dr)
                for (std::size_t dc = 0; dc < kw; ++dc) {
                  const long zz = long(z + dz) - long(kt / 2);
                  const long rr = long(r + dr) - long(kh / 2);
                  const long cc = long(c + dc) - long(kw / 2);
                  if (zz < 0 || rr < 0 || cc < 0 || zz >= long(t) || rr >= long(h) || cc >= long(w)) continue;
                  acc += k.at({o, i, dz, dr, dc}) * x.at({i, std::size_t(zz), std::size_t(rr), std::size_t(cc)});
                }
          y.at({o, z, r, c}) = acc;
        }
  return y;
}

void check_close(const Tensor& a, const Tensor& b, double tol = 1e-11) {
  REQUIRE(a.shape() == b.shape());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  CHECK(worst < tol);
}

}  // namespace

TEST_CASE("conv3d delta kernel is the identity, zero kernel gives zeros") {
  std::mt19937_64 rng(11);
  Tape tape;
  const Tensor x = random_tensor({1, 3, 6, 5}, rng);
  Tensor delta({1, 1, 3, 3, 3});
  delta.at({0, 0, 1, 1, 1}) = 1.0;
  CHECK(conv3d(tape.constant(x), tape.constant(delta)).value() == x);
  const Tensor zeros = conv3d(tape.constant(x), tape.constant(Tensor({2, 1, 3, 3, 3}))).value();
  for (double v : zeros.data()) CHECK(v == 0.0);
}

TEST_CASE("conv3d of ones counts the in-bounds taps") {
  Tape tape;
  const Tensor y = conv3d(tape.constant(Tensor({1, 2, 3, 3}, 1.0)), tape.constant(Tensor({1, 1, 3, 3, 3}, 1.0))).value();
  // Two frames: temporal neighbours are clipped to 2, the spatial center sees 9.
  CHECK(y.at({0, 0, 1, 1}) == 18.0);
  CHECK(y.at({0, 1, 0, 0}) == 8.0);
}

TEST_CASE("conv2d of ones") {
  Tape tape;
  const Tensor y = conv2d(tape.constant(Tensor({1, 3, 3}, 1.0)), tape.constant(Tensor({1, 1, 3, 3}, 1.0))).value();
  CHECK(y.at({0, 0, 0}) == 4.0);
  CHECK(y.at({0, 0, 1}) == 6.0);
  CHECK(y.at({0, 1, 1}) == 9.0);
}

TEST_CASE("conv3d matches the reference on random inputs") {
  std::mt19937_64 rng(12);
  struct Case {
    std::size_t cin, cout, t, h, w, kt, k;
  };
  // Output counts on both sides of the direct/GEMM switch, odd widths, kt 1 and 3.
  for (const Case c : {Case{1, 8, 3, 50, 50, 3, 3}, Case{2, 4, 2, 7, 13, 3, 3}, Case{3, 20, 2, 9, 11, 3, 3},
                       Case{2, 5, 4, 6, 17, 1, 3}, Case{1, 3, 1, 5, 5, 1, 5}, Case{4, 17, 3, 12, 12, 1, 1}}) {
    CAPTURE(c.cout);
    CAPTURE(c.w);
    Tape tape;
    const Tensor x = random_tensor({c.cin, c.t, c.h, c.w}, rng);
    const Tensor k = random_tensor({c.cout, c.cin, c.kt, c.k, c.k}, rng);
    const Tensor b = random_tensor({c.cout}, rng);
    check_close(conv3d(tape.constant(x), tape.constant(k), tape.constant(b)).value(), reference_conv3d(x, k, &b));
  }
}

TEST_CASE("conv2d and conv2d_frames agree with the reference") {
  std::mt19937_64 rng(13);
  for (std::size_t cout : {6u, 32u}) {
    Tape tape;
    const Tensor x = random_tensor({3, 4, 10, 9}, rng);
    const Tensor k2 = random_tensor({cout, 3, 3, 3}, rng);
    const Tensor b = random_tensor({cout}, rng);
    const Tensor k3 = k2.reshaped({cout, 3, 1, 3, 3});
    const Tensor expected = reference_conv3d(x, k3, &b);
    check_close(conv2d_frames(tape.constant(x), tape.constant(k2), tape.constant(b)).value(), expected);

    Var xv = tape.constant(x);
    const Tensor f2 = conv2d(frame(xv, 2), tape.constant(k2), tape.constant(b)).value();
    const Tensor e2 = reference_conv3d(frame(xv, 2).value().reshaped({3, 1, 10, 9}), k3, &b);
    check_close(f2, e2.reshaped({cout, 10, 9}));
  }
}

TEST_CASE("convolution gradients on both code paths") {
  std::mt19937_64 rng(14);
  for (std::size_t cout : {3u, 18u}) {
    CAPTURE(cout);
    Parameter x("x", random_tensor({2, 3, 5, 6}, rng));
    Parameter k("k", random_tensor({cout, 2, 3, 3, 3}, rng));
    Parameter b("b", random_tensor({cout}, rng));
    Parameter mix("mix", random_tensor({cout, 3, 5, 6}, rng));
    auto r = grad_check(
        [&](Tape& t) { return dot(conv3d(t.parameter(x), t.parameter(k), t.parameter(b)), t.parameter(mix)); },
        {&x, &k, &b});
    CHECK(r.passed);

    Parameter k2("k2", random_tensor({cout, 2, 3, 3}, rng));
    auto r2 = grad_check(
        [&](Tape& t) { return dot(conv2d_frames(t.parameter(x), t.parameter(k2)), t.parameter(mix)); }, {&x, &k2});
    CHECK(r2.passed);
  }
}

TEST_CASE("convolution shape errors") {
  Tape tape;
  Var x = tape.constant(Tensor({2, 3, 5, 5}));
  CHECK_THROWS_AS(conv3d(x, tape.constant(Tensor({1, 3, 3, 3, 3}))), ShapeError);   // C_in mismatch
  CHECK_THROWS_AS(conv3d(x, tape.constant(Tensor({1, 2, 2, 3, 3}))), ShapeError);   // even extent
  CHECK_THROWS_AS(conv3d(x, tape.constant(Tensor({1, 2, 3, 3}))), ShapeError);      // wrong rank
  CHECK_THROWS_AS(conv3d(x, tape.constant(Tensor({4, 2, 3, 3, 3})), tape.constant(Tensor({3}))), ShapeError);
  CHECK_THROWS_AS(conv2d(tape.constant(Tensor({2, 5, 5})), tape.constant(Tensor({1, 2, 4, 4}))), ShapeError);
}

TEST_CASE("convolutions preserve extents") {
  Tape tape;
  CHECK(conv3d(tape.constant(Tensor({1, 7, 50, 50})), tape.constant(Tensor({8, 1, 3, 3, 3}))).shape() ==
        Shape{8, 7, 50, 50});
  CHECK(conv2d(tape.constant(Tensor({8, 25, 25})), tape.constant(Tensor({16, 8, 3, 3}))).shape() ==
        Shape{16, 25, 25});
}
