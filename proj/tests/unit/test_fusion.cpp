#include <doctest.h>

#include "fgn/errors.hpp"
#include "fgn/fusion/fusion.hpp"
#include "fgn/nn/ops.hpp"
#include "test_util.hpp"

using namespace fgn;
using namespace fgn::fusion;
using fgn::test::random_tensor;

namespace {

nn::Tensor vec(std::vector<double> v) { return nn::Tensor::vector(std::move(v)); }

std::vector<nn::Var> constants(nn::Tape& tape, const std::vector<nn::Tensor>& ts) {
  std::vector<nn::Var> out;
  for (const auto& t : ts) out.push_back(tape.constant(t));
  return out;
}

}  // namespace

TEST_CASE("validate_window") {
  CHECK(validate_window({8, 4, 2, 4, 2, 1}) == 3);
  CHECK(validate_window({768, 96, 12, 64, 8, 1}) == 57);
  CHECK(validate_window({}) == 7);
  try {
    validate_window({768, 96, 8, 64, 12, 1});
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    CHECK(what.find("85") != std::string::npos);
    CHECK(what.find("53") != std::string::npos);
  }
  CHECK_THROWS_AS(validate_window({9, 4, 2, 4, 2, 1}), ValidationError);  // stride does not fit
  CHECK_THROWS_AS(validate_window({4, 8, 1, 4, 2, 1}), ValidationError);  // window wider than vector
  CHECK_THROWS_AS(validate_window({8, 4, 0, 4, 2, 1}), ValidationError);
}

TEST_CASE("every accepted window yields equal slice counts on both streams") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::size_t> small(1, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = small(rng), kc = small(rng), sc = small(rng), kg = small(rng), sg = small(rng);
    const WindowSpec spec{kc + (n - 1) * sc, kc, sc, kg + (n - 1) * sg, kg, sg};
    REQUIRE(validate_window(spec) == n);
    nn::Tape tape;
    CHECK(extract_slices(tape.constant(nn::Tensor({spec.char_dim})), kc, sc, n).size() == n);
    CHECK(extract_slices(tape.constant(nn::Tensor({spec.glyph_dim})), kg, sg, n).size() == n);
  }
}

TEST_CASE("extract_slices") {
  nn::Tape tape;
  auto s = extract_slices(tape.constant(vec({10, 20, 30, 40})), 2, 2, 2);
  REQUIRE(s.size() == 2);
  CHECK(s[0].value() == vec({10, 20}));
  CHECK(s[1].value() == vec({30, 40}));

  auto whole = extract_slices(tape.constant(vec({1, 2, 3})), 3, 5, 1);
  REQUIRE(whole.size() == 1);
  CHECK(whole[0].value() == vec({1, 2, 3}));

  auto overlap = extract_slices(tape.constant(vec({1, 2, 3, 4, 5})), 3, 1, 3);
  REQUIRE(overlap.size() == 3);
  CHECK(overlap[1].value() == vec({2, 3, 4}));
  CHECK(overlap[2].value() == vec({3, 4, 5}));

  CHECK_THROWS_AS(extract_slices(tape.constant(vec({1, 2, 3, 4})), 2, 2, 3), ShapeError);
}

TEST_CASE("fuse_pair is a bilinear outer product") {
  nn::Tape tape;
  CHECK(fuse_pair(tape.constant(vec({1, 2})), tape.constant(vec({3, 4}))).value() == vec({3, 4, 6, 8}));
  for (double v : fuse_pair(tape.constant(vec({1, 2, 3})), tape.constant(vec({0, 0}))).value().data()) CHECK(v == 0.0);

  std::mt19937_64 rng(22);
  const nn::Tensor c = random_tensor({4}, rng), g = random_tensor({3}, rng), c2 = random_tensor({4}, rng);
  nn::Tensor scaled = c;
  for (double& v : scaled.data()) v *= 2.5;
  const nn::Tensor base = fuse_pair(tape.constant(c), tape.constant(g)).value();
  const nn::Tensor big = fuse_pair(tape.constant(scaled), tape.constant(g)).value();
  for (std::size_t i = 0; i < base.size(); ++i) CHECK(big[i] == doctest::Approx(2.5 * base[i]).epsilon(1e-14));

  // Additivity in the first argument.
  nn::Tensor sum = c;
  for (std::size_t i = 0; i < 4; ++i) sum[i] += c2[i];
  const nn::Tensor lhs = fuse_pair(tape.constant(sum), tape.constant(g)).value();
  const nn::Tensor other = fuse_pair(tape.constant(c2), tape.constant(g)).value();
  for (std::size_t i = 0; i < lhs.size(); ++i) CHECK(lhs[i] == doctest::Approx(base[i] + other[i]).epsilon(1e-13));
}

TEST_CASE("slice attention with zero parameters is a plain mean") {
  std::mt19937_64 rng(23);
  const std::size_t d = 6, n = 4;
  nn::Tape tape;
  std::vector<nn::Tensor> raw;
  for (std::size_t i = 0; i < n; ++i) raw.push_back(random_tensor({d}, rng));
  const auto slices = constants(tape, raw);
  const SliceAttention att = slice_attention(slices, tape.constant(nn::Tensor({d, d})), tape.constant(nn::Tensor({d})),
                                             tape.constant(nn::Tensor({d})));
  for (double a : att.weights.value().data()) CHECK(a == 0.25);
  const nn::Tensor mean = nn::mean_of(slices).value();
  for (std::size_t k = 0; k < d; ++k) CHECK(att.fused.value()[k] == doctest::Approx(mean[k]).epsilon(1e-15));
}

TEST_CASE("singleton slice attention returns the slice") {
  std::mt19937_64 rng(24);
  nn::Tape tape;
  const nn::Tensor only = random_tensor({5}, rng);
  const SliceAttention att = slice_attention({tape.constant(only)}, tape.constant(random_tensor({5, 5}, rng)),
                                             tape.constant(random_tensor({5}, rng)), tape.constant(random_tensor({5}, rng)));
  CHECK(att.weights.value() == vec({1.0}));
  CHECK(att.fused.value() == only);
}

TEST_CASE("slice attention weights form a distribution over random inputs") {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 8, n = 5;
    nn::Tape tape;
    std::vector<nn::Tensor> raw;
    for (std::size_t i = 0; i < n; ++i) raw.push_back(random_tensor({d}, rng, -3, 3));
    const SliceAttention att =
        slice_attention(constants(tape, raw), tape.constant(random_tensor({d, d}, rng, -2, 2)),
                        tape.constant(random_tensor({d}, rng)), tape.constant(random_tensor({d}, rng, -2, 2)));
    double total = 0.0;
    for (double a : att.weights.value().data()) {
      CHECK(a >= 0.0);
      total += a;
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
    for (std::size_t k = 0; k < d; ++k) {
      double lo = raw[0][k], hi = raw[0][k];
      for (const auto& r : raw) lo = std::min(lo, r[k]), hi = std::max(hi, r[k]);
      CHECK(att.fused.value()[k] >= lo - 1e-12);
      CHECK(att.fused.value()[k] <= hi + 1e-12);
    }
  }
  nn::Tape tape;
  CHECK_THROWS_AS(slice_attention({tape.constant(nn::Tensor({3}))}, tape.constant(nn::Tensor({4, 4})),
                                  tape.constant(nn::Tensor({4})), tape.constant(nn::Tensor({4}))),
                  ShapeError);
}

TEST_CASE("fuse_character variants") {
  const WindowSpec spec{4, 2, 2, 2, 1, 1};
  REQUIRE(validate_window(spec) == 2);
  std::mt19937_64 rng(26);
  const nn::Tensor c = random_tensor({4}, rng), g = random_tensor({2}, rng);

  SUBCASE("concat ignores the window and stacks the inputs") {
    Fusion f(spec, FusionVariant::concat, FusionOutput::augment, rng);
    nn::Tape tape;
    const nn::Tensor out = f.fuse_character(tape, tape.constant(c), tape.constant(g)).value();
    CHECK(f.output_dim() == 6);
    CHECK(out == vec({c[0], c[1], c[2], c[3], g[0], g[1]}));
    CHECK(f.parameters().empty());
  }
  SUBCASE("augmented output is [c ; g ; f]") {
    Fusion f(spec, FusionVariant::avg_pool, FusionOutput::augment, rng);
    nn::Tape tape;
    const nn::Tensor out = f.fuse_character(tape, tape.constant(c), tape.constant(g)).value();
    CHECK(f.output_dim() == 4 + 2 + 2);
    REQUIRE(out.size() == 8);
    CHECK(out[0] == c[0]);
    CHECK(out[5] == g[1]);
    // f = mean of [c0,c1]*g0 and [c2,c3]*g1.
    CHECK(out[6] == doctest::Approx((c[0] * g[0] + c[2] * g[1]) / 2));
    CHECK(out[7] == doctest::Approx((c[1] * g[0] + c[3] * g[1]) / 2));

    Fusion only(spec, FusionVariant::avg_pool, FusionOutput::fused_only, rng);
    CHECK(only.output_dim() == 2);
  }
}

TEST_CASE("zero-parameter slice attention is bit-equal to average pooling") {
  const WindowSpec spec;
  std::mt19937_64 rng(27);
  Fusion att(spec, FusionVariant::slice_attention, FusionOutput::augment, rng);
  Fusion avg(spec, FusionVariant::avg_pool, FusionOutput::augment, rng);
  for (nn::Parameter* p : att.parameters()) p->value.fill(0.0);
  for (int trial = 0; trial < 10; ++trial) {
    const nn::Tensor c = random_tensor({spec.char_dim}, rng), g = random_tensor({spec.glyph_dim}, rng);
    nn::Tape tape;
    CHECK(att.fuse_character(tape, tape.constant(c), tape.constant(g)).value() ==
          avg.fuse_character(tape, tape.constant(c), tape.constant(g)).value());
  }
}

TEST_CASE("max pooling dominates average pooling on nonnegative slices") {
  const WindowSpec spec;
  std::mt19937_64 rng(28);
  Fusion mx(spec, FusionVariant::max_pool, FusionOutput::fused_only, rng);
  Fusion avg(spec, FusionVariant::avg_pool, FusionOutput::fused_only, rng);
  for (int trial = 0; trial < 10; ++trial) {
    nn::Tape tape;
    nn::Var c = nn::sigmoid(tape.constant(random_tensor({spec.char_dim}, rng, -4, 4)));
    nn::Var g = nn::sigmoid(tape.constant(random_tensor({spec.glyph_dim}, rng, -4, 4)));
    const nn::Tensor a = mx.fuse_character(tape, c, g).value();
    const nn::Tensor b = avg.fuse_character(tape, c, g).value();
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] >= b[k]);
  }
}

TEST_CASE("variant names round trip") {
  for (auto v : {FusionVariant::slice_attention, FusionVariant::avg_pool, FusionVariant::max_pool, FusionVariant::concat})
    CHECK(parse_fusion_variant(to_string(v)) == v);
  CHECK(parse_fusion_output(to_string(FusionOutput::fused_only)) == FusionOutput::fused_only);
  CHECK_THROWS(parse_fusion_variant("attention"));
}
