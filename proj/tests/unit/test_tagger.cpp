#include <cmath>

#include <doctest.h>

#include "fgn/errors.hpp"
#include "fgn/nn/grad_check.hpp"
#include "fgn/nn/ops.hpp"
#include "fgn/tagger/bilstm.hpp"
#include "fgn/tagger/crf.hpp"
#include "fgn/tagger/crf_oracle.hpp"
#include "fgn/tagger/labels.hpp"
#include "test_util.hpp"

using namespace fgn;
using namespace fgn::tagger;
using fgn::test::random_tensor;

namespace {

struct Instance {
  nn::Tensor emissions, transitions, start;
};

Instance random_instance(std::size_t tau, std::size_t labels, std::mt19937_64& rng) {
  return {random_tensor({tau, labels}, rng, -2, 2), random_tensor({labels, labels}, rng, -2, 2),
          random_tensor({labels}, rng, -2, 2)};
}

std::vector<std::size_t> random_labels(std::size_t tau, std::size_t labels, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, labels - 1);
  std::vector<std::size_t> y(tau);
  for (auto& v : y) v = pick(rng);
  return y;
}

}  // namespace

TEST_CASE("label scheme layout") {
  LabelScheme scheme({"PER", "LOC", "PER"});
  CHECK(scheme.entity_types() == std::vector<std::string>{"LOC", "PER"});
  CHECK(scheme.size() == 9);
  CHECK(scheme.name(0) == "O");
  CHECK(scheme.name(1) == "B-LOC");
  CHECK(scheme.name(8) == "S-PER");
  CHECK(scheme.index_of("E-PER") == 7u);
  CHECK_FALSE(scheme.index_of("B-ORG").has_value());
  CHECK_FALSE(scheme.index_of("X-PER").has_value());
  for (std::size_t l = 0; l < scheme.size(); ++l) CHECK(scheme.index_of(scheme.name(l)) == l);

  CHECK(split_label("O") == std::make_pair(Prefix::O, std::string()));
  CHECK(split_label("M-GPE") == std::make_pair(Prefix::M, std::string("GPE")));
  CHECK_FALSE(split_label("B").has_value());
  CHECK_FALSE(split_label("BPER").has_value());
  CHECK_FALSE(split_label("Q-PER").has_value());
}

TEST_CASE("BMES transition validity") {
  LabelScheme scheme({"LOC", "PER"});
  const auto id = [&](const char* n) { return *scheme.index_of(n); };
  CHECK(scheme.valid_transition(id("B-PER"), id("M-PER")));
  CHECK(scheme.valid_transition(id("B-PER"), id("E-PER")));
  CHECK_FALSE(scheme.valid_transition(id("B-PER"), id("E-LOC")));
  CHECK_FALSE(scheme.valid_transition(id("B-PER"), id("O")));
  CHECK(scheme.valid_transition(id("M-PER"), id("M-PER")));
  CHECK(scheme.valid_transition(id("E-PER"), id("B-LOC")));
  CHECK(scheme.valid_transition(id("S-LOC"), id("O")));
  CHECK(scheme.valid_transition(id("O"), id("S-PER")));
  CHECK_FALSE(scheme.valid_transition(id("O"), id("M-PER")));
  CHECK_FALSE(scheme.valid_transition(id("E-LOC"), id("E-LOC")));
  CHECK(scheme.valid_start(id("B-LOC")));
  CHECK_FALSE(scheme.valid_start(id("M-LOC")));
  CHECK(scheme.valid_end(id("E-LOC")));
  CHECK_FALSE(scheme.valid_end(id("B-LOC")));
}

TEST_CASE("bilstm encoder") {
  std::mt19937_64 rng(31);
  const std::size_t in = 5, hidden = 4;
  std::vector<nn::Tensor> xs;
  for (int i = 0; i < 3; ++i) xs.push_back(random_tensor({in}, rng));

  SUBCASE("zero parameters emit zeros") {
    nn::LstmParams fwd("f", in, hidden, rng), bwd("b", in, hidden, rng);
    for (nn::Parameter* p : {&fwd.weight, &fwd.bias, &bwd.weight, &bwd.bias}) p->value.fill(0.0);
    nn::Tape tape;
    std::vector<nn::Var> inputs;
    for (const auto& x : xs) inputs.push_back(tape.constant(x));
    const auto h = bilstm_encode(inputs, TaggerVariant::bilstm, {tape.parameter(fwd.weight), tape.parameter(fwd.bias)},
                                 {tape.parameter(bwd.weight), tape.parameter(bwd.bias)});
    REQUIRE(h.size() == 3);
    for (const auto& v : h)
      for (double e : v.value().data()) CHECK(e == 0.0);
  }
  SUBCASE("none passes inputs through") {
    BiLstm tagger(in, hidden, TaggerVariant::none, rng);
    nn::Tape tape;
    std::vector<nn::Var> inputs;
    for (const auto& x : xs) inputs.push_back(tape.constant(x));
    const auto h = tagger.encode(tape, inputs);
    for (std::size_t t = 0; t < xs.size(); ++t) CHECK(h[t].value() == xs[t]);
    CHECK(tagger.output_dim() == in);
    CHECK(tagger.parameters().empty());
  }
  SUBCASE("summed directions keep the hidden size") {
    for (auto variant : {TaggerVariant::bilstm, TaggerVariant::lstm}) {
      BiLstm tagger(in, hidden, variant, rng);
      nn::Tape tape;
      std::vector<nn::Var> inputs;
      for (const auto& x : xs) inputs.push_back(tape.constant(x));
      for (const auto& h : tagger.encode(tape, inputs)) CHECK(h.size() == hidden);
      CHECK(tagger.output_dim() == hidden);
    }
  }
  SUBCASE("palindromic input with tied directions gives a palindromic output") {
    nn::LstmParams cell("c", in, hidden, rng);
    nn::Tape tape;
    std::vector<nn::Var> inputs;
    for (const auto& x : {xs[0], xs[1], xs[2], xs[1], xs[0]}) inputs.push_back(tape.constant(x));
    const LstmVars tied{tape.parameter(cell.weight), tape.parameter(cell.bias)};
    const auto h = bilstm_encode(inputs, TaggerVariant::bilstm, tied, tied);
    for (std::size_t t = 0; t < h.size(); ++t)
      for (std::size_t k = 0; k < hidden; ++k)
        CHECK(h[t].value()[k] == doctest::Approx(h[h.size() - 1 - t].value()[k]).epsilon(1e-14));
  }
  SUBCASE("forward-only output at t ignores later inputs") {
    BiLstm tagger(in, hidden, TaggerVariant::lstm, rng);
    nn::Tape tape;
    std::vector<nn::Var> a{tape.constant(xs[0]), tape.constant(xs[1])};
    std::vector<nn::Var> b{tape.constant(xs[0]), tape.constant(xs[2])};
    CHECK(tagger.encode(tape, a)[0].value() == tagger.encode(tape, b)[0].value());
  }
  nn::Tape tape;
  BiLstm tagger(in, hidden, TaggerVariant::bilstm, rng);
  CHECK_THROWS_AS(tagger.encode(tape, {}), ArgumentError);
}

TEST_CASE("crf log-likelihood worked examples") {
  const nn::Tensor emissions({1, 2}, {1, 0});
  const nn::Tensor transitions({2, 2});
  const nn::Tensor start({2});
  const std::vector<std::size_t> y{0};
  const double expected = 1.0 - std::log(std::exp(1.0) + 1.0);
  CHECK(crf_log_likelihood(emissions, transitions, start, y) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(expected == doctest::Approx(-0.3133).epsilon(1e-4));

  // Uniform scores: every one of L^tau sequences has the same probability.
  for (std::size_t tau : {1u, 3u}) {
    const nn::Tensor e({tau, 4}), t({4, 4}), s({4});
    std::vector<std::size_t> labels(tau, 3);
    CHECK(crf_log_likelihood(e, t, s, labels) == doctest::Approx(-double(tau) * std::log(4.0)).epsilon(1e-14));
  }

  CHECK_THROWS_AS(crf_log_likelihood(emissions, transitions, start, std::vector<std::size_t>{0, 1}), ArgumentError);
  CHECK_THROWS_AS(crf_log_likelihood(emissions, transitions, start, std::vector<std::size_t>{2}), ArgumentError);
}

TEST_CASE("crf dynamic programs match exhaustive enumeration") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 40; ++trial) {
    const Instance in = random_instance(3, 3, rng);
    // Score every one of the 27 sequences independently of both implementations.
    double z_max = -1e300;
    std::vector<double> scores;
    for (std::size_t code = 0; code < 27; ++code) {
      const std::size_t y[3] = {code / 9, (code / 3) % 3, code % 3};
      double s = in.start[y[0]];
      for (std::size_t t = 0; t < 3; ++t) s += in.emissions[t * 3 + y[t]];
      for (std::size_t t = 1; t < 3; ++t) s += in.transitions[y[t - 1] * 3 + y[t]];
      scores.push_back(s);
      z_max = std::max(z_max, s);
    }
    double z = 0.0;
    for (double s : scores) z += std::exp(s - z_max);
    const double log_z = z_max + std::log(z);
    CHECK(std::abs(log_partition(in.emissions, in.transitions, in.start) - log_z) < 1e-10);

    const auto y = random_labels(3, 3, rng);
    const double ll = crf_log_likelihood(in.emissions, in.transitions, in.start, y);
    CHECK(std::abs(ll - (scores[y[0] * 9 + y[1] * 3 + y[2]] - log_z)) < 1e-10);
    CHECK(std::abs(ll - oracle::brute_force_loglik(in.emissions, in.transitions, in.start, y)) < 1e-10);
    CHECK(ll <= 0.0);

    const auto best = viterbi_decode(in.emissions, in.transitions, in.start);
    CHECK(std::abs(sequence_score(in.emissions, in.transitions, in.start, best) - z_max) < 1e-12);
  }
}

TEST_CASE("viterbi decoding") {
  SUBCASE("ties resolve to label zero") {
    const nn::Tensor e({4, 3}), t({3, 3}), s({3});
    CHECK(viterbi_decode(e, t, s) == std::vector<std::size_t>(4, 0));
  }
  SUBCASE("single position is the argmax of emission plus start") {
    const nn::Tensor e({1, 3}, {0.5, 2.0, 1.0});
    const nn::Tensor s = nn::Tensor::vector({1.0, -1.0, 0.6});
    CHECK(viterbi_decode(e, nn::Tensor({3, 3}), s) == std::vector<std::size_t>{2});
  }
  SUBCASE("two positions, two labels, all four paths") {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 50; ++trial) {
      const Instance in = random_instance(2, 2, rng);
      std::vector<std::size_t> best;
      double best_score = -1e300;
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b) {
          const double s = in.start[a] + in.emissions[a] + in.emissions[2 + b] + in.transitions[a * 2 + b];
          if (s > best_score) best_score = s, best = {a, b};
        }
      CHECK(viterbi_decode(in.emissions, in.transitions, in.start) == best);
    }
  }
}

TEST_CASE("oracle normalization and guard") {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 20; ++trial) {
    const Instance in = random_instance(2, 2, rng);
    CHECK(std::abs(oracle::brute_force_total_probability(in.emissions, in.transitions, in.start) - 1.0) < 1e-12);
  }
  const Instance big = random_instance(9, 4, rng);  // 4^9 = 262144 sequences
  CHECK_THROWS_AS(oracle::brute_force_log_partition(big.emissions, big.transitions, big.start), ArgumentError);
  CHECK_THROWS_AS(oracle::brute_force_best(big.emissions, big.transitions, big.start), ArgumentError);
  const Instance edge = random_instance(8, 4, rng);  // 65536, inside the guard
  CHECK(std::abs(oracle::brute_force_log_partition(edge.emissions, edge.transitions, edge.start) -
                 log_partition(edge.emissions, edge.transitions, edge.start)) < 1e-10);
}

TEST_CASE("nll loss") {
  nn::Tape tape;
  nn::Var zeros = tape.constant(nn::Tensor({2, 3}));
  nn::Var trans = tape.constant(nn::Tensor({3, 3}));
  nn::Var start = tape.constant(nn::Tensor({3}));
  const SentenceScores one{zeros, {0, 2}};
  CHECK(nll_loss({one}, trans, start).value()[0] == doctest::Approx(2.0 * std::log(3.0)).epsilon(1e-14));
  CHECK(2.0 * std::log(3.0) == doctest::Approx(2.1972).epsilon(1e-4));

  std::mt19937_64 rng(35);
  nn::Var e = tape.constant(random_tensor({3, 3}, rng));
  nn::Var t = tape.constant(random_tensor({3, 3}, rng));
  const SentenceScores s{e, {1, 0, 2}};
  CHECK(nll_loss({s, s}, t, start).value()[0] == 2.0 * nll_loss({s}, t, start).value()[0]);
  CHECK_THROWS_AS(nll_loss({}, t, start), ArgumentError);
}

TEST_CASE("shifting one position's emissions changes nothing observable") {
  std::mt19937_64 rng(36);
  const std::size_t tau = 4, labels = 3;
  nn::Parameter emis("e", random_tensor({tau, labels}, rng));
  nn::Parameter trans("t", random_tensor({labels, labels}, rng));
  nn::Parameter start("s", random_tensor({labels}, rng));
  const std::vector<std::size_t> y{2, 0, 1, 1};

  auto run = [&] {
    for (nn::Parameter* p : {&emis, &trans, &start}) p->grad = nn::Tensor(p->value.shape());
    nn::Tape tape;
    nn::Var ll = crf_log_likelihood(tape.parameter(emis), tape.parameter(trans), tape.parameter(start), y);
    tape.backward(ll);
    return std::make_pair(ll.value()[0], emis.grad);
  };
  const auto [ll0, g0] = run();
  const auto path0 = viterbi_decode(emis.value, trans.value, start.value);
  for (std::size_t l = 0; l < labels; ++l) emis.value[2 * labels + l] += 3.75;
  const auto [ll1, g1] = run();
  CHECK(ll1 == doctest::Approx(ll0).epsilon(1e-12));
  CHECK(viterbi_decode(emis.value, trans.value, start.value) == path0);
  for (std::size_t i = 0; i < g0.size(); ++i) CHECK(g1[i] == doctest::Approx(g0[i]).epsilon(1e-10));
}

TEST_CASE("crf gradient through the bilstm") {
  std::mt19937_64 rng(37);
  const std::size_t in = 3, hidden = 3, labels = 5;
  BiLstm tagger(in, hidden, TaggerVariant::bilstm, rng);
  CrfParams crf(labels, hidden, rng);
  std::vector<nn::Tensor> xs;
  for (int i = 0; i < 3; ++i) xs.push_back(random_tensor({in}, rng));
  std::vector<nn::Parameter*> params = tagger.parameters();
  for (nn::Parameter* p : crf.parameters()) params.push_back(p);
  for (nn::Parameter* p : params) {
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (double& v : p->value.data()) v = u(rng);
  }
  auto report = nn::grad_check(
      [&](nn::Tape& tape) {
        std::vector<nn::Var> inputs;
        for (const auto& x : xs) inputs.push_back(tape.constant(x));
        const auto h = tagger.encode(tape, inputs);
        const SentenceScores s{emission_scores(h, tape.parameter(crf.emission)), {1, 2, 0}};
        return nll_loss({s}, tape.parameter(crf.transitions), tape.parameter(crf.start));
      },
      params);
  CHECK(report.passed);
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("hard BMES mask keeps decoding well formed") {
  LabelScheme scheme({"LOC", "PER"});
  const TransitionMask mask = bmes_mask(scheme);
  std::mt19937_64 rng(38);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t L = scheme.size();
    Instance in = random_instance(6, L, rng);
    for (std::size_t i = 0; i < L * L; ++i) in.transitions[i] += mask.transitions[i];
    for (std::size_t i = 0; i < L; ++i) in.start[i] += mask.start[i];
    const auto path = viterbi_decode(in.emissions, in.transitions, in.start);
    CHECK(scheme.valid_start(path[0]));
    for (std::size_t t = 1; t < path.size(); ++t) CHECK(scheme.valid_transition(path[t - 1], path[t]));
    const auto gold = std::vector<std::size_t>{0, 1, 3, 0, 8, 0};
    CHECK(std::isfinite(crf_log_likelihood(in.emissions, in.transitions, in.start, gold)));
  }
}
