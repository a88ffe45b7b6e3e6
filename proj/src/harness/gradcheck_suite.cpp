#include "fgn/harness/gradcheck_suite.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <functional>
#include <iomanip>
#include <random>

#include "fgn/cgs/cgs_cnn.hpp"
#include "fgn/errors.hpp"
#include "fgn/fusion/fusion.hpp"
#include "fgn/glyph/atlas.hpp"
#include "fgn/harness/model.hpp"
#include "fgn/tagger/bilstm.hpp"
#include "fgn/tagger/crf.hpp"

namespace fgn::harness {
namespace {

using nn::Parameter;
using nn::Shape;
using nn::Tape;
using nn::Tensor;
using nn::Var;

// Loss inputs for the op-level checks. Parameters live in a deque so the
// pointers handed to grad_check stay valid.
class Inputs {
 public:
  explicit Inputs(std::uint64_t seed) : rng_(seed) {}

  Parameter& add(const std::string& name, Shape shape) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : t.data()) v = u(rng_);
    return params_.emplace_back(name, std::move(t));
  }

  std::vector<Parameter*> all() {
    std::vector<Parameter*> out;
    for (Parameter& p : params_) out.push_back(&p);
    return out;
  }

 private:
  std::mt19937_64 rng_;
  std::deque<Parameter> params_;
};

// Scalar loss that weighs every output element differently, so a gradient
// routed to the wrong element cannot cancel out.
Var probe(const Var& y) {
  std::mt19937_64 rng(0x9e3779b9ULL + y.size());
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor w({y.size()});
  for (double& v : w.data()) v = u(rng);
  return nn::dot(y, y.tape().constant(std::move(w)));
}

Var probe_all(const std::vector<Var>& ys) { return probe(nn::concat(ys)); }

struct Runner {
  nn::GradCheckOptions options;
  std::vector<GradCheckCase>* out;

  void check(const std::string& module, const std::string& name, const nn::LossBuilder& build,
             const std::vector<Parameter*>& params, std::size_t coords = 0) {
    nn::GradCheckOptions o = options;
    if (coords != 0 && (o.max_coords_per_param == 0 || o.max_coords_per_param > coords)) o.max_coords_per_param = coords;
    const auto t0 = std::chrono::steady_clock::now();
    GradCheckCase c{module, name, nn::grad_check(build, params, o)};
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out->push_back(std::move(c));
  }
};

void nn_cases(Runner& run) {
  const std::string m = "nn";
  {
    Inputs in(1);
    auto& x = in.add("x", {2, 3, 5, 5});
    auto& k = in.add("k", {3, 2, 3, 3, 3});
    auto& b = in.add("b", {3});
    run.check(m, "conv3d", [&](Tape& t) { return probe(nn::conv3d(t.parameter(x), t.parameter(k), t.parameter(b))); },
              in.all());
  }
  {
    // Wide enough to take the GEMM path.
    Inputs in(2);
    auto& x = in.add("x", {2, 2, 4, 4});
    auto& k = in.add("k", {20, 2, 3, 3, 3});
    run.check(m, "conv3d_wide", [&](Tape& t) { return probe(nn::conv3d(t.parameter(x), t.parameter(k))); }, in.all());
  }
  {
    Inputs in(3);
    auto& x = in.add("x", {2, 6, 6});
    auto& k = in.add("k", {3, 2, 3, 3});
    auto& b = in.add("b", {3});
    run.check(m, "conv2d", [&](Tape& t) { return probe(nn::conv2d(t.parameter(x), t.parameter(k), t.parameter(b))); },
              in.all());
  }
  {
    Inputs in(4);
    auto& x = in.add("x", {2, 3, 4, 4});
    auto& k = in.add("k", {18, 2, 3, 3});
    auto& b = in.add("b", {18});
    run.check(
        m, "conv2d_frames",
        [&](Tape& t) { return probe(nn::conv2d_frames(t.parameter(x), t.parameter(k), t.parameter(b))); }, in.all());
  }
  {
    Inputs in(5);
    auto& x = in.add("x", {2, 6, 6});
    run.check(m, "maxpool2d", [&](Tape& t) { return probe(nn::maxpool2d(t.parameter(x), 2, 2)); }, in.all());
    run.check(m, "maxpool2d_overlap", [&](Tape& t) { return probe(nn::maxpool2d(t.parameter(x), 2, 1)); }, in.all());
  }
  {
    Inputs in(6);
    auto& x = in.add("x", {12});
    run.check(m, "pool1d_max",
              [&](Tape& t) { return probe(nn::pool1d(t.parameter(x), 4, 4, nn::PoolMode::max)); }, in.all());
    run.check(m, "pool1d_avg",
              [&](Tape& t) { return probe(nn::pool1d(t.parameter(x), 3, 2, nn::PoolMode::avg)); }, in.all());
  }
  {
    Inputs in(7);
    auto& w = in.add("w", {4, 5});
    auto& x = in.add("x", {5});
    auto& b = in.add("b", {4});
    run.check(m, "affine",
              [&](Tape& t) { return probe(nn::affine(t.parameter(x), t.parameter(w), t.parameter(b))); }, in.all());
    run.check(m, "matvec", [&](Tape& t) { return probe(nn::matvec(t.parameter(w), t.parameter(x))); },
              {&w, &x});
  }
  {
    Inputs in(8);
    auto& x = in.add("x", {6});
    auto& y = in.add("y", {6});
    auto& z = in.add("z", {4});
    run.check(m, "sigmoid", [&](Tape& t) { return probe(nn::sigmoid(t.parameter(x))); }, {&x});
    run.check(m, "tanh", [&](Tape& t) { return probe(nn::tanh(t.parameter(x))); }, {&x});
    run.check(m, "softmax", [&](Tape& t) { return probe(nn::softmax(t.parameter(x))); }, {&x});
    run.check(
        m, "dropout",
        [&](Tape& t) {
          std::mt19937_64 mask_rng(11);
          return probe(nn::dropout(t.parameter(x), 0.3, true, mask_rng));
        },
        {&x});
    run.check(m, "add", [&](Tape& t) { return probe(nn::add(t.parameter(x), t.parameter(y))); }, {&x, &y});
    run.check(m, "mul", [&](Tape& t) { return probe(nn::mul(t.parameter(x), t.parameter(y))); }, {&x, &y});
    run.check(m, "scale", [&](Tape& t) { return probe(nn::scale(t.parameter(x), -1.7)); }, {&x});
    run.check(m, "sum", [&](Tape& t) { return nn::scale(nn::sum(t.parameter(x)), 0.7); }, {&x});
    run.check(m, "dot", [&](Tape& t) { return nn::dot(t.parameter(x), t.parameter(y)); }, {&x, &y});
    run.check(m, "outer", [&](Tape& t) { return probe(nn::outer(t.parameter(x), t.parameter(z))); }, {&x, &z});
    run.check(m, "reshape", [&](Tape& t) { return probe(nn::reshape(t.parameter(x), {2, 3})); }, {&x});
    run.check(
        m, "concat", [&](Tape& t) { return probe(nn::concat({t.parameter(x), t.parameter(z), t.parameter(x)})); },
        {&x, &z});
    run.check(m, "slice", [&](Tape& t) { return probe(nn::slice(t.parameter(x), 2, 3)); }, {&x});
    run.check(m, "stack", [&](Tape& t) { return probe(nn::stack({t.parameter(x), t.parameter(y)})); }, {&x, &y});
    run.check(
        m, "weighted_sum",
        [&](Tape& t) { return probe(nn::weighted_sum(t.parameter(z), {t.parameter(x), t.parameter(y), t.parameter(x),
                                                                       t.parameter(y)})); },
        {&x, &y, &z});
    run.check(m, "mean_of", [&](Tape& t) { return probe(nn::mean_of({t.parameter(x), t.parameter(y)})); },
              {&x, &y});
    run.check(m, "max_of", [&](Tape& t) { return probe(nn::max_of({t.parameter(x), t.parameter(y)})); }, {&x, &y});
  }
  {
    Inputs in(9);
    auto& table = in.add("table", {5, 3});
    auto& volume = in.add("volume", {2, 3, 2, 2});
    run.check(m, "row", [&](Tape& t) { return probe(nn::row(t.parameter(table), 3)); }, {&table});
    run.check(m, "frame", [&](Tape& t) { return probe(nn::frame(t.parameter(volume), 1)); }, {&volume});
  }
  {
    std::mt19937_64 rng(10);
    nn::LstmParams p("lstm", 3, 4, rng);
    Inputs in(10);
    auto& x = in.add("x", {3});
    auto& h = in.add("h", {4});
    auto& c = in.add("c", {4});
    run.check(
        m, "lstm_step",
        [&](Tape& t) {
          auto s = nn::lstm_step(t.parameter(x), {t.parameter(h), t.parameter(c)}, t.parameter(p.weight),
                                 t.parameter(p.bias));
          return probe(nn::concat({s.h, s.c}));
        },
        {&x, &h, &c, &p.weight, &p.bias});
  }
}

// Three frames of the fallback glyphs: uniform noise, so pooling ties are absent.
glyph::GraphSequence sample_graphs(const glyph::GlyphAtlas& atlas) {
  return glyph::sentence_to_graphs(atlas, U"甲乙丙");
}

void cnn_cases(Runner& run) {
  const glyph::GlyphAtlas atlas(21);
  const auto graphs = sample_graphs(atlas);
  for (auto variant : {cgs::CnnVariant::cgs, cgs::CnnVariant::cgs_2d, cgs::CnnVariant::cgs_avg}) {
    std::mt19937_64 rng(22);
    cgs::CgsCnnConfig config;
    config.variant = variant;
    cgs::CgsCnn cnn(config, rng);
    run.check(
        "cnn", to_string(variant),
        [&](Tape& t) {
          std::mt19937_64 dropout_rng(23);
          return probe_all(cnn.encode(t, graphs, true, dropout_rng));
        },
        cnn.parameters(), 10);
  }
}

fusion::WindowSpec small_window() { return {8, 2, 1, cgs::kGlyphVectorDim, 16, 8}; }

void fusion_cases(Runner& run) {
  const auto spec = small_window();
  for (auto variant : {fusion::FusionVariant::slice_attention, fusion::FusionVariant::avg_pool,
                       fusion::FusionVariant::max_pool, fusion::FusionVariant::concat}) {
    std::mt19937_64 rng(31);
    fusion::Fusion f(spec, variant, fusion::FusionOutput::augment, rng);
    Inputs in(32);
    auto& c = in.add("c_v", {spec.char_dim});
    auto& g = in.add("g_v", {spec.glyph_dim});
    auto params = f.parameters();
    params.push_back(&c);
    params.push_back(&g);
    run.check(
        "fusion", to_string(variant),
        [&](Tape& t) { return probe(f.fuse_character(t, t.parameter(c), t.parameter(g))); }, params, 24);
  }
}

void tagger_cases(Runner& run) {
  Inputs in(41);
  std::vector<Parameter*> xs;
  for (int i = 0; i < 3; ++i) xs.push_back(&in.add("x" + std::to_string(i), {5}));
  auto inputs = [&](Tape& t) {
    std::vector<Var> v;
    for (Parameter* p : xs) v.push_back(t.parameter(*p));
    return v;
  };
  for (auto variant : {tagger::TaggerVariant::bilstm, tagger::TaggerVariant::lstm}) {
    std::mt19937_64 rng(42);
    tagger::BiLstm lstm(5, 4, variant, rng);
    auto params = lstm.parameters();
    params.insert(params.end(), xs.begin(), xs.end());
    run.check(
        "tagger", to_string(variant), [&](Tape& t) { return probe_all(lstm.encode(t, inputs(t))); }, params, 24);
  }

  const tagger::LabelScheme scheme({"LOC", "PER"});
  std::mt19937_64 rng(43);
  tagger::CrfParams crf(scheme.size(), 5, rng);
  Inputs e(44);
  auto& emissions = e.add("emissions", {3, scheme.size()});
  const std::vector<std::size_t> gold{scheme.label(tagger::Prefix::B, 1), scheme.label(tagger::Prefix::E, 1), 0};
  run.check(
      "tagger", "crf_log_likelihood",
      [&](Tape& t) {
        return tagger::crf_log_likelihood(t.parameter(emissions), t.parameter(crf.transitions), t.parameter(crf.start),
                                          gold);
      },
      {&emissions, &crf.transitions, &crf.start});

  auto crf_params = crf.parameters();
  crf_params.insert(crf_params.end(), xs.begin(), xs.end());
  run.check(
      "tagger", "crf_nll",
      [&](Tape& t) {
        tagger::SentenceScores s{tagger::emission_scores(inputs(t), t.parameter(crf.emission)), gold};
        return tagger::nll_loss({s}, t.parameter(crf.transitions), t.parameter(crf.start));
      },
      crf_params);
}

void model_cases(Runner& run) {
  RunConfig config;
  config.embedding.dim = 8;
  config.char_window = 2;
  config.char_stride = 1;
  config.glyph_window = 16;
  config.glyph_stride = 8;
  config.hidden_dim = 8;
  config.seed = 51;
  const tagger::LabelScheme scheme({"LOC", "PER"});
  const std::size_t b_per = scheme.label(tagger::Prefix::B, 1), e_per = scheme.label(tagger::Prefix::E, 1);
  auto atlas = std::make_shared<glyph::GlyphAtlas>(52);
  for (const std::u32string& chars : {std::u32string(U"甲乙"), std::u32string(U"甲乙丙")}) {
    TaggedSentence sentence;
    sentence.chars = chars;
    sentence.labels = {b_per, e_per};
    sentence.labels.resize(chars.size(), 0);
    FgnModel model(config, scheme, {chars.begin(), chars.end()}, atlas);
    run.check(
        "model", "fgn_loss_" + std::to_string(chars.size()) + "_chars",
        [&](Tape& t) {
          std::mt19937_64 dropout_rng(53);
          return model.loss(t, {&sentence}, true, dropout_rng);
        },
        model.parameters(), 4);
  }
}

}  // namespace

const std::vector<std::string>& gradcheck_modules() {
  static const std::vector<std::string> names{"nn", "cnn", "fusion", "tagger", "model"};
  return names;
}

std::vector<GradCheckCase> run_gradcheck(const std::string& module, const nn::GradCheckOptions& options) {
  const auto& names = gradcheck_modules();
  if (module != "all" && std::find(names.begin(), names.end(), module) == names.end())
    throw ArgumentError("unknown gradcheck module '" + module + "' (expected all, nn, cnn, fusion, tagger or model)");
  std::vector<GradCheckCase> cases;
  Runner run{options, &cases};
  const auto want = [&](const char* name) { return module == "all" || module == name; };
  if (want("nn")) nn_cases(run);
  if (want("cnn")) cnn_cases(run);
  if (want("fusion")) fusion_cases(run);
  if (want("tagger")) tagger_cases(run);
  if (want("model")) model_cases(run);
  return cases;
}

bool all_passed(const std::vector<GradCheckCase>& cases) {
  return !cases.empty() && std::all_of(cases.begin(), cases.end(), [](const auto& c) { return c.report.passed; });
}

void write_gradcheck_report(std::ostream& out, const std::vector<GradCheckCase>& cases) {
  double worst = 0.0, seconds = 0.0;
  std::size_t failed = 0;
  for (const auto& c : cases) {
    const auto& r = c.report;
    out << (r.passed ? "ok   " : "FAIL ") << std::left << std::setw(8) << c.module << std::setw(22) << c.name
        << std::right << " max_rel " << std::scientific << std::setprecision(2) << r.max_rel_error << std::defaultfloat
        << "  checked " << r.checked << "  ties " << r.skipped_ties;
    if (!r.passed && r.checked > 0)
      out << "  worst " << r.worst.param << "[" << r.worst.index << "] analytic " << r.worst.analytic << " numeric "
          << r.worst.numeric;
    out << "\n";
    worst = std::max(worst, r.max_rel_error);
    seconds += c.seconds;
    if (!r.passed) ++failed;
  }
  out << cases.size() - failed << "/" << cases.size() << " cases passed, max relative error " << std::scientific
      << std::setprecision(2) << worst << std::defaultfloat << ", " << std::fixed << std::setprecision(1) << seconds
      << " s\n";
  out.unsetf(std::ios::floatfield);
}

}  // namespace fgn::harness
