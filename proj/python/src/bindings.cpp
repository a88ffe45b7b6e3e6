#include <filesystem>
#include <memory>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fgn/errors.hpp"
#include "fgn/fusion/fusion.hpp"
#include "fgn/harness/entities.hpp"
#include "fgn/harness/gradcheck_suite.hpp"
#include "fgn/harness/model.hpp"
#include "fgn/harness/synthetic.hpp"
#include "fgn/harness/trainer.hpp"
#include "fgn/tagger/crf.hpp"
#include "fgn/utf8.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace fgn;

namespace {

using Matrix = std::vector<std::vector<double>>;

nn::Tensor to_matrix(const Matrix& rows) {
  if (rows.empty()) throw ArgumentError("expected a non-empty matrix");
  const std::size_t cols = rows.front().size();
  nn::Tensor t({rows.size(), cols});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw ShapeError("ragged matrix");
    std::copy(rows[r].begin(), rows[r].end(), t.data().begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
  return t;
}

struct Crf {
  nn::Tensor emissions, transitions, start;
};

Crf crf_inputs(const Matrix& emissions, const Matrix& transitions, const std::vector<double>& start) {
  return {to_matrix(emissions), to_matrix(transitions), nn::Tensor::vector(start)};
}

py::dict prf_dict(const harness::Prf& p) {
  py::dict d;
  d["precision"] = p.precision;
  d["recall"] = p.recall;
  d["f1"] = p.f1;
  return d;
}

std::string resolve(const std::optional<std::string>& flag, const std::string& from_config, const char* what) {
  const std::string path = flag.value_or(from_config);
  if (path.empty()) throw ArgumentError(std::string("no ") + what + " given");
  return path;
}

py::dict train_model(const fs::path& config_path, const fs::path& out, const std::optional<std::string>& train,
                     const std::optional<std::string>& dev, const std::optional<std::string>& atlas) {
  harness::RunConfig config = harness::RunConfig::load(config_path);
  config.data.train = resolve(train, config.data.train, "training corpus");
  config.data.dev = resolve(dev, config.data.dev, "dev corpus");
  config.data.atlas = fs::absolute(resolve(atlas, config.data.atlas, "atlas directory")).string();
  config.validate();
  harness::TrainResult result;
  {
    py::gil_scoped_release release;
    const harness::Corpus train_set = harness::load_conll(config.data.train);
    const harness::Corpus dev_set = harness::load_conll(config.data.dev, &train_set.scheme);
    result = harness::train(
        config, {&train_set, &dev_set, glyph::GlyphAtlas::load(config.data.atlas, config.atlas_fallback_seed), nullptr,
                 nullptr});
    result.model->save(out);
  }
  py::list log;
  for (const auto& m : result.log) {
    py::dict d = prf_dict(m.dev);
    d["epoch"] = m.epoch;
    d["train_loss"] = m.train_loss;
    log.append(d);
  }
  py::dict summary = prf_dict(result.best_dev);
  summary["best_epoch"] = result.best_epoch;
  summary["log"] = log;
  return summary;
}

class Model {
 public:
  Model(const fs::path& path, const std::optional<std::string>& atlas) {
    std::shared_ptr<const glyph::GlyphAtlas> glyphs;
    if (atlas) glyphs = glyph::GlyphAtlas::load(*atlas);
    model_ = harness::FgnModel::load(path, glyphs);
    if (model_->config().embedding.kind == embedding::ProviderKind::file_backed)
      throw ArgumentError("models over FGNEMB1 embeddings are only served by the command-line tool");
  }

  std::vector<std::string> predict(const std::string& text) {
    std::vector<std::string> out;
    for (std::size_t l : labels_of(text)) out.push_back(model_->scheme().name(l));
    return out;
  }

  std::vector<py::tuple> entities(const std::string& text) {
    const std::u32string chars = utf8_decode(text);
    std::vector<py::tuple> out;
    for (const auto& e : harness::decode_entities(labels_of(text), model_->scheme()))
      out.push_back(py::make_tuple(e.start, e.end, model_->scheme().entity_types()[e.type],
                                   utf8_encode(std::u32string_view(chars).substr(e.start, e.end - e.start + 1))));
    return out;
  }

  py::dict evaluate(const fs::path& conll) {
    harness::Prf p;
    {
      py::gil_scoped_release release;
      p = harness::evaluate_model(*model_, harness::load_conll(conll, &model_->scheme()));
    }
    return prf_dict(p);
  }

  std::vector<std::string> entity_types() const { return model_->scheme().entity_types(); }

 private:
  std::vector<std::size_t> labels_of(const std::string& text) {
    const std::u32string chars = utf8_decode(text);
    if (chars.empty()) throw ArgumentError("empty input text");
    py::gil_scoped_release release;
    return model_->predict(chars, 0);
  }

  std::unique_ptr<harness::FgnModel> model_;
};

}  // namespace

PYBIND11_MODULE(_fgn, m) {
  m.doc() = "Glyph-aware Chinese NER: CGS-CNN glyph encoder, sliding-window fusion, BiLSTM-CRF tagger";
  py::register_exception<Error>(m, "FgnError", PyExc_RuntimeError);

  m.def(
      "validate_window",
      [](std::size_t char_dim, std::size_t char_window, std::size_t char_stride, std::size_t glyph_dim,
         std::size_t glyph_window, std::size_t glyph_stride) {
        return fusion::validate_window({char_dim, char_window, char_stride, glyph_dim, glyph_window, glyph_stride});
      },
      py::arg("char_dim"), py::arg("char_window"), py::arg("char_stride"), py::arg("glyph_dim"),
      py::arg("glyph_window"), py::arg("glyph_stride"), "Number of slice pairs, or FgnError naming both counts.");

  m.def(
      "crf_log_likelihood",
      [](const Matrix& e, const Matrix& t, const std::vector<double>& s, const std::vector<std::size_t>& labels) {
        const Crf c = crf_inputs(e, t, s);
        return tagger::crf_log_likelihood(c.emissions, c.transitions, c.start, labels);
      },
      py::arg("emissions"), py::arg("transitions"), py::arg("start"), py::arg("labels"));
  m.def(
      "log_partition",
      [](const Matrix& e, const Matrix& t, const std::vector<double>& s) {
        const Crf c = crf_inputs(e, t, s);
        return tagger::log_partition(c.emissions, c.transitions, c.start);
      },
      py::arg("emissions"), py::arg("transitions"), py::arg("start"));
  m.def(
      "viterbi_decode",
      [](const Matrix& e, const Matrix& t, const std::vector<double>& s) {
        const Crf c = crf_inputs(e, t, s);
        return tagger::viterbi_decode(c.emissions, c.transitions, c.start);
      },
      py::arg("emissions"), py::arg("transitions"), py::arg("start"));

  m.def(
      "decode_entities",
      [](const std::vector<std::string>& labels) {
        std::vector<std::string> types;
        for (const auto& l : labels) {
          const auto parts = tagger::split_label(l);
          if (!parts) throw ArgumentError("label '" + l + "' is not O or {B,M,E,S}-<type>");
          if (parts->first != tagger::Prefix::O) types.push_back(parts->second);
        }
        const tagger::LabelScheme scheme(types);
        std::vector<std::size_t> ids;
        for (const auto& l : labels) ids.push_back(*scheme.index_of(l));
        std::vector<py::tuple> out;
        for (const auto& e : harness::decode_entities(ids, scheme))
          out.push_back(py::make_tuple(e.start, e.end, scheme.entity_types()[e.type]));
        return out;
      },
      py::arg("labels"), "BMES label strings -> [(start, end, type)], inclusive ends.");

  m.def(
      "write_synthetic_corpus",
      [](const fs::path& out, std::uint64_t seed) {
        harness::SyntheticOptions options;
        options.seed = seed;
        const auto corpus = harness::make_synthetic_corpus(options);
        harness::write_synthetic_corpus(corpus, out);
        py::dict d;
        d["glyphs"] = corpus.glyphs.size();
        d["train"] = corpus.train.sentences.size();
        d["dev"] = corpus.dev.sentences.size();
        return d;
      },
      py::arg("out"), py::arg("seed") = harness::SyntheticOptions{}.seed);

  m.def(
      "gradcheck",
      [](const std::string& module) {
        std::vector<harness::GradCheckCase> cases;
        {
          py::gil_scoped_release release;
          cases = harness::run_gradcheck(module);
        }
        py::list out;
        for (const auto& c : cases) {
          py::dict d;
          d["module"] = c.module;
          d["name"] = c.name;
          d["passed"] = c.report.passed;
          d["max_rel_error"] = c.report.max_rel_error;
          d["checked"] = c.report.checked;
          d["skipped_ties"] = c.report.skipped_ties;
          out.append(d);
        }
        return out;
      },
      py::arg("module") = "all");

  m.def("train", &train_model, py::arg("config"), py::arg("out"), py::arg("train") = py::none(),
        py::arg("dev") = py::none(), py::arg("atlas") = py::none(),
        "Train from a JSON config file and write the best-dev model to `out`.");

  py::class_<Model>(m, "Model")
      .def(py::init<const fs::path&, const std::optional<std::string>&>(), py::arg("path"),
           py::arg("atlas") = py::none())
      .def("predict", &Model::predict, py::arg("text"), "One BMES label per character.")
      .def("entities", &Model::entities, py::arg("text"), "[(start, end, type, text)] with inclusive ends.")
      .def("evaluate", &Model::evaluate, py::arg("conll"))
      .def_property_readonly("entity_types", &Model::entity_types);
}
