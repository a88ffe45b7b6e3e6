#include "fgn/harness/ablation.hpp"

#include <atomic>
#include <iomanip>
#include <thread>

#include "fgn/errors.hpp"

namespace fgn::harness {
namespace {

template <typename T, typename Parse>
std::vector<T> read_axis(const nlohmann::json& j, const char* key, T base, Parse parse) {
  if (!j.contains(key)) return {base};
  const auto& list = j.at(key);
  if (!list.is_array() || list.empty())
    throw ValidationError(std::string("ablation grid: '") + key + "' must be a non-empty list");
  std::vector<T> out;
  for (const auto& v : list) {
    if (!v.is_string()) throw ValidationError(std::string("ablation grid: '") + key + "' entries must be strings");
    out.push_back(parse(v.get<std::string>()));
  }
  return out;
}

std::string cnn_label(cgs::CnnVariant v) {
  switch (v) {
    case cgs::CnnVariant::cgs: return "CGS-CNN";
    case cgs::CnnVariant::cgs_2d: return "CGS-CNN (2d)";
    case cgs::CnnVariant::cgs_avg: return "CGS-CNN (avg)";
  }
  return "?";
}

std::string tagger_label(tagger::TaggerVariant v) {
  switch (v) {
    case tagger::TaggerVariant::none: return "CRF";
    case tagger::TaggerVariant::lstm: return "LSTM-CRF";
    case tagger::TaggerVariant::bilstm: return "BiLSTM-CRF";
  }
  return "?";
}

std::string fusion_label(fusion::FusionVariant v) {
  switch (v) {
    case fusion::FusionVariant::concat: return "concat";
    case fusion::FusionVariant::avg_pool: return "avg pool";
    case fusion::FusionVariant::max_pool: return "max pool";
    case fusion::FusionVariant::slice_attention: return "FGN";
  }
  return "?";
}

void write_scores(std::ostream& out, const AblationRow& row) {
  if (!row.ok) {
    out << "failed: " << row.error << "\n";
    return;
  }
  out << std::fixed << std::setprecision(2) << std::setw(8) << 100.0 * row.dev.precision << std::setw(8)
      << 100.0 * row.dev.recall << std::setw(8) << 100.0 * row.dev.f1 << "\n";
  out.unsetf(std::ios::floatfield);
}

// One axis varies, the others sit at the base config. Missing cells are skipped.
template <typename Match, typename Label>
void write_axis_table(std::ostream& out, const std::string& title, const std::vector<AblationRow>& rows, Match match,
                      Label label) {
  out << "\n" << std::left << std::setw(16) << title << std::right << std::setw(8) << "P" << std::setw(8) << "R"
      << std::setw(8) << "F1" << "\n";
  for (const AblationRow& row : rows) {
    if (!match(row)) continue;
    out << std::left << std::setw(16) << label(row) << std::right;
    write_scores(out, row);
  }
}

}  // namespace

AblationGrid AblationGrid::full() {
  return {{cgs::CnnVariant::cgs, cgs::CnnVariant::cgs_2d, cgs::CnnVariant::cgs_avg},
          {fusion::FusionVariant::slice_attention, fusion::FusionVariant::avg_pool, fusion::FusionVariant::max_pool,
           fusion::FusionVariant::concat},
          {tagger::TaggerVariant::bilstm, tagger::TaggerVariant::lstm, tagger::TaggerVariant::none}};
}

AblationGrid AblationGrid::from_json(const nlohmann::json& j, const RunConfig& base) {
  if (!j.is_object()) throw ValidationError("ablation grid must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (key != "cnn" && key != "fusion" && key != "tagger")
      throw ValidationError("ablation grid: unknown key '" + key + "'");
  AblationGrid grid;
  grid.cnn = read_axis(j, "cnn", base.cnn.variant, cgs::parse_cnn_variant);
  grid.fusion = read_axis(j, "fusion", base.fusion_variant, fusion::parse_fusion_variant);
  grid.tagger = read_axis(j, "tagger", base.tagger_variant, tagger::parse_tagger_variant);
  return grid;
}

RunConfig cell_config(const RunConfig& base, cgs::CnnVariant cnn, fusion::FusionVariant fusion,
                      tagger::TaggerVariant tagger) {
  RunConfig c = base;
  c.cnn.variant = cnn;
  c.fusion_variant = fusion;
  c.tagger_variant = tagger;
  return c;
}

std::vector<AblationRow> ablate(const RunConfig& base, const AblationGrid& grid, const TrainData& data,
                                std::size_t threads) {
  std::vector<AblationRow> rows;
  rows.reserve(grid.size());
  for (auto cnn : grid.cnn)
    for (auto fusion : grid.fusion)
      for (auto tagger : grid.tagger) {
        AblationRow row;
        row.cnn = cnn;
        row.fusion = fusion;
        row.tagger = tagger;
        rows.push_back(row);
      }

  for (const AblationRow& row : rows) {
    try {
      cell_config(base, row.cnn, row.fusion, row.tagger).validate();
    } catch (const ValidationError& e) {
      throw ValidationError("ablation cell " + to_string(row.cnn) + "/" + to_string(row.fusion) + "/" +
                            to_string(row.tagger) + ": " + e.what());
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      AblationRow& row = rows[i];
      try {
        TrainResult r = train(cell_config(base, row.cnn, row.fusion, row.tagger), data);
        row.dev = r.best_dev;
        row.best_epoch = r.best_epoch;
        row.ok = true;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(threads, rows.size()));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  return rows;
}

void write_ablation_report(std::ostream& out, const RunConfig& base, const std::vector<AblationRow>& rows) {
  out << "ablation grid: " << rows.size() << " cells, base " << to_string(base.cnn.variant) << " / "
      << to_string(base.fusion_variant) << " / " << to_string(base.tagger_variant) << ", seed " << base.seed
      << ", " << base.epochs << " epochs\n\n";
  out << std::left << std::setw(10) << "cnn" << std::setw(17) << "fusion" << std::setw(8) << "tagger" << std::right
      << std::setw(8) << "P" << std::setw(8) << "R" << std::setw(8) << "F1" << "\n";
  for (const AblationRow& row : rows) {
    out << std::left << std::setw(10) << to_string(row.cnn) << std::setw(17) << to_string(row.fusion) << std::setw(8)
        << to_string(row.tagger) << std::right;
    write_scores(out, row);
  }

  const auto base_fusion = [&](const AblationRow& r) { return r.fusion == base.fusion_variant; };
  const auto base_cnn = [&](const AblationRow& r) { return r.cnn == base.cnn.variant; };
  const auto base_tagger = [&](const AblationRow& r) { return r.tagger == base.tagger_variant; };
  write_axis_table(
      out, "CNN-type", rows, [&](const AblationRow& r) { return base_fusion(r) && base_tagger(r); },
      [](const AblationRow& r) { return cnn_label(r.cnn); });
  write_axis_table(
      out, "tagger-type", rows, [&](const AblationRow& r) { return base_cnn(r) && base_fusion(r); },
      [](const AblationRow& r) { return tagger_label(r.tagger); });
  write_axis_table(
      out, "fusion-type", rows, [&](const AblationRow& r) { return base_cnn(r) && base_tagger(r); },
      [](const AblationRow& r) { return fusion_label(r.fusion); });
}

}  // namespace fgn::harness
