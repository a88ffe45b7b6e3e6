#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fgn/harness/trainer.hpp"

namespace fgn::harness {

struct AblationGrid {
  std::vector<cgs::CnnVariant> cnn;
  std::vector<fusion::FusionVariant> fusion;
  std::vector<tagger::TaggerVariant> tagger;

  std::size_t size() const { return cnn.size() * fusion.size() * tagger.size(); }

  // All 3 x 4 x 3 variants.
  static AblationGrid full();
  // {"cnn": [...], "fusion": [...], "tagger": [...]}; an absent axis keeps the
  // base config's variant. Empty lists and unknown keys are ValidationErrors.
  static AblationGrid from_json(const nlohmann::json& j, const RunConfig& base);
};

struct AblationRow {
  cgs::CnnVariant cnn = cgs::CnnVariant::cgs;
  fusion::FusionVariant fusion = fusion::FusionVariant::slice_attention;
  tagger::TaggerVariant tagger = tagger::TaggerVariant::bilstm;
  bool ok = false;
  std::string error;  // set when !ok
  Prf dev;
  std::size_t best_epoch = 0;
};

RunConfig cell_config(const RunConfig& base, cgs::CnnVariant cnn, fusion::FusionVariant fusion,
                      tagger::TaggerVariant tagger);

// Trains every cell with the base seed. All cells are validated before any
// training (ValidationError names the first bad cell); a cell that fails
// during training is recorded as failed and the rest still run. Rows come back
// in grid order (cnn-major) whatever the thread count.
std::vector<AblationRow> ablate(const RunConfig& base, const AblationGrid& grid, const TrainData& data,
                                std::size_t threads = 1);

// The full grid, then one table per axis with the other two held at the base
// config: CNN structure, tagger and fusion method. Scores are percentages.
void write_ablation_report(std::ostream& out, const RunConfig& base, const std::vector<AblationRow>& rows);

}  // namespace fgn::harness
