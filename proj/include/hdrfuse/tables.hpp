#pragma once

#include <string>
#include <vector>

#include "hdrfuse/classical_mef.hpp"
#include "hdrfuse/loss.hpp"
#include "hdrfuse/trainer.hpp"

namespace hdr {

/// Rows are images, columns are methods; CSV output ends with an `average` row.
struct ScoreTable {
  std::vector<std::string> columns;
  std::vector<std::string> rows;
  std::vector<std::vector<double>> scores;  // scores[row][column]

  std::vector<double> averages() const;
  /// Header "image,<columns...>", scores with four decimals.
  std::string to_csv() const;
};

/// Classical fusion with both weights, well-exposedness only, and histogram
/// only, scored with MEF-SSIM against every exposure of each scene.
ScoreTable evaluate_mef_table(const std::vector<Scene>& scenes, const MefParams& params = {});

/// Trains one model per loss configuration on `train_set` (from scratch, same
/// seed), fuses every pair of `test_set` and scores it with MEF-SSIM.
ScoreTable evaluate_gamma_table(const std::vector<Scene>& train_set, const std::vector<Scene>& test_set,
                                const std::vector<LossConfig>& configs, const TrainConfig& tc);

/// The five γ configurations compared in the ablation table.
std::vector<AttributeKind> ablation_gamma_kinds();

}  // namespace hdr
