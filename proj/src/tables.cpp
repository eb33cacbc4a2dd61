#include "hdrfuse/tables.hpp"

#include <cstdio>

#include "hdrfuse/metrics.hpp"

namespace hdr {

std::vector<double> ScoreTable::averages() const {
  std::vector<double> avg(columns.size(), 0.0);
  for (const auto& row : scores)
    for (std::size_t c = 0; c < columns.size(); ++c) avg[c] += row[c];
  if (!scores.empty())
    for (double& a : avg) a /= static_cast<double>(scores.size());
  return avg;
}

std::string ScoreTable::to_csv() const {
  std::string out = "image";
  for (const auto& c : columns) out += "," + c;
  out += "\n";
  auto append_row = [&](const std::string& name, const std::vector<double>& vals) {
    out += name;
    char buf[32];
    for (double v : vals) {
      std::snprintf(buf, sizeof buf, ",%.4f", v);
      out += buf;
    }
    out += "\n";
  };
  for (std::size_t r = 0; r < rows.size(); ++r) append_row(rows[r], scores[r]);
  append_row("average", averages());
  return out;
}

ScoreTable evaluate_mef_table(const std::vector<Scene>& scenes, const MefParams& params) {
  ScoreTable t;
  t.columns = {"combined", "wellexposedness", "histogram"};
  const MefVariant variants[] = {MefVariant::Combined, MefVariant::WellExposedOnly, MefVariant::HistogramOnly};
  for (const auto& s : scenes) {
    std::vector<double> row;
    for (MefVariant v : variants) {
      const MefResult r = adaptive_mef(s.exposures, params, v);
      row.push_back(mef_ssim_score(s.exposures, r.fused));
    }
    t.rows.push_back(s.name);
    t.scores.push_back(std::move(row));
  }
  return t;
}

std::vector<AttributeKind> ablation_gamma_kinds() {
  return {AttributeKind::Variance, AttributeKind::Gradient, AttributeKind::WellExposedness,
          AttributeKind::GradWell, AttributeKind::VarGrad};
}

ScoreTable evaluate_gamma_table(const std::vector<Scene>& train_set, const std::vector<Scene>& test_set,
                                const std::vector<LossConfig>& configs, const TrainConfig& tc) {
  if (train_set.empty() || test_set.empty()) throw ContractError("gamma table needs training and test scenes");
  std::vector<ExposurePair> corpus;
  for (const auto& s : train_set) corpus.push_back(s.pair());

  ScoreTable t;
  for (const auto& s : test_set) t.rows.push_back(s.name);
  t.scores.assign(test_set.size(), {});
  for (const auto& lc : configs) {
    t.columns.emplace_back(attribute_name(lc.gamma_kind));
    const auto trained = train<float>(corpus, tc, lc);
    for (std::size_t i = 0; i < test_set.size(); ++i) {
      const ExposurePair pair = test_set[i].pair();
      const Image fused = fuse_learned(trained.model, pair);
      const Image stack[] = {pair.under, pair.over};
      t.scores[i].push_back(mef_ssim_score(stack, fused));
    }
  }
  return t;
}

}  // namespace hdr
