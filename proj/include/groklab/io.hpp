#pragma once

// Artifact serialization: CSV tables, JSON manifests and run records.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "groklab/analysis.hpp"
#include "groklab/efftheory.hpp"
#include "groklab/lintheory.hpp"
#include "groklab/trainer.hpp"

namespace groklab {

/// Shortest round-trip decimal form ("nan" for NaN).
std::string format_number(double v);

/// Writes `content` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// Library version plus git describe of the source tree.
std::string_view version_string();

inline constexpr std::string_view kTrajectoryHeader = "step,t,l_eff,rqi,Z0,C_norm";
inline constexpr std::string_view kCriticalHeader = "fraction,probability,trials,seed";
inline constexpr std::string_view kMetricsHeader = "step,train_acc,val_acc,train_loss,val_loss,rqi";
inline constexpr std::string_view kTableHeader = "fraction,seed,acc,acc_pred,rqi,rqi_upper,acc_upper";
inline constexpr std::string_view kPcaHeader = "run,component,explained_ratio,entropy,effective_dim";

std::string trajectory_csv(const FlowResult& result);
/// One row per snapshot: step, then the embedding coordinates E_k[c] as "e{k}_{c}".
std::string embedding_snapshots_csv(const FlowResult& result);
std::string critical_csv(const std::vector<CriticalPoint>& points);
std::string metrics_csv(const RunRecord& record);
std::string table_csv(const std::vector<RqiAccuracyRow>& rows);

nlohmann::json to_json(const ModelConfig& config);
nlohmann::json to_json(const OptimConfig& config);
nlohmann::json to_json(const DataSplit& split);
nlohmann::json to_json(const Representation& rep);

/// Everything needed to analyze a run later (configs, split, embeddings,
/// thresholds, accuracies). Deterministic: no timing information.
nlohmann::json run_record_json(const RunRecord& record);
RunRecord run_record_from_json(const nlohmann::json& j);

}  // namespace groklab
