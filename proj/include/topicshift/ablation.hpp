#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "topicshift/evaluation.hpp"
#include "topicshift/training.hpp"

namespace topicshift {

struct AblationRow {
  std::string group;  // "module" or "granularity"
  std::string name;   // "gen", "cla", "gen+cls" or "+Label+Topic" style
  AblationSpec spec;
  FusionMode fusion = FusionMode::Average;
  MetricsReport report;
};

struct AblationTable {
  std::vector<AblationRow> rows;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

/// The ten configuration rows: gen, cla, gen+cls, then the seven non-empty
/// granularity subsets with the classifier on. Reports are left empty.
std::vector<AblationRow> ablation_grid();

/// Trains one seeded model per distinct configuration on `train_examples`
/// (best epoch chosen on `dev_examples`) and scores it on `test_examples`.
/// The full configuration appears in both groups and is trained once.
AblationTable run_ablation(std::span<const DetectionExample> train_examples,
                           std::span<const DetectionExample> dev_examples,
                           std::span<const DetectionExample> test_examples,
                           const TrainingConfig& base,
                           const std::function<void(const AblationRow&)>& on_row = {});

}  // namespace topicshift
