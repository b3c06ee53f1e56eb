#include "topicshift/ablation.hpp"

#include <map>
#include <sstream>

namespace topicshift {

using nlohmann::json;

std::vector<AblationRow> ablation_grid() {
  std::vector<AblationRow> rows;
  auto add = [&](std::string group, std::string name, std::set<Granularity> enabled, bool classifier) {
    AblationRow row;
    row.group = std::move(group);
    row.name = std::move(name);
    row.spec.enabled = std::move(enabled);
    row.spec.use_classifier = classifier;
    row.fusion = default_fusion(row.spec);
    rows.push_back(std::move(row));
  };
  const std::set<Granularity> all(std::begin(kAllGranularities), std::end(kAllGranularities));
  add("module", "gen", all, false);
  add("module", "cla", {}, true);
  add("module", "gen+cls", all, true);
  const Granularity L = Granularity::Label, P = Granularity::Topic, T = Granularity::Turn;
  const std::vector<std::set<Granularity>> subsets{{L}, {P}, {T}, {L, P}, {L, T}, {P, T}, {L, P, T}};
  for (const auto& enabled : subsets) {
    AblationSpec spec;
    spec.enabled = enabled;
    add("granularity", spec.name(), enabled, true);
  }
  return rows;
}

json AblationTable::to_json() const {
  json out = json::array();
  for (const auto& row : rows) {
    json enabled = json::array();
    for (auto g : row.spec.enabled) enabled.push_back(std::string(granularity_name(g)));
    out.push_back(json{{"group", row.group},
                       {"name", row.name},
                       {"granularities", enabled},
                       {"use_classifier", row.spec.use_classifier},
                       {"fusion", std::string(fusion_name(row.fusion))},
                       {"metrics", row.report.to_json()}});
  }
  return out;
}

std::string AblationTable::to_text() const {
  std::ostringstream out;
  for (const char* group : {"module", "granularity"}) {
    std::vector<std::pair<std::string, MetricsReport>> table;
    for (const auto& row : rows) {
      if (row.group == group) table.emplace_back(row.name, row.report);
    }
    if (table.empty()) continue;
    if (out.tellp() > 0) out << '\n';
    out << format_metrics_table(table);
  }
  return out.str();
}

AblationTable run_ablation(std::span<const DetectionExample> train_examples,
                           std::span<const DetectionExample> dev_examples,
                           std::span<const DetectionExample> test_examples,
                           const TrainingConfig& base,
                           const std::function<void(const AblationRow&)>& on_row) {
  AblationTable table;
  std::map<std::pair<std::set<Granularity>, bool>, MetricsReport> done;
  for (auto row : ablation_grid()) {
    const auto key = std::make_pair(row.spec.enabled, row.spec.use_classifier);
    auto it = done.find(key);
    if (it == done.end()) {
      TrainingConfig config = base;
      config.ablation = row.spec;
      auto model = initial_model(train_examples, config);
      const auto trained = train(model, train_examples, dev_examples, config);
      model.restore(trained.best_parameters);
      const auto& templates = TemplateSet::builtin(model.vocabulary().language());
      auto options = PredictOptions::for_ablation(row.spec);
      options.fusion = row.fusion;
      it = done.emplace(key, evaluate(model, templates, test_examples, options).report).first;
    }
    row.report = it->second;
    if (on_row) on_row(row);
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace topicshift
