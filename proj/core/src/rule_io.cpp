#include "cecm/rule_io.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace cecm {

RuleFile to_rule_file(const ContinuousRule& rule, int dim) {
  const std::vector<Index> active = rule.active();
  RuleFile out;
  out.dim = dim;
  out.points = Matrix(static_cast<Index>(active.size()), dim);
  out.weights = Vector(static_cast<Index>(active.size()));
  for (std::size_t i = 0; i < active.size(); ++i) {
    out.points.row(static_cast<Index>(i)) = rule.points.row(active[i]);
    out.weights(static_cast<Index>(i)) = rule.weights(active[i]);
  }
  out.sum_weights = out.weights.sum();
  out.residual_norm = rule.residual_norm;
  out.eliminations = rule.eliminations;
  return out;
}

void save_rule_json(const std::filesystem::path& path, const RuleFile& rule) {
  nlohmann::json j;
  j["dim"] = rule.dim;
  auto pts = nlohmann::json::array();
  for (Index i = 0; i < rule.points.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (int k = 0; k < rule.dim; ++k) row.push_back(rule.points(i, k));
    pts.push_back(std::move(row));
  }
  j["points"] = std::move(pts);
  auto ws = nlohmann::json::array();
  for (Index i = 0; i < rule.weights.size(); ++i) ws.push_back(rule.weights(i));
  j["weights"] = std::move(ws);
  j["sum_weights"] = rule.sum_weights;
  j["residual_norm"] = rule.residual_norm;
  auto elims = nlohmann::json::array();
  for (const auto& e : rule.eliminations)
    elims.push_back({{"candidate_trials", e.candidate_trials},
                     {"newton_iters", e.newton_iters}});
  j["eliminations"] = std::move(elims);

  std::ofstream os(path, std::ios::trunc);
  if (!os) throw InputError("cannot open " + path.string() + " for writing");
  os << j.dump(2) << "\n";
}

RuleFile load_rule_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": invalid JSON: " + e.what());
  }
  RuleFile rule;
  try {
    rule.dim = j.at("dim").get<int>();
    const auto& pts = j.at("points");
    rule.points = Matrix(static_cast<Index>(pts.size()), rule.dim);
    for (Index i = 0; i < rule.points.rows(); ++i)
      for (int k = 0; k < rule.dim; ++k)
        rule.points(i, k) =
            pts.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(k));
    const auto& ws = j.at("weights");
    rule.weights = Vector(static_cast<Index>(ws.size()));
    for (Index i = 0; i < rule.weights.size(); ++i)
      rule.weights(i) = ws.at(static_cast<std::size_t>(i));
    rule.sum_weights = j.at("sum_weights").get<double>();
    rule.residual_norm = j.at("residual_norm").get<double>();
    for (const auto& e : j.value("eliminations", nlohmann::json::array())) {
      EliminationRecord rec;
      rec.candidate_trials = e.at("candidate_trials").get<int>();
      rec.newton_iters = e.at("newton_iters").get<int>();
      rule.eliminations.push_back(rec);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  if (rule.points.rows() != rule.weights.size())
    throw InputError(path.string() + ": points/weights length mismatch");
  return rule;
}

}  // namespace cecm
