#ifndef CECM_RULE_IO_HPP
#define CECM_RULE_IO_HPP

#include <filesystem>

#include "cecm/cecm.hpp"
#include "cecm/types.hpp"

namespace cecm {

/// Serialized cubature rule: the active points only.
struct RuleFile {
  int dim = 1;
  Matrix points;   // m x dim
  Vector weights;  // m, positive
  double sum_weights = 0.0;
  double residual_norm = 0.0;
  std::vector<EliminationRecord> eliminations;
};

RuleFile to_rule_file(const ContinuousRule& rule, int dim);
void save_rule_json(const std::filesystem::path& path, const RuleFile& rule);
RuleFile load_rule_json(const std::filesystem::path& path);

}  // namespace cecm

#endif
