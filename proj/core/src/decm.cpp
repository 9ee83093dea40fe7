#include "cecm/decm.hpp"

#include <cmath>

namespace cecm {

DiscreteRule decm(const Matrix& u, const Vector& w_fe) {
  const Index m = u.rows();
  const Index p = u.cols();
  if (m != w_fe.size()) throw InputError("decm: basis rows != weight count");
  if (p > m)
    throw InputError("decm: more basis functions than candidate points");

  const Vector b = u.transpose() * w_fe;
  const Vector row_norms = u.rowwise().norm();

  DiscreteRule rule;
  rule.indices.reserve(static_cast<std::size_t>(p));
  std::vector<char> selected(static_cast<std::size_t>(m), 0);

  Vector r = b;
  Matrix uz_t(p, p);  // selected rows, transposed, filled left to right

  for (Index k = 0; k < p; ++k) {
    // Candidate most positively parallel to the residual.
    const Vector scores = u * r;
    Index best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (Index g = 0; g < m; ++g) {
      if (selected[static_cast<std::size_t>(g)]) continue;
      if (row_norms(g) == 0.0) continue;  // degenerate rows never selected
      const double score = scores(g) / row_norms(g);
      if (score >= best_score) {
        best_score = score;
        best = g;
      }
    }
    if (best < 0)
      throw NumericalError(
          "decm: candidates exhausted before reaching an interpolatory rule "
          "(degenerate basis rows)");

    selected[static_cast<std::size_t>(best)] = 1;
    rule.indices.push_back(best);
    uz_t.col(k) = u.row(best).transpose();

    // Unconstrained least-squares weights for the current selection.
    const auto block = uz_t.leftCols(k + 1);
    rule.weights = block.colPivHouseholderQr().solve(b);
    r = b - block * rule.weights;
    rule.residual_history.push_back(r.norm());
  }

  // The final system is square; guard against a degenerate solve.
  Eigen::JacobiSVD<Matrix> svd(uz_t);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (!(smin > 0.0) || smax / smin > 1e14)
    throw NumericalError("decm: selected system is numerically singular "
                         "(condition " +
                         std::to_string(smax / (smin > 0 ? smin : 1e-300)) +
                         ")");
  if ((rule.weights.array() <= 0.0).any()) {
    const double bnorm = b.norm();
    Index vanished_at = p;
    for (Index k = 0; k < p; ++k)
      if (rule.residual_history[static_cast<std::size_t>(k)] <=
          1e-14 * bnorm) {
        vanished_at = k + 1;
        break;
      }
    std::string msg =
        "decm: final weights are not all positive (min " +
        std::to_string(rule.weights.minCoeff()) + ")";
    if (vanished_at < p)
      msg += "; the greedy residual already vanished after " +
             std::to_string(vanished_at) + " of " + std::to_string(p) +
             " points, so the remaining selections carry noise-level "
             "weights. The Gauss set admits an exact sub-rule; use richer "
             "snapshots or a different mesh/Gauss resolution";
    throw NumericalError(msg);
  }
  return rule;
}

}  // namespace cecm
