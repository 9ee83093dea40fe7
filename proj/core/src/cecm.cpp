#include "cecm/cecm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "cecm/svd.hpp"

namespace cecm {

ContinuousRule rule_from_decm(const DiscreteRule& discrete,
                              const GaussField& field) {
  const Index p = static_cast<Index>(discrete.indices.size());
  ContinuousRule rule;
  rule.points = Matrix(p, field.points.cols());
  rule.weights = discrete.weights;
  rule.element_of.resize(static_cast<std::size_t>(p));
  rule.gauss_origin.resize(static_cast<std::size_t>(p));
  for (Index i = 0; i < p; ++i) {
    const Index g = discrete.indices[static_cast<std::size_t>(i)];
    rule.points.row(i) = field.points.row(g);
    rule.element_of[static_cast<std::size_t>(i)] =
        field.owner[static_cast<std::size_t>(g)];
    rule.gauss_origin[static_cast<std::size_t>(i)] = g;
  }
  rule.residual_norm =
      discrete.residual_history.empty() ? 0.0 : discrete.residual_history.back();
  return rule;
}

Vector cecm_residual(const BasisEvaluator& eval, const Vector& b,
                     const Matrix& points, const Vector& weights,
                     const std::vector<Index>* element_hints) {
  Vector r = -b;
  for (Index i = 0; i < weights.size(); ++i) {
    if (weights(i) == 0.0) continue;
    std::optional<Index> hint;
    if (element_hints && element_hints->at(static_cast<std::size_t>(i)) >= 0)
      hint = element_hints->at(static_cast<std::size_t>(i));
    const auto ev = eval(points.row(i).transpose(), hint, 0.0);
    if (!ev)
      throw GeometryError("cecm_residual: point " + std::to_string(i) +
                          " lies outside the domain");
    r += weights(i) * ev->u.transpose();
  }
  return r;
}

Matrix cecm_jacobian(const BasisEvaluator& eval, const Matrix& points,
                     const Vector& weights, const std::vector<Index>& l_idx,
                     const std::vector<Index>& s_idx) {
  const Index p = eval.size();
  const Index d = points.cols();
  const Index nx = d * static_cast<Index>(l_idx.size());
  Matrix jhat(p, nx + static_cast<Index>(s_idx.size()));
  for (std::size_t li = 0; li < l_idx.size(); ++li) {
    const Index i = l_idx[li];
    const auto ev = eval(points.row(i).transpose(), std::nullopt, 0.0);
    if (!ev)
      throw GeometryError("cecm_jacobian: point outside the domain");
    jhat.middleCols(static_cast<Index>(li) * d, d) =
        weights(i) * ev->grad.transpose();
  }
  for (std::size_t si = 0; si < s_idx.size(); ++si) {
    const Index i = s_idx[si];
    const auto ev = eval(points.row(i).transpose(), std::nullopt, 0.0);
    if (!ev)
      throw GeometryError("cecm_jacobian: point outside the domain");
    jhat.col(nx + static_cast<Index>(si)) = ev->u.transpose();
  }
  return jhat;
}

NewtonResult newton_mod(ContinuousRule& rule, Index r_idx,
                        const BasisEvaluator& eval, const Vector& b,
                        const SolverParams& params) {
  params.validate();
  const Index p = eval.size();
  const Index d = rule.points.cols();

  // Sets of the constrained solve: positions+weights of l_set are unknown,
  // p_set keeps positions pinned with free weights. Freezing lasts for this
  // call only.
  std::vector<Index> l_set, p_set;
  for (Index i = 0; i < rule.weights.size(); ++i)
    if (rule.weights(i) != 0.0 && i != r_idx) l_set.push_back(i);

  // Points contributing to the residual; fixed for the whole call.
  std::vector<Index> participants = l_set;
  if (rule.weights(r_idx) != 0.0) participants.push_back(r_idx);

  std::map<Index, int> freeze_count;
  NewtonResult out;

  int k = 1;
  while (k <= params.k_max) {
    // Basis values and gradients at the committed state.
    std::map<Index, BasisEval> evals;
    for (Index i : participants) {
      const auto ev = eval(rule.points.row(i).transpose(),
                           rule.element_of[static_cast<std::size_t>(i)], 0.0);
      if (!ev)
        throw GeometryError("newton_mod: committed point " +
                            std::to_string(i) + " escaped the domain");
      evals.emplace(i, *ev);
    }

    Vector r = -b;
    for (Index i : participants) r += rule.weights(i) * evals.at(i).u.transpose();
    out.residual_norm = r.norm();
    if (out.residual_norm <= params.eps_nr) {
      out.converged = true;
      out.iterations = k - 1;
      out.frozen = p_set;
      return out;
    }

    bool feasible = false;
    bool fatal = false;
    while (k <= params.k_max && !feasible && !fatal) {
      const Index nl = static_cast<Index>(l_set.size());
      const Index ns = nl + static_cast<Index>(p_set.size());
      const Index n_dofs = d * nl + ns;
      if (n_dofs == 0) {
        fatal = true;
        break;
      }

      Matrix jhat(p, n_dofs);
      for (Index li = 0; li < nl; ++li) {
        const Index i = l_set[static_cast<std::size_t>(li)];
        jhat.middleCols(li * d, d) =
            rule.weights(i) * evals.at(i).grad.transpose();
      }
      for (Index si = 0; si < ns; ++si) {
        const Index i = (si < nl)
                            ? l_set[static_cast<std::size_t>(si)]
                            : p_set[static_cast<std::size_t>(si - nl)];
        jhat.col(d * nl + si) = evals.at(i).u.transpose();
      }

      const SvdFactors jf =
          svd_truncated(jhat, params.eps_svd_jac * jhat.norm());
      if (jf.rank == 0 || n_dofs < jf.rank) {
        // No usable directions (or, defensively, an overdetermined system).
        fatal = true;
        break;
      }

      const Vector c = -(jf.singular.cwiseInverse().asDiagonal() *
                         (jf.left.transpose() * r));
      // Sparse correction of the underdetermined system G dq = c: the
      // column-pivoted solve leaves at most rank-many nonzero entries.
      const Matrix g = jf.right.transpose();
      const Vector dq = g.colPivHouseholderQr().solve(c);

      Matrix x_new = rule.points;
      Vector w_new = rule.weights;
      for (Index li = 0; li < nl; ++li)
        x_new.row(l_set[static_cast<std::size_t>(li)]) +=
            dq.segment(li * d, d).transpose();
      for (Index si = 0; si < ns; ++si) {
        const Index i = (si < nl)
                            ? l_set[static_cast<std::size_t>(si)]
                            : p_set[static_cast<std::size_t>(si - nl)];
        w_new(i) += dq(d * nl + si);
      }

      const int m_neg =
          static_cast<int>((w_new.array() < 0.0).count());
      if (m_neg >= params.n_neg) {
        fatal = true;
        break;
      }

      // Containment of the moved points, searched within the step length.
      std::vector<Index> escaped;
      std::vector<Index> owner_new(rule.element_of);
      for (Index li = 0; li < nl; ++li) {
        const Index i = l_set[static_cast<std::size_t>(li)];
        const double step = dq.segment(li * d, d).norm();
        const auto ev =
            eval(x_new.row(i).transpose(),
                 rule.element_of[static_cast<std::size_t>(i)], step);
        if (!ev)
          escaped.push_back(i);
        else
          owner_new[static_cast<std::size_t>(i)] = ev->element;
      }

      if (!escaped.empty()) {
        for (Index i : escaped) {
          if (++freeze_count[i] >= 2) {
            fatal = true;  // repeated infeasibility of the same point
            break;
          }
        }
        if (fatal) break;
        // Retry the iteration with those positions pinned at the committed
        // state; they keep their weight unknowns.
        for (Index i : escaped) {
          l_set.erase(std::find(l_set.begin(), l_set.end(), i));
          p_set.push_back(i);
        }
        ++k;
        continue;
      }

      if (!rule.gauss_origin.empty()) {
        for (Index li = 0; li < nl; ++li) {
          const Index i = l_set[static_cast<std::size_t>(li)];
          if (dq.segment(li * d, d).squaredNorm() > 0.0)
            rule.gauss_origin[static_cast<std::size_t>(i)] = -1;  // relocated
        }
      }
      rule.points = std::move(x_new);
      rule.weights = std::move(w_new);
      rule.element_of = std::move(owner_new);
      ++k;
      feasible = true;
    }

    if (!feasible) break;  // budget, unsolvable system, or repeated escape
  }

  out.converged = false;
  out.iterations = std::min(k, params.k_max);
  out.frozen = p_set;
  return out;
}

SolveResResult solve_res(ContinuousRule& rule, Index r_idx, int n_reduction,
                         const BasisEvaluator& eval, const Vector& b,
                         const SolverParams& params) {
  if (n_reduction < 1) throw InputError("solve_res: N must be >= 1");
  if (rule.weights(r_idx) == 0.0)
    throw InputError("solve_res: candidate weight is already zero");

  const ContinuousRule saved = rule;
  const double w_ref = rule.weights(r_idx);
  SolveResResult out;
  for (int n = 1; n <= n_reduction; ++n) {
    rule.weights(r_idx) =
        w_ref * (1.0 - static_cast<double>(n) / static_cast<double>(n_reduction));
    const NewtonResult nr = newton_mod(rule, r_idx, eval, b, params);
    out.newton_iters += nr.iterations;
    if (!nr.converged) {
      rule = saved;
      out.converged = false;
      return out;
    }
    rule.residual_norm = nr.residual_norm;
  }
  rule.weights(r_idx) = 0.0;  // exact zero at n = N by construction
  out.converged = true;
  return out;
}

MakeZeroResult make_one_zero(ContinuousRule& rule, int n_reduction,
                             const BasisEvaluator& eval, const Vector& b,
                             const SolverParams& params) {
  MakeZeroResult out;
  const std::vector<Index> actives = rule.active();
  if (actives.size() < 2) return out;

  // Ascending contribution to the residual; negative weights sort first.
  std::vector<std::pair<double, Index>> scored;
  scored.reserve(actives.size());
  for (Index i : actives) {
    const auto ev = eval(rule.points.row(i).transpose(),
                         rule.element_of[static_cast<std::size_t>(i)], 0.0);
    if (!ev)
      throw GeometryError("make_one_zero: active point " + std::to_string(i) +
                          " lies outside the domain");
    scored.emplace_back(rule.weights(i) * ev->u.norm(), i);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) {
                     if (a.first != b.first) return a.first < b.first;
                     return a.second < b.second;
                   });

  for (const auto& [score, candidate] : scored) {
    ++out.record.candidate_trials;
    ContinuousRule trial = rule;
    const SolveResResult res =
        solve_res(trial, candidate, n_reduction, eval, b, params);
    if (res.converged) {
      out.record.newton_iters = res.newton_iters;
      out.success = true;
      rule = std::move(trial);
      return out;
    }
  }
  return out;
}

ContinuousRule sparsify(ContinuousRule rule, int n_reduction,
                        const BasisEvaluator& eval, const Vector& b,
                        const SolverParams& params) {
  if (rule.history.empty())
    rule.history.push_back({rule.points, rule.weights, rule.element_of,
                            rule.gauss_origin, rule.residual_norm});

  // Last committed rule whose active weights were all positive.
  auto all_positive = [](const ContinuousRule& r) {
    return (r.weights.array() >= 0.0).all();
  };
  std::optional<RuleSnapshot> best;
  if (all_positive(rule))
    best = RuleSnapshot{rule.points, rule.weights, rule.element_of,
                        rule.gauss_origin, rule.residual_norm};

  while (true) {
    const MakeZeroResult step = make_one_zero(rule, n_reduction, eval, b, params);
    if (!step.success) break;
    rule.eliminations.push_back(step.record);
    rule.history.push_back({rule.points, rule.weights, rule.element_of,
                            rule.gauss_origin, rule.residual_norm});
    if (all_positive(rule))
      best = RuleSnapshot{rule.points, rule.weights, rule.element_of,
                          rule.gauss_origin, rule.residual_norm};
  }

  if (best) {
    rule.points = best->points;
    rule.weights = best->weights;
    rule.element_of = best->element_of;
    rule.gauss_origin = best->gauss_origin;
    rule.residual_norm = best->residual_norm;
  }
  // If no all-positive state ever appeared the input is returned as-is,
  // with the history recording the attempted path.
  return rule;
}

ContinuousRule sparsify_global(ContinuousRule rule,
                               const BasisEvaluator& eval, const Vector& b,
                               const SolverParams& params) {
  params.validate();
  rule = sparsify(std::move(rule), 1, eval, b, params);
  rule = sparsify(std::move(rule), params.n_steps, eval, b, params);

  // Final polish: re-run the Newton solve on the returned rule at a much
  // tighter tolerance so the surviving points settle to machine precision
  // instead of the eps_nr neighborhood. An eliminated index serves as the
  // fixed point (its weight is pinned at zero), leaving every active
  // unknown free. Kept only if it converges and stays feasible.
  Index pinned = -1;
  for (Index i = 0; i < rule.weights.size(); ++i)
    if (rule.weights(i) == 0.0) {
      pinned = i;
      break;
    }
  if (pinned >= 0) {
    SolverParams polish = params;
    polish.eps_nr = params.eps_nr * 1e-6;
    polish.k_max = 10;
    ContinuousRule refined = rule;
    const NewtonResult nr = newton_mod(refined, pinned, eval, b, polish);
    if (nr.converged && (refined.weights.array() >= 0.0).all()) {
      rule.points = refined.points;
      rule.weights = refined.weights;
      rule.element_of = refined.element_of;
      rule.gauss_origin = refined.gauss_origin;
      rule.residual_norm = nr.residual_norm;
    }
  }
  return rule;
}

}  // namespace cecm
