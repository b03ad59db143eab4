#pragma once

#include <optional>
#include <string>
#include <vector>

#include "treestab/analysis.hpp"
#include "treestab/daemon.hpp"

namespace treestab {

/// Overflow-aware arithmetic over optional<int64>: absent means the exact
/// value exceeds the 64-bit range (reported, never wrapped).
inline std::optional<value_t> saturating_mul(std::optional<value_t> a,
                                             std::optional<value_t> b) {
  if (!a || !b) return std::nullopt;
  value_t r;
  if (__builtin_mul_overflow(*a, *b, &r)) return std::nullopt;
  return r;
}

inline std::optional<value_t> saturating_add(std::optional<value_t> a,
                                             std::optional<value_t> b) {
  if (!a || !b) return std::nullopt;
  value_t r;
  if (__builtin_add_overflow(*a, *b, &r)) return std::nullopt;
  return r;
}

inline std::optional<value_t> saturating_pow(std::optional<value_t> base,
                                             int exp) {
  std::optional<value_t> acc = 1;
  for (int i = 0; i < exp; ++i) acc = saturating_mul(acc, base);
  return acc;
}

/// Per-activation ceiling (n*(1 + d*(1 + maxO)))^h * zone for one family.
/// Monotone in every argument.
inline std::optional<value_t> lemma_move_bound(value_t n, value_t in_degree,
                                               value_t max_others, int height,
                                               value_t zone) {
  auto base = saturating_mul(
      n, saturating_add(1, saturating_mul(in_degree,
                                          saturating_add(1, max_others))));
  return saturating_mul(saturating_pow(base, height), zone);
}

/// Evaluated bound formulas for one algorithm on one network. The per-node
/// lemma bound uses the orientation's worst-case zone size (height+1 for
/// top-down families, n for bottom-up ones), so one value per family covers
/// every node.
struct bound_report {
  int n = 0;
  int tree_height = 0;  // H
  int max_degree = 0;   // Delta
  int k = 0;
  int in_degree = 0;          // d
  int causality_height = 0;   // h of the causality graph
  std::vector<std::string> family_labels;
  std::vector<int> family_height;
  std::vector<int> max_others;
  std::vector<family_orientation> orientation;
  std::vector<std::optional<value_t>> per_node_bound;  // per family, any node
  std::vector<std::optional<value_t>> family_total;    // per-node bound * n
  std::optional<value_t> corollary_total;  // (1+d(1+Delta))^h * k * n^(h+2)
  std::optional<value_t> refined_total;    // sum of the family totals
  std::optional<value_t> round_bound;      // (h+1)*(H+1), only under LME
  bool lme_established = false;
  std::string lme_evidence;  // "transformer", "exhaustive", "sampled", ""
};

/// Requires a positive acyclic-strategy verdict in the report.
inline bound_report make_bound_report(const forest_network& net,
                                      const algorithm& alg,
                                      const analysis_report& analysis,
                                      bool lme_established = false,
                                      std::string lme_evidence = "") {
  if (!analysis.verdict)
    throw validation_error(
        "bound formulas need a positive acyclic-strategy verdict");
  bound_report b;
  b.n = net.n;
  b.tree_height = net.height;
  b.max_degree = net.max_degree;
  b.k = alg.family_count();
  b.in_degree = analysis.causality.max_in_degree;
  b.causality_height = analysis.causality.height;
  b.family_height = analysis.causality.family_height;
  b.max_others = analysis.max_others;
  b.orientation = analysis.orientation;
  for (int i = 0; i < b.k; ++i) b.family_labels.push_back(alg.family(i).label);

  for (int i = 0; i < b.k; ++i) {
    value_t zone = b.orientation[i] == family_orientation::top_down
                       ? static_cast<value_t>(b.tree_height) + 1
                       : static_cast<value_t>(b.n);
    auto per_node = lemma_move_bound(b.n, b.in_degree, b.max_others[i],
                                     b.family_height[i], zone);
    b.per_node_bound.push_back(per_node);
    b.family_total.push_back(saturating_mul(per_node, b.n));
  }

  b.refined_total = 0;
  for (const auto& t : b.family_total)
    b.refined_total = saturating_add(b.refined_total, t);

  auto base = saturating_add(
      1, saturating_mul(b.in_degree,
                        saturating_add(1, static_cast<value_t>(b.max_degree))));
  b.corollary_total = saturating_mul(
      saturating_mul(saturating_pow(base, b.causality_height), b.k),
      saturating_pow(static_cast<value_t>(b.n), b.causality_height + 2));

  b.lme_established = lme_established;
  b.lme_evidence = std::move(lme_evidence);
  if (lme_established)
    b.round_bound =
        saturating_mul(static_cast<value_t>(b.causality_height) + 1,
                       static_cast<value_t>(b.tree_height) + 1);
  return b;
}

inline std::optional<value_t> per_node_move_bound(const bound_report& b,
                                                  int fam) {
  return b.per_node_bound.at(fam);
}

inline std::optional<value_t> total_move_bound(const bound_report& b) {
  return b.corollary_total;
}

inline std::optional<value_t> refined_move_bound(const bound_report& b) {
  return b.refined_total;
}

inline std::optional<value_t> round_bound(const bound_report& b) {
  return b.round_bound;
}

/// Default step budget for a run: the corollary total plus one, so hitting
/// the limit is itself a bound-violation signal. Falls back to the refined
/// total when the corollary overflows.
inline long default_step_limit(const bound_report& b) {
  if (b.corollary_total) return static_cast<long>(*b.corollary_total) + 1;
  if (b.refined_total) return static_cast<long>(*b.refined_total) + 1;
  throw overflow_error("every total bound exceeds the 64-bit range");
}

struct audit_result {
  bool pass = true;
  std::vector<std::string> violations;
};

/// Checks every per-(node, family) move counter against its lemma bound, the
/// grand total against both totals, and the round count against the round
/// bound when one is present. An overflowing bound cannot be violated.
inline audit_result audit_trace(const execution_trace& trace,
                                const bound_report& b) {
  audit_result res;
  auto violate = [&res](std::string msg) {
    res.pass = false;
    res.violations.push_back(std::move(msg));
  };

  for (int i = 0; i < b.k && i < static_cast<int>(trace.moves.size()); ++i) {
    auto cap = b.per_node_bound[i];
    if (!cap) continue;
    for (node_id p = 0; p < static_cast<node_id>(trace.moves[i].size()); ++p)
      if (trace.moves[i][p] > *cap)
        violate("family " + b.family_labels[i] + " at node " +
                std::to_string(p) + " moved " +
                std::to_string(trace.moves[i][p]) + " times, bound " +
                std::to_string(*cap));
  }
  if (b.refined_total && trace.total_moves > *b.refined_total)
    violate("total moves " + std::to_string(trace.total_moves) +
            " exceed the refined total " + std::to_string(*b.refined_total));
  if (b.corollary_total && trace.total_moves > *b.corollary_total)
    violate("total moves " + std::to_string(trace.total_moves) +
            " exceed the corollary total " +
            std::to_string(*b.corollary_total));
  if (b.round_bound && trace.rounds > *b.round_bound)
    violate("rounds " + std::to_string(trace.rounds) + " exceed the bound " +
            std::to_string(*b.round_bound));
  return res;
}

}  // namespace treestab
