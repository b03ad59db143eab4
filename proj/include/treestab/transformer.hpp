#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "treestab/analysis.hpp"
#include "treestab/daemon.hpp"

namespace treestab {

/// Strict total order on families, highest priority first. Must be
/// compatible with the causality relation: a family is never ordered after
/// one that reads its writes.
struct priority_order {
  std::vector<int> sequence;  // family indices, position = priority rank
};

inline bool order_compatible(const priority_order& order,
                             const causality_graph& g) {
  std::vector<int> rank(g.k, -1);
  if (static_cast<int>(order.sequence.size()) != g.k) return false;
  for (int r = 0; r < g.k; ++r) {
    int f = order.sequence[r];
    if (f < 0 || f >= g.k || rank[f] != -1) return false;
    rank[f] = r;
  }
  for (auto [j, i] : g.edges)
    if (rank[j] > rank[i]) return false;
  return true;
}

/// Topological order of the causality DAG, ties broken by ascending family
/// index. Throws on a cyclic graph.
inline priority_order derive_order(const causality_graph& g) {
  if (!g.acyclic)
    throw validation_error("no priority order exists for a cyclic causality graph");
  std::vector<int> indegree(g.k, 0);
  std::vector<std::vector<int>> succ(g.k);
  for (auto [j, i] : g.edges) {
    ++indegree[i];
    succ[j].push_back(i);
  }
  std::set<int> ready;
  for (int i = 0; i < g.k; ++i)
    if (indegree[i] == 0) ready.insert(i);
  priority_order order;
  while (!ready.empty()) {
    int f = *ready.begin();
    ready.erase(ready.begin());
    order.sequence.push_back(f);
    for (int t : succ[f])
      if (--indegree[t] == 0) ready.insert(t);
  }
  return order;
}

/// Priority transformer: family i keeps its statement and its write block,
/// and its guard becomes (and of not-G_j over all higher-priority j) and G_i.
/// Read declarations become the union over itself and every higher-priority
/// family, so the enlarged guard stays within its declared view.
inline algorithm transform(const algorithm& alg, const priority_order& order) {
  const int k = alg.family_count();
  auto causality = build_causality_graph(alg);
  if (!order_compatible(order, causality))
    throw validation_error("priority order incompatible with the causality graph");

  std::vector<int> rank(k, 0);
  for (int r = 0; r < k; ++r) rank[order.sequence[r]] = r;

  // Original guards, shared by every transformed family.
  auto guards = std::make_shared<std::vector<std::function<bool(const local_view&)>>>();
  for (int i = 0; i < k; ++i) guards->push_back(alg.family(i).guard);

  std::vector<family_spec> families;
  for (int i = 0; i < k; ++i) {
    const family_spec& orig = alg.family(i);
    family_spec f;
    f.label = orig.label;
    std::set<read_declaration> reads(orig.reads.begin(), orig.reads.end());
    std::vector<int> higher;
    for (int j = 0; j < k; ++j)
      if (j != i && rank[j] < rank[i]) {
        higher.push_back(j);
        reads.insert(alg.family(j).reads.begin(), alg.family(j).reads.end());
      }
    f.reads.assign(reads.begin(), reads.end());
    f.statement = orig.statement;
    if (higher.empty()) {
      f.guard = orig.guard;
    } else {
      f.guard = [guards, higher, i](const local_view& v) {
        for (int j : higher)
          if ((*guards)[j](v)) return false;
        return (*guards)[i](v);
      };
    }
    families.push_back(std::move(f));
  }
  return algorithm(alg.schema(), std::move(families), alg.legitimacy());
}

// ---------------------------------------------------------------------------
// Local mutual exclusion
// ---------------------------------------------------------------------------

struct lme_options {
  long trials = 10000;
  std::uint64_t seed = 0;
  value_t value_bound = 100;
  // Override per-name domains for exhaustive enumeration of infinite-domain
  // schemas; names absent here keep their schema domain.
  std::map<std::string, std::vector<value_t>> domain_override;
  std::size_t exhaustive_threshold = 1'000'000;
};

struct lme_result {
  bool pass = true;
  bool exhaustive = false;
  long checked = 0;  // configurations examined
  std::optional<counterexample> witness;
};

/// Checks that no configuration enables two families at one node.
/// Enumerates the whole configuration space when every writable domain is
/// finite (intrinsically or via override) and small enough; samples
/// otherwise. The mode taken is reported in the result.
inline lme_result check_local_mutual_exclusion(const forest_network& net,
                                               const algorithm& alg,
                                               const lme_options& opts = {}) {
  lme_result res;

  auto violating_node = [&](const configuration& cfg) -> node_id {
    for (node_id p = 0; p < net.n; ++p) {
      int enabled = 0;
      for (int i = 0; i < alg.family_count(); ++i)
        if (is_enabled(net, alg, cfg, p, i)) ++enabled;
      if (enabled > 1) return p;
    }
    return -1;
  };

  std::vector<std::vector<value_t>> cell_domain;
  std::vector<std::pair<node_id, int>> cells;
  double space = 1;
  bool finite = true;
  for (node_id p = 0; p < net.n && finite; ++p)
    for (int s = 0; s < alg.slot_count(); ++s) {
      if (alg.is_const_slot(s)) continue;
      auto it = opts.domain_override.find(alg.slot_names()[s]);
      if (it != opts.domain_override.end()) {
        cells.emplace_back(p, s);
        cell_domain.push_back(it->second);
      } else if (alg.domain_of(s).finite) {
        cells.emplace_back(p, s);
        cell_domain.push_back(alg.domain_of(s).values);
      } else {
        finite = false;
        break;
      }
      space *= static_cast<double>(cell_domain.back().size());
    }

  if (finite && space <= static_cast<double>(opts.exhaustive_threshold)) {
    res.exhaustive = true;
    configuration cfg = make_configuration(net, alg);
    std::vector<std::size_t> idx(cells.size(), 0);
    while (true) {
      for (std::size_t c = 0; c < cells.size(); ++c)
        cfg.set(cells[c].first, cells[c].second, cell_domain[c][idx[c]]);
      ++res.checked;
      node_id bad = violating_node(cfg);
      if (bad >= 0) {
        res.pass = false;
        res.witness = counterexample{cfg, bad};
        return res;
      }
      std::size_t c = 0;
      for (; c < cells.size(); ++c) {
        if (++idx[c] < cell_domain[c].size()) break;
        idx[c] = 0;
      }
      if (c == cells.size()) break;
    }
    return res;
  }

  std::mt19937_64 rng(opts.seed);
  for (long t = 0; t < opts.trials; ++t) {
    configuration cfg = random_configuration(net, alg, rng, opts.value_bound);
    ++res.checked;
    node_id bad = violating_node(cfg);
    if (bad >= 0) {
      res.pass = false;
      res.witness = counterexample{cfg, bad};
      return res;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Trace replay and causality height of the transformed algorithm
// ---------------------------------------------------------------------------

/// True iff the trace is also an execution of `original`: every selected
/// pair is enabled under the original in the same pre-configuration, every
/// step produces the recorded post-configuration, and the final
/// configuration is terminal for the original exactly when the traced run
/// ended terminal.
inline bool replay_on_original(const execution_trace& trace,
                               const forest_network& net,
                               const algorithm& original) {
  configuration cfg = trace.initial;
  for (const auto& step : trace.steps) {
    for (auto [p, i] : step.selection)
      if (!is_enabled(net, original, cfg, p, i)) return false;
    cfg = apply_step(net, original, cfg, step.selection);
    if (cfg.digest() != step.digest) return false;
  }
  bool reported_terminal = trace.outcome == run_outcome::terminal;
  return is_terminal(net, original, cfg) == reported_terminal;
}

struct transformed_height_result {
  int height = 0;
  // Families whose guard no random configuration satisfied; when non-empty
  // the height-equals-k-minus-one expectation loses its footing.
  std::vector<int> guard_unsatisfied;
};

/// Causality height of the transformed algorithm, with a sampling check
/// that every original guard is satisfiable somewhere (the hypothesis under
/// which the height equals k-1).
inline transformed_height_result transformed_causality_height(
    const forest_network& net, const algorithm& alg, const priority_order& order,
    long trials = 2000, std::uint64_t seed = 7, value_t bound = 100) {
  transformed_height_result res;
  algorithm t = transform(alg, order);
  res.height = build_causality_graph(t).height;

  std::vector<bool> satisfied(alg.family_count(), false);
  std::mt19937_64 rng(seed);
  for (long it = 0; it < trials; ++it) {
    configuration cfg = random_configuration(net, alg, rng, bound);
    for (int i = 0; i < alg.family_count(); ++i)
      for (node_id p = 0; p < net.n && !satisfied[i]; ++p)
        if (is_enabled(net, alg, cfg, p, i)) satisfied[i] = true;
  }
  for (int i = 0; i < alg.family_count(); ++i)
    if (!satisfied[i]) res.guard_unsatisfied.push_back(i);
  return res;
}

}  // namespace treestab
