#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "treestab/core.hpp"

namespace treestab {

// ---------------------------------------------------------------------------
// Quasi-syntactic classification of families
// ---------------------------------------------------------------------------

/// Per-family label sets. A family is bottom-up when every declared read of a
/// name it writes itself uses the self or children relation; top-down when
/// every such read uses self or parent. Both can hold (only self reads),
/// neither can hold.
struct classification {
  std::vector<bool> bottom_up;
  std::vector<bool> top_down;
};

enum class family_orientation { none, bottom_up, top_down };

inline std::string_view orientation_name(family_orientation o) {
  switch (o) {
    case family_orientation::none: return "none";
    case family_orientation::bottom_up: return "bottom-up";
    case family_orientation::top_down: return "top-down";
  }
  return "?";
}

inline classification classify(const algorithm& alg) {
  classification out;
  out.bottom_up.assign(alg.family_count(), true);
  out.top_down.assign(alg.family_count(), true);
  for (int i = 0; i < alg.family_count(); ++i) {
    for (const auto& rd : alg.family(i).reads) {
      if (alg.writer_of(alg.slot(rd.name)) != i)
        continue;  // only reads of the family's own names matter
      if (rd.rel != relation::self && rd.rel != relation::children)
        out.bottom_up[i] = false;
      if (rd.rel != relation::self && rd.rel != relation::parent)
        out.top_down[i] = false;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Graph of actions' causality
// ---------------------------------------------------------------------------

/// Directed graph over families: edge j -> i whenever family i declares a
/// read (any relation) of a name written by family j. Heights follow the
/// usual DAG convention (sources at 0) and are only defined when acyclic.
struct causality_graph {
  int k = 0;
  std::vector<std::pair<int, int>> edges;      // (j, i)
  std::vector<std::vector<int>> predecessors;  // predecessors[i] = {j : j -> i}
  bool acyclic = true;
  std::vector<int> family_height;  // -1 when the graph is cyclic
  int height = -1;                 // max family height
  int max_in_degree = 0;           // d
};

inline causality_graph build_causality_graph(const algorithm& alg) {
  causality_graph g;
  g.k = alg.family_count();
  g.predecessors.assign(g.k, {});
  for (int i = 0; i < g.k; ++i) {
    std::set<int> preds;
    for (const auto& rd : alg.family(i).reads) {
      int w = alg.writer_of(alg.slot(rd.name));
      if (w >= 0 && w != i) preds.insert(w);
    }
    for (int j : preds) {
      g.edges.emplace_back(j, i);
      g.predecessors[i].push_back(j);
    }
    g.max_in_degree = std::max(g.max_in_degree, static_cast<int>(preds.size()));
  }

  // Heights by iterating to a fixed point; k passes without convergence
  // means a cycle.
  g.family_height.assign(g.k, 0);
  for (int pass = 0; pass <= g.k; ++pass) {
    bool changed = false;
    for (int i = 0; i < g.k; ++i)
      for (int j : g.predecessors[i])
        if (g.family_height[i] < g.family_height[j] + 1) {
          g.family_height[i] = g.family_height[j] + 1;
          changed = true;
        }
    if (!changed) break;
    if (pass == g.k) {
      g.acyclic = false;
      g.family_height.assign(g.k, -1);
      g.height = -1;
      return g;
    }
  }
  g.height = 0;
  for (int h : g.family_height) g.height = std::max(g.height, h);
  return g;
}

// ---------------------------------------------------------------------------
// Impacting zones, depths, interfering neighbors
// ---------------------------------------------------------------------------

/// Ancestors of p for a top-down family, descendants for a bottom-up one
/// (both include p). The family must be oriented.
inline std::vector<node_id> impacting_zone(const forest_network& net,
                                           family_orientation orient,
                                           node_id p) {
  switch (orient) {
    case family_orientation::top_down: return net.ancestors(p);
    case family_orientation::bottom_up: return net.descendants(p);
    case family_orientation::none: break;
  }
  throw validation_error("impacting zone of a family with no orientation");
}

/// Level of p for a top-down family, height of p for a bottom-up one.
inline int m_value(const forest_network& net, family_orientation orient,
                   node_id p) {
  switch (orient) {
    case family_orientation::top_down: return net.level_of[p];
    case family_orientation::bottom_up: return net.height_of[p];
    case family_orientation::none: break;
  }
  throw validation_error("depth of a family with no orientation");
}

/// |Others(A_i, p)|: neighbors q of p such that some family j != i writes,
/// at q's position relative to p, a name that A_i declares to read there.
inline int others_count(const forest_network& net, const algorithm& alg,
                        node_id p, int fam) {
  auto interferes = [&](relation rel) {
    for (const auto& rd : alg.family(fam).reads) {
      if (rd.rel != rel) continue;
      int w = alg.writer_of(alg.slot(rd.name));
      if (w >= 0 && w != fam) return true;
    }
    return false;
  };
  int count = 0;
  if (net.parent[p].has_value() && interferes(relation::parent)) ++count;
  if (interferes(relation::children))
    count += static_cast<int>(net.children[p].size());
  if (interferes(relation::other_neighbors))
    count += static_cast<int>(net.other_neighbors[p].size());
  return count;
}

// ---------------------------------------------------------------------------
// Correct-alone property testing
// ---------------------------------------------------------------------------

struct correct_alone_options {
  long trials = 10000;
  std::uint64_t seed = 0;
  value_t value_bound = 100;   // integer-domain writables drawn from [0, bound]
  bool concurrent_noise = true;  // add non-interfering simultaneous activations
};

struct counterexample {
  configuration cfg;
  node_id node = -1;
};

struct correct_alone_result {
  bool pass = true;
  long executed_trials = 0;
  std::optional<counterexample> witness;
};

/// Dynamic check that executing A_i(p) — possibly together with activations
/// that do not touch GRead(A_i(p)) \ W(A_i(p)) — leaves A_i(p) disabled.
/// A counterexample is a result, not an error.
inline correct_alone_result test_correct_alone(
    const forest_network& net, const algorithm& alg, int fam,
    const correct_alone_options& opts = {}) {
  std::mt19937_64 rng(opts.seed);
  correct_alone_result res;

  for (long t = 0; t < opts.trials; ++t) {
    configuration cfg = random_configuration(net, alg, rng, opts.value_bound);
    std::vector<node_id> candidates;
    for (node_id p = 0; p < net.n; ++p)
      if (is_enabled(net, alg, cfg, p, fam)) candidates.push_back(p);
    if (candidates.empty()) continue;
    node_id p = candidates[rng() % candidates.size()];

    std::vector<activation> selection{{p, fam}};
    if (opts.concurrent_noise && (rng() & 1)) {
      // G-read footprint of A_fam(p), minus its own writes.
      std::set<std::pair<node_id, int>> reads;
      for (const auto& rd : alg.family(fam).reads) {
        int s = alg.slot(rd.name);
        switch (rd.rel) {
          case relation::self: reads.insert({p, s}); break;
          case relation::parent:
            if (net.parent[p].has_value()) reads.insert({*net.parent[p], s});
            break;
          case relation::children:
            for (node_id c : net.children[p]) reads.insert({c, s});
            break;
          case relation::other_neighbors:
            for (node_id q : net.other_neighbors[p]) reads.insert({q, s});
            break;
        }
      }
      for (int s : alg.write_slots(fam)) reads.erase({p, s});
      for (auto [q, j] : enabled_set(net, alg, cfg)) {
        if (q == p || !(rng() & 1)) continue;
        bool clash = false;
        for (int s : alg.write_slots(j))
          if (reads.count({q, s})) clash = true;
        bool taken = false;
        for (const auto& a : selection) taken = taken || a.first == q;
        if (!clash && !taken) selection.emplace_back(q, j);
      }
    }

    configuration next = apply_step(net, alg, cfg, selection);
    ++res.executed_trials;
    if (is_enabled(net, alg, next, p, fam)) {
      res.pass = false;
      res.witness = counterexample{cfg, p};
      return res;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Full analysis
// ---------------------------------------------------------------------------

struct analysis_options {
  long correct_alone_trials = 2000;
  std::uint64_t seed = 1;
  value_t value_bound = 100;
};

/// Everything the bound formulas need, plus the acyclic-strategy verdict.
/// Correct-alone outcomes are sampling evidence, not proof.
struct analysis_report {
  classification labels;
  causality_graph causality;
  std::vector<family_orientation> orientation;  // top-down preferred when both
  std::vector<std::vector<int>> zone_size;      // [family][node] |Z(p, A_i)|
  std::vector<std::vector<int>> depth;          // [family][node] M(A_i, p)
  std::vector<std::vector<int>> others;         // [family][node] |Others(A_i, p)|
  std::vector<int> max_others;                  // maxO(A_i); -1 when cyclic
  std::vector<correct_alone_result> correct_alone;
  bool verdict = false;  // follows an acyclic strategy
};

inline analysis_report analyze(const forest_network& net, const algorithm& alg,
                               const analysis_options& opts = {}) {
  analysis_report rep;
  rep.labels = classify(alg);
  rep.causality = build_causality_graph(alg);
  const int k = alg.family_count();

  rep.orientation.assign(k, family_orientation::none);
  for (int i = 0; i < k; ++i) {
    if (rep.labels.top_down[i])
      rep.orientation[i] = family_orientation::top_down;
    else if (rep.labels.bottom_up[i])
      rep.orientation[i] = family_orientation::bottom_up;
  }

  rep.zone_size.assign(k, std::vector<int>(net.n, -1));
  rep.depth.assign(k, std::vector<int>(net.n, -1));
  rep.others.assign(k, std::vector<int>(net.n, 0));
  for (int i = 0; i < k; ++i)
    for (node_id p = 0; p < net.n; ++p) {
      if (rep.orientation[i] != family_orientation::none) {
        rep.zone_size[i][p] =
            static_cast<int>(impacting_zone(net, rep.orientation[i], p).size());
        rep.depth[i][p] = m_value(net, rep.orientation[i], p);
      }
      rep.others[i][p] = others_count(net, alg, p, i);
    }

  // maxO over the causality DAG: own maximum and every predecessor's maxO.
  rep.max_others.assign(k, -1);
  if (rep.causality.acyclic) {
    std::vector<int> order(k);
    for (int i = 0; i < k; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return rep.causality.family_height[a] < rep.causality.family_height[b];
    });
    for (int i : order) {
      int m = 0;
      for (node_id p = 0; p < net.n; ++p) m = std::max(m, rep.others[i][p]);
      for (int j : rep.causality.predecessors[i])
        m = std::max(m, rep.max_others[j]);
      rep.max_others[i] = m;
    }
  }

  rep.correct_alone.resize(k);
  bool all_alone = true;
  for (int i = 0; i < k; ++i) {
    rep.correct_alone[i] = test_correct_alone(
        net, alg, i,
        {opts.correct_alone_trials, opts.seed + static_cast<std::uint64_t>(i),
         opts.value_bound, true});
    all_alone = all_alone && rep.correct_alone[i].pass;
  }

  bool all_oriented = true;
  for (int i = 0; i < k; ++i)
    all_oriented = all_oriented && rep.orientation[i] != family_orientation::none;

  rep.verdict = rep.causality.acyclic && all_oriented && all_alone;
  return rep;
}

/// Convenience wrapper for the verdict alone.
inline bool follows_acyclic_strategy(const forest_network& net,
                                     const algorithm& alg,
                                     const analysis_options& opts = {}) {
  return analyze(net, alg, opts).verdict;
}

}  // namespace treestab
