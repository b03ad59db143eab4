#pragma once

#include <deque>
#include <map>
#include <random>
#include <unordered_map>
#include <vector>

#include "treestab/core.hpp"

namespace treestab {

// ---------------------------------------------------------------------------
// Daemon strategies
// ---------------------------------------------------------------------------

enum class daemon_kind {
  synchronous,
  random_distributed,
  random_central,
  round_robin_central,
  scripted,
};

inline std::string_view daemon_name(daemon_kind k) {
  switch (k) {
    case daemon_kind::synchronous: return "synchronous";
    case daemon_kind::random_distributed: return "random-distributed";
    case daemon_kind::random_central: return "random-central";
    case daemon_kind::round_robin_central: return "round-robin-central";
    case daemon_kind::scripted: return "scripted";
  }
  return "?";
}

inline std::optional<daemon_kind> daemon_from_name(std::string_view s) {
  for (daemon_kind k :
       {daemon_kind::synchronous, daemon_kind::random_distributed,
        daemon_kind::random_central, daemon_kind::round_robin_central,
        daemon_kind::scripted})
    if (daemon_name(k) == s) return k;
  return std::nullopt;
}

/// Immutable strategy descriptor. Every select returns a non-empty subset of
/// the enabled pairs with distinct nodes; central variants return singletons.
/// A scripted daemon raises script_error when its next pair is not enabled.
struct daemon_strategy {
  daemon_kind kind = daemon_kind::synchronous;
  std::uint64_t seed = 0;
  double activation_probability = 0.5;  // random-distributed coin
  std::vector<activation> script;       // scripted singleton steps

  static daemon_strategy synchronous() { return {}; }
  static daemon_strategy random_distributed(std::uint64_t seed, double rho = 0.5) {
    return {daemon_kind::random_distributed, seed, rho, {}};
  }
  static daemon_strategy random_central(std::uint64_t seed) {
    return {daemon_kind::random_central, seed, 0.5, {}};
  }
  static daemon_strategy round_robin_central() {
    return {daemon_kind::round_robin_central, 0, 0.5, {}};
  }
  static daemon_strategy scripted(std::vector<activation> script) {
    return {daemon_kind::scripted, 0, 0.5, std::move(script)};
  }
};

// ---------------------------------------------------------------------------
// Executions
// ---------------------------------------------------------------------------

enum class run_outcome { terminal, step_limit_exceeded, script_exhausted };

inline std::string_view outcome_name(run_outcome o) {
  switch (o) {
    case run_outcome::terminal: return "terminal";
    case run_outcome::step_limit_exceeded: return "step-limit-exceeded";
    case run_outcome::script_exhausted: return "script-exhausted";
  }
  return "?";
}

struct trace_step {
  std::vector<activation> selection;
  std::uint64_t digest;  // digest of the configuration after the step
};

struct execution_trace {
  configuration initial;
  configuration final_cfg;
  std::vector<trace_step> steps;
  std::vector<std::vector<long>> moves;  // [family][node] activation counts
  long total_moves = 0;
  int rounds = 0;
  std::vector<std::size_t> round_boundaries;  // index of each round's last step
  run_outcome outcome = run_outcome::terminal;
  std::vector<configuration> configs;  // retained only on request (post-step)
};

struct run_options {
  long step_limit = 0;  // required, > 0
  bool retain_configurations = false;
};

struct round_count {
  int rounds = 0;
  std::vector<std::size_t> boundaries;
};

/// Neutralization-based round counter. A round is the minimal segment in
/// which every process enabled at its start either executes an action or is
/// neutralized (enabled before some step of the segment, disabled after it,
/// without moving in it). A trailing incomplete round counts as one round if
/// it contains at least one step.
inline round_count count_rounds(const execution_trace& trace,
                                const forest_network& net,
                                const algorithm& alg) {
  round_count rc;
  configuration cfg = trace.initial;

  auto enabled_nodes = [&](const configuration& c) {
    std::vector<bool> en(net.n, false);
    for (node_id p = 0; p < net.n; ++p)
      for (int i = 0; i < alg.family_count(); ++i)
        if (is_enabled(net, alg, c, p, i)) {
          en[p] = true;
          break;
        }
    return en;
  };

  std::vector<bool> pending(net.n, false);
  std::vector<bool> pre = enabled_nodes(cfg);
  bool round_open = false;
  for (std::size_t s = 0; s < trace.steps.size(); ++s) {
    if (!round_open) {
      pending = pre;
      round_open = true;
    }
    configuration next = apply_step(net, alg, cfg, trace.steps[s].selection);
    std::vector<bool> post = enabled_nodes(next);
    std::vector<bool> moved(net.n, false);
    for (auto [p, i] : trace.steps[s].selection) moved[p] = true;

    for (node_id p = 0; p < net.n; ++p) {
      if (!pending[p]) continue;
      if (moved[p])
        pending[p] = false;  // executed an action
      else if (pre[p] && !post[p])
        pending[p] = false;  // neutralized in this step
    }
    bool done = true;
    for (node_id p = 0; p < net.n; ++p) done = done && !pending[p];
    if (done) {
      ++rc.rounds;
      rc.boundaries.push_back(s);
      round_open = false;
    }
    cfg = std::move(next);
    pre = std::move(post);
  }
  if (round_open) {
    ++rc.rounds;
    rc.boundaries.push_back(trace.steps.empty() ? 0 : trace.steps.size() - 1);
  }
  return rc;
}

namespace detail {

/// Groups the enabled set by node; pairs are sorted, so families per node
/// come out in ascending order.
inline std::vector<std::pair<node_id, std::vector<int>>> group_by_node(
    const std::vector<activation>& enabled) {
  std::vector<std::pair<node_id, std::vector<int>>> groups;
  for (auto [p, i] : enabled) {
    if (groups.empty() || groups.back().first != p) groups.push_back({p, {}});
    groups.back().second.push_back(i);
  }
  return groups;
}

struct daemon_state {
  std::mt19937_64 rng;
  std::size_t script_pos = 0;
  node_id rr_cursor = 0;
};

inline std::vector<activation> select(const daemon_strategy& strat,
                                      daemon_state& st,
                                      const std::vector<activation>& enabled,
                                      bool& script_done) {
  auto groups = group_by_node(enabled);
  switch (strat.kind) {
    case daemon_kind::synchronous: {
      std::vector<activation> sel;
      for (const auto& [p, fams] : groups) sel.emplace_back(p, fams.front());
      return sel;
    }
    case daemon_kind::random_distributed: {
      std::vector<activation> sel;
      while (sel.empty()) {
        for (const auto& [p, fams] : groups) {
          double coin = static_cast<double>(st.rng() >> 11) * 0x1.0p-53;
          if (coin < strat.activation_probability)
            sel.emplace_back(p, fams[st.rng() % fams.size()]);
        }
      }
      return sel;
    }
    case daemon_kind::random_central: {
      const auto& [p, fams] = groups[st.rng() % groups.size()];
      return {{p, fams[st.rng() % fams.size()]}};
    }
    case daemon_kind::round_robin_central: {
      // First enabled node at or after the cursor, wrapping around.
      const auto* chosen = &groups.front();
      for (const auto& g : groups)
        if (g.first >= st.rr_cursor) {
          chosen = &g;
          break;
        }
      st.rr_cursor = chosen->first + 1;
      return {{chosen->first, chosen->second.front()}};
    }
    case daemon_kind::scripted: {
      if (st.script_pos >= strat.script.size()) {
        script_done = true;
        return {};
      }
      activation a = strat.script[st.script_pos++];
      bool ok = false;
      for (const auto& e : enabled) ok = ok || e == a;
      if (!ok)
        throw script_error("scripted pair (node " + std::to_string(a.first) +
                           ", family " + std::to_string(a.second) +
                           ") is not enabled at script position " +
                           std::to_string(st.script_pos - 1));
      return {a};
    }
  }
  throw error("unknown daemon kind");
}

}  // namespace detail

/// Drives an execution: queries the strategy on the current enabled set and
/// applies steps until the configuration is terminal, the script runs out,
/// or the step limit is hit (reported in the outcome, trace still returned).
inline execution_trace run(const forest_network& net, const algorithm& alg,
                           const configuration& init,
                           const daemon_strategy& strat,
                           const run_options& opts) {
  if (opts.step_limit <= 0) throw error("step limit must be positive");
  if (strat.kind == daemon_kind::random_distributed &&
      !(strat.activation_probability > 0.0))
    throw error("activation probability must be positive");
  validate_configuration(net, alg, init);

  execution_trace trace;
  trace.initial = init;
  trace.moves.assign(alg.family_count(), std::vector<long>(net.n, 0));

  detail::daemon_state st;
  st.rng.seed(strat.seed);

  configuration cfg = init;
  while (true) {
    auto enabled = enabled_set(net, alg, cfg);
    if (enabled.empty()) {
      trace.outcome = run_outcome::terminal;
      break;
    }
    if (static_cast<long>(trace.steps.size()) >= opts.step_limit) {
      trace.outcome = run_outcome::step_limit_exceeded;
      break;
    }
    bool script_done = false;
    auto selection = detail::select(strat, st, enabled, script_done);
    if (script_done) {
      trace.outcome = run_outcome::script_exhausted;
      break;
    }
    cfg = apply_step(net, alg, cfg, selection);
    for (auto [p, i] : selection) {
      ++trace.moves[i][p];
      ++trace.total_moves;
    }
    trace.steps.push_back({std::move(selection), cfg.digest()});
    if (opts.retain_configurations) trace.configs.push_back(cfg);
  }
  trace.final_cfg = cfg;

  auto rc = count_rounds(trace, net, alg);
  trace.rounds = rc.rounds;
  trace.round_boundaries = std::move(rc.boundaries);
  return trace;
}

/// Replays a script and, if the configuration it leaves is not terminal,
/// finishes the execution under the fallback strategy. The result is one
/// merged trace with rounds recounted across the seam.
inline execution_trace run_script_then_finish(const forest_network& net,
                                              const algorithm& alg,
                                              const configuration& init,
                                              std::vector<activation> script,
                                              const daemon_strategy& fallback,
                                              const run_options& opts) {
  execution_trace first =
      run(net, alg, init, daemon_strategy::scripted(std::move(script)), opts);
  if (first.outcome != run_outcome::script_exhausted) return first;

  run_options rest = opts;
  rest.step_limit = opts.step_limit - static_cast<long>(first.steps.size());
  if (rest.step_limit <= 0) {
    first.outcome = run_outcome::step_limit_exceeded;
    return first;
  }
  execution_trace second = run(net, alg, first.final_cfg, fallback, rest);

  execution_trace merged;
  merged.initial = first.initial;
  merged.final_cfg = second.final_cfg;
  merged.steps = std::move(first.steps);
  merged.steps.insert(merged.steps.end(), second.steps.begin(),
                      second.steps.end());
  merged.moves = std::move(first.moves);
  for (int i = 0; i < alg.family_count(); ++i)
    for (node_id p = 0; p < net.n; ++p) merged.moves[i][p] += second.moves[i][p];
  merged.total_moves = first.total_moves + second.total_moves;
  merged.outcome = second.outcome;
  if (opts.retain_configurations) {
    merged.configs = std::move(first.configs);
    merged.configs.insert(merged.configs.end(), second.configs.begin(),
                          second.configs.end());
  }
  auto rc = count_rounds(merged, net, alg);
  merged.rounds = rc.rounds;
  merged.round_boundaries = std::move(rc.boundaries);
  return merged;
}

// ---------------------------------------------------------------------------
// Exhaustive exploration of tiny instances
// ---------------------------------------------------------------------------

struct exhaustive_result {
  bool all_terminate = true;
  bool all_terminal_satisfy_predicate = true;  // vacuous without a predicate
  long longest_move_path = 0;  // max moves over executions from the domain
  std::size_t state_count = 0;
  std::size_t terminal_count = 0;
  std::vector<std::uint64_t> cycle_witness;  // digests along a reachable cycle
};

/// Builds the full transition graph over every configuration reachable from
/// the given per-name initial domains, branching over every legal daemon
/// selection. All executions are finite iff the graph is acyclic.
inline exhaustive_result explore_exhaustive(
    const forest_network& net, const algorithm& alg,
    const std::map<std::string, std::vector<value_t>>& init_domain,
    std::size_t max_states = 2'000'000) {
  for (int s = 0; s < alg.slot_count(); ++s)
    if (!alg.is_const_slot(s) && !init_domain.count(alg.slot_names()[s]))
      throw validation_error("initial domain missing for " +
                             alg.slot_names()[s]);

  // Multi-radix counter over (node, writable slot) cells.
  std::vector<std::pair<node_id, int>> cells;
  for (node_id p = 0; p < net.n; ++p)
    for (int s = 0; s < alg.slot_count(); ++s)
      if (!alg.is_const_slot(s)) cells.emplace_back(p, s);

  struct cfg_hash {
    std::size_t operator()(const configuration& c) const { return c.digest(); }
  };
  std::unordered_map<configuration, int, cfg_hash> index;
  std::vector<configuration> states;
  std::deque<int> frontier;

  auto intern = [&](const configuration& c) {
    auto [it, fresh] = index.emplace(c, static_cast<int>(states.size()));
    if (fresh) {
      states.push_back(c);
      frontier.push_back(it->second);
      if (states.size() > max_states)
        throw error("state budget exceeded during exhaustive exploration");
    }
    return it->second;
  };

  {
    configuration cfg = make_configuration(net, alg);
    std::vector<std::size_t> idx(cells.size(), 0);
    while (true) {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        const auto& dom = init_domain.at(alg.slot_names()[cells[c].second]);
        cfg.set(cells[c].first, cells[c].second, dom[idx[c]]);
      }
      intern(cfg);
      std::size_t c = 0;
      for (; c < cells.size(); ++c) {
        const auto& dom = init_domain.at(alg.slot_names()[cells[c].second]);
        if (++idx[c] < dom.size()) break;
        idx[c] = 0;
      }
      if (c == cells.size()) break;
    }
  }
  const std::size_t initial_count = states.size();

  exhaustive_result res;
  std::vector<std::vector<std::pair<int, int>>> succ;  // (target, move count)

  while (!frontier.empty()) {
    int id = frontier.front();
    frontier.pop_front();
    configuration cfg = states[id];
    auto groups = detail::group_by_node(enabled_set(net, alg, cfg));
    std::vector<std::pair<int, int>> edges;
    if (groups.empty()) {
      ++res.terminal_count;
      if (alg.legitimacy() && !alg.legitimacy()(net, alg, cfg))
        res.all_terminal_satisfy_predicate = false;
    } else {
      // Choice per enabled node: one of its enabled families, or absence.
      std::size_t combos = 1;
      for (const auto& g : groups) {
        combos *= g.second.size() + 1;
        if (combos > (1u << 22))
          throw error("selection fan-out too large for exhaustive exploration");
      }
      std::vector<std::size_t> choice(groups.size(), 0);
      while (true) {
        std::vector<activation> sel;
        for (std::size_t g = 0; g < groups.size(); ++g)
          if (choice[g] > 0)
            sel.emplace_back(groups[g].first, groups[g].second[choice[g] - 1]);
        if (!sel.empty()) {
          int tid = intern(apply_step(net, alg, cfg, sel));
          edges.emplace_back(tid, static_cast<int>(sel.size()));
        }
        std::size_t g = 0;
        for (; g < groups.size(); ++g) {
          if (++choice[g] <= groups[g].second.size()) break;
          choice[g] = 0;
        }
        if (g == groups.size()) break;
      }
    }
    if (succ.size() < states.size()) succ.resize(states.size());
    succ[id] = std::move(edges);
  }
  succ.resize(states.size());
  res.state_count = states.size();

  // Cycle detection: iterative three-color DFS over the reached graph.
  enum : char { white, grey, black };
  std::vector<char> color(states.size(), white);
  std::vector<int> parent_of(states.size(), -1);
  for (std::size_t root = 0; root < states.size(); ++root) {
    if (color[root] != white) continue;
    std::vector<std::pair<int, std::size_t>> stack{{static_cast<int>(root), 0}};
    color[root] = grey;
    while (!stack.empty()) {
      auto& [u, next_edge] = stack.back();
      if (next_edge < succ[u].size()) {
        int v = succ[u][next_edge++].first;
        if (color[v] == white) {
          color[v] = grey;
          parent_of[v] = u;
          stack.push_back({v, 0});
        } else if (color[v] == grey) {
          res.all_terminate = false;
          res.cycle_witness.clear();
          for (int w = u; w != -1 && res.cycle_witness.size() < 64;
               w = parent_of[w]) {
            res.cycle_witness.push_back(states[w].digest());
            if (w == v) break;
          }
          return res;
        }
      } else {
        color[u] = black;
        stack.pop_back();
      }
    }
  }

  // Longest path by moves over the DAG, maximised over initial states.
  std::vector<long> longest(states.size(), -1);
  for (std::size_t i = 0; i < initial_count; ++i) {
    // Memoized DFS in explicit post-order.
    std::vector<std::pair<int, std::size_t>> stack{{static_cast<int>(i), 0}};
    while (!stack.empty()) {
      auto& [u, next_edge] = stack.back();
      if (longest[u] >= 0) {
        stack.pop_back();
        continue;
      }
      if (next_edge < succ[u].size()) {
        int v = succ[u][next_edge++].first;
        if (longest[v] < 0) stack.push_back({v, 0});
      } else {
        long best = 0;
        for (auto [v, w] : succ[u]) best = std::max(best, longest[v] + w);
        longest[u] = best;
        stack.pop_back();
      }
    }
    res.longest_move_path = std::max(res.longest_move_path, longest[i]);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Instance generation
// ---------------------------------------------------------------------------

enum class tree_shape { line, star, random_tree };

inline std::optional<tree_shape> shape_from_name(std::string_view s) {
  if (s == "line") return tree_shape::line;
  if (s == "star") return tree_shape::star;
  if (s == "random-tree") return tree_shape::random_tree;
  return std::nullopt;
}

/// Tree of the requested shape with all declared constants set to `value`.
/// Lines are rooted at node 0 with parents pointing toward it; stars are
/// rooted at the center.
inline forest_network shaped_network(const algorithm& alg, tree_shape shape,
                                     int n, std::uint64_t seed = 0,
                                     value_t const_value = 1) {
  if (n < 1) throw validation_error("network needs at least one node");
  raw_network raw;
  raw.n = n;
  raw.parent.assign(n, std::nullopt);
  raw.consts.assign(n, {});
  std::mt19937_64 rng(seed);
  for (node_id p = 1; p < n; ++p) {
    node_id q = 0;
    switch (shape) {
      case tree_shape::line: q = p - 1; break;
      case tree_shape::star: q = 0; break;
      case tree_shape::random_tree: q = static_cast<node_id>(rng() % p); break;
    }
    raw.edges.emplace_back(q, p);
    raw.parent[p] = q;
  }
  for (node_id p = 0; p < n; ++p)
    for (const auto& name : alg.schema().const_names)
      raw.consts[p][name] = const_value;
  return validate_network(raw);
}

/// Deterministic random instance: shaped network whose constants and
/// writables are drawn uniformly from [0, bound] (finite domains from their
/// value lists). Identical seeds give identical output.
inline std::pair<forest_network, configuration> random_instance(
    const algorithm& alg, std::uint64_t seed, int n, tree_shape shape,
    value_t bound) {
  std::mt19937_64 rng(seed);
  forest_network net = shaped_network(alg, shape, n, rng());
  for (node_id p = 0; p < n; ++p)
    for (const auto& name : alg.schema().const_names)
      net.consts[p][name] = static_cast<value_t>(rng() % (bound + 1));
  configuration cfg = random_configuration(net, alg, rng, bound);
  return {net, cfg};
}

}  // namespace treestab
