#pragma once

#include <map>
#include <string>
#include <vector>

#include "treestab/core.hpp"
#include "treestab/daemon.hpp"

namespace treestab {

// ---------------------------------------------------------------------------
// TE: sums a constant input over a tree (family S, bottom-up) and spreads
// the root's total everywhere (family R, top-down).
// ---------------------------------------------------------------------------

inline value_t global_input_sum(const forest_network& net, const algorithm& alg,
                                const configuration& cfg) {
  value_t sum = 0;
  int slot = alg.slot("input");
  for (node_id p = 0; p < net.n; ++p) sum = checked_add(sum, cfg.get(p, slot));
  return sum;
}

/// Every node's res equals the sum of every input in the tree.
inline bool te_legitimacy(const forest_network& net, const algorithm& alg,
                          const configuration& cfg) {
  value_t want = global_input_sum(net, alg, cfg);
  int slot = alg.slot("res");
  for (node_id p = 0; p < net.n; ++p)
    if (cfg.get(p, slot) != want) return false;
  return true;
}

inline algorithm make_te() {
  variable_schema schema;
  schema.const_names = {"input"};
  schema.var_names = {"sub", "res"};
  schema.family_vars = {{"sub"}, {"res"}};
  schema.domains["input"] = value_domain::integer();
  schema.domains["sub"] = value_domain::integer();
  schema.domains["res"] = value_domain::integer();

  family_spec s;
  s.label = "S";
  s.reads = {{relation::self, "sub"},
             {relation::children, "sub"},
             {relation::self, "input"}};
  s.guard = [](const local_view& v) {
    return v.self("sub") != checked_add(v.sum_children("sub"), v.self("input"));
  };
  s.statement = [](const local_view& v) {
    return std::vector<value_t>{
        checked_add(v.sum_children("sub"), v.self("input"))};
  };

  family_spec r;
  r.label = "R";
  r.reads = {{relation::self, "res"},
             {relation::parent, "res"},
             {relation::self, "sub"}};
  auto r_target = [](const local_view& v) {
    return v.is_root() ? v.self("sub")
                       : std::max(v.parent("res"), v.self("sub"));
  };
  r.guard = [r_target](const local_view& v) {
    return v.self("res") != r_target(v);
  };
  r.statement = [r_target](const local_view& v) {
    return std::vector<value_t>{r_target(v)};
  };

  return algorithm(std::move(schema), {std::move(s), std::move(r)},
                   te_legitimacy);
}

// ---------------------------------------------------------------------------
// NOLP: counts the odd-level nodes of a tree. Family C 2-colors the tree by
// level parity (top-down), family S sums colors over subtrees (bottom-up),
// family R propagates the root's count (top-down).
// ---------------------------------------------------------------------------

/// Every node's Res equals the number of odd-level nodes.
inline bool nolp_legitimacy(const forest_network& net, const algorithm& alg,
                            const configuration& cfg) {
  value_t want = 0;
  for (node_id p = 0; p < net.n; ++p)
    if (net.level_of[p] % 2 == 1) ++want;
  int slot = alg.slot("Res");
  for (node_id p = 0; p < net.n; ++p)
    if (cfg.get(p, slot) != want) return false;
  return true;
}

inline algorithm make_nolp() {
  variable_schema schema;
  schema.const_names = {};
  schema.var_names = {"Clr", "Sub", "Res"};
  schema.family_vars = {{"Clr"}, {"Sub"}, {"Res"}};
  schema.domains["Clr"] = value_domain::enumeration({0, 1});
  schema.domains["Sub"] = value_domain::integer();
  schema.domains["Res"] = value_domain::integer();

  family_spec c;
  c.label = "C";
  c.reads = {{relation::self, "Clr"}, {relation::parent, "Clr"}};
  auto c_target = [](const local_view& v) {
    return v.is_root() ? value_t{0} : (v.parent("Clr") + 1) % 2;
  };
  c.guard = [c_target](const local_view& v) {
    return v.self("Clr") != c_target(v);
  };
  c.statement = [c_target](const local_view& v) {
    return std::vector<value_t>{c_target(v)};
  };

  family_spec s;
  s.label = "S";
  s.reads = {{relation::self, "Sub"},
             {relation::children, "Sub"},
             {relation::self, "Clr"}};
  auto s_target = [](const local_view& v) {
    return checked_add(v.sum_children("Sub"), v.self("Clr"));
  };
  s.guard = [s_target](const local_view& v) {
    return v.self("Sub") != s_target(v);
  };
  s.statement = [s_target](const local_view& v) {
    return std::vector<value_t>{s_target(v)};
  };

  family_spec r;
  r.label = "R";
  r.reads = {{relation::self, "Res"},
             {relation::parent, "Res"},
             {relation::self, "Sub"}};
  auto r_target = [](const local_view& v) {
    return v.is_root() ? v.self("Sub") : v.parent("Res");
  };
  r.guard = [r_target](const local_view& v) {
    return v.self("Res") != r_target(v);
  };
  r.statement = [r_target](const local_view& v) {
    return std::vector<value_t>{r_target(v)};
  };

  return algorithm(std::move(schema), {std::move(c), std::move(s), std::move(r)},
                   nolp_legitimacy);
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

inline const std::map<std::string, algorithm (*)()>& algorithm_registry() {
  static const std::map<std::string, algorithm (*)()> reg = {
      {"te", &make_te},
      {"nolp", &make_nolp},
  };
  return reg;
}

inline algorithm make_algorithm(const std::string& name) {
  auto it = algorithm_registry().find(name);
  if (it == algorithm_registry().end())
    throw validation_error("unknown algorithm: " + name +
                           " (known: te, nolp)");
  return it->second();
}

// ---------------------------------------------------------------------------
// Scripted worst-case instances for TE
// ---------------------------------------------------------------------------

/// A network, an initial configuration and a central-daemon schedule, ready
/// to replay.
struct scripted_instance {
  forest_network net;
  configuration init;
  std::vector<activation> script;
};

namespace te_worstcase {

// TE family indices.
inline constexpr int fam_s = 0;
inline constexpr int fam_r = 1;

/// Checkpoint configurations of the long line execution. The line has all
/// inputs 1 and nodes p_1..p_n (0-based ids j-1); checkpoints come in two
/// alternating shapes indexed by m, with both rows constant beyond the
/// active prefix except for a trailing even/odd pattern:
///   shape X (m odd):  sub = m-j for j < m, 0 at j = m;
///   shape Y (m even): sub = 2m-2-j for j < m;
///   both:             sub = j-2 on even j > m and on j = m in shape Y,
///                     0 on odd j > m,
///   res: X holds m-1 on j <= m-1; Y holds 2m-3 on j <= m-1; 0 beyond.
inline value_t checkpoint_sub(int m, int j) {
  bool x_shape = m % 2 == 1;
  if (x_shape && j < m) return m - j;
  if (x_shape && j == m) return 0;
  if (!x_shape && j < m) return 2 * m - 2 - j;
  return j % 2 == 0 ? j - 2 : 0;
}

inline value_t checkpoint_res(int m, int j) {
  if (j > m - 1) return 0;
  return m % 2 == 1 ? m - 1 : 2 * m - 3;
}

inline configuration checkpoint(const forest_network& net, const algorithm& te,
                                int m) {
  configuration cfg = make_configuration(net, te);
  int sub = te.slot("sub"), res = te.slot("res");
  for (int j = 1; j <= net.n; ++j) {
    cfg.set(j - 1, sub, checkpoint_sub(m, j));
    cfg.set(j - 1, res, checkpoint_res(m, j));
  }
  return cfg;
}

}  // namespace te_worstcase

/// Directed line p_1..p_n (ids 0..n-1, parents toward p_1, inputs 1) with
/// the initial checkpoint for m = 3 and the full back-and-forth central
/// schedule. Each scripted pair is enabled at its turn; the move total grows
/// cubically in n. The schedule ends at checkpoint n, which is not terminal.
inline scripted_instance te_line_worst_case(int n) {
  if (n < 4) throw validation_error("the line construction needs n >= 4");
  algorithm te = make_te();
  scripted_instance inst{shaped_network(te, tree_shape::line, n), {}, {}};
  inst.init = te_worstcase::checkpoint(inst.net, te, 3);

  using namespace te_worstcase;
  auto& script = inst.script;
  int m = 3;
  while (m + 1 <= n) {
    // X_m to Y_{m+1}: cascade an R sweep after each S, from p_m down.
    for (int j = m; j >= 1; --j) {
      script.emplace_back(j - 1, fam_s);
      for (int k = j; k <= m; ++k) script.emplace_back(k - 1, fam_r);
    }
    ++m;
    if (m + 1 > n) break;
    // Y_m to X_{m+1}: one S sweep down, then one R sweep up.
    for (int j = m; j >= 1; --j) script.emplace_back(j - 1, fam_s);
    for (int j = 1; j <= m; ++j) script.emplace_back(j - 1, fam_r);
    ++m;
  }
  return inst;
}

/// Star with root p_1 and leaves p_2..p_n, inputs 1, starting from the
/// first of the n sweep checkpoints (root sub 1, leaf subs 0, res 1
/// everywhere). The schedule runs n-1 sweeps; sweep i activates S at leaf
/// p_{i+1}, S and R at the root, then R at every leaf, reaching the next
/// checkpoint. The final checkpoint is terminal.
inline scripted_instance te_star_round_case(int n) {
  if (n < 2) throw validation_error("the star construction needs n >= 2");
  algorithm te = make_te();
  scripted_instance inst{shaped_network(te, tree_shape::star, n), {}, {}};

  int sub = te.slot("sub"), res = te.slot("res");
  inst.init = make_configuration(inst.net, te);
  inst.init.set(0, sub, 1);
  for (node_id p = 0; p < n; ++p) inst.init.set(p, res, 1);

  using namespace te_worstcase;
  for (int i = 1; i <= n - 1; ++i) {
    inst.script.emplace_back(i, fam_s);  // leaf p_{i+1} has id i
    inst.script.emplace_back(0, fam_s);
    inst.script.emplace_back(0, fam_r);
    for (int j = 1; j < n; ++j) inst.script.emplace_back(j, fam_r);
  }
  return inst;
}

/// Star checkpoint i (i in 1..n): root sub i, leaf subs 1 up to p_i then 0,
/// res i everywhere.
inline configuration te_star_checkpoint(const forest_network& net,
                                        const algorithm& te, int i) {
  configuration cfg = make_configuration(net, te);
  int sub = te.slot("sub"), res = te.slot("res");
  cfg.set(0, sub, i);
  for (int j = 2; j <= net.n; ++j) cfg.set(j - 1, sub, j <= i ? 1 : 0);
  for (node_id p = 0; p < net.n; ++p) cfg.set(p, res, i);
  return cfg;
}

}  // namespace treestab
