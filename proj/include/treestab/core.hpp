#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace treestab {

using value_t = std::int64_t;
using node_id = int;

/// A (node, family) pair: family `second` of process `first`.
using activation = std::pair<node_id, int>;

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed network, schema, or configuration.
struct validation_error : error {
  using error::error;
};

/// A guard or statement touched a variable outside its declared reads.
struct read_violation : error {
  using error::error;
};

/// Illegal daemon selection passed to apply_step.
struct step_error : error {
  using error::error;
};

/// 64-bit signed arithmetic would wrap.
struct overflow_error : error {
  using error::error;
};

/// A scripted daemon reached a pair that is not enabled.
struct script_error : error {
  using error::error;
};

inline value_t checked_add(value_t a, value_t b) {
  value_t r;
  if (__builtin_add_overflow(a, b, &r))
    throw overflow_error("integer addition exceeds 64-bit range");
  return r;
}

inline value_t checked_mul(value_t a, value_t b) {
  value_t r;
  if (__builtin_mul_overflow(a, b, &r))
    throw overflow_error("integer multiplication exceeds 64-bit range");
  return r;
}

// ---------------------------------------------------------------------------
// Networks with a spanning forest
// ---------------------------------------------------------------------------

/// Raw network description as found in input files: nodes are 0..n-1,
/// edges are undirected pairs, each node has an optional parent and a
/// bag of named integer constants.
struct raw_network {
  int n = 0;
  std::vector<std::pair<node_id, node_id>> edges;
  std::vector<std::optional<node_id>> parent;
  std::vector<std::map<std::string, value_t>> consts;
};

/// Validated network: symmetric irreflexive adjacency plus parent/children
/// constants forming a spanning forest, with per-node levels and heights.
struct forest_network {
  int n = 0;
  std::vector<std::vector<node_id>> adjacency;
  std::vector<std::optional<node_id>> parent;
  std::vector<std::vector<node_id>> children;
  // Neighbors that are neither the parent nor children.
  std::vector<std::vector<node_id>> other_neighbors;
  std::vector<int> level_of;   // distance to the root of the node's tree
  std::vector<int> height_of;  // 0 for leaves
  std::vector<node_id> roots;
  int height = 0;      // H: max height over roots
  int max_degree = 0;  // Delta
  std::vector<std::map<std::string, value_t>> consts;

  bool is_root(node_id p) const { return !parent[p].has_value(); }
  bool is_leaf(node_id p) const { return children[p].empty(); }
  int degree(node_id p) const { return static_cast<int>(adjacency[p].size()); }

  /// p together with every node on the path from p to its root.
  std::vector<node_id> ancestors(node_id p) const {
    std::vector<node_id> out;
    node_id q = p;
    out.push_back(q);
    while (parent[q].has_value()) {
      q = *parent[q];
      out.push_back(q);
    }
    return out;
  }

  /// p together with every node of the subtree rooted at p.
  std::vector<node_id> descendants(node_id p) const {
    std::vector<node_id> out;
    std::vector<node_id> stack{p};
    while (!stack.empty()) {
      node_id q = stack.back();
      stack.pop_back();
      out.push_back(q);
      for (node_id c : children[q]) stack.push_back(c);
    }
    std::sort(out.begin(), out.end());
    return out;
  }
};

/// Checks the raw description and derives children, levels, heights, H and
/// Delta. Throws validation_error on self-loops, out-of-range ids, a parent
/// that is not a neighbor, or a cyclic parent relation.
inline forest_network validate_network(const raw_network& raw) {
  if (raw.n < 0) throw validation_error("negative node count");
  const int n = raw.n;
  if (static_cast<int>(raw.parent.size()) != n)
    throw validation_error("parent list size does not match node count");

  forest_network net;
  net.n = n;
  net.adjacency.assign(n, {});
  net.parent = raw.parent;
  net.children.assign(n, {});
  net.other_neighbors.assign(n, {});
  net.level_of.assign(n, 0);
  net.height_of.assign(n, 0);
  net.consts = raw.consts;
  net.consts.resize(n);

  std::set<std::pair<node_id, node_id>> seen;
  for (auto [a, b] : raw.edges) {
    if (a < 0 || a >= n || b < 0 || b >= n)
      throw validation_error("edge endpoint out of range");
    if (a == b) throw validation_error("adjacency must be irreflexive");
    auto key = std::minmax(a, b);
    if (!seen.insert(key).second) continue;
    net.adjacency[a].push_back(b);
    net.adjacency[b].push_back(a);
  }
  for (auto& adj : net.adjacency) std::sort(adj.begin(), adj.end());

  for (node_id p = 0; p < n; ++p) {
    if (!net.parent[p].has_value()) {
      net.roots.push_back(p);
      continue;
    }
    node_id q = *net.parent[p];
    if (q < 0 || q >= n) throw validation_error("parent id out of range");
    if (!std::binary_search(net.adjacency[p].begin(), net.adjacency[p].end(), q))
      throw validation_error("parent of node " + std::to_string(p) +
                             " is not a neighbor");
    net.children[q].push_back(p);
  }

  // Acyclicity and levels in one pass up the parent chain.
  std::vector<int> state(n, 0);  // 0 unvisited, 1 on path, 2 done
  for (node_id p = 0; p < n; ++p) {
    if (state[p] == 2) continue;
    std::vector<node_id> path;
    node_id q = p;
    while (true) {
      if (state[q] == 1) throw validation_error("parent relation cyclic");
      if (state[q] == 2) break;
      state[q] = 1;
      path.push_back(q);
      if (!net.parent[q].has_value()) break;
      q = *net.parent[q];
    }
    int base = net.parent[path.back()].has_value()
                   ? net.level_of[*net.parent[path.back()]] + 1
                   : 0;
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      net.level_of[*it] = base++;
      state[*it] = 2;
    }
  }

  // Heights bottom-up: process nodes by decreasing level.
  std::vector<node_id> order(n);
  for (node_id p = 0; p < n; ++p) order[p] = p;
  std::sort(order.begin(), order.end(), [&](node_id a, node_id b) {
    return net.level_of[a] > net.level_of[b];
  });
  for (node_id p : order) {
    int h = 0;
    for (node_id c : net.children[p]) h = std::max(h, net.height_of[c] + 1);
    net.height_of[p] = h;
  }
  for (node_id r : net.roots) net.height = std::max(net.height, net.height_of[r]);
  for (node_id p = 0; p < n; ++p) {
    net.max_degree = std::max(net.max_degree, net.degree(p));
    std::sort(net.children[p].begin(), net.children[p].end());
    for (node_id q : net.adjacency[p]) {
      bool is_parent = net.parent[p].has_value() && *net.parent[p] == q;
      bool is_child =
          std::binary_search(net.children[p].begin(), net.children[p].end(), q);
      if (!is_parent && !is_child) net.other_neighbors[p].push_back(q);
    }
  }
  return net;
}

// ---------------------------------------------------------------------------
// Variables, guarded-action families, algorithms
// ---------------------------------------------------------------------------

enum class relation { self, parent, children, other_neighbors };

inline std::string_view relation_name(relation r) {
  switch (r) {
    case relation::self: return "self";
    case relation::parent: return "parent";
    case relation::children: return "children";
    case relation::other_neighbors: return "other-neighbors";
  }
  return "?";
}

/// Declares that a family G-reads variable `name` of the nodes standing in
/// `rel` to the evaluating node.
struct read_declaration {
  relation rel;
  std::string name;
  friend auto operator<=>(const read_declaration&, const read_declaration&) = default;
};

/// Value domain of one variable name: either any signed 64-bit integer or a
/// small explicit enumeration.
struct value_domain {
  bool finite = false;
  std::vector<value_t> values;

  static value_domain integer() { return {}; }
  static value_domain enumeration(std::vector<value_t> vs) {
    return {true, std::move(vs)};
  }
  bool contains(value_t v) const {
    return !finite || std::find(values.begin(), values.end(), v) != values.end();
  }
};

/// Names and domains of all per-node variables. Writable names are
/// partitioned into one block per family.
struct variable_schema {
  std::vector<std::string> const_names;
  std::vector<std::string> var_names;
  std::vector<std::vector<std::string>> family_vars;  // block i = writes of family i
  std::map<std::string, value_domain> domains;
};

class local_view;

/// One family of guarded actions: every node holds the same action, writing
/// exactly the family's schema block. The statement returns one value per
/// written name, in block order, computed from the pre-step view.
struct family_spec {
  std::string label;
  std::vector<read_declaration> reads;
  std::function<bool(const local_view&)> guard;
  std::function<std::vector<value_t>(const local_view&)> statement;
};

class algorithm;
using legitimacy_fn =
    std::function<bool(const forest_network&, const algorithm&,
                       const class configuration&)>;

/// Total assignment of every name (constants and writables) of every node.
/// Plain value: node-major, slot-minor flat storage.
class configuration {
 public:
  configuration() = default;
  configuration(int n, int slots)
      : slots_(slots), values_(static_cast<std::size_t>(n) * slots, 0) {}

  value_t get(node_id p, int slot) const {
    return values_[static_cast<std::size_t>(p) * slots_ + slot];
  }
  void set(node_id p, int slot, value_t v) {
    values_[static_cast<std::size_t>(p) * slots_ + slot] = v;
  }
  int slot_stride() const { return slots_; }
  const std::vector<value_t>& raw() const { return values_; }

  /// Stable 64-bit FNV-1a digest of the flat value vector.
  std::uint64_t digest() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t x) {
      for (int i = 0; i < 8; ++i) {
        h ^= (x >> (8 * i)) & 0xff;
        h *= 1099511628211ull;
      }
    };
    mix(static_cast<std::uint64_t>(slots_));
    for (value_t v : values_) mix(static_cast<std::uint64_t>(v));
    return h;
  }

  friend bool operator==(const configuration&, const configuration&) = default;

 private:
  int slots_ = 0;
  std::vector<value_t> values_;
};

/// A validated algorithm: schema, ordered families, optional legitimacy
/// predicate, plus the derived slot layout and per-family read permissions.
/// Immutable after construction; safe to share across threads.
class algorithm {
 public:
  algorithm(variable_schema schema, std::vector<family_spec> families,
            legitimacy_fn legitimacy = nullptr)
      : schema_(std::move(schema)),
        families_(std::move(families)),
        legitimacy_(std::move(legitimacy)) {
    validate();
  }

  const variable_schema& schema() const { return schema_; }
  int family_count() const { return static_cast<int>(families_.size()); }
  const family_spec& family(int i) const { return families_[i]; }
  const legitimacy_fn& legitimacy() const { return legitimacy_; }

  int slot_count() const { return static_cast<int>(slot_names_.size()); }
  const std::vector<std::string>& slot_names() const { return slot_names_; }
  bool is_const_slot(int s) const { return s < const_count_; }

  int slot(std::string_view name) const {
    auto it = slot_index_.find(std::string(name));
    if (it == slot_index_.end())
      throw validation_error("unknown variable name: " + std::string(name));
    return it->second;
  }
  bool has_name(std::string_view name) const {
    return slot_index_.count(std::string(name)) != 0;
  }
  const value_domain& domain_of(int slot) const { return slot_domains_[slot]; }

  /// Slots written by family i (its schema block).
  const std::vector<int>& write_slots(int i) const { return write_slots_[i]; }
  /// Family writing a given writable slot, or -1 for constants.
  int writer_of(int slot) const { return writer_of_[slot]; }
  bool may_read(int fam, relation rel, int slot) const {
    return read_allowed_[fam][static_cast<int>(rel)][slot];
  }

 private:
  void validate() {
    const auto& sc = schema_;
    for (const auto& name : sc.const_names) register_slot(name, true);
    const_count_ = static_cast<int>(slot_names_.size());
    for (const auto& name : sc.var_names) register_slot(name, false);

    if (sc.family_vars.size() != families_.size())
      throw validation_error("family count does not match the schema partition");
    writer_of_.assign(slot_count(), -1);
    write_slots_.resize(families_.size());
    std::set<std::string> covered;
    for (std::size_t i = 0; i < families_.size(); ++i) {
      for (const auto& name : sc.family_vars[i]) {
        int s = slot(name);
        if (is_const_slot(s))
          throw validation_error("constant name in a family block: " + name);
        if (!covered.insert(name).second)
          throw validation_error("partition blocks overlap on: " + name);
        writer_of_[s] = static_cast<int>(i);
        write_slots_[i].push_back(s);
      }
      if (!families_[i].guard || !families_[i].statement)
        throw validation_error("family " + families_[i].label +
                               " is missing a guard or statement");
    }
    if (covered.size() != sc.var_names.size())
      throw validation_error("partition blocks do not cover every writable name");

    read_allowed_.assign(families_.size(),
                         {std::vector<bool>(slot_count(), false),
                          std::vector<bool>(slot_count(), false),
                          std::vector<bool>(slot_count(), false),
                          std::vector<bool>(slot_count(), false)});
    for (std::size_t i = 0; i < families_.size(); ++i)
      for (const auto& rd : families_[i].reads)
        read_allowed_[i][static_cast<int>(rd.rel)][slot(rd.name)] = true;
  }

  void register_slot(const std::string& name, bool is_const) {
    if (!slot_index_.emplace(name, static_cast<int>(slot_names_.size())).second)
      throw validation_error("duplicate variable name: " + name);
    auto it = schema_.domains.find(name);
    slot_domains_.push_back(it == schema_.domains.end() ? value_domain::integer()
                                                        : it->second);
    slot_names_.push_back(name);
    (void)is_const;
  }

  variable_schema schema_;
  std::vector<family_spec> families_;
  legitimacy_fn legitimacy_;
  std::vector<std::string> slot_names_;
  std::map<std::string, int> slot_index_;
  std::vector<value_domain> slot_domains_;
  int const_count_ = 0;
  std::vector<std::vector<int>> write_slots_;
  std::vector<int> writer_of_;
  std::vector<std::array<std::vector<bool>, 4>> read_allowed_;
};

/// Fresh configuration with constants taken from the network (absent
/// constants default to 0) and all writables 0.
inline configuration make_configuration(const forest_network& net,
                                        const algorithm& alg) {
  configuration cfg(net.n, alg.slot_count());
  for (node_id p = 0; p < net.n; ++p)
    for (const auto& [name, v] : net.consts[p])
      if (alg.has_name(name)) {
        int s = alg.slot(name);
        if (!alg.is_const_slot(s))
          throw validation_error("network supplies a value for writable name: " +
                                 name);
        cfg.set(p, s, v);
      }
  return cfg;
}

/// Every value in its domain, constants equal to the network-supplied ones.
inline void validate_configuration(const forest_network& net,
                                   const algorithm& alg,
                                   const configuration& cfg) {
  if (cfg.slot_stride() != alg.slot_count() ||
      cfg.raw().size() != static_cast<std::size_t>(net.n) * alg.slot_count())
    throw validation_error("configuration shape does not match network/schema");
  for (node_id p = 0; p < net.n; ++p) {
    for (int s = 0; s < alg.slot_count(); ++s)
      if (!alg.domain_of(s).contains(cfg.get(p, s)))
        throw validation_error("value of " + alg.slot_names()[s] + " at node " +
                               std::to_string(p) + " is outside its domain");
    for (const auto& [name, v] : net.consts[p])
      if (alg.has_name(name) && cfg.get(p, alg.slot(name)) != v)
        throw validation_error("constant " + name + " at node " +
                               std::to_string(p) +
                               " differs from the network value");
  }
}

// ---------------------------------------------------------------------------
// Local views and step semantics
// ---------------------------------------------------------------------------

/// Read-only window a guard or statement gets: the evaluating node, its
/// parent, children and other neighbors, restricted to the family's declared
/// reads. Out-of-declaration access throws read_violation instead of
/// defaulting. Structural facts (degree, child count, root/leaf) are always
/// available.
class local_view {
 public:
  local_view(const forest_network& net, const algorithm& alg,
             const configuration& cfg, node_id p, int fam)
      : net_(net), alg_(alg), cfg_(cfg), node_(p), fam_(fam) {}

  bool is_root() const { return net_.is_root(node_); }
  bool is_leaf() const { return net_.is_leaf(node_); }
  int degree() const { return net_.degree(node_); }
  int child_count() const {
    return static_cast<int>(net_.children[node_].size());
  }
  int other_neighbor_count() const {
    return static_cast<int>(net_.other_neighbors[node_].size());
  }

  value_t self(std::string_view name) const {
    return read(relation::self, node_, name);
  }
  value_t parent(std::string_view name) const {
    if (!net_.parent[node_].has_value())
      throw read_violation("parent read at a root node");
    return read(relation::parent, *net_.parent[node_], name);
  }
  value_t child(int idx, std::string_view name) const {
    return read(relation::children, net_.children[node_].at(idx), name);
  }
  value_t other_neighbor(int idx, std::string_view name) const {
    return read(relation::other_neighbors, net_.other_neighbors[node_].at(idx),
                name);
  }
  /// Overflow-checked sum of one name over all children.
  value_t sum_children(std::string_view name) const {
    value_t acc = 0;
    for (int i = 0; i < child_count(); ++i) acc = checked_add(acc, child(i, name));
    return acc;
  }

  node_id node() const { return node_; }

 private:
  value_t read(relation rel, node_id q, std::string_view name) const {
    int s = alg_.slot(name);
    if (!alg_.may_read(fam_, rel, s))
      throw read_violation("family " + alg_.family(fam_).label +
                           " reads undeclared variable " + std::string(name) +
                           " at relation " + std::string(relation_name(rel)));
    return cfg_.get(q, s);
  }

  const forest_network& net_;
  const algorithm& alg_;
  const configuration& cfg_;
  node_id node_;
  int fam_;
};

/// Uniform random configuration: constants from the network, finite-domain
/// writables uniform over their value lists, integer writables uniform in
/// [0, bound].
inline configuration random_configuration(const forest_network& net,
                                          const algorithm& alg,
                                          std::mt19937_64& rng,
                                          value_t bound) {
  configuration cfg = make_configuration(net, alg);
  for (node_id p = 0; p < net.n; ++p)
    for (int s = 0; s < alg.slot_count(); ++s) {
      if (alg.is_const_slot(s)) continue;
      const auto& dom = alg.domain_of(s);
      if (dom.finite)
        cfg.set(p, s, dom.values[rng() % dom.values.size()]);
      else
        cfg.set(p, s, static_cast<value_t>(rng() % (bound + 1)));
    }
  return cfg;
}

inline bool is_enabled(const forest_network& net, const algorithm& alg,
                       const configuration& cfg, node_id p, int fam) {
  local_view view(net, alg, cfg, p, fam);
  return alg.family(fam).guard(view);
}

/// All (node, family) pairs whose guard holds, sorted by node then family.
inline std::vector<activation> enabled_set(const forest_network& net,
                                           const algorithm& alg,
                                           const configuration& cfg) {
  std::vector<activation> out;
  for (node_id p = 0; p < net.n; ++p)
    for (int i = 0; i < alg.family_count(); ++i)
      if (is_enabled(net, alg, cfg, p, i)) out.emplace_back(p, i);
  return out;
}

inline bool is_terminal(const forest_network& net, const algorithm& alg,
                        const configuration& cfg) {
  for (node_id p = 0; p < net.n; ++p)
    for (int i = 0; i < alg.family_count(); ++i)
      if (is_enabled(net, alg, cfg, p, i)) return false;
  return true;
}

/// One atomic step: every selected pair executes its statement against the
/// pre-step configuration (composite atomicity — all reads precede all
/// writes), everything else is untouched. The selection must be non-empty,
/// select at most one family per node, and select only enabled pairs.
inline configuration apply_step(const forest_network& net, const algorithm& alg,
                                const configuration& cfg,
                                std::span<const activation> selection) {
  if (selection.empty()) throw step_error("empty selection");
  std::set<node_id> nodes;
  for (auto [p, i] : selection) {
    if (p < 0 || p >= net.n || i < 0 || i >= alg.family_count())
      throw step_error("selection out of range");
    if (!nodes.insert(p).second)
      throw step_error("two families selected at node " + std::to_string(p));
  }
  struct pending_write {
    node_id p;
    int fam;
    std::vector<value_t> values;
  };
  std::vector<pending_write> writes;
  writes.reserve(selection.size());
  for (auto [p, i] : selection) {
    local_view view(net, alg, cfg, p, i);
    if (!alg.family(i).guard(view))
      throw step_error("selected pair (" + std::to_string(p) + ", " +
                       alg.family(i).label + ") is not enabled");
    auto vals = alg.family(i).statement(view);
    const auto& slots = alg.write_slots(i);
    if (vals.size() != slots.size())
      throw validation_error("statement of " + alg.family(i).label +
                             " did not assign every variable of its block");
    for (std::size_t j = 0; j < slots.size(); ++j)
      if (!alg.domain_of(slots[j]).contains(vals[j]))
        throw validation_error("statement of " + alg.family(i).label +
                               " wrote a value outside the domain of " +
                               alg.slot_names()[slots[j]]);
    writes.push_back({p, i, std::move(vals)});
  }
  configuration next = cfg;
  for (const auto& w : writes) {
    const auto& slots = alg.write_slots(w.fam);
    for (std::size_t j = 0; j < slots.size(); ++j)
      next.set(w.p, slots[j], w.values[j]);
  }
  return next;
}

}  // namespace treestab
