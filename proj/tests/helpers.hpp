#pragma once

#include "treestab/treestab.hpp"

namespace treestab::testing {

/// Line p_1..p_n (ids 0..n-1) rooted at 0, every "input" constant 1.
inline forest_network te_line(int n) {
  return shaped_network(make_te(), tree_shape::line, n);
}

inline forest_network te_star(int n) {
  return shaped_network(make_te(), tree_shape::star, n);
}

/// Single family that is never disabled: x <- x + 1 under a true guard.
inline algorithm broken_family() {
  variable_schema sc;
  sc.var_names = {"x"};
  sc.family_vars = {{"x"}};
  sc.domains["x"] = value_domain::integer();
  family_spec f;
  f.label = "B";
  f.reads = {{relation::self, "x"}};
  f.guard = [](const local_view&) { return true; };
  f.statement = [](const local_view& v) {
    return std::vector<value_t>{checked_add(v.self("x"), 1)};
  };
  return algorithm(sc, {f});
}

/// Two-node livelock: the root copies its child's bit whenever they differ,
/// the child flips its parent's bit whenever they agree. Exactly one node is
/// enabled in every configuration, so the unique execution cycles forever.
inline algorithm flip_flop() {
  variable_schema sc;
  sc.var_names = {"x"};
  sc.family_vars = {{"x"}};
  sc.domains["x"] = value_domain::enumeration({0, 1});
  family_spec f;
  f.label = "F";
  f.reads = {{relation::self, "x"},
             {relation::parent, "x"},
             {relation::children, "x"}};
  f.guard = [](const local_view& v) {
    return v.is_root() ? v.self("x") != v.child(0, "x")
                       : v.self("x") == v.parent("x");
  };
  f.statement = [](const local_view& v) {
    return std::vector<value_t>{v.is_root() ? v.child(0, "x")
                                            : 1 - v.parent("x")};
  };
  return algorithm(sc, {f});
}

/// One family whose reads are all at the self relation.
inline algorithm self_only_family() {
  variable_schema sc;
  sc.var_names = {"x"};
  sc.family_vars = {{"x"}};
  sc.domains["x"] = value_domain::integer();
  family_spec f;
  f.label = "A";
  f.reads = {{relation::self, "x"}};
  f.guard = [](const local_view& v) { return v.self("x") != 0; };
  f.statement = [](const local_view&) { return std::vector<value_t>{0}; };
  return algorithm(sc, {f});
}

/// Two families reading each other's variable: a causality 2-cycle.
inline algorithm mutual_readers() {
  variable_schema sc;
  sc.var_names = {"a", "b"};
  sc.family_vars = {{"a"}, {"b"}};
  sc.domains["a"] = value_domain::integer();
  sc.domains["b"] = value_domain::integer();
  family_spec fa;
  fa.label = "A";
  fa.reads = {{relation::self, "a"}, {relation::self, "b"}};
  fa.guard = [](const local_view& v) { return v.self("a") != v.self("b"); };
  fa.statement = [](const local_view& v) {
    return std::vector<value_t>{v.self("b")};
  };
  family_spec fb;
  fb.label = "B";
  fb.reads = {{relation::self, "b"}, {relation::self, "a"}};
  fb.guard = [](const local_view& v) { return v.self("b") != v.self("a") + 1; };
  fb.statement = [](const local_view& v) {
    return std::vector<value_t>{v.self("a") + 1};
  };
  return algorithm(sc, {fa, fb});
}

}  // namespace treestab::testing
