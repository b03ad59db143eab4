#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "treestab/treestab.hpp"

using namespace treestab;
using namespace treestab::testing;

TEST_CASE("classification of the built-in algorithms") {
  algorithm te = make_te();
  auto cls = classify(te);
  CHECK(cls.bottom_up[0]);   // S
  CHECK_FALSE(cls.top_down[0]);
  CHECK(cls.top_down[1]);    // R
  CHECK_FALSE(cls.bottom_up[1]);

  algorithm nolp = make_nolp();
  auto ncls = classify(nolp);
  CHECK(ncls.top_down[0]);   // C
  CHECK(ncls.bottom_up[1]);  // S
  CHECK(ncls.top_down[2]);   // R
  CHECK_FALSE(ncls.bottom_up[0]);
  CHECK_FALSE(ncls.top_down[1]);
  CHECK_FALSE(ncls.bottom_up[2]);
}

TEST_CASE("a family reading only itself carries both labels") {
  auto cls = classify(self_only_family());
  CHECK(cls.bottom_up[0]);
  CHECK(cls.top_down[0]);
}

TEST_CASE("classification is monotone over random declaration sets") {
  // Labels depend only on declarations; guards here never read at all.
  std::mt19937_64 rng(23);
  const relation rels[] = {relation::self, relation::parent,
                           relation::children, relation::other_neighbors};
  for (int trial = 0; trial < 200; ++trial) {
    variable_schema sc;
    sc.var_names = {"u", "v"};
    sc.family_vars = {{"u"}, {"v"}};
    sc.domains["u"] = value_domain::integer();
    sc.domains["v"] = value_domain::integer();
    auto mk = [&](std::vector<read_declaration> reads, const char* label) {
      family_spec f;
      f.label = label;
      f.reads = std::move(reads);
      f.guard = [](const local_view&) { return false; };
      f.statement = [](const local_view&) { return std::vector<value_t>{0}; };
      return f;
    };
    std::vector<read_declaration> reads;
    for (auto rel : rels)
      for (const auto* name : {"u", "v"})
        if (rng() & 1) reads.push_back({rel, name});
    if (reads.empty()) reads.push_back({relation::self, "u"});
    algorithm full(sc, {mk(reads, "A"), mk({{relation::self, "v"}}, "B")});

    auto narrowed = reads;
    narrowed.erase(narrowed.begin() + static_cast<long>(rng() % narrowed.size()));
    algorithm fewer(sc, {mk(narrowed, "A"), mk({{relation::self, "v"}}, "B")});

    auto before = classify(full);
    auto after = classify(fewer);
    CHECK(after.bottom_up[0] >= before.bottom_up[0]);
    CHECK(after.top_down[0] >= before.top_down[0]);
  }
}

TEST_CASE("classification is monotone under removing read declarations") {
  algorithm te = make_te();
  // Drop the children read of S: the label set can only grow.
  variable_schema sc = te.schema();
  family_spec s = te.family(0);
  s.reads = {{relation::self, "sub"}, {relation::self, "input"}};
  // Guard must stay within the narrowed declaration.
  s.guard = [](const local_view& v) { return v.self("sub") != v.self("input"); };
  s.statement = [](const local_view& v) {
    return std::vector<value_t>{v.self("input")};
  };
  algorithm narrowed(sc, {s, te.family(1)});
  auto before = classify(te);
  auto after = classify(narrowed);
  CHECK(after.bottom_up[0] >= before.bottom_up[0]);
  CHECK(after.top_down[0] >= before.top_down[0]);
  CHECK(after.top_down[0]);  // strictly gained the top-down label
}

TEST_CASE("causality graphs of the built-ins") {
  algorithm te = make_te();
  auto g = build_causality_graph(te);
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0] == std::pair<int, int>{0, 1});  // S -> R
  CHECK(g.height == 1);
  CHECK(g.max_in_degree == 1);
  CHECK(g.family_height == std::vector<int>{0, 1});
  CHECK(g.acyclic);

  algorithm nolp = make_nolp();
  auto ng = build_causality_graph(nolp);
  REQUIRE(ng.edges.size() == 2);
  CHECK(ng.edges[0] == std::pair<int, int>{0, 1});  // C -> S
  CHECK(ng.edges[1] == std::pair<int, int>{1, 2});  // S -> R
  CHECK(ng.height == 2);
  CHECK(ng.max_in_degree == 1);

  auto sg = build_causality_graph(self_only_family());
  CHECK(sg.edges.empty());
  CHECK(sg.height == 0);
  CHECK(sg.max_in_degree == 0);

  auto cg = build_causality_graph(mutual_readers());
  CHECK_FALSE(cg.acyclic);
  CHECK(cg.height == -1);
}

TEST_CASE("causality depends on declarations, not guard semantics") {
  algorithm te = make_te();
  // Same declarations, constant-false guards: identical graph.
  std::vector<family_spec> fams;
  for (int i = 0; i < te.family_count(); ++i) {
    family_spec f = te.family(i);
    f.guard = [](const local_view&) { return false; };
    f.statement = [](const local_view&) { return std::vector<value_t>{0}; };
    fams.push_back(f);
  }
  algorithm gutted(te.schema(), fams);
  auto a = build_causality_graph(te);
  auto b = build_causality_graph(gutted);
  CHECK(a.edges == b.edges);
  CHECK(a.family_height == b.family_height);
  CHECK(a.max_in_degree == b.max_in_degree);
}

TEST_CASE("impacting zones and depths on the 4-line") {
  auto net = te_line(4);
  SECTION("top-down zones are ancestor sets") {
    auto zone = impacting_zone(net, family_orientation::top_down, 2);
    std::sort(zone.begin(), zone.end());
    CHECK(zone == std::vector<node_id>{0, 1, 2});
    CHECK(zone.size() <= static_cast<std::size_t>(net.height) + 1);
  }
  SECTION("bottom-up zones are descendant sets") {
    CHECK(impacting_zone(net, family_orientation::bottom_up, 0).size() == 4);
    CHECK(impacting_zone(net, family_orientation::bottom_up, 3) ==
          std::vector<node_id>{3});
  }
  SECTION("depth is level or height by orientation") {
    CHECK(m_value(net, family_orientation::top_down, 0) == 0);
    CHECK(m_value(net, family_orientation::bottom_up, 3) == 0);
    CHECK(m_value(net, family_orientation::top_down, 3) == 3);
  }
  SECTION("unoriented families are rejected") {
    CHECK_THROWS_AS(impacting_zone(net, family_orientation::none, 0),
                    validation_error);
    CHECK_THROWS_AS(m_value(net, family_orientation::none, 0),
                    validation_error);
  }
}

TEST_CASE("zone partition identity over random trees") {
  algorithm te = make_te();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto net = shaped_network(te, tree_shape::random_tree,
                              2 + static_cast<int>(seed % 12), seed);
    for (node_id p = 0; p < net.n; ++p) {
      // Bottom-up: Z(p) = {p} plus the disjoint union of the children zones.
      std::size_t sum = 1;
      for (node_id c : net.children[p])
        sum += impacting_zone(net, family_orientation::bottom_up, c).size();
      CHECK(impacting_zone(net, family_orientation::bottom_up, p).size() == sum);
      // Top-down: Z(p) = {p} plus the parent zone below any non-root.
      if (!net.is_root(p)) {
        CHECK(impacting_zone(net, family_orientation::top_down, p).size() ==
              1 + impacting_zone(net, family_orientation::top_down,
                                 *net.parent[p])
                      .size());
      }
      // Size bounds for both orientations.
      for (auto o : {family_orientation::bottom_up, family_orientation::top_down}) {
        auto z = impacting_zone(net, o, p).size();
        CHECK(z >= 1);
        CHECK(z <= static_cast<std::size_t>(net.n));
        if (o == family_orientation::top_down)
          CHECK(z <= static_cast<std::size_t>(net.height) + 1);
      }
    }
  }
}

TEST_CASE("interfering-neighbor counts") {
  algorithm te = make_te();
  algorithm nolp = make_nolp();
  SECTION("the built-ins have none") {
    for (const auto* alg : {&te, &nolp})
      for (std::uint64_t seed = 0; seed < 6; ++seed) {
        auto net = shaped_network(*alg, tree_shape::random_tree, 7, seed);
        auto rep = analyze(net, *alg, {50, seed, 20});
        for (int i = 0; i < alg->family_count(); ++i)
          CHECK(rep.max_others[i] == 0);
      }
  }
  SECTION("other-neighbor reads of a foreign block are counted") {
    // Star graph with no tree edges: every node is its own root, so all five
    // leaves are other-neighbors of the center.
    variable_schema sc;
    sc.var_names = {"a", "b"};
    sc.family_vars = {{"a"}, {"b"}};
    sc.domains["a"] = value_domain::integer();
    sc.domains["b"] = value_domain::integer();
    family_spec fa;
    fa.label = "A";
    fa.reads = {{relation::self, "a"}};
    fa.guard = [](const local_view& v) { return v.self("a") != 0; };
    fa.statement = [](const local_view&) { return std::vector<value_t>{0}; };
    family_spec fb;
    fb.label = "B";
    fb.reads = {{relation::self, "b"}, {relation::other_neighbors, "a"}};
    fb.guard = [](const local_view& v) { return v.self("b") != 0; };
    fb.statement = [](const local_view&) { return std::vector<value_t>{0}; };
    algorithm alg(sc, {fa, fb});

    raw_network raw;
    raw.n = 6;
    raw.parent.assign(6, std::nullopt);
    for (node_id leaf = 1; leaf < 6; ++leaf) raw.edges.push_back({0, leaf});
    auto net = validate_network(raw);
    CHECK(others_count(net, alg, 0, 1) == 5);
    CHECK(others_count(net, alg, 0, 0) == 0);
    CHECK(others_count(net, alg, 1, 1) == 1);
  }
}

TEST_CASE("correct-alone property testing") {
  SECTION("TE families pass across random trees") {
    algorithm te = make_te();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto net = shaped_network(te, tree_shape::random_tree,
                                2 + static_cast<int>(seed % 9), seed);
      for (int fam = 0; fam < 2; ++fam) {
        auto r = test_correct_alone(net, te, fam, {1000, seed, 100, true});
        INFO("seed " << seed << " family " << fam);
        CHECK(r.pass);
      }
    }
  }
  SECTION("NOLP families pass") {
    algorithm nolp = make_nolp();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto net = shaped_network(nolp, tree_shape::random_tree,
                                2 + static_cast<int>(seed % 9), seed);
      for (int fam = 0; fam < 3; ++fam)
        CHECK(test_correct_alone(net, nolp, fam, {1000, seed, 100, true}).pass);
    }
  }
  SECTION("an incrementing family is caught immediately") {
    algorithm broken = broken_family();
    auto net = shaped_network(broken, tree_shape::line, 3);
    auto r = test_correct_alone(net, broken, 0, {100, 1, 50, true});
    REQUIRE_FALSE(r.pass);
    CHECK(r.executed_trials <= 1);
    REQUIRE(r.witness.has_value());
    // The witness re-executes to a still-enabled pair.
    auto after = apply_step(net, broken, r.witness->cfg,
                            std::vector<activation>{{r.witness->node, 0}});
    CHECK(is_enabled(net, broken, after, r.witness->node, 0));
  }
}

TEST_CASE("acyclic-strategy verdict") {
  SECTION("TE and NOLP qualify") {
    algorithm te = make_te();
    auto net = te_line(6);
    auto rep = analyze(net, te, {500, 3, 50});
    CHECK(rep.verdict);
    CHECK(rep.orientation[0] == family_orientation::bottom_up);
    CHECK(rep.orientation[1] == family_orientation::top_down);

    algorithm nolp = make_nolp();
    auto nnet = shaped_network(nolp, tree_shape::random_tree, 7, 5);
    CHECK(analyze(nnet, nolp, {500, 3, 50}).verdict);
  }
  SECTION("a causality cycle disqualifies but still reports") {
    algorithm alg = mutual_readers();
    auto net = shaped_network(alg, tree_shape::line, 2);
    auto rep = analyze(net, alg, {100, 3, 20});
    CHECK_FALSE(rep.verdict);
    CHECK_FALSE(rep.causality.acyclic);
    CHECK(rep.labels.bottom_up[0]);  // labels still computed
  }
  SECTION("a family with neither label disqualifies") {
    algorithm alg = flip_flop();
    auto net = shaped_network(alg, tree_shape::line, 2);
    auto rep = analyze(net, alg, {100, 3, 20});
    CHECK_FALSE(rep.verdict);
    CHECK(rep.orientation[0] == family_orientation::none);
    CHECK(rep.causality.acyclic);  // single family, no edges
  }
  SECTION("a self-only family orients top-down by preference") {
    algorithm alg = self_only_family();
    auto net = shaped_network(alg, tree_shape::line, 3);
    auto rep = analyze(net, alg, {200, 3, 20});
    CHECK(rep.verdict);
    CHECK(rep.orientation[0] == family_orientation::top_down);
  }
}
