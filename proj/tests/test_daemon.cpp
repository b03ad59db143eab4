#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "treestab/treestab.hpp"

using namespace treestab;
using namespace treestab::testing;

namespace {

// Independent round oracle: a literal, quadratic transcription of the
// definition. From each round start, scan forward for the minimal prefix in
// which every initially enabled process has been activated or neutralized.
round_count oracle_rounds(const execution_trace& trace,
                          const forest_network& net, const algorithm& alg) {
  std::vector<configuration> cfgs{trace.initial};
  for (const auto& step : trace.steps)
    cfgs.push_back(apply_step(net, alg, cfgs.back(), step.selection));

  auto enabled_proc = [&](const configuration& c, node_id p) {
    for (int i = 0; i < alg.family_count(); ++i)
      if (is_enabled(net, alg, c, p, i)) return true;
    return false;
  };
  auto activated = [&](std::size_t s, node_id p) {
    for (auto [q, i] : trace.steps[s].selection)
      if (q == p) return true;
    return false;
  };

  round_count rc;
  std::size_t start = 0;
  while (start < trace.steps.size()) {
    std::vector<node_id> pending;
    for (node_id p = 0; p < net.n; ++p)
      if (enabled_proc(cfgs[start], p)) pending.push_back(p);
    std::size_t end = start;
    bool closed = false;
    for (; end < trace.steps.size() && !closed; ++end) {
      closed = true;
      for (node_id p : pending) {
        bool done = false;
        for (std::size_t s = start; s <= end && !done; ++s) {
          if (activated(s, p)) done = true;
          else if (enabled_proc(cfgs[s], p) && !enabled_proc(cfgs[s + 1], p))
            done = true;  // neutralized at step s
        }
        if (!done) {
          closed = false;
          break;
        }
      }
    }
    ++rc.rounds;
    rc.boundaries.push_back(end - 1);
    if (!closed) break;  // trailing incomplete round
    start = end;
  }
  return rc;
}

}  // namespace

TEST_CASE("synchronous runs of TE reach the legitimate fixed point") {
  algorithm te = make_te();
  for (auto shape : {tree_shape::line, tree_shape::star, tree_shape::random_tree}) {
    auto net = shaped_network(te, shape, 9, 4);
    auto init = make_configuration(net, te);
    auto trace = run(net, te, init, daemon_strategy::synchronous(), {100000});
    CHECK(trace.outcome == run_outcome::terminal);
    CHECK(te_legitimacy(net, te, trace.final_cfg));
    // Under a synchronous daemon every step is exactly one round.
    CHECK(trace.rounds == static_cast<int>(trace.steps.size()));
  }
}

TEST_CASE("every built-in strategy terminates within the evaluated bound") {
  algorithm te = make_te();
  algorithm nolp = make_nolp();
  for (const auto* alg : {&te, &nolp}) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      auto [net, init] = random_instance(*alg, seed, 10, tree_shape::random_tree, 1000);
      auto rep = analyze(net, *alg, {200, seed, 50});
      REQUIRE(rep.verdict);
      auto bounds = make_bound_report(net, *alg, rep);
      run_options opts{default_step_limit(bounds), false};
      for (auto strat :
           {daemon_strategy::synchronous(), daemon_strategy::random_distributed(seed),
            daemon_strategy::random_central(seed),
            daemon_strategy::round_robin_central()}) {
        auto trace = run(net, *alg, init, strat, opts);
        CHECK(trace.outcome == run_outcome::terminal);
        CHECK(audit_trace(trace, bounds).pass);
        CHECK(trace.rounds <= static_cast<int>(trace.total_moves));
        if (alg->legitimacy())
          CHECK(alg->legitimacy()(net, *alg, trace.final_cfg));
      }
    }
  }
}

TEST_CASE("runs are deterministic given the full input") {
  algorithm te = make_te();
  auto [net, init] = random_instance(te, 99, 12, tree_shape::random_tree, 50);
  auto a = run(net, te, init, daemon_strategy::random_distributed(21), {100000});
  auto b = run(net, te, init, daemon_strategy::random_distributed(21), {100000});
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t s = 0; s < a.steps.size(); ++s) {
    CHECK(a.steps[s].selection == b.steps[s].selection);
    CHECK(a.steps[s].digest == b.steps[s].digest);
  }
  auto c = run(net, te, init, daemon_strategy::random_distributed(22), {100000});
  CHECK(c.outcome == run_outcome::terminal);  // different seed, same guarantee

  // Byte-for-byte: exported artifacts are identical, not merely equivalent.
  CHECK(trace_to_csv(a, te) == trace_to_csv(b, te));
  CHECK(run_summary_to_json(a, te).dump() == run_summary_to_json(b, te).dump());
}

TEST_CASE("no run beats the explorer's longest path") {
  // The explorer maximizes moves over every execution from the domain, so
  // any simulated run from a configuration inside the domain is a witness
  // that must not exceed it.
  algorithm te = make_te();
  auto net = te_line(3);
  const std::map<std::string, std::vector<value_t>> domain{
      {"sub", {0, 1, 2, 3}}, {"res", {0, 1, 2, 3}}};
  auto res = explore_exhaustive(net, te, domain);
  REQUIRE(res.all_terminate);
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    auto cfg = make_configuration(net, te);
    for (node_id p = 0; p < net.n; ++p) {
      cfg.set(p, te.slot("sub"), static_cast<value_t>(rng() % 4));
      cfg.set(p, te.slot("res"), static_cast<value_t>(rng() % 4));
    }
    daemon_strategy strat = trial % 2 ? daemon_strategy::random_central(rng())
                                      : daemon_strategy::random_distributed(rng());
    auto trace = run(net, te, cfg, strat, {100000});
    REQUIRE(trace.outcome == run_outcome::terminal);
    CHECK(trace.total_moves <= res.longest_move_path);
  }
}

TEST_CASE("scripted daemons replay exactly and reject disabled pairs") {
  algorithm te = make_te();
  auto inst = te_line_worst_case(4);

  SECTION("the full schedule replays without a disabled pair") {
    auto trace =
        run(inst.net, te, inst.init, daemon_strategy::scripted(inst.script),
            {100000});
    CHECK(trace.outcome == run_outcome::script_exhausted);
    CHECK(trace.total_moves == 9);
  }
  SECTION("a corrupted schedule raises script_error") {
    auto bad = inst.script;
    bad.insert(bad.begin(), {0, 0});  // S at the root is disabled initially
    CHECK_THROWS_AS(run(inst.net, te, inst.init, daemon_strategy::scripted(bad),
                        {100000}),
                    script_error);
  }
  SECTION("a step limit cuts the run and is reported") {
    auto trace = run(inst.net, te, inst.init,
                     daemon_strategy::scripted(inst.script), {5});
    CHECK(trace.outcome == run_outcome::step_limit_exceeded);
    CHECK(trace.steps.size() == 5);
  }
  SECTION("script exhaustion can hand over to a finishing daemon") {
    auto trace = run_script_then_finish(inst.net, te, inst.init, inst.script,
                                        daemon_strategy::synchronous(),
                                        {100000});
    CHECK(trace.outcome == run_outcome::terminal);
    CHECK(te_legitimacy(inst.net, te, trace.final_cfg));
    CHECK(trace.total_moves > 9);
  }
}

TEST_CASE("round counting follows the neutralization rule") {
  algorithm te = make_te();

  SECTION("an empty trace has zero rounds") {
    auto net = te_line(4);
    auto cfg = make_configuration(net, te);
    const value_t subs[] = {4, 3, 2, 1};
    for (node_id p = 0; p < 4; ++p) {
      cfg.set(p, te.slot("sub"), subs[p]);
      cfg.set(p, te.slot("res"), 4);
    }
    auto trace = run(net, te, cfg, daemon_strategy::synchronous(), {100});
    CHECK(trace.steps.empty());
    CHECK(trace.rounds == 0);
  }
  SECTION("star sweep schedule: one round per sweep plus three closing rounds") {
    // Hand trace for n=2: four singleton steps, each its own round.
    // For general n, sweeps 1..n-2 each close one round and the last sweep
    // splits into four (leaf S, root S, root R, leaf R flood).
    for (int n : {2, 3, 4, 6, 8, 10}) {
      auto w = te_star_round_case(n);
      auto trace =
          run(w.net, te, w.init, daemon_strategy::scripted(w.script), {100000});
      CHECK(trace.outcome == run_outcome::terminal);
      INFO("n=" << n);
      CHECK(trace.rounds == n + 2);
    }
  }
  SECTION("neutralization closes a round without an activation") {
    // Root and one leaf both enabled for S; activating the root recomputes
    // its sum and disables nothing, activating the leaf neutralizes nobody;
    // but activating only the root in a configuration where the leaf's S
    // becomes disabled counts the leaf as neutralized.
    auto net = te_star(3);
    auto cfg = make_configuration(net, te);
    cfg.set(1, te.slot("sub"), 1);  // leaf p2 already correct
    cfg.set(2, te.slot("sub"), 1);  // leaf p3 already correct
    // Root S enabled (0 != 3), R(root) disabled (0 == 0), leaves' R enabled
    // once the root moves.
    auto trace = run(net, te, cfg, daemon_strategy::round_robin_central(), {100});
    CHECK(trace.outcome == run_outcome::terminal);
    CHECK(trace.rounds <= static_cast<int>(trace.steps.size()));
  }
  SECTION("count_rounds recomputes what run recorded") {
    auto [net, init] = random_instance(te, 5, 9, tree_shape::random_tree, 30);
    auto trace = run(net, te, init, daemon_strategy::random_central(8), {100000});
    auto rc = count_rounds(trace, net, te);
    CHECK(rc.rounds == trace.rounds);
    CHECK(rc.boundaries == trace.round_boundaries);
  }
  SECTION("the incremental counter agrees with the prefix-scan oracle") {
    algorithm nolp = make_nolp();
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
      const algorithm& alg = seed % 2 ? nolp : te;
      auto [net, init] = random_instance(
          alg, seed, 2 + static_cast<int>(seed % 8), tree_shape::random_tree, 12);
      daemon_strategy strat;
      switch (seed % 4) {
        case 0: strat = daemon_strategy::synchronous(); break;
        case 1: strat = daemon_strategy::random_distributed(seed); break;
        case 2: strat = daemon_strategy::random_central(seed); break;
        default: strat = daemon_strategy::round_robin_central(); break;
      }
      auto trace = run(net, alg, init, strat, {100000});
      auto oracle = oracle_rounds(trace, net, alg);
      INFO("seed " << seed);
      CHECK(trace.rounds == oracle.rounds);
      CHECK(trace.round_boundaries == oracle.boundaries);
    }
    // The scripted schedules too, including their incomplete trailing round.
    for (int n : {3, 5, 8}) {
      auto star = te_star_round_case(n);
      auto st = run(star.net, te, star.init,
                    daemon_strategy::scripted(star.script), {100000});
      auto so = oracle_rounds(st, star.net, te);
      CHECK(st.rounds == so.rounds);
      CHECK(st.round_boundaries == so.boundaries);
    }
    for (int n : {4, 6}) {
      auto line = te_line_worst_case(n);
      auto lt = run(line.net, te, line.init,
                    daemon_strategy::scripted(line.script), {100000});
      auto lo = oracle_rounds(lt, line.net, te);
      CHECK(lt.rounds == lo.rounds);
      CHECK(lt.round_boundaries == lo.boundaries);
    }
  }
}

TEST_CASE("exhaustive exploration proves desk-scale termination") {
  algorithm te = make_te();

  SECTION("TE on the 2-line with values in {0,1,2}") {
    auto net = te_line(2);
    auto res = explore_exhaustive(net, te, {{"sub", {0, 1, 2}}, {"res", {0, 1, 2}}});
    CHECK(res.all_terminate);
    CHECK(res.all_terminal_satisfy_predicate);
    CHECK(res.state_count == 112);
    CHECK(res.terminal_count == 1);  // unique sink: sub=(2,1), res=(2,2)
    CHECK(res.longest_move_path == 10);
  }
  SECTION("1-node tree with input 5 and domains {0,5}") {
    raw_network raw;
    raw.n = 1;
    raw.parent = {std::nullopt};
    raw.consts = {{{"input", 5}}};
    auto net = validate_network(raw);
    auto res = explore_exhaustive(net, te, {{"sub", {0, 5}}, {"res", {0, 5}}});
    CHECK(res.all_terminate);
    CHECK(res.terminal_count == 1);
    CHECK(res.all_terminal_satisfy_predicate);
  }
  SECTION("a constructed livelock is detected with a witness") {
    algorithm cyc = flip_flop();
    auto net = shaped_network(cyc, tree_shape::line, 2);
    auto res = explore_exhaustive(net, cyc, {{"x", {0, 1}}});
    CHECK_FALSE(res.all_terminate);
    CHECK_FALSE(res.cycle_witness.empty());
  }
  SECTION("missing domains and state budgets are errors") {
    auto net = te_line(2);
    CHECK_THROWS_AS(explore_exhaustive(net, te, {{"sub", {0, 1}}}),
                    validation_error);
    CHECK_THROWS_AS(
        explore_exhaustive(net, te, {{"sub", {0, 1, 2}}, {"res", {0, 1, 2}}}, 10),
        error);
  }
}

TEST_CASE("instance generation is shaped and reproducible") {
  algorithm te = make_te();
  SECTION("line parents point toward the root") {
    auto [net, cfg] = random_instance(te, 3, 4, tree_shape::line, 10);
    CHECK(net.is_root(0));
    for (node_id p = 1; p < 4; ++p) CHECK(*net.parent[p] == p - 1);
    CHECK(net.height == 3);
  }
  SECTION("star has one center and n-1 leaves") {
    auto [net, cfg] = random_instance(te, 3, 6, tree_shape::star, 10);
    CHECK(net.is_root(0));
    CHECK(net.degree(0) == 5);
    CHECK(net.height == 1);
  }
  SECTION("identical seeds give identical instances") {
    auto [net_a, cfg_a] = random_instance(te, 42, 11, tree_shape::random_tree, 10);
    auto [net_b, cfg_b] = random_instance(te, 42, 11, tree_shape::random_tree, 10);
    CHECK(net_a.parent == net_b.parent);
    CHECK(net_a.consts == net_b.consts);
    CHECK(cfg_a == cfg_b);
    auto [net_c, cfg_c] = random_instance(te, 43, 11, tree_shape::random_tree, 10);
    CHECK((net_a.parent != net_c.parent || !(cfg_a == cfg_c)));
  }
  SECTION("values respect the requested bound") {
    auto [net, cfg] = random_instance(te, 7, 9, tree_shape::random_tree, 3);
    for (node_id p = 0; p < net.n; ++p)
      for (int s = 0; s < te.slot_count(); ++s) {
        CHECK(cfg.get(p, s) >= 0);
        CHECK(cfg.get(p, s) <= 3);
      }
  }
}

TEST_CASE("trace CSV export carries one row per move") {
  algorithm te = make_te();
  auto [net, init] = random_instance(te, 2, 5, tree_shape::random_tree, 10);
  auto trace = run(net, te, init, daemon_strategy::synchronous(), {1000});
  auto csv = trace_to_csv(trace, te);
  std::istringstream in(csv);
  auto sum = trace_summary_from_csv(in, te, net.n);
  CHECK(sum.total_moves == trace.total_moves);
  CHECK(sum.rounds == trace.rounds);
  CHECK(sum.moves == trace.moves);
}
