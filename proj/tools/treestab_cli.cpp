// Command-line front end: analysis, simulation, transformation, bound
// evaluation and verification suites for the built-in algorithms.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "treestab/treestab.hpp"

namespace ts = treestab;
using ts::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_verification_failed = 1;
constexpr int exit_usage = 2;

std::string output_path(const std::string& name) {
  const char* dir = std::getenv("TREESTAB_OUT_DIR");
  if (!dir || !*dir) return name;
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / name).string();
}

struct instance_options {
  std::string network_file;
  std::string shape = "line";
  int n = 8;
  std::uint64_t shape_seed = 1;
};

void add_instance_flags(CLI::App* cmd, instance_options& opts) {
  cmd->add_option("--network", opts.network_file,
                  "network JSON file (overrides --shape/--n)");
  cmd->add_option("--shape", opts.shape, "generated tree shape")
      ->check(CLI::IsMember({"line", "star", "random-tree"}));
  cmd->add_option("--n", opts.n, "node count for generated shapes");
  cmd->add_option("--shape-seed", opts.shape_seed,
                  "seed for random-tree generation");
}

ts::forest_network make_network(const instance_options& opts,
                                const ts::algorithm& alg) {
  if (!opts.network_file.empty()) return ts::load_network(opts.network_file);
  return ts::shaped_network(alg, *ts::shape_from_name(opts.shape), opts.n,
                            opts.shape_seed);
}

void print_analysis_table(const ts::analysis_report& rep,
                          const ts::algorithm& alg) {
  std::cout << "family  labels            orientation  height  maxO  "
               "correct-alone\n";
  for (int i = 0; i < alg.family_count(); ++i) {
    std::string labels;
    if (rep.labels.bottom_up[i]) labels += "bottom-up ";
    if (rep.labels.top_down[i]) labels += "top-down";
    if (labels.empty()) labels = "(none)";
    std::printf("%-7s %-17s %-12s %6d %5d  %s (%ld trials)\n",
                alg.family(i).label.c_str(), labels.c_str(),
                std::string(ts::orientation_name(rep.orientation[i])).c_str(),
                rep.causality.family_height[i], rep.max_others[i],
                rep.correct_alone[i].pass ? "pass" : "COUNTEREXAMPLE",
                rep.correct_alone[i].executed_trials);
  }
  std::cout << "causality: ";
  for (auto [j, i] : rep.causality.edges)
    std::cout << alg.family(j).label << "->" << alg.family(i).label << " ";
  std::cout << "| acyclic=" << (rep.causality.acyclic ? "yes" : "no")
            << " height=" << rep.causality.height
            << " d=" << rep.causality.max_in_degree << "\n"
            << "follows acyclic strategy: " << (rep.verdict ? "yes" : "no")
            << "\n";
}

void print_bound_table(const ts::bound_report& b) {
  auto show = [](const std::optional<ts::value_t>& v) {
    return v ? std::to_string(*v) : std::string("exceeds-int64");
  };
  std::cout << "bounds on n=" << b.n << " H=" << b.tree_height
            << " Delta=" << b.max_degree << " (k=" << b.k
            << ", d=" << b.in_degree << ", h=" << b.causality_height << ")\n";
  for (int i = 0; i < b.k; ++i)
    std::cout << "  " << b.family_labels[i]
              << ": per-node <= " << show(b.per_node_bound[i])
              << ", family total <= " << show(b.family_total[i]) << "\n";
  std::cout << "  total moves <= " << show(b.corollary_total)
            << " | refined <= " << show(b.refined_total) << "\n";
  if (b.round_bound)
    std::cout << "  rounds <= " << *b.round_bound << " (" << b.lme_evidence
              << ")\n";
}

json experiment_provenance(const std::string& command,
                           const std::string& algorithm_name,
                           const instance_options& inst, json extra) {
  json cfg{{"command", command},
           {"algorithm", algorithm_name},
           {"network", inst.network_file.empty()
                           ? json{{"shape", inst.shape},
                                  {"n", inst.n},
                                  {"shape_seed", inst.shape_seed}}
                           : json{{"file", inst.network_file}}}};
  cfg.update(extra);
  return cfg;
}

int run_lme_check(const ts::forest_network& net, const ts::algorithm& alg,
                  std::uint64_t seed, bool expect_pass) {
  ts::lme_options o;
  o.seed = seed;
  auto r = ts::check_local_mutual_exclusion(net, alg, o);
  std::cout << (r.exhaustive ? "exhaustive" : "sampled") << " over "
            << r.checked << " configurations: "
            << (r.pass ? "no conflicts" : "conflict found") << "\n";
  return r.pass == expect_pass ? exit_ok : exit_verification_failed;
}

// ---------------------------------------------------------------------------
// verify suites
// ---------------------------------------------------------------------------

struct suite_check {
  std::string name;
  bool pass;
};

void report_suite(const std::string& suite, std::vector<suite_check>& checks,
                  const std::string& json_out, int& rc) {
  json results = json::array();
  for (const auto& c : checks) {
    std::cout << (c.pass ? "  [pass] " : "  [FAIL] ") << c.name << "\n";
    results.push_back(json{{"check", c.name}, {"pass", c.pass}});
    if (!c.pass) rc = exit_verification_failed;
  }
  json doc{{"format", 1}, {"suite", suite}, {"results", results}};
  if (!json_out.empty()) ts::write_file(json_out, doc.dump(2) + "\n");
}

int verify_tiny_exhaustive(const std::string& json_out) {
  std::vector<suite_check> checks;
  ts::algorithm te = ts::make_te();
  const std::map<std::string, std::vector<ts::value_t>> te_domain{
      {"sub", {0, 1, 2, 3}}, {"res", {0, 1, 2, 3}}};
  for (int n : {1, 2, 3}) {
    for (auto shape : {ts::tree_shape::line, ts::tree_shape::star}) {
      if (n <= 2 && shape == ts::tree_shape::star) continue;
      auto net = ts::shaped_network(te, shape, n);
      auto res = ts::explore_exhaustive(net, te, te_domain);
      checks.push_back({"te n=" + std::to_string(n) + " " +
                            (shape == ts::tree_shape::line ? "line" : "star") +
                            ": every execution finite",
                        res.all_terminate});
      checks.push_back({"te n=" + std::to_string(n) + " " +
                            (shape == ts::tree_shape::line ? "line" : "star") +
                            ": every sink legitimate",
                        res.all_terminal_satisfy_predicate});
    }
  }
  ts::algorithm nolp = ts::make_nolp();
  auto net2 = ts::shaped_network(nolp, ts::tree_shape::line, 2);
  auto res2 = ts::explore_exhaustive(
      net2, nolp,
      {{"Clr", {0, 1}}, {"Sub", {0, 1, 2}}, {"Res", {0, 1, 2}}});
  checks.push_back({"nolp n=2: every execution finite", res2.all_terminate});
  checks.push_back(
      {"nolp n=2: every sink legitimate", res2.all_terminal_satisfy_predicate});
  int rc = exit_ok;
  report_suite("tiny-exhaustive", checks, json_out, rc);
  return rc;
}

int verify_correct_alone(const std::string& json_out) {
  std::vector<suite_check> checks;
  for (const auto& name : {"te", "nolp"}) {
    ts::algorithm alg = ts::make_algorithm(name);
    for (int i = 0; i < alg.family_count(); ++i) {
      long executed = 0;
      bool pass = true;
      for (std::uint64_t seed = 0; seed < 20 && pass; ++seed) {
        auto net = ts::shaped_network(alg, ts::tree_shape::random_tree,
                                      2 + static_cast<int>(seed % 9), seed);
        auto r = ts::test_correct_alone(net, alg, i, {500, seed, 100, true});
        executed += r.executed_trials;
        pass = pass && r.pass;
      }
      checks.push_back({std::string(name) + " family " + alg.family(i).label +
                            " correct-alone (" + std::to_string(executed) +
                            " activations)",
                        pass});
    }
  }
  {
    // Negative control: a family whose statement re-enables its own guard.
    ts::variable_schema sc;
    sc.var_names = {"x"};
    sc.family_vars = {{"x"}};
    sc.domains["x"] = ts::value_domain::integer();
    ts::family_spec f;
    f.label = "B";
    f.reads = {{ts::relation::self, "x"}};
    f.guard = [](const ts::local_view&) { return true; };
    f.statement = [](const ts::local_view& v) {
      return std::vector<ts::value_t>{ts::checked_add(v.self("x"), 1)};
    };
    ts::algorithm broken(sc, {f});
    auto net = ts::shaped_network(broken, ts::tree_shape::line, 4);
    auto r = ts::test_correct_alone(net, broken, 0, {100, 1, 50, true});
    checks.push_back({"control family caught within 100 trials",
                      !r.pass && r.executed_trials <= 100});
  }
  int rc = exit_ok;
  report_suite("correct-alone", checks, json_out, rc);
  return rc;
}

int verify_lme(const std::string& json_out) {
  std::vector<suite_check> checks;
  for (const auto& name : {"te", "nolp"}) {
    ts::algorithm alg = ts::make_algorithm(name);
    ts::algorithm t =
        ts::transform(alg, ts::derive_order(ts::build_causality_graph(alg)));
    auto net2 = ts::shaped_network(alg, ts::tree_shape::line, 2);
    ts::lme_options fin;
    fin.domain_override = {{"sub", {0, 1, 2}},
                           {"res", {0, 1, 2}},
                           {"Sub", {0, 1, 2}},
                           {"Res", {0, 1, 2}}};
    auto ex = ts::check_local_mutual_exclusion(net2, t, fin);
    checks.push_back({std::string("transformed ") + name +
                          ": exhaustive over 2-node finite domains",
                      ex.pass && ex.exhaustive});
    bool sampled = true;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto net = ts::shaped_network(alg, ts::tree_shape::random_tree,
                                    3 + static_cast<int>(seed), seed);
      ts::lme_options s;
      s.trials = 1000;
      s.seed = seed;
      sampled = sampled && ts::check_local_mutual_exclusion(net, t, s).pass;
    }
    checks.push_back(
        {std::string("transformed ") + name + ": sampled random trees",
         sampled});
  }
  int rc = exit_ok;
  report_suite("lme", checks, json_out, rc);
  return rc;
}

int verify_bounds_grid(const std::string& json_out) {
  std::vector<suite_check> checks;
  ts::algorithm te = ts::make_te();
  bool identity = true;
  for (int n = 1; n <= 50 && identity; ++n)
    for (auto shape : {ts::tree_shape::line, ts::tree_shape::star,
                       ts::tree_shape::random_tree}) {
      if (n <= 2 && shape != ts::tree_shape::line) continue;
      auto net = ts::shaped_network(te, shape, n, 17 + n);
      auto rep = ts::analyze(net, te, {200, 5, 50});
      auto b = ts::make_bound_report(net, te, rep);
      ts::value_t nn = n, h = net.height;
      identity = identity && b.refined_total &&
                 *b.refined_total == nn * nn * (3 + 2 * h);
    }
  checks.push_back({"refined TE bound equals n^2(3+2H) over the grid",
                    identity});
  int rc = exit_ok;
  report_suite("bounds-grid", checks, json_out, rc);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "treestab: analysis and simulation of silent self-stabilizing "
      "algorithms on spanning forests"};
  app.require_subcommand(1);

  std::string algorithm_name;
  instance_options inst;
  bool transform_flag = false;

  // analyze ------------------------------------------------------------
  auto* analyze = app.add_subcommand(
      "analyze", "classify families, build the causality graph, print bounds");
  analyze->add_option("algorithm", algorithm_name)->required();
  add_instance_flags(analyze, inst);
  std::string analyze_json;
  long ca_trials = 2000;
  std::uint64_t seed = 1;
  analyze->add_option("--json-out", analyze_json, "write the report as JSON");
  analyze->add_option("--trials", ca_trials, "correct-alone trials per family");
  analyze->add_option("--seed", seed, "random seed");
  analyze->add_flag("--transform", transform_flag,
                    "analyze the priority-transformed algorithm");

  // run ------------------------------------------------------------------
  auto* run_cmd = app.add_subcommand("run", "execute under a daemon and audit");
  run_cmd->add_option("algorithm", algorithm_name)->required();
  add_instance_flags(run_cmd, inst);
  std::string daemon_name = "synchronous";
  std::string init_file, trace_out, summary_out, worstcase;
  long steps_limit = 0;
  double rho = 0.5;
  ts::value_t random_init_bound = -1;
  run_cmd->add_option("--daemon", daemon_name, "daemon strategy")
      ->check(CLI::IsMember({"synchronous", "random-distributed",
                             "random-central", "round-robin-central"}));
  run_cmd->add_option("--seed", seed, "daemon seed");
  run_cmd->add_option("--rho", rho,
                      "per-process activation probability (random-distributed)")
      ->check(CLI::Range(0.0, 1.0));
  run_cmd->add_option("--steps-limit", steps_limit,
                      "step budget (default: corollary bound + 1)");
  auto* init_opt =
      run_cmd->add_option("--init", init_file, "initial configuration JSON");
  run_cmd
      ->add_option("--random-init", random_init_bound,
                   "random initial configuration with values in [0, bound]")
      ->excludes(init_opt);
  run_cmd
      ->add_option("--worstcase", worstcase,
                   "scripted instance: te-line or te-star")
      ->check(CLI::IsMember({"te-line", "te-star"}))
      ->excludes("--network")
      ->excludes(init_opt);
  run_cmd->add_option("--trace-out", trace_out, "write the trace CSV");
  run_cmd->add_option("--summary-out", summary_out, "write the summary JSON");
  run_cmd->add_flag("--transform", transform_flag,
                    "run the priority-transformed algorithm");

  // transform --------------------------------------------------------------
  auto* transform_cmd = app.add_subcommand(
      "transform", "derive the priority order and analyze the transformed "
                   "algorithm");
  transform_cmd->add_option("algorithm", algorithm_name)->required();
  add_instance_flags(transform_cmd, inst);
  std::string transform_json;
  transform_cmd->add_option("--json-out", transform_json);

  // worstcase ----------------------------------------------------------
  auto* worst_cmd = app.add_subcommand(
      "worstcase", "emit a scripted worst-case instance as JSON");
  std::string worst_kind;
  int worst_n = 8;
  std::string worst_out;
  worst_cmd->add_option("kind", worst_kind, "te-line or te-star")
      ->required()
      ->check(CLI::IsMember({"te-line", "te-star"}));
  worst_cmd->add_option("--n", worst_n, "node count")->required();
  worst_cmd->add_option("--out", worst_out, "output file (default stdout)");

  // bounds ---------------------------------------------------------------
  auto* bounds_cmd =
      app.add_subcommand("bounds", "evaluate the move/round bound formulas");
  bounds_cmd->add_option("algorithm", algorithm_name)->required();
  add_instance_flags(bounds_cmd, inst);
  std::string bounds_json;
  bounds_cmd->add_option("--json-out", bounds_json);
  bounds_cmd->add_flag("--transform", transform_flag);

  // audit ----------------------------------------------------------------
  auto* audit_cmd =
      app.add_subcommand("audit", "audit a trace CSV against a bound report");
  std::string audit_trace_file, audit_bounds_file;
  audit_cmd->add_option("--trace", audit_trace_file)->required();
  audit_cmd->add_option("--bounds", audit_bounds_file)->required();
  audit_cmd->add_option("algorithm", algorithm_name)->required();

  // verify ---------------------------------------------------------------
  auto* verify_cmd = app.add_subcommand("verify", "run a verification suite");
  std::string suite, verify_json;
  verify_cmd->add_option("suite", suite)
      ->required()
      ->check(CLI::IsMember(
          {"tiny-exhaustive", "correct-alone", "lme", "bounds-grid"}));
  verify_cmd->add_option("--json-out", verify_json);

  // lme (exposed for experiments) -----------------------------------------
  auto* lme_cmd = app.add_subcommand(
      "lme", "check local mutual exclusion of an algorithm");
  lme_cmd->add_option("algorithm", algorithm_name)->required();
  add_instance_flags(lme_cmd, inst);
  lme_cmd->add_option("--seed", seed);
  lme_cmd->add_flag("--transform", transform_flag);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }

  try {
    if (*analyze || *bounds_cmd || *lme_cmd || *transform_cmd) {
      ts::algorithm alg = ts::make_algorithm(algorithm_name);
      ts::priority_order order;
      if (transform_flag || *transform_cmd) {
        order = ts::derive_order(ts::build_causality_graph(alg));
        if (*transform_cmd) {
          std::cout << "priority order:";
          for (int f : order.sequence)
            std::cout << " " << alg.family(f).label;
          std::cout << "\n";
        }
        alg = ts::transform(alg, order);
      }
      ts::forest_network net = make_network(inst, alg);
      auto rep = ts::analyze(net, alg, {ca_trials, seed, 100});
      print_analysis_table(rep, alg);
      json doc = ts::analysis_report_to_json(rep, alg);
      doc["experiment"] = experiment_provenance(
          app.get_subcommands().front()->get_name(), algorithm_name, inst,
          json{{"transform", transform_flag || *transform_cmd}});
      std::optional<ts::bound_report> bounds;
      if (rep.verdict) {
        bool lme = transform_flag || *transform_cmd;
        bounds = ts::make_bound_report(net, alg, rep, lme,
                                       lme ? "transformer" : "");
        print_bound_table(*bounds);
        doc["bounds"] = ts::bound_report_to_json(*bounds);
        if (*bounds_cmd)
          std::cout << ts::bound_report_to_json(*bounds).dump(2) << "\n";
      }
      if (*lme_cmd) return run_lme_check(net, alg, seed, true);
      const std::string& path = *analyze      ? analyze_json
                                : *bounds_cmd ? bounds_json
                                              : transform_json;
      if (!path.empty()) ts::write_file(output_path(path), doc.dump(2) + "\n");
      return rep.verdict ? exit_ok : exit_verification_failed;
    }

    if (*run_cmd) {
      ts::algorithm alg = ts::make_algorithm(algorithm_name);
      ts::algorithm original = alg;
      ts::priority_order order;
      if (transform_flag) {
        order = ts::derive_order(ts::build_causality_graph(alg));
        alg = ts::transform(alg, order);
      }

      ts::forest_network net{};
      ts::configuration init;
      std::vector<ts::activation> script;
      if (!worstcase.empty()) {
        if (algorithm_name != "te")
          throw ts::validation_error("worst-case scripts exist for te only");
        auto w = worstcase == "te-line" ? ts::te_line_worst_case(inst.n)
                                        : ts::te_star_round_case(inst.n);
        net = std::move(w.net);
        init = std::move(w.init);
        script = std::move(w.script);
      } else {
        net = make_network(inst, alg);
        if (!init_file.empty())
          init = ts::load_configuration(init_file, net, alg);
        else if (random_init_bound >= 0) {
          std::mt19937_64 rng(seed);
          init = ts::random_configuration(net, alg, rng, random_init_bound);
        } else
          init = ts::make_configuration(net, alg);
      }

      auto rep = ts::analyze(net, alg, {1000, seed, 100});
      auto bounds = ts::make_bound_report(net, alg, rep, transform_flag,
                                          transform_flag ? "transformer" : "");
      ts::run_options opts;
      opts.step_limit =
          steps_limit > 0 ? steps_limit : ts::default_step_limit(bounds);

      const bool scripted_run = !script.empty();
      ts::execution_trace trace;
      if (scripted_run) {
        trace = ts::run_script_then_finish(net, alg, init, std::move(script),
                                           ts::daemon_strategy::synchronous(),
                                           opts);
      } else {
        ts::daemon_strategy strat;
        strat.kind = *ts::daemon_from_name(daemon_name);
        strat.seed = seed;
        strat.activation_probability = rho;
        trace = ts::run(net, alg, init, strat, opts);
      }

      auto audit = ts::audit_trace(trace, bounds);
      bool legit = !alg.legitimacy() ||
                   alg.legitimacy()(net, alg, trace.final_cfg);
      json summary = ts::run_summary_to_json(trace, alg);
      summary["audit_pass"] = audit.pass;
      summary["audit_violations"] = audit.violations;
      summary["legitimate"] = legit;
      json extra{{"daemon", scripted_run ? "scripted" : daemon_name},
                 {"seed", seed},
                 {"steps_limit", opts.step_limit},
                 {"transform", transform_flag}};
      summary["experiment"] =
          experiment_provenance("run", algorithm_name, inst, extra);
      if (scripted_run)
        summary["experiment"]["network"] =
            json{{"worstcase", worstcase}, {"n", inst.n}};
      std::cout << summary.dump(2) << "\n";
      if (!trace_out.empty())
        ts::write_file(output_path(trace_out), ts::trace_to_csv(trace, alg));
      if (!summary_out.empty())
        ts::write_file(output_path(summary_out), summary.dump(2) + "\n");
      if (transform_flag && !ts::replay_on_original(trace, net, original))
        return exit_verification_failed;
      bool ok = trace.outcome == ts::run_outcome::terminal && audit.pass &&
                legit;
      return ok ? exit_ok : exit_verification_failed;
    }

    if (*worst_cmd) {
      auto w = worst_kind == "te-line" ? ts::te_line_worst_case(worst_n)
                                       : ts::te_star_round_case(worst_n);
      ts::algorithm te = ts::make_te();
      json script = json::array();
      for (auto [p, i] : w.script)
        script.push_back(json::array({p, te.family(i).label}));
      json doc{{"format", 1},
               {"network", ts::network_to_json(w.net)},
               {"init", ts::configuration_to_json(w.init, w.net, te)},
               {"script", script}};
      if (worst_out.empty())
        std::cout << doc.dump(2) << "\n";
      else
        ts::write_file(output_path(worst_out), doc.dump(2) + "\n");
      return exit_ok;
    }

    if (*audit_cmd) {
      ts::algorithm alg = ts::make_algorithm(algorithm_name);
      std::ifstream bf(audit_bounds_file);
      if (!bf) throw ts::error("cannot open " + audit_bounds_file);
      json bdoc = json::parse(bf);
      if (bdoc.contains("bounds")) bdoc = bdoc["bounds"];
      auto bounds = ts::bound_report_from_json(bdoc);
      std::ifstream tf(audit_trace_file);
      if (!tf) throw ts::error("cannot open " + audit_trace_file);
      auto sum = ts::trace_summary_from_csv(tf, alg, bounds.n);

      ts::execution_trace shim;
      shim.moves = sum.moves;
      shim.total_moves = sum.total_moves;
      shim.rounds = sum.rounds;
      auto audit = ts::audit_trace(shim, bounds);
      for (const auto& v : audit.violations) std::cout << "violation: " << v << "\n";
      std::cout << (audit.pass ? "audit: pass" : "audit: FAIL") << "\n";
      return audit.pass ? exit_ok : exit_verification_failed;
    }

    if (*verify_cmd) {
      std::cout << "suite " << suite << ":\n";
      std::string out =
          verify_json.empty() ? verify_json : output_path(verify_json);
      if (suite == "tiny-exhaustive") return verify_tiny_exhaustive(out);
      if (suite == "correct-alone") return verify_correct_alone(out);
      if (suite == "lme") return verify_lme(out);
      return verify_bounds_grid(out);
    }
  } catch (const ts::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << "\n";
    return exit_usage;
  }
  return exit_usage;
}
