#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "treestab/analysis.hpp"
#include "treestab/bounds.hpp"
#include "treestab/core.hpp"
#include "treestab/daemon.hpp"

namespace treestab {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Network and configuration files
// ---------------------------------------------------------------------------

// Network document:
//   {"nodes":[{"id":0,"parent":null,"consts":{"input":1}},...],
//    "edges":[[0,1],...]}
inline raw_network raw_network_from_json(const json& doc) {
  if (!doc.contains("nodes") || !doc["nodes"].is_array())
    throw validation_error("network document needs a 'nodes' array");
  raw_network raw;
  raw.n = static_cast<int>(doc["nodes"].size());
  raw.parent.assign(raw.n, std::nullopt);
  raw.consts.assign(raw.n, {});
  for (const auto& node : doc["nodes"]) {
    int id = node.at("id").get<int>();
    if (id < 0 || id >= raw.n)
      throw validation_error("node ids must be dense in [0, n)");
    if (node.contains("parent") && !node["parent"].is_null())
      raw.parent[id] = node["parent"].get<int>();
    if (node.contains("consts"))
      for (const auto& [name, v] : node["consts"].items())
        raw.consts[id][name] = v.get<value_t>();
  }
  for (const auto& e : doc.value("edges", json::array())) {
    if (!e.is_array() || e.size() != 2)
      throw validation_error("edges must be [a, b] pairs");
    raw.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  return raw;
}

inline forest_network load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("cannot open network file: " + path);
  json doc = json::parse(in);
  return validate_network(raw_network_from_json(doc));
}

inline json network_to_json(const forest_network& net) {
  json nodes = json::array();
  for (node_id p = 0; p < net.n; ++p) {
    json node{{"id", p}};
    node["parent"] =
        net.parent[p].has_value() ? json(*net.parent[p]) : json(nullptr);
    json consts = json::object();
    for (const auto& [name, v] : net.consts[p]) consts[name] = v;
    node["consts"] = consts;
    nodes.push_back(node);
  }
  json edges = json::array();
  for (node_id p = 0; p < net.n; ++p)
    for (node_id q : net.adjacency[p])
      if (p < q) edges.push_back(json::array({p, q}));
  return json{{"nodes", nodes}, {"edges", edges}};
}

// Initial configuration document: {"values":[{"id":0,"sub":7,"res":3},...]}.
// Writable names omitted for a node default to 0.
inline configuration configuration_from_json(const json& doc,
                                             const forest_network& net,
                                             const algorithm& alg) {
  configuration cfg = make_configuration(net, alg);
  for (const auto& entry : doc.value("values", json::array())) {
    int id = entry.at("id").get<int>();
    if (id < 0 || id >= net.n)
      throw validation_error("configuration refers to an unknown node id");
    for (const auto& [name, v] : entry.items()) {
      if (name == "id") continue;
      int s = alg.slot(name);
      if (alg.is_const_slot(s))
        throw validation_error("configuration file may not set constant " +
                               name);
      cfg.set(id, s, v.get<value_t>());
    }
  }
  validate_configuration(net, alg, cfg);
  return cfg;
}

inline configuration load_configuration(const std::string& path,
                                        const forest_network& net,
                                        const algorithm& alg) {
  std::ifstream in(path);
  if (!in) throw error("cannot open configuration file: " + path);
  return configuration_from_json(json::parse(in), net, alg);
}

inline json configuration_to_json(const configuration& cfg,
                                  const forest_network& net,
                                  const algorithm& alg) {
  json values = json::array();
  for (node_id p = 0; p < net.n; ++p) {
    json entry{{"id", p}};
    for (int s = 0; s < alg.slot_count(); ++s)
      if (!alg.is_const_slot(s)) entry[alg.slot_names()[s]] = cfg.get(p, s);
    values.push_back(entry);
  }
  return json{{"values", values}};
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json analysis_report_to_json(const analysis_report& rep,
                                    const algorithm& alg) {
  json families = json::array();
  for (int i = 0; i < alg.family_count(); ++i) {
    json f{{"label", alg.family(i).label},
           {"bottom_up", static_cast<bool>(rep.labels.bottom_up[i])},
           {"top_down", static_cast<bool>(rep.labels.top_down[i])},
           {"orientation", std::string(orientation_name(rep.orientation[i]))},
           {"height", rep.causality.family_height[i]},
           {"max_others", rep.max_others[i]},
           {"correct_alone",
            json{{"pass", rep.correct_alone[i].pass},
                 {"trials", rep.correct_alone[i].executed_trials}}},
           {"zone_size", rep.zone_size[i]},
           {"depth", rep.depth[i]},
           {"others", rep.others[i]}};
    families.push_back(f);
  }
  json edges = json::array();
  for (auto [j, i] : rep.causality.edges)
    edges.push_back(json::array(
        {alg.family(j).label, alg.family(i).label}));
  return json{{"format", 1},
              {"families", families},
              {"causality",
               json{{"edges", edges},
                    {"acyclic", rep.causality.acyclic},
                    {"height", rep.causality.height},
                    {"max_in_degree", rep.causality.max_in_degree}}},
              {"follows_acyclic_strategy", rep.verdict}};
}

inline json optional_bound(const std::optional<value_t>& v) {
  return v ? json(*v) : json("exceeds-int64");
}

inline json bound_report_to_json(const bound_report& b) {
  json families = json::array();
  for (int i = 0; i < b.k; ++i)
    families.push_back(
        json{{"label", b.family_labels[i]},
             {"height", b.family_height[i]},
             {"max_others", b.max_others[i]},
             {"orientation", std::string(orientation_name(b.orientation[i]))},
             {"per_node_move_bound", optional_bound(b.per_node_bound[i])},
             {"family_move_bound", optional_bound(b.family_total[i])}});
  json out{{"format", 1},
           {"n", b.n},
           {"height", b.tree_height},
           {"max_degree", b.max_degree},
           {"k", b.k},
           {"in_degree", b.in_degree},
           {"causality_height", b.causality_height},
           {"families", families},
           {"total_move_bound", optional_bound(b.corollary_total)},
           {"refined_move_bound", optional_bound(b.refined_total)},
           {"lme_established", b.lme_established},
           {"lme_evidence", b.lme_evidence}};
  out["round_bound"] = b.round_bound ? json(*b.round_bound) : json(nullptr);
  return out;
}

inline bound_report bound_report_from_json(const json& doc) {
  bound_report b;
  b.n = doc.at("n").get<int>();
  b.tree_height = doc.at("height").get<int>();
  b.max_degree = doc.at("max_degree").get<int>();
  b.k = doc.at("k").get<int>();
  b.in_degree = doc.at("in_degree").get<int>();
  b.causality_height = doc.at("causality_height").get<int>();
  auto opt = [](const json& v) -> std::optional<value_t> {
    if (v.is_string()) return std::nullopt;
    return v.get<value_t>();
  };
  for (const auto& f : doc.at("families")) {
    b.family_labels.push_back(f.at("label").get<std::string>());
    b.family_height.push_back(f.at("height").get<int>());
    b.max_others.push_back(f.at("max_others").get<int>());
    std::string o = f.at("orientation").get<std::string>();
    b.orientation.push_back(o == "bottom-up" ? family_orientation::bottom_up
                            : o == "top-down" ? family_orientation::top_down
                                              : family_orientation::none);
    b.per_node_bound.push_back(opt(f.at("per_node_move_bound")));
    b.family_total.push_back(opt(f.at("family_move_bound")));
  }
  b.corollary_total = opt(doc.at("total_move_bound"));
  b.refined_total = opt(doc.at("refined_move_bound"));
  b.lme_established = doc.at("lme_established").get<bool>();
  b.lme_evidence = doc.value("lme_evidence", "");
  if (!doc.at("round_bound").is_null())
    b.round_bound = doc.at("round_bound").get<value_t>();
  return b;
}

// ---------------------------------------------------------------------------
// Trace CSV: one row per move, columns step,node,family,move_index,round
// ---------------------------------------------------------------------------

inline std::string trace_to_csv(const execution_trace& trace,
                                const algorithm& alg) {
  std::ostringstream out;
  out << "step,node,family,move_index,round\n";
  long move_index = 0;
  std::size_t round = 0;
  for (std::size_t s = 0; s < trace.steps.size(); ++s) {
    while (round < trace.round_boundaries.size() &&
           trace.round_boundaries[round] < s)
      ++round;
    for (auto [p, i] : trace.steps[s].selection)
      out << s << ',' << p << ',' << alg.family(i).label << ',' << move_index++
          << ',' << round + 1 << '\n';
  }
  return out.str();
}

/// Reconstructs per-(node, family) counters, the total and the round count
/// from a trace CSV, enough for a bound audit.
struct csv_trace_summary {
  std::vector<std::vector<long>> moves;  // [family][node]
  long total_moves = 0;
  int rounds = 0;
};

inline csv_trace_summary trace_summary_from_csv(std::istream& in,
                                                const algorithm& alg,
                                                int n) {
  csv_trace_summary sum;
  sum.moves.assign(alg.family_count(), std::vector<long>(n, 0));
  std::map<std::string, int> by_label;
  for (int i = 0; i < alg.family_count(); ++i)
    by_label[alg.family(i).label] = i;

  std::string line;
  if (!std::getline(in, line) || line.rfind("step,", 0) != 0)
    throw error("trace CSV is missing its header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string step, node, family, move_index, round;
    std::getline(row, step, ',');
    std::getline(row, node, ',');
    std::getline(row, family, ',');
    std::getline(row, move_index, ',');
    std::getline(row, round, ',');
    auto it = by_label.find(family);
    if (it == by_label.end()) throw error("unknown family in trace: " + family);
    int p = std::stoi(node);
    if (p < 0 || p >= n) throw error("node id out of range in trace");
    ++sum.moves[it->second][p];
    ++sum.total_moves;
    sum.rounds = std::max(sum.rounds, std::stoi(round));
  }
  return sum;
}

inline json run_summary_to_json(const execution_trace& trace,
                                const algorithm& alg) {
  json per_family = json::object();
  for (int i = 0; i < alg.family_count(); ++i) {
    long total = 0;
    for (long c : trace.moves[i]) total += c;
    per_family[alg.family(i).label] = total;
  }
  return json{{"format", 1},
              {"total_moves", trace.total_moves},
              {"moves_per_family", per_family},
              {"rounds", trace.rounds},
              {"steps", trace.steps.size()},
              {"outcome", std::string(outcome_name(trace.outcome))},
              {"final_digest", trace.final_cfg.digest()}};
}

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path);
  if (!out) throw error("cannot write file: " + path);
  out << contents;
}

}  // namespace treestab
