#include "pubproj/json_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace pubproj {
namespace {

std::string format_double(double v) {
  if (!std::isfinite(v)) throw NumericError("non-finite number in JSON artifact");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void dump_rec(const Json& j, std::string& out, int indent) {
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    std::size_t i = 0;
    for (auto it = j.begin(); it != j.end(); ++it, ++i) {
      out.append(indent + 2, ' ');
      out += Json(it.key()).dump();  // reuse the library's string escaping
      out += ": ";
      dump_rec(it.value(), out, indent + 2);
      out += (i + 1 < j.size()) ? ",\n" : "\n";
    }
    out.append(indent, ' ');
    out += '}';
  } else if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
      return;
    }
    out += "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      out.append(indent + 2, ' ');
      dump_rec(j[i], out, indent + 2);
      out += (i + 1 < j.size()) ? ",\n" : "\n";
    }
    out.append(indent, ' ');
    out += ']';
  } else if (j.is_number_float()) {
    out += format_double(j.get<double>());
  } else {
    out += j.dump();
  }
}

const nlohmann::json& require_field(const nlohmann::json& j, const char* key,
                                    const std::string& where) {
  if (!j.is_object())
    throw InputError(where + ": expected a JSON object");
  auto it = j.find(key);
  if (it == j.end())
    throw InputError(where + ": missing field \"" + key + "\"");
  return *it;
}

int require_int(const nlohmann::json& j, const char* key, const std::string& where) {
  const auto& f = require_field(j, key, where);
  if (!f.is_number_integer())
    throw InputError(where + ": field \"" + key + "\" must be an integer");
  return f.get<int>();
}

double require_weight(const nlohmann::json& j, const std::string& where) {
  const auto& f = require_field(j, "weight", where);
  if (!f.is_number())
    throw InputError(where + ": field \"weight\" must be a number");
  double w = f.get<double>();
  if (!std::isfinite(w) || w < 0.0)
    throw InputError(where + ": field \"weight\" must be finite and >= 0 " +
                     "(negative weights break submodularity)");
  return w;
}

int parse_project_key(const std::string& key, int m, const std::string& where) {
  int j = 0;
  auto [end, ec] = std::from_chars(key.data(), key.data() + key.size(), j);
  if (ec != std::errc() || end != key.data() + key.size() || j < 1 || j > m)
    throw InputError(where + ": set key \"" + key + "\" is not a project index in [1," +
                     std::to_string(m) + "]");
  return j - 1;
}

std::vector<int> int_array(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) throw InputError(where + ": expected an array of integers");
  std::vector<int> out;
  out.reserve(j.size());
  for (const auto& e : j) {
    if (!e.is_number_integer())
      throw InputError(where + ": expected an array of integers");
    out.push_back(e.get<int>());
  }
  return out;
}

Matroid matroid_from_json(const nlohmann::json& j, int m, const std::string& where) {
  const auto& kind_f = require_field(j, "kind", where);
  if (!kind_f.is_string())
    throw InputError(where + ": field \"kind\" must be a string");
  const std::string kind = kind_f.get<std::string>();
  try {
    if (kind == "uniform") {
      return Matroid::uniform(m, require_int(j, "rank", where));
    }
    if (kind == "partition") {
      const auto& blocks_f = require_field(j, "blocks", where);
      if (!blocks_f.is_array())
        throw InputError(where + ": field \"blocks\" must be an array of arrays");
      std::vector<std::vector<int>> blocks;
      for (const auto& b : blocks_f) {
        auto block = int_array(b, where + ", blocks");
        for (int& p : block) {
          if (p < 1 || p > m)
            throw InputError(where + ": block entry " + std::to_string(p) +
                             " is not a project index in [1," + std::to_string(m) + "]");
          --p;  // projects are 1-based on disk
        }
        blocks.push_back(std::move(block));
      }
      auto caps = int_array(require_field(j, "caps", where), where + ", caps");
      return Matroid::partition(m, std::move(blocks), std::move(caps));
    }
    if (kind == "graphic") {
      const auto& edges_f = require_field(j, "edges", where);
      if (!edges_f.is_array())
        throw InputError(where + ": field \"edges\" must be an array of [u,v] pairs");
      if (static_cast<int>(edges_f.size()) != m)
        throw InputError(where + ": graphic matroid needs exactly m=" +
                         std::to_string(m) + " edges, got " +
                         std::to_string(edges_f.size()));
      std::vector<std::pair<int, int>> edges;
      for (const auto& e : edges_f) {
        auto pair = int_array(e, where + ", edges");
        if (pair.size() != 2)
          throw InputError(where + ": each edge must be a [u,v] pair");
        edges.emplace_back(pair[0], pair[1]);
      }
      return Matroid::graphic(std::move(edges));
    }
  } catch (const InputError& e) {
    // Matroid factories throw without location context; re-anchor.
    std::string msg = e.what();
    if (msg.rfind(where, 0) == 0) throw;
    throw InputError(where + ": " + msg);
  }
  throw InputError(where + ": unknown matroid kind \"" + kind +
                   "\" (expected uniform, partition or graphic)");
}

Json matroid_to_json(const Matroid& mat) {
  Json j;
  switch (mat.kind()) {
    case Matroid::Kind::kUniform:
      j["kind"] = "uniform";
      j["rank"] = mat.uniform_rank();
      break;
    case Matroid::Kind::kPartition: {
      j["kind"] = "partition";
      Json blocks = Json::array();
      for (const auto& block : mat.blocks()) {
        Json b = Json::array();
        for (int p : block) b.push_back(p + 1);
        blocks.push_back(std::move(b));
      }
      j["blocks"] = std::move(blocks);
      j["caps"] = mat.caps();
      break;
    }
    case Matroid::Kind::kGraphic: {
      j["kind"] = "graphic";
      Json edges = Json::array();
      for (const auto& [u, v] : mat.edges()) edges.push_back(Json::array({u, v}));
      j["edges"] = std::move(edges);
      break;
    }
  }
  return j;
}

MrsValuation coverage_from_json(const nlohmann::json& j, int m, const std::string& where) {
  const auto& uni = require_field(j, "universe", where);
  if (!uni.is_array())
    throw InputError(where + ": field \"universe\" must be an array of points");
  std::vector<CoveragePoint> points;
  std::unordered_map<std::string, int> index;
  for (const auto& entry : uni) {
    const auto& id_f = require_field(entry, "id", where + ", universe");
    if (!id_f.is_string())
      throw InputError(where + ": universe point field \"id\" must be a string");
    std::string id = id_f.get<std::string>();
    if (!index.emplace(id, static_cast<int>(points.size())).second)
      throw InputError(where + ": duplicate universe point id \"" + id + "\"");
    double w = require_weight(entry, where + ", universe point \"" + id + "\"");
    points.push_back({std::move(id), w, 0});
  }
  const auto& sets = require_field(j, "sets", where);
  if (!sets.is_object())
    throw InputError(where + ": field \"sets\" must map project indices to id lists");
  for (const auto& [key, ids] : sets.items()) {
    int p = parse_project_key(key, m, where);
    if (!ids.is_array())
      throw InputError(where + ": set \"" + key + "\" must be an array of point ids");
    for (const auto& id_f : ids) {
      if (!id_f.is_string())
        throw InputError(where + ": set \"" + key + "\" must contain string ids");
      auto it = index.find(id_f.get<std::string>());
      if (it == index.end())
        throw InputError(where + ": set \"" + key + "\" references unknown point id \"" +
                         id_f.get<std::string>() + "\"");
      points[it->second].covered_by |= SetMask{1} << p;
    }
  }
  return MrsValuation::from_coverage(m, std::move(points));
}

MrsValuation valuation_from_json_at(const nlohmann::json& j, int project_count,
                                    const std::string& where) {
  const auto& type_f = require_field(j, "type", where);
  if (!type_f.is_string())
    throw InputError(where + ": field \"type\" must be a string");
  const std::string type = type_f.get<std::string>();
  if (type == "coverage") return coverage_from_json(j, project_count, where);
  if (type == "mrs") {
    const auto& terms_f = require_field(j, "terms", where);
    if (!terms_f.is_array())
      throw InputError(where + ": field \"terms\" must be an array");
    std::vector<MrsTerm> terms;
    int t = 0;
    for (const auto& term : terms_f) {
      std::string at = where + ", term " + std::to_string(++t);
      double w = require_weight(term, at);
      terms.push_back({w, matroid_from_json(require_field(term, "matroid", at),
                                            project_count, at)});
    }
    return MrsValuation::from_terms(project_count, std::move(terms));
  }
  throw InputError(where + ": unknown valuation type \"" + type +
                   "\" (expected coverage or mrs)");
}

}  // namespace

std::string canonical_dump(const Json& j) {
  std::string out;
  dump_rec(j, out, 0);
  out += '\n';
  return out;
}

MrsValuation valuation_from_json(const nlohmann::json& j, int project_count) {
  return valuation_from_json_at(j, project_count, "valuation");
}

Json valuation_to_json(const MrsValuation& v) {
  Json j;
  if (v.rep() == MrsValuation::Rep::kCoverage) {
    j["type"] = "coverage";
    Json uni = Json::array();
    for (const auto& pt : v.coverage_points())
      uni.push_back(Json{{"id", pt.id}, {"weight", pt.weight}});
    j["universe"] = std::move(uni);
    Json sets = Json::object();
    for (int p = 0; p < v.project_count(); ++p) {
      Json ids = Json::array();
      for (const auto& pt : v.coverage_points())
        if (contains(pt.covered_by, p)) ids.push_back(pt.id);
      if (!ids.empty()) sets[std::to_string(p + 1)] = std::move(ids);
    }
    j["sets"] = std::move(sets);
  } else {
    j["type"] = "mrs";
    Json terms = Json::array();
    for (const auto& term : v.terms())
      terms.push_back(Json{{"weight", term.weight}, {"matroid", matroid_to_json(term.matroid)}});
    j["terms"] = std::move(terms);
  }
  return j;
}

Instance instance_from_json(const nlohmann::json& j) {
  int n = require_int(j, "n", "instance");
  int m = require_int(j, "m", "instance");
  int k = require_int(j, "k", "instance");
  const auto& players = require_field(j, "players", "instance");
  if (!players.is_array())
    throw InputError("instance: field \"players\" must be an array of valuations");
  if (static_cast<int>(players.size()) != n)
    throw InputError("instance: n=" + std::to_string(n) + " but \"players\" has " +
                     std::to_string(players.size()) + " entries");
  if (m < 1 || m > kMaxProjects)
    throw InputError("instance: m must be in [1," + std::to_string(kMaxProjects) + "]");
  std::vector<MrsValuation> vals;
  vals.reserve(players.size());
  int i = 0;
  for (const auto& pj : players)
    vals.push_back(valuation_from_json_at(pj, m, "player " + std::to_string(++i)));
  return Instance(k, std::move(vals));
}

Json instance_to_json(const Instance& inst) {
  Json j;
  j["n"] = inst.n;
  j["m"] = inst.m;
  j["k"] = inst.k;
  Json players = Json::array();
  for (const auto& v : inst.valuations) players.push_back(valuation_to_json(v));
  j["players"] = std::move(players);
  return j;
}

Instance load_instance_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open instance file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);  // parse errors report line and column
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
  return instance_from_json(j);
}

Json solve_report_to_json(const SolveReport& rep) {
  Json j;
  j["objective_value"] = rep.objective_value;
  j["duality_gap"] = rep.duality_gap;
  j["tolerance_achieved"] = rep.tolerance_achieved;
  j["iterations"] = rep.iterations;
  j["objective_evals"] = rep.objective_evals;
  j["gradient_evals"] = rep.gradient_evals;
  j["stalled"] = rep.stalled;
  return j;
}

Json outcome_to_json(const MechanismOutcome& out) {
  Json j;
  j["chosen"] = set_to_string(out.chosen);
  j["chosen_indices"] = [&] {
    Json arr = Json::array();
    for (int p : set_to_indices(out.chosen)) arr.push_back(p + 1);
    return arr;
  }();
  j["expected_welfare"] = out.expected_welfare;
  j["payments"] = out.payments;
  j["expected_payments"] = out.expected_payments;
  j["x_star"] = out.solve_report.x_star;
  j["rounding"] = out.scheme == RoundingScheme::kRkPlus ? "rkplus" : "rk";
  j["solver"] = solve_report_to_json(out.solve_report);
  Json pivots = Json::array();
  for (const auto& rep : out.pivot_reports) pivots.push_back(solve_report_to_json(rep));
  j["pivot_solvers"] = std::move(pivots);
  Json trace;
  trace["master_seed"] = out.rng_trace.master_seed;
  trace["interval_draws"] = out.rng_trace.rounding.p;
  trace["cancel_branch"] = out.rng_trace.rounding.cancel_branch;
  if (out.rng_trace.rounding.cancel_branch) {
    trace["pre_cancel"] = set_to_string(out.rng_trace.rounding.pre_cancel);
    trace["q2"] = out.rng_trace.rounding.q2;
    trace["jstar"] = out.rng_trace.rounding.jstar >= 0 ? out.rng_trace.rounding.jstar + 1 : -1;
  }
  if (out.rng_trace.composed_exact_branch) trace["composed_exact_branch"] = true;
  if (out.rng_trace.composed_payments_truncated) trace["composed_payments_truncated"] = true;
  j["rng_trace"] = std::move(trace);
  return j;
}

Json distribution_to_json(const ExactDistribution& dist) {
  Json j;
  j["m"] = dist.project_count();
  j["k"] = dist.draw_bound();
  Json support = Json::object();
  for (SetMask s = 0; s < dist.probs().size(); ++s)
    if (dist.prob(s) != 0.0) support[set_to_string(s)] = dist.prob(s);
  j["probabilities"] = std::move(support);
  Json marg = Json::array();
  for (int p = 0; p < dist.project_count(); ++p) marg.push_back(dist.marginal(p));
  j["marginals"] = std::move(marg);
  return j;
}

Json audit_to_json(const AuditReport& rep) {
  Json j;
  j["suite"] = rep.suite;
  j["seed"] = rep.seed;
  j["all_passed"] = rep.all_passed();
  j["min_margin"] = rep.min_margin();
  Json checks = Json::array();
  for (const auto& c : rep.checks) {
    Json cj;
    cj["name"] = c.name;
    cj["passed"] = c.passed;
    cj["margin"] = c.margin;
    if (!c.details.empty()) cj["details"] = c.details;
    checks.push_back(std::move(cj));
  }
  j["checks"] = std::move(checks);
  return j;
}

}  // namespace pubproj
