#pragma once

// Structured outcome of a verification check. The pass flag is a pure
// function of the recorded comparisons, so a deserialized report can be
// re-evaluated and must agree with the stored flag.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sgdfclt/linalg.hpp"

namespace sgdfclt {

using Json = nlohmann::ordered_json;

/// How a statistic is judged against its target; doubles as the recorded
/// tolerance basis.
enum class Rule {
  absolute,       // |s - t| <= tol
  relative,       // |s - t| <= tol |t|
  se_multiple,    // |s - t| <= tol * se
  at_most,        // s <= t + tol
  at_least,       // s >= t - tol
  below,          // s < t
  below_or_zero,  // s < t, or s == t == 0
};

inline std::string_view to_string(Rule r) {
  switch (r) {
    case Rule::absolute: return "absolute";
    case Rule::relative: return "relative";
    case Rule::se_multiple: return "se_multiple";
    case Rule::at_most: return "at_most";
    case Rule::at_least: return "at_least";
    case Rule::below: return "below";
    case Rule::below_or_zero: return "below_or_zero";
  }
  return "unknown";
}

inline Rule parse_rule(std::string_view s) {
  for (auto r : {Rule::absolute, Rule::relative, Rule::se_multiple, Rule::at_most, Rule::at_least, Rule::below,
                 Rule::below_or_zero})
    if (to_string(r) == s) return r;
  throw std::invalid_argument("unknown comparison rule: " + std::string(s));
}

struct Comparison {
  std::string name;
  double statistic = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  double se = 0.0;
  Rule rule = Rule::absolute;

  bool passed() const {
    const double s = statistic, t = target;
    if (!std::isfinite(s) || !std::isfinite(t)) return false;
    switch (rule) {
      case Rule::absolute: return std::abs(s - t) <= tolerance;
      case Rule::relative: return std::abs(s - t) <= tolerance * std::abs(t);
      case Rule::se_multiple: return std::abs(s - t) <= tolerance * se;
      case Rule::at_most: return s <= t + tolerance;
      case Rule::at_least: return s >= t - tolerance;
      case Rule::below: return s < t;
      case Rule::below_or_zero: return s < t || (s == 0.0 && t == 0.0);
    }
    return false;
  }

  /// |s - t| / se, or 0 when both the deviation and se vanish.
  double deviation_in_se() const {
    const double dev = std::abs(statistic - target);
    if (se > 0.0) return dev / se;
    return dev == 0.0 ? 0.0 : INFINITY;
  }
};

struct VerificationReport {
  std::string check;
  std::string model;
  Json parameters = Json::object();
  std::vector<Comparison> comparisons;
  Json diagnostics = Json::object();
  std::vector<std::string> notes;
  double wall_seconds = 0.0;  // kept out of the report document; see the run manifest
  bool pass = false;

  bool evaluate() const {
    if (comparisons.empty()) return false;
    for (const auto& c : comparisons)
      if (!c.passed()) return false;
    return true;
  }
  void finalize() { pass = evaluate(); }

  void add(std::string name, double statistic, double target, double tolerance, Rule rule, double se = 0.0) {
    comparisons.push_back({std::move(name), statistic, target, tolerance, se, rule});
  }
};

inline Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}
inline Json to_json(const SymMatrix& m) { return to_json(m.matrix()); }

inline Json to_json(const Comparison& c) {
  return Json{{"name", c.name},           {"statistic", c.statistic}, {"target", c.target},
              {"tolerance", c.tolerance}, {"se", c.se},               {"basis", std::string(to_string(c.rule))},
              {"pass", c.passed()}};
}

inline Json to_json(const VerificationReport& r) {
  Json cmp = Json::array();
  for (const auto& c : r.comparisons) cmp.push_back(to_json(c));
  return Json{{"check", r.check},          {"model", r.model},  {"parameters", r.parameters},
              {"comparisons", cmp},        {"diagnostics", r.diagnostics}, {"notes", r.notes},
              {"pass", r.pass}};
}

inline VerificationReport report_from_json(const Json& j) {
  VerificationReport r;
  r.check = j.at("check").get<std::string>();
  r.model = j.at("model").get<std::string>();
  r.parameters = j.at("parameters");
  r.diagnostics = j.value("diagnostics", Json::object());
  for (const auto& n : j.value("notes", Json::array())) r.notes.push_back(n.get<std::string>());
  for (const auto& c : j.at("comparisons"))
    r.comparisons.push_back({c.at("name").get<std::string>(), c.at("statistic").get<double>(),
                             c.at("target").get<double>(), c.at("tolerance").get<double>(), c.at("se").get<double>(),
                             parse_rule(c.at("basis").get<std::string>())});
  r.pass = j.at("pass").get<bool>();
  return r;
}

}  // namespace sgdfclt
