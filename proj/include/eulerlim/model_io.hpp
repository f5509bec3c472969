#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "eulerlim/errors.hpp"
#include "eulerlim/model.hpp"

namespace eulerlim {

namespace detail {

inline std::size_t line_of_offset(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(), text.begin() + byte, '\n'));
}

inline nlohmann::json parse_json_document(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1),
                     e.what());
  }
}

inline void require_only_keys(const nlohmann::json& obj,
                              const std::set<std::string>& allowed,
                              const std::string& where) {
  if (!obj.is_object()) throw SchemaError(where, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) {
      throw SchemaError(where.empty() ? key : where + "." + key,
                        "unknown field");
    }
  }
  for (const auto& key : allowed) {
    if (!obj.contains(key)) {
      throw SchemaError(where.empty() ? key : where + "." + key,
                        "missing field");
    }
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace detail

/// Parses a model document. Structural invariants are enforced; the
/// condition validators are not run.
inline SpinModel load_model(const std::string& text) {
  using nlohmann::json;
  const json doc = detail::parse_json_document(text);
  detail::require_only_keys(doc, {"states", "n_cons", "xi", "base_measure", "rates"},
                            "");
  try {
    if (!doc["states"].is_array()) throw SchemaError("states", "expected array");
    std::vector<std::string> states;
    for (const auto& s : doc["states"]) {
      if (!s.is_string()) throw SchemaError("states", "labels must be strings");
      states.push_back(s.get<std::string>());
    }
    if (!doc["n_cons"].is_number_integer() || doc["n_cons"].get<long>() < 1) {
      throw SchemaError("n_cons", "expected a positive integer");
    }
    const auto n_cons = doc["n_cons"].get<std::size_t>();

    if (!doc["xi"].is_array()) throw SchemaError("xi", "expected array of rows");
    std::vector<std::vector<int>> xi;
    for (const auto& row : doc["xi"]) {
      if (!row.is_array()) throw SchemaError("xi", "expected array of rows");
      std::vector<int> r;
      for (const auto& v : row) {
        if (!v.is_number_integer()) throw SchemaError("xi", "entries must be integers");
        r.push_back(v.get<int>());
      }
      xi.push_back(std::move(r));
    }

    if (!doc["base_measure"].is_array()) {
      throw SchemaError("base_measure", "expected array");
    }
    std::vector<double> base;
    for (const auto& v : doc["base_measure"]) {
      if (!v.is_number()) throw SchemaError("base_measure", "entries must be numbers");
      base.push_back(v.get<double>());
    }

    const std::vector<std::string>& labels = states;
    auto index = [&](const json& v, const std::string& field) -> std::size_t {
      if (!v.is_string()) throw SchemaError(field, "state references must be labels");
      auto it = std::find(labels.begin(), labels.end(), v.get<std::string>());
      if (it == labels.end()) {
        throw SchemaError(field, "unknown state '" + v.get<std::string>() + "'");
      }
      return static_cast<std::size_t>(it - labels.begin());
    };

    if (!doc["rates"].is_array()) throw SchemaError("rates", "expected array");
    std::vector<RateEntry> rates;
    std::set<std::array<std::size_t, 4>> seen;
    std::size_t i = 0;
    for (const auto& entry : doc["rates"]) {
      const std::string where = "rates[" + std::to_string(i++) + "]";
      detail::require_only_keys(entry, {"from", "to", "rate"}, where);
      const auto& from = entry["from"];
      const auto& to = entry["to"];
      if (!from.is_array() || from.size() != 2) {
        throw SchemaError(where + ".from", "expected two state labels");
      }
      if (!to.is_array() || to.size() != 2) {
        throw SchemaError(where + ".to", "expected two state labels");
      }
      if (!entry["rate"].is_number()) {
        throw SchemaError(where + ".rate", "expected a number");
      }
      RateEntry e{index(from[0], where + ".from"), index(from[1], where + ".from"),
                  index(to[0], where + ".to"), index(to[1], where + ".to"),
                  entry["rate"].get<double>()};
      if (!(e.rate >= 0.0)) throw SchemaError(where + ".rate", "negative rate");
      if (!seen.insert({e.from_first, e.from_second, e.to_first, e.to_second})
               .second) {
        throw SchemaError(where, "duplicate transition");
      }
      rates.push_back(e);
    }
    return SpinModel(std::move(states), n_cons, std::move(xi), std::move(base),
                     rates);
  } catch (const json::exception& e) {
    throw SchemaError("", e.what());
  }
}

inline SpinModel load_model_file(const std::string& path) {
  return load_model(detail::read_file(path));
}

inline nlohmann::json model_to_json(const SpinModel& model) {
  nlohmann::json doc;
  doc["states"] = model.states();
  doc["n_cons"] = model.n_cons();
  nlohmann::json xi = nlohmann::json::array();
  for (std::size_t w = 0; w < model.size(); ++w) {
    auto row = model.xi(w);
    xi.push_back(std::vector<int>(row.begin(), row.end()));
  }
  doc["xi"] = xi;
  doc["base_measure"] = model.base_measure();
  nlohmann::json rates = nlohmann::json::array();
  for (const auto& e : model.rate_entries()) {
    rates.push_back({{"from", {model.label(e.from_first), model.label(e.from_second)}},
                     {"to", {model.label(e.to_first), model.label(e.to_second)}},
                     {"rate", e.rate}});
  }
  doc["rates"] = rates;
  return doc;
}

inline std::string save_model(const SpinModel& model) {
  return model_to_json(model).dump(2) + "\n";
}

}  // namespace eulerlim
