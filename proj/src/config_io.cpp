#include "dbss/config_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace dbss {

namespace {

using nlohmann::json;

const std::set<std::string> kKnownKeys = {"N",     "K",    "lambda", "mu_ride",   "p",
                                          "alpha", "w",    "r",      "M",         "Z",
                                          "beta",  "mu_remove", "mu_return", "theta",
                                          "name",  "notes"};

const json& require(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing key \"") + key + "\"");
  return j.at(key);
}

int to_int(const json& v, const char* key) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()) {
    return static_cast<int>(v.get<double>());
  }
  throw ConfigError(std::string("\"") + key + "\" must be an integer");
}

template <class T>
T get_as(const json& v, const char* key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("\"") + key + "\" has the wrong type");
  }
}

int parse_index(std::string_view name, std::string& base) {
  const auto open = name.find('[');
  if (open == std::string_view::npos) {
    base = std::string(name);
    return -1;
  }
  if (name.back() != ']') throw ConfigError("bad parameter name " + std::string(name));
  base = std::string(name.substr(0, open));
  return std::stoi(std::string(name.substr(open + 1, name.size() - open - 2))) - 1;
}

}  // namespace

SystemConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& item : j.items()) {
    if (!kKnownKeys.contains(item.key())) throw ConfigError("unknown key \"" + item.key() + "\"");
  }

  SystemConfig c;
  c.regions = to_int(require(j, "N"), "N");
  c.fleet = to_int(require(j, "K"), "K");
  c.arrival_rate = get_as<std::vector<double>>(require(j, "lambda"), "lambda");
  c.ride_rate = get_as<std::vector<std::vector<double>>>(require(j, "mu_ride"), "mu_ride");
  c.route_prob = get_as<std::vector<std::vector<double>>>(require(j, "p"), "p");
  c.failure_rate = get_as<double>(require(j, "alpha"), "alpha");
  c.repair_rate = get_as<double>(require(j, "w"), "w");
  c.repairmen = to_int(require(j, "r"), "r");
  c.removal_batch = to_int(require(j, "M"), "M");
  c.dispatch_batch = to_int(require(j, "Z"), "Z");
  c.dispatch_share = get_as<std::vector<double>>(require(j, "beta"), "beta");
  c.removal_rate = get_as<std::vector<double>>(require(j, "mu_remove"), "mu_remove");
  c.return_rate = get_as<std::vector<double>>(require(j, "mu_return"), "mu_return");
  if (j.contains("theta")) {
    for (const auto& row : get_as<std::vector<std::vector<int>>>(j.at("theta"), "theta")) {
      std::vector<int> zero_based;
      for (int region : row) zero_based.push_back(region - 1);
      c.downlink.push_back(std::move(zero_based));
    }
  }
  return c;
}

SystemConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const SystemConfig& c) {
  json j = json::object();
  j["N"] = c.regions;
  j["K"] = c.fleet;
  j["lambda"] = c.arrival_rate;
  j["mu_ride"] = c.ride_rate;
  j["p"] = c.route_prob;
  j["alpha"] = c.failure_rate;
  j["w"] = c.repair_rate;
  j["r"] = c.repairmen;
  j["M"] = c.removal_batch;
  j["Z"] = c.dispatch_batch;
  j["beta"] = c.dispatch_share;
  j["mu_remove"] = c.removal_rate;
  j["mu_return"] = c.return_rate;
  if (!c.downlink.empty()) {
    json theta = json::array();
    for (const auto& row : c.downlink) {
      json r = json::array();
      for (int region : row) r.push_back(region + 1);
      theta.push_back(r);
    }
    j["theta"] = theta;
  }
  return j.dump(2) + "\n";
}

void set_parameter(SystemConfig& c, std::string_view name, double value) {
  std::string base;
  const int index = parse_index(name, base);
  auto as_int = [&] {
    if (std::floor(value) != value) throw ConfigError(base + " must be an integer");
    return static_cast<int>(value);
  };
  auto indexed = [&](std::vector<double>& v) {
    if (index < 0) {
      std::fill(v.begin(), v.end(), value);
    } else if (index < static_cast<int>(v.size())) {
      v[index] = value;
    } else {
      throw ConfigError("index out of range in " + std::string(name));
    }
  };
  if (base == "alpha") {
    c.failure_rate = value;
  } else if (base == "w") {
    c.repair_rate = value;
  } else if (base == "r") {
    c.repairmen = as_int();
  } else if (base == "M") {
    c.removal_batch = as_int();
  } else if (base == "Z") {
    c.dispatch_batch = as_int();
  } else if (base == "K") {
    c.fleet = as_int();
  } else if (base == "lambda") {
    indexed(c.arrival_rate);
  } else if (base == "mu_remove") {
    indexed(c.removal_rate);
  } else if (base == "mu_return") {
    indexed(c.return_rate);
  } else if (base == "beta") {
    indexed(c.dispatch_share);
  } else {
    throw ConfigError("parameter " + std::string(name) + " cannot be swept");
  }
}

}  // namespace dbss
