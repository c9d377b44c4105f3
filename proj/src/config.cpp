#include "diracforge/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace df {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

}  // namespace

bool Config::has(const std::string& section, const std::string& key) const {
  auto it = kv_.find(section);
  return it != kv_.end() && it->second.count(key) > 0;
}

std::string Config::get(const std::string& section,
                        const std::string& key) const {
  auto it = kv_.find(section);
  if (it == kv_.end() || !it->second.count(key))
    throw ConfigError("missing config key [" + section + "] " + key);
  return it->second.at(key);
}

std::string Config::get(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
  return has(section, key) ? get(section, key) : fallback;
}

double Config::get_double(const std::string& section,
                          const std::string& key) const {
  const std::string s = get(section, key);
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (trim(s.substr(pos)).empty()) return v;
  } catch (...) {
  }
  throw ConfigError("bad number for [" + section + "] " + key + ": " + s);
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

int Config::get_int(const std::string& section, const std::string& key) const {
  const double v = get_double(section, key);
  const int i = int(v);
  if (double(i) != v)
    throw ConfigError("expected integer for [" + section + "] " + key);
  return i;
}

int Config::get_int(const std::string& section, const std::string& key,
                    int fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

bool Config::get_bool(const std::string& section, const std::string& key,
                      bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string s = get(section, key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("bad boolean for [" + section + "] " + key + ": " + s);
}

std::vector<double> Config::get_doubles(const std::string& section,
                                        const std::string& key) const {
  std::vector<double> out;
  for (const std::string& item : split_list(get(section, key))) {
    try {
      out.push_back(std::stod(item));
    } catch (...) {
      throw ConfigError("bad list entry for [" + section + "] " + key + ": " +
                        item);
    }
  }
  return out;
}

std::vector<double> Config::get_doubles(
    const std::string& section, const std::string& key,
    const std::vector<double>& fallback) const {
  return has(section, key) ? get_doubles(section, key) : fallback;
}

std::vector<int> Config::get_ints(const std::string& section,
                                  const std::string& key) const {
  std::vector<int> out;
  for (double v : get_doubles(section, key)) {
    const int i = int(v);
    if (double(i) != v)
      throw ConfigError("expected integer list for [" + section + "] " + key);
    out.push_back(i);
  }
  return out;
}

std::vector<int> Config::get_ints(const std::string& section,
                                  const std::string& key,
                                  const std::vector<int>& fallback) const {
  return has(section, key) ? get_ints(section, key) : fallback;
}

void Config::set(const std::string& section, const std::string& key,
                 std::string value) {
  kv_[section][key] = std::move(value);
}

std::string Config::dump() const {
  std::ostringstream os;
  for (const auto& [sec, kv] : kv_) {
    os << "[" << sec << "]\n";
    for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
  }
  return os.str();
}

Config parse_config_text(const std::string& text) {
  Config cfg;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    // strip comments
    for (char marker : {';', '#'}) {
      const auto pos = line.find(marker);
      if (pos != std::string::npos) line = line.substr(0, pos);
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("unterminated section at line " +
                          std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value at line " +
                        std::to_string(lineno));
    if (section.empty())
      throw ConfigError("key outside any section at line " +
                        std::to_string(lineno));
    cfg.set(section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

Config parse_config_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("JSON parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("top-level JSON must be an object");
  Config cfg;
  for (const auto& [sec, body] : j.items()) {
    if (!body.is_object())
      throw ConfigError("section '" + sec + "' must be an object");
    for (const auto& [key, val] : body.items()) {
      std::string s;
      if (val.is_string()) {
        s = val.get<std::string>();
      } else if (val.is_array()) {
        for (std::size_t i = 0; i < val.size(); ++i) {
          if (i) s += ", ";
          s += val[i].is_string() ? val[i].get<std::string>()
                                  : val[i].dump();
        }
      } else {
        s = val.dump();
      }
      cfg.set(sec, key, s);
    }
  }
  return cfg;
}

Config parse_config(const std::string& text) {
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') continue;
    return c == '{' ? parse_config_json(text) : parse_config_text(text);
  }
  return Config();
}

Config load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

}  // namespace df
