#pragma once

// Sectioned key-value scenario configs. The native format is INI-like text
// ('[section]', 'key = value', ';' or '#' comments); a JSON object of
// objects is accepted as an alternative and normalized to the same map.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace df {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Config {
 public:
  using Section = std::map<std::string, std::string>;

  bool has(const std::string& section, const std::string& key) const;
  // required accessors throw ConfigError with a located message
  std::string get(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  int get_int(const std::string& section, const std::string& key) const;
  int get_int(const std::string& section, const std::string& key,
              int fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  std::vector<double> get_doubles(const std::string& section,
                                  const std::string& key) const;
  std::vector<double> get_doubles(const std::string& section,
                                  const std::string& key,
                                  const std::vector<double>& fallback) const;
  std::vector<int> get_ints(const std::string& section,
                            const std::string& key) const;
  std::vector<int> get_ints(const std::string& section, const std::string& key,
                            const std::vector<int>& fallback) const;

  void set(const std::string& section, const std::string& key,
           std::string value);
  const std::map<std::string, Section>& sections() const { return kv_; }

  // canonical text dump (sorted sections and keys)
  std::string dump() const;

 private:
  std::map<std::string, Section> kv_;
};

Config parse_config_text(const std::string& text);
Config parse_config_json(const std::string& text);
// dispatches on leading '{' after whitespace
Config parse_config(const std::string& text);
Config load_config_file(const std::string& path);

}  // namespace df
