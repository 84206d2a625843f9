#include "hpshield/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace hpshield {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool valid_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) return false;
  }
  return true;
}

}  // namespace

double parse_number(std::string_view text, std::string_view what) {
  std::string_view t = trim(text);
  if (!t.empty() && t.front() == '+') t.remove_prefix(1);
  double v = 0;
  auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || end != t.data() + t.size() || !std::isfinite(v)) {
    throw ConfigError(std::string(what) + ": expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

void Config::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  merge_text(buffer.str(), path.string());
}

void Config::merge_text(std::string_view text, const std::string& origin) {
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    auto where = [&] { return origin + ":" + std::to_string(line_no) + ": "; };
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where() + "unterminated section header");
      std::string_view name = trim(line.substr(1, line.size() - 2));
      if (!name.empty() && !valid_key(name)) throw ConfigError(where() + "bad section name");
      section = std::string(name);
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where() + "expected 'key = value'");
    std::string_view key = trim(line.substr(0, eq));
    if (!valid_key(key)) throw ConfigError(where() + "bad key '" + std::string(key) + "'");
    std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    values_[full] = std::string(trim(line.substr(eq + 1)));
  }
}

void Config::merge_environment(std::string_view prefix) {
  for (auto& [key, value] : values_) {
    std::string name(prefix);
    for (char c : key) {
      name += (c == '.' || c == '-') ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    if (const char* env = std::getenv(name.c_str())) value = env;
  }
}

std::string Config::string(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing configuration key '" + std::string(key) + "'");
  return it->second;
}

std::string Config::string(std::string_view key, std::string fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::number(std::string_view key) const { return parse_number(string(key), key); }

double Config::number(std::string_view key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

long long Config::integer(std::string_view key) const {
  std::string text = string(key);
  std::string_view t = trim(text);
  long long v = 0;
  auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || end != t.data() + t.size()) {
    throw ConfigError(std::string(key) + ": expected an integer, got '" + text + "'");
  }
  return v;
}

long long Config::integer(std::string_view key, long long fallback) const {
  return has(key) ? integer(key) : fallback;
}

bool Config::boolean(std::string_view key) const {
  std::string text = string(key);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(std::string(key) + ": expected true or false, got '" + text + "'");
}

bool Config::boolean(std::string_view key, bool fallback) const { return has(key) ? boolean(key) : fallback; }

Config::Map Config::with_prefix(std::string_view prefix) const {
  Map out;
  for (const auto& [k, v] : values_) {
    if (k.size() > prefix.size() && k.compare(0, prefix.size(), prefix) == 0) out.emplace(k.substr(prefix.size()), v);
  }
  return out;
}

std::string Config::dump() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

}  // namespace hpshield
