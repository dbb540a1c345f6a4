#include "smcmc/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace smcmc {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return "";
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool valid_key(const std::string& key) {
  bool saw_dot = false;
  bool word_open = false;
  for (char c : key) {
    if (c == '.') {
      if (!word_open) {
        return false;
      }
      saw_dot = true;
      word_open = false;
    } else if (std::islower(static_cast<unsigned char>(c)) ||
               std::isdigit(static_cast<unsigned char>(c)) || c == '_') {
      word_open = true;
    } else {
      return false;
    }
  }
  return saw_dot && word_open;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text, const std::string& origin) {
  KeyValueConfig cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    std::string body = trim(line);
    if (body.empty() || body[0] == '#') {
      continue;
    }
    const auto hash = body.find('#');
    if (hash != std::string::npos) {
      body = trim(body.substr(0, hash));
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(where + ": expected 'key = value'");
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (!valid_key(key)) {
      throw std::invalid_argument(where + ": malformed key '" + key +
                                  "' (want dotted lowercase words such as model.d)");
    }
    if (value.empty()) {
      throw std::invalid_argument(where + ": empty value for '" + key + "'");
    }
    if (cfg.values_.count(key) != 0) {
      throw std::invalid_argument(where + ": duplicate key '" + key + "'");
    }
    cfg.values_[key] = value;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file '" + path + "'");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path);
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  if (!valid_key(key)) {
    throw std::invalid_argument("malformed config key '" + key + "'");
  }
  values_[key] = value;
}

const std::string* KeyValueConfig::lookup(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    return nullptr;
  }
  read_.insert(key);
  return &it->second;
}

void KeyValueConfig::bad_value(const std::string& key, const std::string& expected) const {
  throw std::invalid_argument(origin_ + ": '" + key + "' = '" + values_.at(key) + "' is not " +
                              expected);
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  const std::string* v = lookup(key);
  return v != nullptr ? *v : fallback;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const std::string* v = lookup(key);
  if (v == nullptr) {
    return fallback;
  }
  // A fraction such as 1/3 is accepted for convenience.
  const auto slash = v->find('/');
  try {
    std::size_t used = 0;
    if (slash != std::string::npos) {
      const double num = std::stod(v->substr(0, slash), &used);
      if (used != slash) {
        bad_value(key, "a number");
      }
      const std::string den_text = v->substr(slash + 1);
      const double den = std::stod(den_text, &used);
      if (used != den_text.size() || den == 0.0) {
        bad_value(key, "a number");
      }
      return num / den;
    }
    const double out = std::stod(*v, &used);
    if (used != v->size()) {
      bad_value(key, "a number");
    }
    return out;
  } catch (const std::logic_error&) {
    bad_value(key, "a number");
  }
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
  const std::string* v = lookup(key);
  if (v == nullptr) {
    return fallback;
  }
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    bad_value(key, "an integer");
  }
  return out;
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  const std::string* v = lookup(key);
  if (v == nullptr) {
    return fallback;
  }
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    bad_value(key, "an unsigned 64-bit integer");
  }
  return out;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const std::string* v = lookup(key);
  if (v == nullptr) {
    return fallback;
  }
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") {
    return true;
  }
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") {
    return false;
  }
  bad_value(key, "a boolean");
}

std::vector<std::int64_t> KeyValueConfig::get_int_list(
    const std::string& key, const std::vector<std::int64_t>& fallback) const {
  const std::string* v = lookup(key);
  if (v == nullptr) {
    return fallback;
  }
  std::vector<std::int64_t> out;
  std::stringstream ss(*v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    std::int64_t x = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      bad_value(key, "a comma-separated list of integers");
    }
    out.push_back(x);
  }
  return out;
}

std::vector<std::string> KeyValueConfig::unread_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    if (read_.count(k) == 0) {
      out.push_back(k);
    }
  }
  return out;
}

void KeyValueConfig::require_all_read() const {
  const auto unread = unread_keys();
  if (unread.empty()) {
    return;
  }
  std::string msg = origin_ + ": unknown key";
  msg += unread.size() > 1 ? "s " : " ";
  for (std::size_t i = 0; i < unread.size(); ++i) {
    msg += (i > 0 ? ", " : "") + unread[i];
  }
  throw std::invalid_argument(msg);
}

std::string KeyValueConfig::serialize() const {
  std::string out;
  for (const auto& [k, v] : values_) {
    out += k + " = " + v + "\n";
  }
  return out;
}

}  // namespace smcmc
