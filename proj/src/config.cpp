#include "synthref/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "synthref/errors.hpp"

namespace synthref {

namespace fs = std::filesystem;
using json = nlohmann::json;

void RunConfig::check() const {
  if (n < 2) throw ConfigError("n must be >= 2, got " + std::to_string(n));
  if (!seed) throw ConfigError("seed is required");
  if (n_samples < 1) throw ConfigError("n_samples must be >= 1");
  if (concurrency < 1) throw ConfigError("concurrency must be >= 1");
  if (dataset != "summeval" && dataset != "topicalchat" && dataset != "hanna" &&
      dataset != "canonical") {
    throw ConfigError("unknown dataset '" + dataset + "'");
  }
  if (dataset_path.empty()) throw ConfigError("dataset_path is required");
  if (dataset == "canonical" && !contexts_path) {
    throw ConfigError("canonical datasets need contexts_path");
  }
  if (backend == BackendKind::openai_compatible_http && !endpoint) {
    throw ConfigError("the http backend needs an endpoint");
  }
  if (levels.empty()) throw ConfigError("no meta-evaluation levels selected");
}

namespace {

std::string as_string(std::string_view key, const json& v) {
  if (!v.is_string()) throw ConfigError("'" + std::string(key) + "' must be a string");
  return v.get<std::string>();
}

long long as_int(std::string_view key, const json& v) {
  if (!v.is_number_integer()) throw ConfigError("'" + std::string(key) + "' must be an integer");
  return v.get<long long>();
}

double as_real(std::string_view key, const json& v) {
  if (!v.is_number()) throw ConfigError("'" + std::string(key) + "' must be a number");
  return v.get<double>();
}

bool as_bool(std::string_view key, const json& v) {
  if (!v.is_boolean()) throw ConfigError("'" + std::string(key) + "' must be true or false");
  return v.get<bool>();
}

std::vector<std::string> as_list(std::string_view key, const json& v) {
  std::vector<std::string> out;
  if (v.is_string()) {
    // Comma-separated shorthand, convenient for flags.
    std::stringstream ss(v.get<std::string>());
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }
  if (!v.is_array()) throw ConfigError("'" + std::string(key) + "' must be a list");
  for (const auto& e : v) out.push_back(as_string(key, e));
  return out;
}

}  // namespace

void apply_setting(RunConfig& c, std::string_view key, const json& v) {
  try {
    if (key == "backend") {
      const auto s = as_string(key, v);
      if (s == "mock") {
        c.backend = BackendKind::mock;
      } else if (s == "http" || s == "openai") {
        c.backend = BackendKind::openai_compatible_http;
      } else {
        throw ConfigError("unknown backend '" + s + "'");
      }
    } else if (key == "model") {
      c.model = as_string(key, v);
    } else if (key == "endpoint") {
      c.endpoint = as_string(key, v);
    } else if (key == "api_style") {
      const auto s = as_string(key, v);
      if (s != "completions" && s != "chat") throw ConfigError("unknown api_style '" + s + "'");
      c.api_style = s == "chat" ? ApiStyle::chat : ApiStyle::completions;
    } else if (key == "api_key_env") {
      c.api_key_env = as_string(key, v);
    } else if (key == "concurrency") {
      c.concurrency = static_cast<int>(as_int(key, v));
    } else if (key == "mock_table") {
      c.mock_table = as_string(key, v);
    } else if (key == "dataset") {
      c.dataset = as_string(key, v);
    } else if (key == "dataset_path") {
      c.dataset_path = as_string(key, v);
    } else if (key == "contexts_path") {
      c.contexts_path = as_string(key, v);
    } else if (key == "dimensions_file") {
      c.dimensions_file = as_string(key, v);
    } else if (key == "dimensions") {
      c.dimensions = as_list(key, v);
    } else if (key == "allow_missing_text") {
      c.allow_missing_text = as_bool(key, v);
    } else if (key == "annotator") {
      c.annotator = static_cast<int>(as_int(key, v));
    } else if (key == "asset_dir") {
      c.asset_dir = as_string(key, v);
    } else if (key == "n") {
      c.n = static_cast<int>(as_int(key, v));
    } else if (key == "variant") {
      c.variant = score_variant_from_string(as_string(key, v));
    } else if (key == "n_samples") {
      c.n_samples = static_cast<int>(as_int(key, v));
    } else if (key == "similar_weight") {
      c.similar_weight = as_real(key, v);
    } else if (key == "seed") {
      const auto s = as_int(key, v);
      if (s < 0) throw ConfigError("seed must be non-negative");
      c.seed = static_cast<std::uint64_t>(s);
    } else if (key == "temperature") {
      c.temperature = as_real(key, v);
    } else if (key == "top_p") {
      c.top_p = as_real(key, v);
    } else if (key == "max_new_tokens") {
      c.max_new_tokens = static_cast<int>(as_int(key, v));
    } else if (key == "cache_dir") {
      c.cache_dir = as_string(key, v);
    } else if (key == "out") {
      c.out = as_string(key, v);
    } else if (key == "levels" || key == "level") {
      c.levels.clear();
      for (const auto& s : as_list(key, v)) c.levels.push_back(level_from_string(s));
    } else if (key == "correlation") {
      c.correlation = correlation_kind_from_string(as_string(key, v));
    } else if (key == "impute_zero") {
      c.impute_zero = as_bool(key, v);
    } else {
      throw ConfigError("unknown config key '" + std::string(key) + "'");
    }
  } catch (const ValidationError& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

namespace {

class ValueParser {
 public:
  ValueParser(std::string_view text, std::size_t line) : s_(text), line_(line) {}

  json parse() {
    json v = value();
    skip_ws();
    if (i_ != s_.size()) fail("trailing characters");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("config line " + std::to_string(line_) + ": " + what);
  }

  void skip_ws() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t')) ++i_;
  }

  json value() {
    skip_ws();
    if (i_ >= s_.size()) fail("missing value");
    const char c = s_[i_];
    if (c == '"') return string();
    if (c == '[') return list();
    if (s_.substr(i_, 4) == "true") {
      i_ += 4;
      return true;
    }
    if (s_.substr(i_, 5) == "false") {
      i_ += 5;
      return false;
    }
    return number();
  }

  json string() {
    ++i_;
    std::string out;
    while (i_ < s_.size() && s_[i_] != '"') {
      char c = s_[i_++];
      if (c == '\\') {
        if (i_ >= s_.size()) fail("dangling escape");
        const char e = s_[i_++];
        switch (e) {
          case 'n':
            c = '\n';
            break;
          case 't':
            c = '\t';
            break;
          case '"':
          case '\\':
            c = e;
            break;
          default:
            fail(std::string("unknown escape \\") + e);
        }
      }
      out += c;
    }
    if (i_ >= s_.size()) fail("unterminated string");
    ++i_;
    return out;
  }

  json list() {
    ++i_;
    json out = json::array();
    skip_ws();
    if (i_ < s_.size() && s_[i_] == ']') {
      ++i_;
      return out;
    }
    for (;;) {
      out.push_back(value());
      skip_ws();
      if (i_ >= s_.size()) fail("unterminated list");
      if (s_[i_] == ']') {
        ++i_;
        return out;
      }
      if (s_[i_] != ',') fail("expected ',' in list");
      ++i_;
    }
  }

  json number() {
    const std::size_t start = i_;
    while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '.' ||
                              s_[i_] == '-' || s_[i_] == '+' || s_[i_] == '_')) {
      ++i_;
    }
    std::string tok(s_.substr(start, i_ - start));
    std::erase(tok, '_');
    if (tok.empty()) fail("unexpected character");
    long long iv = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), iv);
    if (ec == std::errc() && p == tok.data() + tok.size()) return iv;
    try {
      std::size_t used = 0;
      const double dv = std::stod(tok, &used);
      if (used == tok.size()) return dv;
    } catch (const std::exception&) {
    }
    fail("cannot parse value '" + tok + "'");
  }

  std::string_view s_;
  std::size_t line_;
  std::size_t i_ = 0;
};

std::string_view strip(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Drops a trailing comment that is not inside a string.
std::string_view uncomment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && in_string) {
      ++i;
    } else if (line[i] == '"') {
      in_string = !in_string;
    } else if (line[i] == '#' && !in_string) {
      return line.substr(0, i);
    }
  }
  return line;
}

}  // namespace

std::map<std::string, json> parse_config_text(std::string_view text) {
  std::map<std::string, json> out;
  std::size_t lineno = 0;
  while (!text.empty()) {
    ++lineno;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    line = strip(uncomment(line));
    if (line.empty() || (line.front() == '[' && line.back() == ']')) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key(strip(line.substr(0, eq)));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (out.contains(key)) {
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    out[key] = ValueParser(line.substr(eq + 1), lineno).parse();
  }
  return out;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  RunConfig config;
  for (const auto& [key, value] : parse_config_text(buf.str())) apply_setting(config, key, value);
  return config;
}

}  // namespace synthref
