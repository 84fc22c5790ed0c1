#include "evmcv/config.hpp"

#include "evmcv/report.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace evmcv {

using nlohmann::json;

namespace {

// --- TOML subset -> json tree ------------------------------------------------

class Reader {
 public:
  Reader(const std::string& text, std::string origin) : origin_(std::move(origin)) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines_.push_back(line);
  }

  json parse() {
    json root = json::object();
    json* table = &root;
    std::string table_name;
    for (line_no_ = 0; line_no_ < lines_.size(); ++line_no_) {
      std::string line = strip(lines_[line_no_]);
      if (line.empty()) continue;
      if (line.rfind("[[", 0) == 0) {
        if (line.size() < 4 || line.substr(line.size() - 2) != "]]") fail("malformed array-of-tables header");
        table_name = trim(line.substr(2, line.size() - 4));
        json& arr = lookup(root, split_name(table_name), true);
        if (arr.is_null()) arr = json::array();
        if (!arr.is_array()) fail("'" + table_name + "' is already a table");
        arr.push_back(json::object());
        table = &arr.back();
        continue;
      }
      if (line.front() == '[') {
        if (line.back() != ']') fail("malformed table header");
        table_name = trim(line.substr(1, line.size() - 2));
        json& t = lookup(root, split_name(table_name), false);
        if (t.is_null()) t = json::object();
        if (!t.is_object()) fail("'" + table_name + "' is not a table");
        table = &t;
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail("expected key = value");
      const std::string key = trim(line.substr(0, eq));
      if (key.empty()) fail("missing key");
      std::string value = trim(line.substr(eq + 1));
      // Arrays may continue over several lines.
      while (bracket_depth(value) > 0) {
        if (++line_no_ >= lines_.size()) fail("unterminated array for key '" + key + "'");
        value += " " + strip(lines_[line_no_]);
      }
      if (table->contains(key)) fail("duplicate key '" + key + "'");
      std::size_t pos = 0;
      (*table)[key] = parse_value(value, pos);
      skip_space(value, pos);
      if (pos != value.size()) fail("trailing characters after value of '" + key + "'");
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(origin_ + ":" + std::to_string(line_no_ + 1) + ": " + what);
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static std::string strip(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '\\' && quoted) {
        ++i;
      } else if (line[i] == '"') {
        quoted = !quoted;
      } else if (line[i] == '#' && !quoted) {
        return trim(line.substr(0, i));
      }
    }
    return trim(line);
  }

  static int bracket_depth(const std::string& s) {
    int depth = 0;
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '\\' && quoted) {
        ++i;
      } else if (s[i] == '"') {
        quoted = !quoted;
      } else if (!quoted && s[i] == '[') {
        ++depth;
      } else if (!quoted && s[i] == ']') {
        --depth;
      }
    }
    return depth;
  }

  std::vector<std::string> split_name(const std::string& name) const {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream in(name);
    while (std::getline(in, part, '.')) {
      part = trim(part);
      if (part.empty()) fail("empty table name component in '" + name + "'");
      parts.push_back(part);
    }
    if (parts.empty()) fail("empty table name");
    return parts;
  }

  // Walks to the named table; intermediate array-of-tables resolve to their last element.
  json& lookup(json& root, const std::vector<std::string>& parts, bool want_array) const {
    json* node = &root;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (node->is_array()) {
        if (node->empty()) fail("table '" + parts[i] + "' has no parent element");
        node = &node->back();
      }
      if (!node->is_object()) fail("'" + parts[i] + "' is nested under a value");
      const bool last = i + 1 == parts.size();
      json& child = (*node)[parts[i]];
      if (!last && child.is_null()) child = json::object();
      if (last && !want_array && child.is_array()) fail("'" + parts[i] + "' is an array of tables");
      node = &child;
    }
    return *node;
  }

  static void skip_space(const std::string& s, std::size_t& pos) {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  }

  json parse_value(const std::string& s, std::size_t& pos) const {
    skip_space(s, pos);
    if (pos >= s.size()) fail("missing value");
    const char c = s[pos];
    if (c == '"') return parse_string(s, pos);
    if (c == '[') {
      ++pos;
      json arr = json::array();
      skip_space(s, pos);
      if (pos < s.size() && s[pos] == ']') {
        ++pos;
        return arr;
      }
      while (true) {
        arr.push_back(parse_value(s, pos));
        skip_space(s, pos);
        if (pos >= s.size()) fail("unterminated array");
        if (s[pos] == ',') {
          ++pos;
          skip_space(s, pos);
          if (pos < s.size() && s[pos] == ']') {  // trailing comma
            ++pos;
            return arr;
          }
          continue;
        }
        if (s[pos] == ']') {
          ++pos;
          return arr;
        }
        fail("expected ',' or ']' in array");
      }
    }
    std::size_t end = pos;
    while (end < s.size() && s[end] != ',' && s[end] != ']' && s[end] != ' ' && s[end] != '\t') ++end;
    const std::string token = s.substr(pos, end - pos);
    pos = end;
    if (token == "true") return true;
    if (token == "false") return false;
    return parse_number(token);
  }

  json parse_string(const std::string& s, std::size_t& pos) const {
    std::string out;
    ++pos;
    while (pos < s.size() && s[pos] != '"') {
      if (s[pos] == '\\') {
        if (++pos >= s.size()) break;
        switch (s[pos]) {
          case 'n':
            out += '\n';
            break;
          case 't':
            out += '\t';
            break;
          case '"':
          case '\\':
            out += s[pos];
            break;
          default:
            fail(std::string("unsupported escape \\") + s[pos]);
        }
      } else {
        out += s[pos];
      }
      ++pos;
    }
    if (pos >= s.size()) fail("unterminated string");
    ++pos;
    return out;
  }

  json parse_number(std::string token) const {
    std::erase(token, '_');
    if (token.empty()) fail("missing value");
    if (token == "inf" || token == "+inf") return std::numeric_limits<double>::infinity();
    if (token == "-inf") return -std::numeric_limits<double>::infinity();
    if (token == "nan") return std::numeric_limits<double>::quiet_NaN();
    const bool is_float = token.find_first_of(".eE") != std::string::npos;
    const char* b = token.data() + (token.front() == '+' ? 1 : 0);
    const char* e = token.data() + token.size();
    if (!is_float) {
      if (token.front() != '-') {
        std::uint64_t u = 0;
        const auto r = std::from_chars(b, e, u);
        if (r.ec == std::errc() && r.ptr == e) return u;
      } else {
        std::int64_t i = 0;
        const auto r = std::from_chars(b, e, i);
        if (r.ec == std::errc() && r.ptr == e) return i;
      }
      fail("invalid value '" + token + "'");
    }
    double d = 0.0;
    const auto r = std::from_chars(b, e, d);
    if (r.ec != std::errc() || r.ptr != e) fail("invalid value '" + token + "'");
    return d;
  }

  std::string origin_;
  std::vector<std::string> lines_;
  std::size_t line_no_ = 0;
};

// --- json tree -> ExperimentConfig -------------------------------------------

class Fields {
 public:
  Fields(const json& table, std::string path, std::set<std::string> allowed)
      : table_(table), path_(std::move(path)) {
    if (!table_.is_object()) throw ConfigError(path_ + ": expected a table");
    for (const auto& [key, value] : table_.items()) {
      if (!allowed.count(key)) throw ConfigError(path_ + "." + key + ": unknown key");
    }
  }

  bool has(const std::string& key) const { return table_.contains(key); }
  std::string name(const std::string& key) const { return path_ + "." + key; }

  std::string str(const std::string& key) const {
    const auto& v = table_.at(key);
    if (!v.is_string()) throw ConfigError(name(key) + ": expected a string");
    return v.get<std::string>();
  }

  double real(const std::string& key) const { return as_real(table_.at(key), name(key)); }

  std::uint64_t count(const std::string& key) const {
    const auto& v = table_.at(key);
    if (!v.is_number_unsigned()) throw ConfigError(name(key) + ": expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  int small_int(const std::string& key) const {
    const auto v = count(key);
    if (v > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) throw ConfigError(name(key) + ": too large");
    return static_cast<int>(v);
  }

  bool boolean(const std::string& key) const {
    const auto& v = table_.at(key);
    if (!v.is_boolean()) throw ConfigError(name(key) + ": expected true or false");
    return v.get<bool>();
  }

  std::vector<double> reals(const std::string& key) const {
    const auto& v = table_.at(key);
    if (!v.is_array()) throw ConfigError(name(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) out.push_back(as_real(x, name(key)));
    return out;
  }

  std::vector<std::string> strings(const std::string& key) const {
    const auto& v = table_.at(key);
    if (!v.is_array()) throw ConfigError(name(key) + ": expected an array of strings");
    std::vector<std::string> out;
    for (const auto& x : v) {
      if (!x.is_string()) throw ConfigError(name(key) + ": expected an array of strings");
      out.push_back(x.get<std::string>());
    }
    return out;
  }

  const json& raw(const std::string& key) const { return table_.at(key); }

  static double as_real(const json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where + ": expected a number");
    return v.get<double>();
  }

 private:
  const json& table_;
  std::string path_;
};

Matrix read_matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ConfigError(where + ": expected an array of rows");
  const auto n = static_cast<Eigen::Index>(v.size());
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw ConfigError(where + ": row " + std::to_string(i) + " must have " + std::to_string(n) + " entries");
    }
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = Fields::as_real(row[static_cast<std::size_t>(j)], where);
  }
  return m;
}

ExperimentConfig read_experiment(const json& t, const std::string& path) {
  const Fields f(t, path,
                 {"experiment_id", "density", "dim", "components", "covariance", "integrand", "strike", "family",
                  "fit_ls", "start", "n_train", "n_test", "seed", "search", "basket", "cost", "reference"});
  ExperimentConfig c;
  if (!f.has("experiment_id")) throw ConfigError(f.name("experiment_id") + ": required");
  c.experiment_id = f.str("experiment_id");
  if (f.has("density")) c.density.id = f.str("density");
  if (f.has("dim")) c.density.dim = f.count("dim");
  if (f.has("components")) c.density.components = f.strings("components");
  if (f.has("covariance")) {
    const auto& v = f.raw("covariance");
    if (v.is_string()) {
      if (v.get<std::string>() != "random") throw ConfigError(f.name("covariance") + ": expected \"random\" or a matrix");
    } else {
      c.density.covariance = read_matrix(v, f.name("covariance"));
    }
  }
  if (f.has("integrand")) c.integrand = f.str("integrand");
  if (f.has("strike")) c.strike = f.real("strike");
  if (f.has("family")) c.family = f.str("family");
  if (f.has("fit_ls")) c.fit_ls = f.boolean("fit_ls");
  if (f.has("start")) {
    try {
      c.start = parse_start_rule(f.str("start"));
    } catch (const ConfigError& e) {
      throw ConfigError(path + "." + e.what());
    }
  }
  if (f.has("n_train")) c.n_train = f.count("n_train");
  if (f.has("n_test")) c.n_test = f.count("n_test");
  if (f.has("seed")) c.seed = f.count("seed");

  if (f.has("search")) {
    const Fields s(f.raw("search"), path + ".search",
                   {"max_iterations", "tolerance", "restarts", "initial_step", "box"});
    if (s.has("max_iterations")) c.search.max_iterations = s.count("max_iterations");
    if (s.has("tolerance")) c.search.tolerance = s.real("tolerance");
    if (s.has("restarts")) c.search.restarts = s.count("restarts");
    if (s.has("initial_step")) c.search.initial_step = s.real("initial_step");
    if (s.has("box")) c.search.default_box = s.real("box");
  }
  if (f.has("basket")) {
    const Fields b(f.raw("basket"), path + ".basket", {"mu", "sigma", "t", "x0_lo", "x0_hi", "x0"});
    if (b.has("mu")) c.density.mu = b.real("mu");
    if (b.has("sigma")) c.density.sigma = b.real("sigma");
    if (b.has("t")) c.density.t = b.real("t");
    if (b.has("x0_lo")) c.density.x0_lo = b.real("x0_lo");
    if (b.has("x0_hi")) c.density.x0_hi = b.real("x0_hi");
    if (b.has("x0")) c.density.x0 = b.reals("x0");
  }
  if (f.has("cost")) {
    const Fields k(f.raw("cost"), path + ".cost", {"cost_f", "cost_cv"});
    if (k.has("cost_f")) c.cost.cost_f = k.small_int("cost_f");
    if (k.has("cost_cv")) c.cost.cost_cv = k.small_int("cost_cv");
  }
  if (f.has("reference")) {
    std::set<std::string> keys(std::begin(kReferenceKeys), std::end(kReferenceKeys));
    const Fields r(f.raw("reference"), path + ".reference", keys);
    for (const auto& k : keys) {
      if (r.has(k)) c.reference[k] = r.real(k);
    }
  }

  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path + "." + e.what());
  }
  return c;
}

}  // namespace

std::vector<ExperimentConfig> parse_config(const std::string& text, const std::string& origin) {
  const json root = Reader(text, origin).parse();
  for (const auto& [key, value] : root.items()) {
    if (key != "experiment") throw ConfigError(origin + ": " + key + ": unknown key");
  }
  if (!root.contains("experiment")) throw ConfigError(origin + ": no [experiment] table");
  const json& e = root.at("experiment");
  std::vector<ExperimentConfig> out;
  if (e.is_array()) {
    for (std::size_t i = 0; i < e.size(); ++i) {
      out.push_back(read_experiment(e[i], origin + ": experiment[" + std::to_string(i) + "]"));
    }
  } else {
    out.push_back(read_experiment(e, origin + ": experiment"));
  }
  return out;
}

std::vector<ExperimentConfig> load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

}  // namespace evmcv
