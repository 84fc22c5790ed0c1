#include "evmcv/report.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace evmcv {

using nlohmann::json;

namespace {

json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

double read_number(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ConfigError("report JSON: expected a number, got " + j.dump());
}

json numbers(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

std::vector<double> read_numbers(const json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(read_number(x));
  return out;
}

json fit_to_json(const FitResult& fit) {
  return {{"method", std::string(to_string(fit.method))},
          {"a_hat", numbers(fit.a_hat)},
          {"objective", number(fit.objective)},
          {"iterations", fit.iterations},
          {"converged", fit.converged},
          {"start_point", numbers(fit.start_point)},
          {"ridge_used", fit.ridge_used}};
}

FitResult fit_from_json(const json& j) {
  FitResult fit;
  const auto method = j.at("method").get<std::string>();
  if (method == "EVM_LINEAR") {
    fit.method = FitMethod::EvmLinear;
  } else if (method == "EVM_NONLINEAR") {
    fit.method = FitMethod::EvmNonlinear;
  } else if (method == "LS_LINEAR") {
    fit.method = FitMethod::LsLinear;
  } else {
    throw ConfigError("report JSON: unknown fit method '" + method + "'");
  }
  fit.a_hat = read_numbers(j.at("a_hat"));
  fit.objective = read_number(j.at("objective"));
  fit.iterations = j.at("iterations").get<std::size_t>();
  fit.converged = j.at("converged").get<bool>();
  fit.start_point = read_numbers(j.at("start_point"));
  fit.ridge_used = j.at("ridge_used").get<bool>();
  return fit;
}

json report_to_json(const ExperimentReport& r) {
  const auto& v = r.variance;
  json j = {{"experiment_id", r.experiment_id},
            {"density_id", r.density_id},
            {"integrand", r.integrand_id},
            {"family", r.family_id},
            {"n_train", r.n_train},
            {"n_test", r.n_test},
            {"seed", r.seed},
            {"cost", {{"cost_f", r.cost.cost_f}, {"cost_cv", r.cost.cost_cv}}},
            {"svar", number(v.svar)},
            {"svar_evm", number(v.svar_evm)},
            {"svar_ls", v.svar_ls ? number(*v.svar_ls) : json(nullptr)},
            {"eff_evm", number(v.eff_evm.value)},
            {"eff_evm_infinite", v.eff_evm.infinite},
            {"eff_ls", v.eff_ls ? number(v.eff_ls->value) : json(nullptr)},
            {"eff_ls_infinite", v.eff_ls ? json(v.eff_ls->infinite) : json(nullptr)},
            {"ratio", number(v.ratio)}};
  json fits = json::object();
  if (r.evm) fits["evm"] = fit_to_json(*r.evm);
  if (r.ls) fits["ls"] = fit_to_json(*r.ls);
  j["fits"] = fits;
  if (!r.basket_x0.empty() || r.strike) {
    j["basket"] = {{"x0", numbers(r.basket_x0)}, {"strike", r.strike ? number(*r.strike) : json(nullptr)}};
  }
  json ref = json::object();
  for (const auto& [key, value] : r.reference) ref[key] = number(value);
  j["reference"] = ref;
  j["error"] = r.error ? json(*r.error) : json(nullptr);
  return j;
}

ExperimentReport report_from_json(const json& j) {
  ExperimentReport r;
  r.experiment_id = j.at("experiment_id").get<std::string>();
  r.density_id = j.at("density_id").get<std::string>();
  r.integrand_id = j.at("integrand").get<std::string>();
  r.family_id = j.at("family").get<std::string>();
  r.n_train = j.at("n_train").get<std::size_t>();
  r.n_test = j.at("n_test").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.cost.cost_f = j.at("cost").at("cost_f").get<int>();
  r.cost.cost_cv = j.at("cost").at("cost_cv").get<int>();
  auto& v = r.variance;
  v.svar = read_number(j.at("svar"));
  v.svar_evm = read_number(j.at("svar_evm"));
  if (!j.at("svar_ls").is_null()) v.svar_ls = read_number(j.at("svar_ls"));
  v.eff_evm = {read_number(j.at("eff_evm")), j.at("eff_evm_infinite").get<bool>()};
  if (!j.at("eff_ls").is_null()) v.eff_ls = Efficiency{read_number(j.at("eff_ls")), j.at("eff_ls_infinite").get<bool>()};
  v.ratio = read_number(j.at("ratio"));
  const auto& fits = j.at("fits");
  if (fits.contains("evm")) r.evm = fit_from_json(fits.at("evm"));
  if (fits.contains("ls")) r.ls = fit_from_json(fits.at("ls"));
  if (j.contains("basket")) {
    r.basket_x0 = read_numbers(j.at("basket").at("x0"));
    if (!j.at("basket").at("strike").is_null()) r.strike = read_number(j.at("basket").at("strike"));
  }
  for (const auto& [key, value] : j.at("reference").items()) r.reference[key] = read_number(value);
  if (!j.at("error").is_null()) r.error = j.at("error").get<std::string>();
  return r;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string optional_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

ReportFormat parse_report_format(std::string_view text) {
  if (text == "csv") return ReportFormat::Csv;
  if (text == "json") return ReportFormat::Json;
  throw ConfigError("format: expected csv or json, got '" + std::string(text) + "'");
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

void write_csv(const std::vector<ExperimentReport>& reports, std::ostream& out, const ReportOptions& opts) {
  bool first = true;
  for (const char* c : kCsvColumns) {
    out << (first ? "" : ",") << c;
    first = false;
  }
  if (opts.reference_columns) {
    for (const char* k : kReferenceKeys) out << ",ref_" << k;
  }
  out << '\n';
  for (const auto& r : reports) {
    const auto& v = r.variance;
    std::optional<double> eff_ls;
    if (v.eff_ls) eff_ls = v.eff_ls->value;
    out << csv_field(r.experiment_id) << ',' << r.n_train << ',' << r.n_test << ',' << format_double(v.svar) << ','
        << format_double(v.svar_evm) << ',' << optional_field(v.svar_ls) << ',' << format_double(v.eff_evm.value)
        << ',' << optional_field(eff_ls) << ',' << format_double(v.ratio) << ',' << r.seed;
    if (opts.reference_columns) {
      for (const char* k : kReferenceKeys) {
        const auto it = r.reference.find(k);
        out << ',' << (it == r.reference.end() ? std::string() : format_double(it->second));
      }
    }
    out << '\n';
  }
}

void write_json(const std::vector<ExperimentReport>& reports, std::ostream& out) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(report_to_json(r));
  out << arr.dump(2) << '\n';
}

std::string to_csv(const std::vector<ExperimentReport>& reports, const ReportOptions& opts) {
  std::ostringstream os;
  write_csv(reports, os, opts);
  return os.str();
}

std::string to_json(const std::vector<ExperimentReport>& reports) {
  std::ostringstream os;
  write_json(reports, os);
  return os.str();
}

std::vector<ExperimentReport> reports_from_json(const std::string& text) {
  json arr;
  try {
    arr = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("report JSON: ") + e.what());
  }
  if (!arr.is_array()) throw ConfigError("report JSON: expected an array of reports");
  std::vector<ExperimentReport> out;
  try {
    for (const auto& j : arr) out.push_back(report_from_json(j));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("report JSON: ") + e.what());
  }
  return out;
}

void emit_report(const std::vector<ExperimentReport>& reports, ReportFormat format,
                 const std::filesystem::path& destination, const ReportOptions& opts) {
  std::ofstream file(destination, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot open '" + destination.string() + "' for writing");
  if (format == ReportFormat::Csv) {
    write_csv(reports, file, opts);
  } else {
    write_json(reports, file);
  }
  file.flush();
  if (!file) throw std::runtime_error("write to '" + destination.string() + "' failed");
}

std::string covariance_to_json(const CovarianceSpec& spec) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < spec.matrix.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < spec.matrix.cols(); ++j) row.push_back(spec.matrix(i, j));
    rows.push_back(row);
  }
  return rows.dump();
}

CovarianceSpec covariance_from_json(const std::string& text) {
  json rows;
  try {
    rows = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("covariance JSON: ") + e.what());
  }
  if (!rows.is_array() || rows.empty()) throw ConfigError("covariance JSON: expected a non-empty array of rows");
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw ConfigError("covariance JSON: row " + std::to_string(i) + " must have " + std::to_string(n) + " entries");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& x = row[static_cast<std::size_t>(j)];
      if (!x.is_number()) throw ConfigError("covariance JSON: entries must be numbers");
      m(i, j) = x.get<double>();
    }
  }
  try {
    return make_covariance(m);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("covariance JSON: ") + e.what());
  }
}

}  // namespace evmcv
