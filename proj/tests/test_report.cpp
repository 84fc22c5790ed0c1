#include "evmcv/report.hpp"

#include <doctest.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace evmcv;

namespace {

std::vector<ExperimentReport> sample_reports() {
  ExperimentConfig c;
  c.experiment_id = "rt";
  c.integrand = "sumexp";
  c.n_train = 100;
  c.n_test = 1000;
  ExperimentReport linear = run_experiment(c);
  linear.reference = {{"svar", 4.6410}, {"ratio", 1.0 / 3.0}};

  c.experiment_id = "basket, quoted \"id\"";
  c.density.id = "lognormal_gbm";
  c.density.dim = 2;
  c.integrand = "basket_call";
  c.family = "basket_exp1";
  c.search.max_iterations = 40;
  ExperimentReport basket = run_experiment(c);

  ExperimentReport odd = linear;
  odd.experiment_id = "nonfinite";
  odd.variance.svar_evm = 0.0;
  odd.variance.eff_evm = {std::numeric_limits<double>::infinity(), true};
  odd.variance.ratio = std::numeric_limits<double>::infinity();
  odd.variance.svar_ls = std::numeric_limits<double>::quiet_NaN();
  odd.evm->objective = -std::numeric_limits<double>::infinity();
  odd.error = "singular";
  return {linear, basket, odd};
}

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!same_bits(a[i], b[i])) return false;
  return true;
}

}  // namespace

TEST_CASE("format_double is the shortest round-trip text") {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double v = std::ldexp(rng.uniform(-1, 1), static_cast<int>(rng.uniform(-300, 300)));
    const std::string s = format_double(v);
    double back = 0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    CHECK(same_bits(v, back));
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e300) == "1e+300");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_double(std::nan("")) == "nan");
}

TEST_CASE("JSON round trip is bit exact") {
  const auto reports = sample_reports();
  const std::string text = to_json(reports);
  const auto back = reports_from_json(text);
  REQUIRE(back.size() == reports.size());
  CHECK(to_json(back) == text);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& a = reports[i];
    const auto& b = back[i];
    CAPTURE(a.experiment_id);
    CHECK(a.experiment_id == b.experiment_id);
    CHECK(a.seed == b.seed);
    CHECK(same_bits(a.variance.svar, b.variance.svar));
    CHECK(same_bits(a.variance.svar_evm, b.variance.svar_evm));
    CHECK(same_bits(a.variance.ratio, b.variance.ratio));
    CHECK(a.variance.eff_evm.infinite == b.variance.eff_evm.infinite);
    CHECK(a.variance.svar_ls.has_value() == b.variance.svar_ls.has_value());
    if (a.variance.svar_ls) CHECK(same_bits(*a.variance.svar_ls, *b.variance.svar_ls));
    REQUIRE(b.evm);
    CHECK(same_bits(a.evm->a_hat, b.evm->a_hat));
    CHECK(same_bits(a.evm->objective, b.evm->objective));
    CHECK(a.evm->method == b.evm->method);
    CHECK(same_bits(a.basket_x0, b.basket_x0));
    CHECK(a.strike == b.strike);
    CHECK(a.reference == b.reference);
    CHECK(a.error == b.error);
  }
}

TEST_CASE("CSV layout") {
  const std::string header_only = to_csv({});
  CHECK(header_only == "experiment_id,n_train,n_test,svar,svar_evm,svar_ls,eff_evm,eff_ls,ratio,seed\n");
  ReportOptions refs;
  refs.reference_columns = true;
  CHECK(to_csv({}, refs).find(",ref_svar,ref_svar_evm,ref_svar_ls,ref_eff_evm,ref_eff_ls,ref_ratio\n") !=
        std::string::npos);

  const auto reports = sample_reports();
  const std::string csv = to_csv(reports, refs);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  std::getline(lines, line);
  CHECK(line.rfind("rt,100,1000,", 0) == 0);
  CHECK(line.find(format_double(reports[0].variance.svar)) != std::string::npos);
  CHECK(line.substr(line.size() - std::string(",0.3333333333333333").size()) == ",0.3333333333333333");
  std::getline(lines, line);
  // basket has no LS columns and a quoted id
  CHECK(line.rfind("\"basket, quoted \"\"id\"\"\",", 0) == 0);
  CHECK(line.find(",,") != std::string::npos);
  std::getline(lines, line);
  CHECK(line.find(",inf,") != std::string::npos);
  CHECK(line.find(",nan,") != std::string::npos);
}

TEST_CASE("emit_report writes the file and names the path on failure") {
  const auto dir = std::filesystem::temp_directory_path() / "evmcv_report_test";
  std::filesystem::create_directories(dir);
  const auto reports = sample_reports();
  emit_report(reports, ReportFormat::Json, dir / "r.json");
  std::ifstream in(dir / "r.json");
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == to_json(reports));
  CHECK_THROWS_WITH(emit_report(reports, ReportFormat::Csv, dir / "missing" / "r.csv"),
                    doctest::Contains("missing"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("bad report JSON is a ConfigError") {
  CHECK_THROWS_AS(reports_from_json("{"), ConfigError);
  CHECK_THROWS_AS(reports_from_json("{}"), ConfigError);
  CHECK_THROWS_AS(reports_from_json("[{\"experiment_id\": 1}]"), ConfigError);
  CHECK(reports_from_json("[]").empty());
}

TEST_CASE("report format names") {
  CHECK(parse_report_format("csv") == ReportFormat::Csv);
  CHECK(parse_report_format("json") == ReportFormat::Json);
  CHECK_THROWS_AS(parse_report_format("xml"), ConfigError);
}

TEST_CASE("covariance JSON round trip") {
  const auto spec = random_covariance(5, 3);
  const auto back = covariance_from_json(covariance_to_json(spec));
  CHECK(back.matrix == spec.matrix);
  CHECK_THROWS_AS(covariance_from_json("[[1, 2], [2, 1]]"), ConfigError);
  CHECK_THROWS_AS(covariance_from_json("[[1, 0], [0]]"), ConfigError);
}
