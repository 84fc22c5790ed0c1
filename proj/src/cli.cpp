#include "evmcv/cli.hpp"

#include "evmcv/config.hpp"
#include "evmcv/report.hpp"
#include "evmcv/verify.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <optional>
#include <ostream>
#include <thread>

namespace evmcv {

namespace {

struct OutputOptions {
  std::string out_path;
  std::string format = "csv";
  std::optional<std::uint64_t> seed;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
};

void add_output_flags(CLI::App* cmd, OutputOptions& o) {
  cmd->add_option("--out", o.out_path, "Write the report to this file instead of standard output");
  cmd->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--seed", o.seed, "Override the master seed of every experiment");
  cmd->add_option("--jobs", o.jobs, "Experiments run concurrently")->check(CLI::PositiveNumber);
}

// Runs configs on up to `jobs` worker threads; results keep the input order.
// The first ConfigError is rethrown after all workers stop.
std::vector<ExperimentReport> run_all(const std::vector<ExperimentConfig>& configs, std::size_t jobs) {
  std::vector<ExperimentReport> reports(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  std::atomic<std::size_t> next{0};
  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, configs.size()));
  const int inner = std::max(1, omp_get_max_threads() / static_cast<int>(workers));
  const auto work = [&] {
    omp_set_num_threads(inner);
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        reports[i] = run_experiment(configs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return reports;
}

int write_reports(const std::vector<ExperimentReport>& reports, const OutputOptions& o, bool reference_columns,
                  std::ostream& out, std::ostream& err) {
  const ReportFormat format = parse_report_format(o.format);
  ReportOptions ropts;
  ropts.reference_columns = reference_columns;
  if (o.out_path.empty()) {
    if (format == ReportFormat::Csv) {
      write_csv(reports, out, ropts);
    } else {
      write_json(reports, out);
    }
  } else {
    emit_report(reports, format, o.out_path, ropts);
  }
  int code = kExitOk;
  for (const auto& r : reports) {
    char line[160];
    std::snprintf(line, sizeof line, "%-24s train %.2fs  test %.2fs", r.experiment_id.c_str(), r.train_seconds,
                  r.test_seconds);
    err << line;
    if (r.error) {
      err << "  FAILED: " << *r.error;
      code = kExitFailure;
    }
    err << '\n';
  }
  return code;
}

void print_summary(const std::vector<ExperimentReport>& reports, std::ostream& err) {
  // Group consecutive runs of the same experiment.
  for (std::size_t i = 0; i < reports.size();) {
    std::size_t j = i;
    std::vector<double> ratio, svar_evm;
    while (j < reports.size() && reports[j].experiment_id == reports[i].experiment_id) {
      if (reports[j].ok()) {
        ratio.push_back(reports[j].variance.ratio);
        svar_evm.push_back(reports[j].variance.svar_evm);
      }
      ++j;
    }
    const Quartiles r = quartiles(ratio);
    const Quartiles v = quartiles(svar_evm);
    char line[256];
    std::snprintf(line, sizeof line, "%-24s runs %zu ok %zu  ratio median %.4g [%.4g, %.4g]  svar_evm median %.4g\n",
                  reports[i].experiment_id.c_str(), j - i, ratio.size(), r.median, r.q1, r.q3, v.median);
    err << line;
    i = j;
  }
}

void list_everything(std::ostream& out) {
  out << "densities:  std_normal exp1 mvn lognormal_gbm product\n"
         "integrands: sumsq sumexp sumcos invnorm basket_call\n"
         "families:   poly1d additive_poly gauss_hermite rotated_poly basket_exp1 basket_exp2\n"
         "tables:\n";
  for (int t = 1; t <= 7; ++t) {
    for (const auto& c : table_configs(t)) {
      out << "  " << t << "  " << c.experiment_id << "  (" << c.density.id << " d=" << c.density.dim << ", "
          << c.integrand << ", " << c.family << ", n_train " << c.n_train << ", n_test " << c.n_test << ")\n";
    }
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Control variates fitted by empirical variance minimization", "evmcv"};
  app.require_subcommand(1);

  OutputOptions run_opts;
  std::string config_path;
  auto* run = app.add_subcommand("run", "Run every experiment in a config file");
  run->add_option("--config", config_path, "Experiment file")->required();
  add_output_flags(run, run_opts);

  OutputOptions table_opts;
  int table = 0;
  std::size_t replicate_count = 1;
  auto* tab = app.add_subcommand("table", "Run a built-in table (1-7) with published reference values as extra columns");
  tab->add_option("n", table, "Table number")->required();
  tab->add_option("--replicate", replicate_count, "Seeds per row (seed, seed+1, ...)")->check(CLI::PositiveNumber);
  add_output_flags(tab, table_opts);

  auto* verify = app.add_subcommand("verify", "Run the oracle and invariant checks");
  auto* list = app.add_subcommand("list", "List densities, integrands, families and table rows");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) {
      auto configs = load_config(config_path);
      for (auto& c : configs) {
        if (run_opts.seed) c.seed = *run_opts.seed;
      }
      return write_reports(run_all(configs, run_opts.jobs), run_opts, false, out, err);
    }
    if (*tab) {
      auto rows = table_configs(table);
      std::vector<ExperimentConfig> expanded;
      for (const auto& row : rows) {
        const std::uint64_t base = table_opts.seed.value_or(row.seed);
        for (std::size_t i = 0; i < replicate_count; ++i) {
          ExperimentConfig c = row;
          c.seed = base + i;
          expanded.push_back(std::move(c));
        }
      }
      const auto reports = run_all(expanded, table_opts.jobs);
      const int code = write_reports(reports, table_opts, true, out, err);
      if (replicate_count > 1) print_summary(reports, err);
      return code;
    }
    if (*verify) return run_checks(oracle_checks(), out);
    if (*list) {
      list_everything(out);
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace evmcv
