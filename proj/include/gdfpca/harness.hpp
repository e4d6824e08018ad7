#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "gdfpca/errors.hpp"
#include "gdfpca/fgdpca.hpp"
#include "gdfpca/fpca.hpp"
#include "gdfpca/io.hpp"
#include "gdfpca/metrics.hpp"
#include "gdfpca/simgen.hpp"

// Command-level orchestration shared by the CLI: configuration structs with
// JSON round-trips, fit/compare execution, and report emission.
namespace gdfpca {

inline constexpr const char* kVersion = "0.1.0";

struct SimulateOptions {
  DgpConfig dgp;
  std::uint64_t seed = 0;
  std::string out;
  std::string common_out;  // dfm only: noiseless common part
};

struct FitOptions {
  DatasetSpec data;
  BasisKind basis = BasisKind::fourier;
  int m = 15;
  int lags = 2;
  int p = 1;
  double epsilon = 1e-6;
  int max_iter = 500;
  std::string out_dir = ".";
  bool emit_reconstruction = true;
};

struct CompareOptions {
  bool use_dataset = false;
  DatasetSpec data;  // when use_dataset
  DgpConfig dgp;     // otherwise; also carries the fitting setup for both modes
  std::vector<Method> methods = {Method::gdfpca, Method::fpca};
  std::vector<int> p_list = {1, 2, 3};
  int reps = 50;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

namespace detail {

inline void require_finite(double value, const std::string& field) {
  if (!std::isfinite(value)) {
    throw Error("report: non-finite value in field " + field);
  }
}

inline std::string format_sig12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline nlohmann::json dataset_to_json(const DatasetSpec& d) {
  return {{"path", d.path},
          {"layout", d.layout == Layout::time_by_grid ? "time_by_grid" : "grid_by_time"},
          {"a", d.a},
          {"b", d.b},
          {"log_return", d.log_return},
          {"center", d.center},
          {"scale", d.scale},
          {"smooth", d.smooth},
          {"smooth_basis", to_string(d.smooth_basis)},
          {"smooth_count", d.smooth_count},
          {"smooth_grid_points", d.smooth_grid_points}};
}

inline nlohmann::json dgp_to_json(const DgpConfig& c) {
  return {{"dgp", to_string(c.dgp)},
          {"d", c.d},
          {"kappa", c.kappa},
          {"n", c.n},
          {"burn_in", c.burn_in},
          {"panel_dim", c.panel_dim},
          {"r", c.r},
          {"q", c.q},
          {"smoothing_basis", c.smoothing_basis},
          {"a", c.a},
          {"b", c.b},
          {"grid_points", c.grid_points},
          {"fit_basis", to_string(c.fit_basis)},
          {"m", c.m},
          {"lags", c.lags},
          {"epsilon", c.epsilon},
          {"max_iter", c.max_iter}};
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& M) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    arr.push_back(vector_to_json(M.row(i).transpose()));
  }
  return arr;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open output file: " + path);
  out << text;
}

inline nlohmann::json run_header(const std::string& command, std::uint64_t seed,
                                 nlohmann::json config) {
  return {{"command", command},
          {"seed", seed},
          {"version", kVersion},
          {"config", std::move(config)}};
}

}  // namespace detail

// Emit DGP data to CSV (time-by-grid, 12 significant digits).
inline void run_simulate(const SimulateOptions& opt) {
  opt.dgp.validate();
  if (opt.out.empty()) throw ConfigError("simulate: --out is required");
  if (!opt.common_out.empty() && opt.dgp.dgp != Dgp::dfm) {
    throw ConfigError("simulate: --common-out only applies to the dfm process");
  }
  const Grid grid = Grid::uniform(opt.dgp.a, opt.dgp.b, opt.dgp.grid_points);
  if (opt.dgp.dgp == Dgp::dfm) {
    const DfmSample sample = gen_dfm(opt.dgp.panel_dim, opt.dgp.n, opt.dgp.r, opt.dgp.q, grid,
                                     opt.dgp.smoothing_basis, opt.seed);
    write_csv_matrix(opt.out, sample.observed.values);
    if (!opt.common_out.empty()) write_csv_matrix(opt.common_out, sample.common.values);
  } else {
    write_csv_matrix(opt.out, opt.dgp.generate(grid, opt.seed).values);
  }
}

// Fit GDFPCA on a dataset; writes report.json (embedding the fitted model)
// and optionally reconstruction.csv into out_dir.
inline nlohmann::json run_fit(const FitOptions& opt) {
  std::vector<std::string> bad;
  if (opt.data.path.empty()) bad.push_back("in: dataset path is required");
  if (opt.m < 1) bad.push_back("m: must be >= 1");
  if (opt.basis == BasisKind::fourier && opt.m % 2 == 0) bad.push_back("m: fourier needs odd m");
  if (opt.lags < 0) bad.push_back("K: must be >= 0");
  if (opt.p < 1) bad.push_back("p: must be >= 1");
  if (!(opt.epsilon > 0)) bad.push_back("epsilon: must be > 0");
  if (opt.max_iter < 1) bad.push_back("max_iter: must be >= 1");
  if (!(opt.data.a < opt.data.b)) bad.push_back("a/b: need a < b");
  if (!bad.empty()) {
    std::string msg = "invalid fit configuration:";
    for (const auto& v : bad) msg += "\n  - " + v;
    throw ConfigError(msg);
  }

  const FunctionalSeries series = load_fts_csv(opt.data);
  const BasisSystem basis = make_basis(opt.basis, opt.m, series.grid);
  FitConfig cfg;
  cfg.lags = opt.lags;
  cfg.epsilon = opt.epsilon;
  cfg.max_iter = opt.max_iter;
  const FgdpcaModel model = fit_fgdpca(series, basis, opt.p, cfg);

  nlohmann::json config = {{"data", detail::dataset_to_json(opt.data)},
                           {"basis", to_string(opt.basis)},
                           {"m", opt.m},
                           {"K", opt.lags},
                           {"p", opt.p},
                           {"epsilon", opt.epsilon},
                           {"max_iter", opt.max_iter}};
  nlohmann::json report;
  report["run"] = detail::run_header("fit", 0, config);

  nlohmann::json per_p = nlohmann::json::array();
  for (int p = 1; p <= opt.p; ++p) {
    const FunctionalSeries recon = reconstruct_functional(model, p);
    const double mse = functional_mse(series, recon);
    const double ev = explained_variance(series, recon);
    detail::require_finite(mse, "mse");
    detail::require_finite(ev, "explained_variance");
    per_p.push_back({{"p", p}, {"mse", mse}, {"explained_variance", ev}});
  }
  report["results"] = {{"n", series.length()},
                       {"grid_points", series.grid.size()},
                       {"per_p", per_p}};

  nlohmann::json components = nlohmann::json::array();
  for (const auto& fit : model.components) {
    components.push_back({{"factor", detail::vector_to_json(fit.factor)},
                          {"loadings", detail::matrix_to_json(fit.loadings)},
                          {"intercept", detail::vector_to_json(fit.intercept)},
                          {"mse_trace", fit.mse_trace},
                          {"iterations", fit.iterations},
                          {"converged", fit.converged}});
  }
  report["model"] = {{"basis", to_string(opt.basis)},
                     {"m", opt.m},
                     {"K", opt.lags},
                     {"components", std::move(components)}};

  std::filesystem::create_directories(opt.out_dir);
  detail::write_text(opt.out_dir + "/report.json", report.dump(2) + "\n");
  if (opt.emit_reconstruction) {
    write_csv_matrix(opt.out_dir + "/reconstruction.csv",
                     reconstruct_functional(model, opt.p).values);
  }
  return report;
}

namespace detail {

inline std::string explained_variance_csv(const std::vector<Method>& methods,
                                          const std::vector<int>& p_list,
                                          const std::vector<SummaryRow>& rows) {
  std::string text = "method";
  for (int p : p_list) text += ",p=" + std::to_string(p);
  text += "\n";
  for (Method method : methods) {
    text += to_string(method);
    for (int p : p_list) {
      for (const auto& row : rows) {
        if (row.method == method && row.p == p) {
          text += "," + format_sig12(row.ev_median);
          break;
        }
      }
    }
    text += "\n";
  }
  return text;
}

inline std::string boxplot_csv(const std::vector<ReplicationRecord>& records) {
  std::string text = "replication,method,p,mse,explained_variance\n";
  for (const auto& rec : records) {
    text += std::to_string(rec.replication);
    text += ",";
    text += to_string(rec.method);
    text += "," + std::to_string(rec.p) + "," + format_sig12(rec.mse) + "," +
            format_sig12(rec.explained) + "\n";
  }
  return text;
}

}  // namespace detail

// Replication study (simulated DGP) or single-dataset comparison; writes
// report.json, explained_variance.csv and boxplot_data.csv into out_dir.
inline nlohmann::json run_compare(const CompareOptions& opt) {
  if (opt.methods.empty()) throw ConfigError("compare: at least one method is required");
  if (opt.p_list.empty()) throw ConfigError("compare: p list must not be empty");

  nlohmann::json config;
  ReplicationSummary summary;
  if (opt.use_dataset) {
    // One replication: the supplied dataset, both methods at every p.
    DgpConfig fitcfg = opt.dgp;
    if (fitcfg.m < 1) {
      throw ConfigError("compare on a dataset requires an explicit truncation dimension m");
    }
    const int m = fitcfg.truncation();
    for (int p : opt.p_list) {
      if (p < 1 || p > m) {
        throw ConfigError("compare: p = " + std::to_string(p) + " outside [1, m = " +
                          std::to_string(m) + "]");
      }
    }
    const FunctionalSeries series = load_fts_csv(opt.data);
    const BasisSystem basis = make_basis(fitcfg.fit_basis, m, series.grid);
    summary.config = fitcfg;
    summary.methods = opt.methods;
    summary.p_list = opt.p_list;
    summary.replications = 1;
    summary.seed = opt.seed;
    const auto values = detail::evaluate_replication(series, basis, opt.methods, opt.p_list,
                                                     fitcfg.fit_config());
    for (std::size_t mi = 0; mi < opt.methods.size(); ++mi) {
      for (std::size_t pi = 0; pi < opt.p_list.size(); ++pi) {
        summary.records.push_back(
            {0, opt.methods[mi], opt.p_list[pi], values[mi].mse[pi], values[mi].explained[pi]});
        SummaryRow row;
        row.method = opt.methods[mi];
        row.p = opt.p_list[pi];
        row.count = 1;
        row.mse_q1 = row.mse_median = row.mse_q3 = values[mi].mse[pi];
        row.ev_q1 = row.ev_median = row.ev_q3 = values[mi].explained[pi];
        summary.rows.push_back(row);
      }
    }
    config = {{"data", detail::dataset_to_json(opt.data)},
              {"fit", detail::dgp_to_json(opt.dgp)},
              {"p_list", opt.p_list},
              {"reps", 1}};
  } else {
    summary = run_replications(opt.dgp, opt.methods, opt.p_list, opt.reps, opt.seed);
    config = {{"dgp", detail::dgp_to_json(opt.dgp)}, {"p_list", opt.p_list}, {"reps", opt.reps}};
  }
  nlohmann::json method_names = nlohmann::json::array();
  for (Method method : opt.methods) method_names.push_back(to_string(method));
  config["methods"] = method_names;

  nlohmann::json report;
  report["run"] = detail::run_header("compare", opt.seed, config);

  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : summary.rows) {
    for (double v : {row.mse_q1, row.mse_median, row.mse_q3, row.ev_q1, row.ev_median,
                     row.ev_q3}) {
      detail::require_finite(v, "summary");
    }
    rows.push_back({{"method", to_string(row.method)},
                    {"p", row.p},
                    {"count", row.count},
                    {"mse", {{"q1", row.mse_q1}, {"median", row.mse_median}, {"q3", row.mse_q3}}},
                    {"explained_variance",
                     {{"q1", row.ev_q1}, {"median", row.ev_median}, {"q3", row.ev_q3}}}});
  }
  nlohmann::json records = nlohmann::json::array();
  for (const auto& rec : summary.records) {
    detail::require_finite(rec.mse, "mse");
    detail::require_finite(rec.explained, "explained_variance");
    records.push_back({{"replication", rec.replication},
                       {"method", to_string(rec.method)},
                       {"p", rec.p},
                       {"mse", rec.mse},
                       {"explained_variance", rec.explained}});
  }
  report["results"] = {{"summary", std::move(rows)},
                       {"replications", std::move(records)},
                       {"failed", summary.failed},
                       {"failures", summary.failures}};

  std::filesystem::create_directories(opt.out_dir);
  detail::write_text(opt.out_dir + "/report.json", report.dump(2) + "\n");
  detail::write_text(opt.out_dir + "/explained_variance.csv",
                     detail::explained_variance_csv(opt.methods, opt.p_list, summary.rows));
  detail::write_text(opt.out_dir + "/boxplot_data.csv", detail::boxplot_csv(summary.records));
  return report;
}

}  // namespace gdfpca
