// Command-line interface: simulate (emit DGP data), fit (GDFPCA on a CSV
// dataset), compare (replication study or dataset comparison).

#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <string>
#include <vector>

#include "gdfpca/harness.hpp"

namespace {

using nlohmann::json;

gdfpca::Dgp parse_dgp(const std::string& name) {
  if (name == "far1") return gdfpca::Dgp::far1;
  if (name == "vari11") return gdfpca::Dgp::vari11;
  if (name == "dfm") return gdfpca::Dgp::dfm;
  throw gdfpca::ConfigError("unknown dgp '" + name + "' (expected far1, vari11 or dfm)");
}

gdfpca::BasisKind parse_basis(const std::string& name) {
  if (name == "fourier") return gdfpca::BasisKind::fourier;
  if (name == "bspline") return gdfpca::BasisKind::bspline;
  throw gdfpca::ConfigError("unknown basis '" + name + "' (expected fourier or bspline)");
}

gdfpca::Layout parse_layout(const std::string& name) {
  if (name == "time_by_grid") return gdfpca::Layout::time_by_grid;
  if (name == "grid_by_time") return gdfpca::Layout::grid_by_time;
  throw gdfpca::ConfigError("unknown layout '" + name +
                            "' (expected time_by_grid or grid_by_time)");
}

std::vector<gdfpca::Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<gdfpca::Method> out;
  for (const auto& name : names) {
    if (name == "gdfpca") {
      out.push_back(gdfpca::Method::gdfpca);
    } else if (name == "fpca") {
      out.push_back(gdfpca::Method::fpca);
    } else {
      throw gdfpca::ConfigError("unknown method '" + name + "' (expected gdfpca or fpca)");
    }
  }
  return out;
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw gdfpca::ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw gdfpca::ConfigError("config file " + path + ": " + e.what());
  }
  if (!j.is_object()) throw gdfpca::ConfigError("config file must hold a JSON object");
  return j;
}

// Apply config-file values to options the user did not pass on the command
// line; rejects keys that match no known flag.
class ConfigMerger {
 public:
  ConfigMerger(const CLI::App* sub, const json& config) : sub_(sub), config_(config) {}

  template <typename T>
  void apply(const char* flag, const char* key, T& target) {
    handled_.push_back(key);
    if (config_.contains(key) && sub_->count(flag) == 0) {
      try {
        target = config_.at(key).get<T>();
      } catch (const json::exception&) {
        bad_.push_back(std::string(key) + ": wrong type in config file");
      }
    }
  }

  void finish() const {
    std::vector<std::string> problems = bad_;
    for (auto it = config_.begin(); it != config_.end(); ++it) {
      bool known = false;
      for (const auto& k : handled_) {
        if (k == it.key()) {
          known = true;
          break;
        }
      }
      if (!known) problems.push_back(it.key() + ": unknown config key");
    }
    if (!problems.empty()) {
      std::string msg = "invalid config file:";
      for (const auto& p : problems) msg += "\n  - " + p;
      throw gdfpca::ConfigError(msg);
    }
  }

 private:
  const CLI::App* sub_;
  const json& config_;
  std::vector<std::string> handled_;
  std::vector<std::string> bad_;
};

// Raw (string-typed) CLI bindings shared by simulate and compare.
struct DgpFlags {
  std::string dgp = "far1";
  gdfpca::DgpConfig cfg;
  std::string fit_basis = "fourier";

  void add_options(CLI::App* sub) {
    sub->add_option("--dgp", dgp, "data-generating process: far1, vari11 or dfm")
        ->capture_default_str();
    sub->add_option("--d", cfg.d, "FAR(1): number of Fourier coefficients (odd)")
        ->capture_default_str();
    sub->add_option("--kappa", cfg.kappa, "FAR(1): dependence strength, in [0, 2)")
        ->capture_default_str();
    sub->add_option("--n", cfg.n, "number of curves (T for panel processes)")
        ->capture_default_str();
    sub->add_option("--burn-in", cfg.burn_in, "FAR(1): discarded warm-up draws")
        ->capture_default_str();
    sub->add_option("--panel-dim", cfg.panel_dim, "vari11/dfm: cross-section dimension")
        ->capture_default_str();
    sub->add_option("--r", cfg.r, "dfm: number of static factors")->capture_default_str();
    sub->add_option("--q", cfg.q, "dfm: number of dynamic shocks")->capture_default_str();
    sub->add_option("--smoothing-basis", cfg.smoothing_basis,
                    "vari11/dfm: Fourier functions used to smooth the panel")
        ->capture_default_str();
    sub->add_option("--grid-points", cfg.grid_points, "output grid size")->capture_default_str();
    sub->add_option("--a", cfg.a, "left end of the curve domain")->capture_default_str();
    sub->add_option("--b", cfg.b, "right end of the curve domain")->capture_default_str();
  }

  void add_fit_options(CLI::App* sub) {
    sub->add_option("--basis", fit_basis, "fitting basis kind: fourier or bspline")
        ->capture_default_str();
    sub->add_option("--m", cfg.m, "truncation dimension (0: match the generating dimension)")
        ->capture_default_str();
    sub->add_option("--K", cfg.lags, "number of factor lags")->capture_default_str();
    sub->add_option("--epsilon", cfg.epsilon, "relative-improvement stopping threshold")
        ->capture_default_str();
    sub->add_option("--max-iter", cfg.max_iter, "sweep cap per component")->capture_default_str();
  }

  void merge(ConfigMerger& merger, bool fit_flags) {
    merger.apply("--dgp", "dgp", dgp);
    merger.apply("--d", "d", cfg.d);
    merger.apply("--kappa", "kappa", cfg.kappa);
    merger.apply("--n", "n", cfg.n);
    merger.apply("--burn-in", "burn_in", cfg.burn_in);
    merger.apply("--panel-dim", "panel_dim", cfg.panel_dim);
    merger.apply("--r", "r", cfg.r);
    merger.apply("--q", "q", cfg.q);
    merger.apply("--smoothing-basis", "smoothing_basis", cfg.smoothing_basis);
    merger.apply("--grid-points", "grid_points", cfg.grid_points);
    merger.apply("--a", "a", cfg.a);
    merger.apply("--b", "b", cfg.b);
    if (fit_flags) {
      merger.apply("--basis", "basis", fit_basis);
      merger.apply("--m", "m", cfg.m);
      merger.apply("--K", "K", cfg.lags);
      merger.apply("--epsilon", "epsilon", cfg.epsilon);
      merger.apply("--max-iter", "max_iter", cfg.max_iter);
    }
  }

  gdfpca::DgpConfig resolve() {
    cfg.dgp = parse_dgp(dgp);
    cfg.fit_basis = parse_basis(fit_basis);
    return cfg;
  }
};

struct DatasetFlags {
  gdfpca::DatasetSpec spec;
  std::string layout = "time_by_grid";
  std::string smooth_basis = "fourier";

  void add_options(CLI::App* sub, bool require_input, bool add_bounds = true) {
    auto* in = sub->add_option("--in", spec.path, "input CSV file");
    if (require_input) in->required();
    sub->add_option("--layout", layout, "time_by_grid (rows are curves) or grid_by_time")
        ->capture_default_str();
    if (add_bounds) {
      sub->add_option("--a", spec.a, "left end of the curve domain")->capture_default_str();
      sub->add_option("--b", spec.b, "right end of the curve domain")->capture_default_str();
    }
    sub->add_flag("--log-return", spec.log_return, "take row-wise differenced logs first");
    sub->add_flag("--center", spec.center, "remove the per-grid-point mean");
    sub->add_flag("--scale", spec.scale, "scale each grid point to unit variance");
    sub->add_flag("--smooth", spec.smooth, "least-squares smooth onto a basis");
    sub->add_option("--smooth-basis", smooth_basis, "smoothing basis kind")
        ->capture_default_str();
    sub->add_option("--smooth-count", spec.smooth_count, "smoothing basis size")
        ->capture_default_str();
    sub->add_option("--smooth-grid-points", spec.smooth_grid_points,
                    "resampling grid size after smoothing")
        ->capture_default_str();
  }

  void merge(ConfigMerger& merger, bool with_bounds = true) {
    merger.apply("--in", "in", spec.path);
    merger.apply("--layout", "layout", layout);
    if (with_bounds) {
      merger.apply("--a", "a", spec.a);
      merger.apply("--b", "b", spec.b);
    }
    merger.apply("--log-return", "log_return", spec.log_return);
    merger.apply("--center", "center", spec.center);
    merger.apply("--scale", "scale", spec.scale);
    merger.apply("--smooth", "smooth", spec.smooth);
    merger.apply("--smooth-basis", "smooth_basis", smooth_basis);
    merger.apply("--smooth-count", "smooth_count", spec.smooth_count);
    merger.apply("--smooth-grid-points", "smooth_grid_points", spec.smooth_grid_points);
  }

  gdfpca::DatasetSpec resolve() {
    spec.layout = parse_layout(layout);
    spec.smooth_basis = parse_basis(smooth_basis);
    return spec;
  }
};

int run_simulate_cmd(CLI::App* sub, DgpFlags& dgp, std::string& config_path,
                     gdfpca::SimulateOptions& opt) {
  if (!config_path.empty()) {
    const json cfg = load_config_file(config_path);
    ConfigMerger merger(sub, cfg);
    dgp.merge(merger, false);
    merger.apply("--seed", "seed", opt.seed);
    merger.apply("--out", "out", opt.out);
    merger.apply("--common-out", "common_out", opt.common_out);
    merger.finish();
  }
  opt.dgp = dgp.resolve();
  gdfpca::run_simulate(opt);
  std::cout << "wrote " << opt.out << "\n";
  return 0;
}

int run_fit_cmd(CLI::App* sub, DatasetFlags& data, std::string& config_path, std::string& basis,
                gdfpca::FitOptions& opt) {
  if (!config_path.empty()) {
    const json cfg = load_config_file(config_path);
    ConfigMerger merger(sub, cfg);
    data.merge(merger);
    merger.apply("--basis", "basis", basis);
    merger.apply("--m", "m", opt.m);
    merger.apply("--K", "K", opt.lags);
    merger.apply("--p", "p", opt.p);
    merger.apply("--epsilon", "epsilon", opt.epsilon);
    merger.apply("--max-iter", "max_iter", opt.max_iter);
    merger.apply("--out-dir", "out_dir", opt.out_dir);
    merger.finish();
  }
  opt.data = data.resolve();
  opt.basis = parse_basis(basis);
  gdfpca::run_fit(opt);
  std::cout << "wrote " << opt.out_dir << "/report.json\n";
  return 0;
}

int run_compare_cmd(CLI::App* sub, DgpFlags& dgp, DatasetFlags& data, std::string& config_path,
                    std::vector<std::string>& methods, int& p_max,
                    gdfpca::CompareOptions& opt) {
  if (!config_path.empty()) {
    const json cfg = load_config_file(config_path);
    ConfigMerger merger(sub, cfg);
    dgp.merge(merger, true);
    data.merge(merger, false);
    merger.apply("--methods", "methods", methods);
    merger.apply("--p-list", "p_list", opt.p_list);
    merger.apply("--p-max", "p_max", p_max);
    merger.apply("--reps", "reps", opt.reps);
    merger.apply("--seed", "seed", opt.seed);
    merger.apply("--out-dir", "out_dir", opt.out_dir);
    merger.finish();
  }
  if (p_max > 0) {
    if (sub->count("--p-list") > 0) {
      throw gdfpca::ConfigError("compare: --p-list and --p-max conflict; give one");
    }
    opt.p_list.clear();
    for (int p = 1; p <= p_max; ++p) opt.p_list.push_back(p);
  }
  opt.methods = parse_methods(methods);
  opt.dgp = dgp.resolve();
  opt.use_dataset = !data.spec.path.empty();
  if (opt.use_dataset) {
    data.spec.a = opt.dgp.a;  // one pair of domain-bound flags per command
    data.spec.b = opt.dgp.b;
    opt.data = data.resolve();
  }
  gdfpca::run_compare(opt);
  std::cout << "wrote " << opt.out_dir << "/report.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized dynamic functional principal component analysis"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate DGP data and write it to CSV");
  DgpFlags sim_dgp;
  gdfpca::SimulateOptions sim_opt;
  std::string sim_config;
  sim_dgp.add_options(sim);
  sim->add_option("--seed", sim_opt.seed, "RNG seed")->capture_default_str();
  sim->add_option("--out", sim_opt.out, "output CSV path");
  sim->add_option("--common-out", sim_opt.common_out,
                  "dfm only: CSV path for the noiseless common part");
  sim->add_option("--config", sim_config, "JSON config file; flags override its values");

  // fit
  auto* fit = app.add_subcommand("fit", "fit GDFPCA on a CSV dataset");
  DatasetFlags fit_data;
  gdfpca::FitOptions fit_opt;
  std::string fit_config;
  std::string fit_basis = "fourier";
  fit_data.add_options(fit, false);
  fit->add_option("--basis", fit_basis, "fitting basis kind: fourier or bspline")
      ->capture_default_str();
  fit->add_option("--m", fit_opt.m, "truncation dimension")->capture_default_str();
  fit->add_option("--K", fit_opt.lags, "number of factor lags")->capture_default_str();
  fit->add_option("--p", fit_opt.p, "number of components")->capture_default_str();
  fit->add_option("--epsilon", fit_opt.epsilon, "relative-improvement stopping threshold")
      ->capture_default_str();
  fit->add_option("--max-iter", fit_opt.max_iter, "sweep cap per component")
      ->capture_default_str();
  fit->add_option("--out-dir", fit_opt.out_dir, "output directory")->capture_default_str();
  fit->add_flag("!--no-reconstruction", fit_opt.emit_reconstruction,
                "skip writing reconstruction.csv");
  fit->add_option("--config", fit_config, "JSON config file; flags override its values");

  // compare
  auto* cmp = app.add_subcommand("compare",
                                 "replication study on a DGP, or comparison on a dataset");
  DgpFlags cmp_dgp;
  DatasetFlags cmp_data;
  gdfpca::CompareOptions cmp_opt;
  std::string cmp_config;
  std::vector<std::string> cmp_methods = {"gdfpca", "fpca"};
  int cmp_p_max = 0;
  cmp_dgp.add_options(cmp);
  cmp_dgp.add_fit_options(cmp);
  cmp_data.add_options(cmp, false, /*add_bounds=*/false);
  cmp->add_option("--methods", cmp_methods, "methods to compare: gdfpca, fpca")
      ->delimiter(',')
      ->capture_default_str();
  cmp->add_option("--p-list", cmp_opt.p_list, "component counts to evaluate")
      ->delimiter(',')
      ->capture_default_str();
  cmp->add_option("--p-max", cmp_p_max, "evaluate p = 1..p-max (conflicts with --p-list)");
  cmp->add_option("--reps", cmp_opt.reps, "number of replications (DGP mode)")
      ->capture_default_str();
  cmp->add_option("--seed", cmp_opt.seed, "master RNG seed")->capture_default_str();
  cmp->add_option("--out-dir", cmp_opt.out_dir, "output directory")->capture_default_str();
  cmp->add_option("--config", cmp_config, "JSON config file; flags override its values");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return run_simulate_cmd(sim, sim_dgp, sim_config, sim_opt);
    if (fit->parsed()) return run_fit_cmd(fit, fit_data, fit_config, fit_basis, fit_opt);
    return run_compare_cmd(cmp, cmp_dgp, cmp_data, cmp_config, cmp_methods, cmp_p_max, cmp_opt);
  } catch (const gdfpca::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
