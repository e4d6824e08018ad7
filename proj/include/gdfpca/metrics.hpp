#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "gdfpca/basis.hpp"
#include "gdfpca/errors.hpp"
#include "gdfpca/fgdpca.hpp"
#include "gdfpca/fpca.hpp"
#include "gdfpca/simgen.hpp"

// Replication studies over the simulated data-generating processes:
// per-replication fits of GDFPCA and FPCA, functional MSE and explained
// variance, and median/quartile summaries.
namespace gdfpca {

enum class Dgp { far1, vari11, dfm };
enum class Method { gdfpca, fpca };

inline const char* to_string(Dgp d) {
  switch (d) {
    case Dgp::far1: return "far1";
    case Dgp::vari11: return "vari11";
    default: return "dfm";
  }
}

inline const char* to_string(Method m) { return m == Method::gdfpca ? "gdfpca" : "fpca"; }

struct DgpConfig {
  Dgp dgp = Dgp::far1;
  // far1
  int d = 15;
  double kappa = 0.3;
  Eigen::Index n = 300;
  Eigen::Index burn_in = 200;
  // vari11 / dfm
  int panel_dim = 50;
  int r = 6;
  int q = 2;
  int smoothing_basis = 21;
  // shared grid
  double a = 0.0;
  double b = 1.0;
  Eigen::Index grid_points = 101;
  // fitting
  BasisKind fit_basis = BasisKind::fourier;
  int m = 0;  // 0: default to the generating dimension (d or smoothing_basis)
  int lags = 2;
  double epsilon = 1e-6;
  int max_iter = 500;

  int truncation() const {
    if (m > 0) return m;
    return dgp == Dgp::far1 ? d : smoothing_basis;
  }

  Eigen::Index length() const { return n; }

  // Collects every violation so callers can report them all at once.
  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (dgp == Dgp::far1) {
      if (d < 1 || d % 2 == 0) out.push_back("d: must be odd and >= 1");
      if (!(kappa >= 0.0 && kappa < 2.0)) {
        out.push_back("kappa: must lie in [0, 2); the transition norm is kappa/2 and "
                      "stationarity requires kappa < 2");
      }
      if (burn_in < 0) out.push_back("burn_in: must be >= 0");
    } else {
      if (panel_dim < 2) out.push_back("panel_dim: must be >= 2");
      if (smoothing_basis < 1 || smoothing_basis % 2 == 0) {
        out.push_back("smoothing_basis: must be odd and >= 1");
      }
      if (smoothing_basis > panel_dim) out.push_back("smoothing_basis: must not exceed panel_dim");
      if (dgp == Dgp::dfm) {
        if (q < 1 || r < q) out.push_back("r/q: need r >= q >= 1");
        if (panel_dim < r) out.push_back("panel_dim: must be >= r");
      }
    }
    if (n < 2) out.push_back("n: must be >= 2");
    if (!(a < b)) out.push_back("a/b: need a < b");
    if (grid_points < 2) out.push_back("grid_points: must be >= 2");
    if (m < 0) out.push_back("m: must be >= 0 (0 selects the generating dimension)");
    if (fit_basis == BasisKind::fourier && truncation() % 2 == 0) {
      out.push_back("m: fourier fitting basis needs odd m");
    }
    if (truncation() > grid_points) out.push_back("m: must not exceed grid_points");
    if (lags < 0) out.push_back("lags: must be >= 0");
    if (n <= lags + 2) out.push_back("n: must exceed lags + 2");
    if (!(epsilon > 0)) out.push_back("epsilon: must be > 0");
    if (max_iter < 1) out.push_back("max_iter: must be >= 1");
    return out;
  }

  void validate() const {
    const auto bad = violations();
    if (!bad.empty()) {
      std::string msg = "invalid DGP configuration:";
      for (const auto& v : bad) msg += "\n  - " + v;
      throw ConfigError(msg);
    }
  }

  FitConfig fit_config() const {
    FitConfig cfg;
    cfg.lags = lags;
    cfg.epsilon = epsilon;
    cfg.max_iter = max_iter;
    return cfg;
  }

  FunctionalSeries generate(const Grid& grid, std::uint64_t seed) const {
    switch (dgp) {
      case Dgp::far1: return gen_far1(d, kappa, n, burn_in, grid, seed);
      case Dgp::vari11: return gen_vari11(panel_dim, n, smoothing_basis, grid, seed);
      default: return gen_dfm(panel_dim, n, r, q, grid, smoothing_basis, seed).observed;
    }
  }
};

struct ReplicationRecord {
  int replication = 0;
  Method method = Method::gdfpca;
  int p = 0;
  double mse = 0.0;
  double explained = 0.0;
};

struct SummaryRow {
  Method method = Method::gdfpca;
  int p = 0;
  double mse_q1 = 0, mse_median = 0, mse_q3 = 0;
  double ev_q1 = 0, ev_median = 0, ev_q3 = 0;
  int count = 0;
};

struct ReplicationSummary {
  DgpConfig config;
  std::vector<Method> methods;
  std::vector<int> p_list;
  int replications = 0;
  std::uint64_t seed = 0;
  std::vector<ReplicationRecord> records;  // successful replications only
  std::vector<SummaryRow> rows;
  int failed = 0;
  std::vector<std::string> failures;
};

// Linear-interpolation quantile of an unsorted sample.
inline double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw InvalidArgumentError("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double h = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

namespace detail {

inline unsigned replication_threads(int reps) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("GDFPCA_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1 && static_cast<unsigned>(cap) < hw) hw = static_cast<unsigned>(cap);
  }
  return std::min<unsigned>(hw, static_cast<unsigned>(reps));
}

// Run fn(r) for r in [0, reps) on a small worker pool; fn must only touch
// its own slot.
template <typename Fn>
inline void parallel_reps(int reps, Fn&& fn) {
  const unsigned nthreads = replication_threads(reps);
  if (nthreads <= 1) {
    for (int r = 0; r < reps; ++r) fn(r);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (unsigned w = 0; w < nthreads; ++w) {
    pool.emplace_back([&]() {
      for (int r = next.fetch_add(1); r < reps; r = next.fetch_add(1)) fn(r);
    });
  }
  for (auto& th : pool) th.join();
}

struct MethodValues {
  std::vector<double> mse;        // indexed like p_list
  std::vector<double> explained;
};

// Fit both methods on one generated series and evaluate every requested p.
inline std::vector<MethodValues> evaluate_replication(const FunctionalSeries& series,
                                                      const BasisSystem& basis,
                                                      const std::vector<Method>& methods,
                                                      const std::vector<int>& p_list,
                                                      const FitConfig& fit_cfg) {
  const int p_max = *std::max_element(p_list.begin(), p_list.end());
  std::vector<MethodValues> out(methods.size());
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    std::vector<Eigen::MatrixXd> recon_by_p;  // cumulative score reconstructions
    if (methods[mi] == Method::gdfpca) {
      ScoreMatrix scores = project_scores(series, basis);
      Eigen::MatrixXd total = Eigen::MatrixXd::Zero(scores.length(), scores.dim());
      for (int k = 0; k < p_max; ++k) {
        const GdpcFit fit = fit_gdpc(scores, fit_cfg);
        total += reconstruct_scores(fit);
        scores = residual_scores(scores, fit);
        recon_by_p.push_back(total);
      }
    } else {
      const ScoreMatrix scores = project_scores(series, basis);
      const FpcaFit fit = fit_fpca(scores, p_max);
      for (int p = 1; p <= p_max; ++p) {
        recon_by_p.push_back(reconstruct_fpca(fit, p).entries);
      }
    }
    for (int p : p_list) {
      ScoreMatrix rec;
      rec.entries = recon_by_p[p - 1];
      const FunctionalSeries curves = synthesize_curves(rec, basis);
      out[mi].mse.push_back(functional_mse(series, curves));
      out[mi].explained.push_back(explained_variance(series, curves));
    }
  }
  return out;
}

}  // namespace detail

// For each replication r: generate data on stream r, fit each method at each
// p, and record functional MSE and explained variance. Failed replications
// are excluded and counted. Deterministic given (config, seed), independent
// of thread count.
inline ReplicationSummary run_replications(const DgpConfig& config,
                                           const std::vector<Method>& methods,
                                           const std::vector<int>& p_list, int reps,
                                           std::uint64_t seed) {
  config.validate();
  if (reps < 1) throw InvalidArgumentError("run_replications: reps must be >= 1");
  if (methods.empty()) throw InvalidArgumentError("run_replications: no methods given");
  if (p_list.empty()) throw InvalidArgumentError("run_replications: empty p list");
  for (int p : p_list) {
    if (p < 1 || p > config.truncation()) {
      throw InvalidArgumentError("run_replications: p = " + std::to_string(p) +
                                 " outside [1, m = " + std::to_string(config.truncation()) + "]");
    }
  }

  const Grid grid = Grid::uniform(config.a, config.b, config.grid_points);
  const BasisSystem basis = make_basis(config.fit_basis, config.truncation(), grid);
  const FitConfig fit_cfg = config.fit_config();
  const Seed streams{seed};

  std::vector<std::optional<std::vector<detail::MethodValues>>> results(reps);
  std::vector<std::string> errors(reps);
  detail::parallel_reps(reps, [&](int r) {
    try {
      const FunctionalSeries series = config.generate(grid, streams.stream(r));
      results[r] = detail::evaluate_replication(series, basis, methods, p_list, fit_cfg);
    } catch (const std::exception& e) {
      errors[r] = e.what();
    }
  });

  ReplicationSummary summary;
  summary.config = config;
  summary.methods = methods;
  summary.p_list = p_list;
  summary.replications = reps;
  summary.seed = seed;
  for (int r = 0; r < reps; ++r) {
    if (!results[r]) {
      ++summary.failed;
      summary.failures.push_back("replication " + std::to_string(r) + ": " + errors[r]);
      continue;
    }
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      for (std::size_t pi = 0; pi < p_list.size(); ++pi) {
        summary.records.push_back({r, methods[mi], p_list[pi], (*results[r])[mi].mse[pi],
                                   (*results[r])[mi].explained[pi]});
      }
    }
  }
  if (summary.records.empty()) {
    throw Error("run_replications: every replication failed; first failure: " +
                (summary.failures.empty() ? std::string("?") : summary.failures.front()));
  }

  for (Method method : methods) {
    for (int p : p_list) {
      std::vector<double> mse, ev;
      for (const auto& rec : summary.records) {
        if (rec.method == method && rec.p == p) {
          mse.push_back(rec.mse);
          ev.push_back(rec.explained);
        }
      }
      SummaryRow row;
      row.method = method;
      row.p = p;
      row.count = static_cast<int>(mse.size());
      row.mse_q1 = quantile(mse, 0.25);
      row.mse_median = quantile(mse, 0.5);
      row.mse_q3 = quantile(mse, 0.75);
      row.ev_q1 = quantile(ev, 0.25);
      row.ev_median = quantile(ev, 0.5);
      row.ev_q3 = quantile(ev, 0.75);
      summary.rows.push_back(row);
    }
  }
  return summary;
}

// Smallest p whose median GDFPCA explained variance over 10 replications
// meets the threshold; components are grown incrementally per replication.
inline int select_p(const DgpConfig& config, double threshold, std::uint64_t seed) {
  config.validate();
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw InvalidArgumentError("select_p: threshold must lie in (0, 1)");
  }
  constexpr int kReps = 10;
  const Grid grid = Grid::uniform(config.a, config.b, config.grid_points);
  const BasisSystem basis = make_basis(config.fit_basis, config.truncation(), grid);
  const FitConfig fit_cfg = config.fit_config();
  const Seed streams{seed};
  const int p_cap = config.truncation();

  struct RepState {
    FunctionalSeries series;
    ScoreMatrix residual;
    Eigen::MatrixXd total;
    bool alive = false;
  };
  std::vector<RepState> state(kReps);
  detail::parallel_reps(kReps, [&](int r) {
    try {
      state[r].series = config.generate(grid, streams.stream(r));
      state[r].residual = project_scores(state[r].series, basis);
      state[r].total =
          Eigen::MatrixXd::Zero(state[r].residual.length(), state[r].residual.dim());
      state[r].alive = true;
    } catch (const std::exception&) {
      state[r].alive = false;
    }
  });

  double best_median = -std::numeric_limits<double>::infinity();
  for (int p = 1; p <= p_cap; ++p) {
    std::vector<double> evs(kReps, std::numeric_limits<double>::quiet_NaN());
    detail::parallel_reps(kReps, [&](int r) {
      if (!state[r].alive) return;
      try {
        const GdpcFit fit = fit_gdpc(state[r].residual, fit_cfg);
        state[r].total += reconstruct_scores(fit);
        state[r].residual = residual_scores(state[r].residual, fit);
        ScoreMatrix rec;
        rec.entries = state[r].total;
        evs[r] = explained_variance(state[r].series, synthesize_curves(rec, basis));
      } catch (const std::exception&) {
        state[r].alive = false;
      }
    });
    std::vector<double> ok;
    for (double v : evs) {
      if (v == v) ok.push_back(v);
    }
    if (ok.empty()) throw Error("select_p: every replication failed at p = " + std::to_string(p));
    const double med = quantile(ok, 0.5);
    best_median = std::max(best_median, med);
    if (med >= threshold) return p;
  }
  throw Error("select_p: threshold " + std::to_string(threshold) +
              " unreachable at p = m = " + std::to_string(p_cap) +
              "; best median explained variance achieved: " + std::to_string(best_median));
}

}  // namespace gdfpca
