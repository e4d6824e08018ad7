#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "gdfpca/basis.hpp"
#include "gdfpca/errors.hpp"
#include "gdfpca/grid.hpp"

// CSV ingestion and preprocessing for user-supplied functional time series.
namespace gdfpca {

enum class Layout { time_by_grid, grid_by_time };

struct DatasetSpec {
  std::string path;
  Layout layout = Layout::time_by_grid;
  double a = 0.0;  // grid bounds of the within-curve argument
  double b = 1.0;
  bool log_return = false;
  bool center = false;
  bool scale = false;
  bool smooth = false;
  BasisKind smooth_basis = BasisKind::fourier;
  int smooth_count = 15;
  Eigen::Index smooth_grid_points = 101;
};

namespace detail {

inline bool parse_double(std::string_view token, double& out) {
  // trim surrounding spaces; from_chars is locale-independent
  while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) {
    token.remove_prefix(1);
  }
  while (!token.empty() && (token.back() == ' ' || token.back() == '\t' || token.back() == '\r')) {
    token.remove_suffix(1);
  }
  if (token.empty()) return false;
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

// Read a numeric CSV with an optional single header row (detected by a
// non-numeric first row). Errors carry 1-based row/column locations.
inline Eigen::MatrixXd read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open CSV file: " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  bool header_checked = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto tokens = detail::split_csv_line(line);
    std::vector<double> row(tokens.size());
    bool all_numeric = true;
    std::size_t bad_col = 0;
    for (std::size_t c = 0; c < tokens.size(); ++c) {
      if (!detail::parse_double(tokens[c], row[c])) {
        all_numeric = false;
        bad_col = c;
        break;
      }
    }
    if (!all_numeric) {
      if (!header_checked && rows.empty()) {
        header_checked = true;  // treat the first non-numeric row as a header
        continue;
      }
      throw CsvError(path + ": non-numeric cell at row " + std::to_string(lineno) + ", column " +
                     std::to_string(bad_col + 1));
    }
    header_checked = true;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw CsvError(path + ": ragged row " + std::to_string(lineno) + " has " +
                     std::to_string(row.size()) + " cells, expected " +
                     std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw CsvError(path + ": no numeric rows");

  Eigen::MatrixXd M(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.front().size(); ++j) M(i, j) = rows[i][j];
  }
  return M;
}

// 12 significant digits, comma separated, no header.
inline void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& M) {
  std::ofstream out(path);
  if (!out) throw CsvError("cannot open CSV file for writing: " + path);
  char buf[64];
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.12g", M(i, j));
      out << buf;
      if (j + 1 < M.cols()) out << ',';
    }
    out << '\n';
  }
}

namespace detail {

inline Eigen::MatrixXd basis_values_raw(BasisKind kind, int count, const Eigen::VectorXd& points,
                                        double a, double b) {
  if (kind == BasisKind::fourier) {
    if (count % 2 == 0) {
      throw InvalidArgumentError("smoothing: fourier basis needs odd count");
    }
    return fourier_values(count, points, a, b);
  }
  const int order = std::min(4, count);
  return bspline_values(count, points, a, b, order);
}

}  // namespace detail

// Load a functional series from CSV, orient it to time-by-grid, and apply
// preprocessing in the fixed order log_return -> center -> scale -> smooth.
inline FunctionalSeries load_fts_csv(const DatasetSpec& spec) {
  if (!(spec.a < spec.b)) throw InvalidArgumentError("DatasetSpec: need a < b");
  Eigen::MatrixXd values = read_csv_matrix(spec.path);
  if (spec.layout == Layout::grid_by_time) values.transposeInPlace();

  if (spec.log_return) {
    if (values.rows() < 2) {
      throw InvalidArgumentError(spec.path + ": log_return needs at least 2 rows");
    }
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      for (Eigen::Index j = 0; j < values.cols(); ++j) {
        if (!(values(i, j) > 0.0)) {
          throw InvalidArgumentError(spec.path + ": log_return requires positive values; row " +
                                     std::to_string(i + 1) + ", column " + std::to_string(j + 1));
        }
      }
    }
    const Eigen::MatrixXd logs = values.array().log();
    values = logs.bottomRows(values.rows() - 1) - logs.topRows(values.rows() - 1);
  }

  if (spec.center) {
    values.rowwise() -= values.colwise().mean();
  }

  if (spec.scale) {
    const Eigen::Index n = values.rows();
    const Eigen::RowVectorXd mean = values.colwise().mean();
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      const double var =
          (values.col(j).array() - mean[j]).square().sum() / static_cast<double>(n - 1);
      if (var < 1e-300) {
        throw DegenerateInputError(spec.path + ": zero-variance column " + std::to_string(j + 1) +
                                   " under scaling");
      }
      values.col(j) /= std::sqrt(var);
    }
  }

  FunctionalSeries out;
  if (spec.smooth) {
    if (spec.smooth_count > values.cols()) {
      throw InvalidArgumentError(spec.path + ": smoothing basis count exceeds the number of "
                                 "observed grid points");
    }
    const Eigen::VectorXd source_pts =
        Eigen::VectorXd::LinSpaced(values.cols(), spec.a, spec.b);
    const Eigen::MatrixXd phi_src =
        detail::basis_values_raw(spec.smooth_basis, spec.smooth_count, source_pts, spec.a, spec.b);
    const Eigen::MatrixXd coef =
        (phi_src * phi_src.transpose()).ldlt().solve(phi_src * values.transpose()).transpose();
    out.grid = Grid::uniform(spec.a, spec.b, spec.smooth_grid_points);
    out.values = coef * detail::basis_values_raw(spec.smooth_basis, spec.smooth_count,
                                                 out.grid.points, spec.a, spec.b);
  } else {
    out.grid = Grid::uniform(spec.a, spec.b, values.cols());
    out.values = std::move(values);
  }

  if (out.values.rows() < 2 || out.values.cols() < 2) {
    throw DimensionError(spec.path + ": need at least 2 curves on at least 2 grid points after "
                         "preprocessing");
  }
  if (!out.values.allFinite()) {
    throw InvalidArgumentError(spec.path + ": non-finite values after preprocessing");
  }
  return out;
}

}  // namespace gdfpca
