#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dtf/errors.hpp"

namespace dtf {

/// Piecewise-constant elevation grid. Cell (row, col) covers
/// [x0 + col·res, x0 + (col+1)·res) × [y0 + row·res, y0 + (row+1)·res).
class HeightMap {
 public:
  HeightMap() = default;

  HeightMap(Eigen::Vector2d origin, double resolution, Eigen::MatrixXd heights)
      : origin_(origin), resolution_(resolution), heights_(std::move(heights)) {
    if (!(resolution_ > 0.0)) throw std::invalid_argument("heightmap resolution must be positive");
    if (heights_.rows() < 1 || heights_.cols() < 1) throw std::invalid_argument("empty heightmap");
    if (!heights_.allFinite()) throw std::invalid_argument("heightmap contains non-finite heights");
  }

  static HeightMap flat(Eigen::Vector2d origin, double resolution, int rows, int cols, double z = 0.0) {
    return HeightMap(origin, resolution, Eigen::MatrixXd::Constant(rows, cols, z));
  }

  const Eigen::Vector2d& origin() const { return origin_; }
  double resolution() const { return resolution_; }
  int rows() const { return static_cast<int>(heights_.rows()); }
  int cols() const { return static_cast<int>(heights_.cols()); }
  const Eigen::MatrixXd& heights() const { return heights_; }

  bool contains(double x, double y) const {
    const double fx = (x - origin_.x()) / resolution_, fy = (y - origin_.y()) / resolution_;
    return fx >= 0.0 && fy >= 0.0 && fx <= cols() && fy <= rows();
  }

  /// Cell index (row, col) containing the point; the far boundary belongs to
  /// the last cell.
  std::pair<int, int> cell_of(double x, double y) const {
    if (!contains(x, y)) {
      std::ostringstream os;
      os << "point (" << x << ", " << y << ") outside the heightmap";
      throw OutOfBounds(os.str());
    }
    const int c = std::min(cols() - 1, static_cast<int>(std::floor((x - origin_.x()) / resolution_)));
    const int r = std::min(rows() - 1, static_cast<int>(std::floor((y - origin_.y()) / resolution_)));
    return {r, c};
  }

  double height(double x, double y) const {
    const auto [r, c] = cell_of(x, y);
    return heights_(r, c);
  }

  Eigen::Vector2d cell_center(int row, int col) const {
    return origin_ + resolution_ * Eigen::Vector2d(col + 0.5, row + 0.5);
  }

 private:
  Eigen::Vector2d origin_ = Eigen::Vector2d::Zero();
  double resolution_ = 0.01;
  Eigen::MatrixXd heights_;
};

/// Straight staircase along +x: flat ground, `steps` risers going up, a
/// platform, then the same number of risers going down.
struct StairParams {
  double step_height = 0.08;
  double step_depth = 0.30;
  int steps = 2;
  double start_x = 0.55;
  double platform_depth = 1.0;
  bool descend = true;
  double x_min = -1.5, x_max = 3.5;
  double y_min = -1.0, y_max = 1.0;
  double resolution = 0.01;
};

inline double stair_profile(const StairParams& p, double x) {
  if (x < p.start_x) return 0.0;
  const double top = p.steps * p.step_height;
  const double up_end = p.start_x + p.steps * p.step_depth;
  if (x < up_end) {
    return p.step_height * (1 + static_cast<int>(std::floor((x - p.start_x) / p.step_depth + 1e-9)));
  }
  const double down_start = up_end + p.platform_depth;
  if (!p.descend || x < down_start) return top;
  const int down = 1 + static_cast<int>(std::floor((x - down_start) / p.step_depth + 1e-9));
  return std::max(0.0, top - p.step_height * down);
}

inline HeightMap generate_stairs(const StairParams& p) {
  if (!(p.step_height >= 0.0) || !(p.step_depth > 0.0) || p.steps < 0) {
    throw std::invalid_argument("invalid stair parameters");
  }
  const int cols = static_cast<int>(std::lround((p.x_max - p.x_min) / p.resolution));
  const int rows = static_cast<int>(std::lround((p.y_max - p.y_min) / p.resolution));
  Eigen::MatrixXd h(rows, cols);
  for (int c = 0; c < cols; ++c) {
    const double x = p.x_min + (c + 0.5) * p.resolution;
    h.col(c).setConstant(stair_profile(p, x));
  }
  return HeightMap({p.x_min, p.y_min}, p.resolution, std::move(h));
}

/// Text format:
///   origin <x0> <y0>
///   resolution <r>
///   rows <n>
///   cols <m>
/// followed by n·m heights, row-major, whitespace separated. Lines starting
/// with '#' are comments.
inline HeightMap parse_heightmap(std::istream& in, const std::string& source) {
  std::string line;
  int lineno = 0;
  auto next_line = [&](const char* what) {
    while (std::getline(in, line)) {
      ++lineno;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      return;
    }
    throw ParseError(source, lineno, std::string("unexpected end of file, expected ") + what);
  };
  auto header = [&](const char* key, int count) {
    next_line(key);
    std::istringstream ss(line);
    std::string k;
    std::vector<double> v(count);
    if (!(ss >> k) || k != key) throw ParseError(source, lineno, std::string("expected '") + key + "'");
    for (double& x : v) {
      if (!(ss >> x)) throw ParseError(source, lineno, std::string("bad value for '") + key + "'");
    }
    return v;
  };
  const auto origin = header("origin", 2);
  const double res = header("resolution", 1)[0];
  const double rows = header("rows", 1)[0];
  const double cols = header("cols", 1)[0];
  if (!(res > 0.0)) throw ParseError(source, lineno - 2, "resolution must be positive");
  if (rows < 1 || cols < 1 || rows != std::floor(rows) || cols != std::floor(cols)) {
    throw ParseError(source, lineno, "rows and cols must be positive integers");
  }
  Eigen::MatrixXd h(static_cast<int>(rows), static_cast<int>(cols));
  Eigen::Index filled = 0;
  const Eigen::Index total = h.size();
  while (filled < total) {
    next_line("height values");
    std::istringstream ss(line);
    std::string token;
    while (ss >> token) {
      if (filled >= total) throw ParseError(source, lineno, "more height values than rows * cols");
      try {
        std::size_t used = 0;
        const double v = std::stod(token, &used);
        if (used != token.size() || !std::isfinite(v)) throw std::invalid_argument(token);
        h(filled / h.cols(), filled % h.cols()) = v;
      } catch (const std::exception&) {
        throw ParseError(source, lineno, "bad height value '" + token + "'");
      }
      ++filled;
    }
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") != std::string::npos && line[line.find_first_not_of(" \t\r")] != '#') {
      throw ParseError(source, lineno, "more height values than rows * cols");
    }
  }
  return HeightMap({origin[0], origin[1]}, res, std::move(h));
}

inline HeightMap load_heightmap(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  return parse_heightmap(in, path.string());
}

inline void write_heightmap(std::ostream& os, const HeightMap& map) {
  os << std::setprecision(17);
  os << "origin " << map.origin().x() << ' ' << map.origin().y() << '\n';
  os << "resolution " << map.resolution() << '\n';
  os << "rows " << map.rows() << '\n' << "cols " << map.cols() << '\n';
  for (int r = 0; r < map.rows(); ++r) {
    for (int c = 0; c < map.cols(); ++c) os << (c ? " " : "") << map.heights()(r, c);
    os << '\n';
  }
}

}  // namespace dtf
