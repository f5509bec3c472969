#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "eulerlim/errors.hpp"
#include "eulerlim/model.hpp"

namespace eulerlim {

/// Cell averages of an n-component density field on the unit torus; cell j
/// covers [j / n_cells, (j + 1) / n_cells).
struct Profile {
  Matrix values;  // n_cells x n
  double time = 0.0;

  Profile() = default;
  Profile(std::size_t n_cells, std::size_t components, double t = 0.0)
      : values(Matrix::Zero(static_cast<Eigen::Index>(n_cells),
                            static_cast<Eigen::Index>(components))),
        time(t) {}

  std::size_t n_cells() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t components() const { return static_cast<std::size_t>(values.cols()); }
  double dx() const { return 1.0 / static_cast<double>(n_cells()); }
  Vector cell(std::size_t j) const {
    return values.row(static_cast<Eigen::Index>(j)).transpose();
  }
  Vector mean() const { return values.colwise().mean().transpose(); }
};

/// Averages a piecewise-constant profile onto `n_target` equal cells.
inline Profile resample(const Profile& p, std::size_t n_target) {
  if (n_target == p.n_cells()) return p;
  Profile out(n_target, p.components(), p.time);
  const double src = static_cast<double>(p.n_cells());
  const double dst = static_cast<double>(n_target);
  for (std::size_t k = 0; k < n_target; ++k) {
    const double a = static_cast<double>(k) / dst;
    const double b = static_cast<double>(k + 1) / dst;
    auto j0 = static_cast<std::size_t>(std::floor(a * src));
    for (std::size_t j = j0; j < p.n_cells(); ++j) {
      const double ca = static_cast<double>(j) / src;
      const double cb = static_cast<double>(j + 1) / src;
      if (ca >= b) break;
      const double overlap = std::min(b, cb) - std::max(a, ca);
      if (overlap > 0) {
        out.values.row(static_cast<Eigen::Index>(k)) +=
            overlap * dst * p.values.row(static_cast<Eigen::Index>(j));
      }
    }
  }
  return out;
}

/// Initial data u_i(x) = mean_i + amp_i sin(2 pi x), parsed from
/// "const:v1,...,vn" or "sine:mean1,amp1,...,meann,ampn".
class InitialCondition {
 public:
  static InitialCondition parse(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) {
      throw Error("initial profile '" + spec + "' must look like kind:values");
    }
    const std::string kind = spec.substr(0, colon);
    std::vector<double> nums;
    std::stringstream ss(spec.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        nums.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw Error("bad number '" + item + "' in initial profile '" + spec + "'");
      }
    }
    InitialCondition ic;
    if (kind == "const") {
      if (nums.empty()) throw Error("const profile needs at least one value");
      ic.mean_ = nums;
      ic.amplitude_.assign(nums.size(), 0.0);
    } else if (kind == "sine") {
      if (nums.empty() || nums.size() % 2 != 0) {
        throw Error("sine profile needs mean,amplitude pairs");
      }
      for (std::size_t i = 0; i < nums.size(); i += 2) {
        ic.mean_.push_back(nums[i]);
        ic.amplitude_.push_back(nums[i + 1]);
      }
    } else {
      throw Error("unknown initial profile kind '" + kind + "'");
    }
    ic.spec_ = spec;
    return ic;
  }

  std::size_t components() const { return mean_.size(); }
  const std::string& spec() const { return spec_; }

  Vector at(double x) const {
    Vector u(static_cast<Eigen::Index>(mean_.size()));
    for (std::size_t i = 0; i < mean_.size(); ++i)
      u(static_cast<Eigen::Index>(i)) =
          mean_[i] + amplitude_[i] * std::sin(2.0 * M_PI * x);
    return u;
  }

  /// Exact cell averages on a uniform grid.
  Profile cell_averages(std::size_t n_cells) const {
    Profile p(n_cells, components());
    const double h = 1.0 / static_cast<double>(n_cells);
    for (std::size_t j = 0; j < n_cells; ++j) {
      const double a = static_cast<double>(j) * h;
      const double b = a + h;
      const double sine_avg =
          (std::cos(2.0 * M_PI * a) - std::cos(2.0 * M_PI * b)) / (2.0 * M_PI * h);
      for (std::size_t i = 0; i < mean_.size(); ++i) {
        p.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
            mean_[i] + amplitude_[i] * sine_avg;
      }
    }
    return p;
  }

 private:
  std::vector<double> mean_;
  std::vector<double> amplitude_;
  std::string spec_;
};

}  // namespace eulerlim
