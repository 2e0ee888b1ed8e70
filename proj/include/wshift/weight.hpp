#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wshift {

/// A finite measure on (0, 1) given by a Lebesgue density, optionally trimmed
/// to [delta, 1 - delta].
class WeightMeasure {
 public:
  enum class Tag { lebesgue, quadratic, custom };

  static WeightMeasure lebesgue();
  /// Density a (u - 1/2)^2 + 1 - a/12, a in [0, 12); total mass 1.
  static WeightMeasure quadratic(double a);
  /// Arbitrary nonnegative density; mass is integrated numerically and must
  /// be finite and positive. `breaks` marks kinks of the density.
  static WeightMeasure custom(std::string name, std::function<double(double)> density,
                              std::vector<double> breaks = {});

  /// Copy restricted to [delta, 1 - delta], delta in [0, 1/2).
  WeightMeasure trimmed(double delta) const;

  Tag tag() const { return tag_; }
  const std::string& name() const { return name_; }
  double parameter() const { return a_; }
  double trim() const { return trim_; }
  double window_lo() const { return trim_; }
  double window_hi() const { return 1.0 - trim_; }

  /// Density at u; zero outside the window.
  double density(double u) const;
  /// omega([lo, hi] intersected with the window). Exact for polynomial densities.
  double mass(double lo, double hi) const;
  double total_mass() const { return total_mass_; }
  /// True when the density is a polynomial of degree <= 2 in u.
  bool is_polynomial() const { return tag_ != Tag::custom; }
  std::span<const double> breaks() const { return breaks_; }

  std::string describe() const;

 private:
  WeightMeasure() = default;
  double raw_density(double u) const;
  double raw_antiderivative(double u) const;

  Tag tag_ = Tag::lebesgue;
  std::string name_ = "lebesgue";
  double a_ = 0.0;
  double trim_ = 0.0;
  double total_mass_ = 1.0;
  std::function<double(double)> custom_;
  std::vector<double> breaks_;
};

}  // namespace wshift
