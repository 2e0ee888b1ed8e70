#include "wshift/weight.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "wshift/numeric.hpp"

namespace wshift {

WeightMeasure WeightMeasure::lebesgue() { return WeightMeasure{}; }

WeightMeasure WeightMeasure::quadratic(double a) {
  if (!(a >= 0.0 && a < 12.0)) throw std::invalid_argument("quadratic weight: a must lie in [0, 12)");
  WeightMeasure w;
  w.tag_ = Tag::quadratic;
  w.a_ = a;
  std::ostringstream os;
  os << "quadratic(" << a << ")";
  w.name_ = os.str();
  w.total_mass_ = w.mass(0.0, 1.0);
  return w;
}

WeightMeasure WeightMeasure::custom(std::string name, std::function<double(double)> density,
                                   std::vector<double> breaks) {
  if (!density) throw std::invalid_argument("custom weight: density is empty");
  WeightMeasure w;
  w.tag_ = Tag::custom;
  w.name_ = std::move(name);
  w.custom_ = std::move(density);
  std::erase_if(breaks, [](double u) { return !(u > 0.0 && u < 1.0); });
  std::sort(breaks.begin(), breaks.end());
  w.breaks_ = std::move(breaks);
  w.total_mass_ = w.mass(0.0, 1.0);
  if (!(w.total_mass_ > 0.0) || !std::isfinite(w.total_mass_))
    throw std::invalid_argument("custom weight: total mass must be finite and positive");
  return w;
}

WeightMeasure WeightMeasure::trimmed(double delta) const {
  if (!(delta >= 0.0 && delta < 0.5)) throw std::invalid_argument("trim: delta must lie in [0, 1/2)");
  WeightMeasure w = *this;
  w.trim_ = delta;
  w.total_mass_ = w.mass(0.0, 1.0);
  return w;
}

double WeightMeasure::raw_density(double u) const {
  switch (tag_) {
    case Tag::lebesgue:
      return 1.0;
    case Tag::quadratic:
      return a_ * (u - 0.5) * (u - 0.5) + 1.0 - a_ / 12.0;
    case Tag::custom:
      return custom_(u);
  }
  return 0.0;
}

// Antiderivative of the polynomial densities, centred at 1/2.
double WeightMeasure::raw_antiderivative(double u) const {
  const double c = u - 0.5;
  return a_ * c * c * c / 3.0 + (1.0 - a_ / 12.0) * c;
}

double WeightMeasure::density(double u) const {
  if (u < window_lo() || u > window_hi()) return 0.0;
  return raw_density(u);
}

double WeightMeasure::mass(double lo, double hi) const {
  lo = std::max(lo, window_lo());
  hi = std::min(hi, window_hi());
  if (!(hi > lo)) return 0.0;
  if (tag_ != Tag::custom) return raw_antiderivative(hi) - raw_antiderivative(lo);
  std::vector<double> pts{lo};
  for (double b : breaks_)
    if (b > lo && b < hi) pts.push_back(b);
  pts.push_back(hi);
  return integrate_composite([this](double u) { return custom_(u); }, pts, 1.0 / 256.0, 16);
}

std::string WeightMeasure::describe() const {
  if (trim_ == 0.0) return name_;
  std::ostringstream os;
  os << name_ << " trimmed to [" << trim_ << ", " << 1.0 - trim_ << "]";
  return os.str();
}

}  // namespace wshift
