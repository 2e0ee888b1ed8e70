#include "wshift/kernels.hpp"

#include <algorithm>
#include <cassert>

namespace wshift::kernels {
namespace {

double weighted_sq_dev_scalar(std::span<const double> x, std::span<const double> q,
                              std::span<const double> w) {
  assert(x.size() == q.size() && x.size() == w.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - q[i];
    acc += w[i] * d * d;
  }
  return acc;
}

BridgeSums bridge_sums_scalar(std::span<const double> walk, double endpoint,
                              std::span<const double> u, std::span<const double> quad_w,
                              std::span<const double> cross_w) {
  BridgeSums s;
  for (std::size_t k = 0; k < walk.size(); ++k) {
    const double b = walk[k] - u[k] * endpoint;
    s.quadratic += quad_w[k] * b * b;
    s.cross += cross_w[k] * b;
  }
  return s;
}

double ks_sup_scalar(std::span<const double> c) {
  const double n = static_cast<double>(c.size());
  double best = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    best = std::max(best, std::max(hi - c[i], c[i] - lo));
  }
  return best;
}

void axpby_scalar(double a, std::span<const double> x, double b, std::span<const double> y,
                  std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x[i] + b * y[i];
}

}  // namespace

const Table& scalar_table() {
  static const Table t{weighted_sq_dev_scalar, bridge_sums_scalar, ks_sup_scalar, axpby_scalar};
  return t;
}

}  // namespace wshift::kernels
