#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference version and,
// on x86-64, an AVX2/FMA version; the active table is picked once at startup
// from CPUID and may be overridden with WSHIFT_KERNEL=scalar|avx2 or
// set_kernel_level(). Variants agree to rounding, not bit-for-bit.

#include <span>
#include <string_view>

namespace wshift::kernels {

enum class Level { scalar, avx2 };

struct BridgeSums {
  double quadratic = 0.0;  // sum_k qw_k * B_k^2
  double cross = 0.0;      // sum_k cw_k * B_k
};

struct Table {
  /// sum_i w_i (x_i - q_i)^2
  double (*weighted_sq_dev)(std::span<const double> x, std::span<const double> q,
                            std::span<const double> w);
  /// B_k = walk_k - u_k * endpoint, reduced against two weight vectors.
  BridgeSums (*bridge_sums)(std::span<const double> walk, double endpoint,
                            std::span<const double> u, std::span<const double> quad_w,
                            std::span<const double> cross_w);
  /// max_i max((i+1)/n - c_i, c_i - i/n) for sorted-sample CDF values c.
  double (*ks_sup)(std::span<const double> cdf_values);
  /// out_i = a * x_i + b * y_i
  void (*axpby)(double a, std::span<const double> x, double b, std::span<const double> y,
                std::span<double> out);
};

const Table& scalar_table();
/// nullptr when the build or the CPU lacks AVX2+FMA.
const Table* avx2_table();

bool cpu_has_avx2();
Level active_level();
void set_kernel_level(Level level);
/// Back to the detected level (or the WSHIFT_KERNEL override).
void use_default_kernel_level();
const Table& active();
std::string_view level_name(Level level);
Level parse_level(std::string_view name);

inline double weighted_sq_dev(std::span<const double> x, std::span<const double> q,
                              std::span<const double> w) {
  return active().weighted_sq_dev(x, q, w);
}
inline BridgeSums bridge_sums(std::span<const double> walk, double endpoint,
                              std::span<const double> u, std::span<const double> quad_w,
                              std::span<const double> cross_w) {
  return active().bridge_sums(walk, endpoint, u, quad_w, cross_w);
}
inline double ks_sup(std::span<const double> cdf_values) { return active().ks_sup(cdf_values); }
inline void axpby(double a, std::span<const double> x, double b, std::span<const double> y,
                  std::span<double> out) {
  active().axpby(a, x, b, y, out);
}

}  // namespace wshift::kernels
