#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "wshift/kernels.hpp"

namespace wshift::kernels {

#if defined(WSHIFT_HAVE_AVX2)
const Table& avx2_table_impl();
#endif

bool cpu_has_avx2() {
#if defined(WSHIFT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Table* avx2_table() {
#if defined(WSHIFT_HAVE_AVX2)
  if (cpu_has_avx2()) return &avx2_table_impl();
#endif
  return nullptr;
}

std::string_view level_name(Level level) { return level == Level::avx2 ? "avx2" : "scalar"; }

Level parse_level(std::string_view name) {
  if (name == "scalar") return Level::scalar;
  if (name == "avx2") return Level::avx2;
  throw std::invalid_argument("unknown kernel level '" + std::string(name) + "'");
}

namespace {

Level detect() {
  if (const char* env = std::getenv("WSHIFT_KERNEL"); env != nullptr && *env != '\0') {
    const Level want = parse_level(env);
    if (want == Level::avx2 && avx2_table() == nullptr)
      throw std::runtime_error("WSHIFT_KERNEL=avx2 requested but AVX2/FMA is unavailable");
    return want;
  }
  return avx2_table() != nullptr ? Level::avx2 : Level::scalar;
}

std::atomic<const Table*>& slot() {
  static std::atomic<const Table*> s{nullptr};
  return s;
}

std::atomic<Level>& level_slot() {
  static std::atomic<Level> l{Level::scalar};
  return l;
}

}  // namespace

void set_kernel_level(Level level) {
  const Table* t = level == Level::avx2 ? avx2_table() : &scalar_table();
  if (t == nullptr) throw std::runtime_error("AVX2/FMA kernels are unavailable on this machine");
  level_slot().store(level);
  slot().store(t);
}

void use_default_kernel_level() { set_kernel_level(detect()); }

const Table& active() {
  const Table* t = slot().load(std::memory_order_acquire);
  if (t == nullptr) {
    set_kernel_level(detect());
    t = slot().load();
  }
  return *t;
}

Level active_level() {
  active();
  return level_slot().load();
}

}  // namespace wshift::kernels
