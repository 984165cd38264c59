#include "icbo/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include "icbo/errors.hpp"

namespace icbo::kernels {

std::string_view to_string(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

Isa detected_isa() {
#if defined(__x86_64__) || defined(__i386__)
  static const Isa isa = [] {
    __builtin_cpu_init();
    return (avx2::compiled() && __builtin_cpu_supports("avx2")) ? Isa::avx2 : Isa::scalar;
  }();
  return isa;
#else
  return Isa::scalar;
#endif
}

namespace {
// -1: follow detection / environment.
std::atomic<int> g_forced{-1};

Isa env_or_detected() {
  static const bool force_scalar = [] {
    const char *v = std::getenv("ICBO_FORCE_SCALAR");
    return v && std::string(v) != "0" && std::string(v) != "";
  }();
  return force_scalar ? Isa::scalar : detected_isa();
}
} // namespace

Isa active_isa() {
  const int f = g_forced.load(std::memory_order_relaxed);
  return f < 0 ? env_or_detected() : static_cast<Isa>(f);
}

void force_isa(Isa isa) {
  if (isa == Isa::avx2 && detected_isa() != Isa::avx2)
    throw PreconditionError("avx2 kernels are not available on this CPU");
  g_forced = static_cast<int>(isa);
}

void reset_isa() { g_forced = -1; }

namespace {
void check_shapes(const PointsSoA &points, std::span<const double> query,
                  std::span<const double> inv_scale, std::span<double> out) {
  if (query.size() != points.d || inv_scale.size() != points.d || out.size() != points.n ||
      points.data.size() != points.n * points.d)
    throw PreconditionError("scaled_sq_distances: shape mismatch");
}
} // namespace

namespace scalar {
void scaled_sq_distances(const PointsSoA &points, std::span<const double> query,
                         std::span<const double> inv_scale, std::span<double> out) {
  check_shapes(points, query, inv_scale, out);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j = 0; j < points.d; ++j) {
    const double q = query[j];
    const double s = inv_scale[j];
    const double *col = points.data.data() + j * points.n;
    for (std::size_t i = 0; i < points.n; ++i) {
      const double z = (col[i] - q) * s;
      out[i] = out[i] + z * z;
    }
  }
}
} // namespace scalar

void scaled_sq_distances(const PointsSoA &points, std::span<const double> query,
                         std::span<const double> inv_scale, std::span<double> out) {
  if (active_isa() == Isa::avx2) {
    check_shapes(points, query, inv_scale, out);
    avx2::scaled_sq_distances(points, query, inv_scale, out);
  } else {
    scalar::scaled_sq_distances(points, query, inv_scale, out);
  }
}

double log_mean_exp_neg_half(std::span<const double> sq) {
  if (sq.empty()) return -std::numeric_limits<double>::infinity();
  const double lo = *std::min_element(sq.begin(), sq.end());
  double acc = 0.0;
  for (double v : sq) acc += std::exp(-0.5 * (v - lo));
  return -0.5 * lo + std::log(acc / static_cast<double>(sq.size()));
}

} // namespace icbo::kernels
