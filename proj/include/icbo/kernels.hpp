#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace icbo::kernels {

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa);

/// Best instruction set supported by the running CPU and compiled in.
Isa detected_isa();
/// What dispatch currently uses. ICBO_FORCE_SCALAR=1 in the environment or
/// force_isa() overrides detection.
Isa active_isa();
void force_isa(Isa isa);
void reset_isa();

/// Points stored dimension-major: coordinate j of point i lives at
/// soa[j * n + i]. Padding-free.
struct PointsSoA {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> data;

  PointsSoA() = default;
  PointsSoA(std::size_t n_points, std::size_t dims) : n(n_points), d(dims), data(n_points * dims) {}
  double &at(std::size_t i, std::size_t j) { return data[j * n + i]; }
  double at(std::size_t i, std::size_t j) const { return data[j * n + i]; }
  std::span<const double> dim(std::size_t j) const { return {data.data() + j * n, n}; }
};

/// out[i] = sum_j ((points[i][j] - query[j]) * inv_scale[j])^2.
///
/// All variants accumulate dimensions in the same order with separate
/// multiply and add, so results are bit-identical across variants.
void scaled_sq_distances(const PointsSoA &points, std::span<const double> query,
                         std::span<const double> inv_scale, std::span<double> out);

/// log(mean_i exp(-0.5 * sq[i])), stable for large sq.
double log_mean_exp_neg_half(std::span<const double> sq);

namespace scalar {
void scaled_sq_distances(const PointsSoA &points, std::span<const double> query,
                         std::span<const double> inv_scale, std::span<double> out);
}

namespace avx2 {
/// Only callable when detected_isa() == Isa::avx2.
void scaled_sq_distances(const PointsSoA &points, std::span<const double> query,
                         std::span<const double> inv_scale, std::span<double> out);
bool compiled();
}

} // namespace icbo::kernels
