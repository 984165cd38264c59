#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "icbo/candidates.hpp"
#include "icbo/kernels.hpp"
#include "icbo/rng.hpp"
#include "icbo/trajectory.hpp"

namespace icbo {

enum class KdeKind { independent, multivariate };

/// Gaussian KDE over internal-space points.
///
/// The independent kind uses a per-dimension Scott bandwidth n^(-1/5) * sd,
/// floored at kBandwidthFloor. The multivariate kind uses the bandwidth
/// matrix n^(-1/(d+4)) * chol(cov), with the same floor on its diagonal
/// and 1e-6 diagonal regularization when the covariance is singular.
class KdeModel {
public:
  static constexpr double kBandwidthFloor = 1e-3;

  static KdeModel fit(const std::vector<InternalPoint> &points, KdeKind kind);
  /// As above with per-dimension lower bounds on the bandwidth instead of
  /// the constant floor.
  static KdeModel fit(const std::vector<InternalPoint> &points, KdeKind kind,
                      const std::vector<double> &floors);

  KdeKind kind() const noexcept { return kind_; }
  std::size_t n() const noexcept { return n_; }
  std::size_t d() const noexcept { return d_; }
  /// Lower-triangular factor B with kernel covariance B * B^T.
  const Eigen::MatrixXd &bandwidth() const noexcept { return chol_; }
  /// Per-dimension bandwidths (the diagonal of B for the independent kind).
  std::vector<double> bandwidths() const;
  bool regularized() const noexcept { return regularized_; }

  double log_pdf(std::span<const double> x) const;
  double pdf(std::span<const double> x) const;
  /// Batched log density; one entry per query.
  std::vector<double> log_pdf(const std::vector<InternalPoint> &xs) const;

  InternalPoint sample(Rng &rng) const;

private:
  KdeKind kind_ = KdeKind::independent;
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  Eigen::MatrixXd chol_;       // d x d, lower triangular
  Eigen::MatrixXd points_;     // n x d, raw internal coordinates
  kernels::PointsSoA whitened_;  // chol^-1 * point, dimension-major
  double log_norm_ = 0.0;      // -0.5 d log(2 pi) - log det(chol)
  bool regularized_ = false;
};

struct TpeModels {
  KdeModel good;  // l: good split
  KdeModel bad;   // g: bad split
  double gamma = 0.25;
  /// Weight, in units of one kernel, of a broad Gaussian prior component
  /// mixed into both densities. Zero leaves the plain KDEs.
  double prior_weight = 0.0;
  std::vector<double> prior_mean;  // internal-space box centre
  std::vector<double> prior_sd;    // internal-space box widths

  double log_good(std::span<const double> x) const;
  double log_bad(std::span<const double> x) const;
  /// Draws from the good mixture.
  InternalPoint sample_good(Rng &rng) const;
};

struct TpeOptions {
  /// See TpeModels::prior_weight.
  double prior_weight = 0.0;
  /// Floor each split's bandwidths at width / min(100, n_split + 1) of the
  /// box instead of the constant KDE floor.
  bool adaptive_floor = false;
};

/// Splits with label_good_bad(gamma) and fits one KDE per split. Needs
/// n >= 4; throws InsufficientDataError otherwise so callers can fall back
/// to random search. When ties put every point in the good split, the bad
/// density is fit on all points. The default options give the plain
/// Scott-bandwidth KDEs.
TpeModels tpe_fit(const Trajectory &traj, double gamma, KdeKind kind, const TpeOptions &opts = {});

/// Draws m samples from the good density, clamps and rounds them into the
/// space, and scores each by log(l/g) under the fitted mixtures. Returned
/// best score first.
CandidateSet tpe_propose(const TpeModels &models, const SearchSpace &space, std::size_t m,
                         Rng &rng);

struct GpHyper {
  double lengthscale = 0.3;
  double signal_var = 1.0;
  double noise_var = 1e-6;
};

/// The fixed 5x5x5 log grid searched by gp_fit.
std::array<double, 5> gp_lengthscale_grid();
std::array<double, 5> gp_signal_grid();
std::array<double, 5> gp_noise_grid();

/// Isotropic RBF GP on unit-cube-scaled internal coordinates with
/// standardized targets and a constant mean under a flat prior. The mean is
/// integrated out: the likelihood is the restricted one and predictive
/// variances include the mean's uncertainty.
class GpModel {
public:
  const GpHyper &hyper() const noexcept { return hyper_; }
  double log_marginal_likelihood() const noexcept { return lml_; }
  double jitter() const noexcept { return jitter_; }
  std::size_t n() const noexcept { return static_cast<std::size_t>(x_.n); }

  /// Predictive mean and latent std in score units; `with_noise` adds the
  /// noise variance.
  SurrogatePrediction predict_unit(std::span<const double> u, bool with_noise = false) const;

private:
  friend GpModel gp_fit_fixed(const std::vector<std::vector<double>> &, const std::vector<double> &,
                              const GpHyper &);

  GpHyper hyper_;
  kernels::PointsSoA x_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
  Eigen::VectorXd k_inv1_;
  double beta_ = 0.0;
  double one_k_inv1_ = 1.0;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  double lml_ = 0.0;
  double jitter_ = 0.0;
};

/// Fit with given hyperparameters on unit-cube inputs `u` and raw targets.
/// Jitter escalates 1e-8 .. 1e-4 on Cholesky failure, then FitError.
GpModel gp_fit_fixed(const std::vector<std::vector<double>> &u, const std::vector<double> &y,
                     const GpHyper &hyper);
/// Grid search maximizing the log marginal likelihood.
GpModel gp_fit_unit(const std::vector<std::vector<double>> &u, const std::vector<double> &y);
/// n >= 2. Inputs scaled from internal space to the unit cube.
GpModel gp_fit(const Trajectory &traj);
SurrogatePrediction gp_predict(const GpModel &model, const SearchSpace &space,
                               const Configuration &cfg);

/// `m` uniform random configurations, ordered as drawn.
CandidateSet random_candidates(const SearchSpace &space, std::size_t m, Rng &rng);

} // namespace icbo
