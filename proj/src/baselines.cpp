#include "icbo/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <spdlog/spdlog.h>

#include "icbo/errors.hpp"

namespace icbo {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)

Eigen::MatrixXd to_matrix(const std::vector<InternalPoint> &points) {
  const std::size_t n = points.size();
  const std::size_t d = points.front().size();
  Eigen::MatrixXd m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    if (points[i].size() != d) throw PreconditionError("KDE points differ in dimension");
    for (std::size_t j = 0; j < d; ++j) m(i, j) = points[i][j];
  }
  return m;
}

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd &x) {
  const auto n = x.rows();
  if (n < 2) return Eigen::MatrixXd::Zero(x.cols(), x.cols());
  const Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
  return (c.transpose() * c) / static_cast<double>(n - 1);
}

} // namespace

// ---- KDE -----------------------------------------------------------------

KdeModel KdeModel::fit(const std::vector<InternalPoint> &points, KdeKind kind) {
  if (points.empty()) throw PreconditionError("KDE needs at least one point");
  return fit(points, kind, std::vector<double>(points.front().size(), kBandwidthFloor));
}

KdeModel KdeModel::fit(const std::vector<InternalPoint> &points, KdeKind kind,
                       const std::vector<double> &floors) {
  if (points.empty()) throw PreconditionError("KDE needs at least one point");
  if (floors.size() != points.front().size()) throw PreconditionError("KDE floors differ in dimension");
  KdeModel m;
  m.kind_ = kind;
  m.points_ = to_matrix(points);
  m.n_ = points.size();
  m.d_ = points.front().size();
  const auto n = static_cast<double>(m.n_);
  const auto d = static_cast<Eigen::Index>(m.d_);
  const Eigen::MatrixXd cov = sample_covariance(m.points_);

  if (kind == KdeKind::independent) {
    const double factor = std::pow(n, -0.2);
    m.chol_ = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double h = factor * std::sqrt(std::max(cov(j, j), 0.0));
      m.chol_(j, j) = std::max(h, floors[static_cast<std::size_t>(j)]);
    }
  } else {
    const double factor = std::pow(n, -1.0 / (static_cast<double>(d) + 4.0));
    Eigen::MatrixXd h = factor * factor * cov;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double f = floors[static_cast<std::size_t>(j)];
      h(j, j) = std::max(h(j, j), f * f);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    double reg = 1e-6;
    while (llt.info() != Eigen::Success || llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 0.0) {
      if (reg > 1.0) throw FitError("KDE bandwidth matrix stays singular after regularization");
      spdlog::debug("KDE covariance singular; adding {:g} to the diagonal", reg);
      h.diagonal().array() += reg;
      m.regularized_ = true;
      llt.compute(h);
      reg *= 10.0;
    }
    m.chol_ = llt.matrixL();
  }

  // Whitened copies let one distance kernel serve both kinds.
  const Eigen::MatrixXd w =
      m.chol_.triangularView<Eigen::Lower>().solve(m.points_.transpose());  // d x n
  m.whitened_ = kernels::PointsSoA(m.n_, m.d_);
  for (std::size_t j = 0; j < m.d_; ++j)
    for (std::size_t i = 0; i < m.n_; ++i)
      m.whitened_.at(i, j) = w(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
  m.log_norm_ = -0.5 * static_cast<double>(d) * kLog2Pi - m.chol_.diagonal().array().log().sum();
  return m;
}

std::vector<double> KdeModel::bandwidths() const {
  std::vector<double> out(d_);
  for (std::size_t j = 0; j < d_; ++j) out[j] = chol_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
  return out;
}

double KdeModel::log_pdf(std::span<const double> x) const {
  if (x.size() != d_) throw PreconditionError("KDE query has the wrong dimension");
  Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(d_));
  const Eigen::VectorXd w = chol_.triangularView<Eigen::Lower>().solve(xv);
  std::vector<double> sq(n_);
  const std::vector<double> ones(d_, 1.0);
  kernels::scaled_sq_distances(whitened_, std::span<const double>(w.data(), d_), ones, sq);
  return kernels::log_mean_exp_neg_half(sq) + log_norm_;
}

double KdeModel::pdf(std::span<const double> x) const { return std::exp(log_pdf(x)); }

std::vector<double> KdeModel::log_pdf(const std::vector<InternalPoint> &xs) const {
  std::vector<double> out;
  out.reserve(xs.size());
  for (const auto &x : xs) out.push_back(log_pdf(x));
  return out;
}

InternalPoint KdeModel::sample(Rng &rng) const {
  const auto i = static_cast<Eigen::Index>(rng.below(n_));
  Eigen::VectorXd eps(static_cast<Eigen::Index>(d_));
  for (Eigen::Index j = 0; j < eps.size(); ++j) eps(j) = rng.normal();
  const Eigen::VectorXd x =
      points_.row(i).transpose() + chol_.triangularView<Eigen::Lower>() * eps;
  return InternalPoint(x.data(), x.data() + x.size());
}

// ---- TPE -----------------------------------------------------------------

namespace {

double prior_log_pdf(const TpeModels &m, std::span<const double> x) {
  double s = -0.5 * static_cast<double>(x.size()) * kLog2Pi;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double z = (x[j] - m.prior_mean[j]) / m.prior_sd[j];
    s -= 0.5 * z * z + std::log(m.prior_sd[j]);
  }
  return s;
}

// log((n * kde + w * prior) / (n + w))
double mixture_log_pdf(const TpeModels &m, const KdeModel &kde, std::span<const double> x) {
  const double lk = kde.log_pdf(x);
  if (m.prior_weight <= 0.0) return lk;
  const double n = static_cast<double>(kde.n());
  const double a = std::log(n) + lk;
  const double b = std::log(m.prior_weight) + prior_log_pdf(m, x);
  const double hi = std::max(a, b);
  return hi + std::log(std::exp(a - hi) + std::exp(b - hi)) - std::log(n + m.prior_weight);
}

} // namespace

double TpeModels::log_good(std::span<const double> x) const { return mixture_log_pdf(*this, good, x); }

double TpeModels::log_bad(std::span<const double> x) const { return mixture_log_pdf(*this, bad, x); }

InternalPoint TpeModels::sample_good(Rng &rng) const {
  const double n = static_cast<double>(good.n());
  if (prior_weight > 0.0 && rng.uniform() * (n + prior_weight) < prior_weight) {
    InternalPoint x(prior_mean.size());
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = prior_mean[j] + prior_sd[j] * rng.normal();
    return x;
  }
  return good.sample(rng);
}

TpeModels tpe_fit(const Trajectory &traj, double gamma, KdeKind kind, const TpeOptions &opts) {
  if (!(opts.prior_weight >= 0.0)) throw PreconditionError("TPE prior weight must be non-negative");
  if (traj.size() < 4)
    throw InsufficientDataError("TPE needs at least 4 observations, have " +
                                std::to_string(traj.size()));
  const auto labels = label_good_bad(traj, gamma);
  const auto &space = traj.space();
  std::vector<InternalPoint> good, bad, all;
  for (const auto &l : labels) {
    auto x = space.to_internal(l.obs->config);
    all.push_back(x);
    (l.good ? good : bad).push_back(std::move(x));
  }
  if (bad.empty()) bad = all;
  std::vector<double> centre, width;
  for (std::size_t j = 0; j < space.d(); ++j) {
    const double lo = space.dim(j).internal_lower(), hi = space.dim(j).internal_upper();
    centre.push_back(0.5 * (lo + hi));
    width.push_back(hi - lo);
  }
  auto fit = [&](const std::vector<InternalPoint> &pts) {
    if (!opts.adaptive_floor) return KdeModel::fit(pts, kind);
    const double div = std::min(100.0, static_cast<double>(pts.size()) + 1.0);
    std::vector<double> floors;
    for (double w : width) floors.push_back(std::max(w / div, KdeModel::kBandwidthFloor));
    return KdeModel::fit(pts, kind, floors);
  };
  return TpeModels{fit(good), fit(bad), gamma, opts.prior_weight, std::move(centre), std::move(width)};
}

CandidateSet tpe_propose(const TpeModels &models, const SearchSpace &space, std::size_t m,
                         Rng &rng) {
  struct Scored {
    Configuration cfg;
    double score;
  };
  std::vector<Scored> drawn;
  drawn.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    auto x = models.sample_good(rng);
    for (std::size_t j = 0; j < space.d(); ++j)
      x[j] = std::clamp(x[j], space.dim(j).internal_lower(), space.dim(j).internal_upper());
    Configuration cfg = space.from_internal(x);
    const auto xi = space.to_internal(cfg);
    const double s = models.log_good(xi) - models.log_bad(xi);
    drawn.push_back({std::move(cfg), s});
  }
  std::stable_sort(drawn.begin(), drawn.end(),
                   [](const Scored &a, const Scored &b) { return a.score > b.score; });
  CandidateSet out;
  for (auto &s : drawn) {
    out.candidates.push_back(std::move(s.cfg));
    out.scores.push_back(s.score);
  }
  out.attempted = m;
  out.acceptance_rate = m ? 1.0 : 0.0;
  return out;
}

// ---- GP ------------------------------------------------------------------

std::array<double, 5> gp_lengthscale_grid() {
  std::array<double, 5> g{};
  for (int i = 0; i < 5; ++i) g[i] = std::pow(10.0, -1.3 + 0.4 * i);  // 0.05 .. 2
  return g;
}

std::array<double, 5> gp_signal_grid() {
  std::array<double, 5> g{};
  for (int i = 0; i < 5; ++i) g[i] = std::pow(2.0, -2 + i);  // 0.25 .. 4
  return g;
}

std::array<double, 5> gp_noise_grid() {
  std::array<double, 5> g{};
  for (int i = 0; i < 5; ++i) g[i] = std::pow(10.0, -6.0 + 1.25 * i);  // 1e-6 .. 0.1
  return g;
}

namespace {

kernels::PointsSoA to_soa(const std::vector<std::vector<double>> &u) {
  if (u.empty()) throw PreconditionError("GP needs training inputs");
  kernels::PointsSoA soa(u.size(), u.front().size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i].size() != soa.d) throw PreconditionError("GP inputs differ in dimension");
    for (std::size_t j = 0; j < soa.d; ++j) soa.at(i, j) = u[i][j];
  }
  return soa;
}

/// Unit-scale squared distances between all training pairs.
Eigen::MatrixXd pairwise_sq(const kernels::PointsSoA &x) {
  const std::size_t n = x.n;
  Eigen::MatrixXd d2(n, n);
  std::vector<double> q(x.d), row(n);
  const std::vector<double> ones(x.d, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < x.d; ++j) q[j] = x.at(i, j);
    kernels::scaled_sq_distances(x, q, ones, row);
    for (std::size_t k = 0; k < n; ++k) d2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
  }
  return d2;
}

struct Standardized {
  Eigen::VectorXd y;
  double mean = 0.0;
  double scale = 1.0;
};

Standardized standardize(const std::vector<double> &y) {
  Standardized s;
  const auto n = static_cast<double>(y.size());
  s.mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double var = 0.0;
  for (double v : y) var += (v - s.mean) * (v - s.mean);
  var /= n;
  s.scale = var > 0.0 ? std::sqrt(var) : 1.0;
  s.y.resize(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) s.y(static_cast<Eigen::Index>(i)) = (y[i] - s.mean) / s.scale;
  return s;
}

struct Factorized {
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::VectorXd alpha;   // K^-1 (y - beta)
  Eigen::VectorXd k_inv1;  // K^-1 1
  double beta = 0.0;       // GLS constant mean
  double one_k_inv1 = 0.0;
  double lml = -std::numeric_limits<double>::infinity();
  double jitter = 0.0;
  bool ok = false;
};

Factorized factorize(const Eigen::MatrixXd &d2, const Eigen::VectorXd &y, const GpHyper &h) {
  const auto n = d2.rows();
  const double inv2l2 = 0.5 / (h.lengthscale * h.lengthscale);
  Eigen::MatrixXd k = h.signal_var * (-inv2l2 * d2.array()).exp();
  k.diagonal().array() += h.noise_var;
  Factorized f;
  for (double jitter = 0.0; jitter <= 1e-4 * (1 + 1e-9); jitter = jitter == 0.0 ? 1e-8 : jitter * 10.0) {
    Eigen::MatrixXd kj = k;
    if (jitter > 0.0) kj.diagonal().array() += jitter;
    f.llt.compute(kj);
    if (f.llt.info() == Eigen::Success) {
      f.jitter = jitter;
      f.ok = true;
      break;
    }
  }
  if (!f.ok) return f;
  // The constant mean has a flat prior and is integrated out, so the
  // likelihood is the restricted one and its uncertainty reaches predictions.
  f.k_inv1 = f.llt.solve(Eigen::VectorXd::Ones(n));
  f.one_k_inv1 = f.k_inv1.sum();
  f.beta = f.k_inv1.dot(y) / f.one_k_inv1;
  f.alpha = f.llt.solve((y.array() - f.beta).matrix());
  const Eigen::MatrixXd l = f.llt.matrixL();
  f.lml = -0.5 * (y.array() - f.beta).matrix().dot(f.alpha) - l.diagonal().array().log().sum() -
          0.5 * std::log(f.one_k_inv1) -
          0.5 * static_cast<double>(n - 1) * std::log(2.0 * std::numbers::pi);
  return f;
}

} // namespace

GpModel gp_fit_fixed(const std::vector<std::vector<double>> &u, const std::vector<double> &y,
                     const GpHyper &hyper) {
  if (u.size() != y.size()) throw PreconditionError("GP inputs and targets differ in length");
  if (u.size() < 2) throw InsufficientDataError("GP needs at least 2 observations");
  GpModel m;
  m.x_ = to_soa(u);
  const auto s = standardize(y);
  auto f = factorize(pairwise_sq(m.x_), s.y, hyper);
  if (!f.ok) throw FitError("GP kernel matrix not positive definite even with 1e-4 jitter");
  if (f.jitter > 0.0) spdlog::debug("GP Cholesky needed jitter {:g}", f.jitter);
  m.hyper_ = hyper;
  m.llt_ = std::move(f.llt);
  m.alpha_ = std::move(f.alpha);
  m.k_inv1_ = std::move(f.k_inv1);
  m.beta_ = f.beta;
  m.one_k_inv1_ = f.one_k_inv1;
  m.y_mean_ = s.mean;
  m.y_scale_ = s.scale;
  m.lml_ = f.lml;
  m.jitter_ = f.jitter;
  return m;
}

GpModel gp_fit_unit(const std::vector<std::vector<double>> &u, const std::vector<double> &y) {
  if (u.size() != y.size()) throw PreconditionError("GP inputs and targets differ in length");
  if (u.size() < 2) throw InsufficientDataError("GP needs at least 2 observations");
  const auto d2 = pairwise_sq(to_soa(u));
  const auto s = standardize(y);
  GpHyper best;
  double best_lml = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (double l : gp_lengthscale_grid())
    for (double sf : gp_signal_grid())
      for (double sn : gp_noise_grid()) {
        const GpHyper h{l, sf, sn};
        const auto f = factorize(d2, s.y, h);
        if (f.ok && f.lml > best_lml) {
          best_lml = f.lml;
          best = h;
          any = true;
        }
      }
  if (!any) throw FitError("no grid point gave a positive definite GP kernel");
  return gp_fit_fixed(u, y, best);
}

GpModel gp_fit(const Trajectory &traj) {
  if (traj.size() < 2) throw InsufficientDataError("GP needs at least 2 observations");
  std::vector<std::vector<double>> u;
  std::vector<double> y;
  for (const auto &o : traj.observations()) {
    u.push_back(traj.space().to_unit(o.config));
    y.push_back(o.score);
  }
  return gp_fit_unit(u, y);
}

SurrogatePrediction GpModel::predict_unit(std::span<const double> u, bool with_noise) const {
  if (u.size() != x_.d) throw PreconditionError("GP query has the wrong dimension");
  std::vector<double> sq(x_.n);
  const std::vector<double> inv(x_.d, 1.0 / hyper_.lengthscale);
  kernels::scaled_sq_distances(x_, u, inv, sq);
  Eigen::VectorXd ks(static_cast<Eigen::Index>(x_.n));
  for (std::size_t i = 0; i < x_.n; ++i)
    ks(static_cast<Eigen::Index>(i)) = hyper_.signal_var * std::exp(-0.5 * sq[i]);
  const double mean = beta_ + ks.dot(alpha_);
  const Eigen::VectorXd v = llt_.matrixL().solve(ks);
  const double r = 1.0 - ks.dot(k_inv1_);
  double var = hyper_.signal_var - v.squaredNorm() + r * r / one_k_inv1_;
  if (with_noise) var += hyper_.noise_var;
  var = std::max(var, 0.0);
  SurrogatePrediction p;
  p.mean = y_mean_ + y_scale_ * mean;
  p.std = y_scale_ * std::sqrt(var);
  return p;
}

SurrogatePrediction gp_predict(const GpModel &model, const SearchSpace &space,
                               const Configuration &cfg) {
  return model.predict_unit(space.to_unit(cfg));
}

CandidateSet random_candidates(const SearchSpace &space, std::size_t m, Rng &rng) {
  CandidateSet out;
  std::vector<double> u(space.d());
  for (std::size_t k = 0; k < m; ++k) {
    for (auto &v : u) v = rng.uniform();
    out.candidates.push_back(space.from_unit(u));
  }
  out.attempted = m;
  out.acceptance_rate = m ? 1.0 : 0.0;
  return out;
}

} // namespace icbo
