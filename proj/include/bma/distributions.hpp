#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/random/binomial_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include "bma/errors.hpp"
#include "bma/rng.hpp"

namespace bma {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Below this overdispersion the negative binomial is evaluated as Poisson.
inline constexpr double kPoissonSwitch = 1e-8;

/// Rejection-sampler iteration cap for truncated normals.
inline constexpr std::int64_t kTruncNormalMaxTries = 1'000'000;

namespace detail {

inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double normal_log_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

inline double standard_normal(RngStream& rng) {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Priors

struct NormalPrior {
  double mean;
  double sd;
};
struct TruncNormalPrior {
  double lo;
  double hi;
  double mean;  // of the parent (untruncated) normal
  double sd;
};
struct UniformPrior {
  double lo;
  double hi;
};
struct UniformDiscretePrior {
  std::vector<double> values;
};
struct FixedPrior {
  double value;
};

/// Declarative prior for one named parameter or initial state. Construct
/// through the factories, which validate the parameters.
class PriorSpec {
 public:
  using Kind = std::variant<NormalPrior, TruncNormalPrior, UniformPrior,
                            UniformDiscretePrior, FixedPrior>;

  static PriorSpec normal(double mean, double sd) {
    if (!(sd > 0.0) || !std::isfinite(mean) || !std::isfinite(sd))
      throw ConfigError("normal prior requires finite mean and sd > 0");
    return PriorSpec(NormalPrior{mean, sd});
  }

  static PriorSpec trunc_normal(double lo, double hi, double mean, double sd) {
    if (!(lo < hi)) throw ConfigError("truncated normal prior requires lo < hi");
    if (!(sd > 0.0) || !std::isfinite(mean))
      throw ConfigError("truncated normal prior requires finite mean and sd > 0");
    PriorSpec spec(TruncNormalPrior{lo, hi, mean, sd});
    spec.log_trunc_mass_ = std::log(detail::std_normal_cdf((hi - mean) / sd) -
                                    detail::std_normal_cdf((lo - mean) / sd));
    if (!std::isfinite(spec.log_trunc_mass_))
      throw ConfigError("truncated normal prior window holds no probability mass");
    return spec;
  }

  static PriorSpec uniform(double lo, double hi) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
      throw ConfigError("uniform prior requires finite lo < hi");
    return PriorSpec(UniformPrior{lo, hi});
  }

  static PriorSpec uniform_discrete(std::vector<double> values) {
    if (values.empty()) throw ConfigError("discrete uniform prior requires a non-empty value set");
    for (double v : values)
      if (!std::isfinite(v)) throw ConfigError("discrete uniform prior values must be finite");
    return PriorSpec(UniformDiscretePrior{std::move(values)});
  }

  /// Integers lo, lo+1, ..., hi.
  static PriorSpec uniform_integers(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw ConfigError("discrete uniform range requires lo <= hi");
    std::vector<double> values;
    for (std::int64_t v = lo; v <= hi; ++v) values.push_back(static_cast<double>(v));
    return uniform_discrete(std::move(values));
  }

  static PriorSpec fixed(double value) {
    if (!std::isfinite(value)) throw ConfigError("fixed value must be finite");
    return PriorSpec(FixedPrior{value});
  }

  [[nodiscard]] const Kind& kind() const noexcept { return kind_; }
  [[nodiscard]] bool is_fixed() const noexcept { return std::holds_alternative<FixedPrior>(kind_); }

  [[nodiscard]] double sample(RngStream& rng) const {
    return std::visit([&](const auto& k) { return draw(k, rng); }, kind_);
  }

  [[nodiscard]] double log_density(double x) const {
    if (std::isnan(x)) return kNegInf;
    return std::visit([&](const auto& k) { return density(k, x); }, kind_);
  }

 private:
  explicit PriorSpec(Kind kind) : kind_(std::move(kind)) {}

  static double draw(const NormalPrior& p, RngStream& rng) {
    return p.mean + p.sd * detail::standard_normal(rng);
  }
  static double draw(const TruncNormalPrior& p, RngStream& rng) {
    for (std::int64_t i = 0; i < kTruncNormalMaxTries; ++i) {
      const double x = p.mean + p.sd * detail::standard_normal(rng);
      if (x >= p.lo && x <= p.hi) return x;
    }
    throw NumericError("truncated normal rejection sampler exceeded its iteration cap");
  }
  static double draw(const UniformPrior& p, RngStream& rng) {
    return p.lo + (p.hi - p.lo) * rng.uniform01();
  }
  static double draw(const UniformDiscretePrior& p, RngStream& rng) {
    const auto n = static_cast<std::uint64_t>(p.values.size());
    return p.values[static_cast<std::size_t>(rng() % n)];
  }
  static double draw(const FixedPrior& p, RngStream&) { return p.value; }

  double density(const NormalPrior& p, double x) const {
    return detail::normal_log_pdf(x, p.mean, p.sd);
  }
  double density(const TruncNormalPrior& p, double x) const {
    if (x < p.lo || x > p.hi) return kNegInf;
    return detail::normal_log_pdf(x, p.mean, p.sd) - log_trunc_mass_;
  }
  double density(const UniformPrior& p, double x) const {
    if (x < p.lo || x > p.hi) return kNegInf;
    return -std::log(p.hi - p.lo);
  }
  double density(const UniformDiscretePrior& p, double x) const {
    const auto hits = std::count(p.values.begin(), p.values.end(), x);
    if (hits == 0) return kNegInf;
    return std::log(static_cast<double>(hits) / static_cast<double>(p.values.size()));
  }
  double density(const FixedPrior& p, double x) const { return x == p.value ? 0.0 : kNegInf; }

  Kind kind_;
  double log_trunc_mass_ = 0.0;
};

inline double sample_prior(const PriorSpec& spec, RngStream& rng) { return spec.sample(rng); }

inline double prior_log_density(const PriorSpec& spec, double x) { return spec.log_density(x); }

// ---------------------------------------------------------------------------
// Discrete samplers

/// Binomial(n, p). Degenerate cases return without consuming randomness.
inline std::int64_t sample_binomial(std::int64_t n, double p, RngStream& rng) {
  if (n < 0) throw NumericError("binomial trial count must be non-negative");
  if (!(p >= 0.0 && p <= 1.0)) throw NumericError("binomial probability outside [0, 1]");
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  boost::random::binomial_distribution<std::int64_t, double> dist(n, p);
  return dist(rng);
}

inline std::int64_t sample_poisson(double mean, RngStream& rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw NumericError("poisson mean must be finite and >= 0");
  if (mean == 0.0) return 0;
  boost::random::poisson_distribution<std::int64_t, double> dist(mean);
  return dist(rng);
}

/// Draw from NegBin with mean lambda and variance lambda + phi * lambda^2,
/// as a gamma-Poisson mixture.
inline std::int64_t sample_negbin(double lambda, double phi, RngStream& rng) {
  if (!(lambda >= 0.0) || !(phi >= 0.0)) throw NumericError("negative binomial needs lambda, phi >= 0");
  if (lambda == 0.0) return 0;
  if (phi < kPoissonSwitch) return sample_poisson(lambda, rng);
  const double shape = 1.0 / phi;
  boost::random::gamma_distribution<double> gamma(shape, phi * lambda);
  return sample_poisson(gamma(rng), rng);
}

// ---------------------------------------------------------------------------
// Negative binomial observation density

/// log g(y | lambda, phi) for a fixed count y and overdispersion phi.
///
/// The lambda-free terms are computed once, so evaluating many particles that
/// share (y, phi) costs two logs each.
class NegBinLogPmf {
 public:
  NegBinLogPmf(std::int64_t y, double phi) : y_(static_cast<double>(y)), phi_(phi) {
    if (y < 0) throw NumericError("negative binomial count must be non-negative");
    if (!(phi >= 0.0)) throw NumericError("negative binomial overdispersion must be >= 0");
    log_y_factorial_ = boost::math::lgamma(y_ + 1.0);
    poisson_ = phi_ < kPoissonSwitch;
    if (!poisson_) {
      size_ = 1.0 / phi_;
      constant_ = boost::math::lgamma(y_ + size_) - boost::math::lgamma(size_) - log_y_factorial_;
    }
  }

  [[nodiscard]] double operator()(double lambda) const {
    if (!(lambda >= 0.0)) throw NumericError("negative binomial mean must be >= 0");
    if (lambda == 0.0) return y_ == 0.0 ? 0.0 : kNegInf;
    if (!std::isfinite(lambda)) return kNegInf;
    if (poisson_) return y_ * std::log(lambda) - lambda - log_y_factorial_;
    const double log1p_term = std::log1p(phi_ * lambda);
    double out = constant_ - size_ * log1p_term;
    if (y_ > 0.0) out += y_ * (std::log(phi_ * lambda) - log1p_term);
    return out;
  }

 private:
  double y_;
  double phi_;
  double size_ = 0.0;
  double constant_ = 0.0;
  double log_y_factorial_ = 0.0;
  bool poisson_ = false;
};

inline double negbin_log_pmf(std::int64_t y, double lambda, double phi) {
  return NegBinLogPmf(y, phi)(lambda);
}

// ---------------------------------------------------------------------------
// Multivariate normal

/// Relative diagonal jitter applied before factorising a sampling covariance.
inline constexpr double kCovarianceJitter = 1e-10;

/// Cholesky factor of a covariance, optionally with the trace-relative
/// jitter added to the diagonal. A zero matrix is kept as a point mass.
class MvnFactor {
 public:
  MvnFactor(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, bool jitter)
      : mean_(mean) {
    const auto dim = mean.size();
    if (cov.rows() != dim || cov.cols() != dim) throw NumericError("covariance shape does not match mean");
    if (!cov.allFinite() || !mean.allFinite()) throw NumericError("non-finite mean or covariance");
    Eigen::MatrixXd c = 0.5 * (cov + cov.transpose());
    const double trace = c.trace();
    if (dim == 0 || trace == 0.0) {
      point_mass_ = true;
      return;
    }
    if (jitter) c.diagonal().array() += kCovarianceJitter * trace / static_cast<double>(dim);
    llt_.compute(c);
    if (llt_.info() != Eigen::Success) throw NumericError("covariance is not positive definite");
    const Eigen::VectorXd diag = llt_.matrixL().toDenseMatrix().diagonal();
    if ((diag.array() <= 0.0).any()) throw NumericError("covariance is singular");
    log_det_ = 2.0 * diag.array().log().sum();
  }

  [[nodiscard]] bool point_mass() const noexcept { return point_mass_; }
  [[nodiscard]] const Eigen::VectorXd& mean() const noexcept { return mean_; }

  [[nodiscard]] Eigen::VectorXd sample(RngStream& rng) const {
    if (point_mass_) return mean_;
    Eigen::VectorXd z(mean_.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = detail::standard_normal(rng);
    return mean_ + llt_.matrixL() * z;
  }

  [[nodiscard]] double log_density(const Eigen::VectorXd& x) const {
    if (point_mass_) throw NumericError("log-density of a singular (zero) covariance");
    const Eigen::VectorXd diff = x - mean_;
    const Eigen::VectorXd solved = llt_.matrixL().solve(diff);
    const double k = static_cast<double>(mean_.size());
    return -0.5 * (k * std::log(2.0 * std::numbers::pi) + log_det_ + solved.squaredNorm());
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_det_ = 0.0;
  bool point_mass_ = false;
};

inline Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, RngStream& rng) {
  return MvnFactor(mean, cov, /*jitter=*/true).sample(rng);
}

/// Exact Gaussian log-density (no jitter); singular covariances are an error.
inline double mvn_log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                              const Eigen::MatrixXd& cov) {
  if (x.size() != mean.size()) throw NumericError("point and mean dimensions differ");
  return MvnFactor(mean, cov, /*jitter=*/false).log_density(x);
}

}  // namespace bma
