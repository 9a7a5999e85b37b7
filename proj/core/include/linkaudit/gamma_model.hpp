#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace linkaudit {

struct HomepageProfile;

// Gamma distribution with shape k and scale theta, plus the diagnostics of
// the fit that produced it.
struct GammaModel {
  double shape = 1.0;
  double scale = 1.0;
  std::size_t n = 0;
  double log_likelihood = 0.0;
  double ks_statistic = 0.0;

  // Method-of-moments estimate, kept as a diagnostic next to the MLE.
  double mom_shape = 0.0;
  double mom_scale = 0.0;
  std::size_t newton_iterations = 0;

  // Samples below this floor were discarded before fitting (0 = none).
  double truncation_floor = 0.0;
  double alpha_default = 0.001;
  std::string series = "external";

  double mean() const { return shape * scale; }
  double variance() const { return shape * scale * scale; }
};

// Density x^(k-1) e^(-x/theta) / (Gamma(k) theta^k). Throws DomainError for
// x < 0, k <= 0 or theta <= 0.
double gamma_pdf(double x, double k, double theta);

// P(X <= x), the regularized lower incomplete gamma P(k, x/theta).
double gamma_cdf(double x, double k, double theta);

// P(X > x), computed directly so the upper tail keeps its relative accuracy.
double gamma_sf(double x, double k, double theta);

// Inverse of gamma_cdf for p in [0, 1).
double gamma_quantile(double p, double k, double theta);

// Regularized incomplete gamma functions P(a, x) and Q(a, x).
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

double digamma(double x);
double trigamma(double x);

// Maximum-likelihood fit. The shape solves ln k - digamma(k) = ln(mean) -
// mean(ln x) by bracketed Newton iteration started from the method-of-moments
// value; scale = mean / shape.
// Throws TooFewSamples (n < 2), NonPositiveSample, DegenerateSample.
GammaModel fit_gamma(std::span<const double> samples);

double log_likelihood(std::span<const double> samples, double k, double theta);

// Sup-norm distance between the empirical CDF of `samples` and the model CDF.
double ks_statistic(std::span<const double> samples, const GammaModel& model);

enum class TailSide { LowTail, HighTail };

std::string_view to_string(TailSide side);

struct TailProbability {
  double probability = 1.0;
  TailSide side = TailSide::HighTail;
};

// min(P(X <= x), P(X >= x)) and the side achieving it.
TailProbability tail_probability(double x, const GammaModel& model);

enum class ProfileSeries { External, Total };

std::string_view to_string(ProfileSeries series);
std::optional<ProfileSeries> profile_series_from_string(std::string_view text);

struct AnomalyVerdict {
  std::string domain;
  std::int64_t observed = 0;
  double tail_prob = 1.0;
  TailSide side = TailSide::HighTail;
  bool flagged = false;
};

// One verdict per profile, sorted ascending by tail probability (ties by
// domain). flagged <=> tail_prob < alpha.
std::vector<AnomalyVerdict> detect_anomalies(std::span<const HomepageProfile> profiles, const GammaModel& model,
                                             double alpha, ProfileSeries series = ProfileSeries::External);

// Fitting input for a profile series: zero counts dropped, then anything
// below `truncate_below` dropped.
std::vector<double> fit_samples(std::span<const HomepageProfile> profiles, ProfileSeries series,
                                double truncate_below = 0.0);

std::string model_to_json(const GammaModel& model);
GammaModel model_from_json(std::string_view text);

}  // namespace linkaudit
