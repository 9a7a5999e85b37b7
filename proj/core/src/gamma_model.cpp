#include "linkaudit/gamma_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "linkaudit/corpus_store.hpp"
#include "linkaudit/errors.hpp"

namespace linkaudit {
namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxTerms = 100000;

void check_params(double k, double theta, const char* fn) {
  if (!(k > 0.0) || !std::isfinite(k)) throw DomainError(std::string(fn) + ": shape must be positive");
  if (!(theta > 0.0) || !std::isfinite(theta)) throw DomainError(std::string(fn) + ": scale must be positive");
}

void check_x(double x, const char* fn) {
  if (!(x >= 0.0)) throw DomainError(std::string(fn) + ": x must be non-negative");
}

// exp(-x + a ln x - lgamma(a)), the common prefactor of P and Q.
double prefactor(double a, double x) { return std::exp(-x + a * std::log(x) - std::lgamma(a)); }

double lower_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int n = 0; n < kMaxTerms; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kEps) break;
  }
  return sum * prefactor(a, x);
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
double upper_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxTerms; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h * prefactor(a, x);
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw DomainError("regularized_gamma_p: a must be positive");
  check_x(x, "regularized_gamma_p");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return std::clamp(lower_series(a, x), 0.0, 1.0);
  return std::clamp(1.0 - upper_fraction(a, x), 0.0, 1.0);
}

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0)) throw DomainError("regularized_gamma_q: a must be positive");
  check_x(x, "regularized_gamma_q");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return std::clamp(1.0 - lower_series(a, x), 0.0, 1.0);
  return std::clamp(upper_fraction(a, x), 0.0, 1.0);
}

double gamma_pdf(double x, double k, double theta) {
  check_params(k, theta, "gamma_pdf");
  check_x(x, "gamma_pdf");
  if (x == 0.0) {
    if (k > 1.0) return 0.0;
    if (k == 1.0) return 1.0 / theta;
    return std::numeric_limits<double>::infinity();
  }
  return std::exp((k - 1.0) * std::log(x) - x / theta - std::lgamma(k) - k * std::log(theta));
}

double gamma_cdf(double x, double k, double theta) {
  check_params(k, theta, "gamma_cdf");
  check_x(x, "gamma_cdf");
  return regularized_gamma_p(k, x / theta);
}

double gamma_sf(double x, double k, double theta) {
  check_params(k, theta, "gamma_sf");
  check_x(x, "gamma_sf");
  return regularized_gamma_q(k, x / theta);
}

double gamma_quantile(double p, double k, double theta) {
  check_params(k, theta, "gamma_quantile");
  if (!(p >= 0.0) || !(p < 1.0)) throw DomainError("gamma_quantile: p must be in [0, 1)");
  if (p == 0.0) return 0.0;

  double lo = 0.0;
  double hi = std::max(1.0, k) * theta;
  while (gamma_cdf(hi, k, theta) < p) {
    lo = hi;
    hi *= 2.0;
  }
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 200; ++i) {
    const double f = gamma_cdf(x, k, theta) - p;
    if (f == 0.0) return x;
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    const double density = gamma_pdf(x, k, theta);
    double next = density > 0.0 ? x - f / density : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - x) <= 1e-15 * std::max(1.0, x)) return next;
    x = next;
  }
  return x;
}

double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("digamma: x must be positive");
  double shift = 0.0;
  while (x < 10.0) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Asymptotic series, Bernoulli coefficients B_2n / 2n.
  const double series =
      inv2 * (1.0 / 12 -
              inv2 * (1.0 / 120 -
                      inv2 * (1.0 / 252 -
                              inv2 * (1.0 / 240 - inv2 * (1.0 / 132 - inv2 * (691.0 / 32760 - inv2 / 12.0))))));
  return shift + std::log(x) - 0.5 * inv - series;
}

double trigamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("trigamma: x must be positive");
  double shift = 0.0;
  while (x < 10.0) {
    shift += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      inv * inv2 *
      (1.0 / 6 -
       inv2 * (1.0 / 30 - inv2 * (1.0 / 42 - inv2 * (1.0 / 30 - inv2 * (5.0 / 66 - inv2 * (691.0 / 2730 -
                                                                                           inv2 * 7.0 / 6))))));
  return shift + inv + 0.5 * inv2 + series;
}

double log_likelihood(std::span<const double> samples, double k, double theta) {
  check_params(k, theta, "log_likelihood");
  const double norm = std::lgamma(k) + k * std::log(theta);
  double ll = 0.0;
  for (double x : samples) ll += (k - 1.0) * std::log(x) - x / theta - norm;
  return ll;
}

double ks_statistic(std::span<const double> samples, const GammaModel& model) {
  if (samples.empty()) throw TooFewSamples("ks_statistic needs at least one sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = gamma_cdf(std::max(0.0, sorted[i]), model.shape, model.scale);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return std::clamp(d, 0.0, 1.0);
}

GammaModel fit_gamma(std::span<const double> samples) {
  if (samples.size() < 2) throw TooFewSamples("fit_gamma needs at least two samples");
  std::vector<double> xs(samples.begin(), samples.end());
  for (double x : xs) {
    if (!(x > 0.0) || !std::isfinite(x)) throw NonPositiveSample("fit_gamma: samples must be positive and finite");
  }
  // Sorting makes every reduction below independent of input order.
  std::sort(xs.begin(), xs.end());
  if (xs.front() == xs.back()) throw DegenerateSample("fit_gamma: all samples are equal");

  const double n = static_cast<double>(xs.size());
  double sum = 0.0;
  double sum_log = 0.0;
  for (double x : xs) {
    sum += x;
    sum_log += std::log(x);
  }
  const double mean = sum / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double variance = ss / n;
  const double s = std::log(mean) - sum_log / n;
  if (!(variance > 0.0) || !(s > 0.0)) throw DegenerateSample("fit_gamma: zero sample variance");

  GammaModel model;
  model.n = xs.size();
  model.mom_shape = mean * mean / variance;
  model.mom_scale = variance / mean;

  // g(k) = ln k - digamma(k) - s is strictly decreasing from +inf to 0, so
  // the root is unique; [lo, hi] always brackets it.
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  double k = model.mom_shape;
  std::size_t iterations = 0;
  for (; iterations < 100; ++iterations) {
    const double g = std::log(k) - digamma(k) - s;
    if (g > 0.0) {
      lo = k;
    } else {
      hi = k;
    }
    const double slope = 1.0 / k - trigamma(k);
    double next = k - g / slope;
    if (!(next > lo && next < hi) || !std::isfinite(next)) {
      next = std::isinf(hi) ? 2.0 * k : 0.5 * (lo + hi);
    }
    const double step = std::fabs(next - k);
    k = next;
    if (step < 1e-10) {
      ++iterations;
      break;
    }
  }

  model.shape = k;
  model.scale = mean / k;
  model.newton_iterations = iterations;
  model.log_likelihood = log_likelihood(xs, model.shape, model.scale);
  model.ks_statistic = ks_statistic(xs, model);
  return model;
}

std::string_view to_string(TailSide side) { return side == TailSide::LowTail ? "LowTail" : "HighTail"; }

TailProbability tail_probability(double x, const GammaModel& model) {
  check_x(x, "tail_probability");
  const double lower = gamma_cdf(x, model.shape, model.scale);
  const double upper = gamma_sf(x, model.shape, model.scale);
  if (lower <= upper) return {lower, TailSide::LowTail};
  return {upper, TailSide::HighTail};
}

std::string_view to_string(ProfileSeries series) {
  return series == ProfileSeries::External ? "external" : "total";
}

std::optional<ProfileSeries> profile_series_from_string(std::string_view text) {
  if (text == "external") return ProfileSeries::External;
  if (text == "total") return ProfileSeries::Total;
  return std::nullopt;
}

namespace {

std::int64_t series_value(const HomepageProfile& p, ProfileSeries series) {
  return series == ProfileSeries::External ? p.external_count : p.total_refs;
}

}  // namespace

std::vector<AnomalyVerdict> detect_anomalies(std::span<const HomepageProfile> profiles, const GammaModel& model,
                                             double alpha, ProfileSeries series) {
  std::vector<AnomalyVerdict> verdicts;
  verdicts.reserve(profiles.size());
  for (const auto& p : profiles) {
    AnomalyVerdict v;
    v.domain = p.domain;
    v.observed = series_value(p, series);
    const auto tail = tail_probability(static_cast<double>(v.observed), model);
    v.tail_prob = tail.probability;
    v.side = tail.side;
    v.flagged = v.tail_prob < alpha;
    verdicts.push_back(std::move(v));
  }
  std::sort(verdicts.begin(), verdicts.end(), [](const AnomalyVerdict& a, const AnomalyVerdict& b) {
    if (a.tail_prob != b.tail_prob) return a.tail_prob < b.tail_prob;
    return a.domain < b.domain;
  });
  return verdicts;
}

std::vector<double> fit_samples(std::span<const HomepageProfile> profiles, ProfileSeries series,
                                double truncate_below) {
  std::vector<double> out;
  out.reserve(profiles.size());
  for (const auto& p : profiles) {
    const auto v = static_cast<double>(series_value(p, series));
    if (v > 0.0 && v >= truncate_below) out.push_back(v);
  }
  return out;
}

std::string model_to_json(const GammaModel& model) {
  nlohmann::ordered_json j;
  j["shape"] = model.shape;
  j["scale"] = model.scale;
  j["n"] = model.n;
  j["log_likelihood"] = model.log_likelihood;
  j["ks_statistic"] = model.ks_statistic;
  j["alpha_default"] = model.alpha_default;
  j["truncation_floor"] = model.truncation_floor;
  j["series"] = model.series;
  j["mom_shape"] = model.mom_shape;
  j["mom_scale"] = model.mom_scale;
  j["newton_iterations"] = model.newton_iterations;
  return j.dump(2) + "\n";
}

GammaModel model_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    GammaModel m;
    m.shape = j.at("shape").get<double>();
    m.scale = j.at("scale").get<double>();
    m.n = j.value("n", std::size_t{0});
    m.log_likelihood = j.value("log_likelihood", 0.0);
    m.ks_statistic = j.value("ks_statistic", 0.0);
    m.alpha_default = j.value("alpha_default", 0.001);
    m.truncation_floor = j.value("truncation_floor", 0.0);
    m.series = j.value("series", std::string("external"));
    m.mom_shape = j.value("mom_shape", 0.0);
    m.mom_scale = j.value("mom_scale", 0.0);
    m.newton_iterations = j.value("newton_iterations", std::size_t{0});
    check_params(m.shape, m.scale, "model_from_json");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedRecord(std::string("model file: ") + e.what());
  }
}

}  // namespace linkaudit
