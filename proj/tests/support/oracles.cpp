#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace oracle {
namespace {

double tanh_sinh_panel(const std::function<double(double)>& f, double a, double b, double tol) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  constexpr double kHalfPi = std::numbers::pi / 2.0;

  // Level-0 sum with step h, then halve h and add only the new odd nodes.
  auto node_sum = [&](double h, bool odd_only) {
    double sum = 0.0;
    if (!odd_only) sum += kHalfPi * f(mid);  // t = 0: weight pi/2, node at mid
    for (int j = 1;; ++j) {
      if (odd_only && j % 2 == 0) continue;
      const double t = j * h;
      const double u = kHalfPi * std::sinh(t);
      const double cu = std::cosh(u);
      const double w = kHalfPi * std::cosh(t) / (cu * cu);
      const double delta = (b - a) / (1.0 + std::exp(2.0 * u));  // distance to nearest endpoint
      if (delta <= 0.0 || w < 1e-300 || t > 6.5) break;
      sum += w * (f(a + delta) + f(b - delta));
    }
    return sum;
  };

  double h = 1.0;
  double sum = node_sum(h, false);
  double estimate = half * h * sum;
  for (int level = 0; level < 12; ++level) {
    h *= 0.5;
    sum += node_sum(h, true);
    const double next = half * h * sum;
    if (std::fabs(next - estimate) <= tol * std::max(1.0, std::fabs(next))) return next;
    estimate = next;
  }
  return estimate;
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double tol, int panels) {
  double total = 0.0;
  const double width = (b - a) / panels;
  for (int i = 0; i < panels; ++i) {
    const double lo = a + i * width;
    const double hi = i + 1 == panels ? b : lo + width;
    total += tanh_sinh_panel(f, lo, hi, tol);
  }
  return total;
}

double gamma_pdf(double x, double k, double theta) {
  if (x <= 0.0) return k == 1.0 && x == 0.0 ? 1.0 / theta : (k < 1.0 && x == 0.0 ? INFINITY : 0.0);
  return std::exp((k - 1.0) * std::log(x) - x / theta - std::lgamma(k) - k * std::log(theta));
}

long double lower_regularized_gamma(long double a, long double x) {
  if (x <= 0.0L) return 0.0L;
  long double term = 1.0L / a;
  long double sum = term;
  for (int n = 1; n < 100000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (term < sum * 1e-21L) break;
  }
  return std::exp(a * std::log(x) - x - std::lgamma(a)) * sum;
}

long double euler_gamma() {
  constexpr int n = 100000;
  long double h = 0.0L;
  for (int i = n; i >= 1; --i) h += 1.0L / i;
  const long double nn = n;
  return h - std::log(nn) - 1.0L / (2.0L * nn) + 1.0L / (12.0L * nn * nn) -
         1.0L / (120.0L * nn * nn * nn * nn);
}

long double digamma_series(long double x) {
  constexpr int n = 200000;
  long double sum = 0.0L;
  for (int i = n - 1; i >= 0; --i) sum += 1.0L / (i + 1) - 1.0L / (i + x);
  // Remainder sum_{i>=N} (1/(i+1) - 1/(i+x)) by the midpoint rule.
  const long double nn = n;
  const long double tail = std::log((nn + x - 0.5L) / (nn + 0.5L));
  static const long double gamma = euler_gamma();
  return -gamma + sum + tail;
}

double uniform01(std::mt19937_64& gen) {
  // (0, 1): shift by half an ulp so zero is impossible.
  return (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53;
}

GammaSampler::GammaSampler(double shape, double scale, std::uint64_t seed)
    : shape_(shape), scale_(scale), gen_(seed) {}

double GammaSampler::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform01(gen_);
  const double u2 = uniform01(gen_);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(phi);
  has_spare_ = true;
  return r * std::cos(phi);
}

double GammaSampler::standard(double k) {
  if (k < 1.0) return standard(k + 1.0) * std::pow(uniform01(gen_), 1.0 / k);
  const double d = k - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double z;
    double v;
    do {
      z = normal();
      v = 1.0 + c * z;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01(gen_);
    if (u < 1.0 - 0.0331 * z * z * z * z) return d * v;
    if (std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double GammaSampler::operator()() { return scale_ * standard(shape_); }

std::vector<double> GammaSampler::draw(std::size_t n) {
  std::vector<double> out(n);
  for (auto& x : out) x = (*this)();
  return out;
}

}  // namespace oracle
