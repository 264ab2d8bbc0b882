#include "etp/ad/special.hpp"

#include <cmath>
#include <string>

#include "etp/ad/tape.hpp"

namespace etp::ad {
namespace {

// B_{2k} for k = 1..7.
constexpr double kBernoulli[] = {1.0 / 6.0,   -1.0 / 30.0, 1.0 / 42.0,    -1.0 / 30.0,
                                 5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0};

constexpr double kHalfLog2Pi = 0.91893853320467274178;

void require_positive(double x, const char* fn) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError(std::string(fn) + " requires a positive finite argument, got " +
                      std::to_string(x));
  }
}

}  // namespace

double log_gamma(double x) {
  require_positive(x, "lgamma");
  // log of the product x (x+1) ... (x+n-1), accumulated as a product and
  // flushed to a log sum before it can overflow.
  double shift_log = 0.0;
  double product = 1.0;
  while (x < kSpecialRecurrenceCutoff) {
    product *= x;
    x += 1.0;
    if (product > 1e250 || product < 1e-250) {
      shift_log += std::log(product);
      product = 1.0;
    }
  }
  shift_log += std::log(product);

  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 0.0;
  double power = inv;
  for (int k = 1; k <= 7; ++k) {
    series += kBernoulli[k - 1] / (2.0 * k * (2.0 * k - 1.0)) * power;
    power *= inv2;
  }
  return (x - 0.5) * std::log(x) - x + kHalfLog2Pi + series - shift_log;
}

double digamma(double x) {
  require_positive(x, "digamma");
  double shift = 0.0;
  while (x < kSpecialRecurrenceCutoff) {
    shift += 1.0 / x;
    x += 1.0;
  }
  const double inv2 = 1.0 / (x * x);
  double series = 0.0;
  double power = inv2;
  for (int k = 1; k <= 7; ++k) {
    series += kBernoulli[k - 1] / (2.0 * k) * power;
    power *= inv2;
  }
  return std::log(x) - 0.5 / x - series - shift;
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  double shift = 0.0;
  while (x < kSpecialRecurrenceCutoff) {
    shift += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 0.0;
  double power = inv2 * inv;
  for (int k = 1; k <= 7; ++k) {
    series += kBernoulli[k - 1] * power;
    power *= inv2;
  }
  return inv + 0.5 * inv2 + series + shift;
}

}  // namespace etp::ad
