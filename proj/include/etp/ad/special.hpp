#pragma once

namespace etp::ad {

// Log-gamma and its first two derivatives for positive arguments.
//
// All three shift the argument upward with the recurrence
// Gamma(x + 1) = x Gamma(x) until x >= kSpecialRecurrenceCutoff and then
// evaluate the asymptotic (Stirling / de Moivre) series. With the cutoff at
// 10 and seven Bernoulli terms the truncation error is below 1e-16, so the
// remaining error is rounding in the recurrence sum.
//
// Arguments must be strictly positive and finite; anything else throws
// DomainError.

inline constexpr double kSpecialRecurrenceCutoff = 10.0;

double log_gamma(double x);
double digamma(double x);
double trigamma(double x);

}  // namespace etp::ad
