#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bellsim/angle.hpp"
#include "bellsim/coincidence.hpp"

namespace bellsim {

/// Averaged probabilities entering the Clauser-Horne inequality.
struct ChInputs {
  Measured p12_ab;
  Measured p12_ab_prime;
  Measured p12_a_prime_b;
  Measured p12_a_prime_b_prime;
  Measured p1_a_prime;
  Measured p2_b;
};

struct ChVerdict {
  double s_value = 0.0;
  double uncertainty = 0.0;
  bool violated = false;            // s_value > 1
  double sigma_above_bound = 0.0;   // (s_value - 1) / uncertainty, 0 when uncertainty is 0
};

/// Local theories obey S <= 1.
inline constexpr double kChBound = 1.0;

/// S = [p12(a,b) - p12(a,b') + p12(a',b) + p12(a',b')] / [p1(a') + p2(b)]
/// with first-order propagation for uncorrelated inputs.
/// Probabilities must lie in [-0.05, 1.05] (small negatives may survive
/// background subtraction) and uncertainties must be >= 0, else DomainError;
/// a non-positive denominator raises DomainError too.
ChVerdict ch_statistic(const ChInputs& inputs);

/// cos^2(theta_cd - theta_ab): the normalized joint probability when both
/// preparation axes are offset by theta_ab (theta_cd >= theta_ab).
double p12_ideal(Angle theta_cd, Angle theta_ab);

/// Ideal S(theta) = [3 cos^2 theta - cos^2 3theta] / [cos^2 2theta + cos^2 theta]
/// for p12 = cos^2 theta, p1(a') = cos^2 2theta, p2(b) = cos^2 theta.
double s_of_theta_ideal(Angle theta);

/// Measured quantities for the equal-spacing geometry at one theta.
struct SMeasurement {
  Measured p12_theta;
  Measured p12_3theta;
  Measured p1_2theta;
  Measured p2_theta;
};

/// Builds ChInputs from the four settings of ch_settings(theta): p12(a,b),
/// p12(a',b) and p12(a',b') all sit at relative angle theta, p12(a,b') at
/// 3 theta.
ChInputs ch_inputs(const SMeasurement& m);

/// S(theta) from measured probabilities (uncorrelated propagation).
ChVerdict s_of_theta_measured(const SMeasurement& m);

/// Independent rate measurements behind one S(theta): background corrected
/// coincidence rates at theta, 3 theta and the aligned reference, D1 singles
/// with analyzer c at 2 theta and aligned, D2 singles with analyzer d at
/// theta and aligned.
struct ChRates {
  Measured coinc_theta;
  Measured coinc_3theta;
  Measured coinc_zero;
  Measured d1_2theta;
  Measured d1_zero;
  Measured d2_theta;
  Measured d2_zero;
};

enum class Propagation {
  /// Normalize each probability separately, then treat the four as
  /// independent.
  uncorrelated,
  /// Propagate from the seven independent rates so that the shared
  /// references enter once.
  correlated,
};

ChVerdict s_from_rates(const ChRates& rates, Propagation propagation = Propagation::uncorrelated);

/// Intervals of (0, 60] degrees on which s_of_theta_ideal exceeds 1, found
/// by scanning with `step` degrees and bisecting each sign change.
std::vector<std::pair<double, double>> ideal_violation_intervals(double step = 0.01);

/// CSV header and row: theta_deg,S,sigma,violated
std::string verdict_csv_header();
std::string verdict_csv_row(double theta_deg, const ChVerdict& v);

/// Multi-line human readable summary.
std::string verdict_report(double theta_deg, const ChVerdict& v);

}  // namespace bellsim
