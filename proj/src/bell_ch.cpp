#include "bellsim/bell_ch.hpp"

#include <cmath>

#include <fmt/format.h>

#include "bellsim/errors.hpp"

namespace bellsim {
namespace {

void check_probability(const Measured& m, const char* name) {
  if (!(m.value >= -0.05 && m.value <= 1.05)) {
    throw DomainError(fmt::format("{} = {} outside [-0.05, 1.05]", name, m.value));
  }
  if (!(m.sigma >= 0.0)) {
    throw DomainError(fmt::format("{} has negative uncertainty", name));
  }
}

ChVerdict verdict(double s, double sigma) {
  ChVerdict v;
  v.s_value = s;
  v.uncertainty = sigma;
  v.violated = s - kChBound > 0.0;
  v.sigma_above_bound = sigma > 0.0 ? (s - kChBound) / sigma : 0.0;
  return v;
}

double sq(double x) { return x * x; }

}  // namespace

ChVerdict ch_statistic(const ChInputs& in) {
  check_probability(in.p12_ab, "p12(a,b)");
  check_probability(in.p12_ab_prime, "p12(a,b')");
  check_probability(in.p12_a_prime_b, "p12(a',b)");
  check_probability(in.p12_a_prime_b_prime, "p12(a',b')");
  check_probability(in.p1_a_prime, "p1(a')");
  check_probability(in.p2_b, "p2(b)");

  const double num =
      in.p12_ab.value - in.p12_ab_prime.value + in.p12_a_prime_b.value + in.p12_a_prime_b_prime.value;
  const double den = in.p1_a_prime.value + in.p2_b.value;
  if (!(den > 0.0)) {
    throw DomainError("CH denominator p1(a') + p2(b) must be positive");
  }
  const double s = num / den;
  const double var_num = sq(in.p12_ab.sigma) + sq(in.p12_ab_prime.sigma) + sq(in.p12_a_prime_b.sigma) +
                         sq(in.p12_a_prime_b_prime.sigma);
  const double var_den = sq(in.p1_a_prime.sigma) + sq(in.p2_b.sigma);
  return verdict(s, std::sqrt(var_num / sq(den) + sq(s) * var_den / sq(den)));
}

double p12_ideal(Angle theta_cd, Angle theta_ab) {
  return cos_squared(Angle::from_degrees(theta_cd.deg() - theta_ab.deg()));
}

double s_of_theta_ideal(Angle theta) {
  const double t = theta.deg();
  const double c1 = cos_squared(theta);
  const double c2 = cos_squared(Angle::from_degrees(2.0 * t));
  const double c3 = cos_squared(Angle::from_degrees(3.0 * t));
  return (3.0 * c1 - c3) / (c2 + c1);
}

ChInputs ch_inputs(const SMeasurement& m) {
  return ChInputs{
      .p12_ab = m.p12_theta,
      .p12_ab_prime = m.p12_3theta,
      .p12_a_prime_b = m.p12_theta,
      .p12_a_prime_b_prime = m.p12_theta,
      .p1_a_prime = m.p1_2theta,
      .p2_b = m.p2_theta,
  };
}

ChVerdict s_of_theta_measured(const SMeasurement& m) {
  const ChVerdict by_settings = ch_statistic(ch_inputs(m));
  // The three theta entries are one measurement, so its error enters as 3 sigma.
  const double den = m.p1_2theta.value + m.p2_theta.value;
  const double var_num = 9.0 * sq(m.p12_theta.sigma) + sq(m.p12_3theta.sigma);
  const double var_den = sq(m.p1_2theta.sigma) + sq(m.p2_theta.sigma);
  const double s = by_settings.s_value;
  return verdict(s, std::sqrt(var_num / sq(den) + sq(s) * var_den / sq(den)));
}

ChVerdict s_from_rates(const ChRates& r, Propagation propagation) {
  if (propagation == Propagation::uncorrelated) {
    return s_of_theta_measured(SMeasurement{
        .p12_theta = ratio(r.coinc_theta, r.coinc_zero),
        .p12_3theta = ratio(r.coinc_3theta, r.coinc_zero),
        .p1_2theta = ratio(r.d1_2theta, r.d1_zero),
        .p2_theta = ratio(r.d2_theta, r.d2_zero),
    });
  }

  if (!(r.coinc_zero.value > 0.0) || !(r.d1_zero.value > 0.0) || !(r.d2_zero.value > 0.0)) {
    throw PreconditionError("reference rates must be positive");
  }
  const double c0 = r.coinc_zero.value;
  const double n = (3.0 * r.coinc_theta.value - r.coinc_3theta.value) / c0;
  const double d = r.d1_2theta.value / r.d1_zero.value + r.d2_theta.value / r.d2_zero.value;
  if (!(d > 0.0)) {
    throw DomainError("CH denominator p1(a') + p2(b) must be positive");
  }
  const double s = n / d;
  // Gradient of S with respect to each independent rate.
  const double g_theta = 3.0 / (c0 * d);
  const double g_3theta = -1.0 / (c0 * d);
  const double g_zero = -n / (c0 * d);
  const double g_d1 = -s / (d * r.d1_zero.value);
  const double g_d1_ref = s * r.d1_2theta.value / (d * sq(r.d1_zero.value));
  const double g_d2 = -s / (d * r.d2_zero.value);
  const double g_d2_ref = s * r.d2_theta.value / (d * sq(r.d2_zero.value));
  const double var = sq(g_theta * r.coinc_theta.sigma) + sq(g_3theta * r.coinc_3theta.sigma) +
                     sq(g_zero * r.coinc_zero.sigma) + sq(g_d1 * r.d1_2theta.sigma) +
                     sq(g_d1_ref * r.d1_zero.sigma) + sq(g_d2 * r.d2_theta.sigma) +
                     sq(g_d2_ref * r.d2_zero.sigma);
  return verdict(s, std::sqrt(var));
}

std::vector<std::pair<double, double>> ideal_violation_intervals(double step) {
  if (!(step > 0.0)) {
    throw DomainError("scan step must be positive");
  }
  auto excess = [](double t) { return s_of_theta_ideal(Angle::from_degrees(t)) - kChBound; };
  auto refine = [&](double lo, double hi) {
    // excess(lo) and excess(hi) have opposite signs
    const bool lo_positive = excess(lo) > 0.0;
    for (int i = 0; i < 80; ++i) {
      const double mid = 0.5 * (lo + hi);
      ((excess(mid) > 0.0) == lo_positive ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };

  std::vector<std::pair<double, double>> out;
  double prev_t = step;
  bool inside = excess(prev_t) > 0.0;
  double start = 0.0;  // S -> 1 as theta -> 0
  for (double t = 2.0 * step; t <= 60.0 + 1e-12; t += step) {
    const double tt = std::min(t, 60.0);
    const bool now = excess(tt) > 0.0;
    if (now != inside) {
      const double edge = refine(prev_t, tt);
      if (now) {
        start = edge;
      } else {
        out.emplace_back(start, edge);
      }
      inside = now;
    }
    prev_t = tt;
  }
  if (inside) out.emplace_back(start, 60.0);
  return out;
}

std::string verdict_csv_header() { return "theta_deg,S,sigma,violated\n"; }

std::string verdict_csv_row(double theta_deg, const ChVerdict& v) {
  return fmt::format("{},{},{},{}\n", theta_deg, v.s_value, v.uncertainty, v.violated ? "true" : "false");
}

std::string verdict_report(double theta_deg, const ChVerdict& v) {
  return fmt::format(
      "theta              {} deg\n"
      "S(theta)           {:.4f} +/- {:.4f}\n"
      "ideal S(theta)     {:.4f}\n"
      "CH bound           {}\n"
      "violated           {}\n"
      "sigma above bound  {:.2f}\n",
      theta_deg, v.s_value, v.uncertainty, s_of_theta_ideal(Angle::from_degrees(theta_deg)), kChBound,
      v.violated ? "yes" : "no", v.sigma_above_bound);
}

}  // namespace bellsim
