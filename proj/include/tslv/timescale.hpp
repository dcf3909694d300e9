#pragma once

#include <functional>

#include "tslv/errors.hpp"

namespace tslv {

// The two time scales supported everywhere: the real line, and the uniform
// lattice {k*step : k integer} (anchored at 0). On the reals the forward jump
// sigma(t) = t and the graininess mu(t) = 0; on a lattice sigma(t) = t + step
// and mu(t) = step.
enum class TimeScaleKind { Reals, Lattice };

struct TimeScaleSpec {
  TimeScaleKind kind = TimeScaleKind::Reals;
  double step = 0.0;  // lattice spacing; 0 on the reals

  static TimeScaleSpec reals() { return {TimeScaleKind::Reals, 0.0}; }
  static TimeScaleSpec lattice(double step);

  // sup of the graininess: 0 on the reals, step on a lattice.
  double graininess_sup() const noexcept {
    return kind == TimeScaleKind::Lattice ? step : 0.0;
  }
  bool is_lattice() const noexcept { return kind == TimeScaleKind::Lattice; }

  // Membership check for lattice points; tolerance 1e-9 * step. Always true
  // on the reals.
  bool contains(double t) const noexcept;
  // Nearest lattice index / exact membership helper used by the integrators.
  long long index_of(double t) const;  // throws DomainError if not on lattice
};

using ScalarFn = std::function<double(double)>;

double graininess(const TimeScaleSpec& ts, double t);
double sigma(const TimeScaleSpec& ts, double t);

// Cylinder transform xi_h(z): z itself when h = 0, log(1 + h z)/h otherwise.
// Throws DomainError when 1 + h z <= 0.
double cylinder(double h, double z);

// Time-scale circle operations at graininess mu.
inline double oplus(double p, double q, double mu) { return p + q + mu * p * q; }
double ominus(double p, double mu);                  // -p / (1 + mu p)
double ominus(double p, double q, double mu);        // (p - q) / (1 + mu q)

// 1 + mu(t) p(t) > 0 for sampled t in [a, b]. On a lattice every grid point
// of [a, b] is checked; on the reals `samples` uniform points (positive
// regressivity there just means p is finite). samples must be >= 1.
bool is_positively_regressive(const TimeScaleSpec& ts, const ScalarFn& p,
                              double a, double b, long samples = 1024);

// Delta integral of f over [s, t). Lattice: the exact left-endpoint sum with
// spacing `step` (s and t must be lattice-aligned). Reals: composite Simpson
// quadrature with `panels` panels (2*panels+1 evaluations); panels <= 0
// selects the default max(100, ceil(10*(t-s))). Reversed endpoints negate:
// delta_integral(ts, f, t, s) = -delta_integral(ts, f, s, t).
double delta_integral(const TimeScaleSpec& ts, const ScalarFn& f, double s,
                      double t, long panels = 0);

// Generalized exponential e_p(t, s). Lattice: exact product of the factors
// (1 + step * p(tau)) over grid points tau in [s, t), re-accumulated in log
// space (sign tracked separately) only if the running product leaves
// [1e-280, 1e280]; a vanishing factor raises DomainError naming the grid
// point. Reals: exp(integral of p from s to t). Either order of s, t is
// accepted (e_p(t, s) = 1 / e_p(s, t)).
double exp_fn(const TimeScaleSpec& ts, const ScalarFn& p, double t, double s,
              long panels = 0);

}  // namespace tslv
