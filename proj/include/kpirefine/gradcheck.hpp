#pragma once

#include <cstdint>

namespace kpirefine {

struct GradcheckOptions {
  std::uint32_t trials = 100;
  std::uint32_t max_nodes = 31;
  double tolerance = 1e-5;
  double step = 1e-6;  // central difference half-width
  std::uint64_t seed = 0;

  void validate() const;
};

struct GradcheckReport {
  std::uint32_t trials = 0;
  std::uint32_t failed_trials = 0;
  std::uint64_t coordinates = 0;
  double worst_relative_error = 0.0;

  bool passed() const noexcept { return failed_trials == 0; }
};

// Relative error |a - b| / max(|a|, |b|, 1e-3 * max(1, |f|)) where f is the
// objective value. Round-off in a difference quotient grows with |f|, so
// below the floor the comparison becomes absolute.
double gradient_relative_error(double analytic, double numeric, double objective_value);

// Compares the analytic gradient with central differences on random DAGs
// with random key / missing sets, scores, latent points and hyperparameters.
GradcheckReport run_gradcheck(const GradcheckOptions& options);

}  // namespace kpirefine
