#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "cmvspec/torus.hpp"

namespace cmvspec {

struct CoveragePoint {
  double theta = 0.0;
  bool covered = false;
  double best_dist = 0.0;  // chordal distance to the best admissible eigenvalue
  RealVec phase;           // phase that realised best_dist
};

struct CoveredArc {
  double from = 0.0, to = 0.0;  // grid angles, from <= to (to may exceed 2 pi when wrapping)
  long points = 0;
};

struct CoverageReport {
  long N = 0;
  double tol = 0.0;
  bool full_circle = false;
  std::vector<CoveragePoint> points;
  std::vector<CoveredArc> arcs;  // maximal covered runs
  std::vector<CoveredArc> gaps;  // maximal uncovered runs
};

struct CoverageOptions {
  long phase_samples = 4;
  cplx beta = 1.0, eta = 1.0;
  std::uint64_t seed = 1;
  int workers = 1;
  int refine = 0;  // grid points per run given a Newton refinement when uncovered; 0 disables
};

// Grid of M angles on [theta1, theta2] (endpoint excluded when the arc is the
// whole circle). A point is covered when some phase puts an eigenvalue of
// E_[-N, N] within tol of z whose eigenvector has its two outermost entries on
// each side below sqrt(tol).
CoverageReport interval_coverage_scan(const SamplingFunction& f, std::span<const double> w, double theta1,
                                      double theta2, long M, long N, double tol, const CoverageOptions& opt = {});

void write_coverage_csv(std::ostream& os, const CoverageReport& r, int dim);

}  // namespace cmvspec
