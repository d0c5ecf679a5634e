#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cmvspec/cmv.hpp"

namespace cmvspec {

struct EigenPair {
  int index = 0;
  cplx z = 1.0;  // projected to the unit circle
  Eigen::VectorXcd u;
  double residual = 0.0;         // ||E u - z u||
  double modulus_defect = 0.0;   // ||z_raw| - 1|
  double theta() const;          // in [0, 2 pi)
};

struct EigenDecomposition {
  long a = 0;  // absolute site of u(0)
  std::vector<EigenPair> pairs;  // ordered by phase
  std::uint64_t matrix_hash = 0;
  double max_residual = 0.0;
  double max_modulus_defect = 0.0;
};

struct EigenOptions {
  bool vectors = true;
  int max_size = 4096;
};

std::uint64_t matrix_hash(const Eigen::MatrixXcd& a);

// Schur-based decomposition of a unitary matrix; eigenvectors are the Schur
// vectors, gauge fixed so the first largest entry is real positive.
EigenDecomposition eigensolve_unitary(const Eigen::MatrixXcd& a, const EigenOptions& opt = {});
EigenDecomposition eigensolve(const FiniteCMV& m, const EigenOptions& opt = {});
std::vector<cplx> eigenvalues(const FiniteCMV& m);

void fix_gauge(Eigen::VectorXcd& u);

// Chordal distance; ties go to the lower index.
std::pair<int, double> nearest_eigen(const std::vector<EigenPair>& pairs, cplx z);
std::pair<int, double> nearest_value(const std::vector<cplx>& zs, cplx z);

double separation_gap(const std::vector<EigenPair>& pairs, int k);
double separation_gap(const std::vector<cplx>& zs, int k);

struct LocalizationProfile {
  long center = 0;          // site of max |u|
  std::vector<long> sites;
  std::vector<double> log_abs_u;
  double fitted_rate = 0.0; // -slope of log|u| against |s - origin| on the fit sites
  long fit_from = 0;        // fit uses |s - origin| >= fit_from
  bool pass = false;        // |u(s)| < exp(-gamma |s - origin| / 20) on the fit sites
  long worst_site = 0;
  double worst_margin = 0.0;  // max of log|u(s)| + gamma |s - origin| / 20
};

LocalizationProfile localization_profile(const Eigen::VectorXcd& u, long first_site, int n0, double gamma,
                                         long origin = 0);

struct PerturbReport {
  double residual = 0.0;  // ||(A - z) phi||
  bool hypothesis_ok = false;
  // first part
  bool part_a_ok = false;
  int a_index = -1;
  cplx z0 = 0.0;
  double a_distance = 0.0;
  double a_overlap = 0.0;
  double a_overlap_floor = 0.0;  // (2N)^{-1/2}
  // second part
  int eigen_in_disk = 0;
  bool part_b_applicable = false;
  bool part_b_ok = false;
  double b_distance = 0.0;  // ||phi - psi|| after phase alignment
  double b_bound = 0.0;     // sqrt2 eps_tilde / eps_hat
  std::string note;
};

PerturbReport perturb_eigen_check(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& phi, cplx z, double eps_tilde,
                                  double eps_hat);

// Zero-extends u (living on [u_first, u_first + size)) to [first, last].
Eigen::VectorXcd pad_vector(const Eigen::VectorXcd& u, long u_first, long first, long last);

// ||u - c v|| minimized over unimodular c, after padding both to a common window.
double aligned_distance(const Eigen::VectorXcd& u, long u_first, const Eigen::VectorXcd& v, long v_first);

// Phase-order pairing between two spectra of equal size: best cyclic shift,
// ties broken by eigenvector overlap when vectors are present.
std::vector<std::pair<int, int>> pair_by_phase(const std::vector<EigenPair>& a, const std::vector<EigenPair>& b);

}  // namespace cmvspec
