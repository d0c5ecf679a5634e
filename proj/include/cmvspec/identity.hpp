#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cmvspec/torus.hpp"

namespace cmvspec {

struct IdentityCase {
  std::string suite;  // unitarity, factorization, relation, green, poisson
  long index = 0;
  long n = 0;         // window length
  long first = 0;     // first site (its parity matters for poisson)
  double residual = 0.0;
};

struct IdentitySuiteOptions {
  long cases = 50;
  std::uint64_t seed = 1;
  int workers = 1;
  cplx beta = 1.0, eta = 1.0;
  long max_unitary_n = 200;
  long max_relation_n = 20;
  long max_green_n = 80;
  long max_poisson_n = 60;
};

struct IdentitySuiteReport {
  std::vector<IdentityCase> cases;
  double max_residual(const std::string& suite) const;
};

// Random corpora per identity. Unitarity and factorization use random
// coefficients in |alpha| <= 0.95; the other suites sample f at random phases.
IdentitySuiteReport run_identity_suite(const SamplingFunction& f, std::span<const double> w,
                                       const IdentitySuiteOptions& opt = {});

}  // namespace cmvspec
