#include "cmvspec/multiscale.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cmvspec/errors.hpp"
#include "cmvspec/parallel.hpp"
#include "cmvspec/rng.hpp"
#include "cmvspec/spectral.hpp"

namespace cmvspec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

Check make_check(std::string id, std::string inequality, double lhs, double rhs, bool ok, std::string detail = {}) {
  Check c;
  c.id = std::move(id);
  c.inequality = std::move(inequality);
  c.lhs = lhs;
  c.rhs = rhs;
  c.ok = ok;
  c.detail = std::move(detail);
  return c;
}

RealVec make_x(const RealVec& phi, double t) {
  RealVec x(phi);
  x.push_back(t);
  return reduce_phase(x).x;
}

RealVec split_phi(const RealVec& x) { return RealVec(x.begin(), x.end() - 1); }

FiniteCMV window_matrix(const MultiscaleProblem& P, const RealVec& x, long a, long b) {
  auto seq = VerblunskySequence::sample(P.f, P.w, x, a - 1, b);
  return build_finite_cmv(seq, a, b, P.beta, P.eta);
}

std::vector<cplx> window_values(const MultiscaleProblem& P, const RealVec& x, long a, long b) {
  return eigenvalues(window_matrix(P, x, a, b));
}

cplx tracked(const std::vector<cplx>& vals, cplx ref) { return vals[nearest_value(vals, ref).first]; }

double mass_near_origin(const Eigen::VectorXcd& u, long first, long radius) {
  double m = 0.0;
  for (int i = 0; i < u.size(); ++i)
    if (std::labs(first + i) < radius) m += std::norm(u(i));
  return m;
}

long floor_sqrt_strict(long n) {
  // largest integer q with q < sqrt(n)
  long q = static_cast<long>(std::ceil(std::sqrt(static_cast<double>(n)))) - 1;
  while ((q + 1) * (q + 1) < n) ++q;
  while (q > 0 && q * q >= n) --q;
  return q;
}

void check_problem(const MultiscaleProblem& P) {
  if (P.f.dim() < 2) throw ConfigError("multiscale: the phase map needs d >= 2");
  if (static_cast<int>(P.w.size()) != P.f.dim()) throw ConfigError("multiscale: frequency dimension mismatch");
}

std::vector<double> axis_offsets(int g) {
  if (g < 1 || g % 2 == 0) throw ConfigError("multiscale: grid_per_axis must be odd and positive");
  std::vector<double> o;
  for (int j = 0; j < g; ++j) o.push_back(g == 1 ? 0.0 : 0.5 * (2.0 * j / (g - 1) - 1.0));
  return o;
}

double arc_halfwidth(double r) { return 2.0 * std::asin(std::min(1.0, r / 2.0)); }

GridNode solve_node(const MultiscaleProblem& P, long a, long b, const RealVec& phi, cplx z, double t0, cplx ref) {
  GridNode node;
  node.phi = phi;
  node.z = z;
  PhaseSolve ps = solve_phase(P, a, b, phi, z, t0, ref);
  node.x = ps.x;
  node.converged = ps.converged;
  EigenDecomposition d = eigensolve(window_matrix(P, ps.x, a, b));
  auto [k, dist] = nearest_eigen(d.pairs, ps.zk);
  node.k = k;
  node.zk = d.pairs[k].z;
  node.residual = ps.converged ? std::abs(node.zk - z) : kInf;
  node.separation = kInf;
  for (const auto& p : d.pairs)
    if (p.index != k) node.separation = std::min(node.separation, std::abs(p.z - z));
  node.u = d.pairs[k].u;
  return node;
}

std::vector<GridNode> build_grid(const MultiscaleProblem& P, long a, long b, const RealVec& phi_c, cplx z_c, double r,
                                 int grid_per_axis, double t0, cplx ref) {
  const auto off = axis_offsets(grid_per_axis);
  const std::size_t dphi = phi_c.size();
  const double psi = arc_halfwidth(r);
  std::vector<GridNode> out;
  out.push_back(solve_node(P, a, b, phi_c, z_c, t0, ref));
  const double tc = out.front().x.back();
  const cplx zc = out.front().zk;
  std::size_t total = 1;
  for (std::size_t i = 0; i <= dphi; ++i) total *= off.size();
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    RealVec phi(phi_c);
    bool centre = true;
    for (std::size_t i = 0; i < dphi; ++i) {
      double o = off[rem % off.size()];
      rem /= off.size();
      phi[i] += o * r;
      centre = centre && o == 0.0;
    }
    double oz = off[rem % off.size()];
    centre = centre && oz == 0.0;
    if (centre) continue;
    cplx z = z_c * std::polar(1.0, oz * psi);
    out.push_back(solve_node(P, a, b, phi, z, tc, zc));
  }
  return out;
}

struct ProbeDraw {
  RealVec phi;
  cplx z;
};

ProbeDraw draw_probe(const InductiveState& s, std::uint64_t seed, std::uint64_t i) {
  Stream st(seed, i);
  ProbeDraw d;
  d.phi = s.phi_center;
  for (auto& v : d.phi) v += st.uniform(-s.r, s.r);
  d.z = s.z_center * std::polar(1.0, st.uniform(-1.0, 1.0) * arc_halfwidth(s.r));
  return d;
}

void finish_condition(ConditionReport& c) {
  c.evaluated = true;
  c.ok = std::all_of(c.checks.begin(), c.checks.end(), [](const Check& k) { return k.ok; });
}

}  // namespace

// ---------------------------------------------------------------- schedule

double ScaleSchedule::delta_hat() const { return std::pow(nu_prime, C0); }
double ScaleSchedule::beta_hat() const { return std::pow(nu_prime, C1); }
double ScaleSchedule::mu_hat() const { return std::pow(nu_prime, C2); }
double ScaleSchedule::A_hat() const { return 1.0 / beta_hat(); }

std::vector<ScaleSchedule::Link> ScaleSchedule::ordering_chain() const {
  const double b = beta_hat();
  std::vector<std::pair<std::string, double>> c = {
      {"beta^2", b * b}, {"delta", delta_hat()}, {"mu", mu_hat()}, {"beta*nu", b * nu}, {"beta", b}, {"nu", nu}};
  std::vector<Link> out;
  for (std::size_t i = 0; i + 1 < c.size(); ++i) {
    Link l;
    l.smaller = c[i].first;
    l.larger = c[i + 1].first;
    l.a = c[i].second;
    l.b = c[i + 1].second;
    l.ok = l.b > l.a && l.b / l.a >= factor;
    out.push_back(l);
  }
  return out;
}

long ScaleSchedule::scale(int s) const {
  if (s < 0) throw ConfigError("scale: negative depth");
  long n = N0;
  for (int i = 0; i < s; ++i) {
    double lg = A_hat() * std::log(static_cast<double>(n));
    n = lg >= std::log(static_cast<double>(max_scale)) ? max_scale
                                                       : static_cast<long>(std::floor(std::exp(lg) * (1 + 1e-14)));
  }
  return n;
}

bool ScaleSchedule::clamped(int s) const {
  long n = N0;
  for (int i = 0; i < s; ++i) {
    double lg = A_hat() * std::log(static_cast<double>(n));
    if (lg > std::log(static_cast<double>(max_scale))) return true;
    n = static_cast<long>(std::floor(std::exp(lg) * (1 + 1e-14)));
  }
  return false;
}

double ScaleSchedule::radius(int s) const { return std::exp(-std::pow(static_cast<double>(scale(s)), delta_hat())); }

void ScaleSchedule::validate() const {
  if (!(nu_prime > 0.0 && nu_prime <= 1.0)) throw ConfigError("schedule: nu' must lie in (0, 1]");
  if (!(nu > 0.0 && nu < 1.0)) throw ConfigError("schedule: nu must lie in (0, 1)");
  if (!(nu_prime <= nu)) throw ConfigError("schedule: nu' must not exceed nu");
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("schedule: tau must lie in (0, 1)");
  if (!(C0 > 1.0 && C1 > 1.0 && C2 > 1.0)) throw ConfigError("schedule: C0, C1, C2 must exceed 1");
  if (!(C1 + 1.0 < C2 && C2 < C0 && C0 < 2.0 * C1))
    throw ConfigError("schedule: constants violate C1 + 1 < C2 < C0 < 2 C1 (C0=" + num(C0) + ", C1=" + num(C1) +
                      ", C2=" + num(C2) + ")");
  if (!(factor >= 1.0)) throw ConfigError("schedule: ordering factor must be >= 1");
  for (const auto& l : ordering_chain())
    if (!l.ok)
      throw ConfigError("schedule: ordering " + l.smaller + " << " + l.larger + " fails (" + num(l.a) + " vs " +
                        num(l.b) + ", factor " + num(factor) + ")");
  if (N0 < 2) throw ConfigError("schedule: N0 must be >= 2");
  if (s_max < 0) throw ConfigError("schedule: s_max must be >= 0");
  if (max_scale < N0) throw ConfigError("schedule: max_scale below N0");
  for (int s = 1; s <= s_max; ++s)
    if (!(scale(s) > scale(s - 1)))
      throw ConfigError("schedule: N_" + std::to_string(s) + " = " + std::to_string(scale(s)) +
                        " does not exceed N_" + std::to_string(s - 1) + (clamped(s) ? " (clamped at max_scale)" : ""));
}

ScaleSchedule ScaleSchedule::desk() {
  ScaleSchedule s;
  s.nu_prime = 0.8;
  s.nu = 0.9;
  return s;
}

std::string describe(const Check& c) {
  std::string s = c.id + ": " + c.inequality + " [lhs=" + num(c.lhs) + ", rhs=" + num(c.rhs) + "] " +
                  (c.ok ? "holds" : "FAILS");
  if (!c.detail.empty()) s += " (" + c.detail + ")";
  return s;
}

// ---------------------------------------------------------------- phase map

PhaseSolve solve_phase(const MultiscaleProblem& P, long a, long b, const RealVec& phi, cplx z, double t0, cplx ref) {
  if (static_cast<int>(phi.size()) + 1 != P.f.dim()) throw ConfigError("solve_phase: phi must have d-1 entries");
  PhaseSolve out;
  double t = t0;
  auto vals = window_values(P, make_x(phi, t), a, b);
  int k = nearest_value(vals, ref).first;
  cplx zt = vals[k];
  double g = std::arg(zt / z);
  const double h = 1e-6;
  for (int it = 0; it < 100; ++it) {
    out.iterations = it;
    if (std::abs(g) < 1e-13) break;
    cplx zp = tracked(window_values(P, make_x(phi, t + h), a, b), zt);
    cplx zm = tracked(window_values(P, make_x(phi, t - h), a, b), zt);
    double deriv = std::arg(zp / zm) / (2.0 * h);
    if (!(std::abs(deriv) > 1e-9)) {
      out.reason = "eigenvalue phase is stationary in the solved coordinate";
      break;
    }
    double cap = 0.05;
    if (vals.size() > 1) cap = std::min(cap, 0.25 * separation_gap(vals, k) / std::abs(deriv));
    double step = std::clamp(-g / deriv, -cap, cap);
    bool accepted = false;
    for (int halve = 0; halve < 40 && !accepted; ++halve, step *= 0.5) {
      auto vn = window_values(P, make_x(phi, t + step), a, b);
      int kn = nearest_value(vn, zt).first;
      double gn = std::arg(vn[kn] / z);
      if (std::abs(gn) < std::abs(g)) {
        t += step;
        vals = std::move(vn);
        k = kn;
        zt = vals[k];
        g = gn;
        accepted = true;
      }
    }
    if (!accepted) {
      if (std::abs(g) >= 1e-10) out.reason = "no step reduced the phase mismatch";
      break;
    }
  }
  out.x = make_x(phi, t);
  out.zk = zt;
  out.residual = std::abs(zt - z);
  out.converged = std::abs(g) < 1e-10;
  if (!out.converged && out.reason.empty()) out.reason = "iteration limit reached";
  return out;
}

InductiveState initialize_state(const MultiscaleProblem& P, const ScaleSchedule& S, cplx z0, const RealVec& phi0,
                                const InitOptions& opt) {
  check_problem(P);
  S.validate();
  if (static_cast<int>(phi0.size()) + 1 != P.f.dim()) throw ConfigError("initialize_state: phi0 must have d-1 entries");
  if (std::abs(std::abs(z0) - 1.0) > 1e-12) throw ConfigError("initialize_state: z0 must be unimodular");
  if (opt.seed_grid < 1) throw ConfigError("initialize_state: seed_grid must be >= 1");
  InductiveState st;
  st.depth = 0;
  st.N = S.scale(0);
  if (std::labs(opt.pad) > floor_sqrt_strict(st.N))
    throw ConfigError("initialize_state: |pad| must stay below sqrt(N0)");
  st.n_left = st.n_right = st.N + opt.pad;
  st.z_center = z0;
  st.r = S.radius(0);
  st.phi_center = phi0;
  const long a = st.first(), b = st.last();

  struct Cand {
    double dist, t;
    cplx z;
  };
  std::vector<Cand> cands;
  for (int j = 0; j < opt.seed_grid; ++j) {
    double t = (j + 0.5) / opt.seed_grid;
    EigenDecomposition d = eigensolve(window_matrix(P, make_x(phi0, t), a, b));
    for (const auto& p : d.pairs)
      if (mass_near_origin(p.u, a, st.N / 4 + 1) >= 0.5) cands.push_back({std::abs(p.z - z0), t, p.z});
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) { return x.dist < y.dist; });
  std::string last_reason = "no eigenvector centred near the origin";
  const int tries = std::min<int>(opt.max_candidates, static_cast<int>(cands.size()));
  for (int c = 0; c < tries; ++c) {
    PhaseSolve ps = solve_phase(P, a, b, phi0, z0, cands[c].t, cands[c].z);
    if (!ps.converged) {
      last_reason = ps.reason;
      continue;
    }
    EigenDecomposition d = eigensolve(window_matrix(P, ps.x, a, b));
    int k = nearest_eigen(d.pairs, ps.zk).first;
    if (mass_near_origin(d.pairs[k].u, a, st.N / 4 + 1) < 0.5) {
      last_reason = "continued branch drifted away from the origin";
      continue;
    }
    st.grid = build_grid(P, a, b, phi0, z0, st.r, opt.grid_per_axis, ps.x.back(), ps.zk);
    return st;
  }
  throw HypothesisError("initialize_state: no centred eigenvalue branch reaches z0 on [-" + std::to_string(st.N) +
                        ", " + std::to_string(st.N) + "]: " + last_reason);
}

// ---------------------------------------------------------------- conditions

bool VerifyReport::ok() const {
  for (const auto* c : {&tracking, &decay, &exceptional, &gradient})
    if (c->evaluated && !c->ok) return false;
  return tracking.evaluated && decay.evaluated;
}

std::vector<Check> VerifyReport::failures() const {
  std::vector<Check> out;
  for (const auto* c : {&tracking, &decay, &exceptional, &gradient})
    for (const auto& k : c->checks)
      if (!k.ok) out.push_back(k);
  return out;
}

double upsilon_distance(std::span<const double> h, std::span<const double> w, long N) {
  if (h.size() != w.size()) throw ConfigError("upsilon_distance: dimension mismatch");
  RealVec zero(w.size(), 0.0);
  double best = kInf;
  const long m = (3 * N) / 2;
  for (long n = -m; n <= m; ++n) best = std::min(best, torus_distance(h, shifted_phase(zero, w, n).x));
  return best;
}

VerifyReport verify_conditions_ABCD(const MultiscaleProblem& P, const ScaleSchedule& S, const InductiveState& state,
                                    const VerifyOptions& opt) {
  check_problem(P);
  if (state.grid.empty()) throw ConfigError("verify: state has no grid");
  const long N = state.N, a = state.first(), b = state.last();
  const double Nd = static_cast<double>(N);
  const int d = P.f.dim();
  VerifyReport rep;

  // eigenvalue tracking map
  rep.tracking.name = "tracking";
  {
    double worst = 0.0, sep = kInf;
    int unconverged = 0;
    for (const auto& n : state.grid) {
      worst = std::max(worst, n.residual);
      sep = std::min(sep, n.separation);
      if (!n.converged) ++unconverged;
    }
    rep.tracking.checks.push_back(make_check("tracking_residual", "max_grid |z_k(x_s(phi,z)) - z| <= tol", worst,
                                             opt.residual_tol, worst <= opt.residual_tol,
                                             std::to_string(state.grid.size()) + " nodes, " +
                                                 std::to_string(unconverged) + " unconverged"));
    const double floor = std::exp(-std::pow(Nd, S.delta_hat()));
    rep.tracking.checks.push_back(make_check("tracking_separation",
                                             "exp(-N^delta) < min_grid min_{j!=k} |z_j(x_s) - z|", floor, sep,
                                             floor < sep));
    rep.tracking.checks.push_back(make_check("tracking_strip", "sup |Im x_s| < h/2", 0.0,
                                             P.f.strip_width() / 2.0, P.f.strip_width() > 0.0, "phases are real"));
    const double dev = std::max(std::labs(state.n_left - N), std::labs(state.n_right - N));
    rep.tracking.checks.push_back(make_check("window_shape", "max(|N'-N|, |N''-N|) < sqrt(N)", dev, std::sqrt(Nd),
                                             dev < std::sqrt(Nd),
                                             "window [" + std::to_string(a) + ", " + std::to_string(b) + "]"));
    finish_condition(rep.tracking);
  }

  // decay of the tracked eigenvector
  rep.decay.name = "decay";
  {
    double worst = -kInf;
    long worst_site = 0;
    std::size_t worst_node = 0;
    for (std::size_t g = 0; g < state.grid.size(); ++g) {
      const auto& u = state.grid[g].u;
      for (int i = 0; i < u.size(); ++i) {
        long s = a + i;
        if (4 * std::labs(s) < N) continue;
        double m = std::abs(u(i));
        double v = (m > 0.0 ? std::log(m) : -kInf) + P.gamma * std::labs(s) / 10.0;
        if (v > worst) {
          worst = v;
          worst_site = s;
          worst_node = g;
        }
      }
    }
    rep.decay.checks.push_back(make_check("eigenvector_decay_grid",
                                          "max_{|n|>=N/4} log|u(x_s(phi,z),n)| + gamma|n|/10 <= 0", worst, 0.0,
                                          worst <= 0.0,
                                          "gamma=" + num(P.gamma) + ", worst node " + std::to_string(worst_node) +
                                              " site " + std::to_string(worst_site)));
    finish_condition(rep.decay);
  }
  if (!opt.full) return rep;
  if (opt.samples < 1) throw ConfigError("verify: samples must be >= 1");

  const double box = std::pow(2.0 * state.r, d - 1);
  const double target = std::exp(-std::pow(Nd, 2.0 * S.delta_hat()));
  const double t_c = state.center().x.back();
  const cplx z_c = state.center().zk;

  // exceptional phases after a shift by h_hat
  rep.exceptional.name = "exceptional_set";
  {
    const double floor = std::exp(-std::pow(Nd, S.mu_hat()));
    RealVec h;
    double hd = 0.0;
    std::string origin;
    if (opt.h_hat) {
      if (static_cast<int>(opt.h_hat->size()) != d) throw ConfigError("verify: h_hat has wrong dimension");
      h = reduce_phase(*opt.h_hat).x;
      hd = upsilon_distance(h, P.w, N);
      origin = "supplied";
    } else {
      Stream st(opt.seed, 0xC0000000ULL);
      for (int tries = 0; tries < 100000; ++tries) {
        h.assign(d, 0.0);
        for (auto& v : h) v = st.uniform();
        hd = upsilon_distance(h, P.w, N);
        if (hd >= floor) break;
      }
      origin = "drawn";
    }
    rep.exceptional.checks.push_back(make_check("probe_distance", "exp(-N^mu) <= dist(h_hat, Upsilon)", floor, hd,
                                                hd >= floor, origin + (hd >= floor ? "" : ", probe rejected")));
    if (hd >= floor) {
      const double thr = std::exp(-std::pow(Nd, S.beta_hat()) / 2.0);
      const long q = floor_sqrt_strict(N);
      std::vector<int> hit(opt.samples, 0);
      parallel_for(opt.samples, opt.workers, [&](std::size_t i) {
        ProbeDraw pd = draw_probe(state, opt.seed, i);
        PhaseSolve ps = solve_phase(P, a, b, pd.phi, pd.z, t_c, z_c);
        if (!ps.converged) {
          hit[i] = 2;
          return;
        }
        RealVec x(ps.x);
        for (int j = 0; j < d; ++j) x[j] += h[j];
        x = reduce_phase(x).x;
        auto seq = VerblunskySequence::sample(P.f, P.w, x, -N - q - 1, N + q);
        for (long n1 = -q; n1 <= q; ++n1)
          for (long n2 = -q; n2 <= q; ++n2) {
            auto vals = eigenvalues(build_finite_cmv(seq, -N + n1, N + n2, P.beta, P.eta));
            if (nearest_value(vals, pd.z).second >= thr) return;
          }
        hit[i] = 1;
      });
      long hits = 0, unsolved = 0;
      for (int v : hit) {
        if (v) ++hits;
        if (v == 2) ++unsolved;
      }
      rep.exceptional.estimate =
          make_estimate("max_{|n'|,|n''|<sqrt N} dist(spec E_[-N+n',N+n''](x_s(phi,z)+h_hat), z) < exp(-N^beta/2)",
                        hits, opt.samples);
      rep.exceptional.measure = rep.exceptional.estimate->estimate * box;
      rep.exceptional.checks.push_back(make_check(
          "exceptional_measure", "mes(exceptional phi) < exp(-N^(2 delta))", rep.exceptional.measure, target,
          rep.exceptional.measure < target,
          std::to_string(hits) + "/" + std::to_string(opt.samples) + " hits, " + std::to_string(unsolved) +
              " unsolved, Wilson upper " + num(rep.exceptional.estimate->upper * box)));
    }
    finish_condition(rep.exceptional);
  }

  // gradient non-degeneracy along h0
  rep.gradient.name = "gradient";
  {
    std::vector<cplx> h0(d, 0.0);
    if (opt.h0) {
      if (static_cast<int>(opt.h0->size()) != d) throw ConfigError("verify: h0 has wrong dimension");
      h0 = *opt.h0;
    } else {
      h0[d - 1] = 1.0;
    }
    double nrm = 0.0;
    for (cplx v : h0) nrm += std::norm(v);
    if (std::abs(std::sqrt(nrm) - 1.0) > 1e-12) throw ConfigError("verify: h0 must be a unit vector");
    const double thr = -std::pow(Nd, S.mu_hat()) / 2.0;
    const double step = 1e-6;
    std::vector<int> hit(opt.samples, 0);
    std::vector<double> rich(opt.samples, 0.0), logv(opt.samples, kInf);
    parallel_for(opt.samples, opt.workers, [&](std::size_t i) {
      ProbeDraw pd = draw_probe(state, opt.seed ^ 0xD000000000000000ULL, i);
      PhaseSolve ps = solve_phase(P, a, b, pd.phi, pd.z, t_c, z_c);
      if (!ps.converged) {
        hit[i] = 2;
        return;
      }
      auto partial = [&](int j, double hh) {
        RealVec xp(ps.x), xm(ps.x);
        xp[j] += hh;
        xm[j] -= hh;
        cplx zp = tracked(window_values(P, reduce_phase(xp).x, a, b), ps.zk);
        cplx zm = tracked(window_values(P, reduce_phase(xm).x, a, b), ps.zk);
        return (zp - zm) / (2.0 * hh);
      };
      cplx ip = 0.0;
      double diff = 0.0, scale = 0.0;
      for (int j = 0; j < d; ++j) {
        cplx d1 = partial(j, step), d2 = partial(j, step / 2.0);
        ip += d1 * h0[j];
        diff = std::max(diff, std::abs(d1 - d2));
        scale = std::max(scale, std::abs(d2));
      }
      rich[i] = diff / std::max(scale, 1e-300);
      logv[i] = std::log(std::abs(ip));
      if (logv[i] < thr) hit[i] = 1;
    });
    long hits = 0, unsolved = 0;
    double worst_rich = 0.0, min_log = kInf;
    for (long i = 0; i < opt.samples; ++i) {
      if (hit[i]) ++hits;
      if (hit[i] == 2) ++unsolved;
      worst_rich = std::max(worst_rich, rich[i]);
      min_log = std::min(min_log, logv[i]);
    }
    rep.gradient.estimate = make_estimate("log|<grad z(x_s(phi,z)), h0>| < -N^mu/2", hits, opt.samples);
    rep.gradient.measure = rep.gradient.estimate->estimate * box;
    rep.gradient.checks.push_back(make_check(
        "gradient_measure", "mes(degenerate phi) < exp(-N^(2 delta))", rep.gradient.measure, target,
        rep.gradient.measure < target,
        std::to_string(hits) + "/" + std::to_string(opt.samples) + " hits, " + std::to_string(unsolved) +
            " unsolved, min log|<grad z, h0>| " + num(min_log) + " vs " + num(thr)));
    rep.gradient.checks.push_back(make_check("gradient_richardson",
                                             "max_j |D_j(h) - D_j(h/2)| / max_j |D_j(h/2)| < 1e-4",
                                             worst_rich, 1e-4, worst_rich < 1e-4));
    finish_condition(rep.gradient);
  }
  return rep;
}

// ---------------------------------------------------------------- one scale step

bool LocalizationStepReport::ok() const {
  if (refused || !hypotheses_ok) return false;
  return std::all_of(conclusions.begin(), conclusions.end(), [](const Check& c) { return c.ok; });
}

LocalizationStepReport finite_localization_step(const MultiscaleProblem& P, const RealVec& x0, cplx z0, long N0,
                                                long n0_left, long n0_right, const std::vector<Subwindow>& windows,
                                                double beta_hat, long probes, std::uint64_t seed,
                                                bool refuse_on_hypothesis) {
  check_problem(P);
  if (static_cast<int>(x0.size()) != P.f.dim()) throw ConfigError("localization step: x0 has wrong dimension");
  if (N0 < 2) throw ConfigError("localization step: N0 must be >= 2");
  if (!(beta_hat > 0.0)) throw ConfigError("localization step: beta must be positive");
  const double Nd = static_cast<double>(N0);
  const long core = (3 * N0) / 2;
  LocalizationStepReport rep;

  // assemble [-n', n''] and check the sites are all served
  long n = 0;
  for (const auto& j : windows) {
    if (j.a > j.m || j.m > j.b) throw ConfigError("localization step: J_m must contain m");
    if (std::labs(j.m) <= core) throw ConfigError("localization step: windows are only used for |m| > 3N0/2");
    n = std::max(n, std::labs(j.m));
  }
  std::vector<bool> served(2 * n + 1, false);
  for (const auto& j : windows) served[j.m + n] = true;
  for (long m = -n; m <= n; ++m)
    if (std::labs(m) > core && !served[m + n])
      throw ConfigError("localization step: site " + std::to_string(m) + " has no window");
  long lo = -core, hi = core;
  for (const auto& j : windows) {
    lo = std::min(lo, j.a);
    hi = std::max(hi, j.b);
  }
  std::vector<bool> cover(hi - lo + 1, false);
  for (long s = -core; s <= core; ++s) cover[s - lo] = true;
  for (const auto& j : windows)
    for (long s = j.a; s <= j.b; ++s) cover[s - lo] = true;
  if (std::find(cover.begin(), cover.end(), false) != cover.end())
    throw ConfigError("localization step: the windows do not assemble into an interval");
  rep.n_left = -lo;
  rep.n_right = hi;

  // hypotheses
  const double tight = std::exp(-2.0 * std::pow(Nd, beta_hat));
  const double loose = std::exp(-std::pow(Nd, beta_hat));
  {
    double margin = kInf, maxlen = 0.0, sdist = kInf;
    long wm = 0, ws = 0;
    auto seq = VerblunskySequence::sample(P.f, P.w, x0, lo - 1, hi);
    for (const auto& j : windows) {
      double mg = static_cast<double>(std::min(j.m - j.a, j.b - j.m));
      if (mg < margin) {
        margin = mg;
        wm = j.m;
      }
      maxlen = std::max(maxlen, static_cast<double>(j.b - j.a + 1));
      double dd = nearest_value(eigenvalues(build_finite_cmv(seq, j.a, j.b, P.beta, P.eta)), z0).second;
      if (dd < sdist) {
        sdist = dd;
        ws = j.m;
      }
    }
    if (windows.empty()) margin = sdist = kInf;
    rep.hypotheses.push_back(make_check("subwindow_margin", "N0 - sqrt(N0) <= min_m dist(m, boundary of J_m)",
                                        Nd - std::sqrt(Nd), margin, margin >= Nd - std::sqrt(Nd),
                                        "worst m=" + std::to_string(wm)));
    rep.hypotheses.push_back(make_check("subwindow_length", "max_m |J_m| <= 10 N0", maxlen, 10.0 * Nd,
                                        maxlen <= 10.0 * Nd));
    rep.hypotheses.push_back(make_check("subwindow_spectrum", "exp(-N0^beta) <= min_m dist(spec E_J_m(x0), z0)",
                                        loose, sdist, sdist >= loose, "worst m=" + std::to_string(ws)));
  }
  EigenDecomposition small0 = eigensolve(window_matrix(P, x0, -n0_left, n0_right));
  rep.k0 = nearest_eigen(small0.pairs, z0).first;
  {
    const auto& p = small0.pairs[rep.k0];
    rep.hypotheses.push_back(make_check("window_eigenvalue_proximity", "|z_k0(x0) - z0| < exp(-2 N0^beta)",
                                        std::abs(p.z - z0), tight, std::abs(p.z - z0) < tight));
    double edge = 0.0;
    const long len = p.u.size();
    for (int i = 0; i <= 3 && i < len; ++i) edge = std::max({edge, std::abs(p.u(i)), std::abs(p.u(len - 1 - i))});
    rep.hypotheses.push_back(make_check("window_edge_decay", "max_{i=0..3} |u_k0(x0) at the four outer sites| < exp(-2 N0^beta)",
                                        edge, tight, edge < tight));
  }
  rep.hypotheses_ok =
      std::all_of(rep.hypotheses.begin(), rep.hypotheses.end(), [](const Check& c) { return c.ok; });
  if (!rep.hypotheses_ok && refuse_on_hypothesis) {
    rep.refused = true;
    for (const auto& c : rep.hypotheses)
      if (!c.ok) rep.reason += (rep.reason.empty() ? "" : "; ") + describe(c);
    return rep;
  }

  // conclusions on x0 and on probes near it
  const double ball = 0.99 * tight / std::sqrt(static_cast<double>(P.f.dim()));
  std::vector<RealVec> xs{x0};
  for (long i = 0; i < probes; ++i) {
    Stream st(seed, static_cast<std::uint64_t>(i));
    RealVec x(x0);
    for (auto& v : x) v += st.uniform(-ball, ball);
    xs.push_back(reduce_phase(x).x);
  }
  const double close = std::exp(-P.gamma * Nd / 40.0);
  const double sep_floor = loose / 8.0;
  double c1 = 0.0, c2 = kInf, c3 = -kInf, c4 = 0.0;
  long c3_site = 0;
  const cplx ref0 = small0.pairs[rep.k0].z;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    EigenDecomposition sm = i == 0 ? small0 : eigensolve(window_matrix(P, xs[i], -n0_left, n0_right));
    int ks = nearest_eigen(sm.pairs, ref0).first;
    EigenDecomposition big = eigensolve(window_matrix(P, xs[i], lo, hi));
    int kb = nearest_eigen(big.pairs, sm.pairs[ks].z).first;
    if (i == 0) rep.k = kb;
    c1 = std::max(c1, std::abs(big.pairs[kb].z - sm.pairs[ks].z));
    c2 = std::min(c2, separation_gap(big.pairs, kb));
    LocalizationProfile prof = localization_profile(big.pairs[kb].u, lo, static_cast<int>(N0), P.gamma);
    if (prof.worst_margin > c3) {
      c3 = prof.worst_margin;
      c3_site = prof.worst_site;
    }
    c4 = std::max(c4, aligned_distance(big.pairs[kb].u, lo, sm.pairs[ks].u, -n0_left));
  }
  const std::string over = "over x0 and " + std::to_string(probes) + " nearby phases";
  rep.conclusions.push_back(make_check("eigenvalue_tracking", "max |z_k(x) - z_k0(x)| < exp(-gamma N0/40)", c1, close,
                                       c1 < close, over));
  rep.conclusions.push_back(make_check("eigenvalue_separation",
                                       "exp(-N0^beta)/8 < min_{j!=k} |z_j(x) - z_k(x)|", sep_floor, c2,
                                       sep_floor < c2, over));
  rep.conclusions.push_back(make_check("eigenvector_decay",
                                       "max_{|s|>=3N0/4} log|u_k(x,s)| + gamma|s|/20 < 0", c3, 0.0, c3 < 0.0,
                                       "worst site " + std::to_string(c3_site)));
  rep.conclusions.push_back(make_check("eigenvector_closeness", "max ||u_k(x) - u_k0(x)|| < exp(-gamma N0/40)", c4,
                                       close, c4 < close, over + ", zero padded, phase aligned"));
  return rep;
}

// ---------------------------------------------------------------- advance

bool AdvanceReport::ok() const {
  return noop || (!checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.ok; }));
}

std::vector<Check> AdvanceReport::failures() const {
  std::vector<Check> out;
  for (const auto& c : checks)
    if (!c.ok) out.push_back(c);
  return out;
}

AdvanceReport inductive_advance(const MultiscaleProblem& P, const ScaleSchedule& S, const InductiveState& state,
                                const AdvanceOptions& opt) {
  check_problem(P);
  S.validate();
  AdvanceReport rep;
  if (state.depth + 1 > S.s_max) {
    rep.noop = true;
    rep.next = state;
    return rep;
  }
  if (opt.require_verified && !state.verified)
    throw HypothesisError("inductive_advance: the depth-" + std::to_string(state.depth) +
                          " state has not passed verification");
  if (state.grid.empty()) throw ConfigError("inductive_advance: state has no grid");

  const long N0 = state.N, N1 = S.scale(state.depth + 1);
  const double Nd = static_cast<double>(N0);
  const double bh = S.beta_hat();
  const cplx z1 = opt.z_next.value_or(state.z_center);
  if (!(std::abs(z1 - state.z_center) < state.r || z1 == state.z_center))
    throw ConfigError("inductive_advance: next centre must lie in D(z_s, r_s)");
  const long core = (3 * N0) / 2;
  const long reach = N1 - N0;  // keeps the assembled window within N1 +- sqrt(N0)
  if (reach <= core)
    throw ConfigError("inductive_advance: N_{s+1} = " + std::to_string(N1) + " is too small for window assembly");
  const long q = floor_sqrt_strict(N0);
  const double good = std::exp(-std::pow(Nd, bh));
  const double jitter = 0.1 * std::pow(state.r, 4.0);
  const long a0 = state.first(), b0 = state.last();
  const double t_c = state.center().x.back();
  const cplx z_c = state.center().zk;

  // offsets (n', n'') tried in order of size
  std::vector<std::pair<long, long>> offs;
  for (long i = -q; i <= q; ++i)
    for (long j = -q; j <= q; ++j) offs.emplace_back(i, j);
  std::stable_sort(offs.begin(), offs.end(), [](auto x, auto y) {
    return std::labs(x.first) + std::labs(x.second) < std::labs(y.first) + std::labs(y.second);
  });

  RealVec phi1, x0;
  std::vector<Subwindow> windows;
  std::string why = "no attempts";
  bool found = false;
  for (int att = 0; att < std::max(1, opt.phi_attempts) && !found; ++att) {
    phi1 = state.phi_center;
    if (att > 0) {
      Stream st(opt.seed ^ 0xA000000000000000ULL, static_cast<std::uint64_t>(att));
      for (auto& v : phi1) v += st.uniform(-jitter, jitter);
    }
    PhaseSolve ps = solve_phase(P, a0, b0, phi1, z1, t_c, z_c);
    if (!ps.converged) {
      why = "phase map did not converge: " + ps.reason;
      continue;
    }
    x0 = ps.x;
    auto seq = VerblunskySequence::sample(P.f, P.w, x0, -reach - N0 - q - 1, reach + N0 + q);
    windows.clear();
    bool all = true;
    for (long m = -reach; m <= reach && all; ++m) {
      if (std::labs(m) <= core) continue;
      bool got = false;
      for (auto [u, v] : offs) {
        long ja = m - N0 + u, jb = m + N0 + v;
        if (nearest_value(eigenvalues(build_finite_cmv(seq, ja, jb, P.beta, P.eta)), z1).second >= good) {
          windows.push_back({m, ja, jb});
          got = true;
          break;
        }
      }
      if (!got) {
        all = false;
        why = "site " + std::to_string(m) + " has no window with dist(spec, z) >= exp(-N^beta)";
      }
    }
    found = all;
  }
  rep.checks.push_back(make_check("subwindow_search", "a phase with a good window J_m for every 3N/2 < |m| <= N1 - N",
                                  found ? 0.0 : 1.0, 1.0, found, found ? "" : why));
  if (!found) return rep;

  rep.step = finite_localization_step(P, x0, z1, N0, state.n_left, state.n_right, windows, bh, opt.probes, opt.seed,
                                      opt.require_verified);
  rep.checks.insert(rep.checks.end(), rep.step.hypotheses.begin(), rep.step.hypotheses.end());
  if (rep.step.refused) return rep;
  rep.checks.insert(rep.checks.end(), rep.step.conclusions.begin(), rep.step.conclusions.end());

  InductiveState& nx = rep.next;
  nx.depth = state.depth + 1;
  nx.N = N1;
  nx.n_left = rep.step.n_left;
  nx.n_right = rep.step.n_right;
  nx.z_center = z1;
  nx.r = S.radius(nx.depth);
  nx.phi_center = phi1;
  const long a1 = nx.first(), b1 = nx.last();
  {
    EigenDecomposition big = eigensolve(window_matrix(P, x0, a1, b1));
    cplx ref = big.pairs[rep.step.k].z;
    nx.grid = build_grid(P, a1, b1, phi1, z1, nx.r, 3, x0.back(), ref);
  }

  // the new map against the old one on the new grid
  double shift = 0.0, vshift = 0.0;
  int bad = 0;
  for (const auto& node : nx.grid) {
    PhaseSolve old = solve_phase(P, a0, b0, node.phi, node.z, t_c, z_c);
    if (!old.converged || !node.converged) {
      ++bad;
      shift = vshift = kInf;
      continue;
    }
    shift = std::max(shift, torus_distance(node.x, old.x));
    EigenDecomposition at_old = eigensolve(window_matrix(P, old.x, a1, b1));
    int k = nearest_eigen(at_old.pairs, node.zk).first;
    vshift = std::max(vshift, aligned_distance(node.u, a1, at_old.pairs[k].u, a1));
  }
  const std::string nodes = std::to_string(nx.grid.size()) + " grid nodes, " + std::to_string(bad) + " unsolved";
  const double b1d = std::exp(-P.gamma * Nd / 50.0), b2d = std::exp(-P.gamma * Nd / 500.0);
  rep.checks.push_back(make_check("phase_shift_bound", "max |x_{s+1}(phi,z) - x_s(phi,z)| < exp(-gamma N_s/50)", shift,
                                  b1d, shift < b1d, nodes));
  rep.checks.push_back(make_check("eigenvector_shift_bound",
                                  "max ||u(x_{s+1}(phi,z)) - u(x_s(phi,z))|| < exp(-gamma N_s/500)", vshift, b2d,
                                  vshift < b2d, nodes + ", both on the new window"));

  VerifyOptions vo;
  vo.full = false;
  rep.next_report = verify_conditions_ABCD(P, S, nx, vo);
  for (const auto* c : {&rep.next_report.tracking, &rep.next_report.decay})
    for (auto k : c->checks) {
      k.id = "next_" + k.id;
      rep.checks.push_back(k);
    }
  return rep;
}

bool arc_between(cplx a, cplx b, cplx c) {
  auto ang = [&](cplx v) {
    double t = std::arg(v / a);
    if (t < 0.0) t += kTwoPi;
    if (t >= kTwoPi) t = 0.0;
    return t;
  };
  return ang(b) <= ang(c) + 1e-15;
}

}  // namespace cmvspec
