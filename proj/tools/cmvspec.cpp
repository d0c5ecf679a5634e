#include <cstdlib>
#include <iostream>
#include <locale>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "cmvspec/cocycle.hpp"
#include "cmvspec/coverage.hpp"
#include "cmvspec/errors.hpp"
#include "cmvspec/identity.hpp"
#include "cmvspec/io.hpp"
#include "cmvspec/ldt.hpp"
#include "cmvspec/multiscale.hpp"
#include "cmvspec/parallel.hpp"
#include "cmvspec/spectral.hpp"

using namespace cmvspec;

namespace {

struct Args {
  std::string config;
  std::string out = "out";
  std::uint64_t seed = 0;
  bool has_seed = false;
  int workers = 0;
};

std::ostringstream csv_stream() {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  return os;
}

template <class T>
T field(const json& b, const char* key) {
  try {
    return b.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad or missing '") + key + "': " + e.what());
  }
}

std::vector<double> number_list(const json& v, const char* key) {
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) throw ConfigError(std::string("config: '") + key + "' must be a number or a list");
  return v.get<std::vector<double>>();
}

json arcs_json(const std::vector<CoveredArc>& arcs) {
  json a = json::array();
  for (const auto& r : arcs) a.push_back({{"from", r.from}, {"to", r.to}, {"points", r.points}});
  return a;
}

json checks_json(const std::vector<Check>& cs) {
  json a = json::array();
  for (const auto& c : cs) a.push_back(check_to_json(c));
  return a;
}

json estimate_json(const ExceptionalSetEstimate& e) {
  return {{"description", e.description}, {"hits", e.hits},   {"samples", e.samples},
          {"estimate", e.estimate},       {"lower", e.lower}, {"upper", e.upper}};
}

double gamma_for(const RunConfig& rc, double theta, int workers) {
  if (rc.block.contains("gamma")) return field<double>(rc.block, "gamma");
  auto est = lyapunov_finite(rc.f, rc.freq.w, SpectralPoint(theta), field<long>(rc.block, "gamma_n"),
                             field<long>(rc.block, "gamma_samples"), rc.seed, workers);
  return std::max(0.0, est.L_n - 3.0 * est.std_error);
}

int cmd_lyapunov(const RunConfig& rc, OutputSet& out, int workers) {
  const json& b = rc.block;
  auto thetas = number_list(b.at("theta"), "theta");
  auto ns = number_list(b.at("n"), "n");
  const long samples = field<long>(b, "samples");
  const std::string method = field<std::string>(b, "method");
  if (method != "finite" && method != "avalanche") throw ConfigError("config: method must be finite or avalanche");
  auto os = csv_stream();
  os << "theta,n,L_n,stderr\n";
  for (double th : thetas)
    for (double nd : ns) {
      const long n = static_cast<long>(nd);
      SpectralPoint z(th);
      LyapunovEstimate e = method == "finite"
                               ? lyapunov_finite(rc.f, rc.freq.w, z, n, samples, rc.seed, workers)
                               : lyapunov_avalanche(rc.f, rc.freq.w, z, n, field<int>(b, "levels"), samples,
                                                    rc.seed, workers);
      os << th << ',' << e.n << ',' << e.L_n << ',' << e.std_error << '\n';
    }
  out.add("lyapunov.csv", os.str());
  std::cout << "lyapunov: " << thetas.size() * ns.size() << " rows\n";
  return 0;
}

int cmd_spectrum_scan(const RunConfig& rc, OutputSet& out, int workers) {
  const json& b = rc.block;
  auto arc = number_list(b.at("arc"), "arc");
  if (arc.size() != 2) throw ConfigError("config: arc must be [theta1, theta2]");
  CoverageOptions opt;
  opt.phase_samples = field<long>(b, "phase_samples");
  opt.refine = field<int>(b, "refine");
  opt.beta = rc.beta;
  opt.eta = rc.eta;
  opt.seed = rc.seed;
  opt.workers = workers;
  CoverageReport r = interval_coverage_scan(rc.f, rc.freq.w, arc[0], arc[1], field<long>(b, "grid"),
                                            field<long>(b, "window"), field<double>(b, "tol"), opt);
  auto os = csv_stream();
  write_coverage_csv(os, r, rc.f.dim());
  out.add("coverage.csv", os.str());
  long covered = 0;
  for (const auto& p : r.points) covered += p.covered ? 1 : 0;
  json s = {{"N", r.N},          {"tol", r.tol},           {"grid", r.points.size()}, {"full_circle", r.full_circle},
            {"covered", covered}, {"arcs", arcs_json(r.arcs)}, {"gaps", arcs_json(r.gaps)}};
  out.add("summary.json", s.dump(2) + "\n");
  std::cout << "spectrum-scan: " << covered << "/" << r.points.size() << " grid points covered, " << r.gaps.size()
            << " gaps\n";
  return 0;
}

int cmd_ldt(const RunConfig& rc, OutputSet& out, int workers) {
  const json& b = rc.block;
  std::vector<long> ns;
  for (double v : number_list(b.at("n_list"), "n_list")) ns.push_back(static_cast<long>(v));
  const double tau = field<double>(b, "tau");
  const long samples = field<long>(b, "samples");
  SpectralPoint z(field<double>(b, "theta"));
  const std::string kind = field<std::string>(b, "kind");
  if (kind != "norm" && kind != "det" && kind != "both") throw ConfigError("config: kind must be norm, det or both");
  auto os = csv_stream();
  os << "kind,n,L_n,threshold,hits,samples,estimate,lower,upper,vacuous\n";
  json s = json::object();
  auto emit = [&](const char* name, const LdtScan& scan) {
    for (const auto& r : scan.rows)
      os << name << ',' << r.n << ',' << r.L_n << ',' << r.threshold << ',' << r.set.hits << ',' << r.set.samples
         << ',' << r.set.estimate << ',' << r.set.lower << ',' << r.set.upper << ',' << (r.vacuous ? 1 : 0) << '\n';
    s[name] = {{"nonincreasing", scan.nonincreasing}};
    std::cout << "ldt " << name << ": nonincreasing=" << (scan.nonincreasing ? "yes" : "no") << '\n';
  };
  if (kind != "det") emit("norm", ldt_measure_scan(rc.f, rc.freq.w, z, ns, tau, samples, rc.seed, workers));
  if (kind != "norm")
    emit("det", ldt_determinant_scan(rc.f, rc.freq.w, z, ns, tau, samples, rc.seed, rc.beta, rc.eta, workers));
  out.add("ldt.csv", os.str());
  out.add("summary.json", s.dump(2) + "\n");
  return 0;
}

int cmd_localize(const RunConfig& rc, OutputSet& out, int workers) {
  const json& b = rc.block;
  const int n0 = field<int>(b, "N0");
  const double theta = field<double>(b, "theta");
  Eigen::VectorXcd u;
  long first = 0;
  json s = json::object();
  if (b.contains("vector")) {
    const json& v = b.at("vector");
    first = field<long>(v, "first");
    const json& vals = v.at("values");
    u.resize(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) u(static_cast<Eigen::Index>(i)) = complex_from_json(vals[i]);
    if (u.size() == 0) throw ConfigError("config: localize vector is empty");
    s["source"] = "vector";
  } else {
    const long win = field<long>(b, "window");
    RealVec x = b.contains("x") ? field<RealVec>(b, "x") : random_phase(rc.seed, 0, rc.f.dim());
    if (static_cast<int>(x.size()) != rc.f.dim()) throw ConfigError("config: localize x has wrong dimension");
    auto seq = VerblunskySequence::sample(rc.f, rc.freq.w, x, -win - 1, win);
    EigenDecomposition d = eigensolve(build_finite_cmv(seq, -win, win, rc.beta, rc.eta));
    auto [k, dist] = nearest_eigen(d.pairs, std::polar(1.0, theta));
    u = d.pairs[k].u;
    first = -win;
    s["source"] = "eigenvector";
    s["x"] = x;
    s["eigenvalue"] = complex_to_json(d.pairs[k].z);
    s["distance_to_z"] = dist;
  }
  const double gamma = gamma_for(rc, theta, workers);
  LocalizationProfile c = localization_profile(u, first, n0, gamma);
  LocalizationProfile p = localization_profile(u, first, n0, gamma, c.center);
  auto os = csv_stream();
  os << "site,abs_u,log_abs_u\n";
  for (std::size_t i = 0; i < p.sites.size(); ++i)
    os << p.sites[i] << ',' << std::exp(p.log_abs_u[i]) << ',' << p.log_abs_u[i] << '\n';
  out.add("profile.csv", os.str());
  s["gamma"] = gamma;
  s["center"] = p.center;
  s["fitted_rate"] = p.fitted_rate;
  s["fit_from"] = p.fit_from;
  s["pass"] = p.pass;
  s["worst_site"] = p.worst_site;
  s["worst_margin"] = p.worst_margin;
  out.add("summary.json", s.dump(2) + "\n");
  std::cout << "localize: center " << p.center << ", fitted rate " << p.fitted_rate << ", "
            << (p.pass ? "pass" : "fail") << '\n';
  return 0;
}

json state_json(const InductiveState& st) {
  json g = json::array();
  for (const auto& n : st.grid)
    g.push_back({{"phi", n.phi},
                 {"z", complex_to_json(n.z)},
                 {"x", n.x},
                 {"converged", n.converged},
                 {"zk", complex_to_json(n.zk)},
                 {"residual", std::isfinite(n.residual) ? json(n.residual) : json("inf")},
                 {"separation", std::isfinite(n.separation) ? json(n.separation) : json("inf")}});
  return {{"depth", st.depth}, {"N", st.N},   {"window", {-st.n_left, st.n_right}}, {"z_center", complex_to_json(st.z_center)},
          {"r", st.r},         {"phi_center", st.phi_center}, {"grid", g}};
}

json verify_json(const VerifyReport& r) {
  json j = json::object();
  for (const auto* c : {&r.tracking, &r.decay, &r.exceptional, &r.gradient}) {
    if (!c->evaluated) continue;
    json e = {{"ok", c->ok}, {"checks", checks_json(c->checks)}};
    if (c->estimate) {
      e["estimate"] = estimate_json(*c->estimate);
      e["measure"] = c->measure;
    }
    j[c->name] = e;
  }
  return j;
}

int cmd_multiscale(const RunConfig& rc, OutputSet& out, int workers) {
  const json& b = rc.block;
  ScaleSchedule S = schedule_from_json(b.at("schedule"));
  const int depth = field<int>(b, "depth");
  if (depth < 0) throw ConfigError("config: depth must be >= 0");
  S.s_max = std::max(S.s_max, depth);
  const double theta = field<double>(b, "theta");
  MultiscaleProblem P{rc.f, rc.freq.w, rc.beta, rc.eta, gamma_for(rc, theta, workers)};
  InitOptions io;
  io.grid_per_axis = field<int>(b, "grid_per_axis");
  io.pad = field<long>(b, "pad");
  InductiveState st = initialize_state(P, S, std::polar(1.0, theta), field<RealVec>(b, "phi0"), io);

  json rep = {{"gamma", P.gamma}, {"schedule", schedule_to_json(S)}, {"depth", depth}, {"stages", json::array()}};
  std::vector<Check> failing;
  VerifyOptions vo;
  vo.samples = field<long>(b, "samples");
  vo.seed = rc.seed;
  vo.workers = workers;
  if (depth == 0) {
    vo.full = false;
    VerifyReport r = verify_conditions_ABCD(P, S, st, vo);
    rep["stages"].push_back({{"state", state_json(st)}, {"verify", verify_json(r)}});
    failing = r.failures();
  } else {
    AdvanceOptions ao;
    ao.require_verified = field<bool>(b, "require_verified");
    ao.seed = rc.seed;
    for (int s = 0; s < depth; ++s) {
      VerifyReport r = verify_conditions_ABCD(P, S, st, vo);
      st.verified = r.ok();
      json stage = {{"state", state_json(st)}, {"verify", verify_json(r)}};
      auto vf = r.failures();
      failing.insert(failing.end(), vf.begin(), vf.end());
      if (!st.verified && ao.require_verified) {
        rep["stages"].push_back(stage);
        out.add("report.json", rep.dump(2) + "\n");
        throw HypothesisError("multiscale: depth-" + std::to_string(s) + " state failed verification: " +
                              describe(vf.front()));
      }
      AdvanceReport ar = inductive_advance(P, S, st, ao);
      stage["advance"] = {{"ok", ar.ok()}, {"checks", checks_json(ar.checks)}};
      rep["stages"].push_back(stage);
      auto af = ar.failures();
      failing.insert(failing.end(), af.begin(), af.end());
      if (!ar.ok() || ar.next.grid.empty()) break;
      st = ar.next;
      if (s + 1 == depth) rep["stages"].push_back({{"state", state_json(st)}});
    }
  }
  rep["ok"] = failing.empty();
  rep["failures"] = checks_json(failing);
  out.add("report.json", rep.dump(2) + "\n");
  for (const auto& c : failing) std::cerr << "multiscale: " << describe(c) << '\n';
  std::cout << "multiscale: depth " << depth << ", " << failing.size() << " failing inequalities\n";
  return failing.empty() ? 0 : 4;
}

int cmd_identity_suite(const RunConfig& rc, OutputSet& out, int workers) {
  const json& b = rc.block;
  IdentitySuiteOptions opt;
  opt.cases = field<long>(b, "cases");
  opt.seed = rc.seed;
  opt.workers = workers;
  opt.beta = rc.beta;
  opt.eta = rc.eta;
  IdentitySuiteReport r = run_identity_suite(rc.f, rc.freq.w, opt);
  auto os = csv_stream();
  os << "suite,case,n,first,residual\n";
  for (const auto& c : r.cases) os << c.suite << ',' << c.index << ',' << c.n << ',' << c.first << ',' << c.residual << '\n';
  out.add("identity.csv", os.str());
  const std::vector<std::pair<std::string, const char*>> suites = {{"unitarity", "unitarity_tol"},
                                                                  {"factorization", "factor_tol"},
                                                                  {"relation", "relation_tol"},
                                                                  {"green", "green_tol"},
                                                                  {"poisson", "poisson_tol"}};
  json s = json::object();
  bool ok = true;
  for (const auto& [name, key] : suites) {
    const double m = r.max_residual(name), tol = field<double>(b, key);
    s[name] = {{"max_residual", m}, {"tol", tol}, {"ok", m <= tol}};
    ok = ok && m <= tol;
    std::cout << name << ": max residual " << m << " (tol " << tol << ")" << (m <= tol ? "" : " EXCEEDED") << '\n';
  }
  s["ok"] = ok;
  out.add("summary.json", s.dump(2) + "\n");
  return ok ? 0 : 3;
}

int run(const std::string& command, const Args& a) {
  if (a.config.empty()) throw ConfigError("--config is required");
  const std::uint64_t* seed = a.has_seed ? &a.seed : nullptr;
  RunConfig rc = load_config(read_json_file(a.config), command, seed);
  int workers = a.workers;
  if (workers <= 0)
    if (const char* env = std::getenv("CMVSPEC_WORKERS")) {
      try {
        workers = std::stoi(env);
      } catch (const std::exception&) {
        throw ConfigError("CMVSPEC_WORKERS is not an integer");
      }
    }
  workers = resolve_workers(workers);
  OutputSet out(a.out);
  int code = 0;
  try {
    if (command == "lyapunov") code = cmd_lyapunov(rc, out, workers);
    else if (command == "spectrum-scan") code = cmd_spectrum_scan(rc, out, workers);
    else if (command == "ldt") code = cmd_ldt(rc, out, workers);
    else if (command == "localize") code = cmd_localize(rc, out, workers);
    else if (command == "multiscale") code = cmd_multiscale(rc, out, workers);
    else code = cmd_identity_suite(rc, out, workers);
  } catch (...) {
    out.write_manifest(rc);
    throw;
  }
  out.write_manifest(rc);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments for quasi-periodic CMV matrices"};
  app.require_subcommand(1);
  Args args;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"lyapunov", "Lyapunov exponent estimates over a theta grid"},
      {"spectrum-scan", "interval coverage scan of the spectrum"},
      {"ldt", "large deviation set estimates across scales"},
      {"localize", "decay profile of an eigenvector"},
      {"multiscale", "multiscale induction harness"},
      {"identity-suite", "residuals of the determinant, Green and Poisson identities"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", args.config, "JSON config or a manifest from an earlier run")->required();
    sub->add_option("--out", args.out, "output directory");
    sub->add_option("--seed", args.seed, "overrides the configured seed")->each([&](const std::string&) {
      args.has_seed = true;
    });
    sub->add_option("--workers", args.workers, "worker threads (default: CMVSPEC_WORKERS, then all cores)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, args);
  } catch (const Error& e) {
    std::cerr << "cmvspec " << command << ": " << e.what() << '\n';
    return e.exit_code();
  } catch (const json::exception& e) {
    std::cerr << "cmvspec " << command << ": config: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "cmvspec " << command << ": " << e.what() << '\n';
    return 3;
  }
}
