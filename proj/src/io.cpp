#include "cmvspec/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <locale>
#include <sstream>

#include "cmvspec/errors.hpp"

namespace cmvspec {

namespace {

json get_or(const json& j, const char* key, json fallback) {
  if (j.is_object() && j.contains(key) && !j.at(key).is_null()) return j.at(key);
  return fallback;
}

template <class T>
T as(const json& j, const std::string& what) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config: bad value for " + what + ": " + e.what());
  }
}

json real_list(const RealVec& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

void fill(json& block, const char* key, json value) {
  if (!block.contains(key) || block.at(key).is_null()) block[key] = std::move(value);
}

json normalise_block(const std::string& command, json b, int dim) {
  if (b.is_null()) b = json::object();
  if (!b.is_object()) throw ConfigError("config: block '" + command + "' must be an object");
  if (command == "lyapunov") {
    if (!b.contains("theta")) {
      json g = get_or(b, "theta_grid", json::object());
      double from = as<double>(get_or(g, "from", 0.0), "theta_grid.from");
      double to = as<double>(get_or(g, "to", kTwoPi), "theta_grid.to");
      long pts = as<long>(get_or(g, "points", 16), "theta_grid.points");
      if (pts < 1) throw ConfigError("config: theta_grid.points must be >= 1");
      json th = json::array();
      for (long i = 0; i < pts; ++i) th.push_back(from + (to - from) * static_cast<double>(i) / static_cast<double>(pts));
      b["theta"] = th;
      b.erase("theta_grid");
    }
    fill(b, "n", json::array({100}));
    fill(b, "samples", 64);
    fill(b, "method", "finite");
    fill(b, "levels", 3);
  } else if (command == "spectrum-scan") {
    fill(b, "arc", json::array({0.0, kTwoPi}));
    fill(b, "grid", 720);
    fill(b, "window", 100);
    fill(b, "tol", 0.01);
    fill(b, "phase_samples", 4);
    fill(b, "refine", 0);
  } else if (command == "ldt") {
    fill(b, "n_list", json::array({50, 100, 200}));
    fill(b, "tau", 0.3);
    fill(b, "samples", 2000);
    fill(b, "theta", 0.5);
    fill(b, "kind", "both");
  } else if (command == "localize") {
    fill(b, "N0", 24);
    fill(b, "theta", 0.8);
    fill(b, "gamma_n", 200);
    fill(b, "gamma_samples", 64);
    if (!b.contains("vector")) {
      fill(b, "window", b.at("N0"));
    }
  } else if (command == "multiscale") {
    json sj = get_or(b, "schedule", json::object());
    if (!sj.contains("preset")) sj["preset"] = "desk";
    b["schedule"] = schedule_to_json(schedule_from_json(sj));
    fill(b, "depth", 0);
    fill(b, "theta", 0.8);
    fill(b, "phi0", real_list(RealVec(std::max(0, dim - 1), 0.1)));
    fill(b, "pad", 3);
    fill(b, "gamma_n", 200);
    fill(b, "gamma_samples", 64);
    fill(b, "samples", 64);
    fill(b, "grid_per_axis", 3);
    fill(b, "require_verified", true);
  } else if (command == "identity-suite") {
    fill(b, "cases", 50);
    fill(b, "relation_tol", 1e-8);
    fill(b, "green_tol", 1e-8);
    fill(b, "poisson_tol", 1e-9);
    fill(b, "unitarity_tol", 1e-12);
    fill(b, "factor_tol", 1e-13);
  } else {
    throw ConfigError("config: unknown command '" + command + "'");
  }
  return b;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << v;
  return os.str();
}

cplx complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2) return {as<double>(j[0], "complex re"), as<double>(j[1], "complex im")};
  if (j.is_object()) return {as<double>(get_or(j, "re", 0.0), "re"), as<double>(get_or(j, "im", 0.0), "im")};
  throw ConfigError("config: expected a complex number");
}

json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

SamplingFunction sampling_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: sampling must be an object");
  if (j.contains("preset")) {
    std::string p = as<std::string>(j.at("preset"), "sampling.preset");
    if (p == "zero") return SamplingFunction::zero(as<int>(get_or(j, "dim", 1), "sampling.dim"));
    if (p == "constant")
      return SamplingFunction::constant(as<int>(get_or(j, "dim", 1), "sampling.dim"),
                                        complex_from_json(get_or(j, "value", 0.5)));
    if (p == "strong_coupling") return SamplingFunction::strong_coupling(as<double>(get_or(j, "lambda", 0.95), "lambda"));
    throw ConfigError("config: unknown sampling preset '" + p + "'");
  }
  int dim = as<int>(get_or(j, "dim", json()), "sampling.dim");
  double h = as<double>(get_or(j, "h", 0.0), "sampling.h");
  std::vector<FourierTerm> terms;
  for (const auto& c : get_or(j, "coeffs", json::array())) {
    FourierTerm t;
    t.k = as<std::vector<int>>(c.at("k"), "coeffs.k");
    t.c = {as<double>(get_or(c, "re", 0.0), "coeffs.re"), as<double>(get_or(c, "im", 0.0), "coeffs.im")};
    terms.push_back(std::move(t));
  }
  return SamplingFunction(dim, std::move(terms), h);
}

json sampling_to_json(const SamplingFunction& f) {
  json j;
  j["dim"] = f.dim();
  j["h"] = f.strip_width();
  j["coeffs"] = json::array();
  for (const auto& t : f.terms()) j["coeffs"].push_back({{"k", t.k}, {"re", t.c.real()}, {"im", t.c.imag()}});
  return j;
}

Frequency frequency_from_json(const json& j, int dim) {
  if (!j.is_object()) throw ConfigError("config: frequency must be an object");
  RealVec w;
  if (j.contains("w")) {
    w = as<RealVec>(j.at("w"), "frequency.w");
  } else {
    std::string p = as<std::string>(get_or(j, "preset", "strong_coupling"), "frequency.preset");
    if (p == "strong_coupling")
      w = {std::sqrt(2.0) - 1.0, std::sqrt(3.0) - 1.0};
    else if (p == "golden")
      w = {(std::sqrt(5.0) - 1.0) / 2.0};
    else
      throw ConfigError("config: unknown frequency preset '" + p + "'");
  }
  if (static_cast<int>(w.size()) != dim)
    throw ConfigError("config: frequency has " + std::to_string(w.size()) + " entries, sampling function has dim " +
                      std::to_string(dim));
  double p = as<double>(get_or(j, "p", 0.01), "frequency.p");
  double q = as<double>(get_or(j, "q", dim + 1.0), "frequency.q");
  int k_max = as<int>(get_or(j, "k_max", 40), "frequency.k_max");
  return Frequency::make(std::move(w), p, q, k_max);
}

ScaleSchedule schedule_from_json(const json& j) {
  ScaleSchedule s;
  std::string preset = as<std::string>(get_or(j, "preset", "default"), "schedule.preset");
  if (preset == "desk")
    s = ScaleSchedule::desk();
  else if (preset != "default")
    throw ConfigError("config: unknown schedule preset '" + preset + "'");
  s.nu_prime = as<double>(get_or(j, "nu_prime", s.nu_prime), "schedule.nu_prime");
  s.nu = as<double>(get_or(j, "nu", s.nu), "schedule.nu");
  s.tau = as<double>(get_or(j, "tau", s.tau), "schedule.tau");
  s.C0 = as<double>(get_or(j, "C0", s.C0), "schedule.C0");
  s.C1 = as<double>(get_or(j, "C1", s.C1), "schedule.C1");
  s.C2 = as<double>(get_or(j, "C2", s.C2), "schedule.C2");
  s.factor = as<double>(get_or(j, "factor", s.factor), "schedule.factor");
  s.N0 = as<long>(get_or(j, "N0", s.N0), "schedule.N0");
  s.s_max = as<int>(get_or(j, "s_max", s.s_max), "schedule.s_max");
  s.max_scale = as<long>(get_or(j, "max_scale", s.max_scale), "schedule.max_scale");
  s.validate();
  return s;
}

json schedule_to_json(const ScaleSchedule& s) {
  return {{"nu_prime", s.nu_prime}, {"nu", s.nu},       {"tau", s.tau},     {"C0", s.C0},
          {"C1", s.C1},             {"C2", s.C2},       {"factor", s.factor}, {"N0", s.N0},
          {"s_max", s.s_max},       {"max_scale", s.max_scale}};
}

json check_to_json(const Check& c) {
  auto finite_or_string = [](double v) -> json {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
  };
  return {{"id", c.id},       {"inequality", c.inequality}, {"lhs", finite_or_string(c.lhs)},
          {"rhs", finite_or_string(c.rhs)}, {"ok", c.ok}, {"detail", c.detail}};
}

RunConfig load_config(const json& input, const std::string& command, const std::uint64_t* seed_override) {
  json j = input;
  if (j.is_object() && j.contains("config") && j.contains("command")) {
    if (j.at("command") != command)
      throw ConfigError("config: manifest was written by '" + j.at("command").get<std::string>() + "', not '" +
                        command + "'");
    j = j.at("config");
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  if (!j.contains("sampling")) throw ConfigError("config: missing 'sampling'");
  RunConfig rc;
  rc.command = command;
  rc.f = sampling_from_json(j.at("sampling"));
  rc.freq = frequency_from_json(get_or(j, "frequency", json::object()), rc.f.dim());
  json bnd = get_or(j, "boundary", json::object());
  rc.beta = complex_from_json(get_or(bnd, "beta", 1.0));
  rc.eta = complex_from_json(get_or(bnd, "eta", 1.0));
  if (std::abs(std::abs(rc.beta) - 1.0) > 1e-12 || std::abs(std::abs(rc.eta) - 1.0) > 1e-12)
    throw ConfigError("config: boundary values must have unit modulus");
  rc.seed = seed_override ? *seed_override : as<std::uint64_t>(get_or(j, "seed", 1), "seed");
  rc.block = normalise_block(command, get_or(j, command.c_str(), json::object()), rc.f.dim());

  rc.config = json::object();
  rc.config["sampling"] = sampling_to_json(rc.f);
  rc.config["frequency"] = {{"w", real_list(rc.freq.w)}, {"p", rc.freq.p}, {"q", rc.freq.q}, {"k_max", rc.freq.k_max}};
  rc.config["boundary"] = {{"beta", complex_to_json(rc.beta)}, {"eta", complex_to_json(rc.eta)}};
  rc.config["seed"] = rc.seed;
  rc.config[command] = rc.block;
  return rc;
}

json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open config file " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + p.string() + " is not valid JSON: " + e.what());
  }
}

OutputSet::OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec || !std::filesystem::is_directory(dir_)) throw ConfigError("cannot create output directory " + dir_.string());
}

void OutputSet::add(const std::string& name, const std::string& content) {
  std::ofstream out(dir_ / name, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + (dir_ / name).string());
  out << content;
  files_.emplace_back(name, fnv1a64(content));
}

void OutputSet::write_manifest(const RunConfig& cfg) const {
  json m;
  m["command"] = cfg.command;
  m["config"] = cfg.config;
  m["outputs"] = json::array();
  std::string all;
  for (const auto& [name, h] : files_) {
    m["outputs"].push_back({{"file", name}, {"fnv1a64", hex64(h)}});
    all += name + ":" + hex64(h) + "\n";
  }
  m["content_hash"] = hex64(fnv1a64(all));
  std::ofstream out(dir_ / "manifest.json", std::ios::binary);
  if (!out) throw ConfigError("cannot write manifest in " + dir_.string());
  out << m.dump(2) << '\n';
}

}  // namespace cmvspec
