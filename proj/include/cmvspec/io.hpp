#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "cmvspec/multiscale.hpp"
#include "cmvspec/torus.hpp"

namespace cmvspec {

using json = nlohmann::json;

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

// Accepts a number, [re, im] or {"re": .., "im": ..}.
cplx complex_from_json(const json& j);
json complex_to_json(cplx z);

// {"dim", "h"?, "coeffs": [{"k": [...], "re", "im"}]} or
// {"preset": "zero" | "constant" | "strong_coupling", ...}.
SamplingFunction sampling_from_json(const json& j);
json sampling_to_json(const SamplingFunction& f);

// {"w": [...] | "preset": "strong_coupling" | "golden", "p", "q", "k_max"}
Frequency frequency_from_json(const json& j, int dim);

ScaleSchedule schedule_from_json(const json& j);
json schedule_to_json(const ScaleSchedule& s);

json check_to_json(const Check& c);

struct RunConfig {
  std::string command;
  json config;  // normalised: every default written out
  SamplingFunction f;
  Frequency freq;
  cplx beta = 1.0, eta = 1.0;
  std::uint64_t seed = 1;
  json block;   // config[command]
};

// Reads a config file or a manifest written by a previous run. seed_override
// replaces the configured seed when given.
RunConfig load_config(const json& j, const std::string& command, const std::uint64_t* seed_override = nullptr);
json read_json_file(const std::filesystem::path& p);

// Output files accumulate here; write_manifest records each file's hash and
// a hash over all of them.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir);
  void add(const std::string& name, const std::string& content);
  void write_manifest(const RunConfig& cfg) const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::uint64_t>> files_;
};

// ostringstream with the classic locale and round-trip precision.
std::string format_double(double v);

}  // namespace cmvspec
