#pragma once

// Flat key = value configuration files. Grammar in docs/config.md.

#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "poemlab/runner.hpp"
#include "poemlab/theory.hpp"

namespace poemlab {

using KeyValues = std::map<std::string, std::string>;

// Throws ConfigError (field "line N") on malformed lines or duplicate keys.
KeyValues parse_key_values(std::istream& in);
// Throws ConfigError whose message contains the path if it cannot be read.
KeyValues load_key_values(const std::filesystem::path& path);

// Typed value parsers. `field` names the key in error messages.
double parse_double(const std::string& field, const std::string& value);
std::size_t parse_size(const std::string& field, const std::string& value);
std::uint64_t parse_u64(const std::string& field, const std::string& value);
bool parse_bool(const std::string& field, const std::string& value);
std::vector<std::string> split_list(const std::string& value);

// Sets one RunConfig field; false if the key is not a run key.
bool apply_run_key(RunConfig& config, const std::string& key, const std::string& value);
// Unknown keys are a ConfigError unless listed in `extra_keys`.
RunConfig run_config_from(const KeyValues& kv, const std::vector<std::string>& extra_keys = {});
// Every run key with its current value; parses back to the same config.
KeyValues to_key_values(const RunConfig& config);
std::string format_key_values(const KeyValues& kv);

struct TheoremSetup {
  TheoryConfig config;
  VerifyOptions options;
};

// Keys: dim, mu_norm, sigma, n, n_prime, epsilon, trials, test_draws,
// error_rate_trials, seed, constraint (conditional | rejection).
TheoremSetup theorem_setup_from(const KeyValues& kv);

// Sweep description for `compare`: run keys plus samplers and seeds lists.
struct Manifest {
  RunConfig base;
  std::vector<SamplerKind> samplers{SamplerKind::kThompson, SamplerKind::kRandom};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  bool plots = true;
};

Manifest manifest_from(const KeyValues& kv);

}  // namespace poemlab
