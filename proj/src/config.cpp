#include "poemlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "poemlab/errors.hpp"

namespace poemlab {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& field, const std::string& value) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(value)) out.push_back(parse_size(field, item));
  return out;
}

}  // namespace

KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = "line " + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where, "expected 'key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError(where, "empty key");
    for (char c : key)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_'))
        throw ConfigError(where, "invalid character in key '" + key + "'");
    if (!kv.emplace(key, value).second) throw ConfigError(key, "duplicate key on " + where);
  }
  return kv;
}

KeyValues load_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read config file " + path.string());
  return parse_key_values(in);
}

double parse_double(const std::string& field, const std::string& value) {
  double v = 0.0;
  const char* end = value.data() + value.size();
  auto res = std::from_chars(value.data(), end, v);
  if (value.empty() || res.ec != std::errc() || res.ptr != end)
    throw ConfigError(field, "expected a number, got '" + value + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& field, const std::string& value) {
  std::uint64_t v = 0;
  const char* end = value.data() + value.size();
  auto res = std::from_chars(value.data(), end, v);
  if (value.empty() || res.ec != std::errc() || res.ptr != end)
    throw ConfigError(field, "expected a non-negative integer, got '" + value + "'");
  return v;
}

std::size_t parse_size(const std::string& field, const std::string& value) {
  return static_cast<std::size_t>(parse_u64(field, value));
}

bool parse_bool(const std::string& field, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(field, "expected true or false, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  if (trim(value).empty()) return out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

bool apply_run_key(RunConfig& c, const std::string& key, const std::string& value) {
  if (key == "dataset") {
    c.dataset = parse_dataset(value);
  } else if (key == "sampler") {
    try {
      c.sampler = parse_sampler(value);
    } catch (const ConfigError&) {
      throw ConfigError("sampler", "unknown sampler '" + value + "'");
    }
  } else if (key == "epochs") {
    c.epochs = parse_size(key, value);
  } else if (key == "pool_size") {
    c.pool_size = parse_size(key, value);
  } else if (key == "mined_count") {
    c.mined_count = parse_size(key, value);
  } else if (key == "batch_size") {
    c.batch_size = parse_size(key, value);
  } else if (key == "queue_capacity") {
    c.queue_capacity = parse_size(key, value);
  } else if (key == "id_train") {
    c.id_train = parse_size(key, value);
  } else if (key == "aux_size") {
    c.aux_size = parse_size(key, value);
  } else if (key == "test_id") {
    c.test_id = parse_size(key, value);
  } else if (key == "test_ood") {
    c.test_ood = parse_size(key, value);
  } else if (key == "hidden") {
    c.hidden = parse_size_list(key, value);
  } else if (key == "lr") {
    c.learning_rate = parse_double(key, value);
  } else if (key == "momentum") {
    c.momentum = parse_double(key, value);
  } else if (key == "weight_decay") {
    c.weight_decay = parse_double(key, value);
  } else if (key == "m_in") {
    c.margins.m_in = parse_double(key, value);
  } else if (key == "m_out") {
    c.margins.m_out = parse_double(key, value);
  } else if (key == "beta") {
    c.margins.beta = parse_double(key, value);
  } else if (key == "prior_scale") {
    c.prior_scale = parse_double(key, value);
  } else if (key == "noise_var") {
    c.noise_var = parse_double(key, value);
  } else if (key == "seed") {
    c.seed = parse_u64(key, value);
  } else if (key == "stop_epoch") {
    if (value == "none" || value.empty())
      c.stop_epoch.reset();
    else
      c.stop_epoch = parse_size(key, value);
  } else if (key == "snapshot_epochs") {
    c.snapshot_epochs = parse_size_list(key, value);
  } else if (key == "toy_sd") {
    c.toy.class_sd = parse_double(key, value);
  } else if (key == "toy_exclusion") {
    c.toy.exclusion_radius = parse_double(key, value);
  } else if (key == "toy_box") {
    const double half = parse_double(key, value);
    c.toy.box_lo = -half;
    c.toy.box_hi = half;
  } else if (key == "theory_dim") {
    c.theory_dim = parse_size(key, value);
  } else if (key == "mu_norm") {
    c.mu_norm = parse_double(key, value);
  } else if (key == "theory_sigma") {
    c.theory_sigma = parse_double(key, value);
  } else if (key == "s_range") {
    c.s_range = parse_double(key, value);
  } else if (key == "g_range") {
    c.g_range = parse_double(key, value);
  } else if (key == "v_norm") {
    c.v_norm = parse_double(key, value);
  } else {
    return false;
  }
  return true;
}

RunConfig run_config_from(const KeyValues& kv, const std::vector<std::string>& extra_keys) {
  RunConfig c;
  for (const auto& [key, value] : kv) {
    if (apply_run_key(c, key, value)) continue;
    if (std::find(extra_keys.begin(), extra_keys.end(), key) != extra_keys.end()) continue;
    throw ConfigError(key, "unknown key");
  }
  return c;
}

KeyValues to_key_values(const RunConfig& c) {
  KeyValues kv;
  kv["dataset"] = to_string(c.dataset);
  kv["sampler"] = to_string(c.sampler);
  kv["epochs"] = std::to_string(c.epochs);
  kv["pool_size"] = std::to_string(c.pool_size);
  kv["mined_count"] = std::to_string(c.mined_count);
  kv["batch_size"] = std::to_string(c.batch_size);
  kv["queue_capacity"] = std::to_string(c.queue_capacity);
  kv["id_train"] = std::to_string(c.id_train);
  kv["aux_size"] = std::to_string(c.aux_size);
  kv["test_id"] = std::to_string(c.test_id);
  kv["test_ood"] = std::to_string(c.test_ood);
  kv["hidden"] = join(c.hidden);
  kv["lr"] = shortest(c.learning_rate);
  kv["momentum"] = shortest(c.momentum);
  kv["weight_decay"] = shortest(c.weight_decay);
  kv["m_in"] = shortest(c.margins.m_in);
  kv["m_out"] = shortest(c.margins.m_out);
  kv["beta"] = shortest(c.margins.beta);
  kv["prior_scale"] = shortest(c.prior_scale);
  kv["noise_var"] = shortest(c.noise_var);
  kv["seed"] = std::to_string(c.seed);
  kv["stop_epoch"] = c.stop_epoch ? std::to_string(*c.stop_epoch) : "none";
  kv["snapshot_epochs"] = join(c.snapshot_epochs);
  kv["toy_sd"] = shortest(c.toy.class_sd);
  kv["toy_exclusion"] = shortest(c.toy.exclusion_radius);
  kv["toy_box"] = shortest(c.toy.box_hi);
  kv["theory_dim"] = std::to_string(c.theory_dim);
  kv["mu_norm"] = shortest(c.mu_norm);
  kv["theory_sigma"] = shortest(c.theory_sigma);
  kv["s_range"] = shortest(c.s_range);
  kv["g_range"] = shortest(c.g_range);
  kv["v_norm"] = shortest(c.v_norm);
  return kv;
}

std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

TheoremSetup theorem_setup_from(const KeyValues& kv) {
  std::size_t dim = 20;
  double sigma = 1.0;
  double mu_norm = 10.0;
  TheoremSetup s;
  for (const auto& [key, value] : kv) {
    if (key == "dim") {
      dim = parse_size(key, value);
    } else if (key == "mu_norm") {
      mu_norm = parse_double(key, value);
    } else if (key == "sigma") {
      sigma = parse_double(key, value);
    } else if (key == "n") {
      s.config.n = parse_size(key, value);
    } else if (key == "n_prime") {
      s.config.n_prime = parse_size(key, value);
    } else if (key == "epsilon") {
      s.config.epsilon = parse_double(key, value);
    } else if (key == "trials") {
      s.options.trials = parse_size(key, value);
    } else if (key == "test_draws") {
      s.options.test_draws = parse_size(key, value);
    } else if (key == "error_rate_trials") {
      s.options.error_rate_trials = parse_size(key, value);
    } else if (key == "seed") {
      s.options.seed = parse_u64(key, value);
    } else if (key == "constraint") {
      if (value == "conditional")
        s.options.constraint = ConstraintMethod::kConditional;
      else if (value == "rejection")
        s.options.constraint = ConstraintMethod::kRejection;
      else
        throw ConfigError(key, "expected conditional or rejection, got '" + value + "'");
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
  if (dim == 0) throw ConfigError("dim", "must be at least 1");
  if (!(sigma > 0.0)) throw ConfigError("sigma", "must be positive");
  if (!(mu_norm > 0.0)) throw DegenerateMu("mu_norm must be positive");
  const TheoryConfig shape = TheoryConfig::axis_aligned(dim, mu_norm, sigma);
  s.config.mu = shape.mu;
  s.config.sigma = sigma;
  return s;
}

Manifest manifest_from(const KeyValues& kv) {
  Manifest m;
  m.base = run_config_from(kv, {"samplers", "seeds", "plots"});
  if (auto it = kv.find("samplers"); it != kv.end()) {
    m.samplers.clear();
    for (const auto& s : split_list(it->second)) {
      try {
        m.samplers.push_back(parse_sampler(s));
      } catch (const ConfigError&) {
        throw ConfigError("samplers", "unknown sampler '" + s + "'");
      }
    }
    if (m.samplers.empty()) throw ConfigError("samplers", "must list at least one sampler");
  }
  if (auto it = kv.find("seeds"); it != kv.end()) {
    m.seeds.clear();
    for (const auto& s : split_list(it->second)) m.seeds.push_back(parse_u64("seeds", s));
    if (m.seeds.empty()) throw ConfigError("seeds", "must list at least one seed");
  }
  if (auto it = kv.find("plots"); it != kv.end()) m.plots = parse_bool("plots", it->second);
  return m;
}

}  // namespace poemlab
