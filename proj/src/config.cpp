#include "advdrive/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "advdrive/io.hpp"

extern char** environ;

namespace advdrive {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  T value{};
  const char* first = s.data();
  const char* last = s.data() + s.size();
  // from_chars rejects a leading '+', accept it for hand-written files.
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (s.empty() || res.ec != std::errc() || res.ptr != last) {
    throw ConfigError(key + ": cannot parse '" + text + "' as a number");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  std::string s = trim(text);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(key, item));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(xs[i]);
    } else {
      out += std::to_string(xs[i]);
    }
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&,
                                  const std::string&)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Entry {
  std::string key;
  Setter set;
  Getter get;
};

template <typename T, typename Access>
Entry number(std::string key, Access access) {
  return {std::move(key),
          [access](ExperimentConfig& c, const std::string& k,
                   const std::string& v) { access(c) = parse_number<T>(k, v); },
          [access](const ExperimentConfig& c) {
            const T v = access(const_cast<ExperimentConfig&>(c));
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(v);
            } else {
              return std::to_string(v);
            }
          }};
}

void add_ppo(std::vector<Entry>& out, const std::string& prefix,
             PpoConfig ExperimentConfig::*member) {
  auto field = [member](auto ptr) {
    return [member, ptr](ExperimentConfig& c) -> auto& {
      return (c.*member).*ptr;
    };
  };
  out.push_back(number<double>(prefix + ".gamma", field(&PpoConfig::gamma)));
  out.push_back(number<double>(prefix + ".lambda", field(&PpoConfig::lambda)));
  out.push_back(
      number<double>(prefix + ".eps_clip", field(&PpoConfig::eps_clip)));
  out.push_back(number<double>(prefix + ".c1", field(&PpoConfig::c1)));
  out.push_back(number<double>(prefix + ".c2", field(&PpoConfig::c2)));
  out.push_back(
      number<int>(prefix + ".epochs", field(&PpoConfig::epochs_per_update)));
  out.push_back(
      number<int>(prefix + ".minibatch", field(&PpoConfig::minibatch_size)));
  out.push_back(number<double>(prefix + ".learning_rate",
                               field(&PpoConfig::learning_rate)));
  out.push_back(
      number<int>(prefix + ".horizon", field(&PpoConfig::rollout_horizon)));
  out.push_back(number<std::int64_t>(prefix + ".total_steps",
                                     field(&PpoConfig::total_steps)));
  out.push_back(number<double>(prefix + ".max_grad_norm",
                               field(&PpoConfig::max_grad_norm)));
  out.push_back(number<double>(prefix + ".init_log_std",
                               field(&PpoConfig::init_log_std)));
  out.push_back({prefix + ".hidden",
                 [member](ExperimentConfig& c, const std::string& k,
                          const std::string& v) {
                   (c.*member).hidden_layers = parse_list<int>(k, v);
                 },
                 [member](const ExperimentConfig& c) {
                   return join((c.*member).hidden_layers);
                 }});
}

std::vector<Entry> build_registry() {
  std::vector<Entry> r;
  auto env = [](auto ptr) {
    return [ptr](ExperimentConfig& c) -> auto& { return c.env.*ptr; };
  };
  r.push_back(number<double>("env.v_max", env(&EnvConfig::v_max)));
  r.push_back(number<double>("env.beta", env(&EnvConfig::beta)));
  r.push_back(number<double>("env.dt", env(&EnvConfig::dt)));
  r.push_back(number<double>("env.arrival_p", env(&EnvConfig::arrival_p)));
  r.push_back(number<int>("env.t_max", env(&EnvConfig::t_max)));
  r.push_back(
      number<double>("env.sense_radius", env(&EnvConfig::sense_radius)));
  r.push_back(
      number<double>("env.vehicle_length", env(&EnvConfig::vehicle_length)));
  r.push_back(
      number<double>("env.vehicle_width", env(&EnvConfig::vehicle_width)));
  r.push_back(number<double>("env.cross_speed", env(&EnvConfig::cross_speed)));
  r.push_back(
      number<double>("env.route_length", env(&EnvConfig::route_length)));

  add_ppo(r, "victim", &ExperimentConfig::victim_ppo);
  add_ppo(r, "adversary", &ExperimentConfig::adversary_ppo);

  r.push_back(number<int>("attack.gamma_budget",
                          [](ExperimentConfig& c) -> int& {
                            return c.gamma_budget;
                          }));
  r.push_back({"attack.gamma_test",
               [](ExperimentConfig& c, const std::string& k,
                  const std::string& v) {
                 const std::string s = trim(v);
                 if (s.empty() || s == "auto") {
                   c.gamma_test.reset();
                 } else {
                   c.gamma_test = parse_number<int>(k, s);
                 }
               },
               [](const ExperimentConfig& c) {
                 return c.gamma_test ? std::to_string(*c.gamma_test)
                                     : std::string("auto");
               }});
  r.push_back({"attack.terminate_on_exhaustion",
               [](ExperimentConfig& c, const std::string& k,
                  const std::string& v) {
                 c.clipping.terminate = parse_bool(k, v);
               },
               [](const ExperimentConfig& c) {
                 return std::string(c.clipping.terminate ? "true" : "false");
               }});
  r.push_back(number<int>("attack.clip_grace",
                          [](ExperimentConfig& c) -> int& {
                            return c.clipping.grace_steps;
                          }));

  r.push_back({"perturb.method",
               [](ExperimentConfig& c, const std::string& k,
                  const std::string& v) {
                 try {
                   c.perturb.method = parse_perturb_method(trim(v));
                 } catch (const std::invalid_argument& e) {
                   throw ConfigError(k + ": " + e.what());
                 }
               },
               [](const ExperimentConfig& c) {
                 return to_string(c.perturb.method);
               }});
  r.push_back(number<double>("perturb.eps", [](ExperimentConfig& c) -> double& {
    return c.perturb.eps_pert;
  }));
  r.push_back(number<int>("perturb.pgd_steps", [](ExperimentConfig& c) -> int& {
    return c.perturb.pgd_steps;
  }));
  r.push_back({"perturb.pgd_alpha",
               [](ExperimentConfig& c, const std::string& k,
                  const std::string& v) {
                 const std::string s = trim(v);
                 if (s.empty() || s == "auto") {
                   c.perturb.pgd_alpha.reset();
                 } else {
                   c.perturb.pgd_alpha = parse_number<double>(k, s);
                 }
               },
               [](const ExperimentConfig& c) {
                 return c.perturb.pgd_alpha ? format_double(*c.perturb.pgd_alpha)
                                            : std::string("auto");
               }});

  r.push_back(number<double>("metrics.k", [](ExperimentConfig& c) -> double& {
    return c.metrics_k;
  }));
  r.push_back(number<int>("eval.episodes", [](ExperimentConfig& c) -> int& {
    return c.eval_episodes;
  }));
  r.push_back(number<int>("eval.threads", [](ExperimentConfig& c) -> int& {
    return c.eval_threads;
  }));

  r.push_back({"seeds",
               [](ExperimentConfig& c, const std::string& k,
                  const std::string& v) {
                 c.seeds = parse_list<std::uint64_t>(k, v);
               },
               [](const ExperimentConfig& c) { return join(c.seeds); }});
  r.push_back({"out",
               [](ExperimentConfig& c, const std::string& k,
                  const std::string& v) {
                 c.out_dir = trim(v);
                 if (c.out_dir.empty()) throw ConfigError(k + ": empty path");
               },
               [](const ExperimentConfig& c) { return c.out_dir; }});

  r.push_back({"sweep.gammas",
               [](ExperimentConfig& c, const std::string& k,
                  const std::string& v) {
                 c.sweep_gammas = parse_list<int>(k, v);
               },
               [](const ExperimentConfig& c) { return join(c.sweep_gammas); }});
  r.push_back({"sweep.gamma_tests",
               [](ExperimentConfig& c, const std::string& k,
                  const std::string& v) {
                 c.sweep_gamma_tests = parse_list<int>(k, v);
               },
               [](const ExperimentConfig& c) {
                 return join(c.sweep_gamma_tests);
               }});
  r.push_back({"sweep.densities",
               [](ExperimentConfig& c, const std::string& k,
                  const std::string& v) {
                 c.sweep_densities = parse_list<double>(k, v);
               },
               [](const ExperimentConfig& c) {
                 return join(c.sweep_densities);
               }});
  return r;
}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> r = build_registry();
  return r;
}

const Entry& find_entry(const std::string& key) {
  for (const Entry& e : registry()) {
    if (e.key == key) return e;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

AttackSettings ExperimentConfig::attack_settings(AttackMethod method) const {
  AttackSettings s;
  s.method = method;
  s.gamma_budget = gamma_budget;
  s.perturb = perturb;
  s.clipping = clipping;
  return s;
}

void ExperimentConfig::validate() const {
  try {
    env.validate();
    victim_ppo.validate();
    adversary_ppo.validate();
    perturb.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (gamma_budget < 0) throw ConfigError("attack.gamma_budget must be >= 0");
  if (gamma_test && *gamma_test < 0) {
    throw ConfigError("attack.gamma_test must be >= 0");
  }
  if (clipping.grace_steps < 0) {
    throw ConfigError("attack.clip_grace must be >= 0");
  }
  if (!(metrics_k >= 0.0)) throw ConfigError("metrics.k must be >= 0");
  if (eval_episodes < 1) throw ConfigError("eval.episodes must be >= 1");
  if (eval_threads < 1) throw ConfigError("eval.threads must be >= 1");
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  for (int g : sweep_gammas) {
    if (g < 0) throw ConfigError("sweep.gammas entries must be >= 0");
  }
  for (int g : sweep_gamma_tests) {
    if (g < 0) throw ConfigError("sweep.gamma_tests entries must be >= 0");
  }
  for (double p : sweep_densities) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ConfigError("sweep.densities entries must lie in [0, 1]");
    }
  }
}

const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const Entry& e : registry()) out.push_back(e.key);
    return out;
  }();
  return k;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  find_entry(key).set(*this, key, value);
}

std::string ExperimentConfig::get(const std::string& key) const {
  return find_entry(key).get(*this);
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  for (const Entry& e : registry()) out += e.key + " = " + e.get(*this) + "\n";
  return out;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json doc = nlohmann::json::object();
  for (const Entry& e : registry()) doc[e.key] = e.get(*this);
  return doc;
}

void apply_config_text(ExperimentConfig& config, const std::string& text,
                       const std::string& source) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(number) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where + "expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      config.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
}

void apply_config_file(ExperimentConfig& config, const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  apply_config_text(config, text, path);
}

std::string env_var_name(const std::string& key) {
  std::string out = "ADVDRIVE_";
  for (char c : key) {
    out.push_back(c == '.' ? '_'
                           : static_cast<char>(std::toupper(
                                 static_cast<unsigned char>(c))));
  }
  return out;
}

void apply_env_overrides(ExperimentConfig& config,
                         const std::map<std::string, std::string>& vars) {
  for (const std::string& key : ExperimentConfig::keys()) {
    const auto it = vars.find(env_var_name(key));
    if (it == vars.end()) continue;
    try {
      config.set(key, it->second);
    } catch (const ConfigError& e) {
      throw ConfigError(it->first + ": " + e.what());
    }
  }
}

void apply_env_overrides(ExperimentConfig& config) {
  std::map<std::string, std::string> vars;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    const std::string entry(*e);
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    if (entry.compare(0, 9, "ADVDRIVE_") != 0) continue;
    vars.emplace(entry.substr(0, eq), entry.substr(eq + 1));
  }
  apply_env_overrides(config, vars);
}

}  // namespace advdrive
