#include "advdrive/commands.hpp"

#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "advdrive/experiment.hpp"
#include "advdrive/io.hpp"
#include "advdrive/metrics.hpp"

namespace advdrive {

namespace {

namespace fs = std::filesystem;

class Writer {
 public:
  explicit Writer(const ExperimentConfig& config)
      : dir_(config.out_dir), header_(config_comment(config)) {
    fs::create_directories(dir_);
  }

  // Text file with the resolved config as leading '#' lines.
  void csv(const std::string& name, const std::string& body) {
    write(name, header_ + body);
  }

  void json(const std::string& name, const nlohmann::json& doc) {
    write(name, dump_json(doc));
  }

  void write(const std::string& name, const std::string& content) {
    const std::string path = (dir_ / name).string();
    write_text_file(path, content);
    result.files.push_back(path);
  }

  CommandResult result;

 private:
  fs::path dir_;
  std::string header_;
};

std::string fmt2(double x) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(2);
  s << x;
  return s.str();
}

std::string summarize(const MetricsReport& r) {
  std::string s = r.provenance.method;
  if (r.provenance.perturb_method) s += "/" + *r.provenance.perturb_method;
  s += ": SR " + fmt2(r.sr) + " CR " + fmt2(r.cr);
  if (r.attacked) s += " ANA " + fmt2(r.ana.mean) + " AE " + fmt2(r.ae);
  return s;
}

std::string reports_csv(const std::vector<MetricsReport>& reports) {
  std::ostringstream out;
  write_reports_csv(out, reports);
  return out.str();
}

nlohmann::json reports_json(const std::vector<MetricsReport>& reports,
                            const ExperimentConfig& config) {
  nlohmann::json doc;
  doc["config"] = config.to_json();
  doc["reports"] = nlohmann::json::array();
  for (const MetricsReport& r : reports) {
    doc["reports"].push_back(report_to_json(r));
  }
  return doc;
}

void require_victim_path(const CommandOptions& o) {
  if (o.victim_path.empty()) throw std::runtime_error("--victim is required");
}

// Attackers for one adversary file, one per requested perturbation method.
std::vector<AttackerSpec> specs_for(const AdversaryAgent& adv,
                                    const CommandOptions& o) {
  if (!uses_perturbation(adv.method()) || o.perturbs.empty()) {
    return {{adv.method(), &adv, adv.settings.perturb}};
  }
  std::vector<AttackerSpec> out;
  for (PerturbMethod m : o.perturbs) {
    PerturbConfig p = adv.settings.perturb;
    p.method = m;
    out.push_back({adv.method(), &adv, p});
  }
  return out;
}

std::vector<AttackerSpec> ra_specs(const CommandOptions& o) {
  if (o.perturbs.empty()) {
    return {{AttackMethod::kRa, nullptr, o.config.perturb}};
  }
  std::vector<AttackerSpec> out;
  for (PerturbMethod m : o.perturbs) {
    PerturbConfig p = o.config.perturb;
    p.method = m;
    out.push_back({AttackMethod::kRa, nullptr, p});
  }
  return out;
}

std::vector<AdversaryAgent> load_adversaries(const CommandOptions& o,
                                             const LoadedVictim& victim) {
  std::vector<AdversaryAgent> out;
  for (const std::string& path : o.adversary_paths) {
    out.push_back(load_adversary(path));
    if (!out.back().victim_hash.empty() &&
        out.back().victim_hash != victim.hash) {
      throw std::runtime_error(path +
                               ": adversary was trained against a different "
                               "victim checkpoint");
    }
  }
  return out;
}

std::vector<AttackerSpec> attacker_set(const CommandOptions& o,
                                       const std::vector<AdversaryAgent>& advs) {
  std::vector<AttackerSpec> specs;
  if (o.include_none) specs.push_back({AttackMethod::kNone, nullptr, {}});
  for (const AdversaryAgent& a : advs) {
    for (const AttackerSpec& s : specs_for(a, o)) specs.push_back(s);
  }
  if (o.include_ra) {
    for (const AttackerSpec& s : ra_specs(o)) specs.push_back(s);
  }
  if (specs.empty()) {
    throw std::runtime_error(
        "no attackers: pass --adversary, --include-none or --include-ra");
  }
  return specs;
}

}  // namespace

LoadedVictim load_victim(const std::string& path) {
  if (!fs::exists(path)) {
    throw std::runtime_error("victim checkpoint not found: " + path);
  }
  const std::string text = read_text_file(path);
  try {
    return {victim_from_json(nlohmann::json::parse(text)), sha256_hex(text)};
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

AdversaryAgent load_adversary(const std::string& path) {
  if (!fs::exists(path)) {
    throw std::runtime_error("adversary checkpoint not found: " + path);
  }
  const std::string text = read_text_file(path);
  try {
    return adversary_from_json(nlohmann::json::parse(text));
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

CommandResult cmd_train_victim(const CommandOptions& o) {
  const ExperimentConfig& c = o.config;
  c.validate();
  VictimTraining t = train_victim(c.env, c.victim_ppo, c.seed());
  Writer w(c);
  const std::string text = dump_json(victim_to_json(t.agent));
  w.write("victim.json", text);
  w.json("victim.manifest.json", victim_manifest(t.agent, text, c));
  std::ostringstream log;
  write_training_log_csv(log, t.log);
  w.csv("victim_training.csv", log.str());
  w.result.summary = "victim trained: " + std::to_string(t.log.episodes) +
                     " episodes, sha256 " + sha256_hex(text);
  return w.result;
}

CommandResult cmd_train_adversary(const CommandOptions& o) {
  const ExperimentConfig& c = o.config;
  c.validate();
  if (!has_adversary_policy(o.method)) {
    throw std::runtime_error("train-adversary supports ours, ua and ama, not " +
                             to_string(o.method));
  }
  require_victim_path(o);
  const LoadedVictim victim = load_victim(o.victim_path);
  AttackSettings settings = c.attack_settings(o.method);
  if (o.perturbs.size() > 1) {
    throw std::runtime_error("train-adversary takes a single --perturb");
  }
  if (!o.perturbs.empty()) settings.perturb.method = o.perturbs.front();
  AdversaryTraining t = train_adversary(victim.agent, c.env, c.adversary_ppo,
                                        settings, c.seed(), victim.hash);
  Writer w(c);
  const std::string name = "adversary_" + to_string(o.method);
  const std::string text = dump_json(adversary_to_json(t.agent));
  w.write(name + ".json", text);
  w.json(name + ".manifest.json", adversary_manifest(t.agent, text, c));
  std::ostringstream log;
  write_training_log_csv(log, t.log);
  w.csv(name + "_training.csv", log.str());
  w.result.summary = to_string(o.method) + " adversary trained: " +
                     std::to_string(t.log.episodes) + " episodes, max " +
                     std::to_string(t.stats.max_launches_in_episode) +
                     " attacks in an episode";
  return w.result;
}

CommandResult cmd_evaluate(const CommandOptions& o) {
  const ExperimentConfig& c = o.config;
  c.validate();
  require_victim_path(o);
  const LoadedVictim victim = load_victim(o.victim_path);
  std::vector<AdversaryAgent> advs;
  AttackerSpec spec{o.method, nullptr, c.perturb};
  if (o.perturbs.size() > 1) {
    throw std::runtime_error("evaluate takes a single --perturb");
  }
  if (has_adversary_policy(o.method)) {
    if (o.adversary_paths.size() != 1) {
      throw std::runtime_error("method " + to_string(o.method) +
                               " needs exactly one --adversary");
    }
    advs = load_adversaries(o, victim);
    if (advs.front().method() != o.method) {
      throw std::runtime_error("adversary checkpoint holds method " +
                               to_string(advs.front().method()) + ", not " +
                               to_string(o.method));
    }
    spec = specs_for(advs.front(), o).front();
  } else if (o.method == AttackMethod::kRa) {
    spec = ra_specs(o).front();
  }
  EvalResult r = evaluate_attacker(victim.agent, victim.hash, c.env, spec,
                                   c.resolved_gamma_test(), c.eval_episodes,
                                   {c.seed()}, c.metrics_k, c.eval_threads);
  Writer w(c);
  std::string name = "eval_" + to_string(o.method);
  if (r.report.provenance.perturb_method) {
    name += "_" + *r.report.provenance.perturb_method;
  }
  w.csv(name + "_report.csv", reports_csv({r.report}));
  w.json(name + "_report.json", reports_json({r.report}, c));
  std::ostringstream episodes;
  write_episodes_csv(episodes, r.records);
  w.csv(name + "_episodes.csv", episodes.str());
  std::ostringstream steps;
  write_step_logs_csv(steps, r.records);
  w.csv(name + "_steps.csv", steps.str());
  w.result.summary = summarize(r.report);
  return w.result;
}

CommandResult cmd_compare(const CommandOptions& o) {
  const ExperimentConfig& c = o.config;
  c.validate();
  require_victim_path(o);
  const LoadedVictim victim = load_victim(o.victim_path);
  const std::vector<AdversaryAgent> advs = load_adversaries(o, victim);
  std::vector<MetricsReport> reports;
  for (const AttackerSpec& spec : attacker_set(o, advs)) {
    reports.push_back(evaluate_attacker(victim.agent, victim.hash, c.env, spec,
                                        c.resolved_gamma_test(),
                                        c.eval_episodes, {c.seed()},
                                        c.metrics_k, c.eval_threads)
                          .report);
  }
  sort_reports(reports);
  Writer w(c);
  w.csv("compare.csv", reports_csv(reports));
  w.json("compare.json", reports_json(reports, c));
  for (const MetricsReport& r : reports) {
    if (!w.result.summary.empty()) w.result.summary += "\n";
    w.result.summary += summarize(r);
  }
  return w.result;
}

CommandResult cmd_sweep_gamma(const CommandOptions& o) {
  const ExperimentConfig& c = o.config;
  c.validate();
  require_victim_path(o);
  if (!has_budget(o.method)) {
    throw std::runtime_error("sweep-gamma supports ours and ama");
  }
  const LoadedVictim victim = load_victim(o.victim_path);
  ExperimentConfig run = c;
  if (o.perturbs.size() > 1) {
    throw std::runtime_error("sweep-gamma takes a single --perturb");
  }
  if (!o.perturbs.empty()) run.perturb.method = o.perturbs.front();
  const std::vector<MetricsReport> rows =
      sweep_gamma(victim.agent, victim.hash, o.method, run);
  Writer w(c);
  w.csv("sweep_gamma.csv", reports_csv(rows));
  w.json("sweep_gamma.json", reports_json(rows, c));
  for (const MetricsReport& r : rows) {
    if (!w.result.summary.empty()) w.result.summary += "\n";
    w.result.summary += "gamma " + std::to_string(*r.provenance.gamma_budget) +
                        ": CR " + fmt2(r.cr) + " ANA " + fmt2(r.ana.mean);
  }
  return w.result;
}

CommandResult cmd_sweep_gamma_test(const CommandOptions& o) {
  const ExperimentConfig& c = o.config;
  c.validate();
  require_victim_path(o);
  if (o.adversary_paths.size() != 1) {
    throw std::runtime_error("sweep-gamma-test needs exactly one --adversary");
  }
  const LoadedVictim victim = load_victim(o.victim_path);
  const std::vector<AdversaryAgent> advs = load_adversaries(o, victim);
  if (!has_budget(advs.front().method())) {
    throw std::runtime_error("sweep-gamma-test needs an ours or ama adversary");
  }
  const std::vector<AttackerSpec> specs = specs_for(advs.front(), o);
  std::vector<MetricsReport> rows;
  for (const AttackerSpec& spec : specs) {
    for (MetricsReport& r : sweep_gamma_test(victim.agent, victim.hash, spec, c)) {
      rows.push_back(std::move(r));
    }
  }
  Writer w(c);
  w.csv("sweep_gamma_test.csv", reports_csv(rows));
  w.json("sweep_gamma_test.json", reports_json(rows, c));
  for (const MetricsReport& r : rows) {
    if (!w.result.summary.empty()) w.result.summary += "\n";
    w.result.summary += "gamma_test " +
                        std::to_string(*r.provenance.gamma_test) + ": CR " +
                        fmt2(r.cr) + " ANA " + fmt2(r.ana.mean);
  }
  return w.result;
}

CommandResult cmd_sweep_density(const CommandOptions& o) {
  const ExperimentConfig& c = o.config;
  c.validate();
  require_victim_path(o);
  const LoadedVictim victim = load_victim(o.victim_path);
  const std::vector<AdversaryAgent> advs = load_adversaries(o, victim);
  const std::vector<MetricsReport> rows =
      sweep_density(victim.agent, victim.hash, attacker_set(o, advs), c);
  Writer w(c);
  w.csv("sweep_density.csv", reports_csv(rows));
  w.json("sweep_density.json", reports_json(rows, c));
  for (const MetricsReport& r : rows) {
    if (!w.result.summary.empty()) w.result.summary += "\n";
    w.result.summary +=
        "p " + fmt2(r.provenance.arrival_p) + " " + summarize(r);
  }
  return w.result;
}

}  // namespace advdrive
