#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "advdrive/commands.hpp"
#include "advdrive/config.hpp"

namespace {

using advdrive::CommandOptions;
using advdrive::CommandResult;

struct RawFlags {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> episodes;
  std::optional<int> gamma_test;
  std::optional<int> threads;
  std::string method = "ours";
  std::vector<std::string> perturbs;
  std::string victim;
  std::vector<std::string> adversaries;
  bool include_none = false;
  bool include_ra = false;
};

// defaults < config file < ADVDRIVE_* environment < command line
CommandOptions resolve(const RawFlags& f) {
  CommandOptions o;
  advdrive::ExperimentConfig& c = o.config;
  if (!f.config_path.empty()) advdrive::apply_config_file(c, f.config_path);
  advdrive::apply_env_overrides(c);
  for (const std::string& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw advdrive::ConfigError("--set expects key=value, got '" + kv + "'");
    }
    advdrive::apply_config_text(c, kv, "--set");
  }
  if (f.seed) c.seeds = {*f.seed};
  if (f.out) c.out_dir = *f.out;
  if (f.episodes) c.eval_episodes = *f.episodes;
  if (f.gamma_test) c.gamma_test = *f.gamma_test;
  if (f.threads) c.eval_threads = *f.threads;
  c.validate();
  o.method = advdrive::parse_attack_method(f.method);
  for (const std::string& p : f.perturbs) {
    o.perturbs.push_back(advdrive::parse_perturb_method(p));
  }
  o.victim_path = f.victim;
  o.adversary_paths = f.adversaries;
  o.include_none = f.include_none;
  o.include_ra = f.include_ra;
  return o;
}

void add_common(CLI::App* cmd, RawFlags& f) {
  cmd->add_option("--config", f.config_path, "key = value config file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", f.sets, "override one key, e.g. --set env.arrival_p=0.7");
  cmd->add_option("--seed", f.seed, "global seed");
  cmd->add_option("--out", f.out, "output directory");
}

void add_eval(CLI::App* cmd, RawFlags& f) {
  cmd->add_option("--episodes", f.episodes, "evaluation episodes per seed");
  cmd->add_option("--gamma-test", f.gamma_test, "attack budget at test time");
  cmd->add_option("--threads", f.threads, "evaluation worker threads");
}

void add_perturb(CLI::App* cmd, RawFlags& f, bool many) {
  auto* opt = cmd->add_option("--perturb", f.perturbs, "fgsm or pgd")
                  ->check(CLI::IsMember({"fgsm", "pgd"}, CLI::ignore_case));
  if (!many) opt->expected(1);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Budgeted adversarial attacks on a left-turn driving policy"};
  app.require_subcommand(1);
  RawFlags f;
  const std::vector<std::string> all_methods = {"ours", "ua", "ama", "ra", "none"};

  auto* tv = app.add_subcommand("train-victim", "train the PPO driving policy");
  add_common(tv, f);

  auto* ta = app.add_subcommand("train-adversary", "train ours, ua or ama");
  add_common(ta, f);
  add_perturb(ta, f, false);
  ta->add_option("--victim", f.victim, "victim checkpoint")->required();
  ta->add_option("--method", f.method, "ours, ua or ama")
      ->check(CLI::IsMember({"ours", "ua", "ama"}, CLI::ignore_case));

  auto* ev = app.add_subcommand("evaluate", "evaluate one attacker");
  add_common(ev, f);
  add_eval(ev, f);
  add_perturb(ev, f, false);
  ev->add_option("--victim", f.victim, "victim checkpoint")->required();
  ev->add_option("--adversary", f.adversaries, "adversary checkpoint")
      ->expected(0, 1);
  ev->add_option("--method", f.method, "ours, ua, ama, ra or none")
      ->check(CLI::IsMember(all_methods, CLI::ignore_case));

  auto* cmp = app.add_subcommand("compare", "table of several attackers");
  add_common(cmp, f);
  add_eval(cmp, f);
  add_perturb(cmp, f, true);
  cmp->add_option("--victim", f.victim, "victim checkpoint")->required();
  cmp->add_option("--adversary", f.adversaries, "adversary checkpoints");
  cmp->add_flag("--include-none", f.include_none, "add the no-attack row");
  cmp->add_flag("--include-ra", f.include_ra, "add random-attack rows");

  auto* sg = app.add_subcommand("sweep-gamma", "train and evaluate per budget");
  add_common(sg, f);
  add_eval(sg, f);
  add_perturb(sg, f, false);
  sg->add_option("--victim", f.victim, "victim checkpoint")->required();
  sg->add_option("--method", f.method, "ours or ama")
      ->check(CLI::IsMember({"ours", "ama"}, CLI::ignore_case));

  auto* sgt = app.add_subcommand("sweep-gamma-test", "vary the test budget");
  add_common(sgt, f);
  add_eval(sgt, f);
  add_perturb(sgt, f, true);
  sgt->add_option("--victim", f.victim, "victim checkpoint")->required();
  sgt->add_option("--adversary", f.adversaries, "adversary checkpoint")
      ->required()
      ->expected(1);

  auto* sd = app.add_subcommand("sweep-density", "attackers x arrival rates");
  add_common(sd, f);
  add_eval(sd, f);
  add_perturb(sd, f, true);
  sd->add_option("--victim", f.victim, "victim checkpoint")->required();
  sd->add_option("--adversary", f.adversaries, "adversary checkpoints");
  sd->add_flag("--include-none", f.include_none, "add the no-attack rows");
  sd->add_flag("--include-ra", f.include_ra, "add random-attack rows");

  CLI11_PARSE(app, argc, argv);

  try {
    const CommandOptions o = resolve(f);
    CommandResult r;
    if (tv->parsed()) r = advdrive::cmd_train_victim(o);
    if (ta->parsed()) r = advdrive::cmd_train_adversary(o);
    if (ev->parsed()) r = advdrive::cmd_evaluate(o);
    if (cmp->parsed()) r = advdrive::cmd_compare(o);
    if (sg->parsed()) r = advdrive::cmd_sweep_gamma(o);
    if (sgt->parsed()) r = advdrive::cmd_sweep_gamma_test(o);
    if (sd->parsed()) r = advdrive::cmd_sweep_density(o);
    std::cout << r.summary << "\n";
    for (const std::string& file : r.files) std::cout << "wrote " << file << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
