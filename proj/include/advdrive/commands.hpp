#ifndef ADVDRIVE_COMMANDS_HPP_
#define ADVDRIVE_COMMANDS_HPP_

#include <optional>
#include <string>
#include <vector>

#include "advdrive/adversary.hpp"
#include "advdrive/config.hpp"
#include "advdrive/perturb.hpp"

namespace advdrive {

// Inputs shared by the commands. Outputs go to config.out_dir.
struct CommandOptions {
  ExperimentConfig config;
  std::string victim_path;
  std::vector<std::string> adversary_paths;
  AttackMethod method = AttackMethod::kOurs;
  // Evaluation-time perturbation methods. Empty: each adversary keeps the
  // one it was trained with; RA uses perturb.method.
  std::vector<PerturbMethod> perturbs;
  bool include_none = false;  // compare / sweep-density
  bool include_ra = false;
};

struct CommandResult {
  std::vector<std::string> files;  // in write order
  std::string summary;             // one line for the terminal
};

CommandResult cmd_train_victim(const CommandOptions& options);
CommandResult cmd_train_adversary(const CommandOptions& options);
CommandResult cmd_evaluate(const CommandOptions& options);
CommandResult cmd_compare(const CommandOptions& options);
CommandResult cmd_sweep_gamma(const CommandOptions& options);
CommandResult cmd_sweep_gamma_test(const CommandOptions& options);
CommandResult cmd_sweep_density(const CommandOptions& options);

struct LoadedVictim {
  VictimAgent agent;
  std::string hash;  // sha256 of the checkpoint file
};

// Throw std::runtime_error naming the path.
LoadedVictim load_victim(const std::string& path);
AdversaryAgent load_adversary(const std::string& path);

}  // namespace advdrive

#endif  // ADVDRIVE_COMMANDS_HPP_
