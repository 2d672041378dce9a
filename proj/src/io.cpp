#include "advdrive/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace advdrive {

nlohmann::json env_config_to_json(const EnvConfig& c) {
  return {{"v_max", c.v_max},
          {"beta", c.beta},
          {"dt", c.dt},
          {"arrival_p", c.arrival_p},
          {"t_max", c.t_max},
          {"sense_radius", c.sense_radius},
          {"vehicle_length", c.vehicle_length},
          {"vehicle_width", c.vehicle_width},
          {"cross_speed", c.cross_speed},
          {"route_length", c.route_length},
          {"seed", c.seed}};
}

EnvConfig env_config_from_json(const nlohmann::json& d) {
  EnvConfig c;
  c.v_max = d.at("v_max").get<double>();
  c.beta = d.at("beta").get<double>();
  c.dt = d.at("dt").get<double>();
  c.arrival_p = d.at("arrival_p").get<double>();
  c.t_max = d.at("t_max").get<int>();
  c.sense_radius = d.at("sense_radius").get<double>();
  c.vehicle_length = d.at("vehicle_length").get<double>();
  c.vehicle_width = d.at("vehicle_width").get<double>();
  c.cross_speed = d.at("cross_speed").get<double>();
  c.route_length = d.at("route_length").get<double>();
  c.seed = d.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

nlohmann::json ppo_config_to_json(const PpoConfig& c) {
  return {{"gamma", c.gamma},
          {"lambda", c.lambda},
          {"eps_clip", c.eps_clip},
          {"c1", c.c1},
          {"c2", c.c2},
          {"epochs_per_update", c.epochs_per_update},
          {"minibatch_size", c.minibatch_size},
          {"learning_rate", c.learning_rate},
          {"rollout_horizon", c.rollout_horizon},
          {"total_steps", c.total_steps},
          {"max_grad_norm", c.max_grad_norm},
          {"hidden_layers", c.hidden_layers},
          {"init_log_std", c.init_log_std}};
}

PpoConfig ppo_config_from_json(const nlohmann::json& d) {
  PpoConfig c;
  c.gamma = d.at("gamma").get<double>();
  c.lambda = d.at("lambda").get<double>();
  c.eps_clip = d.at("eps_clip").get<double>();
  c.c1 = d.at("c1").get<double>();
  c.c2 = d.at("c2").get<double>();
  c.epochs_per_update = d.at("epochs_per_update").get<int>();
  c.minibatch_size = d.at("minibatch_size").get<int>();
  c.learning_rate = d.at("learning_rate").get<double>();
  c.rollout_horizon = d.at("rollout_horizon").get<int>();
  c.total_steps = d.at("total_steps").get<std::int64_t>();
  c.max_grad_norm = d.at("max_grad_norm").get<double>();
  c.hidden_layers = d.at("hidden_layers").get<std::vector<int>>();
  c.init_log_std = d.at("init_log_std").get<double>();
  c.validate();
  return c;
}

nlohmann::json perturb_config_to_json(const PerturbConfig& c) {
  return {{"method", to_string(c.method)},
          {"eps_pert", c.eps_pert},
          {"pgd_steps", c.pgd_steps},
          {"pgd_alpha", c.alpha()}};
}

PerturbConfig perturb_config_from_json(const nlohmann::json& d) {
  PerturbConfig c;
  c.method = parse_perturb_method(d.at("method").get<std::string>());
  c.eps_pert = d.at("eps_pert").get<double>();
  c.pgd_steps = d.at("pgd_steps").get<int>();
  c.pgd_alpha = d.at("pgd_alpha").get<double>();
  c.validate();
  return c;
}

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len,
                 EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string format_double(double x) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

std::string dump_json(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) {
      throw std::runtime_error("cannot create directory '" +
                               p.parent_path().string() + "': " + ec.message());
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace advdrive
