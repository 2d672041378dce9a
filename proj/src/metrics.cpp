#include "advdrive/metrics.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "advdrive/io.hpp"

namespace advdrive {

std::string to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::kCollided:
      return "collided";
    case Outcome::kCompleted:
      return "completed";
    case Outcome::kTruncated:
      return "truncated";
  }
  return "unknown";
}

namespace {

MeanStd mean_std(std::span<const double> xs) {
  MeanStd out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(xs.size()));
  return out;
}

template <typename T>
std::string opt(const std::optional<T>& v) {
  if (!v) return "";
  if constexpr (std::is_same_v<T, std::string>) {
    return *v;
  } else if constexpr (std::is_same_v<T, double>) {
    return format_double(*v);
  } else {
    return std::to_string(*v);
  }
}

}  // namespace

double attack_efficiency(double cr, double ana_mean, double k) {
  return cr * std::exp(-k * ana_mean);
}

MetricsReport aggregate(std::span<const EpisodeRecord> records, double k,
                        bool attacked) {
  if (records.empty()) {
    throw std::invalid_argument("aggregate: no episode records");
  }
  MetricsReport r;
  r.k = k;
  r.attacked = attacked;
  r.n_episodes = static_cast<int>(records.size());

  int completed = 0;
  int collided = 0;
  std::vector<double> speeds;
  std::vector<double> rewards;
  std::vector<double> attacks;
  for (const EpisodeRecord& e : records) {
    completed += e.outcome == Outcome::kCompleted;
    collided += e.outcome == Outcome::kCollided;
    speeds.insert(speeds.end(), e.speeds.begin(), e.speeds.end());
    rewards.push_back(e.victim_total_reward);
    attacks.push_back(static_cast<double>(e.attack_count));
  }
  const double n = static_cast<double>(records.size());
  r.sr = completed / n;
  r.cr = collided / n;
  r.as = mean_std(speeds);
  r.ar = mean_std(rewards);
  r.ana = mean_std(attacks);
  r.ae = attack_efficiency(r.cr, r.ana.mean, k);
  return r;
}

nlohmann::json report_to_json(const MetricsReport& r) {
  nlohmann::json doc;
  doc["n_episodes"] = r.n_episodes;
  doc["SR"] = r.sr;
  doc["CR"] = r.cr;
  doc["AS"] = {{"mean", r.as.mean}, {"std", r.as.std}};
  doc["AR"] = {{"mean", r.ar.mean}, {"std", r.ar.std}};
  if (r.attacked) {
    doc["ANA"] = {{"mean", r.ana.mean}, {"std", r.ana.std}};
    doc["AE"] = r.ae;
  } else {
    doc["ANA"] = nullptr;
    doc["AE"] = nullptr;
  }
  doc["k"] = r.k;
  nlohmann::json prov;
  const Provenance& p = r.provenance;
  prov["method"] = p.method;
  prov["perturb_method"] =
      p.perturb_method ? nlohmann::json(*p.perturb_method) : nullptr;
  prov["gamma_budget"] =
      p.gamma_budget ? nlohmann::json(*p.gamma_budget) : nullptr;
  prov["gamma_test"] = p.gamma_test ? nlohmann::json(*p.gamma_test) : nullptr;
  prov["eps_pert"] = p.eps_pert ? nlohmann::json(*p.eps_pert) : nullptr;
  prov["victim_hash"] = p.victim_hash;
  prov["arrival_p"] = p.arrival_p;
  prov["seed"] = p.seed;
  doc["provenance"] = prov;
  return doc;
}

void write_reports_csv(std::ostream& out,
                       std::span<const MetricsReport> reports) {
  out << "method,perturb_method,gamma_budget,gamma_test,eps_pert,arrival_p,"
         "n_episodes,SR,CR,AS_mean,AS_std,AR_mean,AR_std,ANA_mean,ANA_std,"
         "AE,k,seed,victim_hash\n";
  for (const MetricsReport& r : reports) {
    const Provenance& p = r.provenance;
    out << p.method << ',' << opt(p.perturb_method) << ','
        << opt(p.gamma_budget) << ',' << opt(p.gamma_test) << ','
        << opt(p.eps_pert) << ',' << format_double(p.arrival_p) << ','
        << r.n_episodes << ',' << format_double(r.sr) << ','
        << format_double(r.cr) << ',' << format_double(r.as.mean) << ','
        << format_double(r.as.std) << ',' << format_double(r.ar.mean) << ','
        << format_double(r.ar.std) << ',';
    if (r.attacked) {
      out << format_double(r.ana.mean) << ',' << format_double(r.ana.std)
          << ',' << format_double(r.ae);
    } else {
      out << "-,-,-";
    }
    out << ',' << format_double(r.k) << ',' << p.seed << ',' << p.victim_hash
        << '\n';
  }
}

void write_episodes_csv(std::ostream& out,
                        std::span<const EpisodeRecord> records) {
  out << "episode,seed,outcome,steps,attack_count,victim_total_reward,"
         "mean_speed\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const EpisodeRecord& e = records[i];
    const MeanStd speed = mean_std(e.speeds);
    out << i << ',' << e.seed << ',' << to_string(e.outcome) << ','
        << e.steps << ',' << e.attack_count << ','
        << format_double(e.victim_total_reward) << ','
        << format_double(speed.mean) << '\n';
  }
}

void write_step_logs_csv(std::ostream& out,
                         std::span<const EpisodeRecord> records) {
  out << "episode,step,launched,p,lure,delta_norm,victim_action,"
         "executed_action,speed,collided\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const EpisodeRecord& e = records[i];
    for (std::size_t t = 0; t < e.step_logs.size(); ++t) {
      const AttackStepLog& s = e.step_logs[t];
      const double speed = t < e.speeds.size() ? e.speeds[t] : 0.0;
      out << i << ',' << s.step << ',' << (s.launched ? 1 : 0) << ','
          << format_double(s.p) << ',' << format_double(s.lure) << ','
          << format_double(s.delta_norm) << ','
          << format_double(s.victim_action) << ','
          << format_double(s.executed_action) << ',' << format_double(speed)
          << ',' << (s.collided ? 1 : 0) << '\n';
    }
  }
}

}  // namespace advdrive
