#include "qroutesim/io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace qroutesim {

std::string format_real(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  return buf;
}

void write_curve_csv(std::ostream& out, const LearningCurve& curve) {
  out << "step,delivered_in_window,window_avg_delivery_time\n";
  for (const CurvePoint& p : curve.points) {
    out << p.step << ',' << p.delivered << ',';
    if (!p.is_gap()) out << format_real(p.avg);
    out << '\n';
  }
}

void write_deliveries_csv(std::ostream& out,
                          const std::vector<DeliveryRecord>& records) {
  out << "packet_id,src,dst,created_at,delivered_at,delivery_time,hops\n";
  for (const DeliveryRecord& r : records) {
    out << r.packet_id << ',' << r.src << ',' << r.dst << ',' << r.created_at
        << ',' << r.delivered_at << ',' << r.delivery_time << ',' << r.hops
        << '\n';
  }
}

void write_metrics_csv(std::ostream& out, const std::vector<StepReport>& reports,
                       const LearningCurve& curve) {
  out << "step,injected,delivered,in_flight,window_avg_delivery_time\n";
  std::size_t next_point = 0;
  for (const StepReport& r : reports) {
    out << r.step << ',' << r.injected << ',' << r.delivered << ','
        << r.in_flight << ',';
    if (next_point < curve.points.size() &&
        curve.points[next_point].step == r.step + 1) {
      if (!curve.points[next_point].is_gap()) {
        out << format_real(curve.points[next_point].avg);
      }
      ++next_point;
    }
    out << '\n';
  }
}

void write_comparison_csv(std::ostream& out, const ComparisonResult& result) {
  out << "step,policy,mean_delivery_time\n";
  if (result.aggregated.empty()) return;
  const std::size_t rows = result.aggregated.front().points.size();
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t p = 0; p < result.aggregated.size(); ++p) {
      const CurvePoint& point = result.aggregated[p].points[i];
      out << point.step << ',' << to_string(result.policies[p]) << ',';
      if (!point.is_gap()) out << format_real(point.avg);
      out << '\n';
    }
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "policy,load,mean,stderr\n";
  for (const SweepRow& r : rows) {
    out << to_string(r.policy) << ',' << format_real(r.load) << ','
        << format_real(r.mean) << ',' << format_real(r.stderr_) << '\n';
  }
}

std::vector<LinkEvent> load_events(std::istream& in) {
  std::vector<LinkEvent> events;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream fields(raw);
    std::int64_t step;
    if (!(fields >> step)) {
      if (fields.eof()) continue;  // blank or comment-only line
      throw std::runtime_error("events line " + std::to_string(line_no) +
                               ": malformed step");
    }
    std::string action;
    NodeId u, v;
    if (!(fields >> action >> u >> v)) {
      throw std::runtime_error("events line " + std::to_string(line_no) +
                               ": expected \"<step> up|down <u> <v>\"");
    }
    bool link_up;
    if (action == "up" || action == "link_up") {
      link_up = true;
    } else if (action == "down" || action == "link_down") {
      link_up = false;
    } else {
      throw std::runtime_error("events line " + std::to_string(line_no) +
                               ": unknown action \"" + action + "\"");
    }
    events.push_back({step, link_up, u, v});
  }
  return events;
}

std::vector<LinkEvent> load_events(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open events file " + path);
  }
  return load_events(in);
}

namespace {

LinkEvent parse_event_json(const nlohmann::json& j) {
  LinkEvent event;
  event.step = j.at("step").get<std::int64_t>();
  const std::string action = j.at("action").get<std::string>();
  if (action == "link_up" || action == "up") {
    event.link_up = true;
  } else if (action == "link_down" || action == "down") {
    event.link_up = false;
  } else {
    throw std::runtime_error("unknown event action \"" + action + "\"");
  }
  event.u = j.at("u").get<NodeId>();
  event.v = j.at("v").get<NodeId>();
  return event;
}

}  // namespace

ExperimentFileConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file " + path);
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("config file " + path + ": " + e.what());
  }
  ExperimentFileConfig config;
  if (j.contains("topology")) config.topology = j["topology"].get<std::string>();
  if (j.contains("policies")) {
    config.policies = j["policies"].get<std::vector<std::string>>();
  }
  if (j.contains("load")) config.load = j["load"].get<double>();
  if (j.contains("loads")) config.loads = j["loads"].get<std::vector<double>>();
  if (j.contains("steps")) config.steps = j["steps"].get<std::int64_t>();
  if (j.contains("seeds")) {
    config.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  }
  if (j.contains("eta")) config.eta = j["eta"].get<double>();
  if (j.contains("lambda")) config.lambda = j["lambda"].get<double>();
  if (j.contains("tie_break")) {
    config.tie_break = j["tie_break"].get<std::string>();
  }
  if (j.contains("window")) config.window = j["window"].get<std::int64_t>();
  if (j.contains("injection")) {
    config.injection = j["injection"].get<std::string>();
  }
  if (j.contains("events")) {
    std::vector<LinkEvent> events;
    for (const auto& entry : j["events"]) {
      events.push_back(parse_event_json(entry));
    }
    config.events = std::move(events);
  }
  return config;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (const unsigned char byte : data) {
    hash ^= byte;
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::string version_string() {
#ifdef QROUTESIM_VERSION
  return QROUTESIM_VERSION;
#else
  return "0.0.0";
#endif
}

void write_manifest(std::ostream& out, const std::string& command,
                    const std::string& canonical_config,
                    const std::vector<std::uint64_t>& seeds,
                    const std::vector<PolicyKind>& policies) {
  nlohmann::json j;
  j["version"] = version_string();
  j["command"] = command;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_config)));
  j["config_hash"] = buf;
  j["config"] = canonical_config;
  j["seeds"] = seeds;
  std::vector<std::string> names;
  names.reserve(policies.size());
  for (const PolicyKind p : policies) names.push_back(to_string(p));
  j["policies"] = names;
  out << j.dump(2) << '\n';
}

}  // namespace qroutesim
