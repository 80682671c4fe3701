#ifndef QROUTESIM_ENGINE_HPP
#define QROUTESIM_ENGINE_HPP

#include <cstdint>
#include <deque>
#include <memory>
#include <vector>

#include "qroutesim/policy.hpp"
#include "qroutesim/topology.hpp"

namespace qroutesim {

struct Packet {
  std::int64_t id = 0;
  NodeId src = -1;
  NodeId dst = -1;
  std::int64_t created_at = 0;
  std::int64_t enqueued_at = 0;  // refreshed on every queue entry
  int hops = 0;
};

struct DeliveryRecord {
  std::int64_t packet_id;
  NodeId src;
  NodeId dst;
  std::int64_t created_at;
  std::int64_t delivered_at;   // the step the packet left the network
  std::int64_t delivery_time;  // delivered_at - created_at; >= hops always
  int hops;
};

struct StepReport {
  std::int64_t step;
  int injected;
  int forwarded;  // packets processed this step, delivered ones included
  int delivered;
  std::int64_t in_flight;
};

struct LinkEvent {
  std::int64_t step;
  bool link_up;  // false = link_down
  NodeId u;
  NodeId v;
};

enum class InjectionModel { bernoulli, poisson, none };

// Windowed average delivery time. One point per completed metrics window;
// windows with no deliveries are gaps (delivered == 0, avg is NaN), never 0.
struct CurvePoint {
  std::int64_t step;  // exclusive end of the window
  int delivered;
  double avg;

  bool is_gap() const { return delivered == 0; }
};

struct LearningCurve {
  std::int64_t window = 0;
  std::vector<CurvePoint> points;
};

struct SimConfig {
  Topology topology;
  PolicyKind policy = PolicyKind::q_routing;
  double load = 1.0;  // mean packets injected per step
  std::int64_t steps = 10000;
  std::uint64_t seed = 1;
  LearningParams params;
  std::int64_t metrics_window = 100;
  InjectionModel injection = InjectionModel::bernoulli;
  std::vector<LinkEvent> events;

  void validate() const;  // throws std::invalid_argument
};

struct RunResult {
  LearningCurve curve;
  std::vector<DeliveryRecord> deliveries;
  std::vector<StepReport> reports;
};

// floor(load) packets plus one more with probability frac(load)
// (or a Poisson draw; none is a hook for manually driven tests)
int sample_injection_count(double load, InjectionModel model, Rng& rng);

// One deterministic run. Each step: scheduled link events, traffic
// injection, one head-of-queue forward per node in ascending node order,
// learning feedback, confidence decay, metrics. Unbounded FIFO queues,
// unit transmission delay, no packet loss.
class Simulation {
public:
  explicit Simulation(SimConfig config);

  // executes one step; reports conservation-checked totals
  StepReport step();

  // steps until config.steps and hands over the accumulated results
  RunResult run();

  void enqueue_packet(NodeId src, NodeId dst);  // manual injection
  void apply_event(const LinkEvent& event);     // immediate, bypasses schedule

  std::int64_t current_step() const { return current_step_; }
  const Topology& topology() const { return topology_; }
  const RoutingPolicy& policy() const { return *policy_; }
  std::int64_t injected_total() const { return injected_total_; }
  std::int64_t delivered_total() const { return delivered_total_; }
  std::int64_t in_flight() const { return injected_total_ - delivered_total_; }
  std::int64_t queue_depth(NodeId x) const {
    return static_cast<std::int64_t>(queues_.at(x).size());
  }
  const std::vector<DeliveryRecord>& deliveries() const { return deliveries_; }
  const LearningCurve& curve() const { return curve_; }
  const std::vector<StepReport>& reports() const { return reports_; }

private:
  struct ForwardRecord {
    NodeId from;
    NodeId to;
    NodeId dst;
    std::int64_t q_wait;
  };

  int inject_traffic();
  void check_conservation() const;

  SimConfig config_;
  Topology topology_;
  std::unique_ptr<RoutingPolicy> policy_;
  Rng rng_;
  std::vector<std::deque<Packet>> queues_;
  std::size_t next_event_ = 0;

  std::int64_t current_step_ = 0;
  std::int64_t next_packet_id_ = 0;
  std::int64_t injected_total_ = 0;
  std::int64_t delivered_total_ = 0;

  std::vector<DeliveryRecord> deliveries_;
  std::vector<StepReport> reports_;
  LearningCurve curve_;
  std::int64_t window_delivered_ = 0;
  std::int64_t window_time_sum_ = 0;
  std::vector<ForwardRecord> pending_;  // scratch, reused across steps
};

RunResult run(const SimConfig& config);

}  // namespace qroutesim

#endif
