#include "qroutesim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace qroutesim {

void SimConfig::validate() const {
  if (topology.node_count() < 2) {
    throw std::invalid_argument("topology needs at least 2 nodes");
  }
  if (!(load > 0.0)) {
    throw std::invalid_argument("load must be positive");
  }
  if (steps <= 0) {
    throw std::invalid_argument("steps must be positive");
  }
  if (metrics_window < 1) {
    throw std::invalid_argument("metrics window must be at least 1");
  }
  params.validate();
  for (const LinkEvent& e : events) {
    if (e.step < 0 || e.step >= steps) {
      throw std::invalid_argument("event step " + std::to_string(e.step) +
                                  " outside run of " + std::to_string(steps) +
                                  " steps");
    }
    if (e.u < 0 || e.u >= topology.node_count() || e.v < 0 ||
        e.v >= topology.node_count()) {
      throw std::invalid_argument("event endpoint out of range");
    }
  }
}

int sample_injection_count(double load, InjectionModel model, Rng& rng) {
  switch (model) {
    case InjectionModel::none:
      return 0;
    case InjectionModel::poisson:
      return std::poisson_distribution<int>(load)(rng);
    case InjectionModel::bernoulli: {
      int count = static_cast<int>(std::floor(load));
      const double frac = load - count;
      if (frac > 0.0 &&
          std::uniform_real_distribution<double>(0.0, 1.0)(rng) < frac) {
        ++count;
      }
      return count;
    }
  }
  return 0;
}

Simulation::Simulation(SimConfig config) : config_(std::move(config)) {
  config_.validate();
  topology_ = config_.topology;
  policy_ = make_policy(config_.policy, topology_, config_.params);
  rng_.seed(config_.seed);
  queues_.resize(topology_.node_count());
  curve_.window = config_.metrics_window;
  std::stable_sort(config_.events.begin(), config_.events.end(),
                   [](const LinkEvent& a, const LinkEvent& b) { return a.step < b.step; });
}

void Simulation::enqueue_packet(NodeId src, NodeId dst) {
  if (src == dst) {
    throw std::invalid_argument("packet source equals destination");
  }
  Packet p;
  p.id = next_packet_id_++;
  p.src = src;
  p.dst = dst;
  p.created_at = current_step_;
  p.enqueued_at = current_step_;
  queues_[src].push_back(p);
  ++injected_total_;
}

void Simulation::apply_event(const LinkEvent& event) {
  if (event.link_up) {
    topology_.add_link(event.u, event.v);
    policy_->on_link_up(event.u, event.v);
  } else {
    topology_.remove_link(event.u, event.v);
    policy_->on_link_down(event.u, event.v);
  }
}

int Simulation::inject_traffic() {
  const int n = topology_.node_count();
  const int count = sample_injection_count(config_.load, config_.injection, rng_);
  std::uniform_int_distribution<NodeId> any_node(0, n - 1);
  std::uniform_int_distribution<NodeId> other_node(0, n - 2);
  for (int i = 0; i < count; ++i) {
    const NodeId src = any_node(rng_);
    NodeId dst = other_node(rng_);
    if (dst >= src) ++dst;
    enqueue_packet(src, dst);
  }
  return count;
}

StepReport Simulation::step() {
  const std::int64_t now = current_step_;

  while (next_event_ < config_.events.size() &&
         config_.events[next_event_].step == now) {
    apply_event(config_.events[next_event_]);
    ++next_event_;
  }

  const int injected = inject_traffic();

  // Forward phase: one head packet per non-empty queue, nodes in
  // ascending order. Packets handed to a neighbor are stamped for the
  // next step, so they are never processed twice in one step.
  pending_.clear();
  int delivered = 0;
  for (NodeId x = 0; x < topology_.node_count(); ++x) {
    auto& queue = queues_[x];
    if (queue.empty()) continue;
    // a head stamped now+1 was forwarded here moments ago; it is not
    // available until the next step
    if (queue.front().enqueued_at > now) continue;
    if (topology_.neighbors(x).empty()) continue;  // isolated: traffic stalls

    Packet p = queue.front();
    queue.pop_front();
    const std::int64_t q_wait = now - p.enqueued_at;
    const NodeId y = policy_->select_next_hop(x, p.dst, rng_);
    ++p.hops;
    if (y == p.dst) {
      ++delivered_total_;
      ++delivered;
      const std::int64_t delivered_at = now + 1;
      deliveries_.push_back({p.id, p.src, p.dst, p.created_at, delivered_at,
                             delivered_at - p.created_at, p.hops});
      window_time_sum_ += delivered_at - p.created_at;
      ++window_delivered_;
    } else {
      p.enqueued_at = now + 1;
      queues_[y].push_back(p);
    }
    if (policy_->learns()) {
      const Feedback fb = policy_->feedback_from(y, p.dst);
      policy_->learn(x, y, p.dst, static_cast<double>(q_wait), 1.0, fb);
    }
    pending_.push_back({x, y, p.dst, q_wait});
  }
  policy_->end_step();

  check_conservation();

  ++current_step_;
  if (current_step_ % config_.metrics_window == 0) {
    CurvePoint point;
    point.step = current_step_;
    point.delivered = static_cast<int>(window_delivered_);
    point.avg = window_delivered_ > 0
                    ? static_cast<double>(window_time_sum_) /
                          static_cast<double>(window_delivered_)
                    : std::numeric_limits<double>::quiet_NaN();
    curve_.points.push_back(point);
    window_delivered_ = 0;
    window_time_sum_ = 0;
  }

  const StepReport report{now, injected, static_cast<int>(pending_.size()),
                          delivered, in_flight()};
  reports_.push_back(report);
  return report;
}

void Simulation::check_conservation() const {
  std::int64_t queued = 0;
  for (const auto& queue : queues_) queued += static_cast<std::int64_t>(queue.size());
  if (injected_total_ != delivered_total_ + queued) {
    throw std::logic_error("packet conservation violated at step " +
                           std::to_string(current_step_) + ": injected " +
                           std::to_string(injected_total_) + " != delivered " +
                           std::to_string(delivered_total_) + " + queued " +
                           std::to_string(queued));
  }
}

RunResult Simulation::run() {
  while (current_step_ < config_.steps) {
    step();
  }
  RunResult result;
  result.curve = std::move(curve_);
  result.deliveries = std::move(deliveries_);
  result.reports = std::move(reports_);
  curve_ = LearningCurve{config_.metrics_window, {}};
  deliveries_.clear();
  reports_.clear();
  return result;
}

RunResult run(const SimConfig& config) {
  Simulation sim(config);
  return sim.run();
}

}  // namespace qroutesim
