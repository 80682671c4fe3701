#include "qroutesim/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace qroutesim {

namespace {

void require_unit(double x, const char* name) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::invalid_argument(std::string(name) + " must be in [0,1], got " +
                                std::to_string(x));
  }
}

void require_decay_rate(double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw std::invalid_argument("decay rate must be in (0,1), got " +
                                std::to_string(lambda));
  }
}

std::string entry_name(NodeId owner, NodeId neighbor, NodeId destination) {
  return "entry (" + std::to_string(neighbor) + "," + std::to_string(destination) +
         ") at node " + std::to_string(owner);
}

void append_q_row(std::ostream& out, NodeId node, NodeId neighbor, NodeId dest,
                  double q, const double* c) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", q);
  out << node << ',' << neighbor << ',' << dest << ',' << buf << ',';
  if (c != nullptr) {
    std::snprintf(buf, sizeof(buf), "%.6f", *c);
    out << buf;
  }
  out << '\n';
}

}  // namespace

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::shortest_path: return "shortest_path";
    case PolicyKind::q_routing: return "q_routing";
    case PolicyKind::cq_routing: return "cq_routing";
  }
  return "unknown";
}

PolicyKind parse_policy_kind(const std::string& name) {
  if (name == "sp" || name == "shortest_path") return PolicyKind::shortest_path;
  if (name == "q" || name == "q_routing") return PolicyKind::q_routing;
  if (name == "cq" || name == "cq_routing") return PolicyKind::cq_routing;
  throw std::invalid_argument("unknown policy \"" + name +
                              "\" (expected sp, q or cq)");
}

void LearningParams::validate() const {
  if (!(eta > 0.0 && eta <= 1.0)) {
    throw std::invalid_argument("eta must be in (0,1], got " + std::to_string(eta));
  }
  require_decay_rate(lambda);
}

double confidence_learning_rate(double c_old, double c_est) {
  require_unit(c_old, "c_old");
  require_unit(c_est, "c_est");
  return std::max(c_est, 1.0 - c_old);
}

double decay_confidence(double c, double lambda) {
  require_unit(c, "confidence");
  require_decay_rate(lambda);
  return lambda * c;
}

double update_confidence(double c_old, double c_est) {
  const double rate = confidence_learning_rate(c_old, c_est);
  return c_old + rate * (c_est - c_old);
}

// --- QTable ------------------------------------------------------------

QTable::QTable(NodeId owner, std::vector<NodeId> neighbors, int node_count,
               double initial_value)
    : owner_(owner), node_count_(node_count), neighbors_(std::move(neighbors)) {
  values_.assign(neighbors_.size() * static_cast<std::size_t>(node_count_),
                 initial_value);
}

int QTable::entry_index(NodeId neighbor, NodeId destination) const {
  const auto pos = std::lower_bound(neighbors_.begin(), neighbors_.end(), neighbor);
  if (pos == neighbors_.end() || *pos != neighbor) {
    throw std::out_of_range("no " + entry_name(owner_, neighbor, destination) +
                            ": not a neighbor");
  }
  if (destination < 0 || destination >= node_count_ || destination == owner_) {
    throw std::out_of_range("no " + entry_name(owner_, neighbor, destination) +
                            ": bad destination");
  }
  const int slot = static_cast<int>(pos - neighbors_.begin());
  return slot * node_count_ + destination;
}

double QTable::value(NodeId neighbor, NodeId destination) const {
  return values_[entry_index(neighbor, destination)];
}

void QTable::set_value(NodeId neighbor, NodeId destination, double v) {
  if (v < 0.0) {
    throw std::invalid_argument("q value must be non-negative");
  }
  values_[entry_index(neighbor, destination)] = v;
}

QTable::Best QTable::best_toward(NodeId destination) const {
  if (neighbors_.empty()) {
    throw std::logic_error("node " + std::to_string(owner_) + " has no neighbors");
  }
  if (destination < 0 || destination >= node_count_ || destination == owner_) {
    throw std::out_of_range("bad destination " + std::to_string(destination) +
                            " for node " + std::to_string(owner_));
  }
  Best best{std::numeric_limits<double>::infinity(), -1};
  for (std::size_t slot = 0; slot < neighbors_.size(); ++slot) {
    const double v = values_[slot * node_count_ + destination];
    if (v < best.value) {
      best.value = v;
      best.neighbor = neighbors_[slot];
    }
  }
  return best;
}

void QTable::add_neighbor(NodeId neighbor, double initial_value) {
  const auto pos = std::lower_bound(neighbors_.begin(), neighbors_.end(), neighbor);
  if (pos != neighbors_.end() && *pos == neighbor) {
    throw std::logic_error("node " + std::to_string(owner_) + " already has neighbor " +
                           std::to_string(neighbor));
  }
  const std::size_t slot = pos - neighbors_.begin();
  neighbors_.insert(pos, neighbor);
  values_.insert(values_.begin() + slot * node_count_, node_count_, initial_value);
}

void QTable::remove_neighbor(NodeId neighbor) {
  const auto pos = std::lower_bound(neighbors_.begin(), neighbors_.end(), neighbor);
  if (pos == neighbors_.end() || *pos != neighbor) {
    throw std::logic_error("node " + std::to_string(owner_) + " has no neighbor " +
                           std::to_string(neighbor));
  }
  const std::size_t slot = pos - neighbors_.begin();
  neighbors_.erase(pos);
  values_.erase(values_.begin() + slot * node_count_,
                values_.begin() + (slot + 1) * node_count_);
}

// --- ConfidenceTable ---------------------------------------------------

ConfidenceTable::ConfidenceTable(NodeId owner, std::vector<NodeId> neighbors,
                                 int node_count, double initial_value)
    : owner_(owner), node_count_(node_count), neighbors_(std::move(neighbors)) {
  require_unit(initial_value, "initial confidence");
  values_.assign(neighbors_.size() * static_cast<std::size_t>(node_count_),
                 initial_value);
}

int ConfidenceTable::entry_index(NodeId neighbor, NodeId destination) const {
  const auto pos = std::lower_bound(neighbors_.begin(), neighbors_.end(), neighbor);
  if (pos == neighbors_.end() || *pos != neighbor) {
    throw std::out_of_range("no " + entry_name(owner_, neighbor, destination) +
                            ": not a neighbor");
  }
  if (destination < 0 || destination >= node_count_ || destination == owner_) {
    throw std::out_of_range("no " + entry_name(owner_, neighbor, destination) +
                            ": bad destination");
  }
  const int slot = static_cast<int>(pos - neighbors_.begin());
  return slot * node_count_ + destination;
}

double ConfidenceTable::value(NodeId neighbor, NodeId destination) const {
  return values_[entry_index(neighbor, destination)];
}

void ConfidenceTable::set_value(NodeId neighbor, NodeId destination, double v) {
  require_unit(v, "confidence");
  values_[entry_index(neighbor, destination)] = v;
}

void ConfidenceTable::set_value_at(int index, double v) {
  require_unit(v, "confidence");
  values_[index] = v;
}

void ConfidenceTable::scale_all(double factor) {
  for (double& c : values_) c *= factor;
}

void ConfidenceTable::decay_all_unvisited(
    const std::vector<std::pair<NodeId, NodeId>>& updated, double lambda) {
  require_decay_rate(lambda);
  std::vector<std::pair<int, double>> keep;
  keep.reserve(updated.size());
  for (const auto& [neighbor, destination] : updated) {
    const int index = entry_index(neighbor, destination);
    keep.emplace_back(index, values_[index]);
  }
  scale_all(lambda);
  for (const auto& [index, v] : keep) values_[index] = v;
}

void ConfidenceTable::add_neighbor(NodeId neighbor, double initial_value) {
  require_unit(initial_value, "initial confidence");
  const auto pos = std::lower_bound(neighbors_.begin(), neighbors_.end(), neighbor);
  if (pos != neighbors_.end() && *pos == neighbor) {
    throw std::logic_error("node " + std::to_string(owner_) + " already has neighbor " +
                           std::to_string(neighbor));
  }
  const std::size_t slot = pos - neighbors_.begin();
  neighbors_.insert(pos, neighbor);
  values_.insert(values_.begin() + slot * node_count_, node_count_, initial_value);
}

void ConfidenceTable::remove_neighbor(NodeId neighbor) {
  const auto pos = std::lower_bound(neighbors_.begin(), neighbors_.end(), neighbor);
  if (pos == neighbors_.end() || *pos != neighbor) {
    throw std::logic_error("node " + std::to_string(owner_) + " has no neighbor " +
                           std::to_string(neighbor));
  }
  const std::size_t slot = pos - neighbors_.begin();
  neighbors_.erase(pos);
  values_.erase(values_.begin() + slot * node_count_,
                values_.begin() + (slot + 1) * node_count_);
}

// --- update rules ------------------------------------------------------

namespace {

void check_update_args(double q_wait, double s_transmit, const Feedback& fb) {
  if (q_wait < 0.0) {
    throw std::invalid_argument("queue wait must be non-negative");
  }
  if (s_transmit < 1.0) {
    throw std::invalid_argument("transmission delay must be at least 1 step");
  }
  if (fb.best_estimate < 0.0) {
    throw std::invalid_argument("feedback estimate must be non-negative");
  }
}

}  // namespace

double q_update(QTable& table, NodeId y, NodeId d, double q_wait,
                double s_transmit, const Feedback& fb, double eta) {
  check_update_args(q_wait, s_transmit, fb);
  if (!(eta > 0.0 && eta <= 1.0)) {
    throw std::invalid_argument("eta must be in (0,1]");
  }
  const int index = table.entry_index(y, d);
  const double old_q = table.value_at(index);
  const double target = fb.best_estimate + q_wait + s_transmit;
  const double new_q = std::max(0.0, old_q + eta * (target - old_q));
  table.set_value_at(index, new_q);
  return new_q;
}

CqUpdateResult cq_update(QTable& qtable, ConfidenceTable& ctable, NodeId y,
                         NodeId d, double q_wait, double s_transmit,
                         const Feedback& fb) {
  check_update_args(q_wait, s_transmit, fb);
  const int c_index = ctable.entry_index(y, d);
  const double c_old = ctable.value_at(c_index);
  const double c_est = fb.estimate_confidence;
  const double rate = confidence_learning_rate(c_old, c_est);

  const int q_index = qtable.entry_index(y, d);
  const double old_q = qtable.value_at(q_index);
  const double target = fb.best_estimate + q_wait + s_transmit;
  const double new_q = std::max(0.0, old_q + rate * (target - old_q));
  qtable.set_value_at(q_index, new_q);

  const double new_c = c_old + rate * (c_est - c_old);
  ctable.set_value_at(c_index, new_c);
  return {new_q, new_c};
}

// --- ShortestPathPolicy ------------------------------------------------

ShortestPathPolicy::ShortestPathPolicy(const Topology& t) : topology_(t) {
  rebuild();
}

void ShortestPathPolicy::rebuild() {
  const int n = topology_.node_count();
  next_hop_.assign(n, std::vector<NodeId>(n, -1));
  for (NodeId d = 0; d < n; ++d) {
    const auto dist = hop_distances(topology_, d);
    for (NodeId x = 0; x < n; ++x) {
      if (x == d || dist[x] <= 0) continue;
      for (const NodeId y : topology_.neighbors(x)) {
        if (dist[y] == dist[x] - 1) {
          next_hop_[d][x] = y;  // neighbors ascend, so first hit is lowest index
          break;
        }
      }
    }
  }
}

NodeId ShortestPathPolicy::select_next_hop(NodeId x, NodeId d, Rng&) const {
  const auto& nbrs = topology_.neighbors(x);
  if (nbrs.empty()) {
    throw std::logic_error("cannot route from isolated node " + std::to_string(x));
  }
  const NodeId hop = next_hop_[d][x];
  // unreachable destination: forward somewhere so the packet keeps waiting
  return hop >= 0 ? hop : nbrs.front();
}

Feedback ShortestPathPolicy::feedback_from(NodeId y, NodeId d) const {
  return Feedback{y, d, 0.0, 1.0};
}

void ShortestPathPolicy::on_link_down(NodeId u, NodeId v) {
  topology_.remove_link(u, v);
  rebuild();
}

void ShortestPathPolicy::on_link_up(NodeId u, NodeId v) {
  topology_.add_link(u, v);
  rebuild();
}

void ShortestPathPolicy::dump_tables(std::ostream& out) const {
  out << "node,neighbor,destination,q_value,c_value\n";
}

// --- QRoutingPolicy ----------------------------------------------------

QRoutingPolicy::QRoutingPolicy(const Topology& t, const LearningParams& params)
    : params_(params) {
  params_.validate();
  qtables_.reserve(t.node_count());
  for (NodeId x = 0; x < t.node_count(); ++x) {
    qtables_.emplace_back(x, t.neighbors(x), t.node_count());
  }
}

NodeId QRoutingPolicy::select_next_hop(NodeId x, NodeId d, Rng& rng) const {
  const QTable& table = qtables_[x];
  const auto& nbrs = table.neighbors();
  if (nbrs.empty()) {
    throw std::logic_error("cannot route from isolated node " + std::to_string(x));
  }
  double best = std::numeric_limits<double>::infinity();
  int ties = 0;
  NodeId first_best = -1;
  for (const NodeId y : nbrs) {
    const double v = table.value(y, d);
    if (v < best) {
      best = v;
      ties = 1;
      first_best = y;
    } else if (v == best) {
      ++ties;
    }
  }
  if (ties == 1 || params_.tie_break == TieBreak::first) {
    return first_best;
  }
  int pick = static_cast<int>(std::uniform_int_distribution<int>(0, ties - 1)(rng));
  for (const NodeId y : nbrs) {
    if (table.value(y, d) == best && pick-- == 0) return y;
  }
  return first_best;  // unreachable
}

Feedback QRoutingPolicy::feedback_from(NodeId y, NodeId d) const {
  if (y == d) {
    return Feedback{y, d, 0.0, 1.0};
  }
  const auto best = qtables_[y].best_toward(d);
  return Feedback{y, d, best.value, 1.0};
}

void QRoutingPolicy::learn(NodeId x, NodeId y, NodeId d, double q_wait,
                           double s_transmit, const Feedback& fb) {
  q_update(qtables_[x], y, d, q_wait, s_transmit, fb, params_.eta);
}

void QRoutingPolicy::on_link_down(NodeId u, NodeId v) {
  qtables_[u].remove_neighbor(v);
  qtables_[v].remove_neighbor(u);
}

void QRoutingPolicy::on_link_up(NodeId u, NodeId v) {
  qtables_[u].add_neighbor(v);
  qtables_[v].add_neighbor(u);
}

void QRoutingPolicy::dump_tables(std::ostream& out) const {
  out << "node,neighbor,destination,q_value,c_value\n";
  for (const QTable& table : qtables_) {
    for (const NodeId y : table.neighbors()) {
      for (NodeId d = 0; d < static_cast<NodeId>(qtables_.size()); ++d) {
        if (d == table.owner()) continue;
        append_q_row(out, table.owner(), y, d, table.value(y, d), nullptr);
      }
    }
  }
}

// --- CqRoutingPolicy ---------------------------------------------------

CqRoutingPolicy::CqRoutingPolicy(const Topology& t, const LearningParams& params)
    : QRoutingPolicy(t, params) {
  ctables_.reserve(t.node_count());
  for (NodeId x = 0; x < t.node_count(); ++x) {
    ctables_.emplace_back(x, t.neighbors(x), t.node_count());
  }
}

Feedback CqRoutingPolicy::feedback_from(NodeId y, NodeId d) const {
  if (y == d) {
    return Feedback{y, d, 0.0, 1.0};
  }
  const auto best = qtables_[y].best_toward(d);
  return Feedback{y, d, best.value, ctables_[y].value(best.neighbor, d)};
}

void CqRoutingPolicy::learn(NodeId x, NodeId y, NodeId d, double q_wait,
                            double s_transmit, const Feedback& fb) {
  const auto result = cq_update(qtables_[x], ctables_[x], y, d, q_wait,
                                s_transmit, fb);
  fresh_.push_back({x, ctables_[x].entry_index(y, d), result.c_value});
}

void CqRoutingPolicy::end_step() {
  for (ConfidenceTable& table : ctables_) {
    table.scale_all(params_.lambda);
  }
  for (const FreshEntry& entry : fresh_) {
    ctables_[entry.node].set_value_at(entry.index, entry.value);
  }
  fresh_.clear();
}

void CqRoutingPolicy::on_link_down(NodeId u, NodeId v) {
  QRoutingPolicy::on_link_down(u, v);
  ctables_[u].remove_neighbor(v);
  ctables_[v].remove_neighbor(u);
  fresh_.clear();  // dense indices shifted; stale restores would corrupt
}

void CqRoutingPolicy::on_link_up(NodeId u, NodeId v) {
  QRoutingPolicy::on_link_up(u, v);
  ctables_[u].add_neighbor(v);
  ctables_[v].add_neighbor(u);
  fresh_.clear();
}

void CqRoutingPolicy::dump_tables(std::ostream& out) const {
  out << "node,neighbor,destination,q_value,c_value\n";
  for (const QTable& table : qtables_) {
    for (const NodeId y : table.neighbors()) {
      for (NodeId d = 0; d < static_cast<NodeId>(qtables_.size()); ++d) {
        if (d == table.owner()) continue;
        const double c = ctables_[table.owner()].value(y, d);
        append_q_row(out, table.owner(), y, d, table.value(y, d), &c);
      }
    }
  }
}

std::unique_ptr<RoutingPolicy> make_policy(PolicyKind kind, const Topology& t,
                                           const LearningParams& params) {
  params.validate();
  switch (kind) {
    case PolicyKind::shortest_path:
      return std::make_unique<ShortestPathPolicy>(t);
    case PolicyKind::q_routing:
      return std::make_unique<QRoutingPolicy>(t, params);
    case PolicyKind::cq_routing:
      return std::make_unique<CqRoutingPolicy>(t, params);
  }
  throw std::invalid_argument("unknown policy kind");
}

}  // namespace qroutesim
