#ifndef QROUTESIM_POLICY_HPP
#define QROUTESIM_POLICY_HPP

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "qroutesim/topology.hpp"

namespace qroutesim {

using Rng = std::mt19937_64;

enum class PolicyKind { shortest_path, q_routing, cq_routing };

std::string to_string(PolicyKind kind);
PolicyKind parse_policy_kind(const std::string& name);

enum class TieBreak { first, random };

struct LearningParams {
  double eta = 0.85;        // learning rate, (0, 1]
  double lambda = 0.95;     // confidence decay per unvisited step, (0, 1)
  TieBreak tie_break = TieBreak::random;

  void validate() const;  // throws std::invalid_argument on range violations
};

// A downstream node's report about one destination: its best remaining
// delivery estimate and how much it trusts that estimate. A node
// reporting about itself sends estimate 0 with full confidence.
struct Feedback {
  NodeId reporter = -1;
  NodeId destination = -1;
  double best_estimate = 0.0;
  double estimate_confidence = 1.0;
};

// --- confidence arithmetic -------------------------------------------------

// Effective learning rate max(c_est, 1 - c_old). Full overwrite when the
// local entry has no confidence; strong absorption of trusted reports.
double confidence_learning_rate(double c_old, double c_est);

// lambda * c, applied to entries that received no update this step
double decay_confidence(double c, double lambda);

// Moves c_old toward c_est at the effective learning rate. Stays in [0,1].
double update_confidence(double c_old, double c_est);

// --- per-node tables -------------------------------------------------------

// Per-node estimated delivery time, dense over (neighbor, destination).
// Entries exist exactly for neighbor in N(owner), destination != owner.
// Values clamp at 0.
class QTable {
public:
  QTable() = default;
  QTable(NodeId owner, std::vector<NodeId> neighbors, int node_count,
         double initial_value = 0.0);

  NodeId owner() const { return owner_; }
  const std::vector<NodeId>& neighbors() const { return neighbors_; }

  double value(NodeId neighbor, NodeId destination) const;
  void set_value(NodeId neighbor, NodeId destination, double v);

  struct Best {
    double value;
    NodeId neighbor;
  };
  // minimum entry for a destination; ties resolved to the lowest
  // neighbor index
  Best best_toward(NodeId destination) const;

  void add_neighbor(NodeId neighbor, double initial_value = 0.0);
  void remove_neighbor(NodeId neighbor);

  // internal dense index, shared layout with ConfidenceTable
  int entry_index(NodeId neighbor, NodeId destination) const;
  double value_at(int index) const { return values_[index]; }
  void set_value_at(int index, double v) { values_[index] = v; }

private:
  NodeId owner_ = -1;
  int node_count_ = 0;
  std::vector<NodeId> neighbors_;
  std::vector<double> values_;
};

// Per-node confidence in each QTable entry, same key set, values in [0,1].
class ConfidenceTable {
public:
  ConfidenceTable() = default;
  ConfidenceTable(NodeId owner, std::vector<NodeId> neighbors, int node_count,
                  double initial_value = 0.0);

  NodeId owner() const { return owner_; }
  double value(NodeId neighbor, NodeId destination) const;
  void set_value(NodeId neighbor, NodeId destination, double v);

  // Multiplies every entry NOT in updated by lambda; updated entries keep
  // the exact value they were given this step.
  void decay_all_unvisited(const std::vector<std::pair<NodeId, NodeId>>& updated,
                           double lambda);

  void add_neighbor(NodeId neighbor, double initial_value = 0.0);
  void remove_neighbor(NodeId neighbor);

  int entry_index(NodeId neighbor, NodeId destination) const;
  double value_at(int index) const { return values_[index]; }
  void set_value_at(int index, double v);
  int entry_count() const { return static_cast<int>(values_.size()); }
  void scale_all(double factor);

private:
  NodeId owner_ = -1;
  int node_count_ = 0;
  std::vector<NodeId> neighbors_;
  std::vector<double> values_;
};

// --- update rules ----------------------------------------------------------

// Q_x(y,d) += eta * (best_estimate + q_wait + s_transmit - Q_x(y,d)),
// clamped at 0. Returns the new value.
double q_update(QTable& table, NodeId y, NodeId d, double q_wait,
                double s_transmit, const Feedback& fb, double eta);

// Confidence-weighted variant: the learning rate comes from
// confidence_learning_rate(C_x(y,d), fb.estimate_confidence) and the
// confidence entry is moved toward the reported confidence.
struct CqUpdateResult {
  double q_value;
  double c_value;
};
CqUpdateResult cq_update(QTable& qtable, ConfidenceTable& ctable, NodeId y,
                         NodeId d, double q_wait, double s_transmit,
                         const Feedback& fb);

// --- routing policies ------------------------------------------------------

class RoutingPolicy {
public:
  virtual ~RoutingPolicy() = default;

  virtual PolicyKind kind() const = 0;
  virtual bool learns() const = 0;

  // next hop for a packet at x bound for d; d != x
  virtual NodeId select_next_hop(NodeId x, NodeId d, Rng& rng) const = 0;

  // what node y tells an upstream node about destination d
  virtual Feedback feedback_from(NodeId y, NodeId d) const = 0;

  // x forwarded to y a packet bound for d; absorb y's feedback
  virtual void learn(NodeId x, NodeId y, NodeId d, double q_wait,
                     double s_transmit, const Feedback& fb) = 0;

  // once per simulation step, after all learn() calls
  virtual void end_step() {}

  virtual void on_link_down(NodeId u, NodeId v) = 0;
  virtual void on_link_up(NodeId u, NodeId v) = 0;

  // CSV debug dump: node,neighbor,destination,q_value,c_value
  virtual void dump_tables(std::ostream& out) const = 0;
};

std::unique_ptr<RoutingPolicy> make_policy(PolicyKind kind, const Topology& t,
                                           const LearningParams& params);

class ShortestPathPolicy final : public RoutingPolicy {
public:
  explicit ShortestPathPolicy(const Topology& t);

  PolicyKind kind() const override { return PolicyKind::shortest_path; }
  bool learns() const override { return false; }
  NodeId select_next_hop(NodeId x, NodeId d, Rng& rng) const override;
  Feedback feedback_from(NodeId y, NodeId d) const override;
  void learn(NodeId, NodeId, NodeId, double, double, const Feedback&) override {}
  void on_link_down(NodeId u, NodeId v) override;
  void on_link_up(NodeId u, NodeId v) override;
  void dump_tables(std::ostream& out) const override;

private:
  void rebuild();

  Topology topology_;
  // next_hop_[d][x]; -1 when d unreachable from x
  std::vector<std::vector<NodeId>> next_hop_;
};

class QRoutingPolicy : public RoutingPolicy {
public:
  QRoutingPolicy(const Topology& t, const LearningParams& params);

  PolicyKind kind() const override { return PolicyKind::q_routing; }
  bool learns() const override { return true; }
  NodeId select_next_hop(NodeId x, NodeId d, Rng& rng) const override;
  Feedback feedback_from(NodeId y, NodeId d) const override;
  void learn(NodeId x, NodeId y, NodeId d, double q_wait, double s_transmit,
             const Feedback& fb) override;
  void on_link_down(NodeId u, NodeId v) override;
  void on_link_up(NodeId u, NodeId v) override;
  void dump_tables(std::ostream& out) const override;

  const QTable& table(NodeId x) const { return qtables_[x]; }
  QTable& table(NodeId x) { return qtables_[x]; }
  const LearningParams& params() const { return params_; }

protected:
  LearningParams params_;
  std::vector<QTable> qtables_;
};

class CqRoutingPolicy final : public QRoutingPolicy {
public:
  CqRoutingPolicy(const Topology& t, const LearningParams& params);

  PolicyKind kind() const override { return PolicyKind::cq_routing; }
  Feedback feedback_from(NodeId y, NodeId d) const override;
  void learn(NodeId x, NodeId y, NodeId d, double q_wait, double s_transmit,
             const Feedback& fb) override;
  void end_step() override;
  void on_link_down(NodeId u, NodeId v) override;
  void on_link_up(NodeId u, NodeId v) override;
  void dump_tables(std::ostream& out) const override;

  const ConfidenceTable& confidence(NodeId x) const { return ctables_[x]; }
  ConfidenceTable& confidence(NodeId x) { return ctables_[x]; }

private:
  std::vector<ConfidenceTable> ctables_;
  // entries refreshed this step, restored after the blanket decay
  struct FreshEntry {
    NodeId node;
    int index;
    double value;
  };
  std::vector<FreshEntry> fresh_;
};

}  // namespace qroutesim

#endif
