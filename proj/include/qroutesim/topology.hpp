#ifndef QROUTESIM_TOPOLOGY_HPP
#define QROUTESIM_TOPOLOGY_HPP

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qroutesim {

using NodeId = int;
using Link = std::pair<NodeId, NodeId>;  // stored normalized, first < second

enum class TopologyErrorCode {
  parse,
  invalid_node,
  self_link,
  duplicate_link,
  disconnected,
  unknown_link,
  not_partition,
};

class TopologyError : public std::runtime_error {
public:
  TopologyError(TopologyErrorCode code, const std::string& what, int line = 0)
      : std::runtime_error(what), code_(code), line_(line) {}

  TopologyErrorCode code() const { return code_; }
  // 1-based input line for load errors, 0 when not file-related
  int line() const { return line_; }

private:
  TopologyErrorCode code_;
  int line_;
};

// Undirected unweighted graph over dense node ids [0, node_count).
// Construction validates: valid endpoints, no self or duplicate links,
// connected. add_link/remove_link keep adjacency consistent but may
// disconnect the graph (link-failure simulation relies on that).
class Topology {
public:
  Topology() = default;
  Topology(int node_count, const std::vector<Link>& links);

  int node_count() const { return node_count_; }
  int link_count() const { return static_cast<int>(links_.size()); }

  // neighbors of x, ascending node index
  const std::vector<NodeId>& neighbors(NodeId x) const;
  bool has_link(NodeId u, NodeId v) const;
  // normalized and sorted, so equal graphs compare equal
  const std::vector<Link>& links() const { return links_; }

  bool is_connected() const;

  void add_link(NodeId u, NodeId v);
  void remove_link(NodeId u, NodeId v);

  bool operator==(const Topology& other) const = default;

private:
  void check_node(NodeId x) const;

  int node_count_ = 0;
  std::vector<Link> links_;
  std::vector<std::vector<NodeId>> adjacency_;
};

// 6x6 grid (node id = row*6 + col) with the four column-2/3 links
// (2,3), (8,9), (14,15), (26,27) removed, so all left/right traffic
// funnels through (20,21) or (32,33).
Topology build_irregular_grid_6x6();

// node sets on either side of the grid's two-link cut
const std::vector<NodeId>& grid6x6_left_nodes();
const std::vector<NodeId>& grid6x6_right_nodes();
const std::vector<Link>& grid6x6_cross_links();

// BFS hop counts from src; -1 for unreachable nodes
std::vector<int> hop_distances(const Topology& t, NodeId src);

// Text format: '#' comments, first value = node count, then one "u v"
// pair per line. LF endings on save.
Topology load_topology(std::istream& in);
Topology load_topology(const std::string& path);
void save_topology(const Topology& t, std::ostream& out);
void save_topology(const Topology& t, const std::string& path);

// True iff every link with one endpoint in left and one in right is
// listed in allowed_cross. left/right must partition the node set.
bool validate_cut(const Topology& t,
                  const std::vector<NodeId>& left,
                  const std::vector<NodeId>& right,
                  const std::vector<Link>& allowed_cross);

}  // namespace qroutesim

#endif
