#include "qroutesim/topology.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <sstream>

namespace qroutesim {

namespace {

Link normalized(NodeId u, NodeId v) {
  return u < v ? Link{u, v} : Link{v, u};
}

}  // namespace

Topology::Topology(int node_count, const std::vector<Link>& links)
    : node_count_(node_count) {
  if (node_count_ <= 0) {
    throw TopologyError(TopologyErrorCode::parse, "node count must be positive");
  }
  adjacency_.resize(node_count_);
  for (const auto& [u, v] : links) {
    add_link(u, v);
  }
  if (!is_connected()) {
    throw TopologyError(TopologyErrorCode::disconnected, "graph is not connected");
  }
}

void Topology::check_node(NodeId x) const {
  if (x < 0 || x >= node_count_) {
    throw TopologyError(TopologyErrorCode::invalid_node,
                        "node id " + std::to_string(x) + " out of range [0, " +
                            std::to_string(node_count_) + ")");
  }
}

const std::vector<NodeId>& Topology::neighbors(NodeId x) const {
  check_node(x);
  return adjacency_[x];
}

bool Topology::has_link(NodeId u, NodeId v) const {
  check_node(u);
  check_node(v);
  return std::binary_search(links_.begin(), links_.end(), normalized(u, v));
}

void Topology::add_link(NodeId u, NodeId v) {
  check_node(u);
  check_node(v);
  if (u == v) {
    throw TopologyError(TopologyErrorCode::self_link,
                        "self link at node " + std::to_string(u));
  }
  const Link link = normalized(u, v);
  const auto pos = std::lower_bound(links_.begin(), links_.end(), link);
  if (pos != links_.end() && *pos == link) {
    throw TopologyError(TopologyErrorCode::duplicate_link,
                        "duplicate link " + std::to_string(link.first) + "-" +
                            std::to_string(link.second));
  }
  links_.insert(pos, link);
  auto& nu = adjacency_[u];
  nu.insert(std::lower_bound(nu.begin(), nu.end(), v), v);
  auto& nv = adjacency_[v];
  nv.insert(std::lower_bound(nv.begin(), nv.end(), u), u);
}

void Topology::remove_link(NodeId u, NodeId v) {
  check_node(u);
  check_node(v);
  const Link link = normalized(u, v);
  const auto pos = std::lower_bound(links_.begin(), links_.end(), link);
  if (pos == links_.end() || *pos != link) {
    throw TopologyError(TopologyErrorCode::unknown_link,
                        "no link " + std::to_string(u) + "-" + std::to_string(v));
  }
  links_.erase(pos);
  auto& nu = adjacency_[u];
  nu.erase(std::find(nu.begin(), nu.end(), v));
  auto& nv = adjacency_[v];
  nv.erase(std::find(nv.begin(), nv.end(), u));
}

bool Topology::is_connected() const {
  if (node_count_ == 0) return false;
  const auto dist = hop_distances(*this, 0);
  return std::find(dist.begin(), dist.end(), -1) == dist.end();
}

Topology build_irregular_grid_6x6() {
  std::vector<Link> links;
  for (int row = 0; row < 6; ++row) {
    for (int col = 0; col < 6; ++col) {
      const int id = row * 6 + col;
      if (row + 1 < 6) links.emplace_back(id, id + 6);
      if (col + 1 < 6) links.emplace_back(id, id + 1);
    }
  }
  // sever the column-2/3 seam except rows 3 and 5
  for (const Link& cut : {Link{2, 3}, Link{8, 9}, Link{14, 15}, Link{26, 27}}) {
    links.erase(std::find(links.begin(), links.end(), cut));
  }
  return Topology(36, links);
}

const std::vector<NodeId>& grid6x6_left_nodes() {
  static const std::vector<NodeId> nodes = {0,  1,  2,  6,  7,  8,  12, 13, 14,
                                            18, 19, 20, 24, 25, 26, 30, 31, 32};
  return nodes;
}

const std::vector<NodeId>& grid6x6_right_nodes() {
  static const std::vector<NodeId> nodes = {3,  4,  5,  9,  10, 11, 15, 16, 17,
                                            21, 22, 23, 27, 28, 29, 33, 34, 35};
  return nodes;
}

const std::vector<Link>& grid6x6_cross_links() {
  static const std::vector<Link> links = {{20, 21}, {32, 33}};
  return links;
}

std::vector<int> hop_distances(const Topology& t, NodeId src) {
  if (src < 0 || src >= t.node_count()) {
    throw TopologyError(TopologyErrorCode::invalid_node,
                        "BFS source " + std::to_string(src) + " out of range");
  }
  std::vector<int> dist(t.node_count(), -1);
  std::queue<NodeId> frontier;
  dist[src] = 0;
  frontier.push(src);
  while (!frontier.empty()) {
    const NodeId x = frontier.front();
    frontier.pop();
    for (const NodeId y : t.neighbors(x)) {
      if (dist[y] == -1) {
        dist[y] = dist[x] + 1;
        frontier.push(y);
      }
    }
  }
  return dist;
}

Topology load_topology(std::istream& in) {
  int node_count = -1;
  std::vector<Link> links;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream fields(raw);
    if (node_count < 0) {
      if (fields >> node_count) {
        if (node_count <= 0) {
          throw TopologyError(TopologyErrorCode::parse, "node count must be positive",
                              line_no);
        }
        NodeId extra;
        if (fields >> extra) {
          throw TopologyError(TopologyErrorCode::parse,
                              "expected node count alone on its line", line_no);
        }
      } else if (!fields.eof()) {
        throw TopologyError(TopologyErrorCode::parse, "malformed node count", line_no);
      }
      continue;
    }
    NodeId u, v;
    if (fields >> u) {
      if (!(fields >> v)) {
        throw TopologyError(TopologyErrorCode::parse, "expected \"u v\" link line",
                            line_no);
      }
      NodeId extra;
      if (fields >> extra) {
        throw TopologyError(TopologyErrorCode::parse, "trailing tokens on link line",
                            line_no);
      }
      if (u < 0 || u >= node_count || v < 0 || v >= node_count) {
        throw TopologyError(TopologyErrorCode::invalid_node,
                            "link endpoint out of range [0, " +
                                std::to_string(node_count) + ")",
                            line_no);
      }
      if (u == v) {
        throw TopologyError(TopologyErrorCode::self_link,
                            "self link at node " + std::to_string(u), line_no);
      }
      const Link link = normalized(u, v);
      if (std::find(links.begin(), links.end(), link) != links.end()) {
        throw TopologyError(TopologyErrorCode::duplicate_link,
                            "duplicate link " + std::to_string(link.first) + "-" +
                                std::to_string(link.second),
                            line_no);
      }
      links.push_back(link);
    } else if (!fields.eof()) {
      throw TopologyError(TopologyErrorCode::parse, "malformed link line", line_no);
    }
  }
  if (node_count < 0) {
    throw TopologyError(TopologyErrorCode::parse, "missing node count", line_no);
  }
  return Topology(node_count, links);
}

Topology load_topology(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw TopologyError(TopologyErrorCode::parse, "cannot open " + path);
  }
  return load_topology(in);
}

void save_topology(const Topology& t, std::ostream& out) {
  out << t.node_count() << "\n";
  for (const auto& [u, v] : t.links()) {
    out << u << " " << v << "\n";
  }
}

void save_topology(const Topology& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw TopologyError(TopologyErrorCode::parse, "cannot write " + path);
  }
  save_topology(t, out);
}

bool validate_cut(const Topology& t,
                  const std::vector<NodeId>& left,
                  const std::vector<NodeId>& right,
                  const std::vector<Link>& allowed_cross) {
  std::vector<int> side(t.node_count(), -1);
  for (const NodeId x : left) {
    if (x < 0 || x >= t.node_count() || side[x] != -1) {
      throw TopologyError(TopologyErrorCode::not_partition,
                          "left/right sets do not partition the node set");
    }
    side[x] = 0;
  }
  for (const NodeId x : right) {
    if (x < 0 || x >= t.node_count() || side[x] != -1) {
      throw TopologyError(TopologyErrorCode::not_partition,
                          "left/right sets do not partition the node set");
    }
    side[x] = 1;
  }
  if (std::find(side.begin(), side.end(), -1) != side.end()) {
    throw TopologyError(TopologyErrorCode::not_partition,
                        "left/right sets do not partition the node set");
  }
  for (const auto& [u, v] : t.links()) {
    if (side[u] == side[v]) continue;
    const Link link = normalized(u, v);
    if (std::find(allowed_cross.begin(), allowed_cross.end(), link) ==
        allowed_cross.end()) {
      return false;
    }
  }
  return true;
}

}  // namespace qroutesim
