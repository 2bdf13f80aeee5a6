#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "atmgad/matrix.hpp"

namespace atmgad {

using NodeId = std::uint32_t;
using EdgeIndex = std::uint32_t;
using Timestamp = std::int64_t;

// Sentinel for "no timestamp": isolated nodes and the tau_max of an empty graph.
inline constexpr Timestamp kNoTimestamp = -1;
inline constexpr std::int8_t kUnlabeled = -1;

struct EdgeRecord {
  NodeId src = 0;
  NodeId dst = 0;
  Timestamp timestamp = 0;
  std::optional<double> amount;

  bool operator==(const EdgeRecord&) const = default;
};

// Directed timestamped multigraph with node features and labels.
//
// Edges are sorted by (timestamp, src, dst, input position) at construction and
// never reordered afterwards, so an EdgeIndex doubles as a position in the
// global time order. Incident-edge lists are kept in that order too.
class TransactionGraph {
 public:
  TransactionGraph() = default;

  // Validates and sorts `edges`. Throws ValidationError on self-loops or
  // out-of-range endpoints. Every node starts unlabeled with a 0-column
  // feature matrix.
  TransactionGraph(std::size_t num_nodes, std::vector<EdgeRecord> edges);

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return edges_.size(); }
  std::span<const EdgeRecord> edges() const { return edges_; }
  const EdgeRecord& edge(EdgeIndex e) const { return edges_[e]; }

  // kNoTimestamp when the graph has no edges.
  Timestamp tau_max() const { return tau_max_; }
  // kNoTimestamp for isolated nodes.
  Timestamp t_earliest(NodeId v) const { return t_earliest_[v]; }
  std::span<const Timestamp> t_earliest() const { return t_earliest_; }

  std::span<const EdgeIndex> out_edges(NodeId v) const;
  std::span<const EdgeIndex> in_edges(NodeId v) const;
  // Out- and in-edges merged, ascending.
  std::span<const EdgeIndex> incident_edges(NodeId v) const;
  std::size_t degree(NodeId v) const { return incident_edges(v).size(); }
  double average_degree() const;

  const Matrix& features() const { return features_; }
  std::size_t feature_dim() const { return features_.cols; }
  std::span<const std::int8_t> labels() const { return labels_; }
  bool is_labeled(NodeId v) const { return labels_[v] != kUnlabeled; }
  std::vector<NodeId> labeled_nodes() const;

  // External ids (one per dense id) when the graph was ingested with id
  // remapping; empty otherwise.
  const std::vector<std::string>& external_ids() const { return external_ids_; }

  // Copy of this graph with features/labels replaced. Throws ValidationError
  // on row-count mismatch or labels outside {0, 1, kUnlabeled}.
  TransactionGraph with_features_labels(Matrix features, std::vector<std::int8_t> labels) const;
  TransactionGraph with_external_ids(std::vector<std::string> ids) const;

 private:
  void build_indexes();

  std::size_t num_nodes_ = 0;
  std::vector<EdgeRecord> edges_;
  Timestamp tau_max_ = kNoTimestamp;
  std::vector<Timestamp> t_earliest_;
  // CSR adjacency, edge indices ascending within each node.
  std::vector<std::size_t> out_ptr_{0}, in_ptr_{0}, inc_ptr_{0};
  std::vector<EdgeIndex> out_idx_, in_idx_, inc_idx_;
  Matrix features_;
  std::vector<std::int8_t> labels_;
  std::vector<std::string> external_ids_;
};

struct EdgeCsvOptions {
  // Treat src/dst as opaque strings and assign dense ids in order of first
  // appearance. When false, ids must be non-negative integers.
  bool remap_ids = false;
};

// Reads src,dst,timestamp[,amount] rows. The header row is optional.
TransactionGraph load_edge_list(const std::filesystem::path& path, const EdgeCsvOptions& opts = {});
TransactionGraph parse_edge_list(std::istream& in, const std::string& source_name,
                                 const EdgeCsvOptions& opts = {});
void write_edge_list(const TransactionGraph& g, std::ostream& out);

// Features: one row per node in dense-id order. Labels: node_id,label rows
// where label is 0, 1, or a missing marker (empty, -1, ?, nan).
TransactionGraph attach_features_labels(const TransactionGraph& g,
                                        const std::filesystem::path& features_path,
                                        const std::filesystem::path& labels_path);
Matrix parse_features(std::istream& in, const std::string& source_name, std::size_t expected_rows);
std::vector<std::int8_t> parse_labels(std::istream& in, const std::string& source_name,
                                      const TransactionGraph& g);

// D^-1/2 (A + I) D^-1/2 over the direction-collapsed simple graph.
SparseMatrix normalized_adjacency(const TransactionGraph& g);

// Same node set, edges with timestamp <= tau.
TransactionGraph temporal_subgraph(const TransactionGraph& g, Timestamp tau);

// Induced subgraph on up to `max_nodes` nodes reached by undirected BFS from
// `seed_node`, relabeled densely in BFS order.
TransactionGraph sample_subgraph_bfs(const TransactionGraph& g, NodeId seed_node, std::size_t max_nodes);

struct SplitSpec {
  std::uint64_t seed = 0;
  std::vector<NodeId> train_ids;
  std::vector<NodeId> test_ids;

  bool operator==(const SplitSpec&) const = default;
};

// k class-stratified train/test splits over labeled nodes. Split i uses an
// RNG seeded from (seed, i).
std::vector<SplitSpec> make_splits(const TransactionGraph& g, int k, double train_fraction,
                                   std::uint64_t seed);

// Binary cache. Layout: "ATMGRAPH" magic, one version byte, then fixed-width
// little-endian fields. Loading rejects any other version.
inline constexpr std::uint8_t kGraphCacheVersion = 1;
void save_graph_cache(const TransactionGraph& g, std::ostream& out);
void save_graph_cache(const TransactionGraph& g, const std::filesystem::path& path);
TransactionGraph load_graph_cache(std::istream& in);
TransactionGraph load_graph_cache(const std::filesystem::path& path);

}  // namespace atmgad
