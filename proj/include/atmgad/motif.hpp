#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "atmgad/matrix.hpp"
#include "atmgad/txgraph.hpp"

namespace atmgad {

enum class CatalogMode : std::uint8_t { unrooted, focal_rooted };

const char* to_string(CatalogMode mode);
CatalogMode catalog_mode_from_string(const std::string& s);

using MotifTypeId = std::uint16_t;

// A time-ordered triple of directed edges over node labels {0,1,2}, labels
// assigned by first appearance. In focal_rooted mode the focal node's label is
// part of the type; in unrooted mode focal_label is always 0.
struct MotifEncoding {
  std::array<std::pair<std::uint8_t, std::uint8_t>, 3> edges{};
  std::uint8_t focal_label = 0;

  auto operator<=>(const MotifEncoding&) const = default;
};

class MotifCatalog {
 public:
  explicit MotifCatalog(CatalogMode mode);

  CatalogMode mode() const { return mode_; }
  std::size_t size() const { return types_.size(); }
  const MotifEncoding& encoding(MotifTypeId id) const { return types_[id]; }
  std::span<const MotifEncoding> types() const { return types_; }
  std::optional<MotifTypeId> find(const MotifEncoding& enc) const;

  // e.g. "01-02-12" (unrooted) or "01-02-12@0" (focal_rooted).
  std::string describe(MotifTypeId id) const;

 private:
  CatalogMode mode_;
  std::vector<MotifEncoding> types_;
  std::vector<std::int16_t> lookup_;  // packed encoding -> id, -1 if absent
};

// Shared immutable catalogs.
const MotifCatalog& build_catalog(CatalogMode mode);

using NodePairTriple = std::array<std::pair<NodeId, NodeId>, 3>;

// Relabels the triple by first appearance (recording the focal node's label in
// focal_rooted mode) and returns its catalog id. Throws ValidationError when
// the triple does not span exactly 3 nodes or `focal` is not one of them.
MotifTypeId canonical_type(const NodePairTriple& triple, NodeId focal, const MotifCatalog& catalog);
// Same relabeling without the catalog lookup.
MotifEncoding encode_triple(const NodePairTriple& triple, NodeId focal, CatalogMode mode);

struct MotifInstance {
  std::array<NodeId, 3> nodes{};     // in first-appearance label order
  NodeId focal = 0;
  std::array<EdgeIndex, 3> edges{};  // ascending = time order under the tie-break
  MotifTypeId type = 0;
  Timestamp tau_max = 0;             // latest edge timestamp

  bool operator==(const MotifInstance&) const = default;
};

// Every instance containing `v` whose three edges lie in
// [window_start, window_start + delta]. Sorted by edge triple. When
// cap_per_type > 0 only the cap most recent instances of each type survive.
std::vector<MotifInstance> enumerate_instances(const TransactionGraph& g, NodeId v, Timestamp window_start,
                                               double delta, const MotifCatalog& catalog,
                                               std::size_t cap_per_type = 0);
// Window anchored at t_earliest(v); isolated nodes yield an empty list.
std::vector<MotifInstance> enumerate_instances(const TransactionGraph& g, NodeId v, double delta,
                                               const MotifCatalog& catalog, std::size_t cap_per_type = 0);

struct TypeInstances {
  MotifTypeId type = 0;
  std::vector<MotifInstance> instances;

  bool operator==(const TypeInstances&) const = default;
};

class MotifIndex {
 public:
  MotifIndex() = default;
  MotifIndex(CatalogMode mode, std::size_t catalog_size, std::size_t num_nodes);

  CatalogMode mode() const { return mode_; }
  std::size_t catalog_size() const { return catalog_size_; }
  std::size_t num_nodes() const { return per_node_.size(); }
  // Present types at v, ascending by type id. Empty for non-focal nodes.
  const std::vector<TypeInstances>& at(NodeId v) const { return per_node_[v]; }
  void set(NodeId v, std::vector<TypeInstances> types) { per_node_[v] = std::move(types); }
  std::size_t total_instances() const;
  std::size_t instance_count(NodeId v) const;
  std::vector<std::uint64_t> type_counts(NodeId v) const;

  // One CSV row per instance: focal,type_id,node0,node1,node2,edge0,edge1,edge2.
  void write_csv(std::ostream& out) const;

  bool operator==(const MotifIndex&) const = default;

 private:
  CatalogMode mode_ = CatalogMode::focal_rooted;
  std::size_t catalog_size_ = 0;
  std::vector<std::vector<TypeInstances>> per_node_;
};

struct BuildIndexOptions {
  std::size_t cap_per_type = 512;
  unsigned jobs = 1;
  // Window start = t_earliest(v) + window_offset.
  Timestamp window_offset = 0;
};

// Per-node windows are indexed by node id (size n). Only `focal_nodes` are
// enumerated; each must have a window in (0, tau_max].
MotifIndex build_index(const TransactionGraph& g, std::span<const double> windows,
                       std::span<const NodeId> focal_nodes, const MotifCatalog& catalog,
                       const BuildIndexOptions& opts = {});
// Enumerates every labeled node.
MotifIndex build_index(const TransactionGraph& g, std::span<const double> windows, const MotifCatalog& catalog,
                       const BuildIndexOptions& opts = {});

// counts[d][type] = {normal, fraud} instance totals over labeled nodes.
struct MotifHistogram {
  std::vector<double> deltas;
  std::size_t num_types = 0;
  std::vector<std::vector<std::array<std::uint64_t, 2>>> counts;

  std::uint64_t count(std::size_t delta_idx, MotifTypeId type, int label) const {
    return counts[delta_idx][type][static_cast<std::size_t>(label)];
  }
};

// indexes[i] must have been built with window deltas[i].
MotifHistogram motif_histogram(std::span<const MotifIndex> indexes, std::span<const std::int8_t> labels,
                               std::span<const double> deltas);
void write_histogram_csv(const MotifHistogram& h, std::size_t delta_idx, const MotifCatalog& catalog,
                         std::ostream& out);

// Pearson correlation of per-node type-count vectors over `nodes`
// (catalog_size x catalog_size). Zero-variance types get 0 off the diagonal;
// the diagonal is 1 everywhere. Throws ValidationError for < 2 nodes.
Matrix motif_cross_correlation(const MotifIndex& index, std::span<const NodeId> nodes);
void write_matrix_csv(const Matrix& m, std::ostream& out);

}  // namespace atmgad
