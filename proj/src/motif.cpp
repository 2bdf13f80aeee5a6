#include "atmgad/motif.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "atmgad/error.hpp"
#include "atmgad/parallel.hpp"

namespace atmgad {

const char* to_string(CatalogMode mode) {
  return mode == CatalogMode::unrooted ? "unrooted" : "focal_rooted";
}

CatalogMode catalog_mode_from_string(const std::string& s) {
  if (s == "unrooted") return CatalogMode::unrooted;
  if (s == "focal_rooted") return CatalogMode::focal_rooted;
  throw ValidationError("unknown catalog mode '" + s + "' (expected unrooted or focal_rooted)");
}

namespace {

constexpr std::size_t kLookupSize = 9 * 9 * 9 * 3;

std::size_t pack(const MotifEncoding& enc) {
  std::size_t key = 0;
  for (const auto& [s, d] : enc.edges) key = key * 9 + s * 3u + d;
  return key * 3 + enc.focal_label;
}

// First-appearance relabeling. Returns the number of distinct nodes seen and
// writes each endpoint's label; `focal_label` is -1 when focal is absent.
template <typename Id>
int relabel(const std::array<std::pair<Id, Id>, 3>& triple, Id focal, MotifEncoding& enc, int& focal_label) {
  std::array<Id, 6> seen{};
  int count = 0;
  auto label_of = [&](Id x) -> int {
    for (int i = 0; i < count; ++i)
      if (seen[static_cast<std::size_t>(i)] == x) return i;
    seen[static_cast<std::size_t>(count)] = x;
    return count++;
  };
  for (std::size_t k = 0; k < 3; ++k) {
    int s = label_of(triple[k].first);
    int d = label_of(triple[k].second);
    enc.edges[k] = {static_cast<std::uint8_t>(s), static_cast<std::uint8_t>(d)};
  }
  focal_label = -1;
  for (int i = 0; i < count; ++i)
    if (seen[static_cast<std::size_t>(i)] == focal) focal_label = i;
  return count;
}

}  // namespace

MotifCatalog::MotifCatalog(CatalogMode mode) : mode_(mode), lookup_(kLookupSize, -1) {
  // All sequences of 3 directed edges over labels {0,1,2}; keep those that
  // span all three nodes and canonicalize.
  std::vector<std::pair<std::uint8_t, std::uint8_t>> pairs;
  for (std::uint8_t s = 0; s < 3; ++s)
    for (std::uint8_t d = 0; d < 3; ++d)
      if (s != d) pairs.emplace_back(s, d);
  for (auto p0 : pairs)
    for (auto p1 : pairs)
      for (auto p2 : pairs) {
        std::array<std::pair<std::uint8_t, std::uint8_t>, 3> seq{p0, p1, p2};
        for (std::uint8_t focal = 0; focal < 3; ++focal) {
          MotifEncoding enc;
          int focal_label = 0;
          if (relabel(seq, focal, enc, focal_label) != 3) continue;
          enc.focal_label = mode == CatalogMode::focal_rooted ? static_cast<std::uint8_t>(focal_label) : 0;
          types_.push_back(enc);
        }
      }
  std::sort(types_.begin(), types_.end());
  types_.erase(std::unique(types_.begin(), types_.end()), types_.end());
  for (std::size_t i = 0; i < types_.size(); ++i) lookup_[pack(types_[i])] = static_cast<std::int16_t>(i);
}

std::optional<MotifTypeId> MotifCatalog::find(const MotifEncoding& enc) const {
  for (const auto& [s, d] : enc.edges)
    if (s > 2 || d > 2) return std::nullopt;
  if (enc.focal_label > 2) return std::nullopt;
  auto id = lookup_[pack(enc)];
  if (id < 0) return std::nullopt;
  return static_cast<MotifTypeId>(id);
}

std::string MotifCatalog::describe(MotifTypeId id) const {
  const auto& enc = types_.at(id);
  std::string out;
  for (std::size_t k = 0; k < 3; ++k) {
    if (k) out += '-';
    out += static_cast<char>('0' + enc.edges[k].first);
    out += static_cast<char>('0' + enc.edges[k].second);
  }
  if (mode_ == CatalogMode::focal_rooted) {
    out += '@';
    out += static_cast<char>('0' + enc.focal_label);
  }
  return out;
}

const MotifCatalog& build_catalog(CatalogMode mode) {
  static const MotifCatalog unrooted(CatalogMode::unrooted);
  static const MotifCatalog rooted(CatalogMode::focal_rooted);
  return mode == CatalogMode::unrooted ? unrooted : rooted;
}

MotifEncoding encode_triple(const NodePairTriple& triple, NodeId focal, CatalogMode mode) {
  MotifEncoding enc;
  int focal_label = 0;
  int nodes = relabel(triple, focal, enc, focal_label);
  if (nodes != 3) throw ValidationError("motif triple spans " + std::to_string(nodes) + " nodes, expected 3");
  for (const auto& [s, d] : triple)
    if (s == d) throw ValidationError("motif triple contains a self-loop");
  if (focal_label < 0) throw ValidationError("focal node is not part of the motif triple");
  enc.focal_label = mode == CatalogMode::focal_rooted ? static_cast<std::uint8_t>(focal_label) : 0;
  return enc;
}

MotifTypeId canonical_type(const NodePairTriple& triple, NodeId focal, const MotifCatalog& catalog) {
  auto id = catalog.find(encode_triple(triple, focal, catalog.mode()));
  if (!id) throw ValidationError("motif triple has no catalog entry");
  return *id;
}

// ---------------------------------------------------------------------------
// Enumeration

namespace {

struct Adj {
  NodeId other;
  EdgeIndex edge;
  bool operator<(const Adj& o) const { return other != o.other ? other < o.other : edge < o.edge; }
};

void window_adjacency(const TransactionGraph& g, NodeId u, Timestamp lo, Timestamp hi, std::vector<Adj>& out) {
  auto inc = g.incident_edges(u);
  auto first = std::partition_point(inc.begin(), inc.end(), [&](EdgeIndex e) { return g.edge(e).timestamp < lo; });
  auto last = std::partition_point(first, inc.end(), [&](EdgeIndex e) { return g.edge(e).timestamp <= hi; });
  out.clear();
  for (auto it = first; it != last; ++it) {
    const auto& e = g.edge(*it);
    out.push_back({e.src == u ? e.dst : e.src, *it});
  }
  std::sort(out.begin(), out.end());
}

std::span<const Adj> edges_to(const std::vector<Adj>& adj, NodeId other) {
  auto lo = std::lower_bound(adj.begin(), adj.end(), Adj{other, 0});
  auto hi = std::lower_bound(lo, adj.end(), Adj{other + 1, 0});
  return {adj.data() + (lo - adj.begin()), static_cast<std::size_t>(hi - lo)};
}

// Most-recent-first ordering used for the per-type cap.
bool more_recent(const MotifInstance& a, const MotifInstance& b) {
  if (a.edges[2] != b.edges[2]) return a.edges[2] > b.edges[2];
  if (a.edges[1] != b.edges[1]) return a.edges[1] > b.edges[1];
  return a.edges[0] > b.edges[0];
}

bool by_edges(const MotifInstance& a, const MotifInstance& b) { return a.edges < b.edges; }

void trim_to_cap(std::vector<MotifInstance>& list, std::size_t cap) {
  if (cap == 0 || list.size() <= cap) return;
  std::nth_element(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(cap - 1), list.end(), more_recent);
  list.resize(cap);
}

Timestamp window_end(Timestamp lo, double delta) {
  if (!(delta > 0.0)) throw ValidationError("motif window length must be positive");
  double span = std::floor(delta);
  double limit = static_cast<double>(std::numeric_limits<Timestamp>::max() - lo);
  if (span >= limit) return std::numeric_limits<Timestamp>::max();
  return lo + static_cast<Timestamp>(span);
}

std::vector<TypeInstances> enumerate_grouped(const TransactionGraph& g, NodeId v, Timestamp lo, Timestamp hi,
                                             const MotifCatalog& catalog, std::size_t cap) {
  std::vector<Adj> v_adj;
  window_adjacency(g, v, lo, hi, v_adj);
  std::vector<NodeId> neighbors;
  for (const auto& a : v_adj)
    if (neighbors.empty() || neighbors.back() != a.other) neighbors.push_back(a.other);
  if (neighbors.empty()) return {};

  std::vector<std::vector<Adj>> nbr_adj(neighbors.size());
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    NodeId a = neighbors[i];
    for (std::size_t j = i + 1; j < neighbors.size(); ++j) pairs.emplace_back(a, neighbors[j]);
    window_adjacency(g, a, lo, hi, nbr_adj[i]);
    NodeId prev = v;
    for (const auto& x : nbr_adj[i]) {
      if (x.other == v || x.other == prev) continue;
      prev = x.other;
      pairs.emplace_back(std::min(a, x.other), std::max(a, x.other));
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  std::vector<std::vector<MotifInstance>> buckets(catalog.size());
  struct Tagged {
    EdgeIndex edge;
    int cls;
  };
  std::vector<Tagged> pool;
  auto neighbor_pos = [&](NodeId x) -> std::ptrdiff_t {
    auto it = std::lower_bound(neighbors.begin(), neighbors.end(), x);
    return (it != neighbors.end() && *it == x) ? it - neighbors.begin() : -1;
  };

  for (const auto& [x, y] : pairs) {
    pool.clear();
    for (const auto& a : edges_to(v_adj, x)) pool.push_back({a.edge, 0});
    for (const auto& a : edges_to(v_adj, y)) pool.push_back({a.edge, 1});
    auto px = neighbor_pos(x);
    std::span<const Adj> xy = px >= 0 ? edges_to(nbr_adj[static_cast<std::size_t>(px)], y)
                                      : edges_to(nbr_adj[static_cast<std::size_t>(neighbor_pos(y))], x);
    for (const auto& a : xy) pool.push_back({a.edge, 2});
    if (pool.size() < 3) continue;
    std::sort(pool.begin(), pool.end(), [](const Tagged& a, const Tagged& b) { return a.edge < b.edge; });

    const std::size_t m = pool.size();
    for (std::size_t i = 0; i + 2 < m; ++i)
      for (std::size_t j = i + 1; j + 1 < m; ++j)
        for (std::size_t k = j + 1; k < m; ++k) {
          if (pool[i].cls == pool[j].cls && pool[j].cls == pool[k].cls) continue;
          const EdgeRecord& e0 = g.edge(pool[i].edge);
          const EdgeRecord& e1 = g.edge(pool[j].edge);
          const EdgeRecord& e2 = g.edge(pool[k].edge);
          NodePairTriple triple{{{e0.src, e0.dst}, {e1.src, e1.dst}, {e2.src, e2.dst}}};
          MotifInstance inst;
          inst.focal = v;
          inst.edges = {pool[i].edge, pool[j].edge, pool[k].edge};
          inst.tau_max = e2.timestamp;
          inst.type = canonical_type(triple, v, catalog);
          inst.nodes = {e0.src, e0.dst, e1.src == e0.src || e1.src == e0.dst ? e1.dst : e1.src};
          if (inst.nodes[2] == inst.nodes[0] || inst.nodes[2] == inst.nodes[1])
            inst.nodes[2] = e2.src == inst.nodes[0] || e2.src == inst.nodes[1] ? e2.dst : e2.src;
          auto& bucket = buckets[inst.type];
          bucket.push_back(inst);
          if (cap > 0 && bucket.size() >= 2 * cap) trim_to_cap(bucket, cap);
        }
  }

  std::vector<TypeInstances> out;
  for (std::size_t t = 0; t < buckets.size(); ++t) {
    auto& bucket = buckets[t];
    if (bucket.empty()) continue;
    trim_to_cap(bucket, cap);
    std::sort(bucket.begin(), bucket.end(), by_edges);
    out.push_back({static_cast<MotifTypeId>(t), std::move(bucket)});
  }
  return out;
}

}  // namespace

std::vector<MotifInstance> enumerate_instances(const TransactionGraph& g, NodeId v, Timestamp window_start,
                                               double delta, const MotifCatalog& catalog, std::size_t cap) {
  if (v >= g.num_nodes()) throw ValidationError("enumerate_instances: node out of range");
  auto grouped = enumerate_grouped(g, v, window_start, window_end(window_start, delta), catalog, cap);
  std::vector<MotifInstance> out;
  for (auto& t : grouped) out.insert(out.end(), t.instances.begin(), t.instances.end());
  std::sort(out.begin(), out.end(), by_edges);
  return out;
}

std::vector<MotifInstance> enumerate_instances(const TransactionGraph& g, NodeId v, double delta,
                                               const MotifCatalog& catalog, std::size_t cap) {
  if (v >= g.num_nodes()) throw ValidationError("enumerate_instances: node out of range");
  if (g.t_earliest(v) == kNoTimestamp) return {};
  return enumerate_instances(g, v, g.t_earliest(v), delta, catalog, cap);
}

// ---------------------------------------------------------------------------
// Index

MotifIndex::MotifIndex(CatalogMode mode, std::size_t catalog_size, std::size_t num_nodes)
    : mode_(mode), catalog_size_(catalog_size), per_node_(num_nodes) {}

std::size_t MotifIndex::instance_count(NodeId v) const {
  std::size_t total = 0;
  for (const auto& t : per_node_[v]) total += t.instances.size();
  return total;
}

std::size_t MotifIndex::total_instances() const {
  std::size_t total = 0;
  for (NodeId v = 0; v < per_node_.size(); ++v) total += instance_count(v);
  return total;
}

std::vector<std::uint64_t> MotifIndex::type_counts(NodeId v) const {
  std::vector<std::uint64_t> counts(catalog_size_, 0);
  for (const auto& t : per_node_[v]) counts[t.type] = t.instances.size();
  return counts;
}

void MotifIndex::write_csv(std::ostream& out) const {
  out << "focal,type_id,node0,node1,node2,edge0,edge1,edge2\n";
  for (const auto& types : per_node_)
    for (const auto& t : types)
      for (const auto& inst : t.instances)
        out << inst.focal << ',' << inst.type << ',' << inst.nodes[0] << ',' << inst.nodes[1] << ','
            << inst.nodes[2] << ',' << inst.edges[0] << ',' << inst.edges[1] << ',' << inst.edges[2] << '\n';
}

MotifIndex build_index(const TransactionGraph& g, std::span<const double> windows,
                       std::span<const NodeId> focal_nodes, const MotifCatalog& catalog,
                       const BuildIndexOptions& opts) {
  if (windows.size() != g.num_nodes())
    throw ValidationError("build_index: expected " + std::to_string(g.num_nodes()) + " windows, got " +
                          std::to_string(windows.size()));
  const double tau_max = static_cast<double>(g.tau_max());
  for (NodeId v : focal_nodes) {
    if (v >= g.num_nodes()) throw ValidationError("build_index: node " + std::to_string(v) + " out of range");
    double w = windows[v];
    bool ok = w > 0.0 && std::isfinite(w) && (w <= tau_max || tau_max <= 0.0);
    if (!ok)
      throw ValidationError("build_index: window of node " + std::to_string(v) + " is " + std::to_string(w) +
                            ", expected a value in (0, tau_max=" + std::to_string(g.tau_max()) + "]");
  }
  MotifIndex index(catalog.mode(), catalog.size(), g.num_nodes());
  std::vector<std::vector<TypeInstances>> results(focal_nodes.size());
  parallel_for(focal_nodes.size(), opts.jobs, [&](std::size_t i) {
    NodeId v = focal_nodes[i];
    if (g.t_earliest(v) == kNoTimestamp) return;
    Timestamp lo = g.t_earliest(v) + opts.window_offset;
    results[i] = enumerate_grouped(g, v, lo, window_end(lo, windows[v]), catalog, opts.cap_per_type);
  });
  for (std::size_t i = 0; i < focal_nodes.size(); ++i) index.set(focal_nodes[i], std::move(results[i]));
  return index;
}

MotifIndex build_index(const TransactionGraph& g, std::span<const double> windows, const MotifCatalog& catalog,
                       const BuildIndexOptions& opts) {
  auto nodes = g.labeled_nodes();
  return build_index(g, windows, nodes, catalog, opts);
}

// ---------------------------------------------------------------------------
// Analysis

MotifHistogram motif_histogram(std::span<const MotifIndex> indexes, std::span<const std::int8_t> labels,
                               std::span<const double> deltas) {
  if (indexes.size() != deltas.size())
    throw ValidationError("motif_histogram: one index per delta is required");
  MotifHistogram h;
  h.deltas.assign(deltas.begin(), deltas.end());
  h.num_types = indexes.empty() ? 0 : indexes.front().catalog_size();
  for (const auto& index : indexes) {
    std::vector<std::array<std::uint64_t, 2>> table(index.catalog_size(), {0, 0});
    for (NodeId v = 0; v < index.num_nodes() && v < labels.size(); ++v) {
      if (labels[v] == kUnlabeled) continue;
      for (const auto& t : index.at(v)) table[t.type][static_cast<std::size_t>(labels[v])] += t.instances.size();
    }
    h.counts.push_back(std::move(table));
  }
  return h;
}

void write_histogram_csv(const MotifHistogram& h, std::size_t d, const MotifCatalog& catalog, std::ostream& out) {
  out << "delta,type_id,encoding,normal,fraud\n";
  std::ostringstream delta;
  delta << std::setprecision(17) << h.deltas.at(d);
  for (std::size_t t = 0; t < h.counts[d].size(); ++t)
    out << delta.str() << ',' << t << ',' << catalog.describe(static_cast<MotifTypeId>(t)) << ','
        << h.counts[d][t][0] << ',' << h.counts[d][t][1] << '\n';
}

Matrix motif_cross_correlation(const MotifIndex& index, std::span<const NodeId> nodes) {
  if (nodes.size() < 2) throw ValidationError("motif_cross_correlation: need at least 2 nodes");
  const std::size_t k = index.catalog_size();
  const double n = static_cast<double>(nodes.size());
  Matrix counts(nodes.size(), k);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    auto c = index.type_counts(nodes[i]);
    for (std::size_t t = 0; t < k; ++t) counts(i, t) = static_cast<double>(c[t]);
  }
  std::vector<double> mean(k, 0.0);
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t t = 0; t < k; ++t) mean[t] += counts(i, t);
  for (auto& m : mean) m /= n;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t t = 0; t < k; ++t) counts(i, t) -= mean[t];
  Matrix cov(k, k);
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t a = 0; a < k; ++a) {
      double x = counts(i, a);
      if (x == 0.0) continue;
      for (std::size_t b = 0; b < k; ++b) cov(a, b) += x * counts(i, b);
    }
  Matrix corr(k, k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) {
      if (a == b) {
        corr(a, b) = 1.0;
      } else if (cov(a, a) > 0.0 && cov(b, b) > 0.0) {
        corr(a, b) = cov(a, b) / std::sqrt(cov(a, a) * cov(b, b));
      }
    }
  return corr;
}

void write_matrix_csv(const Matrix& m, std::ostream& out) {
  out << "type_id";
  for (std::size_t c = 0; c < m.cols; ++c) out << ',' << c;
  out << '\n';
  out << std::setprecision(17);
  for (std::size_t r = 0; r < m.rows; ++r) {
    out << r;
    for (std::size_t c = 0; c < m.cols; ++c) out << ',' << m(r, c);
    out << '\n';
  }
}

}  // namespace atmgad
