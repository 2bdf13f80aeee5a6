#include "atmgad/txgraph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <queue>
#include <random>
#include <sstream>
#include <unordered_map>

#include "atmgad/error.hpp"
#include "csv_util.hpp"

namespace atmgad {

namespace {

void build_csr(std::size_t n, const std::vector<EdgeRecord>& edges, bool by_src,
               std::vector<std::size_t>& ptr, std::vector<EdgeIndex>& idx) {
  ptr.assign(n + 1, 0);
  for (const auto& e : edges) ++ptr[(by_src ? e.src : e.dst) + 1];
  std::partial_sum(ptr.begin(), ptr.end(), ptr.begin());
  idx.assign(edges.size(), 0);
  std::vector<std::size_t> fill(ptr.begin(), ptr.end() - 1);
  for (EdgeIndex i = 0; i < edges.size(); ++i) idx[fill[by_src ? edges[i].src : edges[i].dst]++] = i;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path.string());
  return in;
}

}  // namespace

TransactionGraph::TransactionGraph(std::size_t num_nodes, std::vector<EdgeRecord> edges)
    : num_nodes_(num_nodes), edges_(std::move(edges)) {
  if (num_nodes_ > std::numeric_limits<NodeId>::max() ||
      edges_.size() > std::numeric_limits<EdgeIndex>::max())
    throw ValidationError("graph too large for 32-bit node/edge ids");
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const auto& e = edges_[i];
    if (e.src >= num_nodes_ || e.dst >= num_nodes_)
      throw ValidationError("edge " + std::to_string(i) + " endpoint out of range (n=" +
                            std::to_string(num_nodes_) + ")");
    if (e.src == e.dst) throw ValidationError("edge " + std::to_string(i) + " is a self-loop");
    if (e.timestamp < 0) throw ValidationError("edge " + std::to_string(i) + " has negative timestamp");
    if (e.amount && !(*e.amount >= 0.0 && std::isfinite(*e.amount)))
      throw ValidationError("edge " + std::to_string(i) + " has invalid amount");
  }
  std::stable_sort(edges_.begin(), edges_.end(), [](const EdgeRecord& a, const EdgeRecord& b) {
    return std::tie(a.timestamp, a.src, a.dst) < std::tie(b.timestamp, b.src, b.dst);
  });
  features_ = Matrix(num_nodes_, 0);
  labels_.assign(num_nodes_, kUnlabeled);
  build_indexes();
}

void TransactionGraph::build_indexes() {
  build_csr(num_nodes_, edges_, true, out_ptr_, out_idx_);
  build_csr(num_nodes_, edges_, false, in_ptr_, in_idx_);
  inc_ptr_.assign(num_nodes_ + 1, 0);
  inc_idx_.resize(2 * edges_.size());
  for (std::size_t v = 0; v < num_nodes_; ++v) {
    auto out = out_edges(static_cast<NodeId>(v));
    auto in = in_edges(static_cast<NodeId>(v));
    std::merge(out.begin(), out.end(), in.begin(), in.end(), inc_idx_.begin() + inc_ptr_[v]);
    inc_ptr_[v + 1] = inc_ptr_[v] + out.size() + in.size();
  }
  t_earliest_.assign(num_nodes_, kNoTimestamp);
  for (std::size_t v = 0; v < num_nodes_; ++v) {
    auto inc = incident_edges(static_cast<NodeId>(v));
    if (!inc.empty()) t_earliest_[v] = edges_[inc.front()].timestamp;
  }
  tau_max_ = edges_.empty() ? kNoTimestamp : edges_.back().timestamp;
}

std::span<const EdgeIndex> TransactionGraph::out_edges(NodeId v) const {
  return {out_idx_.data() + out_ptr_[v], out_ptr_[v + 1] - out_ptr_[v]};
}
std::span<const EdgeIndex> TransactionGraph::in_edges(NodeId v) const {
  return {in_idx_.data() + in_ptr_[v], in_ptr_[v + 1] - in_ptr_[v]};
}
std::span<const EdgeIndex> TransactionGraph::incident_edges(NodeId v) const {
  return {inc_idx_.data() + inc_ptr_[v], inc_ptr_[v + 1] - inc_ptr_[v]};
}

double TransactionGraph::average_degree() const {
  return num_nodes_ == 0 ? 0.0 : 2.0 * static_cast<double>(edges_.size()) / static_cast<double>(num_nodes_);
}

std::vector<NodeId> TransactionGraph::labeled_nodes() const {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < num_nodes_; ++v)
    if (is_labeled(v)) out.push_back(v);
  return out;
}

TransactionGraph TransactionGraph::with_features_labels(Matrix features, std::vector<std::int8_t> labels) const {
  if (features.rows != num_nodes_)
    throw ValidationError("feature matrix has " + std::to_string(features.rows) + " rows, expected n=" +
                          std::to_string(num_nodes_));
  if (labels.size() != num_nodes_)
    throw ValidationError("label vector has " + std::to_string(labels.size()) + " entries, expected n=" +
                          std::to_string(num_nodes_));
  for (std::size_t v = 0; v < labels.size(); ++v)
    if (labels[v] != 0 && labels[v] != 1 && labels[v] != kUnlabeled)
      throw ValidationError("label of node " + std::to_string(v) + " is not in {0,1}");
  for (double x : features.data)
    if (!std::isfinite(x)) throw ValidationError("feature matrix contains non-finite values");
  TransactionGraph g = *this;
  g.features_ = std::move(features);
  g.labels_ = std::move(labels);
  return g;
}

TransactionGraph TransactionGraph::with_external_ids(std::vector<std::string> ids) const {
  if (!ids.empty() && ids.size() != num_nodes_)
    throw ValidationError("id map has " + std::to_string(ids.size()) + " entries, expected n=" +
                          std::to_string(num_nodes_));
  TransactionGraph g = *this;
  g.external_ids_ = std::move(ids);
  return g;
}

// ---------------------------------------------------------------------------
// CSV ingest

TransactionGraph parse_edge_list(std::istream& in, const std::string& source, const EdgeCsvOptions& opts) {
  std::vector<EdgeRecord> edges;
  std::unordered_map<std::string, NodeId> id_of;
  std::vector<std::string> ids;
  std::uint64_t max_id = 0;
  bool any = false;

  auto node_id = [&](std::string_view field, std::size_t line_no) -> NodeId {
    if (opts.remap_ids) {
      if (field.empty()) throw ParseError(source, line_no, "empty node id");
      auto [it, inserted] = id_of.try_emplace(std::string(field), static_cast<NodeId>(ids.size()));
      if (inserted) ids.emplace_back(field);
      return it->second;
    }
    auto id = detail::parse_number<std::uint64_t>(field);
    if (!id) throw ParseError(source, line_no, "node id '" + std::string(field) + "' is not a non-negative integer");
    if (*id >= std::numeric_limits<NodeId>::max()) throw ParseError(source, line_no, "node id too large");
    return static_cast<NodeId>(*id);
  };

  std::string line;
  std::size_t line_no = 0;
  bool first_row = true;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto fields = detail::split_csv(view);
    bool header_candidate = first_row;
    first_row = false;
    if (fields.size() < 3 || fields.size() > 4) {
      bool any_number = std::any_of(fields.begin(), fields.end(),
                                    [](std::string_view f) { return detail::parse_number<double>(f).has_value(); });
      if (header_candidate && !any_number) continue;
      throw ParseError(source, line_no, "expected 3 or 4 columns, got " + std::to_string(fields.size()));
    }
    bool ts_is_number = !fields[2].empty() &&
                        (detail::parse_number<std::int64_t>(fields[2]) ||
                         (fields[2].front() == '-' && detail::parse_number<std::int64_t>(fields[2].substr(1))));
    if (header_candidate && !ts_is_number) continue;

    EdgeRecord e;
    auto ts = detail::parse_number<std::int64_t>(fields[2]);
    if (!ts) throw ParseError(source, line_no, "timestamp '" + std::string(fields[2]) + "' is not an integer");
    e.timestamp = *ts;
    e.src = node_id(fields[0], line_no);
    e.dst = node_id(fields[1], line_no);
    if (fields.size() == 4 && !fields[3].empty()) {
      auto amount = detail::parse_number<double>(fields[3]);
      if (!amount) throw ParseError(source, line_no, "amount '" + std::string(fields[3]) + "' is not a number");
      if (*amount < 0 || !std::isfinite(*amount))
        throw ValidationError(source + ":" + std::to_string(line_no) + ": negative or non-finite amount");
      e.amount = *amount;
    }
    if (e.src == e.dst) throw ValidationError(source + ":" + std::to_string(line_no) + ": self-loop");
    if (e.timestamp < 0) throw ValidationError(source + ":" + std::to_string(line_no) + ": negative timestamp");
    max_id = std::max<std::uint64_t>(max_id, std::max(e.src, e.dst));
    any = true;
    edges.push_back(e);
  }
  std::size_t n = opts.remap_ids ? ids.size() : (any ? static_cast<std::size_t>(max_id) + 1 : 0);
  TransactionGraph g(n, std::move(edges));
  if (opts.remap_ids) g = g.with_external_ids(std::move(ids));
  return g;
}

TransactionGraph load_edge_list(const std::filesystem::path& path, const EdgeCsvOptions& opts) {
  auto in = open_input(path);
  return parse_edge_list(in, path.string(), opts);
}

void write_edge_list(const TransactionGraph& g, std::ostream& out) {
  const auto& ids = g.external_ids();
  auto name = [&](NodeId v) { return ids.empty() ? std::to_string(v) : ids[v]; };
  out << "src,dst,timestamp,amount\n";
  for (const auto& e : g.edges()) {
    out << name(e.src) << ',' << name(e.dst) << ',' << e.timestamp << ',';
    if (e.amount) {
      std::ostringstream s;
      s << std::setprecision(17) << *e.amount;
      out << s.str();
    }
    out << '\n';
  }
}

Matrix parse_features(std::istream& in, const std::string& source, std::size_t expected_rows) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto fields = detail::split_csv(view);
    std::vector<double> row;
    bool ok = true;
    for (auto f : fields) {
      auto x = detail::parse_number<double>(f);
      if (!x) {
        ok = false;
        break;
      }
      row.push_back(*x);
    }
    bool was_first = first;
    first = false;
    if (!ok) {
      if (was_first) continue;  // header
      throw ParseError(source, line_no, "non-numeric feature value");
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(source, line_no, "expected " + std::to_string(rows.front().size()) + " columns, got " +
                                            std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.size() != expected_rows)
    throw ValidationError(source + ": expected n=" + std::to_string(expected_rows) + " feature rows, got " +
                          std::to_string(rows.size()));
  Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy(rows[r].begin(), rows[r].end(), m.data.begin() + r * m.cols);
  return m;
}

std::vector<std::int8_t> parse_labels(std::istream& in, const std::string& source, const TransactionGraph& g) {
  std::unordered_map<std::string, NodeId> id_of;
  const auto& ids = g.external_ids();
  for (NodeId v = 0; v < ids.size(); ++v) id_of.emplace(ids[v], v);

  std::vector<std::int8_t> labels(g.num_nodes(), kUnlabeled);
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto fields = detail::split_csv(view);
    bool was_first = first;
    first = false;
    if (fields.size() != 2) throw ParseError(source, line_no, "expected node_id,label");
    NodeId v = 0;
    if (ids.empty()) {
      auto id = detail::parse_number<std::uint64_t>(fields[0]);
      if (!id) {
        if (was_first) continue;
        throw ParseError(source, line_no, "node id '" + std::string(fields[0]) + "' is not an integer");
      }
      if (*id >= g.num_nodes())
        throw ValidationError(source + ":" + std::to_string(line_no) + ": node id " + std::to_string(*id) +
                              " out of range (n=" + std::to_string(g.num_nodes()) + ")");
      v = static_cast<NodeId>(*id);
    } else {
      auto it = id_of.find(std::string(fields[0]));
      if (it == id_of.end()) {
        if (was_first) continue;
        throw ValidationError(source + ":" + std::to_string(line_no) + ": unknown node id '" +
                              std::string(fields[0]) + "'");
      }
      v = it->second;
    }
    auto lab = fields[1];
    if (lab.empty() || lab == "-1" || lab == "?" || lab == "nan" || lab == "NaN") {
      labels[v] = kUnlabeled;
    } else if (lab == "0") {
      labels[v] = 0;
    } else if (lab == "1") {
      labels[v] = 1;
    } else {
      if (was_first && !detail::parse_number<double>(lab)) continue;
      throw ValidationError(source + ":" + std::to_string(line_no) + ": label '" + std::string(lab) +
                            "' is not in {0,1}");
    }
  }
  return labels;
}

TransactionGraph attach_features_labels(const TransactionGraph& g, const std::filesystem::path& features_path,
                                        const std::filesystem::path& labels_path) {
  auto fin = open_input(features_path);
  Matrix features = parse_features(fin, features_path.string(), g.num_nodes());
  auto lin = open_input(labels_path);
  auto labels = parse_labels(lin, labels_path.string(), g);
  return g.with_features_labels(std::move(features), std::move(labels));
}

// ---------------------------------------------------------------------------
// Derived structures

SparseMatrix normalized_adjacency(const TransactionGraph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<std::vector<std::uint32_t>> nbrs(n);
  for (const auto& e : g.edges()) {
    nbrs[e.src].push_back(e.dst);
    nbrs[e.dst].push_back(e.src);
  }
  std::vector<double> inv_sqrt_deg(n);
  for (std::size_t v = 0; v < n; ++v) {
    auto& list = nbrs[v];
    list.push_back(static_cast<std::uint32_t>(v));
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    inv_sqrt_deg[v] = 1.0 / std::sqrt(static_cast<double>(list.size()));
  }
  SparseMatrix a;
  a.rows = a.cols = n;
  a.row_ptr.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) {
    for (auto u : nbrs[v]) {
      a.col_idx.push_back(u);
      a.values.push_back(inv_sqrt_deg[v] * inv_sqrt_deg[u]);
    }
    a.row_ptr[v + 1] = a.col_idx.size();
  }
  return a;
}

TransactionGraph temporal_subgraph(const TransactionGraph& g, Timestamp tau) {
  if (tau < 0) throw ValidationError("temporal_subgraph: tau must be non-negative");
  std::vector<EdgeRecord> kept;
  for (const auto& e : g.edges())
    if (e.timestamp <= tau) kept.push_back(e);
  TransactionGraph sub(g.num_nodes(), std::move(kept));
  sub = sub.with_features_labels(g.features(), std::vector<std::int8_t>(g.labels().begin(), g.labels().end()));
  return sub.with_external_ids(g.external_ids());
}

TransactionGraph sample_subgraph_bfs(const TransactionGraph& g, NodeId seed_node, std::size_t max_nodes) {
  if (seed_node >= g.num_nodes()) throw ValidationError("sample_subgraph_bfs: seed node out of range");
  std::vector<std::int64_t> new_id(g.num_nodes(), -1);
  std::vector<NodeId> order;
  std::queue<NodeId> frontier;
  frontier.push(seed_node);
  new_id[seed_node] = 0;
  order.push_back(seed_node);
  while (!frontier.empty() && order.size() < max_nodes) {
    NodeId v = frontier.front();
    frontier.pop();
    for (EdgeIndex ei : g.incident_edges(v)) {
      const auto& e = g.edge(ei);
      NodeId u = e.src == v ? e.dst : e.src;
      if (new_id[u] >= 0) continue;
      if (order.size() >= max_nodes) break;
      new_id[u] = static_cast<std::int64_t>(order.size());
      order.push_back(u);
      frontier.push(u);
    }
  }
  std::vector<EdgeRecord> edges;
  for (const auto& e : g.edges()) {
    if (new_id[e.src] < 0 || new_id[e.dst] < 0) continue;
    EdgeRecord r = e;
    r.src = static_cast<NodeId>(new_id[e.src]);
    r.dst = static_cast<NodeId>(new_id[e.dst]);
    edges.push_back(r);
  }
  TransactionGraph sub(order.size(), std::move(edges));
  Matrix feats(order.size(), g.feature_dim());
  std::vector<std::int8_t> labels(order.size());
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t c = 0; c < feats.cols; ++c) feats(i, c) = g.features()(order[i], c);
    labels[i] = g.labels()[order[i]];
    if (!g.external_ids().empty()) ids.push_back(g.external_ids()[order[i]]);
  }
  return sub.with_features_labels(std::move(feats), std::move(labels)).with_external_ids(std::move(ids));
}

std::vector<SplitSpec> make_splits(const TransactionGraph& g, int k, double train_fraction, std::uint64_t seed) {
  if (k < 1) throw ValidationError("make_splits: k must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ValidationError("make_splits: train_fraction must lie in (0, 1)");
  std::vector<NodeId> by_class[2];
  for (NodeId v = 0; v < g.num_nodes(); ++v)
    if (g.is_labeled(v)) by_class[g.labels()[v]].push_back(v);
  for (int c = 0; c < 2; ++c)
    if (by_class[c].size() < 2)
      throw ValidationError("make_splits: class " + std::to_string(c) + " has " +
                            std::to_string(by_class[c].size()) + " labeled nodes; need at least 2 per class");

  std::vector<SplitSpec> splits;
  for (int i = 0; i < k; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 rng(seq);
    SplitSpec s;
    s.seed = seed;
    for (auto members : by_class) {
      std::shuffle(members.begin(), members.end(), rng);
      auto m = members.size();
      auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(m)));
      n_train = std::clamp<std::size_t>(n_train, 1, m - 1);
      s.train_ids.insert(s.train_ids.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
      s.test_ids.insert(s.test_ids.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
    }
    std::sort(s.train_ids.begin(), s.train_ids.end());
    std::sort(s.test_ids.begin(), s.test_ids.end());
    splits.push_back(std::move(s));
  }
  return splits;
}

// ---------------------------------------------------------------------------
// Binary cache

namespace {

constexpr char kGraphMagic[8] = {'A', 'T', 'M', 'G', 'R', 'A', 'P', 'H'};

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError("graph cache truncated");
  return v;
}

}  // namespace

void save_graph_cache(const TransactionGraph& g, std::ostream& out) {
  out.write(kGraphMagic, sizeof(kGraphMagic));
  put<std::uint8_t>(out, kGraphCacheVersion);
  put<std::uint64_t>(out, g.num_nodes());
  put<std::uint64_t>(out, g.num_edges());
  for (const auto& e : g.edges()) {
    put<std::uint32_t>(out, e.src);
    put<std::uint32_t>(out, e.dst);
    put<std::int64_t>(out, e.timestamp);
    put<std::uint8_t>(out, e.amount ? 1 : 0);
    put<double>(out, e.amount.value_or(0.0));
  }
  put<std::uint64_t>(out, g.features().rows);
  put<std::uint64_t>(out, g.features().cols);
  for (double x : g.features().data) put<double>(out, x);
  for (auto l : g.labels()) put<std::int8_t>(out, l);
  put<std::uint64_t>(out, g.external_ids().size());
  for (const auto& id : g.external_ids()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
}

void save_graph_cache(const TransactionGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write graph cache: " + path.string());
  save_graph_cache(g, out);
}

TransactionGraph load_graph_cache(std::istream& in) {
  char magic[sizeof(kGraphMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kGraphMagic, sizeof(magic)) != 0) throw FormatError("not a graph cache (bad magic)");
  auto version = get<std::uint8_t>(in);
  if (version != kGraphCacheVersion)
    throw FormatError("unsupported graph cache version " + std::to_string(version));
  auto n = get<std::uint64_t>(in);
  auto m = get<std::uint64_t>(in);
  std::vector<EdgeRecord> edges(m);
  for (auto& e : edges) {
    e.src = get<std::uint32_t>(in);
    e.dst = get<std::uint32_t>(in);
    e.timestamp = get<std::int64_t>(in);
    bool has_amount = get<std::uint8_t>(in) != 0;
    double amount = get<double>(in);
    if (has_amount) e.amount = amount;
  }
  Matrix feats(get<std::uint64_t>(in), 0);
  feats.cols = get<std::uint64_t>(in);
  feats.data.resize(feats.rows * feats.cols);
  for (auto& x : feats.data) x = get<double>(in);
  std::vector<std::int8_t> labels(n);
  for (auto& l : labels) l = get<std::int8_t>(in);
  std::vector<std::string> ids(get<std::uint64_t>(in));
  for (auto& id : ids) {
    id.resize(get<std::uint32_t>(in));
    in.read(id.data(), static_cast<std::streamsize>(id.size()));
    if (!in) throw FormatError("graph cache truncated");
  }
  TransactionGraph g(n, std::move(edges));
  return g.with_features_labels(std::move(feats), std::move(labels)).with_external_ids(std::move(ids));
}

TransactionGraph load_graph_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open graph cache: " + path.string());
  return load_graph_cache(in);
}

}  // namespace atmgad
