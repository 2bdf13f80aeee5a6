#include "atmgad/model.hpp"

#include <cmath>
#include <string>

#include "atmgad/error.hpp"

namespace atmgad {

using diff::Tape;
using diff::Tensor;

namespace {

constexpr double kPreActivationBound = 30.0;

Tensor small_uniform(std::size_t rows, std::size_t cols, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor t(rows, cols, true);
  for (auto& x : t.data()) x = dist(rng);
  return t;
}

Tensor zeros_param(std::size_t rows, std::size_t cols) { return Tensor(rows, cols, true); }

Tensor row_tensor(std::span<const double> v) { return Tensor(1, v.size(), std::vector<double>(v.begin(), v.end())); }

}  // namespace

const char* to_string(Ablation a) {
  switch (a) {
    case Ablation::gcn_only: return "gcn_only";
    case Ablation::tm_fixed: return "tm_fixed";
    case Ablation::tm_ada: return "tm_ada";
    case Ablation::tm_ada_intra: return "tm_ada_intra";
    case Ablation::tm_ada_inter: return "tm_ada_inter";
    case Ablation::full: return "full";
  }
  return "?";
}

Ablation ablation_from_string(const std::string& s) {
  for (auto a : {Ablation::gcn_only, Ablation::tm_fixed, Ablation::tm_ada, Ablation::tm_ada_intra,
                 Ablation::tm_ada_inter, Ablation::full})
    if (s == to_string(a)) return a;
  throw ValidationError("unknown ablation '" + s +
                        "' (expected gcn_only, tm_fixed, tm_ada, tm_ada_intra, tm_ada_inter or full)");
}

AblationFlags flags_of(Ablation a) {
  switch (a) {
    case Ablation::gcn_only: return {false, false, false, false};
    case Ablation::tm_fixed: return {true, false, false, false};
    case Ablation::tm_ada: return {true, true, false, false};
    case Ablation::tm_ada_intra: return {true, true, true, false};
    case Ablation::tm_ada_inter: return {true, true, false, true};
    case Ablation::full: return {true, true, true, true};
  }
  return {};
}

MotifBatch make_empty_batch(std::span<const NodeId> nodes) {
  MotifBatch b;
  b.nodes.assign(nodes.begin(), nodes.end());
  b.node_offsets.assign(nodes.size() + 1, 0);
  return b;
}

MotifBatch make_motif_batch(const MotifIndex& index, const TransactionGraph& g, std::span<const NodeId> nodes) {
  if (index.num_nodes() != g.num_nodes())
    throw ValidationError("motif index covers " + std::to_string(index.num_nodes()) + " nodes, graph has " +
                          std::to_string(g.num_nodes()));
  const auto k = static_cast<std::uint32_t>(index.catalog_size());
  MotifBatch b;
  b.nodes.assign(nodes.begin(), nodes.end());
  for (NodeId v : nodes) {
    const double t_v = static_cast<double>(g.t_earliest(v));
    for (const auto& ti : index.at(v)) {
      if (ti.instances.empty()) continue;
      for (const auto& inst : ti.instances) {
        b.member_rows.push_back(ti.type);
        b.member_rows.push_back(k + inst.focal);
        for (NodeId u : inst.nodes)
          if (u != inst.focal) b.member_rows.push_back(k + u);
        b.member_offsets.push_back(b.member_rows.size());
        b.instance_owner.push_back(v);
        b.neg_gaps.push_back(-(static_cast<double>(inst.tau_max) - t_v));
      }
      b.type_offsets.push_back(b.instance_owner.size());
      b.pair_types.push_back(ti.type);
    }
    b.node_offsets.push_back(b.pair_types.size());
  }
  return b;
}

// ---------------------------------------------------------------------------

WindowLearner::WindowLearner(std::size_t d_h, std::size_t hidden, std::mt19937_64& rng)
    : w1(glorot_uniform(d_h, hidden, rng)),
      b1(zeros_param(1, hidden)),
      w2(glorot_uniform(hidden, 1, rng)),
      b2(zeros_param(1, 1)) {}

Tensor WindowLearner::pre_activation(Tape& tape, const Tensor& h) const {
  Tensor hidden = tape.tanh(tape.add(tape.matmul(h, w1), b1));
  return tape.add(tape.matmul(hidden, w2), b2);
}

Tensor WindowLearner::deltas(Tape& tape, const Tensor& h, double tau_max) const {
  if (!(tau_max > 0.0)) throw ValidationError("adaptive window: tau_max must be positive");
  Tensor f = tape.clamp(pre_activation(tape, h), -kPreActivationBound, kPreActivationBound);
  return tape.scale(tape.sigmoid(f), tau_max);
}

MotifAttention::MotifAttention(std::size_t catalog_size, std::size_t d_h, std::mt19937_64& rng)
    : supernodes(small_uniform(catalog_size, d_h, 0.1, rng)),
      w_intra(glorot_uniform(d_h, 1, rng)),
      w_inter(glorot_uniform(catalog_size, d_h, rng)) {}

Tensor MotifAttention::forward(Tape& tape, const Tensor& h, const MotifBatch& batch, const Tensor& deltas,
                               const AblationFlags& flags) const {
  const std::size_t m = batch.num_instances();
  Tensor members = tape.gather_rows(tape.concat_rows(supernodes, h), batch.member_rows);

  Tensor alpha;
  if (flags.intra) {
    alpha = tape.segment_softmax(tape.tanh(tape.matmul(members, w_intra)), batch.member_offsets);
  } else {
    std::vector<double> uniform(4 * m, 1.0 / 3.0);
    for (std::size_t i = 0; i < m; ++i) uniform[4 * i] = 0.0;
    alpha = Tensor::column(std::move(uniform));
  }
  Tensor instances = tape.segment_weighted_sum(members, alpha, batch.member_offsets);

  // log sigma then a per-type softmax gives w_u / sum w_u without the 0/0
  // that direct division hits when every weight underflows.
  Tensor gaps = Tensor::column(batch.neg_gaps);
  Tensor log_w = tape.log_sigmoid(tape.add(tape.gather_rows(deltas, batch.instance_owner), gaps));
  Tensor w = tape.segment_softmax(log_w, batch.type_offsets);
  Tensor types = tape.segment_weighted_sum(instances, w, batch.type_offsets);

  Tensor beta;
  if (flags.inter) {
    Tensor scores = tape.tanh(tape.rowwise_dot(types, tape.gather_rows(w_inter, batch.pair_types)));
    beta = tape.segment_sparsemax(scores, batch.node_offsets);
  } else {
    std::vector<double> uniform(batch.pair_types.size());
    for (std::size_t s = 0; s + 1 < batch.node_offsets.size(); ++s) {
      std::size_t lo = batch.node_offsets[s], hi = batch.node_offsets[s + 1];
      for (std::size_t i = lo; i < hi; ++i) uniform[i] = 1.0 / static_cast<double>(hi - lo);
    }
    beta = Tensor::column(std::move(uniform));
  }
  return tape.segment_weighted_sum(types, beta, batch.node_offsets);
}

Classifier::Classifier(std::size_t in_dim, std::size_t hidden, std::mt19937_64& rng)
    : w1(glorot_uniform(in_dim, hidden, rng)),
      b1(zeros_param(1, hidden)),
      w2(glorot_uniform(hidden, 1, rng)),
      b2(zeros_param(1, 1)) {}

Tensor Classifier::logits(Tape& tape, const Tensor& z) const {
  Tensor hidden = tape.relu(tape.add(tape.matmul(z, w1), b1));
  return tape.add(tape.matmul(hidden, w2), b2);
}

// ---------------------------------------------------------------------------

AtmGadModel::AtmGadModel(std::size_t in_dim, const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.gcn.validate();
  if (config_.head.window_hidden <= 0 || config_.head.classifier_hidden <= 0)
    throw ValidationError("model: hidden sizes must be positive");
  std::mt19937_64 rng(seed);
  backbone_ = GCNBackbone(in_dim, config_.gcn, rng);
  const std::size_t d = embedding_dim();
  window_ = WindowLearner(d, static_cast<std::size_t>(config_.head.window_hidden), rng);
  attention_ = MotifAttention(catalog().size(), d, rng);
  classifier_ = Classifier(2 * d, static_cast<std::size_t>(config_.head.classifier_hidden), rng);
}

std::vector<diff::NamedTensor> AtmGadModel::named_parameters() const {
  auto out = backbone_.named_parameters();
  out.push_back({"window.W1", window_.w1});
  out.push_back({"window.b1", window_.b1});
  out.push_back({"window.W2", window_.w2});
  out.push_back({"window.b2", window_.b2});
  out.push_back({"attention.supernodes", attention_.supernodes});
  out.push_back({"attention.w_intra", attention_.w_intra});
  out.push_back({"attention.w_inter", attention_.w_inter});
  out.push_back({"classifier.W1", classifier_.w1});
  out.push_back({"classifier.b1", classifier_.b1});
  out.push_back({"classifier.W2", classifier_.w2});
  out.push_back({"classifier.b2", classifier_.b2});
  return out;
}

std::vector<Tensor> AtmGadModel::parameters() const {
  std::vector<Tensor> out;
  for (auto& p : named_parameters()) out.push_back(p.tensor);
  return out;
}

ForwardResult AtmGadModel::forward(Tape& tape, const ModelInputs& in, const MotifBatch& batch, bool training,
                                   std::mt19937_64* rng) const {
  const auto f = flags();
  const std::size_t d = embedding_dim();
  ForwardResult r;
  r.embeddings = backbone_.forward(tape, in.features, in.a_hat, training, rng);
  const std::size_t n = r.embeddings.rows();
  if (batch.node_offsets.size() != batch.nodes.size() + 1)
    throw ShapeError("model: motif batch offsets do not match its node list");

  if (f.motifs) {
    if (f.adaptive) {
      r.deltas = window_.deltas(tape, r.embeddings, in.tau_max);
    } else {
      if (!(in.fixed_delta > 0.0)) throw ValidationError("model: fixed window must be positive");
      r.deltas = Tensor::column(std::vector<double>(n, in.fixed_delta));
    }
    r.motif_embedding = attention_.forward(tape, r.embeddings, batch, r.deltas, f);
  } else {
    r.motif_embedding = Tensor(batch.nodes.size(), d);
  }
  r.z = tape.concat_cols(tape.gather_rows(r.embeddings, batch.nodes), r.motif_embedding);
  r.logits = classifier_.logits(tape, r.z);
  return r;
}

std::vector<double> AtmGadModel::compute_deltas(const ModelInputs& in) const {
  const std::size_t n = in.features.rows();
  if (!flags().adaptive) return std::vector<double>(n, in.fixed_delta);
  Tape tape;
  Tensor h = backbone_.forward(tape, in.features, in.a_hat, false, nullptr);
  Tensor d = window_.deltas(tape, h, in.tau_max);
  return {d.data().begin(), d.data().end()};
}

AtmGadModel::NodeOutput AtmGadModel::node_forward(NodeId v, const ModelInputs& in, const MotifIndex& index,
                                                  const TransactionGraph& g) const {
  if (v >= g.num_nodes()) throw ValidationError("node_forward: node " + std::to_string(v) + " out of range");
  const NodeId nodes[1] = {v};
  MotifBatch batch = flags().motifs ? make_motif_batch(index, g, nodes) : make_empty_batch(nodes);
  Tape tape;
  ForwardResult r = forward(tape, in, batch, false, nullptr);
  NodeOutput out;
  out.z.assign(r.z.data().begin(), r.z.data().end());
  out.y_hat = sigmoid(r.logits.item());
  return out;
}

// ---------------------------------------------------------------------------

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double adaptive_window(std::span<const double> h_v, const WindowLearner& learner, double tau_max) {
  Tape tape;
  return learner.deltas(tape, row_tensor(h_v), tau_max).item();
}

double instance_weight(double delta, double tau_instance_max, double t_v) {
  return sigmoid(delta - (tau_instance_max - t_v));
}

std::vector<double> intra_instance_embedding(std::span<const std::vector<double>> members,
                                             std::span<const double> w_intra) {
  if (members.size() != 4) throw ShapeError("intra_instance_embedding: expected 4 members");
  const std::size_t d = w_intra.size();
  Matrix m(4, d);
  for (std::size_t i = 0; i < 4; ++i) {
    if (members[i].size() != d) throw ShapeError("intra_instance_embedding: member dimension mismatch");
    for (std::size_t j = 0; j < d; ++j) m(i, j) = members[i][j];
  }
  Tape tape;
  Tensor mt(m);
  Tensor w = Tensor::column(std::vector<double>(w_intra.begin(), w_intra.end()));
  Tensor alpha = tape.softmax_vec(tape.tanh(tape.matmul(mt, w)));
  Tensor out = tape.weighted_sum(mt, alpha);
  return {out.data().begin(), out.data().end()};
}

std::vector<double> type_embedding(const Matrix& instance_embeddings, std::span<const double> weights) {
  if (instance_embeddings.rows == 0) throw ValidationError("type_embedding: no instances");
  if (weights.size() != instance_embeddings.rows) throw ShapeError("type_embedding: one weight per instance");
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw NumericError("type_embedding: weights sum to zero");
  std::vector<double> out(instance_embeddings.cols, 0.0);
  for (std::size_t i = 0; i < instance_embeddings.rows; ++i)
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += weights[i] * instance_embeddings(i, j);
  for (auto& x : out) x /= total;
  return out;
}

InterResult inter_embedding(const Matrix& type_embeddings, const Matrix& w_inter_rows) {
  if (type_embeddings.rows == 0) throw ValidationError("inter_embedding: no motif types present");
  if (type_embeddings.rows != w_inter_rows.rows || type_embeddings.cols != w_inter_rows.cols)
    throw ShapeError("inter_embedding: w_inter rows must match the present types");
  Tape tape;
  Tensor types(type_embeddings);
  Tensor beta = tape.sparsemax_vec(tape.tanh(tape.rowwise_dot(types, Tensor(w_inter_rows))));
  Tensor out = tape.weighted_sum(types, beta);
  return {{out.data().begin(), out.data().end()}, {beta.data().begin(), beta.data().end()}};
}

}  // namespace atmgad
