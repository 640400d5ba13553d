#include "spangcn/encoder.hpp"

#include <algorithm>

#include "spangcn/error.hpp"

namespace spangcn {

EdgeLabelVocab EdgeLabelVocab::from(const std::set<std::string>& labels) {
  EdgeLabelVocab v;
  v.labels.assign(labels.begin(), labels.end());
  return v;
}

int EdgeLabelVocab::id(const std::string& label) const {
  auto it = std::lower_bound(labels.begin(), labels.end(), label);
  if (it != labels.end() && *it == label)
    return static_cast<int>(it - labels.begin());
  return static_cast<int>(labels.size());  // UNK
}

Var ParamVars::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  Var v = tape_->leaf(params_->get(name), name);
  bound_.emplace(name, v);
  return v;
}

GradMap ParamVars::grads() const {
  GradMap g;
  for (const auto& [name, tensor] : params_->t) {
    auto it = bound_.find(name);
    if (it != bound_.end())
      g.emplace(name, tape_->grad(it->second));
    else
      g.emplace(name, Tensor(tensor.shape));  // off-path: zero gradient
  }
  return g;
}

// -- parameter registration ----------------------------------------------

void init_word_rep_params(ModelParams& p, const EncoderConfig& cfg,
                          std::mt19937_64& rng) {
  p.add_vector("wordrep.ln.gain", cfg.embed_dim, 1.0);
  p.add_vector("wordrep.ln.bias", cfg.embed_dim, 0.0);
  p.add_xavier("predemb", 2, cfg.pred_dim, rng);
}

void init_bilstm_params(ModelParams& p, const std::string& prefix,
                        int input_dim, int hidden, int layers,
                        std::mt19937_64& rng) {
  for (int l = 0; l < layers; ++l) {
    int in = l == 0 ? input_dim : hidden;
    std::string pre = prefix + ".l" + std::to_string(l);
    p.add_xavier(pre + ".W", 4 * hidden, in + hidden, rng);
    Tensor& b = p.add_vector(pre + ".b", 4 * hidden, 0.0);
    for (int i = hidden; i < 2 * hidden; ++i) b.at(i) = 1.0;  // forget bias
    p.add_xavier(pre + ".Wt", hidden, in, rng);
    p.add_vector(pre + ".bt", hidden, 0.0);
    p.add_xavier(pre + ".proj", hidden, in, rng);
  }
}

void init_gcn_stage_params(ModelParams& p, const std::string& prefix,
                           const std::vector<std::string>& coarse_types,
                           int hidden, int fine_count, std::mt19937_64& rng) {
  for (const std::string& c : coarse_types) {
    std::string pre = prefix + "." + c;
    p.add_xavier(pre + ".U", hidden, hidden, rng);
    p.add(pre + ".b", {fine_count, hidden});
    p.add_xavier(pre + ".gu", 1, hidden, rng);
    p.add_vector(pre + ".gb", fine_count, 0.0);
  }
  p.add_vector(prefix + ".ln.gain", hidden, 1.0);
  p.add_vector(prefix + ".ln.bias", hidden, 0.0);
}

// -- forward pieces ------------------------------------------------------

std::vector<Var> embed_tokens(Tape& tape, ParamVars& pv,
                              const EncoderConfig& cfg,
                              const std::vector<std::string>& tokens,
                              int predicate, const EmbeddingTable& emb,
                              bool train, std::mt19937_64& rng) {
  int T = static_cast<int>(tokens.size());
  if (predicate < 0 || predicate >= T)
    throw ValidationError("embed_tokens: predicate index out of range");
  Var gain = pv("wordrep.ln.gain");
  Var bias = pv("wordrep.ln.bias");
  Var predemb = pv("predemb");
  std::vector<Var> out;
  out.reserve(T);
  for (int t = 0; t < T; ++t) {
    Var w = tape.leaf(emb.lookup(tokens[t]));  // frozen: constant leaf
    Var x = tape.layer_norm(w, gain, bias, cfg.ln_eps);
    x = tape.dropout(x, cfg.word_dropout, rng, train);
    Var flag = tape.row(predemb, t == predicate ? 1 : 0);
    out.push_back(tape.concat(x, flag));
  }
  return out;
}

namespace {

// One unidirectional LSTM pass with a per-sequence hidden-state dropout
// mask, followed by a highway combination with the layer input.
std::vector<Var> lstm_layer(Tape& tape, ParamVars& pv, const std::string& pre,
                            const std::vector<Var>& inputs, int hidden,
                            bool backward_dir, double recurrent_dropout,
                            bool train, std::mt19937_64& rng) {
  int T = static_cast<int>(inputs.size());
  Var W = pv(pre + ".W");
  Var b = pv(pre + ".b");
  Var Wt = pv(pre + ".Wt");
  Var bt = pv(pre + ".bt");
  Var proj = pv(pre + ".proj");

  Tensor mask = train && recurrent_dropout > 0
                    ? Tape::make_dropout_mask(hidden, recurrent_dropout, rng)
                    : Tensor();
  Var h = tape.leaf(Tensor({hidden}));
  Var c = tape.leaf(Tensor({hidden}));
  Tensor ones_t({hidden});
  for (double& e : ones_t.v) e = 1.0;
  Var ones = tape.leaf(std::move(ones_t));

  std::vector<Var> hs(T);
  for (int step = 0; step < T; ++step) {
    int t = backward_dir ? T - 1 - step : step;
    Var h_in = mask.size() ? tape.dropout_mask(h, mask) : h;
    Var z = tape.add(tape.matvec(W, tape.concat(inputs[t], h_in)), b);
    Var i = tape.sigmoid(tape.slice(z, 0, hidden));
    Var f = tape.sigmoid(tape.slice(z, hidden, hidden));
    Var o = tape.sigmoid(tape.slice(z, 2 * hidden, hidden));
    Var g = tape.tanh(tape.slice(z, 3 * hidden, hidden));
    c = tape.add(tape.mul(f, c), tape.mul(i, g));
    h = tape.mul(o, tape.tanh(c));
    hs[t] = h;
  }
  // Highway: out = t .* lstm + (1-t) .* Proj(input).
  std::vector<Var> out(T);
  for (int t = 0; t < T; ++t) {
    Var tg = tape.sigmoid(tape.add(tape.matvec(Wt, inputs[t]), bt));
    Var carry = tape.sub(ones, tg);
    out[t] = tape.add(tape.mul(tg, hs[t]),
                      tape.mul(carry, tape.matvec(proj, inputs[t])));
  }
  return out;
}

}  // namespace

std::vector<Var> bilstm_encode(Tape& tape, ParamVars& pv,
                               const std::string& prefix,
                               const std::vector<Var>& inputs, int layers,
                               int hidden, double recurrent_dropout,
                               bool train, std::mt19937_64& rng) {
  if (layers < 1) throw ValidationError("bilstm_encode: layers must be >= 1");
  if (inputs.empty()) return {};
  std::vector<Var> cur = inputs;
  for (int l = 0; l < layers; ++l) {
    bool backward_dir = l % 2 == 1;  // layer 1 forward, layer 2 backward, ...
    cur = lstm_layer(tape, pv, prefix + ".l" + std::to_string(l), cur, hidden,
                     backward_dir, recurrent_dropout, train, rng);
  }
  return cur;
}

std::vector<Var> gated_gcn_layer(Tape& tape, ParamVars& pv,
                                 const std::string& prefix,
                                 const std::vector<Var>& states,
                                 const std::vector<GcnEdge>& edges,
                                 const std::vector<int>& update_nodes,
                                 double ln_eps) {
  int n = static_cast<int>(states.size());
  std::vector<std::vector<Var>> messages(n);
  for (const GcnEdge& e : edges) {
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n)
      throw ValidationError("gated_gcn_layer: edge endpoint out of range");
    std::string pre = prefix + "." + e.coarse;
    Var m = tape.add(tape.matvec(pv(pre + ".U"), states[e.src]),
                     tape.row(pv(pre + ".b"), e.fine));
    Var gate = tape.sigmoid(
        tape.add(tape.pick(tape.matvec(pv(pre + ".gu"), states[e.src]), 0),
                 tape.pick(pv(pre + ".gb"), e.fine)));
    messages[e.dst].push_back(tape.gate_scale(gate, m));
  }
  Var gain = pv(prefix + ".ln.gain");
  Var bias = pv(prefix + ".ln.bias");
  std::vector<Var> out = states;
  int hidden = tape.val(pv(prefix + ".ln.gain")).size();
  for (int v : update_nodes) {
    Var pre_act = messages[v].empty() ? tape.leaf(Tensor({hidden}))
                                      : tape.add_many(messages[v]);
    out[v] = tape.relu(tape.layer_norm(pre_act, gain, bias, ln_eps));
  }
  return out;
}

namespace {

std::string coarse_name(Coarse c) {
  switch (c) {
    case Coarse::Start: return "start";
    case Coarse::End: return "end";
    case Coarse::ParentToChild: return "pc";
    case Coarse::ChildToParent: return "cp";
    case Coarse::SelfLoop: return "self";
  }
  return "?";
}

}  // namespace

std::vector<Var> spangcn_encode(Tape& tape, ParamVars& pv,
                                const EncoderConfig& cfg,
                                const std::vector<Var>& word_reps,
                                const SpanGraph& graph,
                                const EdgeLabelVocab& cons_labels, bool train,
                                std::mt19937_64& rng) {
  if (static_cast<int>(word_reps.size()) != graph.word_count)
    throw ValidationError("spangcn_encode: token count mismatch with graph");
  std::vector<Var> lower =
      bilstm_encode(tape, pv, "enc.lower", word_reps, cfg.lower_layers,
                    cfg.hidden, cfg.recurrent_dropout, train, rng);

  int W = graph.word_count, C = graph.constituent_count;
  std::vector<Var> states = lower;
  for (int c = 0; c < C; ++c)
    states.push_back(tape.leaf(Tensor({cfg.hidden})));  // initially zero

  auto stage_edges = [&](Stage st) {
    std::vector<GcnEdge> es;
    for (const SpanEdge& e : graph.edges) {
      if (e.stage != st) continue;
      int src = e.src.is_word ? e.src.index : W + e.src.index;
      int dst = e.dst.is_word ? e.dst.index : W + e.dst.index;
      es.push_back({src, dst, coarse_name(e.coarse), cons_labels.id(e.label)});
    }
    return es;
  };
  std::vector<int> cons_nodes, word_nodes;
  for (int c = 0; c < C; ++c) cons_nodes.push_back(W + c);
  for (int w = 0; w < W; ++w) word_nodes.push_back(w);

  for (int k = 0; k < cfg.gcn_layers; ++k)
    states = gated_gcn_layer(tape, pv, "enc.compose.k" + std::to_string(k),
                             states, stage_edges(Stage::Compose), cons_nodes,
                             cfg.ln_eps);
  for (int k = 0; k < cfg.gcn_layers; ++k)
    states = gated_gcn_layer(tape, pv, "enc.tree.k" + std::to_string(k),
                             states, stage_edges(Stage::Tree), cons_nodes,
                             cfg.ln_eps);
  for (int k = 0; k < cfg.gcn_layers; ++k)
    states = gated_gcn_layer(tape, pv, "enc.decompose.k" + std::to_string(k),
                             states, stage_edges(Stage::Decompose), word_nodes,
                             cfg.ln_eps);

  // Residual from the lower-BiLSTM word states.
  std::vector<Var> words(W);
  for (int w = 0; w < W; ++w) words[w] = tape.add(states[w], lower[w]);

  return bilstm_encode(tape, pv, "enc.top", words, cfg.top_layers, cfg.hidden,
                       cfg.recurrent_dropout, train, rng);
}

std::vector<Var> depgcn_encode(Tape& tape, ParamVars& pv,
                               const EncoderConfig& cfg,
                               const std::vector<Var>& word_reps,
                               const DependencyTree& dep,
                               const EdgeLabelVocab& dep_labels, bool train,
                               std::mt19937_64& rng) {
  if (static_cast<int>(word_reps.size()) != dep.size())
    throw ValidationError("depgcn_encode: token count mismatch with tree");
  std::vector<Var> lower =
      bilstm_encode(tape, pv, "enc.lower", word_reps, cfg.lower_layers,
                    cfg.hidden, cfg.recurrent_dropout, train, rng);

  std::vector<GcnEdge> edges;
  for (int i = 0; i < dep.size(); ++i) {
    int lab = dep_labels.id(dep.labels[i]);
    if (dep.heads[i] >= 0) {
      edges.push_back({dep.heads[i], i, "hd", lab});  // head -> dependent
      edges.push_back({i, dep.heads[i], "dh", lab});
    }
  }
  for (int i = 0; i < dep.size(); ++i)
    edges.push_back({i, i, "self", dep_labels.id(dep.labels[i])});
  std::vector<int> all_words(dep.size());
  for (int i = 0; i < dep.size(); ++i) all_words[i] = i;

  std::vector<Var> states = lower;
  for (int k = 0; k < cfg.gcn_layers; ++k)
    states = gated_gcn_layer(tape, pv, "enc.depgcn.k" + std::to_string(k),
                             states, edges, all_words, cfg.ln_eps);

  std::vector<Var> words(dep.size());
  for (int w = 0; w < dep.size(); ++w) words[w] = tape.add(states[w], lower[w]);
  return bilstm_encode(tape, pv, "enc.top", words, cfg.top_layers, cfg.hidden,
                       cfg.recurrent_dropout, train, rng);
}

std::vector<Var> baseline_encode(Tape& tape, ParamVars& pv,
                                 const EncoderConfig& cfg,
                                 const std::vector<Var>& word_reps, bool train,
                                 std::mt19937_64& rng) {
  return bilstm_encode(tape, pv, "enc.base", word_reps, cfg.baseline_layers,
                       cfg.hidden, cfg.recurrent_dropout, train, rng);
}

void init_spangcn_params(ModelParams& p, const EncoderConfig& cfg,
                         const EdgeLabelVocab& cons_labels,
                         std::mt19937_64& rng) {
  int in = cfg.embed_dim + cfg.pred_dim;
  init_bilstm_params(p, "enc.lower", in, cfg.hidden, cfg.lower_layers, rng);
  int fine = cons_labels.size_with_unk();
  for (int k = 0; k < cfg.gcn_layers; ++k) {
    std::string sk = ".k" + std::to_string(k);
    init_gcn_stage_params(p, "enc.compose" + sk, {"start", "end"}, cfg.hidden,
                          fine, rng);
    init_gcn_stage_params(p, "enc.tree" + sk, {"pc", "cp", "self"}, cfg.hidden,
                          fine, rng);
    init_gcn_stage_params(p, "enc.decompose" + sk, {"start", "end"},
                          cfg.hidden, fine, rng);
  }
  init_bilstm_params(p, "enc.top", cfg.hidden, cfg.hidden, cfg.top_layers, rng);
}

void init_depgcn_params(ModelParams& p, const EncoderConfig& cfg,
                        const EdgeLabelVocab& dep_labels,
                        std::mt19937_64& rng) {
  int in = cfg.embed_dim + cfg.pred_dim;
  init_bilstm_params(p, "enc.lower", in, cfg.hidden, cfg.lower_layers, rng);
  for (int k = 0; k < cfg.gcn_layers; ++k)
    init_gcn_stage_params(p, "enc.depgcn.k" + std::to_string(k),
                          {"hd", "dh", "self"}, cfg.hidden,
                          dep_labels.size_with_unk(), rng);
  init_bilstm_params(p, "enc.top", cfg.hidden, cfg.hidden, cfg.top_layers, rng);
}

void init_baseline_params(ModelParams& p, const EncoderConfig& cfg,
                          std::mt19937_64& rng) {
  int in = cfg.embed_dim + cfg.pred_dim;
  init_bilstm_params(p, "enc.base", in, cfg.hidden, cfg.baseline_layers, rng);
}

}  // namespace spangcn
