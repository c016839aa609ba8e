#include "otmeta/seq2seq.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace otmeta {

using ad::Tape;
using ad::Var;

namespace {

enum BlockIndex : std::size_t { kEmbedding = 0, kEncW, kEncB, kDecW, kDecB, kOutW, kOutB };

constexpr std::string_view kSpecials = "_^$.";

}  // namespace

int Vocabulary::index(char symbol) {
  if (symbol == kBoundary) return kBoundaryToken;
  if (const auto p = kConsonants.find(symbol); p != std::string_view::npos) return 4 + static_cast<int>(p);
  if (const auto p = kVowels.find(symbol); p != std::string_view::npos)
    return 4 + static_cast<int>(kConsonants.size() + p);
  throw InvalidInput(std::string("symbol '") + symbol + "' is not in the vocabulary");
}

char Vocabulary::symbol(int index) {
  if (index < 0 || index >= kSize) throw InvalidInput("token index " + std::to_string(index) + " out of range");
  if (index < 4) return kSpecials[static_cast<std::size_t>(index)];
  const auto k = static_cast<std::size_t>(index - 4);
  return k < kConsonants.size() ? kConsonants[k] : kVowels[k - kConsonants.size()];
}

std::vector<int> Vocabulary::encode(std::string_view s) {
  std::vector<int> out;
  out.reserve(s.size());
  for (char c : s) out.push_back(index(c));
  return out;
}

std::string Vocabulary::decode(const std::vector<int>& tokens) {
  std::string s;
  for (int t : tokens) {
    if (t == kEos) break;
    s.push_back(symbol(t));
  }
  return s;
}

void ModelConfig::validate() const {
  if (embed_dim <= 0 || hidden_dim <= 0 || max_decode_len <= 0)
    throw InvalidInput("model dimensions and max_decode_len must be positive");
}

ParameterVector zero_params(const ModelConfig& cfg) {
  cfg.validate();
  const int V = Vocabulary::kSize, E = cfg.embed_dim, H = cfg.hidden_dim;
  ParameterVector p;
  p.add_block("embedding", Eigen::MatrixXd::Zero(V, E));
  p.add_block("enc_W", Eigen::MatrixXd::Zero(E + H, 4 * H));
  p.add_block("enc_b", Eigen::MatrixXd::Zero(1, 4 * H));
  p.add_block("dec_W", Eigen::MatrixXd::Zero(E + H, 4 * H));
  p.add_block("dec_b", Eigen::MatrixXd::Zero(1, 4 * H));
  p.add_block("out_W", Eigen::MatrixXd::Zero(H, V));
  p.add_block("out_b", Eigen::MatrixXd::Zero(1, V));
  return p;
}

ParameterVector init_params(const ModelConfig& cfg, Rng& rng) {
  ParameterVector p = zero_params(cfg);
  const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.hidden_dim));
  for (std::size_t i = 0; i < p.num_blocks(); ++i) {
    auto& m = p.block(i).value;
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.uniform_real(-bound, bound);
  }
  return p;
}

// ---- differentiable forward --------------------------------------------------

namespace {

template <typename T>
std::pair<Var, Var> lstm_step(Tape<T>& t, Var x, Var h, Var c, Var W, Var b, Eigen::Index H) {
  const Var z = t.add_bias(t.matmul(t.concat(x, h), W), b);
  const auto g = t.split(z, {H, H, H, H});
  const Var i = t.sigmoid(g[0]);
  const Var f = t.sigmoid(g[1]);
  const Var cand = t.tanh(g[2]);
  const Var o = t.sigmoid(g[3]);
  const Var c_next = t.add(t.mul(f, c), t.mul(i, cand));
  const Var h_next = t.mul(o, t.tanh(c_next));
  return {h_next, c_next};
}

}  // namespace

template <typename T>
Var batch_loss(Tape<T>& t, const std::vector<Var>& params, const std::vector<Example>& batch, const ModelConfig& cfg,
               Reduction reduction) {
  if (batch.empty()) throw InvalidInput("batch_loss on an empty batch");
  if (params.size() != 7) throw InvalidInput("batch_loss expects the seven seq2seq parameter blocks");
  const auto B = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index H = cfg.hidden_dim;

  std::vector<std::vector<int>> src, tgt;
  std::size_t max_src = 0, max_tgt = 0;
  for (const auto& ex : batch) {
    src.push_back(Vocabulary::encode(ex.input));
    tgt.push_back(Vocabulary::encode(ex.output));
    tgt.back().push_back(Vocabulary::kEos);
    if (static_cast<int>(tgt.back().size()) > cfg.max_decode_len)
      throw InvalidInput("target '" + ex.output + "' plus EOS exceeds max_decode_len " + std::to_string(cfg.max_decode_len));
    max_src = std::max(max_src, src.back().size());
    max_tgt = std::max(max_tgt, tgt.back().size());
  }

  Var h = t.constant(ad::Matrix<T>::Zero(B, H));
  Var c = t.constant(ad::Matrix<T>::Zero(B, H));
  std::vector<int> tokens(batch.size());
  std::vector<bool> active(batch.size());
  for (std::size_t step = 0; step < max_src; ++step) {
    for (std::size_t b = 0; b < batch.size(); ++b) {
      active[b] = step < src[b].size();
      tokens[b] = active[b] ? src[b][step] : Vocabulary::kPad;
    }
    const Var x = t.gather_rows(params[kEmbedding], tokens);
    auto [hn, cn] = lstm_step(t, x, h, c, params[kEncW], params[kEncB], H);
    h = t.select_rows(active, hn, h);
    c = t.select_rows(active, cn, c);
  }

  std::vector<int> targets(batch.size());
  std::vector<double> weights(batch.size());
  Var loss{};
  bool have_loss = false;
  for (std::size_t step = 0; step < max_tgt; ++step) {
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const auto& y = tgt[b];
      tokens[b] = step == 0 ? Vocabulary::kSos : (step - 1 < y.size() ? y[step - 1] : Vocabulary::kPad);
      const bool live = step < y.size();
      targets[b] = live ? y[step] : Vocabulary::kPad;
      const double per_pair = reduction == Reduction::Mean ? static_cast<double>(batch.size()) : 1.0;
      weights[b] = live ? 1.0 / (static_cast<double>(y.size()) * per_pair) : 0.0;
    }
    const Var x = t.gather_rows(params[kEmbedding], tokens);
    std::tie(h, c) = lstm_step(t, x, h, c, params[kDecW], params[kDecB], H);
    const Var logits = t.add_bias(t.matmul(h, params[kOutW]), params[kOutB]);
    const Var ce = t.softmax_cross_entropy(logits, targets, weights);
    loss = have_loss ? t.add(loss, ce) : ce;
    have_loss = true;
  }
  return loss;
}

template Var batch_loss<double>(Tape<double>&, const std::vector<Var>&, const std::vector<Example>&, const ModelConfig&,
                                Reduction);
template Var batch_loss<ad::Dual>(Tape<ad::Dual>&, const std::vector<Var>&, const std::vector<Example>&,
                                  const ModelConfig&, Reduction);

double teacher_forced_loss(const Example& pair, const ParameterVector& params, const ModelConfig& cfg) {
  Tape<double> t;
  const auto vars = ad::bind_parameters(t, params);
  return t.value(batch_loss(t, vars, {pair}, cfg))(0, 0);
}

ad::ValueAndGradient loss_and_gradient(const std::vector<Example>& batch, const ParameterVector& params,
                                       const ModelConfig& cfg, Reduction reduction) {
  return ad::value_and_gradient(
      [&](auto& tape, const std::vector<Var>& vars) { return batch_loss(tape, vars, batch, cfg, reduction); }, params);
}

ad::GradientAndHvp loss_gradient_and_hvp(const std::vector<Example>& batch, const ParameterVector& params,
                                         const ParameterVector& direction, const ModelConfig& cfg) {
  return ad::gradient_and_hvp(
      [&](auto& tape, const std::vector<Var>& vars) { return batch_loss(tape, vars, batch, cfg); }, params, direction);
}

// ---- inference ---------------------------------------------------------------

namespace {

struct Weights {
  const Eigen::MatrixXd& emb;
  const Eigen::MatrixXd& enc_w;
  const Eigen::MatrixXd& enc_b;
  const Eigen::MatrixXd& dec_w;
  const Eigen::MatrixXd& dec_b;
  const Eigen::MatrixXd& out_w;
  const Eigen::MatrixXd& out_b;

  explicit Weights(const ParameterVector& p)
      : emb(p.block(kEmbedding).value),
        enc_w(p.block(kEncW).value),
        enc_b(p.block(kEncB).value),
        dec_w(p.block(kDecW).value),
        dec_b(p.block(kDecB).value),
        out_w(p.block(kOutW).value),
        out_b(p.block(kOutB).value) {}
};

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void lstm_forward(const Eigen::MatrixXd& x, LstmState& s, const Eigen::MatrixXd& W, const Eigen::MatrixXd& b,
                  const std::vector<bool>& active) {
  const Eigen::Index H = s.h.cols();
  Eigen::MatrixXd xh(x.rows(), x.cols() + H);
  xh << x, s.h;
  Eigen::MatrixXd z = xh * W;
  z.rowwise() += b.row(0);
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    if (!active[static_cast<std::size_t>(r)]) continue;
    for (Eigen::Index j = 0; j < H; ++j) {
      const double i = sigm(z(r, j));
      const double f = sigm(z(r, H + j));
      const double g = std::tanh(z(r, 2 * H + j));
      const double o = sigm(z(r, 3 * H + j));
      s.c(r, j) = f * s.c(r, j) + i * g;
      s.h(r, j) = o * std::tanh(s.c(r, j));
    }
  }
}

Eigen::MatrixXd embed(const Eigen::MatrixXd& emb, const std::vector<int>& tokens) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(tokens.size()), emb.cols());
  for (std::size_t i = 0; i < tokens.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = emb.row(tokens[i]);
  return x;
}

LstmState encode_batch(const std::vector<std::vector<int>>& src, const Weights& w, int H) {
  const auto B = static_cast<Eigen::Index>(src.size());
  LstmState s{Eigen::MatrixXd::Zero(B, H), Eigen::MatrixXd::Zero(B, H)};
  std::size_t max_src = 0;
  for (const auto& v : src) max_src = std::max(max_src, v.size());
  std::vector<int> tokens(src.size());
  std::vector<bool> active(src.size());
  for (std::size_t step = 0; step < max_src; ++step) {
    for (std::size_t b = 0; b < src.size(); ++b) {
      active[b] = step < src[b].size();
      tokens[b] = active[b] ? src[b][step] : Vocabulary::kPad;
    }
    lstm_forward(embed(w.emb, tokens), s, w.enc_w, w.enc_b, active);
  }
  return s;
}

void check_params(const ParameterVector& params, const ModelConfig& cfg) {
  if (!params.same_layout(zero_params(cfg))) throw InvalidInput("parameter layout does not match the model config");
}

}  // namespace

LstmState encode(std::string_view input, const ParameterVector& params, const ModelConfig& cfg) {
  check_params(params, cfg);
  return encode_batch({Vocabulary::encode(input)}, Weights(params), cfg.hidden_dim);
}

std::vector<std::vector<int>> greedy_decode_tokens(const std::vector<std::string>& inputs, const ParameterVector& params,
                                                   const ModelConfig& cfg) {
  check_params(params, cfg);
  const Weights w(params);
  std::vector<std::vector<int>> src;
  src.reserve(inputs.size());
  for (const auto& s : inputs) src.push_back(Vocabulary::encode(s));
  LstmState s = encode_batch(src, w, cfg.hidden_dim);

  std::vector<std::vector<int>> out(inputs.size());
  std::vector<bool> active(inputs.size(), true);
  std::vector<int> prev(inputs.size(), Vocabulary::kSos);
  std::size_t remaining = inputs.size();
  for (int step = 0; step < cfg.max_decode_len && remaining > 0; ++step) {
    lstm_forward(embed(w.emb, prev), s, w.dec_w, w.dec_b, active);
    Eigen::MatrixXd logits = s.h * w.out_w;
    logits.rowwise() += w.out_b.row(0);
    for (std::size_t b = 0; b < inputs.size(); ++b) {
      if (!active[b]) continue;
      const auto r = static_cast<Eigen::Index>(b);
      int best = 0;
      for (Eigen::Index j = 1; j < logits.cols(); ++j)
        if (logits(r, j) > logits(r, best)) best = static_cast<int>(j);
      if (best == Vocabulary::kEos) {
        active[b] = false;
        --remaining;
      } else {
        out[b].push_back(best);
        prev[b] = best;
      }
    }
  }
  return out;
}

std::vector<std::string> greedy_decode(const std::vector<std::string>& inputs, const ParameterVector& params,
                                       const ModelConfig& cfg) {
  std::vector<std::string> out;
  for (const auto& toks : greedy_decode_tokens(inputs, params, cfg)) out.push_back(Vocabulary::decode(toks));
  return out;
}

std::string greedy_decode(std::string_view input, const ParameterVector& params, const ModelConfig& cfg) {
  return greedy_decode(std::vector<std::string>{std::string(input)}, params, cfg).front();
}

double exact_match_accuracy(const std::vector<Example>& examples, const ParameterVector& params, const ModelConfig& cfg) {
  if (examples.empty()) return 0.0;
  std::vector<std::string> inputs;
  inputs.reserve(examples.size());
  for (const auto& e : examples) inputs.push_back(e.input);
  const auto predicted = greedy_decode(inputs, params, cfg);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) correct += predicted[i] == examples[i].output;
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

// ---- optimisers -------------------------------------------------------------

ParameterVector sgd_step(const ParameterVector& params, const ParameterVector& grads, double lr) {
  ParameterVector out = params;
  out.axpy(-lr, grads);
  return out;
}

AdamState AdamState::for_params(const ParameterVector& p, double lr) {
  AdamState s;
  s.lr = lr;
  s.m = p.zeros_like();
  s.v = p.zeros_like();
  return s;
}

ParameterVector adam_step(const ParameterVector& params, const ParameterVector& grads, AdamState& st) {
  if (!params.same_layout(grads) || !params.same_layout(st.m)) throw InvalidInput("adam_step: layout mismatch");
  ++st.step;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  ParameterVector out = params;
  for (std::size_t i = 0; i < params.num_blocks(); ++i) {
    const auto& g = grads.block(i).value;
    auto& m = st.m.block(i).value;
    auto& v = st.v.block(i).value;
    m = st.beta1 * m + (1.0 - st.beta1) * g;
    v = st.beta2 * v + (1.0 - st.beta2) * g.cwiseProduct(g);
    auto& p = out.block(i).value;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const double mhat = m(k) / c1;
      const double vhat = v(k) / c2;
      p(k) -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
    }
  }
  return out;
}

// ---- checkpoints ------------------------------------------------------------

namespace {

using json = nlohmann::json;

// Values are stored as IEEE-754 bit patterns so the round trip is exact.
std::string bits_hex(double x) {
  std::uint64_t u;
  std::memcpy(&u, &x, sizeof u);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(u));
  return buf;
}

double hex_bits(const std::string& s) {
  if (s.size() != 16) throw InvalidInput("malformed checkpoint value '" + s + "'");
  const std::uint64_t u = std::stoull(s, nullptr, 16);
  double x;
  std::memcpy(&x, &u, sizeof x);
  return x;
}

}  // namespace

std::string checkpoint_to_string(const Checkpoint& ck) {
  json blocks = json::array();
  for (const auto& b : ck.params.blocks()) {
    std::string data;
    data.reserve(static_cast<std::size_t>(b.value.size()) * 17);
    for (Eigen::Index k = 0; k < b.value.size(); ++k) {
      if (k) data.push_back(' ');
      data += bits_hex(b.value(k));
    }
    blocks.push_back(json{{"name", b.name}, {"rows", b.value.rows()}, {"cols", b.value.cols()}, {"data", data}});
  }
  json j{{"format", "otmeta-checkpoint/1"},
         {"config",
          {{"embed_dim", ck.config.embed_dim},
           {"hidden_dim", ck.config.hidden_dim},
           {"max_decode_len", ck.config.max_decode_len}}},
         {"seed", ck.seed},
         {"note", ck.note},
         {"blocks", blocks}};
  return j.dump(1) + "\n";
}

namespace {

Checkpoint parse_checkpoint(const json& j) {
  if (j.at("format").get<std::string>() != "otmeta-checkpoint/1") throw InvalidInput("unknown checkpoint format");
  Checkpoint ck;
  const auto& c = j.at("config");
  ck.config.embed_dim = c.at("embed_dim").get<int>();
  ck.config.hidden_dim = c.at("hidden_dim").get<int>();
  ck.config.max_decode_len = c.at("max_decode_len").get<int>();
  ck.seed = j.at("seed").get<std::uint64_t>();
  ck.note = j.value("note", "");
  for (const auto& b : j.at("blocks")) {
    Eigen::MatrixXd m(b.at("rows").get<Eigen::Index>(), b.at("cols").get<Eigen::Index>());
    std::istringstream in(b.at("data").get<std::string>());
    std::string tok;
    Eigen::Index k = 0;
    while (in >> tok) {
      if (k >= m.size()) throw InvalidInput("checkpoint block '" + b.at("name").get<std::string>() + "' has too many values");
      m(k++) = hex_bits(tok);
    }
    if (k != m.size()) throw InvalidInput("checkpoint block '" + b.at("name").get<std::string>() + "' has too few values");
    ck.params.add_block(b.at("name").get<std::string>(), std::move(m));
  }
  return ck;
}

}  // namespace

Checkpoint checkpoint_from_string(const std::string& text) {
  try {
    return parse_checkpoint(json::parse(text));
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write checkpoint " + path);
  out << checkpoint_to_string(ck);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str());
}

}  // namespace otmeta
