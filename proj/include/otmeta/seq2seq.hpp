#pragma once

// Embedding + single-layer LSTM encoder, single-layer LSTM decoder that sees
// only the encoder's final state, greedy decoding, and the optimisers.

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "otmeta/autodiff.hpp"
#include "otmeta/langspace.hpp"
#include "otmeta/params.hpp"
#include "otmeta/rng.hpp"

namespace otmeta {

/// PAD, SOS, EOS, '.', then the 20 consonants and 10 vowels.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kSos = 1;
  static constexpr int kEos = 2;
  static constexpr int kBoundaryToken = 3;
  static constexpr int kSize = 34;

  static int index(char symbol);  // throws InvalidInput
  static char symbol(int index);  // PAD '_', SOS '^', EOS '$'
  static std::vector<int> encode(std::string_view s);
  /// Maps tokens back to text, stopping at (and dropping) the first EOS.
  static std::string decode(const std::vector<int>& tokens);
};

struct ModelConfig {
  int embed_dim = 10;
  int hidden_dim = 32;
  int max_decode_len = 4 * static_cast<int>(kDefaultMaxInputLength) + 2;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Blocks: embedding, enc_W, enc_b, dec_W, dec_b, out_W, out_b.
ParameterVector init_params(const ModelConfig& cfg, Rng& rng);
ParameterVector zero_params(const ModelConfig& cfg);

struct LstmState {
  Eigen::MatrixXd h;  // [B x H]
  Eigen::MatrixXd c;
};

/// Final encoder state for one input ([1 x H] each).
LstmState encode(std::string_view input, const ParameterVector& params, const ModelConfig& cfg);

enum class Reduction { Mean, Sum };

/// Per-pair loss is the mean token cross-entropy over the target plus EOS
/// under teacher forcing; the batch loss is the mean (or sum) over pairs.
template <typename T>
ad::Var batch_loss(ad::Tape<T>& tape, const std::vector<ad::Var>& params, const std::vector<Example>& batch,
                   const ModelConfig& cfg, Reduction reduction = Reduction::Mean);

double teacher_forced_loss(const Example& pair, const ParameterVector& params, const ModelConfig& cfg);
ad::ValueAndGradient loss_and_gradient(const std::vector<Example>& batch, const ParameterVector& params,
                                       const ModelConfig& cfg, Reduction reduction = Reduction::Mean);
ad::GradientAndHvp loss_gradient_and_hvp(const std::vector<Example>& batch, const ParameterVector& params,
                                         const ParameterVector& direction, const ModelConfig& cfg);

/// Greedy argmax decoding (ties to the lowest index) from SOS until EOS or
/// max_decode_len tokens. Returned token lists exclude EOS.
std::vector<std::vector<int>> greedy_decode_tokens(const std::vector<std::string>& inputs, const ParameterVector& params,
                                                   const ModelConfig& cfg);
std::vector<std::string> greedy_decode(const std::vector<std::string>& inputs, const ParameterVector& params,
                                       const ModelConfig& cfg);
std::string greedy_decode(std::string_view input, const ParameterVector& params, const ModelConfig& cfg);

/// Fraction of examples whose greedy output equals the target exactly.
double exact_match_accuracy(const std::vector<Example>& examples, const ParameterVector& params, const ModelConfig& cfg);

// ---- optimisers -------------------------------------------------------------

ParameterVector sgd_step(const ParameterVector& params, const ParameterVector& grads, double lr);

struct AdamState {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  ParameterVector m;
  ParameterVector v;

  static AdamState for_params(const ParameterVector& p, double lr = 0.001);
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// Bias-corrected Adam update; advances `state`.
ParameterVector adam_step(const ParameterVector& params, const ParameterVector& grads, AdamState& state);

// ---- checkpoints ------------------------------------------------------------

struct Checkpoint {
  ModelConfig config;
  std::uint64_t seed = 0;
  ParameterVector params;
  std::string note;  // free-form provenance

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::string checkpoint_to_string(const Checkpoint& ck);
Checkpoint checkpoint_from_string(const std::string& text);
void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace otmeta
