#pragma once

#include <cstdint>
#include <vector>

#include "poco/attention.hpp"
#include "poco/diagnostics.hpp"
#include "poco/layout.hpp"
#include "poco/matrix.hpp"
#include "poco/rng.hpp"
#include "poco/rotary.hpp"

namespace poco {

struct SynthTaskParams {
  int num_refs = 2;
  int feature_dim = 64;
  double target_similarity = 0.95;  // pairwise cosine between reference features
  int shots_per_ref = 3;
  int tokens_per_shot = 8;
  double noise_scale = 0.05;
  int text_chunk_len = 4;

  void validate() const;

  friend bool operator==(const SynthTaskParams&, const SynthTaskParams&) = default;
};

/// One synthetic reference-confusion fixture. Reference features are built as
/// sqrt(rho)*u + sqrt(1-rho)*e_j over a random orthonormal frame, so every
/// pairwise cosine equals rho exactly; shot tokens are noisy copies of their
/// bound reference's feature. Generation is a pure function of the seed, with
/// per-component substreams ("refs", "noise"/shot, "projections", ...) so
/// adding shots never perturbs the reference draws.
struct SynthTask {
  SynthTaskParams params;
  std::uint64_t seed = 0;
  DenseMatrix ref_features;    // K x F, unit rows
  DenseMatrix features;        // L_v x F: reference rows first, then shot tokens
  std::vector<int> bound_ref;  // per shot, 1-based
  std::vector<ShotSpec> shots;
  SequenceLayout layout;
  std::vector<TokenCoord> coords;

  int num_shots() const { return static_cast<int>(bound_ref.size()); }
};

SynthTask gen_confusion_task(const SynthTaskParams& params, std::uint64_t seed);

/// The fixed projection used as W_q = W_k = W_v in training-free retrieval:
/// feature_dim x head_dim with orthonormal columns, drawn from the task's
/// "projections" substream.
DenseMatrix retrieval_projection(const SynthTask& task, int head_dim);

struct RetrievalResult {
  double accuracy = 0.0;
  ShotRefMatrix attn;
  ConfusionSummary summary;
};

/// Training-free retrieval through one self-attention pass: features go
/// through the fixed projection as Q = K = V, attention probabilities are
/// aggregated shot-by-reference and each shot predicts its argmax reference.
/// use_sideinfo = false folds the side channels back into the temporal axis.
RetrievalResult run_retrieval(const SynthTask& task, const RotaryConfig& cfg, bool use_sideinfo);

/// Minimal trainable single-head attention stand-in.
struct ToyAttnLayer {
  DenseMatrix w_q;  // F x D
  DenseMatrix w_k;
  DenseMatrix w_v;

  static ToyAttnLayer init(int feature_dim, int head_dim, std::uint64_t seed);
};

/// Everything layer_backward needs, captured by layer_forward.
struct ForwardCache {
  RotaryConfig cfg;
  double scale = 0.0;
  DenseMatrix features;                     // X
  std::vector<std::vector<double>> angles;  // per token
  DenseMatrix q_rot, k_rot;                 // rotated projections
  DenseMatrix probs;                        // N x N
  ShotRefMatrix aggregated;                 // S x K
  std::vector<double> row_mass;             // per shot: sum over references
  std::vector<int> bound_ref;
  SequenceLayout layout;
  double loss = 0.0;
};

/// Cross-entropy of the shot-to-reference aggregated attention against the
/// bound labels. Only the attention probabilities enter the objective, so the
/// value path is inert (W_v gets an identically zero gradient; the
/// finite-difference check confirms it).
double layer_forward(const ToyAttnLayer& layer, const SynthTask& task, const RotaryConfig& cfg,
                     ForwardCache* cache = nullptr);

struct LayerGradients {
  DenseMatrix w_q;  // F x D
  DenseMatrix w_k;
  DenseMatrix w_v;  // identically zero under this objective
  DenseMatrix q_rows;  // d loss / d Q, N x D (pre-rotation), diagnostic
  DenseMatrix k_rows;
};

LayerGradients layer_backward(const ToyAttnLayer& layer, const ForwardCache& cache);

struct TrainReport {
  std::vector<double> loss;       // per step, plus the post-training value
  std::vector<double> accuracy;   // same indexing
  ShotRefMatrix final_attn;
  double final_loss = 0.0;
  double final_accuracy = 0.0;
  RotaryConfig effective_cfg;
  bool used_sideinfo = false;
  int steps = 0;
  double lr = 0.0;
  std::uint64_t task_seed = 0;
  std::uint64_t init_seed = 0;
};

/// Plain full-batch gradient descent on W_q/W_k/W_v. Deterministic given
/// (task, seed). Non-finite loss aborts with the offending step index.
TrainReport train_binding(const SynthTask& task, const RotaryConfig& cfg, bool use_sideinfo,
                          int steps, double lr, std::uint64_t seed);

struct GradCheckResult {
  int draws = 0;
  int passed = 0;
  double worst_rel_err = 0.0;
  std::vector<std::uint64_t> failing_seeds;

  double pass_fraction() const { return draws == 0 ? 0.0 : static_cast<double>(passed) / draws; }
};

/// Central finite-difference check of layer_backward over `draws` random
/// small fixtures; per-entry relative error |ga-gn| / max(1, |ga|+|gn|).
GradCheckResult grad_check(int draws, std::uint64_t base_seed, double eps, double tol);

}  // namespace poco
