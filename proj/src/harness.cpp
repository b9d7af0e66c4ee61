#include "poco/harness.hpp"

#include <cmath>
#include <string>

namespace poco {

namespace {

// Draws `count` gaussian vectors and orthonormalizes them (modified
// Gram-Schmidt, run twice). Returns count x dim rows.
DenseMatrix orthonormal_rows(Rng& rng, int count, int dim) {
  DenseMatrix rows(static_cast<std::size_t>(count), static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    for (std::size_t j = 0; j < rows.cols(); ++j) {
      rows.at(i, j) = rng.next_gaussian();
    }
  }
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < rows.rows(); ++i) {
      auto row = rows.row(i);
      for (std::size_t prev = 0; prev < i; ++prev) {
        const double proj = dot(rows.row(prev), row);
        for (std::size_t j = 0; j < rows.cols(); ++j) {
          row[j] -= proj * rows.at(prev, j);
        }
      }
      const double norm = norm2(row);
      if (norm < 1e-8) {
        throw numeric_error("orthonormal_rows: degenerate draw, vectors nearly dependent");
      }
      for (std::size_t j = 0; j < rows.cols(); ++j) {
        row[j] /= norm;
      }
    }
  }
  return rows;
}

}  // namespace

void SynthTaskParams::validate() const {
  if (num_refs < 2) {
    throw argument_error("SynthTaskParams: num_refs must be at least 2");
  }
  if (feature_dim < num_refs + 1) {
    throw argument_error("SynthTaskParams: feature_dim must be at least num_refs + 1 to host "
                         "the orthonormal frame");
  }
  if (target_similarity < 0.0 || target_similarity > 1.0) {
    throw argument_error("SynthTaskParams: target_similarity must lie in [0, 1]");
  }
  if (shots_per_ref < 1 || tokens_per_shot < 1) {
    throw argument_error("SynthTaskParams: shots_per_ref and tokens_per_shot must be positive");
  }
  if (noise_scale < 0.0 || !std::isfinite(noise_scale)) {
    throw argument_error("SynthTaskParams: noise_scale must be a non-negative finite real");
  }
  if (text_chunk_len < 1) {
    throw argument_error("SynthTaskParams: text_chunk_len must be positive");
  }
}

SynthTask gen_confusion_task(const SynthTaskParams& params, std::uint64_t seed) {
  params.validate();
  const int k = params.num_refs;
  const int f = params.feature_dim;
  const double rho = params.target_similarity;

  SynthTask task;
  task.params = params;
  task.seed = seed;

  const Rng root(seed);

  // Shared component u plus per-reference residuals e_j, all orthonormal.
  Rng frame_rng = root.substream("refs");
  const DenseMatrix frame = orthonormal_rows(frame_rng, k + 1, f);
  const double shared = std::sqrt(rho);
  const double residual = std::sqrt(1.0 - rho);
  task.ref_features = DenseMatrix(static_cast<std::size_t>(k), static_cast<std::size_t>(f));
  for (int j = 0; j < k; ++j) {
    for (int c = 0; c < f; ++c) {
      task.ref_features.at(j, c) =
          shared * frame.at(0, static_cast<std::size_t>(c)) +
          residual * frame.at(static_cast<std::size_t>(j + 1), static_cast<std::size_t>(c));
    }
  }
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      const double cosine = dot(task.ref_features.row(a), task.ref_features.row(b)) /
                            (norm2(task.ref_features.row(a)) * norm2(task.ref_features.row(b)));
      if (std::abs(cosine - rho) > 1e-9) {
        throw numeric_error("gen_confusion_task: reference cosine off target at generation");
      }
    }
  }

  const int num_shots = k * params.shots_per_ref;
  std::vector<int> ref_token_counts(static_cast<std::size_t>(k), 1);
  std::vector<RefGrid> ref_grids(static_cast<std::size_t>(k), RefGrid{1, 1});
  for (int s = 0; s < num_shots; ++s) {
    const int bound = (s % k) + 1;
    task.bound_ref.push_back(bound);
    task.shots.push_back(make_shot_spec(s + 1, params.tokens_per_shot, 1, 1,
                                        "shot " + std::to_string(s + 1) + ": @character_" +
                                            std::to_string(bound) + " in frame",
                                        k));
  }
  task.layout = build_layout(ref_token_counts, task.shots, params.text_chunk_len);
  task.coords = assign_coords(task.layout, task.shots, ref_grids);

  task.features = DenseMatrix(task.layout.visual_len, static_cast<std::size_t>(f));
  for (int j = 0; j < k; ++j) {
    const std::size_t row = task.layout.ref_ranges[static_cast<std::size_t>(j)].begin;
    for (int c = 0; c < f; ++c) {
      task.features.at(row, static_cast<std::size_t>(c)) =
          task.ref_features.at(static_cast<std::size_t>(j), static_cast<std::size_t>(c));
    }
  }
  for (int s = 0; s < num_shots; ++s) {
    Rng noise = root.substream("noise", static_cast<std::uint64_t>(s));
    const IndexRange& range = task.layout.shot_ranges[static_cast<std::size_t>(s)];
    const std::size_t ref_row = static_cast<std::size_t>(task.bound_ref[static_cast<std::size_t>(s)] - 1);
    for (std::size_t i = range.begin; i < range.end; ++i) {
      for (int c = 0; c < f; ++c) {
        task.features.at(i, static_cast<std::size_t>(c)) =
            task.ref_features.at(ref_row, static_cast<std::size_t>(c)) +
            params.noise_scale * noise.next_gaussian();
      }
    }
  }
  return task;
}

DenseMatrix retrieval_projection(const SynthTask& task, int head_dim) {
  if (head_dim < 1) {
    throw argument_error("retrieval_projection: head_dim must be positive");
  }
  if (task.params.feature_dim < head_dim) {
    throw argument_error("retrieval_projection: feature_dim must be >= head_dim for an "
                         "orthonormal-column projection");
  }
  Rng rng = Rng(task.seed).substream("projections");
  const DenseMatrix cols = orthonormal_rows(rng, head_dim, task.params.feature_dim);
  // Stored rows are the projection's columns; transpose into F x D.
  DenseMatrix proj(static_cast<std::size_t>(task.params.feature_dim),
                   static_cast<std::size_t>(head_dim));
  for (std::size_t d = 0; d < cols.rows(); ++d) {
    for (std::size_t c = 0; c < cols.cols(); ++c) {
      proj.at(c, d) = cols.at(d, c);
    }
  }
  return proj;
}

RetrievalResult run_retrieval(const SynthTask& task, const RotaryConfig& cfg, bool use_sideinfo) {
  cfg.validate();
  if (cfg.num_refs != task.params.num_refs) {
    throw argument_error("run_retrieval: cfg.num_refs does not match the task");
  }
  const RotaryConfig effective = use_sideinfo ? cfg : cfg.without_sideinfo();
  const DenseMatrix proj = retrieval_projection(task, cfg.head_dim);
  const DenseMatrix qkv = matmul(task.features, proj);
  const AttentionResult attn = self_attention(qkv, qkv, qkv, task.coords, effective);

  RetrievalResult result;
  result.attn = shot_to_ref_scores(attn.probs, task.layout);
  result.summary = confusion_argmax(result.attn, task.bound_ref);
  result.accuracy = result.summary.accuracy;
  return result;
}

ToyAttnLayer ToyAttnLayer::init(int feature_dim, int head_dim, std::uint64_t seed) {
  if (feature_dim < 1 || head_dim < 1) {
    throw argument_error("ToyAttnLayer::init: dimensions must be positive");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  ToyAttnLayer layer;
  const Rng root(seed);
  for (auto [name, w] : {std::pair{"wq", &layer.w_q}, {"wk", &layer.w_k}, {"wv", &layer.w_v}}) {
    Rng rng = root.substream(name);
    *w = DenseMatrix(static_cast<std::size_t>(feature_dim), static_cast<std::size_t>(head_dim));
    for (std::size_t i = 0; i < w->rows(); ++i) {
      for (std::size_t j = 0; j < w->cols(); ++j) {
        w->at(i, j) = scale * rng.next_gaussian();
      }
    }
  }
  return layer;
}

double layer_forward(const ToyAttnLayer& layer, const SynthTask& task, const RotaryConfig& cfg,
                     ForwardCache* cache) {
  cfg.validate();
  if (layer.w_q.rows() != static_cast<std::size_t>(task.params.feature_dim) ||
      layer.w_q.cols() != static_cast<std::size_t>(cfg.head_dim)) {
    throw argument_error("layer_forward: W_q shape must be feature_dim x head_dim");
  }
  if (layer.w_k.rows() != layer.w_q.rows() || layer.w_k.cols() != layer.w_q.cols() ||
      layer.w_v.rows() != layer.w_q.rows() || layer.w_v.cols() != layer.w_q.cols()) {
    throw argument_error("layer_forward: W_q/W_k/W_v shapes differ");
  }

  const PlaneSchedule schedule = build_plane_schedule(cfg);
  const DenseMatrix q = matmul(task.features, layer.w_q);
  const DenseMatrix k = matmul(task.features, layer.w_k);

  std::vector<std::vector<double>> angles(task.coords.size());
  for (std::size_t n = 0; n < task.coords.size(); ++n) {
    const TokenCoord& c = task.coords[n];
    angles[n] = plane_angles(schedule, c.t, c.h, c.w, c.side.bits);
  }
  DenseMatrix q_rot = q;
  DenseMatrix k_rot = k;
  for (std::size_t n = 0; n < task.coords.size(); ++n) {
    apply_rotation_inplace(q_rot.row(n), angles[n]);
    apply_rotation_inplace(k_rot.row(n), angles[n]);
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.head_dim));
  const DenseMatrix scores = attention_scores(q_rot, k_rot, scale);
  if (!scores.all_finite()) {
    throw numeric_error("layer_forward: non-finite attention scores");
  }
  const DenseMatrix probs = softmax_rows(scores);
  const ShotRefMatrix aggregated = shot_to_ref_scores(probs, task.layout);

  const std::size_t num_shots = aggregated.shots;
  std::vector<double> row_mass(num_shots, 0.0);
  double loss = 0.0;
  for (std::size_t s = 0; s < num_shots; ++s) {
    for (std::size_t r = 0; r < aggregated.refs; ++r) {
      row_mass[s] += aggregated.at(s, r);
    }
    const double p_bound =
        aggregated.at(s, static_cast<std::size_t>(task.bound_ref[s] - 1)) / row_mass[s];
    loss += -std::log(p_bound);
  }
  loss /= static_cast<double>(num_shots);
  if (!std::isfinite(loss)) {
    throw numeric_error("layer_forward: non-finite loss");
  }

  if (cache != nullptr) {
    cache->cfg = cfg;
    cache->scale = scale;
    cache->features = task.features;
    cache->angles = std::move(angles);
    cache->q_rot = std::move(q_rot);
    cache->k_rot = std::move(k_rot);
    cache->probs = probs;
    cache->aggregated = aggregated;
    cache->row_mass = std::move(row_mass);
    cache->bound_ref = task.bound_ref;
    cache->layout = task.layout;
    cache->loss = loss;
  }
  return loss;
}

LayerGradients layer_backward(const ToyAttnLayer& layer, const ForwardCache& cache) {
  if (cache.probs.empty()) {
    throw argument_error("layer_backward: cache was not produced by layer_forward");
  }
  const std::size_t n_tokens = cache.probs.rows();
  const std::size_t num_shots = cache.aggregated.shots;
  const std::size_t num_refs = cache.aggregated.refs;
  const double inv_shots = 1.0 / static_cast<double>(num_shots);

  // d loss / d aggregated entries.
  DenseMatrix d_agg(num_shots, num_refs);
  for (std::size_t s = 0; s < num_shots; ++s) {
    const std::size_t bound = static_cast<std::size_t>(cache.bound_ref[s] - 1);
    for (std::size_t r = 0; r < num_refs; ++r) {
      d_agg.at(s, r) = inv_shots * (1.0 / cache.row_mass[s] -
                                    (r == bound ? 1.0 / cache.aggregated.at(s, bound) : 0.0));
    }
  }

  // Scatter back to probability entries; only (shot row, ref column) cells
  // carry gradient.
  DenseMatrix d_probs(n_tokens, n_tokens);
  for (std::size_t s = 0; s < num_shots; ++s) {
    const IndexRange& rows = cache.layout.shot_ranges[s];
    for (std::size_t r = 0; r < num_refs; ++r) {
      const IndexRange& cols = cache.layout.ref_ranges[r];
      const double g =
          d_agg.at(s, r) / (static_cast<double>(rows.size()) * static_cast<double>(cols.size()));
      for (std::size_t q = rows.begin; q < rows.end; ++q) {
        for (std::size_t c = cols.begin; c < cols.end; ++c) {
          d_probs.at(q, c) = g;
        }
      }
    }
  }

  // Softmax backward, row by row.
  DenseMatrix d_scores(n_tokens, n_tokens);
  for (std::size_t q = 0; q < n_tokens; ++q) {
    const double inner = dot(d_probs.row(q), cache.probs.row(q));
    for (std::size_t c = 0; c < n_tokens; ++c) {
      d_scores.at(q, c) = cache.probs.at(q, c) * (d_probs.at(q, c) - inner);
    }
  }

  // Through the scaled dot product and the per-token rotations; rotations are
  // orthogonal so the transpose is a rotation by the negated angles.
  DenseMatrix d_q = matmul(d_scores, cache.k_rot);
  DenseMatrix d_k = matmul_tn(d_scores, cache.q_rot);
  for (std::size_t n = 0; n < n_tokens; ++n) {
    std::vector<double> neg(cache.angles[n].size());
    for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -cache.angles[n][i];
    apply_rotation_inplace(d_q.row(n), neg);
    apply_rotation_inplace(d_k.row(n), neg);
    for (std::size_t c = 0; c < d_q.cols(); ++c) {
      d_q.at(n, c) *= cache.scale;
      d_k.at(n, c) *= cache.scale;
    }
  }

  LayerGradients grads;
  grads.w_q = matmul_tn(cache.features, d_q);
  grads.w_k = matmul_tn(cache.features, d_k);
  grads.w_v = DenseMatrix(layer.w_v.rows(), layer.w_v.cols());
  grads.q_rows = std::move(d_q);
  grads.k_rows = std::move(d_k);
  return grads;
}

TrainReport train_binding(const SynthTask& task, const RotaryConfig& cfg, bool use_sideinfo,
                          int steps, double lr, std::uint64_t seed) {
  if (steps < 1) {
    throw argument_error("train_binding: steps must be at least 1");
  }
  if (lr < 0.0 || !std::isfinite(lr)) {
    throw argument_error("train_binding: lr must be a non-negative finite real");
  }
  const RotaryConfig effective = use_sideinfo ? cfg : cfg.without_sideinfo();
  ToyAttnLayer layer = ToyAttnLayer::init(task.params.feature_dim, effective.head_dim, seed);

  TrainReport report;
  report.effective_cfg = effective;
  report.used_sideinfo = use_sideinfo;
  report.steps = steps;
  report.lr = lr;
  report.task_seed = task.seed;
  report.init_seed = seed;

  ForwardCache cache;
  for (int step = 0; step < steps; ++step) {
    double loss = 0.0;
    try {
      loss = layer_forward(layer, task, effective, &cache);
    } catch (const numeric_error& e) {
      throw numeric_error("train_binding: diverged at step " + std::to_string(step) + ": " +
                          e.what());
    }
    report.loss.push_back(loss);
    report.accuracy.push_back(confusion_argmax(cache.aggregated, task.bound_ref).accuracy);

    const LayerGradients grads = layer_backward(layer, cache);
    for (std::size_t i = 0; i < layer.w_q.data().size(); ++i) {
      layer.w_q.data()[i] -= lr * grads.w_q.data()[i];
      layer.w_k.data()[i] -= lr * grads.w_k.data()[i];
      layer.w_v.data()[i] -= lr * grads.w_v.data()[i];
    }
  }
  report.final_loss = layer_forward(layer, task, effective, &cache);
  report.loss.push_back(report.final_loss);
  report.final_attn = cache.aggregated;
  report.final_accuracy = confusion_argmax(cache.aggregated, task.bound_ref).accuracy;
  report.accuracy.push_back(report.final_accuracy);
  return report;
}

GradCheckResult grad_check(int draws, std::uint64_t base_seed, double eps, double tol) {
  if (draws < 1 || eps <= 0.0 || tol <= 0.0) {
    throw argument_error("grad_check: draws, eps and tol must be positive");
  }
  GradCheckResult result;
  result.draws = draws;

  for (int d = 0; d < draws; ++d) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(d);
    Rng rng = Rng(seed).substream("gradcheck");

    SynthTaskParams params;
    params.num_refs = 2;
    params.feature_dim = 10;
    params.shots_per_ref = 1 + static_cast<int>(rng.next_below(2));
    params.tokens_per_shot = 2 + static_cast<int>(rng.next_below(2));
    params.target_similarity = rng.next_double();
    params.noise_scale = 0.1;

    RotaryConfig cfg;
    cfg.head_dim = 8;
    cfg.d_t = 2;
    cfg.d_h = 2;
    cfg.d_w = 0;
    cfg.d_s = 4;
    cfg.num_refs = 2;
    cfg.realloc = rng.next_below(2) == 0 ? Realloc::TLow : Realloc::THigh;

    const SynthTask task = gen_confusion_task(params, seed);
    ToyAttnLayer layer = ToyAttnLayer::init(params.feature_dim, cfg.head_dim, seed ^ 0x5151);

    ForwardCache cache;
    layer_forward(layer, task, cfg, &cache);
    const LayerGradients grads = layer_backward(layer, cache);

    double draw_worst = 0.0;
    const auto check_matrix = [&](DenseMatrix& w, const DenseMatrix& analytic) {
      for (std::size_t i = 0; i < w.data().size(); ++i) {
        const double saved = w.data()[i];
        w.data()[i] = saved + eps;
        const double up = layer_forward(layer, task, cfg);
        w.data()[i] = saved - eps;
        const double down = layer_forward(layer, task, cfg);
        w.data()[i] = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double analytic_v = analytic.data()[i];
        const double rel =
            std::abs(analytic_v - numeric) / std::max(1.0, std::abs(analytic_v) + std::abs(numeric));
        draw_worst = std::max(draw_worst, rel);
      }
    };
    check_matrix(layer.w_q, grads.w_q);
    check_matrix(layer.w_k, grads.w_k);
    check_matrix(layer.w_v, grads.w_v);

    result.worst_rel_err = std::max(result.worst_rel_err, draw_worst);
    if (draw_worst < tol) {
      ++result.passed;
    } else {
      result.failing_seeds.push_back(seed);
    }
  }
  return result;
}

}  // namespace poco
