#include "motionmix/kernels.hpp"

#include <cmath>

#include <omp.h>

#include "motionmix/error.hpp"

namespace motionmix {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using CMap = Eigen::Map<const MatrixXd>;
using CVec = Eigen::Map<const VectorXd>;
using Map = Eigen::Map<MatrixXd>;
using Vec = Eigen::Map<VectorXd>;

struct ChunkCache {
  MatrixXd temb;
  std::vector<MatrixXd> h;  // h[0..L]
  std::vector<MatrixXd> a;  // pre-activations, one per block
  std::vector<MatrixXd> z;  // silu(a)
  MatrixXd g;               // silu(h[L])
  MatrixXd y;
};

void check_batch_args(const DenoiserParams& params, Eigen::Index rows, std::size_t cols,
                      std::span<const int> timesteps, std::span<const Condition> conditions) {
  const auto& cfg = params.config;
  require(rows == cfg.input_size(), "denoiser input size does not match config");
  require(timesteps.size() == cols && conditions.size() == cols,
          "denoiser batch: timestep/condition count mismatch");
  for (int t : timesteps)
    require(t >= 1 && t <= cfg.diffusion_steps, "denoiser timestep out of range");
  for (Condition c : conditions)
    require(c.is_null() || c.id() < cfg.num_classes, "denoiser condition out of range");
}

void forward_chunk(const DenoiserParams& params, const ParamLayout& L,
                   const Eigen::Ref<const MatrixXd>& x, std::span<const int> ts,
                   std::span<const Condition> cs, ChunkCache& cache) {
  const auto& cfg = params.config;
  const int H = cfg.hidden_width;
  const int P = cfg.input_size();
  const int E = cfg.time_embed_dim;
  const int K1 = cfg.num_classes + 1;
  const double* v = params.values.data();
  const Eigen::Index n = x.cols();

  cache.temb.resize(E, n);
  for (Eigen::Index j = 0; j < n; ++j)
    time_embedding(ts[j], cfg.diffusion_steps, std::span<double>(cache.temb.col(j).data(), E));

  const std::size_t nb = L.blocks.size();
  cache.h.resize(nb + 1);
  cache.a.resize(nb);
  cache.z.resize(nb);

  MatrixXd& h0 = cache.h[0];
  h0.noalias() = CMap(v + L.in_w, H, P) * x;
  h0.noalias() += CMap(v + L.time_w, H, E) * cache.temb;
  h0.colwise() += CVec(v + L.in_b, H);
  const CMap table(v + L.cond, H, K1);
  for (Eigen::Index j = 0; j < n; ++j) h0.col(j) += table.col(cs[j].table_row(cfg.num_classes));

  for (std::size_t l = 0; l < nb; ++l) {
    const auto& b = L.blocks[l];
    cache.a[l].noalias() = CMap(v + b.w1, H, H) * cache.h[l];
    cache.a[l].colwise() += CVec(v + b.b1, H);
    cache.z[l] = cache.a[l].unaryExpr([](double s) { return silu(s); });
    cache.h[l + 1] = cache.h[l];
    cache.h[l + 1].noalias() += CMap(v + b.w2, H, H) * cache.z[l];
    cache.h[l + 1].colwise() += CVec(v + b.b2, H);
  }
  cache.g = cache.h[nb].unaryExpr([](double s) { return silu(s); });
  cache.y.noalias() = CMap(v + L.out_w, P, H) * cache.g;
  cache.y.colwise() += CVec(v + L.out_b, P);
}

// Writes (not accumulates) the chunk gradient into `grad`.
void backward_chunk(const DenoiserParams& params, const ParamLayout& L,
                    const Eigen::Ref<const MatrixXd>& x, std::span<const Condition> cs,
                    const ChunkCache& cache, const MatrixXd& dy, std::span<double> grad) {
  const auto& cfg = params.config;
  const int H = cfg.hidden_width;
  const int P = cfg.input_size();
  const int E = cfg.time_embed_dim;
  const int K1 = cfg.num_classes + 1;
  const double* v = params.values.data();
  double* gr = grad.data();
  const std::size_t nb = L.blocks.size();

  Map(gr + L.out_w, P, H).noalias() = dy * cache.g.transpose();
  Vec(gr + L.out_b, P) = dy.rowwise().sum();
  MatrixXd dh = CMap(v + L.out_w, P, H).transpose() * dy;
  dh.array() *= cache.h[nb].unaryExpr([](double s) { return silu_grad(s); }).array();

  MatrixXd da;
  for (std::size_t l = nb; l-- > 0;) {
    const auto& b = L.blocks[l];
    Map(gr + b.w2, H, H).noalias() = dh * cache.z[l].transpose();
    Vec(gr + b.b2, H) = dh.rowwise().sum();
    da.noalias() = CMap(v + b.w2, H, H).transpose() * dh;
    da.array() *= cache.a[l].unaryExpr([](double s) { return silu_grad(s); }).array();
    Map(gr + b.w1, H, H).noalias() = da * cache.h[l].transpose();
    Vec(gr + b.b1, H) = da.rowwise().sum();
    dh.noalias() += CMap(v + b.w1, H, H).transpose() * da;
  }

  Map(gr + L.in_w, H, P).noalias() = dh * x.transpose();
  Vec(gr + L.in_b, H) = dh.rowwise().sum();
  Map(gr + L.time_w, H, E).noalias() = dh * cache.temb.transpose();
  Map table(gr + L.cond, H, K1);
  table.setZero();
  for (Eigen::Index j = 0; j < dh.cols(); ++j) table.col(cs[j].table_row(cfg.num_classes)) += dh.col(j);
}

}  // namespace

Eigen::MatrixXd denoise_forward_batch(const DenoiserParams& params, const Eigen::MatrixXd& inputs,
                                      std::span<const int> timesteps,
                                      std::span<const Condition> conditions) {
  check_batch_args(params, inputs.rows(), static_cast<std::size_t>(inputs.cols()), timesteps,
                   conditions);
  const ParamLayout L(params.config);
  ChunkCache cache;
  forward_chunk(params, L, inputs, timesteps, conditions, cache);
  return std::move(cache.y);
}

MotionSequence denoise_forward(const DenoiserParams& params, const MotionSequence& x_t, int t,
                               Condition c) {
  require(x_t.frames() == params.config.frames && x_t.dim() == params.config.dim,
          "denoise_forward: motion shape does not match the model");
  // Copied so the input has owned, aligned storage like the batch path.
  const MatrixXd x = CMap(x_t.values().data(), params.config.input_size(), 1);
  const int ts[1] = {t};
  const Condition cs[1] = {c};
  check_batch_args(params, x.rows(), 1, ts, cs);
  const ParamLayout L(params.config);
  ChunkCache cache;
  forward_chunk(params, L, x, ts, cs, cache);
  return MotionSequence(x_t.frames(), x_t.dim(),
                        std::vector<double>(cache.y.data(), cache.y.data() + cache.y.size()));
}

LossAndGrad loss_and_grad(const DenoiserParams& params, std::span<const BatchItem> batch) {
  require(!batch.empty(), "loss_and_grad: empty batch");
  const auto& cfg = params.config;
  const int P = cfg.input_size();
  const auto B = static_cast<Eigen::Index>(batch.size());

  MatrixXd x(P, B), s(P, B);
  std::vector<int> ts(B);
  std::vector<Condition> cs(B);
  for (Eigen::Index j = 0; j < B; ++j) {
    const BatchItem& item = batch[j];
    require(item.x_t.frames() == cfg.frames && item.x_t.dim() == cfg.dim,
            "loss_and_grad: x_t shape does not match the model");
    require_same_shape(item.x_t, item.target, "loss_and_grad target");
    x.col(j) = CVec(item.x_t.values().data(), P);
    s.col(j) = CVec(item.target.values().data(), P);
    ts[j] = item.t;
    cs[j] = item.condition;
  }
  check_batch_args(params, P, batch.size(), ts, cs);

  const ParamLayout L(cfg);
  const auto n_chunks = static_cast<int>((B + kGradChunk - 1) / kGradChunk);
  std::vector<ParamVector> chunk_grads(n_chunks);
  std::vector<double> chunk_sse(n_chunks, 0.0);
  const double scale = 1.0 / (static_cast<double>(B) * P);

#pragma omp parallel for schedule(static)
  for (int c = 0; c < n_chunks; ++c) {
    const Eigen::Index begin = static_cast<Eigen::Index>(c) * kGradChunk;
    const Eigen::Index len = std::min<Eigen::Index>(kGradChunk, B - begin);
    const std::span<const int> cts(ts.data() + begin, len);
    const std::span<const Condition> ccs(cs.data() + begin, len);
    ChunkCache cache;
    forward_chunk(params, L, x.middleCols(begin, len), cts, ccs, cache);
    const MatrixXd diff = cache.y - s.middleCols(begin, len);
    chunk_sse[c] = diff.squaredNorm();
    const MatrixXd dy = (2.0 * scale) * diff;
    chunk_grads[c].resize(L.total);
    backward_chunk(params, L, x.middleCols(begin, len), ccs, cache, dy, chunk_grads[c]);
  }

  LossAndGrad out;
  out.grads = std::move(chunk_grads[0]);
  double sse = chunk_sse[0];
  for (int c = 1; c < n_chunks; ++c) {
    const auto& g = chunk_grads[c];
    for (std::size_t i = 0; i < out.grads.size(); ++i) out.grads[i] += g[i];
    sse += chunk_sse[c];
  }
  out.loss = sse * scale;
  return out;
}

}  // namespace motionmix
