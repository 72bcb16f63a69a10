#include <cmath>

#include "motionmix/error.hpp"
#include "motionmix/kernels.hpp"

namespace motionmix::reference {

namespace {

// Per-example activations, all plain vectors.
struct Trace {
  std::vector<double> temb;
  std::vector<std::vector<double>> h;
  std::vector<std::vector<double>> a;
  std::vector<std::vector<double>> z;
  std::vector<double> g;
  std::vector<double> y;
};

// out = W * in for column-major W (rows x cols)
void matvec(const double* w, int rows, int cols, const std::vector<double>& in,
            std::vector<double>& out) {
  out.assign(rows, 0.0);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) out[r] += w[r + static_cast<std::size_t>(c) * rows] * in[c];
}

// out += W^T * in
void matvec_t_add(const double* w, int rows, int cols, const std::vector<double>& in,
                  std::vector<double>& out) {
  for (int c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (int r = 0; r < rows; ++r) acc += w[r + static_cast<std::size_t>(c) * rows] * in[r];
    out[c] += acc;
  }
}

// G += outer(left, right) for column-major G (rows x cols)
void outer_add(double* g, int rows, int cols, const std::vector<double>& left,
               const std::vector<double>& right) {
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) g[r + static_cast<std::size_t>(c) * rows] += left[r] * right[c];
}

Trace forward(const DenoiserParams& params, const ParamLayout& L, std::span<const double> x, int t,
              Condition c) {
  const auto& cfg = params.config;
  const int H = cfg.hidden_width;
  const int P = cfg.input_size();
  const int E = cfg.time_embed_dim;
  const double* v = params.values.data();
  require(static_cast<int>(x.size()) == P, "reference forward: input size mismatch");
  require(t >= 1 && t <= cfg.diffusion_steps, "reference forward: timestep out of range");
  require(c.is_null() || c.id() < cfg.num_classes, "reference forward: condition out of range");

  Trace tr;
  tr.temb.resize(E);
  time_embedding(t, cfg.diffusion_steps, tr.temb);
  const std::vector<double> xin(x.begin(), x.end());
  const std::size_t nb = L.blocks.size();
  tr.h.resize(nb + 1);
  tr.a.resize(nb);
  tr.z.resize(nb);

  std::vector<double> tmp;
  matvec(v + L.in_w, H, P, xin, tr.h[0]);
  matvec(v + L.time_w, H, E, tr.temb, tmp);
  const double* row = v + L.cond + static_cast<std::size_t>(c.table_row(cfg.num_classes)) * H;
  for (int i = 0; i < H; ++i) tr.h[0][i] += tmp[i] + v[L.in_b + i] + row[i];

  for (std::size_t l = 0; l < nb; ++l) {
    const auto& b = L.blocks[l];
    matvec(v + b.w1, H, H, tr.h[l], tr.a[l]);
    tr.z[l].resize(H);
    for (int i = 0; i < H; ++i) {
      tr.a[l][i] += v[b.b1 + i];
      tr.z[l][i] = silu(tr.a[l][i]);
    }
    matvec(v + b.w2, H, H, tr.z[l], tmp);
    tr.h[l + 1].resize(H);
    for (int i = 0; i < H; ++i) tr.h[l + 1][i] = tr.h[l][i] + tmp[i] + v[b.b2 + i];
  }
  tr.g.resize(H);
  for (int i = 0; i < H; ++i) tr.g[i] = silu(tr.h[nb][i]);
  matvec(v + L.out_w, P, H, tr.g, tr.y);
  for (int i = 0; i < P; ++i) tr.y[i] += v[L.out_b + i];
  return tr;
}

}  // namespace

MotionSequence denoise_forward(const DenoiserParams& params, const MotionSequence& x_t, int t,
                               Condition c) {
  require(x_t.frames() == params.config.frames && x_t.dim() == params.config.dim,
          "reference forward: motion shape does not match the model");
  const ParamLayout L(params.config);
  Trace tr = forward(params, L, x_t.values(), t, c);
  return MotionSequence(x_t.frames(), x_t.dim(), std::move(tr.y));
}

LossAndGrad loss_and_grad(const DenoiserParams& params, std::span<const BatchItem> batch) {
  require(!batch.empty(), "reference loss_and_grad: empty batch");
  const auto& cfg = params.config;
  const int H = cfg.hidden_width;
  const int P = cfg.input_size();
  const int E = cfg.time_embed_dim;
  const double* v = params.values.data();
  const ParamLayout L(cfg);
  const std::size_t nb = L.blocks.size();
  const double scale = 1.0 / (static_cast<double>(batch.size()) * P);

  LossAndGrad out;
  out.grads.assign(L.total, 0.0);
  double* gr = out.grads.data();
  double sse = 0.0;

  for (const BatchItem& item : batch) {
    require_same_shape(item.x_t, item.target, "reference loss_and_grad target");
    const Trace tr = forward(params, L, item.x_t.values(), item.t, item.condition);
    auto target = item.target.values();

    std::vector<double> dy(P);
    for (int i = 0; i < P; ++i) {
      const double d = tr.y[i] - target[i];
      sse += d * d;
      dy[i] = 2.0 * scale * d;
    }
    outer_add(gr + L.out_w, P, H, dy, tr.g);
    for (int i = 0; i < P; ++i) gr[L.out_b + i] += dy[i];

    std::vector<double> dh(H, 0.0);
    matvec_t_add(v + L.out_w, P, H, dy, dh);
    for (int i = 0; i < H; ++i) dh[i] *= silu_grad(tr.h[nb][i]);

    for (std::size_t l = nb; l-- > 0;) {
      const auto& b = L.blocks[l];
      outer_add(gr + b.w2, H, H, dh, tr.z[l]);
      for (int i = 0; i < H; ++i) gr[b.b2 + i] += dh[i];
      std::vector<double> da(H, 0.0);
      matvec_t_add(v + b.w2, H, H, dh, da);
      for (int i = 0; i < H; ++i) da[i] *= silu_grad(tr.a[l][i]);
      outer_add(gr + b.w1, H, H, da, tr.h[l]);
      for (int i = 0; i < H; ++i) gr[b.b1 + i] += da[i];
      matvec_t_add(v + b.w1, H, H, da, dh);
    }

    const std::vector<double> xin(item.x_t.values().begin(), item.x_t.values().end());
    outer_add(gr + L.in_w, H, P, dh, xin);
    outer_add(gr + L.time_w, H, E, dh, tr.temb);
    double* row = gr + L.cond + static_cast<std::size_t>(item.condition.table_row(cfg.num_classes)) * H;
    for (int i = 0; i < H; ++i) {
      gr[L.in_b + i] += dh[i];
      row[i] += dh[i];
    }
  }
  out.loss = sse * scale;
  return out;
}

}  // namespace motionmix::reference
