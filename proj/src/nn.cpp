#include "pcl/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace pcl {

namespace {

void he_init(Tensor& w, int fan_in, Rng& rng) {
  double stddev = std::sqrt(2.0 / fan_in);
  for (std::size_t i = 0; i < w.numel(); ++i) w[i] = gaussian(rng, 0.0, stddev);
}

int out_dim(int in, int k, int s, int p) { return (in + 2 * p - k) / s + 1; }

}  // namespace

Conv3d::Conv3d(int in_ch, int out_ch, std::array<int, 3> kernel, std::array<int, 3> stride,
               std::array<int, 3> pad, Rng& rng)
    : weight({out_ch, in_ch, kernel[0], kernel[1], kernel[2]}),
      bias({out_ch}),
      weight_grad({out_ch, in_ch, kernel[0], kernel[1], kernel[2]}),
      bias_grad({out_ch}),
      in_ch_(in_ch),
      out_ch_(out_ch),
      kernel_(kernel),
      stride_(stride),
      pad_(pad) {
  he_init(weight, in_ch * kernel[0] * kernel[1] * kernel[2], rng);
}

Tensor Conv3d::forward(const Tensor& in) {
  if (in.rank() != 5 || in.dim(1) != in_ch_)
    throw std::invalid_argument("Conv3d: bad input shape " + in.shape_str());
  input_ = in;
  const int B = in.dim(0), T = in.dim(2), H = in.dim(3), W = in.dim(4);
  const int kt = kernel_[0], kh = kernel_[1], kw = kernel_[2];
  const int st = stride_[0], sh = stride_[1], sw = stride_[2];
  const int pt = pad_[0], ph = pad_[1], pw = pad_[2];
  const int OT = out_dim(T, kt, st, pt), OH = out_dim(H, kh, sh, ph), OW = out_dim(W, kw, sw, pw);
  Tensor out({B, out_ch_, OT, OH, OW});

  const double* X = in.data();
  const double* Wt = weight.data();
  double* Y = out.data();
  const std::size_t in_chw = static_cast<std::size_t>(T) * H * W;
  const std::size_t out_chw = static_cast<std::size_t>(OT) * OH * OW;

  for (int b = 0; b < B; ++b) {
    for (int co = 0; co < out_ch_; ++co) {
      const double bval = bias[co];
      for (int ot = 0; ot < OT; ++ot) {
        const int it0 = ot * st - pt;
        for (int oy = 0; oy < OH; ++oy) {
          const int iy0 = oy * sh - ph;
          for (int ox = 0; ox < OW; ++ox) {
            const int ix0 = ox * sw - pw;
            double acc = bval;
            for (int ci = 0; ci < in_ch_; ++ci) {
              const double* xc = X + (static_cast<std::size_t>(b) * in_ch_ + ci) * in_chw;
              const double* wc =
                  Wt + ((static_cast<std::size_t>(co) * in_ch_ + ci) * kt) * kh * kw;
              for (int dt = 0; dt < kt; ++dt) {
                const int it = it0 + dt;
                if (it < 0 || it >= T) continue;
                for (int dy = 0; dy < kh; ++dy) {
                  const int iy = iy0 + dy;
                  if (iy < 0 || iy >= H) continue;
                  const double* xr = xc + (static_cast<std::size_t>(it) * H + iy) * W;
                  const double* wr = wc + (static_cast<std::size_t>(dt) * kh + dy) * kw;
                  for (int dx = 0; dx < kw; ++dx) {
                    const int ix = ix0 + dx;
                    if (ix < 0 || ix >= W) continue;
                    acc += wr[dx] * xr[ix];
                  }
                }
              }
            }
            Y[((static_cast<std::size_t>(b) * out_ch_ + co) * OT + ot) * OH * OW +
              static_cast<std::size_t>(oy) * OW + ox] = acc;
          }
        }
      }
    }
  }
  return out;
}

Tensor Conv3d::backward(const Tensor& grad_out) {
  const Tensor& in = input_;
  const int B = in.dim(0), T = in.dim(2), H = in.dim(3), W = in.dim(4);
  const int kt = kernel_[0], kh = kernel_[1], kw = kernel_[2];
  const int st = stride_[0], sh = stride_[1], sw = stride_[2];
  const int pt = pad_[0], ph = pad_[1], pw = pad_[2];
  const int OT = grad_out.dim(2), OH = grad_out.dim(3), OW = grad_out.dim(4);
  Tensor grad_in(in.shape());

  const double* X = in.data();
  const double* Wt = weight.data();
  const double* G = grad_out.data();
  double* GX = grad_in.data();
  double* GW = weight_grad.data();
  const std::size_t in_chw = static_cast<std::size_t>(T) * H * W;

  for (int b = 0; b < B; ++b) {
    for (int co = 0; co < out_ch_; ++co) {
      for (int ot = 0; ot < OT; ++ot) {
        const int it0 = ot * st - pt;
        for (int oy = 0; oy < OH; ++oy) {
          const int iy0 = oy * sh - ph;
          for (int ox = 0; ox < OW; ++ox) {
            const int ix0 = ox * sw - pw;
            const double g =
                G[((static_cast<std::size_t>(b) * out_ch_ + co) * OT + ot) * OH * OW +
                  static_cast<std::size_t>(oy) * OW + ox];
            if (g == 0.0) continue;
            bias_grad[co] += g;
            for (int ci = 0; ci < in_ch_; ++ci) {
              const double* xc = X + (static_cast<std::size_t>(b) * in_ch_ + ci) * in_chw;
              double* gxc = GX + (static_cast<std::size_t>(b) * in_ch_ + ci) * in_chw;
              const std::size_t wbase =
                  (static_cast<std::size_t>(co) * in_ch_ + ci) * kt * kh * kw;
              for (int dt = 0; dt < kt; ++dt) {
                const int it = it0 + dt;
                if (it < 0 || it >= T) continue;
                for (int dy = 0; dy < kh; ++dy) {
                  const int iy = iy0 + dy;
                  if (iy < 0 || iy >= H) continue;
                  const double* xr = xc + (static_cast<std::size_t>(it) * H + iy) * W;
                  double* gxr = gxc + (static_cast<std::size_t>(it) * H + iy) * W;
                  const std::size_t wrow = wbase + (static_cast<std::size_t>(dt) * kh + dy) * kw;
                  for (int dx = 0; dx < kw; ++dx) {
                    const int ix = ix0 + dx;
                    if (ix < 0 || ix >= W) continue;
                    GW[wrow + dx] += g * xr[ix];
                    gxr[ix] += g * Wt[wrow + dx];
                  }
                }
              }
            }
          }
        }
      }
    }
  }
  return grad_in;
}

void Conv3d::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".weight", &weight, &weight_grad});
  out.push_back({prefix + ".bias", &bias, &bias_grad});
}

Tensor ReLU::forward(const Tensor& in) {
  input_ = in;
  Tensor out = in;
  for (std::size_t i = 0; i < out.numel(); ++i)
    if (out[i] < 0) out[i] = 0;
  return out;
}

Tensor ReLU::backward(const Tensor& grad_out) {
  Tensor grad_in = grad_out;
  for (std::size_t i = 0; i < grad_in.numel(); ++i)
    if (input_[i] <= 0) grad_in[i] = 0;
  return grad_in;
}

Linear::Linear(int in_features, int out_features, Rng& rng)
    : weight({out_features, in_features}),
      bias({out_features}),
      weight_grad({out_features, in_features}),
      bias_grad({out_features}) {
  he_init(weight, in_features, rng);
}

Tensor Linear::forward(const Tensor& in) {
  if (in.rank() != 2 || in.dim(1) != weight.dim(1))
    throw std::invalid_argument("Linear: bad input shape " + in.shape_str());
  input_ = in;
  const int B = in.dim(0), In = weight.dim(1), Out = weight.dim(0);
  Tensor out({B, Out});
  for (int b = 0; b < B; ++b)
    for (int o = 0; o < Out; ++o) {
      double acc = bias[o];
      const double* w = weight.data() + static_cast<std::size_t>(o) * In;
      const double* x = in.data() + static_cast<std::size_t>(b) * In;
      for (int i = 0; i < In; ++i) acc += w[i] * x[i];
      out.at2(b, o) = acc;
    }
  return out;
}

Tensor Linear::backward(const Tensor& grad_out) {
  const int B = input_.dim(0), In = weight.dim(1), Out = weight.dim(0);
  Tensor grad_in({B, In});
  for (int b = 0; b < B; ++b) {
    const double* x = input_.data() + static_cast<std::size_t>(b) * In;
    double* gx = grad_in.data() + static_cast<std::size_t>(b) * In;
    for (int o = 0; o < Out; ++o) {
      const double g = grad_out.at2(b, o);
      if (g == 0.0) continue;
      bias_grad[o] += g;
      double* gw = weight_grad.data() + static_cast<std::size_t>(o) * In;
      const double* w = weight.data() + static_cast<std::size_t>(o) * In;
      for (int i = 0; i < In; ++i) {
        gw[i] += g * x[i];
        gx[i] += g * w[i];
      }
    }
  }
  return grad_in;
}

void Linear::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".weight", &weight, &weight_grad});
  out.push_back({prefix + ".bias", &bias, &bias_grad});
}

Tensor GlobalAvgPool3d::forward(const Tensor& in) {
  if (in.rank() != 5) throw std::invalid_argument("GlobalAvgPool3d: rank-5 input expected");
  in_shape_ = in.shape();
  const int B = in.dim(0), C = in.dim(1);
  const std::size_t n = static_cast<std::size_t>(in.dim(2)) * in.dim(3) * in.dim(4);
  Tensor out({B, C});
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const double* x = in.data() + (static_cast<std::size_t>(b) * C + c) * n;
      double acc = 0;
      for (std::size_t i = 0; i < n; ++i) acc += x[i];
      out.at2(b, c) = acc / static_cast<double>(n);
    }
  return out;
}

Tensor GlobalAvgPool3d::backward(const Tensor& grad_out) {
  const int B = in_shape_[0], C = in_shape_[1];
  const std::size_t n = static_cast<std::size_t>(in_shape_[2]) * in_shape_[3] * in_shape_[4];
  Tensor grad_in(in_shape_);
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const double g = grad_out.at2(b, c) / static_cast<double>(n);
      double* gx = grad_in.data() + (static_cast<std::size_t>(b) * C + c) * n;
      for (std::size_t i = 0; i < n; ++i) gx[i] = g;
    }
  return grad_in;
}

Tensor Sequential::forward(const Tensor& in) {
  Tensor x = in;
  for (auto& l : layers_) x = l->forward(x);
  return x;
}

Tensor Sequential::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

void Sequential::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  for (std::size_t i = 0; i < layers_.size(); ++i)
    layers_[i]->collect_params(prefix + "." + std::to_string(i), out);
}

Tensor ResidualBlock::forward(const Tensor& in) {
  Tensor body = body_->forward(in);
  Tensor sc = shortcut_ ? shortcut_->forward(in) : in;
  if (!body.same_shape(sc))
    throw std::invalid_argument("ResidualBlock: body " + body.shape_str() +
                                " vs shortcut " + sc.shape_str());
  sum_ = body;
  for (std::size_t i = 0; i < sum_.numel(); ++i) sum_[i] += sc[i];
  Tensor out = sum_;
  for (std::size_t i = 0; i < out.numel(); ++i)
    if (out[i] < 0) out[i] = 0;
  return out;
}

Tensor ResidualBlock::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.numel(); ++i)
    if (sum_[i] <= 0) g[i] = 0;
  Tensor grad_in = body_->backward(g);
  Tensor gsc = shortcut_ ? shortcut_->backward(g) : g;
  for (std::size_t i = 0; i < grad_in.numel(); ++i) grad_in[i] += gsc[i];
  return grad_in;
}

void ResidualBlock::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  body_->collect_params(prefix + ".body", out);
  if (shortcut_) shortcut_->collect_params(prefix + ".shortcut", out);
}

void zero_grads(const std::vector<ParamRef>& params) {
  for (const auto& p : params) p.grad->zero();
}

std::size_t param_count(const std::vector<ParamRef>& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.value->numel();
  return n;
}

}  // namespace pcl
