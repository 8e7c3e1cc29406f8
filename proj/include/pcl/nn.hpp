#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "pcl/rng.hpp"
#include "pcl/tensor.hpp"

namespace pcl {

struct ParamRef {
  std::string name;
  Tensor* value;
  Tensor* grad;
};

// Layers cache what they need in forward(); backward() accumulates parameter
// gradients and returns the gradient w.r.t. the layer input. One forward per
// backward; batching two views means concatenating them into one batch.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& in) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;
  virtual void collect_params(const std::string& prefix, std::vector<ParamRef>& out) {}
};

class Conv3d : public Layer {
 public:
  Conv3d(int in_ch, int out_ch, std::array<int, 3> kernel, std::array<int, 3> stride,
         std::array<int, 3> pad, Rng& rng);

  Tensor forward(const Tensor& in) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;

  Tensor weight;  // [Cout, Cin, kt, kh, kw]
  Tensor bias;    // [Cout]
  Tensor weight_grad, bias_grad;

 private:
  int in_ch_, out_ch_;
  std::array<int, 3> kernel_, stride_, pad_;
  Tensor input_;  // cached
};

class ReLU : public Layer {
 public:
  Tensor forward(const Tensor& in) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Tensor input_;
};

class Linear : public Layer {
 public:
  Linear(int in_features, int out_features, Rng& rng);

  Tensor forward(const Tensor& in) override;  // [B, in] -> [B, out]
  Tensor backward(const Tensor& grad_out) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;

  Tensor weight;  // [out, in]
  Tensor bias;    // [out]
  Tensor weight_grad, bias_grad;

 private:
  Tensor input_;
};

// [B,C,T,H,W] -> [B,C], arithmetic mean over T*H*W.
class GlobalAvgPool3d : public Layer {
 public:
  Tensor forward(const Tensor& in) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::vector<int> in_shape_;
};

class Sequential : public Layer {
 public:
  Sequential() = default;
  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
  std::size_t size() const { return layers_.size(); }

  Tensor forward(const Tensor& in) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

// out = relu(body(x) + shortcut(x)); shortcut may be null (identity).
class ResidualBlock : public Layer {
 public:
  ResidualBlock(std::unique_ptr<Sequential> body, std::unique_ptr<Layer> shortcut)
      : body_(std::move(body)), shortcut_(std::move(shortcut)) {}

  Tensor forward(const Tensor& in) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;

 private:
  std::unique_ptr<Sequential> body_;
  std::unique_ptr<Layer> shortcut_;  // nullptr = identity
  Tensor sum_;                       // pre-relu cache
};

void zero_grads(const std::vector<ParamRef>& params);
std::size_t param_count(const std::vector<ParamRef>& params);

}  // namespace pcl
