/*
 * Copyright 2026 The vadkit Authors. All Rights Reserved.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "vadkit/backbones/toy_extractor.hpp"

#include <algorithm>
#include <cmath>

#include "vadkit/core/rng.hpp"

namespace vadkit {

Tensor3 Conv2d::forward(const Tensor3& x) const {
  if (x.channels() != in_channels) throw ShapeMismatch("conv: input channel mismatch");
  const int oh = output_size(x.height());
  const int ow = output_size(x.width());
  const int k = kernel;
  Tensor3 y(out_channels, oh, ow);
  for (int o = 0; o < out_channels; ++o) {
    auto out = y.plane(o);
    std::fill(out.begin(), out.end(), bias[static_cast<std::size_t>(o)]);
    for (int i = 0; i < in_channels; ++i) {
      auto in = x.plane(i);
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const float wv = weight[((static_cast<std::size_t>(o) * in_channels + i) * k + ky) * k + kx];
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride + ky - padding;
            if (iy < 0 || iy >= x.height()) continue;
            const float* row = in.data() + static_cast<std::size_t>(iy) * x.width();
            float* dst = out.data() + static_cast<std::size_t>(oy) * ow;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride + kx - padding;
              if (ix < 0 || ix >= x.width()) continue;
              dst[ox] += wv * row[ix];
            }
          }
        }
      }
    }
  }
  return y;
}

Tensor3 Conv2d::backward(const Tensor3& x, const Tensor3& grad_out, std::vector<double>& grad_weight,
                         std::vector<double>& grad_bias, bool want_input_grad) const {
  const int oh = grad_out.height();
  const int ow = grad_out.width();
  const int k = kernel;
  Tensor3 dx;
  if (want_input_grad) dx = Tensor3(in_channels, x.height(), x.width());
  for (int o = 0; o < out_channels; ++o) {
    auto g = grad_out.plane(o);
    double gb = 0.0;
    for (float v : g) gb += v;
    grad_bias[static_cast<std::size_t>(o)] += gb;
    for (int i = 0; i < in_channels; ++i) {
      auto in = x.plane(i);
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const std::size_t widx = ((static_cast<std::size_t>(o) * in_channels + i) * k + ky) * k + kx;
          const float wv = weight[widx];
          double gw = 0.0;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride + ky - padding;
            if (iy < 0 || iy >= x.height()) continue;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride + kx - padding;
              if (ix < 0 || ix >= x.width()) continue;
              const float gv = g[static_cast<std::size_t>(oy) * ow + ox];
              gw += static_cast<double>(gv) * in[static_cast<std::size_t>(iy) * x.width() + ix];
              if (want_input_grad) dx.at(i, iy, ix) += wv * gv;
            }
          }
          grad_weight[widx] += gw;
        }
      }
    }
  }
  return dx;
}

namespace {

// He-normal scaled up: cosine-style losses are scale invariant, so weight
// norm sets the effective step size of SGD on a trainable copy.
constexpr double kToyInitGain = 4.0;

Conv2d make_conv(int in, int out, Rng& rng) {
  Conv2d c;
  c.in_channels = in;
  c.out_channels = out;
  c.weight.resize(static_cast<std::size_t>(out) * in * c.kernel * c.kernel);
  c.bias.assign(static_cast<std::size_t>(out), 0.0f);
  const double sd = kToyInitGain * std::sqrt(2.0 / (in * c.kernel * c.kernel));
  for (float& w : c.weight) w = static_cast<float>(sd * rng.normal());
  return c;
}

void relu_inplace(Tensor3& t) {
  for (float& v : t.values()) v = v > 0.0f ? v : 0.0f;
}

}  // namespace

ToyExtractor::ToyExtractor(std::uint64_t seed, bool trainable) : seed_(seed), trainable_(trainable) {
  Rng rng(seed);
  names_ = {"s1", "s2"};
  stages_.push_back(make_conv(3, kStage1Channels, rng));
  stages_.push_back(make_conv(kStage1Channels, kStage2Channels, rng));
  // Biases: a mid-gray input maps to a seeded positive response in every
  // channel away from the borders, so no channel is dead on plain background
  // and the features are not invariant to brightness.
  std::vector<double> level(3, 0.5);
  double gain = kToyInitGain;
  for (auto& c : stages_) {
    const std::size_t taps = static_cast<std::size_t>(c.kernel) * c.kernel;
    std::vector<double> next(c.bias.size());
    for (std::size_t o = 0; o < c.bias.size(); ++o) {
      double drive = 0.0;
      for (std::size_t i = 0; i < level.size(); ++i) {
        for (std::size_t t = 0; t < taps; ++t) drive += c.weight[(o * level.size() + i) * taps + t] * level[i];
      }
      next[o] = gain * rng.uniform(0.1, 0.5);
      c.bias[o] = static_cast<float>(next[o] - drive);
    }
    level = std::move(next);
    gain *= kToyInitGain;
  }
}

std::unique_ptr<ToyExtractor> make_toy_extractor(std::uint64_t seed) {
  return std::make_unique<ToyExtractor>(seed);
}

std::vector<std::string> ToyExtractor::layer_names() const { return names_; }

std::size_t ToyExtractor::deepest_index(const std::vector<std::string>& hooks) const {
  validate_hooks(names_, hooks);
  std::size_t deepest = 0;
  for (const auto& h : hooks) {
    const auto pos = static_cast<std::size_t>(std::find(names_.begin(), names_.end(), h) - names_.begin());
    deepest = std::max(deepest, pos);
  }
  return deepest;
}

std::vector<Tensor3> ToyExtractor::forward(const Tensor3& image,
                                           const std::vector<std::string>& hooks) const {
  const std::size_t last = deepest_index(hooks);
  std::vector<Tensor3> stage_out;
  stage_out.reserve(last + 1);
  const Tensor3* x = &image;
  for (std::size_t s = 0; s <= last; ++s) {
    Tensor3 y = stages_[s].forward(*x);
    relu_inplace(y);
    stage_out.push_back(std::move(y));
    x = &stage_out.back();
  }
  std::vector<Tensor3> out;
  out.reserve(hooks.size());
  for (const auto& h : hooks) {
    const auto pos = static_cast<std::size_t>(std::find(names_.begin(), names_.end(), h) - names_.begin());
    out.push_back(stage_out[pos]);
  }
  return out;
}

std::unique_ptr<FeatureExtractor> ToyExtractor::trim(const std::vector<std::string>& hooks) const {
  const std::size_t last = deepest_index(hooks);
  auto t = std::unique_ptr<ToyExtractor>(new ToyExtractor(*this));
  t->stages_.resize(last + 1);
  t->names_.resize(last + 1);
  return t;
}

std::unique_ptr<FeatureExtractor> ToyExtractor::clone() const {
  return std::unique_ptr<ToyExtractor>(new ToyExtractor(*this));
}

std::size_t ToyExtractor::parameter_count() const {
  std::size_t n = 0;
  for (const auto& s : stages_) n += s.parameter_count();
  return n;
}

std::vector<LayerSpec> ToyExtractor::architecture() const {
  std::vector<LayerSpec> layers;
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    const Conv2d& c = stages_[s];
    layers.push_back({names_[s] + ".conv", LayerKind::conv2d, c.in_channels, c.out_channels, c.kernel,
                      c.stride, c.padding, true});
    layers.push_back({names_[s] + ".relu", LayerKind::activation, c.out_channels, c.out_channels});
  }
  return layers;
}

std::unique_ptr<TrainableExtractor> ToyExtractor::trainable_copy(std::uint64_t seed) const {
  auto t = std::make_unique<ToyExtractor>(seed, true);
  t->stages_.resize(stages_.size());
  t->names_ = names_;
  return t;
}

std::unique_ptr<TrainableExtractor> ToyExtractor::clone_trainable() const {
  return std::unique_ptr<ToyExtractor>(new ToyExtractor(*this));
}

std::vector<ParamRef> ToyExtractor::parameters() {
  std::vector<ParamRef> out;
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    out.push_back({names_[s] + ".weight", stages_[s].weight});
    out.push_back({names_[s] + ".bias", stages_[s].bias});
  }
  return out;
}

std::vector<std::pair<std::string, std::vector<float>>> ToyExtractor::parameter_arrays() const {
  std::vector<std::pair<std::string, std::vector<float>>> out;
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    out.emplace_back(names_[s] + ".weight", stages_[s].weight);
    out.emplace_back(names_[s] + ".bias", stages_[s].bias);
  }
  return out;
}

double ToyExtractor::accumulate_gradients(const Tensor3& image, const std::vector<std::string>& hooks,
                                          const LossFn& loss,
                                          std::vector<std::vector<double>>& grads) const {
  const std::size_t last = deepest_index(hooks);
  if (grads.size() != 2 * stages_.size()) {
    grads.clear();
    for (const auto& s : stages_) {
      grads.emplace_back(s.weight.size(), 0.0);
      grads.emplace_back(s.bias.size(), 0.0);
    }
  }

  std::vector<Tensor3> pre(last + 1), post(last + 1);
  for (std::size_t s = 0; s <= last; ++s) {
    pre[s] = stages_[s].forward(s == 0 ? image : post[s - 1]);
    post[s] = pre[s];
    relu_inplace(post[s]);
  }

  std::vector<Tensor3> outputs;
  std::vector<std::size_t> hook_pos;
  for (const auto& h : hooks) {
    const auto pos = static_cast<std::size_t>(std::find(names_.begin(), names_.end(), h) - names_.begin());
    hook_pos.push_back(pos);
    outputs.push_back(post[pos]);
  }
  std::vector<Tensor3> hook_grads;
  const double value = loss(outputs, hook_grads);
  if (hook_grads.size() != hooks.size()) throw ShapeMismatch("loss returned wrong number of gradients");

  // Backward from the deepest stage; upstream carries dL/d(post[s]).
  Tensor3 upstream(post[last].channels(), post[last].height(), post[last].width());
  for (std::size_t s = last + 1; s-- > 0;) {
    for (std::size_t h = 0; h < hooks.size(); ++h) {
      if (hook_pos[h] != s) continue;
      if (!hook_grads[h].same_shape(upstream)) throw ShapeMismatch("hook gradient shape mismatch");
      auto dst = upstream.values();
      auto src = hook_grads[h].values();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
    Tensor3 grad_pre = upstream;
    auto gp = grad_pre.values();
    auto pv = pre[s].values();
    for (std::size_t i = 0; i < gp.size(); ++i) {
      if (!(pv[i] > 0.0f)) gp[i] = 0.0f;
    }
    upstream = stages_[s].backward(s == 0 ? image : post[s - 1], grad_pre, grads[2 * s],
                                   grads[2 * s + 1], s > 0);
  }
  return value;
}

}  // namespace vadkit
