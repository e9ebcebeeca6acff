#include "itd/net.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <mutex>
#include <numeric>
#include <thread>

#include "itd/rng.hpp"

namespace itd {

std::string_view to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::relu: return "relu";
        case LayerKind::maxpool: return "maxpool";
        case LayerKind::global_avg_pool: return "global_avg_pool";
        case LayerKind::dense: return "dense";
        case LayerKind::softmax: return "softmax";
    }
    return "?";
}

namespace nnops {

namespace {

// zero-padded copy of one sample, all channels, border 1
void pad_sample(const Tensor& in, int sample, std::vector<double>& padded) {
    const int ph = in.h + 2, pw = in.w + 2;
    padded.assign(static_cast<std::size_t>(in.c) * ph * pw, 0.0);
    for (int ch = 0; ch < in.c; ++ch) {
        const double* src = in.plane(sample, ch);
        double* dst = padded.data() + static_cast<std::size_t>(ch) * ph * pw;
        for (int y = 0; y < in.h; ++y)
            std::memcpy(dst + (y + 1) * pw + 1, src + static_cast<std::size_t>(y) * in.w,
                        sizeof(double) * static_cast<std::size_t>(in.w));
    }
}

}  // namespace

void conv2d_forward(const Tensor& in, const std::vector<double>& w, const std::vector<double>& b,
                    int out_ch, Tensor& out) {
    const int in_ch = in.c, H = in.h, W = in.w;
    out = Tensor(in.n, out_ch, H, W);
    const int pw = W + 2;

    std::vector<double> padded;
    for (int s = 0; s < in.n; ++s) {
        pad_sample(in, s, padded);
        for (int oc = 0; oc < out_ch; ++oc) {
            double* dst0 = out.plane(s, oc);
            const double bias = b[static_cast<std::size_t>(oc)];
            std::fill(dst0, dst0 + static_cast<std::size_t>(H) * W, bias);
            for (int ic = 0; ic < in_ch; ++ic) {
                const double* pin = padded.data() + static_cast<std::size_t>(ic) * (H + 2) * pw;
                const double* wk = w.data() + (static_cast<std::size_t>(oc) * in_ch + ic) * 9;
                for (int ky = 0; ky < 3; ++ky) {
                    for (int kx = 0; kx < 3; ++kx) {
                        const double wv = wk[ky * 3 + kx];
                        for (int y = 0; y < H; ++y) {
                            const double* src = pin + (y + ky) * pw + kx;
                            double* dst = dst0 + static_cast<std::size_t>(y) * W;
                            for (int x = 0; x < W; ++x) dst[x] += wv * src[x];
                        }
                    }
                }
            }
        }
    }
}

void conv2d_backward(const Tensor& in, const std::vector<double>& w, int out_ch, const Tensor& dout,
                     Tensor* din, std::vector<double>* dw, std::vector<double>* db) {
    const int in_ch = in.c, H = in.h, W = in.w;
    const int pw = W + 2;

    if (dw) dw->assign(static_cast<std::size_t>(out_ch) * in_ch * 9, 0.0);
    if (db) db->assign(static_cast<std::size_t>(out_ch), 0.0);
    if (din) *din = Tensor(in.n, in_ch, H, W);

    std::vector<double> padded_in, padded_dout;
    for (int s = 0; s < in.n; ++s) {
        if (dw || db) pad_sample(in, s, padded_in);
        if (dw || db) {
            for (int oc = 0; oc < out_ch; ++oc) {
                const double* dy0 = dout.plane(s, oc);
                if (db) {
                    double sum = 0.0;
                    for (std::size_t i = 0; i < static_cast<std::size_t>(H) * W; ++i) sum += dy0[i];
                    (*db)[static_cast<std::size_t>(oc)] += sum;
                }
                if (dw) {
                    for (int ic = 0; ic < in_ch; ++ic) {
                        const double* pin =
                            padded_in.data() + static_cast<std::size_t>(ic) * (H + 2) * pw;
                        double* wk = dw->data() + (static_cast<std::size_t>(oc) * in_ch + ic) * 9;
                        for (int ky = 0; ky < 3; ++ky) {
                            for (int kx = 0; kx < 3; ++kx) {
                                double sum = 0.0;
                                for (int y = 0; y < H; ++y) {
                                    const double* src = pin + (y + ky) * pw + kx;
                                    const double* dy = dy0 + static_cast<std::size_t>(y) * W;
                                    for (int x = 0; x < W; ++x) sum += dy[x] * src[x];
                                }
                                wk[ky * 3 + kx] += sum;
                            }
                        }
                    }
                }
            }
        }
        if (din) {
            // full correlation of padded dout with the flipped kernel
            pad_sample(dout, s, padded_dout);
            for (int ic = 0; ic < in_ch; ++ic) {
                double* dst0 = din->plane(s, ic);
                for (int oc = 0; oc < out_ch; ++oc) {
                    const double* pdy = padded_dout.data() + static_cast<std::size_t>(oc) * (H + 2) * pw;
                    const double* wk = w.data() + (static_cast<std::size_t>(oc) * in_ch + ic) * 9;
                    for (int ky = 0; ky < 3; ++ky) {
                        for (int kx = 0; kx < 3; ++kx) {
                            const double wv = wk[(2 - ky) * 3 + (2 - kx)];
                            for (int y = 0; y < H; ++y) {
                                const double* src = pdy + (y + ky) * pw + kx;
                                double* dst = dst0 + static_cast<std::size_t>(y) * W;
                                for (int x = 0; x < W; ++x) dst[x] += wv * src[x];
                            }
                        }
                    }
                }
            }
        }
    }
}

void relu_forward(const Tensor& in, Tensor& out) {
    out = in;
    for (double& x : out.v) x = x > 0.0 ? x : 0.0;
}

void relu_backward(const Tensor& in, const Tensor& dout, Tensor& din) {
    din = Tensor(in.n, in.c, in.h, in.w);
    for (std::size_t i = 0; i < in.v.size(); ++i) din.v[i] = in.v[i] > 0.0 ? dout.v[i] : 0.0;
}

void maxpool_forward(const Tensor& in, Tensor& out, std::vector<int>* argmax) {
    if (in.h % 2 != 0 || in.w % 2 != 0)
        throw ShapeMismatch("maxpool: input " + in.shape_string() + " not even-sized");
    const int oh = in.h / 2, ow = in.w / 2;
    out = Tensor(in.n, in.c, oh, ow);
    if (argmax) argmax->assign(out.size(), 0);

    std::size_t oi = 0;
    for (int s = 0; s < in.n; ++s) {
        for (int ch = 0; ch < in.c; ++ch) {
            const double* src = in.plane(s, ch);
            const std::size_t base =
                ((static_cast<std::size_t>(s) * in.c + ch) * in.h) * static_cast<std::size_t>(in.w);
            for (int y = 0; y < oh; ++y) {
                for (int x = 0; x < ow; ++x, ++oi) {
                    const int iy = y * 2, ix = x * 2;
                    int best_off = iy * in.w + ix;
                    double best = src[best_off];
                    const int offs[3] = {iy * in.w + ix + 1, (iy + 1) * in.w + ix,
                                         (iy + 1) * in.w + ix + 1};
                    for (const int off : offs) {
                        if (src[off] > best) {
                            best = src[off];
                            best_off = off;
                        }
                    }
                    out.v[oi] = best;
                    if (argmax) (*argmax)[oi] = static_cast<int>(base) + best_off;
                }
            }
        }
    }
}

void maxpool_backward(const Tensor& in, const Tensor& dout, const std::vector<int>& argmax,
                      Tensor& din) {
    din = Tensor(in.n, in.c, in.h, in.w);
    for (std::size_t i = 0; i < dout.v.size(); ++i)
        din.v[static_cast<std::size_t>(argmax[i])] += dout.v[i];
}

void gap_forward(const Tensor& in, Tensor& out) {
    out = Tensor(in.n, in.c, 1, 1);
    const double scale = 1.0 / (static_cast<double>(in.h) * in.w);
    for (int s = 0; s < in.n; ++s) {
        for (int ch = 0; ch < in.c; ++ch) {
            const double* src = in.plane(s, ch);
            double sum = 0.0;
            for (std::size_t i = 0; i < static_cast<std::size_t>(in.h) * in.w; ++i) sum += src[i];
            out.at(s, ch, 0, 0) = sum * scale;
        }
    }
}

void gap_backward(const Tensor& in, const Tensor& dout, Tensor& din) {
    din = Tensor(in.n, in.c, in.h, in.w);
    const double scale = 1.0 / (static_cast<double>(in.h) * in.w);
    for (int s = 0; s < in.n; ++s) {
        for (int ch = 0; ch < in.c; ++ch) {
            const double g = dout.at(s, ch, 0, 0) * scale;
            double* dst = din.plane(s, ch);
            for (std::size_t i = 0; i < static_cast<std::size_t>(in.h) * in.w; ++i) dst[i] = g;
        }
    }
}

void dense_forward(const Tensor& in, const std::vector<double>& w, const std::vector<double>& b,
                   int out_units, Tensor& out) {
    const int flat = in.c * in.h * in.w;
    if (static_cast<std::size_t>(flat) * static_cast<std::size_t>(out_units) != w.size())
        throw ShapeMismatch("dense: input " + in.shape_string() + " does not match weights");
    out = Tensor(in.n, out_units, 1, 1);
    for (int s = 0; s < in.n; ++s) {
        const double* x = in.v.data() + static_cast<std::size_t>(s) * flat;
        for (int o = 0; o < out_units; ++o) {
            const double* wr = w.data() + static_cast<std::size_t>(o) * flat;
            double sum = b[static_cast<std::size_t>(o)];
            for (int i = 0; i < flat; ++i) sum += wr[i] * x[i];
            out.at(s, o, 0, 0) = sum;
        }
    }
}

void dense_backward(const Tensor& in, const std::vector<double>& w, int out_units,
                    const Tensor& dout, Tensor* din, std::vector<double>* dw,
                    std::vector<double>* db) {
    const int flat = in.c * in.h * in.w;
    if (dw) dw->assign(static_cast<std::size_t>(out_units) * flat, 0.0);
    if (db) db->assign(static_cast<std::size_t>(out_units), 0.0);
    if (din) *din = Tensor(in.n, in.c, in.h, in.w);

    for (int s = 0; s < in.n; ++s) {
        const double* x = in.v.data() + static_cast<std::size_t>(s) * flat;
        double* dx = din ? din->v.data() + static_cast<std::size_t>(s) * flat : nullptr;
        for (int o = 0; o < out_units; ++o) {
            const double g = dout.at(s, o, 0, 0);
            const double* wr = w.data() + static_cast<std::size_t>(o) * flat;
            if (dw) {
                double* dwr = dw->data() + static_cast<std::size_t>(o) * flat;
                for (int i = 0; i < flat; ++i) dwr[i] += g * x[i];
            }
            if (db) (*db)[static_cast<std::size_t>(o)] += g;
            if (dx)
                for (int i = 0; i < flat; ++i) dx[i] += g * wr[i];
        }
    }
}

void softmax_forward(const Tensor& in, Tensor& out) {
    out = Tensor(in.n, in.c, in.h, in.w);
    const int row = in.c * in.h * in.w;
    for (int s = 0; s < in.n; ++s) {
        const double* x = in.v.data() + static_cast<std::size_t>(s) * row;
        double* y = out.v.data() + static_cast<std::size_t>(s) * row;
        double m = x[0];
        for (int i = 1; i < row; ++i) m = std::max(m, x[i]);
        double sum = 0.0;
        for (int i = 0; i < row; ++i) {
            y[i] = std::exp(x[i] - m);
            sum += y[i];
        }
        for (int i = 0; i < row; ++i) y[i] /= sum;
    }
}

}  // namespace nnops

void Gradients::add(const Gradients& other) {
    if (layers.empty()) {
        layers = other.layers;
        return;
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        auto& dst = layers[i];
        const auto& src = other.layers[i];
        if (dst.weights.size() != src.weights.size() || dst.bias.size() != src.bias.size())
            throw ShapeMismatch("gradient accumulation shape mismatch");
        for (std::size_t j = 0; j < dst.weights.size(); ++j) dst.weights[j] += src.weights[j];
        for (std::size_t j = 0; j < dst.bias.size(); ++j) dst.bias[j] += src.bias[j];
    }
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw Error("learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw Error("adam betas must lie in [0, 1)");
    if (batch_size <= 0) throw Error("batch size must be positive");
    if (epochs <= 0) throw Error("epoch count must be positive");
    if (fine_tune_layers < 0) throw Error("fine-tune layer count must be non-negative");
}

Network Network::build_default(std::uint64_t seed) {
    Network net;
    net.init_seed = seed;
    Rng rng(seed);

    auto conv = [&](int in_ch, int out_ch) {
        Layer layer;
        layer.kind = LayerKind::conv2d;
        layer.in_ch = in_ch;
        layer.out_ch = out_ch;
        const std::size_t count = static_cast<std::size_t>(out_ch) * in_ch * 9;
        layer.weights.resize(count);
        const double stddev = std::sqrt(2.0 / (static_cast<double>(in_ch) * 9.0));
        for (auto& w : layer.weights) w = rng.normal(0.0, stddev);
        layer.bias.assign(static_cast<std::size_t>(out_ch), 0.0);
        layer.m_w.assign(count, 0.0);
        layer.v_w.assign(count, 0.0);
        layer.m_b.assign(layer.bias.size(), 0.0);
        layer.v_b.assign(layer.bias.size(), 0.0);
        return layer;
    };
    auto plain = [](LayerKind kind) {
        Layer layer;
        layer.kind = kind;
        return layer;
    };
    auto dense = [&](int in_units, int out_units) {
        Layer layer;
        layer.kind = LayerKind::dense;
        layer.in_ch = in_units;
        layer.out_ch = out_units;
        const std::size_t count = static_cast<std::size_t>(out_units) * in_units;
        layer.weights.resize(count);
        const double stddev = std::sqrt(2.0 / static_cast<double>(in_units));
        for (auto& w : layer.weights) w = rng.normal(0.0, stddev);
        layer.bias.assign(static_cast<std::size_t>(out_units), 0.0);
        layer.m_w.assign(count, 0.0);
        layer.v_w.assign(count, 0.0);
        layer.m_b.assign(layer.bias.size(), 0.0);
        layer.v_b.assign(layer.bias.size(), 0.0);
        return layer;
    };

    net.layers.push_back(conv(1, 16));
    net.layers.push_back(plain(LayerKind::relu));
    net.layers.push_back(plain(LayerKind::maxpool));
    net.layers.push_back(conv(16, 32));
    net.layers.push_back(plain(LayerKind::relu));
    net.layers.push_back(plain(LayerKind::maxpool));
    net.layers.push_back(plain(LayerKind::global_avg_pool));
    net.layers.push_back(dense(32, 2));
    net.layers.push_back(plain(LayerKind::softmax));
    return net;
}

std::size_t Network::parameter_count() const {
    std::size_t count = 0;
    for (const auto& layer : layers) count += layer.param_count();
    return count;
}

Tensor Network::forward(const Tensor& batch, ForwardCache* cache) const {
    if (batch.n <= 0) throw ShapeMismatch("forward: empty batch");
    if (cache) {
        cache->inputs.clear();
        cache->pool_argmax.clear();
        cache->valid = false;
    }

    Tensor current = batch;
    for (const auto& layer : layers) {
        if (cache) cache->inputs.push_back(current);
        Tensor next;
        switch (layer.kind) {
            case LayerKind::conv2d: {
                if (current.c != layer.in_ch)
                    throw ShapeMismatch("conv2d: input " + current.shape_string() + " expects " +
                                        std::to_string(layer.in_ch) + " channels");
                nnops::conv2d_forward(current, layer.weights, layer.bias, layer.out_ch, next);
                break;
            }
            case LayerKind::relu: nnops::relu_forward(current, next); break;
            case LayerKind::maxpool: {
                std::vector<int> argmax;
                nnops::maxpool_forward(current, next, cache ? &argmax : nullptr);
                if (cache) cache->pool_argmax.push_back(std::move(argmax));
                break;
            }
            case LayerKind::global_avg_pool: nnops::gap_forward(current, next); break;
            case LayerKind::dense:
                nnops::dense_forward(current, layer.weights, layer.bias, layer.out_ch, next);
                break;
            case LayerKind::softmax: nnops::softmax_forward(current, next); break;
        }
        current = std::move(next);
    }
    if (cache) {
        cache->output = current;
        cache->valid = true;
    }
    return current;
}

int Network::lowest_trainable() const {
    for (std::size_t i = 0; i < layers.size(); ++i)
        if (layers[i].has_params() && !layers[i].frozen) return static_cast<int>(i);
    return static_cast<int>(layers.size());
}

Gradients Network::backward(const ForwardCache& cache, const Tensor& dlogits) const {
    if (!cache.valid || cache.inputs.size() != layers.size())
        throw NoForwardCache("backward called without a forward cache");
    if (layers.empty() || layers.back().kind != LayerKind::softmax)
        throw ShapeMismatch("backward expects a softmax head");

    Gradients grads;
    grads.layers.resize(layers.size());

    const int stop = lowest_trainable();
    // gradient arrives at the pre-softmax boundary
    Tensor grad = dlogits;
    int pool_index = static_cast<int>(cache.pool_argmax.size());

    for (int i = static_cast<int>(layers.size()) - 2; i >= stop; --i) {
        const Layer& layer = layers[static_cast<std::size_t>(i)];
        const Tensor& input = cache.inputs[static_cast<std::size_t>(i)];
        const bool want_params = layer.has_params() && !layer.frozen;
        const bool want_input = i > stop;
        Tensor dinput;

        switch (layer.kind) {
            case LayerKind::conv2d:
                nnops::conv2d_backward(input, layer.weights, layer.out_ch, grad,
                                       want_input ? &dinput : nullptr,
                                       want_params ? &grads.layers[static_cast<std::size_t>(i)].weights : nullptr,
                                       want_params ? &grads.layers[static_cast<std::size_t>(i)].bias : nullptr);
                break;
            case LayerKind::relu:
                nnops::relu_backward(input, grad, dinput);
                break;
            case LayerKind::maxpool: {
                --pool_index;
                nnops::maxpool_backward(input, grad,
                                        cache.pool_argmax[static_cast<std::size_t>(pool_index)],
                                        dinput);
                break;
            }
            case LayerKind::global_avg_pool:
                nnops::gap_backward(input, grad, dinput);
                break;
            case LayerKind::dense:
                nnops::dense_backward(input, layer.weights, layer.out_ch, grad,
                                      want_input ? &dinput : nullptr,
                                      want_params ? &grads.layers[static_cast<std::size_t>(i)].weights : nullptr,
                                      want_params ? &grads.layers[static_cast<std::size_t>(i)].bias : nullptr);
                break;
            case LayerKind::softmax:
                throw ShapeMismatch("unexpected interior softmax");
        }
        if (want_input) grad = std::move(dinput);
    }
    return grads;
}

void Network::adam_step(const Gradients& grads, const TrainConfig& config) {
    if (grads.layers.size() != layers.size()) throw ShapeMismatch("gradient/layer count mismatch");
    ++adam_steps;
    const auto t = static_cast<double>(adam_steps);
    const double bias1 = 1.0 - std::pow(config.beta1, t);
    const double bias2 = 1.0 - std::pow(config.beta2, t);

    for (std::size_t i = 0; i < layers.size(); ++i) {
        Layer& layer = layers[i];
        const auto& g = grads.layers[i];
        if (!layer.has_params() || layer.frozen || g.weights.empty()) continue;
        if (g.weights.size() != layer.weights.size() || g.bias.size() != layer.bias.size())
            throw ShapeMismatch("gradient shape mismatch at layer " + std::to_string(i));

        const double alpha = config.learning_rate * layer.lr_scale;
        auto update = [&](std::vector<double>& param, const std::vector<double>& grad,
                          std::vector<double>& m, std::vector<double>& v) {
            for (std::size_t j = 0; j < param.size(); ++j) {
                m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * grad[j];
                v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * grad[j] * grad[j];
                const double m_hat = m[j] / bias1;
                const double v_hat = v[j] / bias2;
                param[j] -= alpha * m_hat / (std::sqrt(v_hat) + config.epsilon);
            }
        };
        update(layer.weights, g.weights, layer.m_w, layer.v_w);
        update(layer.bias, g.bias, layer.m_b, layer.v_b);
    }
}

void Network::apply_freeze_mode(FreezeMode mode, int fine_tune_layers) {
    std::vector<std::size_t> param_layers;
    for (std::size_t i = 0; i < layers.size(); ++i)
        if (layers[i].has_params()) param_layers.push_back(i);
    if (param_layers.empty()) return;

    switch (mode) {
        case FreezeMode::full:
            for (auto& layer : layers) {
                layer.frozen = false;
                layer.lr_scale = 1.0;
            }
            break;
        case FreezeMode::feature_extraction:
        case FreezeMode::fine_tune: {
            for (const std::size_t i : param_layers) {
                layers[i].frozen = true;
                layers[i].lr_scale = 1.0;
            }
            // the head always trains at full rate
            layers[param_layers.back()].frozen = false;
            if (mode == FreezeMode::fine_tune) {
                const int available = static_cast<int>(param_layers.size()) - 1;
                const int k = std::min(fine_tune_layers, available);
                for (int j = 0; j < k; ++j) {
                    Layer& layer = layers[param_layers[static_cast<std::size_t>(available - 1 - j)]];
                    layer.frozen = false;
                    layer.lr_scale = 0.1;
                }
            }
            break;
        }
    }
}

bool Network::any_unfrozen() const {
    for (const auto& layer : layers)
        if (layer.has_params() && !layer.frozen) return true;
    return false;
}

LossResult cross_entropy(const Tensor& probabilities, std::span<const LabelClass> labels) {
    if (probabilities.n != static_cast<int>(labels.size()) || probabilities.c != 2)
        throw ShapeMismatch("cross_entropy: probabilities " + probabilities.shape_string() +
                            " vs " + std::to_string(labels.size()) + " labels");
    const auto n = static_cast<double>(labels.size());
    LossResult result;
    result.dlogits = Tensor(probabilities.n, 2, 1, 1);
    double sum = 0.0;
    for (int s = 0; s < probabilities.n; ++s) {
        const int truth = static_cast<int>(labels[static_cast<std::size_t>(s)]);
        for (int k = 0; k < 2; ++k) {
            const double p = probabilities.at(s, k, 0, 0);
            result.dlogits.at(s, k, 0, 0) = (p - (k == truth ? 1.0 : 0.0)) / n;
        }
        const double p_true =
            std::clamp(probabilities.at(s, truth, 0, 0), 1e-12, 1.0 - 1e-12);
        sum -= std::log(p_true);
    }
    result.value = sum / n;
    return result;
}

Tensor images_to_batch(std::span<const BehaviorImage> images) {
    Tensor batch(static_cast<int>(images.size()), 1, kImageSize, kImageSize);
    for (std::size_t s = 0; s < images.size(); ++s) {
        double* dst = batch.plane(static_cast<int>(s), 0);
        for (std::size_t i = 0; i < images[s].pixels.size(); ++i)
            dst[i] = images[s].pixels[i] / 255.0;
    }
    return batch;
}

namespace {

int resolve_workers(int workers) {
    if (workers > 0) return workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// runs fn(i) for i in [0, count); strided across workers, each i claimed by
// exactly one thread
void parallel_samples(int count, int workers, const std::function<void(int)>& fn) {
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (int i = t; i < count; i += workers) fn(i);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

Tensor image_to_tensor(const BehaviorImage& image) {
    Tensor x(1, 1, kImageSize, kImageSize);
    for (std::size_t i = 0; i < image.pixels.size(); ++i) x.v[i] = image.pixels[i] / 255.0;
    return x;
}

}  // namespace

std::vector<EpochStats> train(Network& net, std::span<const BehaviorImage> images,
                              std::span<const LabelClass> labels, const TrainConfig& config) {
    config.validate();
    if (images.empty()) throw EmptyDataset("training set is empty");
    if (images.size() != labels.size()) throw ShapeMismatch("image/label count mismatch");

    net.apply_freeze_mode(config.mode, config.fine_tune_layers);

    const int n = static_cast<int>(images.size());
    const int workers = resolve_workers(config.workers);
    Rng rng(config.seed);

    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<EpochStats> log;
    log.reserve(static_cast<std::size_t>(config.epochs));

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng epoch_rng = rng.fork(static_cast<std::uint64_t>(epoch));
        epoch_rng.shuffle(order);

        double loss_sum = 0.0;
        long correct = 0;

        for (int start = 0; start < n; start += config.batch_size) {
            const int bn = std::min(config.batch_size, n - start);
            std::vector<Gradients> slots(static_cast<std::size_t>(bn));
            std::vector<double> losses(static_cast<std::size_t>(bn), 0.0);
            std::vector<char> hits(static_cast<std::size_t>(bn), 0);

            parallel_samples(bn, workers, [&](int j) {
                const std::size_t sample = order[static_cast<std::size_t>(start + j)];
                const BehaviorImage& image = images[sample];
                const LabelClass truth = labels[sample];
                const Tensor x = image_to_tensor(image);
                ForwardCache cache;
                const Tensor p = net.forward(x, &cache);

                const int truth_idx = static_cast<int>(truth);
                const double p_true = std::clamp(p.at(0, truth_idx, 0, 0), 1e-12, 1.0 - 1e-12);
                losses[static_cast<std::size_t>(j)] = -std::log(p_true);
                const LabelClass guess = p.at(0, 1, 0, 0) > p.at(0, 0, 0, 0)
                                             ? LabelClass::malicious
                                             : LabelClass::non_malicious;
                hits[static_cast<std::size_t>(j)] = guess == truth ? 1 : 0;

                Tensor dlogits(1, 2, 1, 1);
                for (int k = 0; k < 2; ++k)
                    dlogits.at(0, k, 0, 0) =
                        (p.at(0, k, 0, 0) - (k == truth_idx ? 1.0 : 0.0)) / static_cast<double>(bn);
                slots[static_cast<std::size_t>(j)] = net.backward(cache, dlogits);
            });

            // fixed-order reduction keeps training independent of worker count
            Gradients total;
            for (auto& slot : slots) total.add(slot);
            net.adam_step(total, config);

            for (const double l : losses) loss_sum += l;
            for (const char h : hits) correct += h;
        }

        log.push_back({epoch + 1, loss_sum / static_cast<double>(n),
                       static_cast<double>(correct) / static_cast<double>(n)});
    }
    return log;
}

Prediction predict(const Network& net, std::span<const BehaviorImage> images, int workers) {
    Prediction out;
    out.labels.resize(images.size());
    out.probabilities.resize(images.size());
    if (images.empty()) return out;

    const int resolved = resolve_workers(workers);
    constexpr int kChunk = 256;
    const int chunks = (static_cast<int>(images.size()) + kChunk - 1) / kChunk;

    parallel_samples(chunks, resolved, [&](int chunk) {
        const std::size_t begin = static_cast<std::size_t>(chunk) * kChunk;
        const std::size_t end = std::min(begin + kChunk, images.size());
        const Tensor batch = images_to_batch(images.subspan(begin, end - begin));
        const Tensor p = net.forward(batch);
        for (std::size_t s = begin; s < end; ++s) {
            const int row = static_cast<int>(s - begin);
            const double p0 = p.at(row, 0, 0, 0), p1 = p.at(row, 1, 0, 0);
            out.probabilities[s] = {p0, p1};
            // ties resolve to non-malicious
            out.labels[s] = p1 > p0 ? LabelClass::malicious : LabelClass::non_malicious;
        }
    });
    return out;
}

namespace {

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64le(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64le(std::vector<std::uint8_t>& out, double v) {
    put_u64le(out, std::bit_cast<std::uint64_t>(v));
}

struct ByteReader {
    const std::uint8_t* p;
    std::size_t size;
    std::size_t pos = 0;

    void need(std::size_t count) const {
        if (pos + count > size) throw CorruptFile("checkpoint truncated");
    }
    std::uint8_t u8() {
        need(1);
        return p[pos++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    void f64_array(std::vector<double>& out, std::size_t count) {
        out.resize(count);
        for (std::size_t i = 0; i < count; ++i) out[i] = f64();
    }
};

constexpr char kMagic[8] = {'I', 'T', 'D', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
    std::vector<std::uint8_t> buf;
    buf.insert(buf.end(), kMagic, kMagic + 8);
    put_u32le(buf, kVersion);
    put_u64le(buf, net.init_seed);
    put_u64le(buf, net.adam_steps);
    put_u32le(buf, static_cast<std::uint32_t>(net.layers.size()));

    for (const auto& layer : net.layers) {
        buf.push_back(static_cast<std::uint8_t>(layer.kind));
        buf.push_back(layer.frozen ? 1 : 0);
        put_f64le(buf, layer.lr_scale);
        put_u32le(buf, static_cast<std::uint32_t>(layer.in_ch));
        put_u32le(buf, static_cast<std::uint32_t>(layer.out_ch));
        put_u64le(buf, layer.weights.size());
        put_u64le(buf, layer.bias.size());
        for (const double v : layer.weights) put_f64le(buf, v);
        for (const double v : layer.bias) put_f64le(buf, v);
        for (const double v : layer.m_w) put_f64le(buf, v);
        for (const double v : layer.v_w) put_f64le(buf, v);
        for (const double v : layer.m_b) put_f64le(buf, v);
        for (const double v : layer.v_b) put_f64le(buf, v);
    }

    const auto crc =
        static_cast<std::uint32_t>(crc32(0, buf.data(), static_cast<uInt>(buf.size())));
    put_u32le(buf, crc);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

Network load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());

    if (buf.size() < 8 + 4 + 4) throw CorruptFile("checkpoint too small");
    if (std::memcmp(buf.data(), kMagic, 8) != 0) throw CorruptFile("bad checkpoint magic");

    const std::size_t body = buf.size() - 4;
    std::uint32_t stored_crc = 0;
    for (int i = 0; i < 4; ++i) stored_crc |= static_cast<std::uint32_t>(buf[body + i]) << (8 * i);
    const auto actual_crc =
        static_cast<std::uint32_t>(crc32(0, buf.data(), static_cast<uInt>(body)));
    if (stored_crc != actual_crc) throw CorruptFile("checkpoint checksum mismatch");

    ByteReader reader{buf.data(), body, 8};
    const std::uint32_t version = reader.u32();
    if (version != kVersion)
        throw VersionMismatch("checkpoint version " + std::to_string(version) + ", expected " +
                              std::to_string(kVersion));

    Network net;
    net.init_seed = reader.u64();
    net.adam_steps = reader.u64();
    const std::uint32_t layer_count = reader.u32();
    net.layers.reserve(layer_count);

    for (std::uint32_t i = 0; i < layer_count; ++i) {
        Layer layer;
        const std::uint8_t kind = reader.u8();
        if (kind > static_cast<std::uint8_t>(LayerKind::softmax))
            throw CorruptFile("bad layer kind " + std::to_string(kind));
        layer.kind = static_cast<LayerKind>(kind);
        layer.frozen = reader.u8() != 0;
        layer.lr_scale = reader.f64();
        layer.in_ch = static_cast<int>(reader.u32());
        layer.out_ch = static_cast<int>(reader.u32());
        const std::uint64_t w_size = reader.u64();
        const std::uint64_t b_size = reader.u64();

        if (layer.kind == LayerKind::conv2d) {
            if (w_size != static_cast<std::uint64_t>(layer.out_ch) * layer.in_ch * 9 ||
                b_size != static_cast<std::uint64_t>(layer.out_ch))
                throw CorruptFile("conv2d parameter sizes inconsistent");
        } else if (layer.kind == LayerKind::dense) {
            if (w_size != static_cast<std::uint64_t>(layer.out_ch) * layer.in_ch ||
                b_size != static_cast<std::uint64_t>(layer.out_ch))
                throw CorruptFile("dense parameter sizes inconsistent");
        } else if (w_size != 0 || b_size != 0) {
            throw CorruptFile("parameterless layer carries parameters");
        }

        reader.f64_array(layer.weights, w_size);
        reader.f64_array(layer.bias, b_size);
        reader.f64_array(layer.m_w, w_size);
        reader.f64_array(layer.v_w, w_size);
        reader.f64_array(layer.m_b, b_size);
        reader.f64_array(layer.v_b, b_size);
        net.layers.push_back(std::move(layer));
    }
    if (reader.pos != body) throw CorruptFile("checkpoint has trailing bytes");
    return net;
}

void write_training_log(const std::filesystem::path& path, std::span<const EpochStats> log) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "epoch,loss,train_accuracy\n";
    char buf[96];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f\n", e.epoch, e.loss, e.accuracy);
        out << buf;
    }
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace itd
