#include "globus/predictor.hpp"

#include "globus/error.hpp"
#include "globus/simd/kernels.hpp"
#include "globus/simd/scalar.hpp"
#include "le_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>

namespace globus {
namespace {

constexpr char kMagic[4] = {'G', 'L', 'B', 'W'};
constexpr std::uint16_t kWeightsVersion = 1;

// Inner loops: dispatched SIMD for float, plain loops for double.
template <class T>
struct Ops;

template <>
struct Ops<float> {
    const simd::KernelTable& k = simd::kernels();
    void axpy(float a, const float* x, float* y, std::size_t n) const { k.axpy(a, x, y, n); }
    double dot(const float* x, const float* y, std::size_t n) const { return k.dot(x, y, n); }
    void relu(float* x, std::size_t n) const { k.relu(x, n); }
    void relu_backward(const float* act, float* grad, std::size_t n) const { k.relu_backward(act, grad, n); }
};

template <>
struct Ops<double> {
    void axpy(double a, const double* x, double* y, std::size_t n) const { simd::scalar::axpy(a, x, y, n); }
    double dot(const double* x, const double* y, std::size_t n) const { return simd::scalar::dot(x, y, n); }
    void relu(double* x, std::size_t n) const { simd::scalar::relu(x, n); }
    void relu_backward(const double* act, double* grad, std::size_t n) const {
        simd::scalar::relu_backward(act, grad, n);
    }
};

int width_at(const ModelConfig& cfg, int level) { return cfg.base_filters << level; }

// Layer numbering within architecture().
std::size_t enc_layer(int l) { return static_cast<std::size_t>(l); }
std::size_t bottleneck_layer(const ModelConfig& cfg) { return static_cast<std::size_t>(cfg.depth); }
std::size_t up_layer(const ModelConfig& cfg, int l) { return static_cast<std::size_t>(cfg.depth + 1 + 2 * (cfg.depth - 1 - l)); }
std::size_t merge_layer(const ModelConfig& cfg, int l) { return up_layer(cfg, l) + 1; }
std::size_t head_layer(const ModelConfig& cfg) { return static_cast<std::size_t>(3 * cfg.depth + 1); }

// Column range [x0, x1) of outputs whose input column x + dx is in bounds.
struct Span1 {
    int x0;
    int x1;
};
Span1 valid_range(int width, int dx) { return {std::max(0, -dx), std::min(width, width - dx)}; }

template <class T>
BasicTensor<T> conv_forward(const Ops<T>& ops, const LayerShape& L, const T* params, const BasicTensor<T>& in) {
    const int h = in.height;
    const int w = in.width;
    const int pad = L.kernel / 2;
    BasicTensor<T> out(L.out_channels, h, w);
    const T* kernel = params + L.offset;
    const T* bias = params + L.bias_offset();
    for (int co = 0; co < L.out_channels; ++co) {
        T* o = out.channel(co);
        std::fill(o, o + out.plane(), bias[co]);
        for (int ci = 0; ci < L.in_channels; ++ci) {
            const T* src = in.channel(ci);
            for (int ky = 0; ky < L.kernel; ++ky) {
                for (int kx = 0; kx < L.kernel; ++kx) {
                    const T wv = kernel[((static_cast<std::size_t>(co) * L.in_channels + ci) * L.kernel + ky) * L.kernel + kx];
                    const int dx = kx - pad;
                    const int dy = ky - pad;
                    const auto [x0, x1] = valid_range(w, dx);
                    if (x1 <= x0) continue;
                    for (int y = std::max(0, -dy); y < std::min(h, h - dy); ++y) {
                        ops.axpy(wv, src + static_cast<std::size_t>(y + dy) * w + x0 + dx,
                                 o + static_cast<std::size_t>(y) * w + x0, static_cast<std::size_t>(x1 - x0));
                    }
                }
            }
        }
    }
    return out;
}

// Writes this layer's slice of `grad`; returns the input gradient when asked.
template <class T>
void conv_backward(const Ops<T>& ops, const LayerShape& L, const T* params, const BasicTensor<T>& in,
                   const BasicTensor<T>& dout, T* grad, BasicTensor<T>* din) {
    const int h = in.height;
    const int w = in.width;
    const int pad = L.kernel / 2;
    if (din) *din = BasicTensor<T>(in.channels, h, w);
    for (int co = 0; co < L.out_channels; ++co) {
        const T* g = dout.channel(co);
        double bsum = 0.0;
        for (std::size_t i = 0; i < dout.plane(); ++i) bsum += g[i];
        grad[L.bias_offset() + static_cast<std::size_t>(co)] = static_cast<T>(bsum);
        for (int ci = 0; ci < L.in_channels; ++ci) {
            const T* src = in.channel(ci);
            T* dsrc = din ? din->channel(ci) : nullptr;
            for (int ky = 0; ky < L.kernel; ++ky) {
                for (int kx = 0; kx < L.kernel; ++kx) {
                    const std::size_t idx =
                        L.offset + ((static_cast<std::size_t>(co) * L.in_channels + ci) * L.kernel + ky) * L.kernel + kx;
                    const int dx = kx - pad;
                    const int dy = ky - pad;
                    const auto [x0, x1] = valid_range(w, dx);
                    double acc = 0.0;
                    if (x1 > x0) {
                        const auto n = static_cast<std::size_t>(x1 - x0);
                        for (int y = std::max(0, -dy); y < std::min(h, h - dy); ++y) {
                            const T* grow = g + static_cast<std::size_t>(y) * w + x0;
                            const std::size_t srow = static_cast<std::size_t>(y + dy) * w + x0 + dx;
                            acc += ops.dot(grow, src + srow, n);
                            if (dsrc) ops.axpy(params[idx], grow, dsrc + srow, n);
                        }
                    }
                    grad[idx] = static_cast<T>(acc);
                }
            }
        }
    }
}

template <class T>
BasicTensor<T> maxpool_forward(const BasicTensor<T>& in) {
    BasicTensor<T> out(in.channels, in.height / 2, in.width / 2);
    for (int c = 0; c < in.channels; ++c) {
        const T* src = in.channel(c);
        T* dst = out.channel(c);
        for (int y = 0; y < out.height; ++y) {
            const T* r0 = src + static_cast<std::size_t>(2 * y) * in.width;
            const T* r1 = r0 + in.width;
            for (int x = 0; x < out.width; ++x) {
                dst[static_cast<std::size_t>(y) * out.width + x] =
                    std::max(std::max(r0[2 * x], r0[2 * x + 1]), std::max(r1[2 * x], r1[2 * x + 1]));
            }
        }
    }
    return out;
}

// Routes each pooled gradient to the first maximal input of its window.
template <class T>
void maxpool_backward_add(const BasicTensor<T>& in, const BasicTensor<T>& dout, BasicTensor<T>& din) {
    for (int c = 0; c < in.channels; ++c) {
        const T* src = in.channel(c);
        const T* g = dout.channel(c);
        T* d = din.channel(c);
        for (int y = 0; y < dout.height; ++y) {
            for (int x = 0; x < dout.width; ++x) {
                std::size_t best = static_cast<std::size_t>(2 * y) * in.width + 2 * x;
                for (const std::size_t cand : {best + 1, best + in.width, best + in.width + 1}) {
                    if (src[cand] > src[best]) best = cand;
                }
                d[best] += g[static_cast<std::size_t>(y) * dout.width + x];
            }
        }
    }
}

template <class T>
BasicTensor<T> upsample_forward(const BasicTensor<T>& in) {
    BasicTensor<T> out(in.channels, in.height * 2, in.width * 2);
    for (int c = 0; c < in.channels; ++c) {
        const T* src = in.channel(c);
        T* dst = out.channel(c);
        for (int y = 0; y < out.height; ++y) {
            const T* srow = src + static_cast<std::size_t>(y / 2) * in.width;
            T* drow = dst + static_cast<std::size_t>(y) * out.width;
            for (int x = 0; x < out.width; ++x) drow[x] = srow[x / 2];
        }
    }
    return out;
}

template <class T>
BasicTensor<T> upsample_backward(const BasicTensor<T>& dout) {
    BasicTensor<T> din(dout.channels, dout.height / 2, dout.width / 2);
    for (int c = 0; c < dout.channels; ++c) {
        const T* g = dout.channel(c);
        T* d = din.channel(c);
        for (int y = 0; y < din.height; ++y) {
            const T* r0 = g + static_cast<std::size_t>(2 * y) * dout.width;
            const T* r1 = r0 + dout.width;
            for (int x = 0; x < din.width; ++x) {
                d[static_cast<std::size_t>(y) * din.width + x] = ((r0[2 * x] + r0[2 * x + 1]) + r1[2 * x]) + r1[2 * x + 1];
            }
        }
    }
    return din;
}

template <class T>
BasicTensor<T> concat(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    BasicTensor<T> out(a.channels + b.channels, a.height, a.width);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
    return out;
}

template <class T>
void relu(const Ops<T>& ops, BasicTensor<T>& t) {
    ops.relu(t.data.data(), t.data.size());
}

template <class T>
struct Trace {
    std::vector<BasicTensor<T>> skip;     // encoder activations per level
    std::vector<BasicTensor<T>> pooled;   // their 2x2 max-pools
    BasicTensor<T> bottleneck;
    std::vector<BasicTensor<T>> up;       // upsampled decoder input per level
    std::vector<BasicTensor<T>> decoded;  // activation of the conv after upsampling
    std::vector<BasicTensor<T>> cat;
    std::vector<BasicTensor<T>> merged;
    BasicTensor<T> output;
};

template <class T>
void check_input(const ModelConfig& cfg, std::size_t param_size, const BasicTensor<T>& input) {
    validate(cfg);
    if (param_size != parameter_count(cfg)) {
        throw Error(ErrorKind::Shape, "expected " + std::to_string(parameter_count(cfg)) + " parameters, got " +
                                          std::to_string(param_size));
    }
    if (input.channels != cfg.in_channels) {
        throw Error(ErrorKind::Shape, "network expects " + std::to_string(cfg.in_channels) + " input channels, got " +
                                          std::to_string(input.channels));
    }
    const int step = 1 << cfg.depth;
    if (input.height < step || input.width < step || input.height % step || input.width % step) {
        throw Error(ErrorKind::Shape, "tile " + std::to_string(input.height) + "x" + std::to_string(input.width) +
                                          " is not divisible by " + std::to_string(step));
    }
    for (const T v : input.data) {
        if (!std::isfinite(v)) throw Error(ErrorKind::Input, "network input contains a non-finite value");
    }
}

template <class T>
Trace<T> run_forward(const ModelConfig& cfg, const T* params, const BasicTensor<T>& input) {
    const Ops<T> ops;
    const auto layers = architecture(cfg);
    const int depth = cfg.depth;
    Trace<T> tr;
    tr.skip.resize(static_cast<std::size_t>(depth));
    tr.pooled.resize(static_cast<std::size_t>(depth));
    tr.up.resize(static_cast<std::size_t>(depth));
    tr.decoded.resize(static_cast<std::size_t>(depth));
    tr.cat.resize(static_cast<std::size_t>(depth));
    tr.merged.resize(static_cast<std::size_t>(depth));

    const BasicTensor<T>* x = &input;
    for (int l = 0; l < depth; ++l) {
        const auto i = static_cast<std::size_t>(l);
        tr.skip[i] = conv_forward(ops, layers[enc_layer(l)], params, *x);
        relu(ops, tr.skip[i]);
        tr.pooled[i] = maxpool_forward(tr.skip[i]);
        x = &tr.pooled[i];
    }
    tr.bottleneck = conv_forward(ops, layers[bottleneck_layer(cfg)], params, *x);
    relu(ops, tr.bottleneck);
    x = &tr.bottleneck;
    for (int l = depth - 1; l >= 0; --l) {
        const auto i = static_cast<std::size_t>(l);
        tr.up[i] = upsample_forward(*x);
        tr.decoded[i] = conv_forward(ops, layers[up_layer(cfg, l)], params, tr.up[i]);
        relu(ops, tr.decoded[i]);
        tr.cat[i] = concat(tr.decoded[i], tr.skip[i]);
        tr.merged[i] = conv_forward(ops, layers[merge_layer(cfg, l)], params, tr.cat[i]);
        relu(ops, tr.merged[i]);
        x = &tr.merged[i];
    }
    tr.output = conv_forward(ops, layers[head_layer(cfg)], params, *x);
    relu(ops, tr.output);
    return tr;
}

}  // namespace

void validate(const ModelConfig& cfg) {
    if (cfg.depth < 1 || cfg.depth > 8) throw Error(ErrorKind::Config, "model depth must be in 1..8");
    if (cfg.base_filters < 1) throw Error(ErrorKind::Config, "base_filters must be at least 1");
    if (cfg.kernel_size < 1 || cfg.kernel_size % 2 == 0) throw Error(ErrorKind::Config, "kernel_size must be odd");
    if (cfg.in_channels < 1) throw Error(ErrorKind::Config, "in_channels must be at least 1");
    if (static_cast<long long>(cfg.base_filters) << cfg.depth > (1 << 16)) {
        throw Error(ErrorKind::Config, "base_filters * 2^depth is too large");
    }
}

std::vector<LayerShape> architecture(const ModelConfig& cfg) {
    validate(cfg);
    std::vector<LayerShape> layers;
    std::size_t offset = 0;
    auto add = [&](int in, int out, int k) {
        LayerShape s{in, out, k, offset};
        offset += s.parameter_count();
        layers.push_back(s);
    };
    const int k = cfg.kernel_size;
    int in = cfg.in_channels;
    for (int l = 0; l < cfg.depth; ++l) {
        add(in, width_at(cfg, l), k);
        in = width_at(cfg, l);
    }
    add(in, width_at(cfg, cfg.depth), k);
    for (int l = cfg.depth - 1; l >= 0; --l) {
        add(width_at(cfg, l + 1), width_at(cfg, l), k);
        add(2 * width_at(cfg, l), width_at(cfg, l), k);
    }
    add(width_at(cfg, 0), 1, 1);
    return layers;
}

std::size_t parameter_count(const ModelConfig& cfg) {
    const auto layers = architecture(cfg);
    return layers.back().offset + layers.back().parameter_count();
}

std::span<const float> Weights::kernel(std::size_t layer) const {
    const auto s = architecture(config).at(layer);
    return std::span<const float>(params).subspan(s.offset, s.kernel_count());
}

std::span<const float> Weights::bias(std::size_t layer) const {
    const auto s = architecture(config).at(layer);
    return std::span<const float>(params).subspan(s.bias_offset(), static_cast<std::size_t>(s.out_channels));
}

Weights init_weights(const ModelConfig& cfg) {
    Weights w{cfg, std::vector<float>(parameter_count(cfg), 0.0f)};
    std::mt19937_64 rng(cfg.seed);
    for (const auto& s : architecture(cfg)) {
        const double fan_in = static_cast<double>(s.in_channels) * s.kernel * s.kernel;
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
        for (std::size_t i = 0; i < s.kernel_count(); ++i) w.params[s.offset + i] = static_cast<float>(dist(rng));
    }
    return w;
}

template <class T>
BasicTensor<T> forward(const ModelConfig& cfg, std::span<const T> params, const BasicTensor<T>& input) {
    check_input(cfg, params.size(), input);
    return std::move(run_forward(cfg, params.data(), input).output);
}

template <class T>
LossGradient<T> loss_and_gradient(const ModelConfig& cfg, std::span<const T> params, const BasicTensor<T>& input,
                                  const BasicTensor<T>& target) {
    check_input(cfg, params.size(), input);
    if (target.channels != 1 || target.height != input.height || target.width != input.width) {
        throw Error(ErrorKind::Shape, "target must be 1x" + std::to_string(input.height) + "x" +
                                          std::to_string(input.width));
    }
    const Ops<T> ops;
    const auto layers = architecture(cfg);
    const T* p = params.data();
    const int depth = cfg.depth;
    Trace<T> tr = run_forward(cfg, p, input);

    LossGradient<T> out;
    out.gradient.assign(params.size(), T(0));
    T* grad = out.gradient.data();

    const auto n = tr.output.data.size();
    BasicTensor<T> d(1, input.height, input.width);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double diff = static_cast<double>(tr.output.data[i]) - static_cast<double>(target.data[i]);
        sum += diff * diff;
        d.data[i] = static_cast<T>(2.0 * diff / static_cast<double>(n));
    }
    out.loss = sum / static_cast<double>(n);
    ops.relu_backward(tr.output.data.data(), d.data.data(), n);

    BasicTensor<T> dm;
    conv_backward(ops, layers[head_layer(cfg)], p, tr.merged[0], d, grad, &dm);
    std::vector<BasicTensor<T>> dskip(static_cast<std::size_t>(depth));
    for (int l = 0; l < depth; ++l) {
        const auto i = static_cast<std::size_t>(l);
        ops.relu_backward(tr.merged[i].data.data(), dm.data.data(), dm.data.size());
        BasicTensor<T> dcat;
        conv_backward(ops, layers[merge_layer(cfg, l)], p, tr.cat[i], dm, grad, &dcat);
        const int fl = tr.decoded[i].channels;
        BasicTensor<T> ddec(fl, dcat.height, dcat.width);
        dskip[i] = BasicTensor<T>(fl, dcat.height, dcat.width);
        const auto half = static_cast<std::ptrdiff_t>(ddec.data.size());
        std::copy(dcat.data.begin(), dcat.data.begin() + half, ddec.data.begin());
        std::copy(dcat.data.begin() + half, dcat.data.end(), dskip[i].data.begin());
        ops.relu_backward(tr.decoded[i].data.data(), ddec.data.data(), ddec.data.size());
        BasicTensor<T> dup;
        conv_backward(ops, layers[up_layer(cfg, l)], p, tr.up[i], ddec, grad, &dup);
        dm = upsample_backward(dup);
    }
    ops.relu_backward(tr.bottleneck.data.data(), dm.data.data(), dm.data.size());
    BasicTensor<T> dp;
    conv_backward(ops, layers[bottleneck_layer(cfg)], p, tr.pooled[static_cast<std::size_t>(depth - 1)], dm, grad, &dp);
    for (int l = depth - 1; l >= 0; --l) {
        const auto i = static_cast<std::size_t>(l);
        maxpool_backward_add(tr.skip[i], dp, dskip[i]);
        ops.relu_backward(tr.skip[i].data.data(), dskip[i].data.data(), dskip[i].data.size());
        const BasicTensor<T>& in = l == 0 ? input : tr.pooled[i - 1];
        conv_backward(ops, layers[enc_layer(l)], p, in, dskip[i], grad, l == 0 ? nullptr : &dp);
    }
    return out;
}

template Tensor forward<float>(const ModelConfig&, std::span<const float>, const Tensor&);
template BasicTensor<double> forward<double>(const ModelConfig&, std::span<const double>, const BasicTensor<double>&);
template LossGradient<float> loss_and_gradient<float>(const ModelConfig&, std::span<const float>, const Tensor&,
                                                      const Tensor&);
template LossGradient<double> loss_and_gradient<double>(const ModelConfig&, std::span<const double>,
                                                        const BasicTensor<double>&, const BasicTensor<double>&);

Tensor forward(const Weights& w, const Tensor& input) {
    return forward<float>(w.config, w.params, input);
}

LossGradient<float> loss_and_gradient(const Weights& w, const Tensor& input, const Tensor& target) {
    return loss_and_gradient<float>(w.config, w.params, input, target);
}

TrainResult train(Weights w, const std::vector<Sample>& dataset, const TrainConfig& cfg) {
    if (dataset.empty()) throw Error(ErrorKind::Empty, "train: empty dataset");
    if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
        throw Error(ErrorKind::Config, "learning_rate must be a finite non-negative number");
    }
    if (cfg.epochs < 1) throw Error(ErrorKind::Config, "epochs must be at least 1");
    if (cfg.batch_size < 1) throw Error(ErrorKind::Config, "batch_size must be at least 1");

    const auto& k = simd::kernels();
    const std::size_t np = w.params.size();
    std::vector<float> batch_grad(np);
    TrainResult result;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double sum = 0.0;
        for (std::size_t start = 0; start < dataset.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop = std::min(dataset.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::fill(batch_grad.begin(), batch_grad.end(), 0.0f);
            for (std::size_t s = start; s < stop; ++s) {
                const auto lg = loss_and_gradient(w, dataset[s].input, dataset[s].target);
                if (!std::isfinite(lg.loss)) {
                    throw Error(ErrorKind::Divergence, "training diverged in epoch " + std::to_string(epoch) +
                                                           " (non-finite loss)");
                }
                sum += lg.loss;
                k.axpy(1.0f, lg.gradient.data(), batch_grad.data(), np);
            }
            const auto step = static_cast<float>(-cfg.learning_rate / static_cast<double>(stop - start));
            k.axpy(step, batch_grad.data(), w.params.data(), np);
            for (const float v : w.params) {
                if (!std::isfinite(v)) {
                    throw Error(ErrorKind::Divergence, "training diverged in epoch " + std::to_string(epoch) +
                                                           " (non-finite parameter)");
                }
            }
        }
        result.loss_history.push_back(sum / static_cast<double>(dataset.size()));
    }
    result.weights = std::move(w);
    return result;
}

Tensor tile_tensor(const TileStack& tile) {
    Tensor t(static_cast<int>(tile.channels.size()), tile.tile_size, tile.tile_size);
    for (std::size_t c = 0; c < tile.channels.size(); ++c) {
        std::copy(tile.channels[c].begin(), tile.channels[c].end(), t.channel(static_cast<int>(c)));
    }
    return t;
}

Raster predict_city(const Weights& w, const std::vector<Raster>& channels, const NormalizationParams& target,
                    int tile_size) {
    // Nodata carries no signal for the network.
    std::vector<Raster> clean = channels;
    for (auto& ch : clean) {
        const float nd = ch.nodata();
        for (float& v : ch.values()) {
            if (v == nd) v = 0.0f;
        }
    }
    const auto sp = split(clean, tile_size);
    std::vector<TileData> outputs;
    outputs.reserve(sp.tiles.size());
    for (const auto& tile : sp.tiles) {
        auto y = forward(w, tile_tensor(tile));
        outputs.push_back({tile.row_index, tile.col_index, std::move(y.data)});
    }
    return clamp_nonnegative(denormalize(stitch(sp.plan, outputs), target));
}

Raster baseline_predict(const Raster& ndsm_resampled, const FootprintMask& mask) {
    require_aligned(ndsm_resampled, mask.raster, "baseline_predict");
    Raster out(ndsm_resampled.width(), ndsm_resampled.height(), ndsm_resampled.georef(), ndsm_resampled.nodata());
    const auto src = ndsm_resampled.values();
    const auto m = mask.raster.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const bool built = m[i] != 0.0f && m[i] != mask.raster.nodata();
        dst[i] = built && src[i] != ndsm_resampled.nodata() ? std::max(0.0f, src[i]) : 0.0f;
    }
    return out;
}

void write_weights(const Weights& w, const std::filesystem::path& path) {
    if (w.params.size() != parameter_count(w.config)) {
        throw Error(ErrorKind::Shape, "write_weights: parameter count does not match the config");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    out.write(kMagic, 4);
    le::put<std::uint16_t>(out, kWeightsVersion);
    le::put<std::uint32_t>(out, static_cast<std::uint32_t>(w.config.depth));
    le::put<std::uint32_t>(out, static_cast<std::uint32_t>(w.config.base_filters));
    le::put<std::uint32_t>(out, static_cast<std::uint32_t>(w.config.kernel_size));
    le::put<std::uint32_t>(out, static_cast<std::uint32_t>(w.config.in_channels));
    le::put<std::uint64_t>(out, w.config.seed);
    le::put<std::uint64_t>(out, w.params.size());
    for (const float v : w.params) le::put<float>(out, v);
    if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

Weights read_weights(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    try {
        le::Reader rd(in);
        char magic[4];
        rd.read_raw(magic, 4, "magic");
        if (!std::equal(magic, magic + 4, kMagic)) throw FormatError("bad magic, expected GLBW", 0);
        const auto version = rd.get<std::uint16_t>("version");
        if (version != kWeightsVersion) throw FormatError("unsupported GLBW version " + std::to_string(version), 4);
        Weights w;
        w.config.depth = static_cast<int>(rd.get<std::uint32_t>("depth"));
        w.config.base_filters = static_cast<int>(rd.get<std::uint32_t>("base_filters"));
        w.config.kernel_size = static_cast<int>(rd.get<std::uint32_t>("kernel_size"));
        w.config.in_channels = static_cast<int>(rd.get<std::uint32_t>("in_channels"));
        w.config.seed = rd.get<std::uint64_t>("seed");
        try {
            validate(w.config);
        } catch (const Error& e) {
            throw FormatError(std::string("invalid model config: ") + e.what(), 6);
        }
        const auto count = rd.get<std::uint64_t>("parameter count");
        if (count != parameter_count(w.config)) {
            throw FormatError("parameter count " + std::to_string(count) + " does not match the config", 30);
        }
        w.params.resize(count);
        for (auto& v : w.params) {
            const auto at = rd.offset();
            v = rd.get<float>("parameters");
            if (!std::isfinite(v)) throw FormatError("non-finite parameter", at);
        }
        if (!rd.at_eof()) throw FormatError("trailing bytes after parameters", rd.offset());
        return w;
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.detail(), e.offset());
    }
}

void write_loss_history(const std::vector<double>& history, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    out << "epoch,mean_loss\n";
    char buf[64];
    for (std::size_t i = 0; i < history.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i + 1, history[i]);
        out << buf;
    }
    if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace globus
