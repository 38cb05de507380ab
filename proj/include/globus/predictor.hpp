#pragma once

// Encoder-decoder height regressor with hand-written backpropagation.
//
// Layout for depth D, base width F, C input channels (widths F_l = F * 2^l):
//
//   encoder l = 0..D-1   conv k x k (-> F_l) + ReLU, kept as skip, 2x2 max-pool
//   bottleneck           conv k x k (-> F_D) + ReLU
//   decoder l = D-1..0   2x nearest upsample, conv (-> F_l) + ReLU,
//                        concat [decoded, skip], conv (2F_l -> F_l) + ReLU
//   head                 conv 1x1 (F_0 -> 1) + ReLU
//
// Convolutions are zero-padded "same". Parameters live in one flat vector in
// that layer order, each layer as kernel[out][in][ky][kx] followed by bias[out].

#include "globus/footprints.hpp"
#include "globus/raster.hpp"
#include "globus/tiler.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace globus {

struct ModelConfig {
    int depth = 3;
    int base_filters = 8;
    int kernel_size = 3;
    int in_channels = 3;
    std::uint64_t seed = 0;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Throws ErrorKind::Config on an invalid configuration.
void validate(const ModelConfig& cfg);

struct LayerShape {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 0;
    std::size_t offset = 0;  // first kernel weight in the flat vector

    std::size_t kernel_count() const noexcept {
        return static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel;
    }
    std::size_t bias_offset() const noexcept { return offset + kernel_count(); }
    std::size_t parameter_count() const noexcept { return kernel_count() + static_cast<std::size_t>(out_channels); }
};

std::vector<LayerShape> architecture(const ModelConfig& cfg);
std::size_t parameter_count(const ModelConfig& cfg);

struct Weights {
    ModelConfig config;
    std::vector<float> params;

    std::span<const float> kernel(std::size_t layer) const;
    std::span<const float> bias(std::size_t layer) const;
};

/// He-normal kernels from the seeded generator, zero biases.
Weights init_weights(const ModelConfig& cfg);

/// Channel-major C x H x W array.
template <class T>
struct BasicTensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<T> data;

    BasicTensor() = default;
    BasicTensor(int c, int h, int w, T fill = T(0))
        : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

    std::size_t plane() const noexcept { return static_cast<std::size_t>(height) * width; }
    T* channel(int c) noexcept { return data.data() + static_cast<std::size_t>(c) * plane(); }
    const T* channel(int c) const noexcept { return data.data() + static_cast<std::size_t>(c) * plane(); }
};

using Tensor = BasicTensor<float>;

template <class T>
struct LossGradient {
    double loss = 0.0;
    std::vector<T> gradient;
};

// The float instantiations run on the dispatched SIMD kernels; the double
// ones are the 64-bit path used for gradient checking.
template <class T>
BasicTensor<T> forward(const ModelConfig& cfg, std::span<const T> params, const BasicTensor<T>& input);
template <class T>
LossGradient<T> loss_and_gradient(const ModelConfig& cfg, std::span<const T> params, const BasicTensor<T>& input,
                                  const BasicTensor<T>& target);

Tensor forward(const Weights& w, const Tensor& input);
LossGradient<float> loss_and_gradient(const Weights& w, const Tensor& input, const Tensor& target);

struct TrainConfig {
    double learning_rate = 1e-3;
    int epochs = 10;
    int batch_size = 1;
    std::uint64_t seed = 0;
};

struct Sample {
    Tensor input;
    Tensor target;  // 1 x H x W
};

struct TrainResult {
    Weights weights;
    std::vector<double> loss_history;  // mean per-sample loss of each epoch, before that sample's step
};

/// Per-sample SGD in dataset order. Throws ErrorKind::Divergence naming the
/// epoch when the loss or the parameters stop being finite.
TrainResult train(Weights w, const std::vector<Sample>& dataset, const TrainConfig& cfg);

/// Builds the network input for one tile.
Tensor tile_tensor(const TileStack& tile);

/// Tiled inference over normalized channels, stitched, mapped back to meters
/// with `target` and clamped at zero.
Raster predict_city(const Weights& w, const std::vector<Raster>& channels, const NormalizationParams& target,
                    int tile_size = kTileSize);

/// Resampled coarse nDSM kept on footprint cells, clamped at zero; 0 elsewhere.
Raster baseline_predict(const Raster& ndsm_resampled, const FootprintMask& mask);

void write_weights(const Weights& w, const std::filesystem::path& path);
Weights read_weights(const std::filesystem::path& path);
void write_loss_history(const std::vector<double>& history, const std::filesystem::path& path);

}  // namespace globus
