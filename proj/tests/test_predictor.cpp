#include "globus/error.hpp"
#include "globus/predictor.hpp"
#include "globus/simd/kernels.hpp"

#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <random>

using namespace globus;

namespace {

using TensorD = BasicTensor<double>;

// Straight-line reference network: direct convolution sums, no shared code
// with the library beyond the declared architecture.
struct RefNet {
    const ModelConfig& cfg;
    const std::vector<double>& p;
    std::size_t cursor = 0;

    TensorD conv(const TensorD& in, int out_c, int k) {
        const int pad = k / 2;
        TensorD out(out_c, in.height, in.width);
        const std::size_t wbase = cursor;
        const std::size_t bbase = cursor + static_cast<std::size_t>(out_c) * in.channels * k * k;
        cursor = bbase + static_cast<std::size_t>(out_c);
        for (int co = 0; co < out_c; ++co)
            for (int y = 0; y < in.height; ++y)
                for (int x = 0; x < in.width; ++x) {
                    double s = p[bbase + co];
                    for (int ci = 0; ci < in.channels; ++ci)
                        for (int ky = 0; ky < k; ++ky)
                            for (int kx = 0; kx < k; ++kx) {
                                const int yy = y + ky - pad, xx = x + kx - pad;
                                if (yy < 0 || xx < 0 || yy >= in.height || xx >= in.width) continue;
                                s += p[wbase + ((static_cast<std::size_t>(co) * in.channels + ci) * k + ky) * k + kx] *
                                     in.channel(ci)[yy * in.width + xx];
                            }
                    out.channel(co)[y * in.width + x] = std::max(0.0, s);
                }
        return out;
    }

    static TensorD pool(const TensorD& in) {
        TensorD out(in.channels, in.height / 2, in.width / 2);
        for (int c = 0; c < in.channels; ++c)
            for (int y = 0; y < out.height; ++y)
                for (int x = 0; x < out.width; ++x) {
                    double m = -INFINITY;
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx) m = std::max(m, in.channel(c)[(2 * y + dy) * in.width + 2 * x + dx]);
                    out.channel(c)[y * out.width + x] = m;
                }
        return out;
    }

    static TensorD up(const TensorD& in) {
        TensorD out(in.channels, in.height * 2, in.width * 2);
        for (int c = 0; c < in.channels; ++c)
            for (int y = 0; y < out.height; ++y)
                for (int x = 0; x < out.width; ++x) out.channel(c)[y * out.width + x] = in.channel(c)[(y / 2) * in.width + x / 2];
        return out;
    }

    static TensorD cat(const TensorD& a, const TensorD& b) {
        TensorD out(a.channels + b.channels, a.height, a.width);
        std::copy(a.data.begin(), a.data.end(), out.data.begin());
        std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<long>(a.data.size()));
        return out;
    }

    TensorD run(const TensorD& input) {
        const int f = cfg.base_filters, k = cfg.kernel_size, d = cfg.depth;
        std::vector<TensorD> skips;
        TensorD x = input;
        for (int l = 0; l < d; ++l) {
            skips.push_back(conv(x, f << l, k));
            x = pool(skips.back());
        }
        x = conv(x, f << d, k);
        for (int l = d - 1; l >= 0; --l) {
            x = conv(up(x), f << l, k);
            x = conv(cat(x, skips[static_cast<std::size_t>(l)]), f << l, k);
        }
        return conv(x, 1, 1);
    }
};

TensorD random_tensor(std::mt19937_64& rng, int c, int h, int w, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    TensorD t(c, h, w);
    for (auto& v : t.data) v = u(rng);
    return t;
}

Tensor to_float(const TensorD& t) {
    Tensor out(t.channels, t.height, t.width);
    std::transform(t.data.begin(), t.data.end(), out.data.begin(), [](double v) { return static_cast<float>(v); });
    return out;
}

// Tiny network with positive biases so most units sit away from ReLU kinks.
std::vector<double> tiny_params(const ModelConfig& cfg, std::mt19937_64& rng) {
    const auto w = init_weights(cfg);
    std::vector<double> p(w.params.begin(), w.params.end());
    std::uniform_real_distribution<double> u(0.05, 0.3);
    for (const auto& s : architecture(cfg))
        for (int b = 0; b < s.out_channels; ++b) p[s.bias_offset() + static_cast<std::size_t>(b)] = u(rng);
    return p;
}

}  // namespace

TEST_CASE("parameter count follows the layer arithmetic") {
    const ModelConfig cfg{3, 8, 3, 3, 0};
    auto conv = [](std::size_t in, std::size_t out, std::size_t k) { return in * out * k * k + out; };
    const std::size_t expected = conv(3, 8, 3) + conv(8, 16, 3) + conv(16, 32, 3) + conv(32, 64, 3) +
                                 conv(64, 32, 3) + conv(64, 32, 3) + conv(32, 16, 3) + conv(32, 16, 3) +
                                 conv(16, 8, 3) + conv(16, 8, 3) + conv(8, 1, 1);
    CHECK(parameter_count(cfg) == expected);
    CHECK(expected == 73033);
    CHECK(init_weights(cfg).params.size() == expected);
}

TEST_CASE("initialization is seeded") {
    ModelConfig cfg{2, 4, 3, 3, 7};
    const auto a = init_weights(cfg);
    const auto b = init_weights(cfg);
    CHECK(a.params == b.params);
    cfg.seed = 8;
    CHECK(init_weights(cfg).params != a.params);
    for (std::size_t l = 0; l < architecture(cfg).size(); ++l) {
        for (float v : a.bias(l)) CHECK(v == 0.0f);
    }
}

TEST_CASE("invalid configs are rejected") {
    CHECK_THROWS_AS(validate(ModelConfig{0, 8, 3, 3, 0}), Error);
    CHECK_THROWS_AS(validate(ModelConfig{3, 0, 3, 3, 0}), Error);
    CHECK_THROWS_AS(validate(ModelConfig{3, 8, 2, 3, 0}), Error);
    CHECK_THROWS_AS(validate(ModelConfig{3, 8, 3, 0, 0}), Error);
}

TEST_CASE("zero input with zero biases gives zero output") {
    const ModelConfig cfg{3, 4, 3, 3, 1};
    const auto w = init_weights(cfg);
    const auto y = forward(w, Tensor(3, 32, 32));
    CHECK(y.channels == 1);
    CHECK(std::all_of(y.data.begin(), y.data.end(), [](float v) { return v == 0.0f; }));
}

TEST_CASE("output keeps the input size and is never negative") {
    std::mt19937_64 rng(3);
    for (int depth = 1; depth <= 3; ++depth) {
        const ModelConfig cfg{depth, 3, 3, 2, static_cast<std::uint64_t>(depth)};
        auto w = init_weights(cfg);
        std::normal_distribution<float> n(0.0f, 1.0f);
        for (auto& v : w.params) v = n(rng);
        const auto x = to_float(random_tensor(rng, 2, 16, 24, -1.0, 1.0));
        const auto y = forward(w, x);
        CHECK(y.height == 16);
        CHECK(y.width == 24);
        CHECK(*std::min_element(y.data.begin(), y.data.end()) >= 0.0f);
    }
}

TEST_CASE("shape and input errors") {
    const ModelConfig cfg{2, 2, 3, 1, 0};
    const auto w = init_weights(cfg);
    CHECK_THROWS_AS(forward(w, Tensor(2, 8, 8)), Error);
    CHECK_THROWS_AS(forward(w, Tensor(1, 6, 8)), Error);
    Tensor bad(1, 8, 8);
    bad.data[5] = NAN;
    try {
        forward(w, bad);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Input);
    }
    CHECK_THROWS_AS(loss_and_gradient(w, Tensor(1, 8, 8), Tensor(1, 4, 8)), Error);
}

TEST_CASE("forward matches the straight-line reference network") {
    std::mt19937_64 rng(11);
    for (int depth = 1; depth <= 3; ++depth) {
        const ModelConfig cfg{depth, 2, 3, 3, 5};
        const auto p = tiny_params(cfg, rng);
        const auto x = random_tensor(rng, 3, 8, 8, 0.0, 1.0);
        const auto expect = RefNet{cfg, p}.run(x);
        const auto got64 = forward<double>(cfg, p, x);
        for (std::size_t i = 0; i < expect.data.size(); ++i) CHECK(got64.data[i] == doctest::Approx(expect.data[i]).epsilon(1e-12));

        std::vector<float> pf(p.begin(), p.end());
        const auto got32 = forward<float>(cfg, pf, to_float(x));
        for (std::size_t i = 0; i < expect.data.size(); ++i) CHECK(std::abs(got32.data[i] - expect.data[i]) <= 1e-5);
    }
}

TEST_CASE("exact fit gives zero loss and zero gradient") {
    std::mt19937_64 rng(2);
    const ModelConfig cfg{2, 2, 3, 2, 9};
    const auto p = tiny_params(cfg, rng);
    const auto x = random_tensor(rng, 2, 8, 8, 0.0, 1.0);
    const auto y = forward<double>(cfg, p, x);
    const auto lg = loss_and_gradient<double>(cfg, p, x, y);
    CHECK(lg.loss == 0.0);
    CHECK(std::all_of(lg.gradient.begin(), lg.gradient.end(), [](double g) { return g == 0.0; }));
}

TEST_CASE("constant offset on the target gives squared offset loss") {
    // Kill everything except the head bias: output is the bias everywhere.
    const ModelConfig cfg{1, 2, 3, 1, 0};
    std::vector<double> p(parameter_count(cfg), 0.0);
    const auto head = architecture(cfg).back();
    p[head.bias_offset()] = 3.0;
    TensorD x(1, 8, 8, 0.5);
    TensorD t(1, 8, 8, 3.0 - 0.25);
    CHECK(loss_and_gradient<double>(cfg, p, x, t).loss == doctest::Approx(0.0625).epsilon(1e-15));
}

TEST_CASE("backprop matches central differences on random tiny networks") {
    std::mt19937_64 rng(20240);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const ModelConfig cfg{1 + trial % 2, 2, 3, 1 + trial % 3, static_cast<std::uint64_t>(100 + trial)};
        auto p = tiny_params(cfg, rng);
        const auto x = random_tensor(rng, cfg.in_channels, 8, 8, 0.0, 1.0);
        const auto t = random_tensor(rng, 1, 8, 8, 0.0, 1.0);
        const auto g = loss_and_gradient<double>(cfg, p, x, t).gradient;
        const double h = 1e-5;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double keep = p[i];
            p[i] = keep + h;
            const double up = loss_and_gradient<double>(cfg, p, x, t).loss;
            p[i] = keep - h;
            const double dn = loss_and_gradient<double>(cfg, p, x, t).loss;
            p[i] = keep;
            const double fd = (up - dn) / (2 * h);
            const double rel = std::abs(fd - g[i]) / std::max({std::abs(fd), std::abs(g[i]), 1e-7});
            worst = std::max(worst, rel);
        }
    }
    MESSAGE("worst relative error " << worst);
    CHECK(worst < 1e-4);
}

TEST_CASE("float and double gradients agree") {
    std::mt19937_64 rng(4);
    const ModelConfig cfg{2, 3, 3, 3, 1};
    const auto p = tiny_params(cfg, rng);
    const auto x = random_tensor(rng, 3, 16, 16, 0.0, 1.0);
    const auto t = random_tensor(rng, 1, 16, 16, 0.0, 1.0);
    const auto g64 = loss_and_gradient<double>(cfg, p, x, t);
    std::vector<float> pf(p.begin(), p.end());
    const auto g32 = loss_and_gradient<float>(cfg, pf, to_float(x), to_float(t));
    CHECK(g32.loss == doctest::Approx(g64.loss).epsilon(1e-4));
    double scale = 0.0;
    for (double v : g64.gradient) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(g32.gradient[i] - g64.gradient[i]) <= 1e-4 * scale);
}

TEST_CASE("training with zero learning rate leaves weights alone") {
    std::mt19937_64 rng(6);
    const ModelConfig cfg{1, 2, 3, 1, 3};
    const auto w = init_weights(cfg);
    const Sample s{to_float(random_tensor(rng, 1, 8, 8, 0.0, 1.0)), to_float(random_tensor(rng, 1, 8, 8, 0.0, 1.0))};
    const auto r = train(w, {s}, TrainConfig{0.0, 5, 1, 0});
    CHECK(r.weights.params == w.params);
    REQUIRE(r.loss_history.size() == 5);
    for (double l : r.loss_history) CHECK(l == r.loss_history.front());
}

TEST_CASE("training is deterministic and rejects bad input") {
    std::mt19937_64 rng(8);
    const ModelConfig cfg{2, 2, 3, 2, 3};
    const auto w = init_weights(cfg);
    std::vector<Sample> data;
    for (int i = 0; i < 3; ++i)
        data.push_back({to_float(random_tensor(rng, 2, 8, 8, 0.0, 1.0)), to_float(random_tensor(rng, 1, 8, 8, 0.0, 1.0))});
    const TrainConfig tc{0.01, 4, 1, 0};
    const auto a = train(w, data, tc);
    const auto b = train(w, data, tc);
    CHECK(a.loss_history == b.loss_history);
    CHECK(a.weights.params == b.weights.params);
    CHECK_THROWS_AS(train(w, {}, tc), Error);
    CHECK_THROWS_AS(train(w, data, TrainConfig{0.01, 0, 1, 0}), Error);
}

TEST_CASE("divergence names the epoch") {
    std::mt19937_64 rng(9);
    const ModelConfig cfg{1, 2, 3, 1, 3};
    auto w = init_weights(cfg);
    const Sample s{to_float(random_tensor(rng, 1, 8, 8, 0.5, 1.0)), Tensor(1, 8, 8, 1e30f)};
    try {
        train(w, {s}, TrainConfig{1e10, 10, 1, 0});
        FAIL("expected divergence");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Divergence);
        CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    }
}

TEST_CASE("weights file round trip") {
    const auto w = init_weights(ModelConfig{2, 3, 3, 3, 42});
    const auto path = std::filesystem::temp_directory_path() / "globus_test_weights.glbw";
    write_weights(w, path);
    const auto r = read_weights(path);
    CHECK(r.config == w.config);
    CHECK(r.params == w.params);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 2);
    CHECK_THROWS_AS(read_weights(path), FormatError);
    std::filesystem::remove(path);
}

TEST_CASE("predict_city with zero weights is all zero") {
    const ModelConfig cfg{2, 2, 3, 2, 0};
    Weights w{cfg, std::vector<float>(parameter_count(cfg), 0.0f)};
    const GeoRef g{100, 200, 1};
    std::vector<Raster> ch{Raster(40, 20, g, kDefaultNodata, 0.7f), Raster(40, 20, g, kDefaultNodata, 0.2f)};
    const auto out = predict_city(w, ch, {0.0, 50.0}, 16);
    CHECK(out.width() == 40);
    CHECK(out.height() == 20);
    CHECK(out.georef() == g);
    for (float v : out.values()) CHECK(v == 0.0f);
}

TEST_CASE("predict_city equals per-tile forward") {
    std::mt19937_64 rng(12);
    const ModelConfig cfg{1, 2, 3, 1, 2};
    const auto w = init_weights(cfg);
    const GeoRef g{0, 0, 1};
    Raster ch(20, 12, g);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (float& v : ch.values()) v = u(rng);
    const NormalizationParams np{2.0, 12.0};
    const auto out = predict_city(w, {ch}, np, 8);
    const auto sp = split({ch}, 8);
    for (const auto& t : sp.tiles) {
        const auto y = forward(w, tile_tensor(t));
        for (int r = 0; r < t.valid_rows; ++r)
            for (int c = 0; c < t.valid_cols; ++c) {
                const float norm = y.data[static_cast<std::size_t>(r) * 8 + c];
                const float expect = std::max(0.0f, static_cast<float>(double(norm) * 10.0 + 2.0));
                CHECK(out.at(t.col_index * 8 + c, t.row_index * 8 + r) == expect);
            }
    }
}

TEST_CASE("baseline keeps footprint cells only") {
    const GeoRef g{0, 0, 1};
    Raster ndsm(4, 3, g);
    for (std::size_t i = 0; i < ndsm.size(); ++i) ndsm.values()[i] = static_cast<float>(i) - 3.0f;
    FootprintMask m{Raster(4, 3, g), std::vector<std::int64_t>(12, 0)};
    const auto empty = baseline_predict(ndsm, m);
    CHECK(std::all_of(empty.values().begin(), empty.values().end(), [](float v) { return v == 0.0f; }));
    for (std::size_t i = 0; i < 12; i += 2) m.raster.values()[i] = 1.0f;
    const auto b = baseline_predict(ndsm, m);
    for (std::size_t i = 0; i < 12; ++i) {
        const float expect = (i % 2 == 0) ? std::max(0.0f, ndsm.values()[i]) : 0.0f;
        CHECK(b.values()[i] == expect);
    }
    CHECK_THROWS_AS(baseline_predict(Raster(3, 3, g), m), Error);
}

TEST_CASE("timing of a full-size training step" * doctest::skip(true)) {
    const ModelConfig cfg{3, 8, 3, 3, 1};
    const auto w = init_weights(cfg);
    std::mt19937_64 rng(1);
    const auto x = to_float(random_tensor(rng, 3, 256, 256, 0.0, 1.0));
    const auto t = to_float(random_tensor(rng, 1, 256, 256, 0.0, 1.0));
    const auto t0 = std::chrono::steady_clock::now();
    const auto lg = loss_and_gradient(w, x, t);
    const auto t1 = std::chrono::steady_clock::now();
    MESSAGE("isa " << simd::to_string(simd::active_isa()) << " step "
                   << std::chrono::duration<double>(t1 - t0).count() << " s, loss " << lg.loss);
}
