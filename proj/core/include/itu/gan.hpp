#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "itu/data_io.hpp"
#include "itu/nn.hpp"
#include "itu/rng.hpp"
#include "itu/tensor.hpp"
#include "itu/transforms.hpp"

namespace itu::gan {

inline constexpr double kLossClampEps = 1e-7;

// Full declarative description of a training run. Serializes to sorted
// key=value text; the FNV hash of that text identifies the run.
struct TrainConfig {
    std::string data_path;
    std::size_t subset_n = 0;  // 0 = full dataset
    std::string transform = "identity";
    std::uint64_t seed = 0;
    std::size_t batch_size = 64;
    std::size_t steps = 0;
    std::size_t latent_dim = 64;
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t d_steps_per_g = 1;
    std::string precision = "f64";  // engine is 64-bit; "f32" is rejected
    std::size_t checkpoint_interval = 0;  // 0 = final only
    std::size_t montage_interval = 0;     // 0 = final only
    std::string out_dir;                  // empty = no files written
    std::string arch = "dcgan28";         // dcgan28 | small28 | toy4
    bool saturating_g_loss = false;       // literal minimax form when true

    std::string serialize() const;
    static TrainConfig deserialize(const std::string& text);
    std::map<std::string, std::string> echo() const;
    std::uint64_t hash() const;
    void validate() const;
};

// DCGAN-shaped generator: dense projection, reshape, two stride-2 transposed
// convolutions, tanh. The toy arch replaces the conv stack with two dense
// layers for 2x2 images.
struct Generator {
    std::string arch;
    std::size_t latent_dim = 0, side = 0, ch0 = 0;
    Dense fc, fc2;
    ConvTranspose up1, up2;

    static Generator create(const std::string& arch, std::size_t latent_dim, Rng& rng);
    Tensor forward(const Tensor& z) const;  // [N,latent] -> [N,1,side,side]
    std::vector<Tensor> params();
};

struct Discriminator {
    std::string arch;
    std::size_t side = 0;
    Conv c1, c2;
    Dense fc, fc2;

    static Discriminator create(const std::string& arch, Rng& rng);
    Tensor forward(const Tensor& x) const;  // [N,1,side,side] -> [N,1] in (0,1)
    std::vector<Tensor> params();
};

// -( mean log D(x) + mean log(1 - D(T(G(z)))) ), clamped before logs.
Tensor d_loss(const Discriminator& d, const Generator& g, const TransformUnit& t,
              const Tensor& real_batch, const Tensor& z_batch);

// Non-saturating -mean log D(T(G(z))); saturating mean log(1 - D(T(G(z)))).
Tensor g_loss(const Discriminator& d, const Generator& g, const TransformUnit& t,
              const Tensor& z_batch, bool saturating = false);

// Versioned binary container ("ITUG") for both networks, optimizer state,
// step count and RNG state. Round-trips bit-exactly.
struct Checkpoint {
    std::uint32_t version = 1;
    std::uint64_t config_hash = 0;
    std::string config_text;
    std::uint64_t step = 0;
    std::string rng_state;
    std::vector<std::pair<Shape, std::vector<double>>> g_params, d_params;
    std::uint64_t g_adam_t = 0, d_adam_t = 0;
    std::vector<std::vector<double>> g_m, g_v, d_m, d_v;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
};

struct MetricsRow {
    std::size_t step;
    double d_loss, g_loss, d_real_mean, d_fake_mean;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<MetricsRow> metrics;
    bool halted_on_nonfinite = false;
    std::string diagnostic;
    std::vector<std::string> output_files;
};

TrainResult train(const TrainConfig& config);

// n generated images from a checkpoint, deterministic per seed. apply_T runs
// the run's transform over the raw generator output. n == 0 yields an
// undefined tensor.
Tensor sample(const Checkpoint& ckpt, std::size_t n, std::uint64_t seed, bool apply_T);

std::string metrics_csv_header();

}  // namespace itu::gan
