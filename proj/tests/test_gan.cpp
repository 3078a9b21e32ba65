#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "itu/gan.hpp"
#include "itu/hash.hpp"
#include "test_support.hpp"

using namespace itu;
using namespace itu::gan;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    std::string path;
    explicit TempDir(const std::string& name) : path("/tmp/itu_gan_" + name) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string write_toy_idx(const std::string& name, std::size_t count, std::uint64_t seed) {
    ImageDataset ds;
    ds.count = count;
    ds.height = ds.width = 2;
    ds.pixels = test_support::toy_two_mode_images(count, seed);
    const std::string path = "/tmp/itu_gan_" + name;
    write_idx(ds, path);
    return path;
}

TrainConfig toy_config(const std::string& data_path) {
    TrainConfig c;
    c.data_path = data_path;
    c.arch = "toy4";
    c.latent_dim = 8;
    c.batch_size = 16;
    c.steps = 5;
    c.seed = 11;
    c.lr = 1e-3;
    return c;
}

Tensor draw_latents_like_train(Rng& rng, std::size_t n, std::size_t latent_dim) {
    std::vector<double> z(n * latent_dim);
    for (double& v : z) v = rng.normal();
    return Tensor::from({n, latent_dim}, std::move(z));
}

}  // namespace

TEST_CASE("config serialize/deserialize/hash round trip") {
    TrainConfig c;
    c.data_path = "/data/x.idx";
    c.transform = "T23";
    c.seed = 99;
    c.steps = 42;
    c.lr = 3e-4;
    c.saturating_g_loss = true;
    const TrainConfig back = TrainConfig::deserialize(c.serialize());
    CHECK(back.serialize() == c.serialize());
    CHECK(back.hash() == c.hash());
    CHECK(back.lr == c.lr);
    CHECK(back.saturating_g_loss);
    CHECK_THROWS_AS(TrainConfig::deserialize("bogus_key=1\n"), std::invalid_argument);
}

TEST_CASE("config validation") {
    TrainConfig c;
    c.data_path = "/tmp/whatever.idx";
    CHECK_NOTHROW(c.validate());
    TrainConfig f32 = c;
    f32.precision = "f32";
    CHECK_THROWS_WITH_AS(f32.validate(), doctest::Contains("64-bit"),
                         std::invalid_argument);
    TrainConfig arch = c;
    arch.arch = "resnet";
    CHECK_THROWS_AS(arch.validate(), std::invalid_argument);
    TrainConfig tr = c;
    tr.transform = "T99";
    CHECK_THROWS_AS(tr.validate(), std::invalid_argument);
}

TEST_CASE("losses at an indifferent discriminator") {
    // Zeroed parameters make D output sigmoid(0) = 1/2 for any input.
    Rng rng(1);
    Generator g = Generator::create("toy4", 8, rng);
    Discriminator d = Discriminator::create("toy4", rng);
    for (auto& p : d.params()) std::fill(p.mutable_data().begin(), p.mutable_data().end(), 0.0);
    const TransformUnit id = registry_get("identity");
    Tensor real = Tensor::zeros({4, 1, 2, 2});
    Tensor z = draw_latents_like_train(rng, 4, 8);
    CHECK(d_loss(d, g, id, real, z).item() ==
          doctest::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK(g_loss(d, g, id, z).item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    // Saturating form at D = 1/2: mean log(1 - 1/2) = -log 2.
    CHECK(g_loss(d, g, id, z, true).item() ==
          doctest::Approx(-std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("training writes checkpoint, metrics, montages and manifest") {
    const std::string data = write_toy_idx("files.idx", 64, 3);
    TempDir out("files_out");
    TrainConfig c = toy_config(data);
    c.out_dir = out.path;
    c.steps = 4;
    c.montage_interval = 2;
    c.checkpoint_interval = 2;
    const TrainResult r = train(c);
    CHECK_FALSE(r.halted_on_nonfinite);
    CHECK(r.metrics.size() == 4);
    for (const auto& row : r.metrics) {
        CHECK(row.d_loss > 0.0);
        CHECK(row.d_loss <= 2.0 * std::log(1.0 / kLossClampEps) + 1e-9);
        CHECK(std::isfinite(row.g_loss));
    }
    CHECK(fs::exists(out.path + "/checkpoint_2.itug"));
    CHECK(fs::exists(out.path + "/checkpoint_final.itug"));
    CHECK(fs::exists(out.path + "/samples_raw_2.pgm"));
    CHECK(fs::exists(out.path + "/samples_T_4.pgm"));
    CHECK(fs::exists(out.path + "/manifest.txt"));

    std::ifstream csv(out.path + "/metrics.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == metrics_csv_header());

    // The stored checkpoint is the in-memory result, bit for bit.
    const Checkpoint loaded = Checkpoint::load(out.path + "/checkpoint_final.itug");
    CHECK(loaded.step == 4);
    CHECK(loaded.config_text == r.checkpoint.config_text);
    CHECK(loaded.rng_state == r.checkpoint.rng_state);
    CHECK(loaded.g_params == r.checkpoint.g_params);
    CHECK(loaded.d_params == r.checkpoint.d_params);
    CHECK(loaded.g_m == r.checkpoint.g_m);
    CHECK(loaded.d_v == r.checkpoint.d_v);
}

TEST_CASE("zero-step run still produces a valid initial checkpoint") {
    const std::string data = write_toy_idx("zerostep.idx", 32, 4);
    TempDir out("zerostep_out");
    TrainConfig c = toy_config(data);
    c.out_dir = out.path;
    c.steps = 0;
    const TrainResult r = train(c);
    CHECK(r.metrics.empty());
    const Checkpoint ck = Checkpoint::load(out.path + "/checkpoint_final.itug");
    CHECK(ck.step == 0);
    CHECK(sample(ck, 2, 7, false).shape() == Shape{2, 1, 2, 2});
}

TEST_CASE("checkpoint corruption is detected") {
    const std::string data = write_toy_idx("corrupt.idx", 32, 5);
    TempDir out("corrupt_out");
    TrainConfig c = toy_config(data);
    c.out_dir = out.path;
    c.steps = 1;
    train(c);
    const std::string path = out.path + "/checkpoint_final.itug";
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(40);  // inside the stored config text
        f.put('~');
    }
    CHECK_THROWS_WITH_AS(Checkpoint::load(path), doctest::Contains("hash mismatch"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(Checkpoint::load("/dev/null"), doctest::Contains("corrupt"),
                         std::runtime_error);
}

TEST_CASE("sampling is deterministic and respects the transform") {
    const std::string data = write_toy_idx("sample.idx", 64, 6);
    TrainConfig c = toy_config(data);
    c.transform = "T1";
    c.steps = 3;
    const TrainResult r = train(c);
    const Checkpoint& ck = r.checkpoint;

    Tensor a = sample(ck, 5, 42, false);
    Tensor b = sample(ck, 5, 42, false);
    Tensor other = sample(ck, 5, 43, false);
    CHECK(a.data() == b.data());
    CHECK(a.data() != other.data());
    CHECK_FALSE(sample(ck, 0, 42, false).defined());

    // apply_T runs the run's own transform over the raw output.
    Tensor t = sample(ck, 5, 42, true);
    CHECK(t.data() == mirror_lastdim(a).data());

    // save -> load -> sample is bitwise identical to the in-memory sample.
    TempDir out("sample_out");
    const std::string path = out.path + "/ck.itug";
    ck.save(path);
    CHECK(sample(Checkpoint::load(path), 5, 42, false).data() == a.data());
}

TEST_CASE("identity transform reduces to a hand-coded vanilla GAN, bitwise") {
    const std::string data = write_toy_idx("vanilla.idx", 64, 7);
    TrainConfig c = toy_config(data);
    c.steps = 10;
    c.seed = 2718;
    const TrainResult lib = train(c);
    REQUIRE(lib.metrics.size() == 10);

    // Plain GAN with no transformation unit anywhere, written against the
    // tensor layer directly.
    ImageDataset ds = load_idx(data);
    Rng rng(c.seed);
    Generator g = Generator::create(c.arch, c.latent_dim, rng);
    Discriminator d = Discriminator::create(c.arch, rng);
    Adam opt_g(g.params(), {c.lr, c.beta1, c.beta2, c.adam_eps});
    Adam opt_d(d.params(), {c.lr, c.beta1, c.beta2, c.adam_eps});

    std::vector<std::size_t> order(ds.count);
    for (std::size_t i = 0; i < ds.count; ++i) order[i] = i;
    std::size_t pos = ds.count;
    auto next_batch = [&]() {
        if (pos + c.batch_size > ds.count) {
            rng.shuffle(order);
            pos = 0;
        }
        std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                     order.begin() +
                                         static_cast<std::ptrdiff_t>(pos + c.batch_size));
        pos += c.batch_size;
        return ds.batch_tensor(idx);
    };
    auto clog = [](const Tensor& t) {
        return log_op(clamp_op(t, kLossClampEps, 1.0 - kLossClampEps));
    };

    for (std::size_t step = 0; step < 10; ++step) {
        Tensor real = next_batch();
        Tensor z = draw_latents_like_train(rng, c.batch_size, c.latent_dim);
        Tensor d_real = d.forward(real);
        Tensor d_fake = d.forward(g.forward(z));
        Tensor dl = neg(add(mean_all(clog(d_real)),
                            mean_all(clog(add_scalar(neg(d_fake), 1.0)))));
        opt_d.zero_grad();
        opt_g.zero_grad();
        dl.backward();
        opt_d.step();

        Tensor z2 = draw_latents_like_train(rng, c.batch_size, c.latent_dim);
        Tensor gl = neg(mean_all(clog(d.forward(g.forward(z2)))));
        opt_d.zero_grad();
        opt_g.zero_grad();
        gl.backward();
        opt_g.step();

        CHECK(lib.metrics[step].d_loss == dl.item());
        CHECK(lib.metrics[step].g_loss == gl.item());
    }
}

TEST_CASE("training halts with a diagnostic instead of spreading non-finite values") {
    const std::string data = write_toy_idx("halt.idx", 32, 8);
    TrainConfig c = toy_config(data);
    c.steps = 50;
    c.lr = 1e300;  // guaranteed overflow within a few parameter updates
    const TrainResult r = train(c);
    CHECK(r.halted_on_nonfinite);
    CHECK(r.diagnostic.find("halted at step") != std::string::npos);
    // The returned checkpoint is the last finite state.
    for (const auto& [shape, data_vec] : r.checkpoint.g_params)
        for (double v : data_vec) CHECK(std::isfinite(v));
}

TEST_CASE("short mirror-unit training run keeps losses sane") {
    const std::string data = write_toy_idx("mirror.idx", 128, 9);
    TrainConfig c = toy_config(data);
    c.transform = "T1";
    c.steps = 60;
    const TrainResult r = train(c);
    CHECK_FALSE(r.halted_on_nonfinite);
    CHECK(r.metrics.size() == 60);
    for (const auto& row : r.metrics) CHECK(std::isfinite(row.d_loss));
}

TEST_CASE("dataset/arch mismatches are rejected") {
    const std::string data = write_toy_idx("mismatch.idx", 32, 10);
    TrainConfig c = toy_config(data);
    c.arch = "small28";  // 28x28 arch on a 2x2 dataset
    c.latent_dim = 8;
    CHECK_THROWS_WITH_AS(train(c), doctest::Contains("expects"), std::invalid_argument);
    TrainConfig big = toy_config(data);
    big.batch_size = 64;
    big.subset_n = 8;  // subset smaller than one batch
    CHECK_THROWS_AS(train(big), std::invalid_argument);
}
