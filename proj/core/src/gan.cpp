#include "itu/gan.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "itu/hash.hpp"

namespace itu::gan {

namespace fs = std::filesystem;

// ---- config ----

std::string TrainConfig::serialize() const {
    std::ostringstream os;
    os.precision(17);
    // Sorted keys, one per line; this text is hashed and echoed verbatim.
    os << "adam_eps=" << adam_eps << "\n";
    os << "arch=" << arch << "\n";
    os << "batch_size=" << batch_size << "\n";
    os << "beta1=" << beta1 << "\n";
    os << "beta2=" << beta2 << "\n";
    os << "checkpoint_interval=" << checkpoint_interval << "\n";
    os << "d_steps_per_g=" << d_steps_per_g << "\n";
    os << "data_path=" << data_path << "\n";
    os << "latent_dim=" << latent_dim << "\n";
    os << "lr=" << lr << "\n";
    os << "montage_interval=" << montage_interval << "\n";
    os << "out_dir=" << out_dir << "\n";
    os << "precision=" << precision << "\n";
    os << "saturating_g_loss=" << (saturating_g_loss ? 1 : 0) << "\n";
    os << "seed=" << seed << "\n";
    os << "steps=" << steps << "\n";
    os << "subset_n=" << subset_n << "\n";
    os << "transform=" << transform << "\n";
    return os.str();
}

TrainConfig TrainConfig::deserialize(const std::string& text) {
    TrainConfig c;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string k = line.substr(0, eq), v = line.substr(eq + 1);
        if (k == "adam_eps") c.adam_eps = std::stod(v);
        else if (k == "arch") c.arch = v;
        else if (k == "batch_size") c.batch_size = std::stoul(v);
        else if (k == "beta1") c.beta1 = std::stod(v);
        else if (k == "beta2") c.beta2 = std::stod(v);
        else if (k == "checkpoint_interval") c.checkpoint_interval = std::stoul(v);
        else if (k == "d_steps_per_g") c.d_steps_per_g = std::stoul(v);
        else if (k == "data_path") c.data_path = v;
        else if (k == "latent_dim") c.latent_dim = std::stoul(v);
        else if (k == "lr") c.lr = std::stod(v);
        else if (k == "montage_interval") c.montage_interval = std::stoul(v);
        else if (k == "out_dir") c.out_dir = v;
        else if (k == "precision") c.precision = v;
        else if (k == "saturating_g_loss") c.saturating_g_loss = v == "1";
        else if (k == "seed") c.seed = std::stoull(v);
        else if (k == "steps") c.steps = std::stoul(v);
        else if (k == "subset_n") c.subset_n = std::stoul(v);
        else if (k == "transform") c.transform = v;
        else throw std::invalid_argument("TrainConfig: unknown key '" + k + "'");
    }
    return c;
}

std::map<std::string, std::string> TrainConfig::echo() const {
    std::map<std::string, std::string> m;
    std::istringstream is(serialize());
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) m["config." + line.substr(0, eq)] = line.substr(eq + 1);
    }
    return m;
}

std::uint64_t TrainConfig::hash() const { return fnv1a64(serialize()); }

void TrainConfig::validate() const {
    if (precision != "f64")
        throw std::invalid_argument(
            "TrainConfig: precision '" + precision +
            "' unsupported; this build runs the 64-bit engine only");
    if (arch != "dcgan28" && arch != "small28" && arch != "toy4")
        throw std::invalid_argument("TrainConfig: unknown arch '" + arch + "'");
    if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be > 0");
    if (latent_dim == 0) throw std::invalid_argument("TrainConfig: latent_dim must be > 0");
    if (d_steps_per_g == 0)
        throw std::invalid_argument("TrainConfig: d_steps_per_g must be > 0");
    if (!registry_has(transform))
        registry_get(transform);  // throws with the registry listing
}

// ---- networks ----

namespace {

std::size_t arch_side(const std::string& arch) { return arch == "toy4" ? 2 : 28; }

}  // namespace

Generator Generator::create(const std::string& arch, std::size_t latent_dim, Rng& rng) {
    Generator g;
    g.arch = arch;
    g.latent_dim = latent_dim;
    g.side = arch_side(arch);
    if (arch == "toy4") {
        g.fc = Dense(latent_dim, 32, rng);
        g.fc2 = Dense(32, 4, rng);
    } else if (arch == "small28") {
        g.ch0 = 16;
        g.fc = Dense(latent_dim, 7 * 7 * g.ch0, rng);
        g.up1 = ConvTranspose(16, 8, 4, 2, 1, rng);
        g.up2 = ConvTranspose(8, 1, 4, 2, 1, rng);
    } else if (arch == "dcgan28") {
        g.ch0 = 64;
        g.fc = Dense(latent_dim, 7 * 7 * g.ch0, rng);
        g.up1 = ConvTranspose(64, 32, 4, 2, 1, rng);
        g.up2 = ConvTranspose(32, 1, 4, 2, 1, rng);
    } else {
        throw std::invalid_argument("Generator: unknown arch '" + arch + "'");
    }
    return g;
}

Tensor Generator::forward(const Tensor& z) const {
    if (z.shape().size() != 2 || z.shape()[1] != latent_dim)
        throw std::invalid_argument("Generator::forward: want [N," +
                                    std::to_string(latent_dim) + "], got " +
                                    shape_str(z.shape()));
    const std::size_t n = z.shape()[0];
    if (arch == "toy4") {
        Tensor h = leaky_relu(fc.forward(z), 0.2);
        return reshape(tanh_op(fc2.forward(h)), {n, 1, 2, 2});
    }
    Tensor h = leaky_relu(fc.forward(z), 0.2);
    h = reshape(h, {n, ch0, 7, 7});
    h = leaky_relu(up1.forward(h, 14, 14), 0.2);
    return tanh_op(up2.forward(h, 28, 28));
}

std::vector<Tensor> Generator::params() {
    if (arch == "toy4") return {fc.weight, fc.bias, fc2.weight, fc2.bias};
    return {fc.weight, fc.bias, up1.weight, up1.bias, up2.weight, up2.bias};
}

Discriminator Discriminator::create(const std::string& arch, Rng& rng) {
    Discriminator d;
    d.arch = arch;
    d.side = arch_side(arch);
    if (arch == "toy4") {
        d.fc = Dense(4, 32, rng);
        d.fc2 = Dense(32, 1, rng);
    } else if (arch == "small28") {
        d.c1 = Conv(1, 8, 4, 2, 1, rng);
        d.c2 = Conv(8, 16, 4, 2, 1, rng);
        d.fc = Dense(16 * 7 * 7, 1, rng);
    } else if (arch == "dcgan28") {
        d.c1 = Conv(1, 32, 4, 2, 1, rng);
        d.c2 = Conv(32, 64, 4, 2, 1, rng);
        d.fc = Dense(64 * 7 * 7, 1, rng);
    } else {
        throw std::invalid_argument("Discriminator: unknown arch '" + arch + "'");
    }
    return d;
}

Tensor Discriminator::forward(const Tensor& x) const {
    if (x.shape().size() != 4 || x.shape()[1] != 1 || x.shape()[2] != side ||
        x.shape()[3] != side)
        throw std::invalid_argument("Discriminator::forward: want [N,1," +
                                    std::to_string(side) + "," + std::to_string(side) +
                                    "], got " + shape_str(x.shape()));
    const std::size_t n = x.shape()[0];
    if (arch == "toy4") {
        Tensor h = leaky_relu(fc.forward(reshape(x, {n, 4})), 0.2);
        return sigmoid_op(fc2.forward(h));
    }
    Tensor h = leaky_relu(c1.forward(x), 0.2);
    h = leaky_relu(c2.forward(h), 0.2);
    h = reshape(h, {n, h.size() / n});
    return sigmoid_op(fc.forward(h));
}

std::vector<Tensor> Discriminator::params() {
    if (arch == "toy4") return {fc.weight, fc.bias, fc2.weight, fc2.bias};
    return {c1.weight, c1.bias, c2.weight, c2.bias, fc.weight, fc.bias};
}

// ---- losses ----

namespace {

Tensor clamped_log(const Tensor& t) {
    return log_op(clamp_op(t, kLossClampEps, 1.0 - kLossClampEps));
}

Tensor one_minus(const Tensor& t) { return add_scalar(neg(t), 1.0); }

}  // namespace

Tensor d_loss(const Discriminator& d, const Generator& g, const TransformUnit& t,
              const Tensor& real_batch, const Tensor& z_batch) {
    Tensor d_real = d.forward(real_batch);
    Tensor d_fake = d.forward(t.apply(g.forward(z_batch)));
    Tensor loss = neg(add(mean_all(clamped_log(d_real)),
                          mean_all(clamped_log(one_minus(d_fake)))));
    check_finite(loss, "d_loss");
    return loss;
}

Tensor g_loss(const Discriminator& d, const Generator& g, const TransformUnit& t,
              const Tensor& z_batch, bool saturating) {
    Tensor d_fake = d.forward(t.apply(g.forward(z_batch)));
    Tensor loss = saturating ? mean_all(clamped_log(one_minus(d_fake)))
                             : neg(mean_all(clamped_log(d_fake)));
    check_finite(loss, "g_loss");
    return loss;
}

// ---- checkpoint ----

namespace {

constexpr char kMagic[4] = {'I', 'T', 'U', 'G'};

void put_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_string(std::ostream& os, const std::string& s) {
    put_u64(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
void put_doubles(std::ostream& os, const std::vector<double>& v) {
    put_u64(os, v.size());
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}
void put_params(std::ostream& os,
                const std::vector<std::pair<Shape, std::vector<double>>>& params) {
    put_u32(os, static_cast<std::uint32_t>(params.size()));
    for (const auto& [shape, data] : params) {
        put_u32(os, static_cast<std::uint32_t>(shape.size()));
        for (std::size_t d : shape) put_u64(os, d);
        put_doubles(os, data);
    }
}

struct Reader {
    std::ifstream in;
    std::string path;
    explicit Reader(const std::string& p) : in(p, std::ios::binary), path(p) {
        if (!in) throw std::runtime_error("checkpoint: cannot open " + p);
    }
    [[noreturn]] void corrupt(const std::string& what) {
        throw std::runtime_error("checkpoint " + path + ": corrupt (" + what + ")");
    }
    std::uint32_t u32() {
        std::uint32_t v;
        if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) corrupt("short read");
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) corrupt("short read");
        return v;
    }
    std::string str() {
        const std::uint64_t n = u64();
        if (n > (1ULL << 30)) corrupt("oversized string");
        std::string s(n, '\0');
        if (!in.read(s.data(), static_cast<std::streamsize>(n))) corrupt("short string");
        return s;
    }
    std::vector<double> doubles() {
        const std::uint64_t n = u64();
        if (n > (1ULL << 30)) corrupt("oversized block");
        std::vector<double> v(n);
        if (!in.read(reinterpret_cast<char*>(v.data()),
                     static_cast<std::streamsize>(n * sizeof(double))))
            corrupt("short block");
        return v;
    }
    std::vector<std::pair<Shape, std::vector<double>>> params() {
        std::vector<std::pair<Shape, std::vector<double>>> out(u32());
        for (auto& [shape, data] : out) {
            shape.resize(u32());
            for (auto& d : shape) d = u64();
            data = doubles();
            if (shape_numel(shape) != data.size()) corrupt("shape/data mismatch");
        }
        return out;
    }
};

}  // namespace

void Checkpoint::save(const std::string& path) const {
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
    out.write(kMagic, 4);
    put_u32(out, version);
    put_u64(out, config_hash);
    put_string(out, config_text);
    put_u64(out, step);
    put_string(out, rng_state);
    put_params(out, g_params);
    put_params(out, d_params);
    put_u64(out, g_adam_t);
    put_u32(out, static_cast<std::uint32_t>(g_m.size()));
    for (std::size_t i = 0; i < g_m.size(); ++i) {
        put_doubles(out, g_m[i]);
        put_doubles(out, g_v[i]);
    }
    put_u64(out, d_adam_t);
    put_u32(out, static_cast<std::uint32_t>(d_m.size()));
    for (std::size_t i = 0; i < d_m.size(); ++i) {
        put_doubles(out, d_m[i]);
        put_doubles(out, d_v[i]);
    }
    if (!out) throw std::runtime_error("checkpoint: write failed " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    Reader r(path);
    char magic[4];
    if (!r.in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        r.corrupt("bad magic, want ITUG");
    Checkpoint c;
    c.version = r.u32();
    if (c.version != 1) r.corrupt("unsupported version " + std::to_string(c.version));
    c.config_hash = r.u64();
    c.config_text = r.str();
    if (fnv1a64(c.config_text) != c.config_hash)
        r.corrupt("config hash mismatch, stored " + hex64(c.config_hash) +
                  " computed " + hex64(fnv1a64(c.config_text)));
    c.step = r.u64();
    c.rng_state = r.str();
    c.g_params = r.params();
    c.d_params = r.params();
    c.g_adam_t = r.u64();
    c.g_m.resize(r.u32());
    c.g_v.resize(c.g_m.size());
    for (std::size_t i = 0; i < c.g_m.size(); ++i) {
        c.g_m[i] = r.doubles();
        c.g_v[i] = r.doubles();
    }
    c.d_adam_t = r.u64();
    c.d_m.resize(r.u32());
    c.d_v.resize(c.d_m.size());
    for (std::size_t i = 0; i < c.d_m.size(); ++i) {
        c.d_m[i] = r.doubles();
        c.d_v[i] = r.doubles();
    }
    return c;
}

// ---- training ----

namespace {

Tensor draw_latents(Rng& rng, std::size_t n, std::size_t latent_dim) {
    std::vector<double> z(n * latent_dim);
    for (double& v : z) v = rng.normal();
    return Tensor::from({n, latent_dim}, std::move(z));
}

Checkpoint snapshot(const TrainConfig& cfg, std::uint64_t step, const Rng& rng,
                    Generator& g, Discriminator& d, Adam& opt_g, Adam& opt_d) {
    Checkpoint c;
    c.config_text = cfg.serialize();
    c.config_hash = fnv1a64(c.config_text);
    c.step = step;
    c.rng_state = rng.state();
    for (auto& p : g.params()) c.g_params.emplace_back(p.shape(), p.data());
    for (auto& p : d.params()) c.d_params.emplace_back(p.shape(), p.data());
    c.g_adam_t = opt_g.step_count();
    c.g_m = opt_g.m();
    c.g_v = opt_g.v();
    c.d_adam_t = opt_d.step_count();
    c.d_m = opt_d.m();
    c.d_v = opt_d.v();
    return c;
}

void load_params(std::vector<Tensor> params,
                 const std::vector<std::pair<Shape, std::vector<double>>>& stored,
                 const std::string& who) {
    if (params.size() != stored.size())
        throw std::runtime_error("checkpoint: " + who + " parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].shape() != stored[i].first)
            throw std::runtime_error("checkpoint: " + who + " parameter shape mismatch");
        params[i].mutable_data() = stored[i].second;
    }
}

}  // namespace

std::string metrics_csv_header() { return "step,d_loss,g_loss,d_real_mean,d_fake_mean"; }

TrainResult train(const TrainConfig& config) {
    config.validate();
    const TransformUnit unit = registry_get(config.transform);

    ImageDataset ds = load_idx(config.data_path);
    if (config.subset_n > 0) ds = subset(ds, config.subset_n, config.seed);
    if (ds.count < config.batch_size)
        throw std::invalid_argument("train: dataset has " + std::to_string(ds.count) +
                                    " images, batch size is " +
                                    std::to_string(config.batch_size));
    const std::size_t side = config.arch == "toy4" ? 2 : 28;
    if (ds.height != side || ds.width != side)
        throw std::invalid_argument("train: arch " + config.arch + " expects " +
                                    std::to_string(side) + "x" + std::to_string(side) +
                                    " images, dataset is " + std::to_string(ds.height) +
                                    "x" + std::to_string(ds.width));

    Rng rng(config.seed);
    Generator g = Generator::create(config.arch, config.latent_dim, rng);
    Discriminator d = Discriminator::create(config.arch, rng);
    Adam opt_g(g.params(), {config.lr, config.beta1, config.beta2, config.adam_eps});
    Adam opt_d(d.params(), {config.lr, config.beta1, config.beta2, config.adam_eps});

    const double d_loss_upper = 2.0 * std::log(1.0 / kLossClampEps) + 1e-9;

    TrainResult result;
    const bool writing = !config.out_dir.empty();
    std::ofstream metrics_csv;
    std::string metrics_path;
    if (writing) {
        fs::create_directories(config.out_dir);
        metrics_path = (fs::path(config.out_dir) / "metrics.csv").string();
        metrics_csv.open(metrics_path);
        metrics_csv.precision(17);
        metrics_csv << metrics_csv_header() << "\n";
    }

    std::vector<std::size_t> order(ds.count);
    for (std::size_t i = 0; i < ds.count; ++i) order[i] = i;
    std::size_t pos = ds.count;  // force shuffle before the first batch
    auto next_batch = [&]() {
        if (pos + config.batch_size > ds.count) {
            rng.shuffle(order);
            pos = 0;
        }
        std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                     order.begin() +
                                         static_cast<std::ptrdiff_t>(pos + config.batch_size));
        pos += config.batch_size;
        return ds.batch_tensor(idx);
    };

    Checkpoint last_good = snapshot(config, 0, rng, g, d, opt_g, opt_d);
    auto write_checkpoint = [&](const Checkpoint& c, const std::string& name) {
        if (!writing) return;
        const std::string p = (fs::path(config.out_dir) / name).string();
        c.save(p);
        result.output_files.push_back(p);
    };
    auto write_montages = [&](std::uint64_t step_no) {
        if (!writing) return;
        const std::size_t n = std::min<std::size_t>(config.batch_size, 16);
        Tensor z = draw_latents(rng, n, config.latent_dim);
        Tensor raw = g.forward(z);
        const std::string tag = std::to_string(step_no);
        const std::string raw_path =
            (fs::path(config.out_dir) / ("samples_raw_" + tag + ".pgm")).string();
        write_montage(raw, 4, raw_path);
        result.output_files.push_back(raw_path);
        const std::string t_path =
            (fs::path(config.out_dir) / ("samples_T_" + tag + ".pgm")).string();
        write_montage(unit.apply(raw), 4, t_path);
        result.output_files.push_back(t_path);
    };

    for (std::size_t step = 1; step <= config.steps; ++step) {
        double d_loss_val = 0.0, d_real_mean = 0.0, d_fake_mean = 0.0;
        try {
            for (std::size_t k = 0; k < config.d_steps_per_g; ++k) {
                Tensor real = next_batch();
                Tensor z = draw_latents(rng, config.batch_size, config.latent_dim);
                Tensor d_real = d.forward(real);
                Tensor d_fake = d.forward(unit.apply(g.forward(z)));
                Tensor loss = neg(add(
                    mean_all(log_op(clamp_op(d_real, kLossClampEps, 1.0 - kLossClampEps))),
                    mean_all(log_op(clamp_op(add_scalar(neg(d_fake), 1.0), kLossClampEps,
                                             1.0 - kLossClampEps)))));
                check_finite(loss, "train: d_loss");
                d_loss_val = loss.item();
                if (!(d_loss_val > 0.0 && d_loss_val <= d_loss_upper))
                    throw std::runtime_error("train: d_loss " + std::to_string(d_loss_val) +
                                             " out of bounds");
                d_real_mean = mean_all(d_real).item();
                d_fake_mean = mean_all(d_fake).item();
                opt_d.zero_grad();
                opt_g.zero_grad();
                loss.backward();
                opt_d.step();
            }
            Tensor z = draw_latents(rng, config.batch_size, config.latent_dim);
            Tensor loss_g = g_loss(d, g, unit, z, config.saturating_g_loss);
            const double g_loss_val = loss_g.item();
            opt_d.zero_grad();
            opt_g.zero_grad();
            loss_g.backward();
            opt_g.step();

            for (auto& p : g.params()) check_finite(p, "train: generator parameters");
            for (auto& p : d.params()) check_finite(p, "train: discriminator parameters");

            result.metrics.push_back({step, d_loss_val, g_loss_val, d_real_mean, d_fake_mean});
            if (writing)
                metrics_csv << step << "," << d_loss_val << "," << g_loss_val << ","
                            << d_real_mean << "," << d_fake_mean << "\n";
            last_good = snapshot(config, step, rng, g, d, opt_g, opt_d);
        } catch (const std::runtime_error& e) {
            result.halted_on_nonfinite = true;
            result.diagnostic = "halted at step " + std::to_string(step) + ": " + e.what();
            break;
        } catch (const std::domain_error& e) {
            // NaN reaching log_op (clamp passes NaN through) is the same
            // non-finite condition as a failed check_finite.
            result.halted_on_nonfinite = true;
            result.diagnostic = "halted at step " + std::to_string(step) + ": " + e.what();
            break;
        }
        if (config.checkpoint_interval > 0 && step % config.checkpoint_interval == 0)
            write_checkpoint(last_good, "checkpoint_" + std::to_string(step) + ".itug");
        if (config.montage_interval > 0 && step % config.montage_interval == 0)
            write_montages(step);
    }

    result.checkpoint = last_good;
    write_checkpoint(last_good, "checkpoint_final.itug");
    if (writing) {
        write_montages(last_good.step);
        metrics_csv.close();
        result.output_files.push_back(metrics_path);
        const std::string manifest =
            (fs::path(config.out_dir) / "manifest.txt").string();
        run_manifest(config.echo(), result.output_files, manifest);
    }
    return result;
}

Tensor sample(const Checkpoint& ckpt, std::size_t n, std::uint64_t seed, bool apply_T) {
    if (ckpt.version != 1)
        throw std::runtime_error("sample: unsupported checkpoint version " +
                                 std::to_string(ckpt.version) + " (hash " +
                                 hex64(ckpt.config_hash) + ")");
    if (n == 0) return Tensor();
    const TrainConfig cfg = TrainConfig::deserialize(ckpt.config_text);
    Rng init_rng(0);  // placeholder weights, overwritten below
    Generator g = Generator::create(cfg.arch, cfg.latent_dim, init_rng);
    load_params(g.params(), ckpt.g_params, "generator");
    Rng rng(seed);
    Tensor out = g.forward(draw_latents(rng, n, cfg.latent_dim));
    if (apply_T) out = registry_get(cfg.transform).apply(out);
    return out;
}

}  // namespace itu::gan
