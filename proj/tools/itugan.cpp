// itugan: one entry point for training runs, the transformation survey, the
// blur pipeline, sharpness statistics and the numerical theory checks.
//
// Exit codes: 0 success, 1 run/check failure, 2 usage error.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "itu/data_io.hpp"
#include "itu/gan.hpp"
#include "itu/hash.hpp"
#include "itu/metrics.hpp"
#include "itu/theory_checks.hpp"
#include "itu/transforms.hpp"

namespace fs = std::filesystem;
using namespace itu;

namespace {

void echo_config(const gan::TrainConfig& cfg) {
    for (const auto& [k, v] : cfg.echo()) std::cout << k << "=" << v << "\n";
}

Kernel3x3 resolve_kernel(const std::string& spec) {
    if (spec.rfind("file:", 0) == 0) return Kernel3x3::from_file(spec.substr(5));
    return Kernel3x3::builtin(spec);
}

// Blur every image of a dataset through replicate extension + 3x3 kernel.
ImageDataset blur_dataset(const ImageDataset& ds, const Kernel3x3& k) {
    const TransformUnit unit = make_blur_unit(k);
    ImageDataset out = ds;
    out.pixels.clear();
    out.pixels.reserve(ds.pixels.size());
    const std::size_t chunk = 256;
    for (std::size_t start = 0; start < ds.count; start += chunk) {
        const std::size_t n = std::min(chunk, ds.count - start);
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = start + i;
        const Tensor blurred = unit.apply(ds.batch_tensor(idx));
        out.pixels.insert(out.pixels.end(), blurred.data().begin(), blurred.data().end());
    }
    return out;
}

int cmd_train(const gan::TrainConfig& cfg) {
    cfg.validate();
    echo_config(cfg);
    const gan::TrainResult r = gan::train(cfg);
    if (r.halted_on_nonfinite) {
        std::cerr << "error: " << r.diagnostic << "\n";
        return 1;
    }
    if (!r.metrics.empty()) {
        const auto& last = r.metrics.back();
        std::cout << "final step=" << last.step << " d_loss=" << last.d_loss
                  << " g_loss=" << last.g_loss << "\n";
    }
    if (!cfg.out_dir.empty()) std::cout << "outputs in " << cfg.out_dir << "\n";
    return 0;
}

int cmd_survey(gan::TrainConfig base, const std::vector<std::string>& only,
               const std::string& out_dir) {
    const std::vector<std::string> all = {"T1",  "T21", "T22", "T23", "T31",
                                          "T32", "T4",  "T51", "T52"};
    std::vector<std::string> names = only.empty() ? all : only;
    for (const auto& n : names) registry_get(n);  // fail early on typos

    std::ostringstream csv;
    csv << "transform,injective,surjective,differentiable,continuous,"
           "completed,final_d_loss,final_g_loss,note\n";
    const char* fmt = "%-6s  %-4s %-4s %-4s %-4s  %-9s  %12s %12s  %s\n";
    std::printf(fmt, "T", "inj", "surj", "diff", "cont", "completed", "d_loss",
                "g_loss", "note");
    for (const auto& name : names) {
        const TransformUnit unit = registry_get(name);
        gan::TrainConfig cfg = base;
        cfg.transform = name;
        if (!out_dir.empty()) cfg.out_dir = (fs::path(out_dir) / name).string();
        bool completed = false;
        double dl = std::nan(""), gl = std::nan("");
        std::string note;
        try {
            const gan::TrainResult r = gan::train(cfg);
            completed = !r.halted_on_nonfinite;
            if (!completed) note = r.diagnostic;
            if (!r.metrics.empty()) {
                dl = r.metrics.back().d_loss;
                gl = r.metrics.back().g_loss;
            }
        } catch (const std::exception& e) {
            note = e.what();
        }
        auto yn = [](bool b) { return b ? "yes" : "no"; };
        std::printf(fmt, name.c_str(), yn(unit.injective), yn(unit.surjective),
                    yn(unit.differentiable), yn(unit.continuous), yn(completed),
                    std::to_string(dl).c_str(), std::to_string(gl).c_str(), note.c_str());
        csv << name << "," << unit.injective << "," << unit.surjective << ","
            << unit.differentiable << "," << unit.continuous << "," << completed << ","
            << dl << "," << gl << "," << note << "\n";
    }
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream((fs::path(out_dir) / "survey.csv").string()) << csv.str();
        std::cout << "survey table written to " << out_dir << "/survey.csv\n";
    }
    return 0;
}

int cmd_blur(const std::string& data, const std::string& kernel_spec,
             const std::string& out_dir, std::size_t subset_n, std::uint64_t seed) {
    const Kernel3x3 kernel = resolve_kernel(kernel_spec);
    ImageDataset ds = load_idx(data);
    if (subset_n > 0) ds = subset(ds, subset_n, seed);
    const ImageDataset blurred = blur_dataset(ds, kernel);

    fs::create_directories(out_dir);
    const std::string idx_path = (fs::path(out_dir) / "blurred.idx").string();
    write_idx(blurred, idx_path);
    const std::size_t montage_n = std::min<std::size_t>(ds.count, 16);
    std::vector<std::size_t> idx(montage_n);
    for (std::size_t i = 0; i < montage_n; ++i) idx[i] = i;
    const std::string before = (fs::path(out_dir) / "before.pgm").string();
    const std::string after = (fs::path(out_dir) / "after.pgm").string();
    write_montage(ds.batch_tensor(idx), 4, before);
    write_montage(blurred.batch_tensor(idx), 4, after);

    std::map<std::string, std::string> echo = {{"config.data", data},
                                               {"config.kernel", kernel.id},
                                               {"config.subset_n", std::to_string(subset_n)},
                                               {"config.seed", std::to_string(seed)}};
    run_manifest(echo, {idx_path, before, after},
                 (fs::path(out_dir) / "manifest.txt").string());
    std::cout << "hash.blurred.idx=" << hex64(fnv1a64_file(idx_path)) << "\n";
    return 0;
}

int cmd_sharpness(const std::string& data, std::size_t n, std::uint64_t seed,
                  const std::string& out_dir,
                  const std::map<std::string, std::string>& checkpoints) {
    const ImageDataset ds = load_idx(data);
    std::vector<metrics::SharpnessReport> reports;

    auto add_stack = [&](const std::string& group, const std::vector<double>& stack,
                         std::size_t count) {
        reports.push_back(metrics::summarize(group, stack, count, ds.height, n, seed));
    };
    add_stack("original", ds.pixels, ds.count);
    add_stack("blurred", blur_dataset(ds, Kernel3x3::builtin("K_blur")).pixels, ds.count);

    // Model-sample groups; skipped with a notice when no checkpoint is given.
    for (const auto& [group, path] : checkpoints) {
        metrics::SharpnessReport rep;
        rep.group = group;
        if (path.empty()) {
            rep.skipped = true;
            rep.skip_reason = "no checkpoint supplied";
        } else {
            try {
                const gan::Checkpoint ck = gan::Checkpoint::load(path);
                const Tensor samples = gan::sample(ck, n, seed, true);
                const std::size_t side = samples.shape().back();
                rep = metrics::summarize(group, samples.data(), n, side, n, seed);
            } catch (const std::exception& e) {
                rep.skipped = true;
                rep.skip_reason = e.what();
            }
        }
        reports.push_back(rep);
    }

    std::ostringstream summary_csv, samples_csv, boxplot;
    summary_csv << metrics::summary_csv_header() << "\n";
    samples_csv << "group,sample_index,chi_s\n";
    samples_csv.precision(12);
    boxplot.precision(12);
    for (const auto& r : reports) {
        if (r.skipped) {
            std::cout << "skip " << r.group << ": " << r.skip_reason << "\n";
            continue;
        }
        summary_csv << metrics::summary_csv_row(r) << "\n";
        std::cout << metrics::summary_csv_row(r) << "\n";
        for (std::size_t i = 0; i < r.chi_s.size(); ++i)
            samples_csv << r.group << "," << r.sample_indices[i] << "," << r.chi_s[i] << "\n";
        boxplot << r.group << " " << r.summary.min << " " << r.summary.q1 << " "
                << r.summary.median << " " << r.summary.q3 << " " << r.summary.max << "\n";
    }
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream((fs::path(out_dir) / "sharpness_summary.csv").string())
            << summary_csv.str();
        std::ofstream((fs::path(out_dir) / "sharpness_samples.csv").string())
            << samples_csv.str();
        std::ofstream((fs::path(out_dir) / "boxplot.dat").string()) << boxplot.str();
    }
    return 0;
}

int cmd_verify_theory(std::size_t grid_m, const std::string& report_path) {
    const auto checks = theory::run_standard_checks(grid_m);
    std::cout << theory::checks_text(checks);
    if (!report_path.empty()) {
        ensure_parent_dir(report_path);
        std::ofstream(report_path) << theory::checks_csv(checks);
        std::cout << "report written to " << report_path << "\n";
    }
    return theory::all_pass(checks) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "GAN training with an inverse transformation unit between generator and "
        "discriminator, plus the blur/sharpness pipeline and numerical checks of "
        "the optimal-discriminator theory. ITUGAN_THREADS caps internal "
        "parallelism (speed only; results are identical)."};
    app.require_subcommand(1);

    // ---- train ----
    gan::TrainConfig tc;
    tc.steps = 1000;
    auto* train = app.add_subcommand("train", "Train one GAN run");
    train->set_config("--config", "", "INI key=value config file; flags win");
    train->add_option("--data", tc.data_path, "IDX image file (optionally gzipped)")
        ->required();
    train->add_option("--transform", tc.transform,
                      "Transformation unit name (see registry; e.g. T1, T23, "
                      "blur:K_sharpen, blur:file:<path>)");
    train->add_option("--steps", tc.steps, "Generator steps");
    train->add_option("--seed", tc.seed, "RNG seed");
    train->add_option("--out", tc.out_dir, "Output directory");
    train->add_option("--subset-n", tc.subset_n, "Train on a seeded subset (0 = all)");
    train->add_option("--batch-size", tc.batch_size, "Batch size");
    train->add_option("--latent-dim", tc.latent_dim, "Latent dimension");
    train->add_option("--lr", tc.lr, "Adam learning rate");
    train->add_option("--beta1", tc.beta1, "Adam beta1");
    train->add_option("--beta2", tc.beta2, "Adam beta2");
    train->add_option("--adam-eps", tc.adam_eps, "Adam epsilon");
    train->add_option("--d-steps-per-g", tc.d_steps_per_g,
                      "Discriminator steps per generator step");
    train->add_option("--arch", tc.arch, "dcgan28 | small28 | toy4");
    train->add_option("--precision", tc.precision, "Numeric precision (f64 only)");
    train->add_option("--checkpoint-interval", tc.checkpoint_interval,
                      "Checkpoint every N steps (0 = final only)");
    train->add_option("--montage-interval", tc.montage_interval,
                      "Sample montages every N steps (0 = final only)");
    train->add_flag("--saturating-g-loss", tc.saturating_g_loss,
                    "Use the literal minimax generator loss");

    // ---- survey ----
    gan::TrainConfig sc;
    sc.arch = "small28";
    sc.steps = 200;
    sc.batch_size = 32;
    std::vector<std::string> survey_only;
    std::string survey_out;
    auto* survey = app.add_subcommand(
        "survey", "Train all nine registry transformations with one budget");
    survey->add_option("--data", sc.data_path, "IDX image file")->required();
    survey->add_option("--steps", sc.steps, "Generator steps per transformation");
    survey->add_option("--seed", sc.seed, "RNG seed (shared across runs)");
    survey->add_option("--subset-n", sc.subset_n, "Seeded subset size (0 = all)");
    survey->add_option("--batch-size", sc.batch_size, "Batch size");
    survey->add_option("--latent-dim", sc.latent_dim, "Latent dimension");
    survey->add_option("--lr", sc.lr, "Adam learning rate");
    survey->add_option("--arch", sc.arch, "dcgan28 | small28 | toy4");
    survey->add_option("--only", survey_only, "Restrict to these transformations");
    survey->add_option("--out", survey_out, "Output directory (per-T subdirs + CSV)");

    // ---- blur ----
    std::string blur_data, blur_kernel = "K_blur", blur_out;
    std::size_t blur_subset = 0;
    std::uint64_t blur_seed = 0;
    auto* blur = app.add_subcommand(
        "blur", "Blur a dataset by replicate extension + 3x3 kernel");
    blur->add_option("--data", blur_data, "IDX image file")->required();
    blur->add_option("--kernel", blur_kernel,
                     "K_sharpen | K_blur | K_rec1 | K_rec2 | K_rec3 | file:<path>");
    blur->add_option("--out", blur_out, "Output directory")->required();
    blur->add_option("--subset-n", blur_subset, "Seeded subset size (0 = all)");
    blur->add_option("--seed", blur_seed, "Subset seed");

    // ---- sharpness ----
    std::string sh_data, sh_out;
    std::size_t sh_n = 108;
    std::uint64_t sh_seed = 0;
    std::string ck_sharpen, ck_rec1, ck_rec2, ck_rec3;
    auto* sharp = app.add_subcommand(
        "sharpness", "Five-number sharpness summaries for the six image groups");
    sharp->add_option("--data", sh_data, "IDX image file (originals)")->required();
    sharp->add_option("--n", sh_n, "Sample size per group");
    sharp->add_option("--seed", sh_seed, "Sampling seed");
    sharp->add_option("--out", sh_out, "Output directory for CSV/boxplot data");
    sharp->add_option("--ckpt-sharpen", ck_sharpen, "Checkpoint of a blur:K_sharpen run");
    sharp->add_option("--ckpt-rec1", ck_rec1, "Checkpoint of a blur:K_rec1 run");
    sharp->add_option("--ckpt-rec2", ck_rec2, "Checkpoint of a blur:K_rec2 run");
    sharp->add_option("--ckpt-rec3", ck_rec3, "Checkpoint of a blur:K_rec3 run");

    // ---- verify-theory ----
    std::size_t grid_m = 256;
    std::string report_path;
    auto* verify = app.add_subcommand(
        "verify-theory", "Numerical checks of the optimal-discriminator results");
    verify->add_option("--grid-m", grid_m,
                       "Density grid size (tolerances relax by (256/m)^2 below 256)");
    verify->add_option("--report", report_path, "Write machine-readable CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (train->parsed()) return cmd_train(tc);
        if (survey->parsed()) return cmd_survey(sc, survey_only, survey_out);
        if (blur->parsed())
            return cmd_blur(blur_data, blur_kernel, blur_out, blur_subset, blur_seed);
        if (sharp->parsed())
            return cmd_sharpness(sh_data, sh_n, sh_seed, sh_out,
                                 {{"sharpen_model", ck_sharpen},
                                  {"rec1_model", ck_rec1},
                                  {"rec2_model", ck_rec2},
                                  {"rec3_model", ck_rec3}});
        if (verify->parsed()) return cmd_verify_theory(grid_m, report_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
