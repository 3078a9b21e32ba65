#include "itu/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "itu/rng.hpp"

namespace itu::metrics {

std::vector<double> abs_avg_diff(const std::vector<double>& img, std::size_t n) {
    if (n < 2) throw std::invalid_argument("abs_avg_diff: image side must be >= 2");
    if (img.size() != n * n) throw std::invalid_argument("abs_avg_diff: size mismatch");
    std::vector<double> out(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double p = img[i * n + j];
            double sum = 0.0;
            int neighbors = 0;
            if (i > 0) { sum += std::fabs(p - img[(i - 1) * n + j]); ++neighbors; }
            if (i + 1 < n) { sum += std::fabs(p - img[(i + 1) * n + j]); ++neighbors; }
            if (j > 0) { sum += std::fabs(p - img[i * n + j - 1]); ++neighbors; }
            if (j + 1 < n) { sum += std::fabs(p - img[i * n + j + 1]); ++neighbors; }
            out[i * n + j] = sum / static_cast<double>(neighbors);
        }
    return out;
}

double sharpness(const std::vector<double>& img, std::size_t n) {
    const std::vector<double> dd = abs_avg_diff(abs_avg_diff(img, n), n);
    double s = 0.0;
    for (double v : dd) s += v;
    return s / static_cast<double>(dd.size());
}

FiveNumberSummary five_number_summary(std::vector<double> values) {
    if (values.empty())
        throw std::invalid_argument("five_number_summary: empty sample");
    std::sort(values.begin(), values.end());
    auto quantile = [&](double p) {
        const double pos = p * static_cast<double>(values.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(lo);
        if (lo + 1 >= values.size()) return values.back();
        return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
    };
    FiveNumberSummary s;
    s.min = values.front();
    s.q1 = quantile(0.25);
    s.median = quantile(0.5);
    s.q3 = quantile(0.75);
    s.max = values.back();
    return s;
}

SharpnessReport summarize(const std::string& group, const std::vector<double>& images,
                          std::size_t n_images, std::size_t side, std::size_t sample_n,
                          std::uint64_t seed) {
    SharpnessReport rep;
    rep.group = group;
    if (n_images == 0) throw std::invalid_argument("summarize: empty group " + group);
    if (images.size() != n_images * side * side)
        throw std::invalid_argument("summarize: image stack size mismatch");
    Rng rng(seed);
    if (sample_n <= n_images) {
        std::vector<std::size_t> idx(n_images);
        for (std::size_t i = 0; i < n_images; ++i) idx[i] = i;
        for (std::size_t i = 0; i < sample_n; ++i)
            std::swap(idx[i], idx[i + rng.below(n_images - i)]);
        idx.resize(sample_n);
        rep.sample_indices = idx;
    } else {
        // Group smaller than the requested sample: draw with replacement.
        rep.sample_indices.resize(sample_n);
        for (auto& i : rep.sample_indices) i = rng.below(n_images);
    }
    rep.sample_count = sample_n;
    rep.chi_s.reserve(sample_n);
    const std::size_t sz = side * side;
    for (std::size_t i : rep.sample_indices) {
        std::vector<double> img(images.begin() + static_cast<std::ptrdiff_t>(i * sz),
                                images.begin() + static_cast<std::ptrdiff_t>((i + 1) * sz));
        rep.chi_s.push_back(sharpness(img, side));
    }
    rep.summary = five_number_summary(rep.chi_s);
    return rep;
}

std::string summary_csv_header() { return "group,min,q1,median,q3,max"; }

std::string summary_csv_row(const SharpnessReport& r) {
    std::ostringstream os;
    os.precision(12);
    os << r.group << "," << r.summary.min << "," << r.summary.q1 << "," << r.summary.median
       << "," << r.summary.q3 << "," << r.summary.max;
    return os.str();
}

}  // namespace itu::metrics
