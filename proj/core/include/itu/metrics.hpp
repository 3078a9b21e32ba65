#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace itu::metrics {

// Absolute average difference of each pixel against its existing neighbors
// (4 interior, 3 on edges, 2 at corners). Input and output are n x n,
// row-major. Throws for n < 2.
std::vector<double> abs_avg_diff(const std::vector<double>& img, std::size_t n);

// chi_s: mean of the second-order absolute average difference.
double sharpness(const std::vector<double>& img, std::size_t n);

struct FiveNumberSummary {
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

// Linear-interpolation quartiles (type 7) over a copy of the values.
FiveNumberSummary five_number_summary(std::vector<double> values);

struct SharpnessReport {
    std::string group;
    std::size_t sample_count = 0;
    std::vector<double> chi_s;        // per sampled image
    std::vector<std::size_t> sample_indices;
    FiveNumberSummary summary;
    bool skipped = false;
    std::string skip_reason;
};

// Draws sample_n images from the group (without replacement when the group
// is large enough, with replacement otherwise) and summarizes chi_s.
// `images` is a flat row-major stack of n_images square images.
SharpnessReport summarize(const std::string& group, const std::vector<double>& images,
                          std::size_t n_images, std::size_t side, std::size_t sample_n,
                          std::uint64_t seed);

std::string summary_csv_header();
std::string summary_csv_row(const SharpnessReport& r);

}  // namespace itu::metrics
