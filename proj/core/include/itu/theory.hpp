#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace itu::theory {

// Discriminator values are clamped into [eps, 1-eps] so logs stay finite.
inline constexpr double kClampEps = 1e-7;

// Nonnegative density sampled at midpoints of a uniform grid on [lo, hi].
// Normalization convention: sum(weights) * h == 1 (midpoint rule).
struct DiscreteDensity1D {
    double lo = -1.0, hi = 1.0;
    std::size_t m = 0;
    std::vector<double> weights;

    double h() const { return (hi - lo) / static_cast<double>(m); }
    double midpoint(std::size_t j) const {
        return lo + (static_cast<double>(j) + 0.5) * h();
    }
    double mass() const;

    // Piecewise-linear interpolation between midpoints, constant from the
    // outermost midpoints to the interval ends, zero outside [lo, hi].
    double interp(double x) const;

    // Throws if weights are negative or the mass is off by more than 1e-9.
    void validate() const;

    DiscreteDensity1D normalized() const;

    static DiscreteDensity1D from_fn(double lo, double hi, std::size_t m,
                                     const std::function<double(double)>& f,
                                     bool normalize = true);
    static DiscreteDensity1D uniform(double lo, double hi, std::size_t m);
    static DiscreteDensity1D truncated_gaussian(double lo, double hi, std::size_t m,
                                                double mean, double stddev);
};

// A scalar map with optional inverse/derivative/preimage structure. The
// derivative feeds the 1-D change-of-variables factor 1/|T'(T^-1(x))|.
struct Map1D {
    std::string name;
    std::function<double(double)> f;
    std::function<double(double)> f_inv;  // empty when no global inverse exists
    std::function<double(double)> df;
    // Closed intervals of the data space the map cannot reach.
    std::vector<std::pair<double, double>> range_complement;
    // Multi-valued inverse for non-injective maps.
    std::function<std::vector<double>(double)> preimages;

    bool has_inverse() const { return static_cast<bool>(f_inv); }

    static Map1D identity();
    static Map1D affine(double a, double b);  // x -> a*x + b
    static Map1D tanh_map();
    static Map1D atan_map();
    static Map1D sigmoid_map();  // range complement filled for a given data interval
    static Map1D abs_map();
};

struct DiscriminatorGrid {
    double lo = -1.0, hi = 1.0;
    std::size_t m = 0;
    std::vector<double> d;  // values in [kClampEps, 1-kClampEps]

    double h() const { return (hi - lo) / static_cast<double>(m); }
    double midpoint(std::size_t j) const {
        return lo + (static_cast<double>(j) + 0.5) * h();
    }
    double interp(double x) const;
    void clamp();
};

// Maximizes a strictly concave scalar function on [lo, hi] by golden-section
// search; returns the abscissa once the bracket is narrower than tol.
double golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                          double tol = 1e-10);

// Midpoint-rule approximation of
//   int p_data log D + int p_g log(1 - D(T(x))),
// with D evaluated at T(x) by linear interpolation. D must share p_data's grid.
double value_functional(const DiscreteDensity1D& p_data, const DiscreteDensity1D& p_g,
                        const Map1D& T, const DiscriminatorGrid& D);

// Closed-form optimal discriminator for bijective T:
//   D*(x) = p_data(x) / (p_data(x) + p_g(T^-1(x)) / |T'(T^-1(x))|).
// Cells where the denominator vanishes fall back to the clamp and set
// *zero_denominator_warning.
DiscriminatorGrid optimal_discriminator(const DiscreteDensity1D& p_data,
                                        const DiscreteDensity1D& p_g, const Map1D& T,
                                        bool* zero_denominator_warning = nullptr);

// Independent oracle: for each data cell, maximize a*log d + b*log(1-d) by
// golden-section search, where a is the cell's data mass and b the generator
// mass pushed into the cell (valid for non-bijective T). `subdiv` splits each
// source cell before pushing for quadrature accuracy.
DiscriminatorGrid brute_force_optimal_D(const DiscreteDensity1D& p_data,
                                        const DiscreteDensity1D& p_g, const Map1D& T,
                                        std::size_t subdiv = 8);

// Change-of-variables density of T(G(z)) on the image interval
// [T(lo), T(hi)] (sorted), same grid size as p_g.
DiscreteDensity1D pushforward_density(const DiscreteDensity1D& p_g, const Map1D& T,
                                      double* renorm_error = nullptr,
                                      bool renormalize = false);

// Builds p_data as the pushforward of p_g, forms the optimal discriminator
// and returns the value functional; -log 4 within quadrature error when the
// theory holds.
double verify_theorem2(const DiscreteDensity1D& p_g, const Map1D& T);

struct Conjecture1Report {
    std::size_t cells_in_range = 0, cells_in_complement = 0, cells_straddling = 0;
    // Closed form vs brute force, over cells entirely inside the range.
    double max_abs_dev_on_range = 0.0;
    // Minimum brute-force D over complement cells with positive data density.
    double min_d_on_complement = 1.0;
    std::vector<double> d_formula, d_bruteforce;  // per cell; NaN where undefined
};

Conjecture1Report evaluate_conjecture1(const DiscreteDensity1D& p_data,
                                       const DiscreteDensity1D& p_g, const Map1D& T);

struct Conjecture2Report {
    DiscriminatorGrid d_average;     // preimage-averaged closed form
    DiscriminatorGrid d_sum;         // summed-preimage pushforward form
    DiscriminatorGrid d_bruteforce;
    double value_average = 0.0, value_sum = 0.0, value_bruteforce = 0.0;
    double max_dev_avg_vs_bf = 0.0, max_dev_sum_vs_bf = 0.0, max_dev_avg_vs_sum = 0.0;
    // Which closed form scores higher under the value functional.
    std::string higher_closed_form;
};

Conjecture2Report evaluate_conjecture2(const DiscreteDensity1D& p_data,
                                       const DiscreteDensity1D& p_g, const Map1D& T);

}  // namespace itu::theory
