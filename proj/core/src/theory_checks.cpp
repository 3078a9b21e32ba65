#include "itu/theory_checks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "itu/rng.hpp"

namespace itu::theory {

namespace {

constexpr double kLog4 = 1.3862943611198906;

TheoryCheck below(std::string name, double value, double threshold, std::string detail = "") {
    TheoryCheck c;
    c.name = std::move(name);
    c.value = value;
    c.threshold = threshold;
    c.greater_is_pass = false;
    c.pass = value < threshold;
    c.detail = std::move(detail);
    return c;
}

TheoryCheck at_least(std::string name, double value, double threshold,
                     std::string detail = "") {
    TheoryCheck c;
    c.name = std::move(name);
    c.value = value;
    c.threshold = threshold;
    c.greater_is_pass = true;
    c.pass = value >= threshold;
    c.detail = std::move(detail);
    return c;
}

double max_abs_dev(const DiscriminatorGrid& a, const DiscriminatorGrid& b) {
    double worst = 0.0;
    for (std::size_t j = 0; j < a.d.size(); ++j)
        worst = std::max(worst, std::fabs(a.d[j] - b.d[j]));
    return worst;
}

// Brute-force dev between the Theorem 1 formula and the oracle for one map.
double theorem1_dev(const Map1D& T, std::size_t m) {
    const DiscreteDensity1D p_data = standard_p_data(m);
    const DiscreteDensity1D p_g = standard_p_g(T, m);
    DiscriminatorGrid formula = optimal_discriminator(p_data, p_g, T);
    DiscriminatorGrid oracle = brute_force_optimal_D(p_data, p_g, T);
    return max_abs_dev(formula, oracle);
}

Map1D sigmoid_with_complement() {
    Map1D T = Map1D::sigmoid_map();
    const double lo = T.f(-1.0), hi = T.f(1.0);
    T.range_complement = {{-1.0, lo}, {hi, 1.0}};
    return T;
}

}  // namespace

DiscreteDensity1D standard_p_data(std::size_t m) {
    return DiscreteDensity1D::truncated_gaussian(-1.0, 1.0, m, 0.0, 0.5);
}

DiscreteDensity1D standard_p_g(const Map1D& T, std::size_t m) {
    // Uniform source whose image ends exactly on cell edges of the dyadic
    // [-1,1] data grid: tanh -> [-1/2, 1/2], arctan -> [-1/2, 1/2].
    if (T.name == "tanh") {
        const double a = std::atanh(0.5);
        return DiscreteDensity1D::uniform(-a, a, m);
    }
    if (T.name == "arctan") {
        const double a = std::tan(0.5);
        return DiscreteDensity1D::uniform(-a, a, m);
    }
    return DiscreteDensity1D::uniform(-1.0, 1.0, m);
}

std::vector<TheoryCheck> run_standard_checks(std::size_t m) {
    std::vector<TheoryCheck> out;
    const double s = m >= 256 ? 1.0
                              : (256.0 / static_cast<double>(m)) *
                                    (256.0 / static_cast<double>(m));

    // --- Theorem 1: closed form vs per-cell oracle -------------------------
    out.push_back(below("theorem1.identity.max_abs_dev",
                        theorem1_dev(Map1D::identity(), m), 1e-5 * s));
    out.push_back(below("theorem1.tanh.max_abs_dev",
                        theorem1_dev(Map1D::tanh_map(), m), 1e-5 * s));
    out.push_back(below("theorem1.arctan.max_abs_dev",
                        theorem1_dev(Map1D::atan_map(), m), 1e-5 * s));

    // --- Theorem 2: -log 4 at the pushforward ------------------------------
    {
        const double v = verify_theorem2(DiscreteDensity1D::uniform(-1.0, 1.0, m),
                                         Map1D::identity());
        out.push_back(below("theorem2.uniform_identity.abs_dev", std::fabs(v + kLog4),
                            1e-6, "value=" + std::to_string(v)));
    }
    {
        const double a = std::atanh(0.5);
        const double v = verify_theorem2(
            DiscreteDensity1D::truncated_gaussian(-a, a, m, 0.0, 0.4), Map1D::tanh_map());
        out.push_back(below("theorem2.gaussian_tanh.abs_dev", std::fabs(v + kLog4),
                            1e-4 * s, "value=" + std::to_string(v)));
    }
    {
        const double a = std::tan(0.5);
        const double v = verify_theorem2(DiscreteDensity1D::uniform(-a, a, m),
                                         Map1D::atan_map());
        out.push_back(below("theorem2.uniform_arctan.abs_dev", std::fabs(v + kLog4),
                            1e-4 * s, "value=" + std::to_string(v)));
    }
    {
        const double v = verify_theorem2(
            DiscreteDensity1D::truncated_gaussian(-1.0, 1.0, m, 0.2, 0.5),
            Map1D::affine(0.5, 0.25));
        out.push_back(below("theorem2.gaussian_affine.abs_dev", std::fabs(v + kLog4),
                            1e-6, "value=" + std::to_string(v)));
    }

    // Perturbation probe: when p_data is not the pushforward, the maximized
    // functional sits strictly above -log 4.
    {
        const DiscreteDensity1D p_g = DiscreteDensity1D::uniform(-1.0, 1.0, m);
        const Map1D T = Map1D::identity();
        double min_margin = 1e300;
        for (double mean : {-0.3, 0.0, 0.4}) {
            const DiscreteDensity1D p_data =
                DiscreteDensity1D::truncated_gaussian(-1.0, 1.0, m, mean, 0.35);
            DiscriminatorGrid d = brute_force_optimal_D(p_data, p_g, T);
            d.clamp();
            min_margin = std::min(min_margin,
                                  value_functional(p_data, p_g, T, d) + kLog4);
        }
        out.push_back(at_least("theorem2.perturbation.min_margin", min_margin, 1e-3,
                               "C(G) - (-log 4) over 3 off-pushforward data densities"));
    }

    // --- Conjecture 1: non-surjective sigmoid -------------------------------
    {
        const Map1D T = sigmoid_with_complement();
        const Conjecture1Report rep =
            evaluate_conjecture1(standard_p_data(m), standard_p_g(T, m), T);
        std::ostringstream d;
        d << "cells range/complement/straddling = " << rep.cells_in_range << "/"
          << rep.cells_in_complement << "/" << rep.cells_straddling;
        out.push_back(below("conjecture1.sigmoid.on_range_dev", rep.max_abs_dev_on_range,
                            1e-4 * s, d.str()));
        out.push_back(at_least("conjecture1.sigmoid.min_d_on_complement",
                               rep.min_d_on_complement, 1.0 - 2.0 * kClampEps,
                               "expected at the upper clamp"));
    }

    // --- Conjecture 2: non-injective abs ------------------------------------
    {
        const Map1D T = Map1D::abs_map();
        DiscreteDensity1D p_g =
            DiscreteDensity1D::truncated_gaussian(-1.0, 1.0, m, 0.2, 0.5);
        const DiscreteDensity1D p_data = DiscreteDensity1D::truncated_gaussian(
            0.0, 1.0, m / 2, 0.5, 0.25);
        const Conjecture2Report rep = evaluate_conjecture2(p_data, p_g, T);
        std::ostringstream d;
        d << "values avg/sum/bf = " << rep.value_average << "/" << rep.value_sum << "/"
          << rep.value_bruteforce << "; D devs avg-bf/sum-bf/avg-sum = "
          << rep.max_dev_avg_vs_bf << "/" << rep.max_dev_sum_vs_bf << "/"
          << rep.max_dev_avg_vs_sum << "; higher closed form: "
          << rep.higher_closed_form;
        out.push_back(at_least("conjecture2.abs.bf_minus_avg",
                               rep.value_bruteforce - rep.value_average, -1e-9, d.str()));
        out.push_back(at_least("conjecture2.abs.bf_minus_sum",
                               rep.value_bruteforce - rep.value_sum, -1e-9));

        // Indistinguishability: swapping generator density between the two
        // preimages of the same point leaves the functional unchanged.
        DiscriminatorGrid fixed = rep.d_bruteforce;
        fixed.clamp();
        const double before = value_functional(p_data, p_g, T, fixed);
        double max_swap_dev = 0.0;
        for (std::size_t i : {std::size_t{3}, m / 3, m / 2 - 1}) {
            DiscreteDensity1D swapped = p_g;
            std::swap(swapped.weights[i], swapped.weights[m - 1 - i]);
            max_swap_dev = std::max(
                max_swap_dev,
                std::fabs(value_functional(p_data, swapped, T, fixed) - before));
        }
        out.push_back(below("conjecture2.abs.swap_dev", max_swap_dev, 1e-9,
                            "mirror-cell generator-density swaps under fixed D"));
    }

    // --- Maximality: D* beats random perturbations --------------------------
    {
        const Map1D T = Map1D::tanh_map();
        const DiscreteDensity1D p_data = standard_p_data(m);
        const DiscreteDensity1D p_g = standard_p_g(T, m);
        const DiscriminatorGrid d_star = optimal_discriminator(p_data, p_g, T);
        const double v_star = value_functional(p_data, p_g, T, d_star);
        Rng rng(20240817);
        double min_gap = 1e300;
        for (int k = 0; k < 1000; ++k) {
            DiscriminatorGrid d = d_star;
            for (double& x : d.d) x += rng.uniform(-0.01, 0.01);
            d.clamp();
            min_gap = std::min(min_gap, v_star - value_functional(p_data, p_g, T, d));
        }
        out.push_back(at_least("maximality.tanh.min_gap_over_1000_probes", min_gap,
                               -1e-12));
    }

    // --- Grid refinement: quadrature error shrinks with h -------------------
    if (m >= 64) {
        const double e1 = theorem1_dev(Map1D::tanh_map(), m / 4);
        const double e2 = theorem1_dev(Map1D::tanh_map(), m / 2);
        const double e3 = theorem1_dev(Map1D::tanh_map(), m);
        std::ostringstream d;
        d << "devs at m/4,m/2,m = " << e1 << "," << e2 << "," << e3;
        out.push_back(at_least("refinement.tanh.coarse_over_mid", e1 / e2, 1.5, d.str()));
        out.push_back(at_least("refinement.tanh.mid_over_fine", e2 / e3, 1.5));
    }

    return out;
}

bool all_pass(const std::vector<TheoryCheck>& checks) {
    return std::all_of(checks.begin(), checks.end(),
                       [](const TheoryCheck& c) { return c.pass; });
}

std::string checks_csv(const std::vector<TheoryCheck>& checks) {
    std::ostringstream os;
    os.precision(17);
    os << "name,value,threshold,comparison,pass\n";
    for (const auto& c : checks)
        os << c.name << "," << c.value << "," << c.threshold << ","
           << (c.greater_is_pass ? ">=" : "<") << "," << (c.pass ? 1 : 0) << "\n";
    return os.str();
}

std::string checks_text(const std::vector<TheoryCheck>& checks) {
    std::ostringstream os;
    os.precision(10);
    for (const auto& c : checks) {
        os << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.value
           << (c.greater_is_pass ? " >= " : " < ") << c.threshold;
        if (!c.detail.empty()) os << "  [" << c.detail << "]";
        os << "\n";
    }
    return os.str();
}

}  // namespace itu::theory
