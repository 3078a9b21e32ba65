#include "itu/theory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace itu::theory {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

double clamp01(double d) {
    return std::min(std::max(d, kClampEps), 1.0 - kClampEps);
}

// Shared midpoint-interpolation helper for gridded values.
double grid_interp(double x, double lo, double hi, std::size_t m,
                   const std::vector<double>& v, bool zero_outside) {
    if (x < lo || x > hi) return zero_outside ? 0.0 : v[x < lo ? 0 : m - 1];
    const double h = (hi - lo) / static_cast<double>(m);
    const double t = (x - lo) / h - 0.5;
    if (t <= 0.0) return v.front();
    if (t >= static_cast<double>(m - 1)) return v.back();
    const std::size_t j = static_cast<std::size_t>(t);
    const double frac = t - static_cast<double>(j);
    return v[j] * (1.0 - frac) + v[j + 1] * frac;
}

}  // namespace

double DiscreteDensity1D::mass() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s * h();
}

double DiscreteDensity1D::interp(double x) const {
    return grid_interp(x, lo, hi, m, weights, /*zero_outside=*/true);
}

void DiscreteDensity1D::validate() const {
    require(m >= 2 && weights.size() == m,
            "DiscreteDensity1D: grid size mismatch");
    require(hi > lo, "DiscreteDensity1D: empty interval");
    for (double w : weights)
        require(w >= 0.0, "DiscreteDensity1D: negative weight");
    const double err = std::fabs(mass() - 1.0);
    require(err <= 1e-9, "DiscreteDensity1D: mass off by " + std::to_string(err));
}

DiscreteDensity1D DiscreteDensity1D::normalized() const {
    DiscreteDensity1D out = *this;
    const double total = mass();
    require(total > 0.0, "DiscreteDensity1D::normalized: zero mass");
    for (double& w : out.weights) w /= total;
    return out;
}

DiscreteDensity1D DiscreteDensity1D::from_fn(double lo, double hi, std::size_t m,
                                             const std::function<double(double)>& f,
                                             bool normalize) {
    DiscreteDensity1D d;
    d.lo = lo;
    d.hi = hi;
    d.m = m;
    d.weights.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double w = f(d.midpoint(j));
        require(w >= 0.0, "DiscreteDensity1D::from_fn: negative density value");
        d.weights[j] = w;
    }
    return normalize ? d.normalized() : d;
}

DiscreteDensity1D DiscreteDensity1D::uniform(double lo, double hi, std::size_t m) {
    return from_fn(lo, hi, m, [](double) { return 1.0; });
}

DiscreteDensity1D DiscreteDensity1D::truncated_gaussian(double lo, double hi,
                                                        std::size_t m, double mean,
                                                        double stddev) {
    return from_fn(lo, hi, m, [mean, stddev](double x) {
        const double z = (x - mean) / stddev;
        return std::exp(-0.5 * z * z);
    });
}

// ---- maps ----

Map1D Map1D::identity() {
    Map1D t;
    t.name = "identity";
    t.f = [](double x) { return x; };
    t.f_inv = [](double y) { return y; };
    t.df = [](double) { return 1.0; };
    return t;
}

Map1D Map1D::affine(double a, double b) {
    require(a != 0.0, "Map1D::affine: zero slope");
    Map1D t;
    t.name = "affine";
    t.f = [a, b](double x) { return a * x + b; };
    t.f_inv = [a, b](double y) { return (y - b) / a; };
    t.df = [a](double) { return a; };
    return t;
}

Map1D Map1D::tanh_map() {
    Map1D t;
    t.name = "tanh";
    t.f = [](double x) { return std::tanh(x); };
    t.f_inv = [](double y) { return std::atanh(y); };
    t.df = [](double x) {
        const double v = std::tanh(x);
        return 1.0 - v * v;
    };
    return t;
}

Map1D Map1D::atan_map() {
    Map1D t;
    t.name = "arctan";
    t.f = [](double x) { return std::atan(x); };
    t.f_inv = [](double y) { return std::tan(y); };
    t.df = [](double x) { return 1.0 / (1.0 + x * x); };
    return t;
}

Map1D Map1D::sigmoid_map() {
    Map1D t;
    t.name = "sigmoid";
    t.f = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    t.f_inv = [](double y) { return std::log(y / (1.0 - y)); };
    t.df = [](double x) {
        const double s = 1.0 / (1.0 + std::exp(-x));
        return s * (1.0 - s);
    };
    return t;
}

Map1D Map1D::abs_map() {
    Map1D t;
    t.name = "abs";
    t.f = [](double x) { return std::fabs(x); };
    t.df = [](double x) { return x >= 0.0 ? 1.0 : -1.0; };
    t.preimages = [](double y) {
        if (y < 0.0) return std::vector<double>{};
        if (y == 0.0) return std::vector<double>{0.0};
        return std::vector<double>{-y, y};
    };
    return t;
}

// ---- discriminator grid ----

double DiscriminatorGrid::interp(double x) const {
    return grid_interp(x, lo, hi, m, d, /*zero_outside=*/false);
}

void DiscriminatorGrid::clamp() {
    for (double& v : d) v = clamp01(v);
}

double golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                          double tol) {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;  // 0.618...
    double a = lo, b = hi;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// ---- operations ----

double value_functional(const DiscreteDensity1D& p_data, const DiscreteDensity1D& p_g,
                        const Map1D& T, const DiscriminatorGrid& D) {
    require(D.m == p_data.m && D.lo == p_data.lo && D.hi == p_data.hi,
            "value_functional: discriminator grid not aligned with p_data");
    for (double v : D.d)
        require(v >= kClampEps && v <= 1.0 - kClampEps,
                "value_functional: D outside (0,1) clamp range");
    double v1 = 0.0;
    for (std::size_t j = 0; j < p_data.m; ++j)
        v1 += p_data.weights[j] * std::log(D.d[j]);
    v1 *= p_data.h();
    double v2 = 0.0;
    for (std::size_t i = 0; i < p_g.m; ++i) {
        const double dv = D.interp(T.f(p_g.midpoint(i)));
        v2 += p_g.weights[i] * std::log(1.0 - dv);
    }
    v2 *= p_g.h();
    return v1 + v2;
}

DiscriminatorGrid optimal_discriminator(const DiscreteDensity1D& p_data,
                                        const DiscreteDensity1D& p_g, const Map1D& T,
                                        bool* zero_denominator_warning) {
    require(T.has_inverse(), "optimal_discriminator: map has no inverse; use the "
                             "brute-force oracle for non-bijective maps");
    DiscriminatorGrid D;
    D.lo = p_data.lo;
    D.hi = p_data.hi;
    D.m = p_data.m;
    D.d.resize(D.m);
    bool warned = false;
    for (std::size_t j = 0; j < D.m; ++j) {
        const double y = D.midpoint(j);
        const double x = T.f_inv(y);
        const double pd = p_data.weights[j];
        double q = 0.0;
        if (std::isfinite(x)) {
            const double slope = std::fabs(T.df(x));
            require(std::isfinite(slope), "optimal_discriminator: non-finite derivative");
            if (slope > 0.0) q = p_g.interp(x) / slope;
        }
        const double den = pd + q;
        if (den <= 0.0) {
            warned = true;
            D.d[j] = kClampEps;  // 0/0 cell: fall back to the lower clamp
        } else {
            D.d[j] = clamp01(pd / den);
        }
    }
    if (zero_denominator_warning) *zero_denominator_warning = warned;
    return D;
}

DiscriminatorGrid brute_force_optimal_D(const DiscreteDensity1D& p_data,
                                        const DiscreteDensity1D& p_g, const Map1D& T,
                                        std::size_t subdiv) {
    require(subdiv >= 1, "brute_force_optimal_D: subdiv must be >= 1");
    DiscriminatorGrid D;
    D.lo = p_data.lo;
    D.hi = p_data.hi;
    D.m = p_data.m;
    D.d.assign(D.m, 0.0);

    // Push the generator mass forward onto the data grid, cell by cell.
    std::vector<double> b(D.m, 0.0);
    const double hd = p_data.h();
    const double hg = p_g.h();
    auto cell_of = [&](double y) -> std::ptrdiff_t {
        if (y < D.lo || y > D.hi) return -1;
        auto j = static_cast<std::ptrdiff_t>((y - D.lo) / hd);
        return std::min<std::ptrdiff_t>(j, static_cast<std::ptrdiff_t>(D.m) - 1);
    };
    for (std::size_t i = 0; i < p_g.m; ++i) {
        const double density = p_g.weights[i];
        if (density == 0.0) continue;
        const double x0 = p_g.lo + static_cast<double>(i) * hg;
        for (std::size_t s = 0; s < subdiv; ++s) {
            const double u0 = x0 + hg * static_cast<double>(s) / static_cast<double>(subdiv);
            const double u1 = x0 + hg * static_cast<double>(s + 1) / static_cast<double>(subdiv);
            const double mass = density * (u1 - u0);
            double y0 = T.f(u0), y1 = T.f(u1);
            if (y0 > y1) std::swap(y0, y1);
            if (y1 - y0 <= 0.0) {
                const std::ptrdiff_t j = cell_of(y0);
                if (j >= 0) b[static_cast<std::size_t>(j)] += mass;
                continue;
            }
            // Spread the mass uniformly over [y0, y1] across target cells.
            const double inv_len = 1.0 / (y1 - y0);
            std::ptrdiff_t j0 = cell_of(std::max(y0, D.lo));
            std::ptrdiff_t j1 = cell_of(std::min(y1, D.hi));
            if (j0 < 0 || j1 < 0) {
                if (y1 < D.lo || y0 > D.hi) continue;  // image fully outside
                j0 = std::max<std::ptrdiff_t>(j0, 0);
                j1 = std::min<std::ptrdiff_t>(j1, static_cast<std::ptrdiff_t>(D.m) - 1);
            }
            for (std::ptrdiff_t j = j0; j <= j1; ++j) {
                const double cl = D.lo + static_cast<double>(j) * hd;
                const double cr = cl + hd;
                const double overlap = std::min(y1, cr) - std::max(y0, cl);
                if (overlap > 0.0) b[static_cast<std::size_t>(j)] += mass * overlap * inv_len;
            }
        }
    }

    for (std::size_t j = 0; j < D.m; ++j) {
        const double a = p_data.weights[j] * hd;
        const double bj = b[j];
        if (a == 0.0 && bj == 0.0) {
            D.d[j] = 0.5;  // no mass either way; any value is optimal
            continue;
        }
        D.d[j] = golden_section_max(
            [a, bj](double d) {
                return a * std::log(d) + bj * std::log(1.0 - d);
            },
            kClampEps, 1.0 - kClampEps);
    }
    return D;
}

DiscreteDensity1D pushforward_density(const DiscreteDensity1D& p_g, const Map1D& T,
                                      double* renorm_error, bool renormalize) {
    require(T.has_inverse(), "pushforward_density: map has no inverse");
    DiscreteDensity1D out;
    double a = T.f(p_g.lo), b = T.f(p_g.hi);
    if (a > b) std::swap(a, b);
    out.lo = a;
    out.hi = b;
    out.m = p_g.m;
    out.weights.resize(out.m);
    for (std::size_t j = 0; j < out.m; ++j) {
        const double y = out.midpoint(j);
        const double x = T.f_inv(y);
        const double slope = std::fabs(T.df(x));
        require(slope > 0.0, "pushforward_density: vanishing derivative at x=" +
                                 std::to_string(x));
        out.weights[j] = p_g.interp(x) / slope;
    }
    const double err = std::fabs(out.mass() - 1.0);
    if (renorm_error) *renorm_error = err;
    require(err < 1e-3, "pushforward_density: mass error " + std::to_string(err) +
                            " exceeds 1e-3");
    return renormalize ? out.normalized() : out;
}

double verify_theorem2(const DiscreteDensity1D& p_g, const Map1D& T) {
    const DiscreteDensity1D p_data = pushforward_density(p_g, T, nullptr, true);
    const DiscriminatorGrid d_star = optimal_discriminator(p_data, p_g, T);
    return value_functional(p_data, p_g, T, d_star);
}

Conjecture1Report evaluate_conjecture1(const DiscreteDensity1D& p_data,
                                       const DiscreteDensity1D& p_g, const Map1D& T) {
    require(!T.range_complement.empty(),
            "evaluate_conjecture1: empty range complement; use the Theorem 1 path");
    require(T.has_inverse(), "evaluate_conjecture1: map needs an inverse on its range");

    const DiscriminatorGrid d_bf = brute_force_optimal_D(p_data, p_g, T);
    Conjecture1Report rep;
    rep.d_formula.assign(p_data.m, std::nan(""));
    rep.d_bruteforce = d_bf.d;

    const double hd = p_data.h();
    auto overlap_with_complement = [&](double cl, double cr) {
        double total = 0.0;
        for (const auto& [al, ar] : T.range_complement)
            total += std::max(0.0, std::min(cr, ar) - std::max(cl, al));
        return total;
    };
    for (std::size_t j = 0; j < p_data.m; ++j) {
        const double cl = p_data.lo + static_cast<double>(j) * hd;
        const double cr = cl + hd;
        const double ov = overlap_with_complement(cl, cr);
        if (ov <= 1e-12 * hd) {
            ++rep.cells_in_range;
            const double y = p_data.midpoint(j);
            const double x = T.f_inv(y);
            const double q = p_g.interp(x) / std::fabs(T.df(x));
            const double den = p_data.weights[j] + q;
            const double d_formula =
                den > 0.0 ? std::min(std::max(p_data.weights[j] / den, kClampEps),
                                     1.0 - kClampEps)
                          : kClampEps;
            rep.d_formula[j] = d_formula;
            rep.max_abs_dev_on_range =
                std::max(rep.max_abs_dev_on_range, std::fabs(d_formula - d_bf.d[j]));
        } else if (ov >= hd * (1.0 - 1e-12)) {
            ++rep.cells_in_complement;
            if (p_data.weights[j] > 0.0)
                rep.min_d_on_complement = std::min(rep.min_d_on_complement, d_bf.d[j]);
        } else {
            ++rep.cells_straddling;
        }
    }
    return rep;
}

Conjecture2Report evaluate_conjecture2(const DiscreteDensity1D& p_data,
                                       const DiscreteDensity1D& p_g, const Map1D& T) {
    require(static_cast<bool>(T.preimages),
            "evaluate_conjecture2: map has no preimage enumeration");
    Conjecture2Report rep;
    auto make_grid = [&](const std::function<double(double, double)>& combine) {
        DiscriminatorGrid D;
        D.lo = p_data.lo;
        D.hi = p_data.hi;
        D.m = p_data.m;
        D.d.resize(D.m);
        for (std::size_t j = 0; j < D.m; ++j) {
            const double y = D.midpoint(j);
            double total = 0.0;
            std::size_t count = 0;
            for (double x : T.preimages(y)) {
                const double slope = std::fabs(T.df(x));
                if (slope > 0.0) {
                    total += p_g.interp(x) / slope;
                    ++count;
                }
            }
            const double q = count == 0 ? 0.0 : combine(total, static_cast<double>(count));
            const double den = p_data.weights[j] + q;
            D.d[j] = den > 0.0 ? clamp01(p_data.weights[j] / den) : 0.5;
        }
        return D;
    };
    rep.d_average = make_grid([](double total, double n) { return total / n; });
    rep.d_sum = make_grid([](double total, double) { return total; });
    rep.d_bruteforce = brute_force_optimal_D(p_data, p_g, T);

    rep.value_average = value_functional(p_data, p_g, T, rep.d_average);
    rep.value_sum = value_functional(p_data, p_g, T, rep.d_sum);
    {
        DiscriminatorGrid bf = rep.d_bruteforce;
        bf.clamp();
        rep.value_bruteforce = value_functional(p_data, p_g, T, bf);
    }
    for (std::size_t j = 0; j < p_data.m; ++j) {
        rep.max_dev_avg_vs_bf = std::max(
            rep.max_dev_avg_vs_bf, std::fabs(rep.d_average.d[j] - rep.d_bruteforce.d[j]));
        rep.max_dev_sum_vs_bf = std::max(
            rep.max_dev_sum_vs_bf, std::fabs(rep.d_sum.d[j] - rep.d_bruteforce.d[j]));
        rep.max_dev_avg_vs_sum = std::max(
            rep.max_dev_avg_vs_sum, std::fabs(rep.d_average.d[j] - rep.d_sum.d[j]));
    }
    rep.higher_closed_form = rep.value_average > rep.value_sum ? "average" : "sum";
    return rep;
}

}  // namespace itu::theory
