#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "itu/theory.hpp"

namespace itu::theory {

// One toleranced result from the standard verification suite.
struct TheoryCheck {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool greater_is_pass = false;  // false: pass when value < threshold
    bool pass = false;
    std::string detail;
};

// The full battery: optimal-discriminator formula vs brute-force oracle for
// identity/tanh/arctan, the -log 4 optimum for several (p_g, T) pairs with a
// perturbation probe, the non-surjective (sigmoid) and non-injective (abs)
// conjecture experiments, maximality probes and a grid-refinement check.
//
// Quadrature-limited tolerances are stated at m = 256 and relaxed by
// (256/m)^2 for coarser grids.
std::vector<TheoryCheck> run_standard_checks(std::size_t m = 256);

bool all_pass(const std::vector<TheoryCheck>& checks);
std::string checks_csv(const std::vector<TheoryCheck>& checks);
std::string checks_text(const std::vector<TheoryCheck>& checks);

// Shared test configurations so independent harnesses probe the same setups.
// Boundaries are chosen so T's range endpoints land on grid-cell edges of the
// dyadic data grid, keeping quadrature error free of O(1) boundary-cell terms.
DiscreteDensity1D standard_p_data(std::size_t m);                 // trunc. Gaussian on [-1,1]
DiscreteDensity1D standard_p_g(const Map1D& T, std::size_t m);    // uniform, range-aligned

}  // namespace itu::theory
