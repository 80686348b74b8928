#pragma once

#include "gm/core.hpp"

namespace gm {

// Maximum-weight perfect matching on an n x n weight matrix (row-major),
// O(n^3) shortest augmenting paths. Returns assignment[row] = col.
std::vector<int> max_weight_assignment(const Vec& w, int n);

// Optimal value of the assignment returned by max_weight_assignment.
double assignment_value(const Vec& w, int n, const std::vector<int>& assignment);

}  // namespace gm
