#pragma once

#include <string>
#include <vector>

#include "cpd/manifold.hpp"

namespace cpd {

// Flat metric diag(1, ..., 1, -1) on all of R^n.
MetricModel minkowski(int dimension = 4);

// Flat metric restricted to t > 0.
MetricModel minkowski_halfspace(int dimension = 4);

// t^{2a} sum dx_i^2 - dt^2 on t > 0, with exact connection and Ricci tensor.
MetricModel frw_power(double exponent, int dimension = 4);

// Einstein-de Sitter: frw_power with a = 2/3.
MetricModel einstein_de_sitter(int dimension = 4);

// Diagonal metric from coefficient expressions g_00 ... g_{n-1,n-1}. The
// domain is all of R^n unless a domain expression is given, in which case a
// point is inside iff the expression evaluates to a finite value > 0.
MetricModel custom_diagonal(int dimension, const std::vector<std::string>& coefficients,
                            const std::string& domain_expression = {});

// Einstein-de Sitter rescaled by t^{-4/3}: the pullback of the flat half-space
// metric through (x, t) -> (x, 3 t^{1/3}).
ConformalModel eds_flat_pullback(int dimension = 4);

}  // namespace cpd
