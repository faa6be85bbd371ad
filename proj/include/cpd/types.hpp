#pragma once

#include <array>

#include <Eigen/Dense>

namespace cpd {

// Chart dimension is a runtime value but bounded, so every small vector and
// matrix below lives on the stack.
inline constexpr int kMaxDim = 8;

using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

// Chart coordinates (x1, ..., x_{n-1}, t); the last coordinate is timelike.
using Coordinates = Vector;
using Tangent = Vector;

inline int time_index(int dimension) { return dimension - 1; }

// Γ^a_bc stored densely, a-major.
class Christoffel {
 public:
  Christoffel() = default;
  explicit Christoffel(int n) : n_(n) { data_.fill(0.0); }

  int dimension() const { return n_; }
  double& operator()(int a, int b, int c) { return data_[(a * kMaxDim + b) * kMaxDim + c]; }
  double operator()(int a, int b, int c) const { return data_[(a * kMaxDim + b) * kMaxDim + c]; }

  // Γ^a_bc v^b w^c
  Vector contract(const Tangent& v, const Tangent& w) const {
    Vector out = Vector::Zero(n_);
    for (int a = 0; a < n_; ++a) {
      double acc = 0.0;
      for (int b = 0; b < n_; ++b) {
        if (v[b] == 0.0) continue;
        for (int c = 0; c < n_; ++c) acc += (*this)(a, b, c) * v[b] * w[c];
      }
      out[a] = acc;
    }
    return out;
  }

 private:
  int n_ = 0;
  std::array<double, kMaxDim * kMaxDim * kMaxDim> data_{};
};

}  // namespace cpd
