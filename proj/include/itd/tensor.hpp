#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "itd/error.hpp"

namespace itd {

struct ShapeMismatch : Error {
    using Error::Error;
};

// Dense NCHW tensor of doubles.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_),
          v(static_cast<std::size_t>(n_) * static_cast<std::size_t>(c_) *
            static_cast<std::size_t>(h_) * static_cast<std::size_t>(w_), 0.0) {}

    std::size_t size() const { return v.size(); }
    double* data() { return v.data(); }
    const double* data() const { return v.data(); }

    double& at(int i, int j, int y, int x) {
        return v[((static_cast<std::size_t>(i) * c + j) * h + y) * w + x];
    }
    double at(int i, int j, int y, int x) const {
        return v[((static_cast<std::size_t>(i) * c + j) * h + y) * w + x];
    }

    // pointer to sample i, channel j
    double* plane(int i, int j) { return v.data() + ((static_cast<std::size_t>(i) * c + j) * h) * w; }
    const double* plane(int i, int j) const {
        return v.data() + ((static_cast<std::size_t>(i) * c + j) * h) * w;
    }

    std::string shape_string() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
               std::to_string(w) + ")";
    }
};

}  // namespace itd
