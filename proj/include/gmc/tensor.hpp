#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "gmc/common.hpp"

namespace gmc {

// Row-major N-dimensional real array. All values must stay finite;
// check_finite() is called after every layer op during training.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
        data.assign(size_from_shape(shape), 0.0);
    }
    Tensor(std::vector<std::size_t> s, std::vector<double> d)
        : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != size_from_shape(shape))
            throw ParamError("tensor data length does not match shape");
    }

    static std::size_t size_from_shape(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) {
            if (d == 0) throw ParamError("tensor dims must be positive");
            n *= d;
        }
        return n;
    }

    std::size_t size() const { return data.size(); }

    double& at3(std::size_t c, std::size_t r, std::size_t col) {
        return data[(c * shape[1] + r) * shape[2] + col];
    }
    double at3(std::size_t c, std::size_t r, std::size_t col) const {
        return data[(c * shape[1] + r) * shape[2] + col];
    }

    void check_finite(const char* where) const {
        for (double v : data)
            if (!std::isfinite(v))
                throw std::runtime_error(std::string("non-finite value in ") + where);
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

} // namespace gmc
