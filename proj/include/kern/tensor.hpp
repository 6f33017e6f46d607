#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "kern/error.hpp"
#include "kern/rng.hpp"

namespace kern {

inline std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

// Dense row-major tensor. Scalar is float for training, double for
// verification; both instantiations share all code paths.
template <class Scalar>
struct Tensor {
    std::vector<int> shape;
    std::vector<Scalar> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(checked_numel(shape), Scalar(0)) {}
    Tensor(std::vector<int> s, std::vector<Scalar> d) : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != checked_numel(shape)) {
            throw ShapeError("tensor: data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
        }
    }

    static size_t checked_numel(const std::vector<int>& s) {
        size_t n = 1;
        for (int d : s) {
            if (d <= 0) throw ShapeError("tensor: non-positive dim in shape " + shape_str(s));
            n *= static_cast<size_t>(d);
        }
        return n;
    }

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

    static Tensor full(std::vector<int> s, Scalar v) {
        Tensor t(std::move(s));
        for (auto& x : t.data) x = v;
        return t;
    }

    static Tensor identity(int n) {
        Tensor t({n, n});
        for (int i = 0; i < n; ++i) t.data[static_cast<size_t>(i) * n + i] = Scalar(1);
        return t;
    }

    // Uniform +-bound init, one RNG stream per tensor.
    static Tensor uniform_init(std::vector<int> s, Scalar bound, Rng& rng) {
        Tensor t(std::move(s));
        for (auto& x : t.data) x = static_cast<Scalar>(rng.uniform(-double(bound), double(bound)));
        return t;
    }

    size_t numel() const { return data.size(); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }
    int last_dim() const { return shape.back(); }

    // Leading extent = numel / last_dim, i.e. number of rows for row-wise ops.
    size_t rows() const { return numel() / static_cast<size_t>(last_dim()); }

    Scalar& at2(int r, int c) { return data[static_cast<size_t>(r) * shape[1] + c]; }
    Scalar at2(int r, int c) const { return data[static_cast<size_t>(r) * shape[1] + c]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (Scalar v : data) {
            if (!std::isfinite(static_cast<double>(v))) return false;
        }
        return true;
    }
};

template <class Scalar>
void require_same_shape(const Tensor<Scalar>& a, const Tensor<Scalar>& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape) + " vs " +
                         shape_str(b.shape));
    }
}

// Named, ordered parameter arrays. Insertion order is the canonical order for
// gradients, Adam state and checkpoint payloads.
template <class Scalar>
class ParameterStore {
public:
    struct Entry {
        std::string name;
        Tensor<Scalar> value;
    };

    int add(std::string name, Tensor<Scalar> value) {
        for (const auto& e : entries_) {
            if (e.name == name) throw ValidationError("parameter store: duplicate name " + name);
        }
        entries_.push_back({std::move(name), std::move(value)});
        return static_cast<int>(entries_.size()) - 1;
    }

    // Fan-in scaled uniform init (+-1/sqrt(fan_in)).
    int add_uniform(const std::string& name, std::vector<int> shape, int fan_in, Rng& rng) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in > 0 ? fan_in : 1));
        return add(name, Tensor<Scalar>::uniform_init(std::move(shape), static_cast<Scalar>(bound), rng));
    }

    int size() const { return static_cast<int>(entries_.size()); }
    Entry& entry(int i) { return entries_[static_cast<size_t>(i)]; }
    const Entry& entry(int i) const { return entries_[static_cast<size_t>(i)]; }
    Tensor<Scalar>& value(int i) { return entries_[static_cast<size_t>(i)].value; }
    const Tensor<Scalar>& value(int i) const { return entries_[static_cast<size_t>(i)].value; }

    int find(const std::string& name) const {
        for (int i = 0; i < size(); ++i) {
            if (entries_[static_cast<size_t>(i)].name == name) return i;
        }
        return -1;
    }

    size_t scalar_count() const {
        size_t n = 0;
        for (const auto& e : entries_) n += e.value.numel();
        return n;
    }

private:
    std::vector<Entry> entries_;
};

}  // namespace kern
