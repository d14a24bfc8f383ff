#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace stripedepth {

/// Dense row-major array of doubles.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s);

    std::size_t size() const noexcept { return data.size(); }
    double* ptr() noexcept { return data.data(); }
    const double* ptr() const noexcept { return data.data(); }
};

std::size_t element_count(const std::vector<std::size_t>& shape);

/// Ordered collection of named tensors. Iteration order is insertion order,
/// which fixes the layout seen by the optimizer and the checkpoint writer.
class ParamSet {
public:
    struct Entry {
        std::string name;
        Tensor tensor;
    };

    Tensor& add(std::string name, std::vector<std::size_t> shape);

    Tensor& at(std::string_view name);
    const Tensor& at(std::string_view name) const;
    bool contains(std::string_view name) const noexcept;

    std::vector<Entry>& entries() noexcept { return entries_; }
    const std::vector<Entry>& entries() const noexcept { return entries_; }

    /// Same names and shapes, all zeros.
    ParamSet zeros_like() const;
    std::size_t total_size() const noexcept;
    bool same_layout(const ParamSet& other) const noexcept;
    bool all_finite() const noexcept;

    /// Global L2 norm over every element.
    double global_norm() const noexcept;

    friend bool operator==(const ParamSet& a, const ParamSet& b);

private:
    const Entry* find(std::string_view name) const noexcept;

    std::vector<Entry> entries_;
};

}  // namespace stripedepth
