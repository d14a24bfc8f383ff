#include "stripedepth/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "stripedepth/errors.hpp"

namespace stripedepth {

std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)), data(element_count(shape), 0.0) {}

Tensor& ParamSet::add(std::string name, std::vector<std::size_t> shape) {
    if (find(name)) throw ShapeMismatch("duplicate parameter name " + name);
    entries_.push_back(Entry{std::move(name), Tensor(std::move(shape))});
    return entries_.back().tensor;
}

const ParamSet::Entry* ParamSet::find(std::string_view name) const noexcept {
    for (const auto& e : entries_) {
        if (e.name == name) return &e;
    }
    return nullptr;
}

Tensor& ParamSet::at(std::string_view name) {
    return const_cast<Tensor&>(std::as_const(*this).at(name));
}

const Tensor& ParamSet::at(std::string_view name) const {
    const Entry* e = find(name);
    if (!e) throw ShapeMismatch("unknown parameter " + std::string(name));
    return e->tensor;
}

bool ParamSet::contains(std::string_view name) const noexcept { return find(name) != nullptr; }

ParamSet ParamSet::zeros_like() const {
    ParamSet out;
    for (const auto& e : entries_) out.add(e.name, e.tensor.shape);
    return out;
}

std::size_t ParamSet::total_size() const noexcept {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.tensor.size();
    return n;
}

bool ParamSet::same_layout(const ParamSet& other) const noexcept {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name != other.entries_[i].name ||
            entries_[i].tensor.shape != other.entries_[i].tensor.shape) {
            return false;
        }
    }
    return true;
}

bool ParamSet::all_finite() const noexcept {
    for (const auto& e : entries_) {
        for (double v : e.tensor.data) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

double ParamSet::global_norm() const noexcept {
    double sq = 0.0;
    for (const auto& e : entries_) {
        for (double v : e.tensor.data) sq += v * v;
    }
    return std::sqrt(sq);
}

bool operator==(const ParamSet& a, const ParamSet& b) {
    if (!a.same_layout(b)) return false;
    for (std::size_t i = 0; i < a.entries_.size(); ++i) {
        if (a.entries_[i].tensor.data != b.entries_[i].tensor.data) return false;
    }
    return true;
}

}  // namespace stripedepth
