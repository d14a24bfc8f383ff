#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "stripedepth/model.hpp"

namespace testing_support {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("stripedepth_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline stripedepth::model::ModelInput random_input(std::size_t side, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    stripedepth::model::ModelInput in;
    in.side = side;
    in.values.resize(side * side);
    for (double& v : in.values) v = u(rng);
    return in;
}

inline stripedepth::model::ModelConfig small_config(bool rrh = true) {
    stripedepth::model::ModelConfig cfg;
    cfg.input_side = 16;
    cfg.use_rrh = rrh;
    return cfg;
}

}  // namespace testing_support
