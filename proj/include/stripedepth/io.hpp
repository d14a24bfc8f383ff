#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "stripedepth/heatsim.hpp"
#include "stripedepth/model.hpp"
#include "stripedepth/reconstruct.hpp"
#include "stripedepth/training.hpp"

namespace stripedepth::io {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Configuration documents. Every field is optional; unknown keys are errors.

struct SimConfig {
    heatsim::SpecimenSpec specimen{};
    heatsim::ExcitationSpec excitation{};
    heatsim::CameraSpec camera{};
    heatsim::GenerationOptions generation{};
};

SimConfig parse_sim_config(const Json& doc);
Json to_json(const SimConfig& cfg);

struct TrainRunConfig {
    training::TrainConfig training{};
    model::ModelConfig model{};
};

TrainRunConfig parse_train_config(const Json& doc);
Json to_json(const training::TrainConfig& cfg);
Json to_json(const model::ModelConfig& cfg);
Json to_json(const reconstruct::PipelineOptions& opts);
training::TrainConfig parse_training(const Json& doc);
model::ModelConfig parse_model(const Json& doc);
reconstruct::PipelineOptions parse_pipeline(const Json& doc);

/// Reads a whole JSON file; ConfigError for malformed content, IoError when
/// the file cannot be read.
Json read_json(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);
std::string dump(const Json& doc);

/// Creates `dir` (one level). A missing parent is an IoError naming the path.
void ensure_output_dir(const fs::path& dir);

// ---------------------------------------------------------------------------
// Digests

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const fs::path& path);

// ---------------------------------------------------------------------------
// Curves

/// `frame_index,value`, one row per frame.
std::string curve_csv(const heatsim::PixelCurve& curve);
heatsim::PixelCurve parse_curve_csv(const std::string& text, double frame_rate);

/// `<depth_um>_<pixel_idx>` with depth rounded to whole micrometres.
std::string sample_stem(double depth_m, std::size_t pixel_index);

/// Writes curves/<stem>.csv plus manifest.json under `dir`. Returns the
/// manifest document.
Json write_dataset(const fs::path& dir, const heatsim::Dataset& ds, const SimConfig& cfg);

/// Loads curves and labels back from a directory written by write_dataset.
heatsim::Dataset read_dataset(const fs::path& dir);

// ---------------------------------------------------------------------------
// Prepared stripe images

struct PreparedEntry {
    std::string file;  // relative to the dataset directory
    double depth_m = 0.0;
    std::size_t depth_index = 0;
    std::size_t pixel_index = 0;
};

struct PreparedDataset {
    reconstruct::PipelineOptions pipeline;
    std::vector<double> depths_m;
    std::vector<PreparedEntry> entries;
};

PreparedDataset read_prepared_manifest(const fs::path& dir);

/// Samples in manifest order, targets in mm.
std::vector<model::Sample> load_prepared_samples(const fs::path& dir, const PreparedDataset& ds);

// ---------------------------------------------------------------------------
// Checkpoints and histories

struct Checkpoint {
    model::ModelConfig model;
    training::TrainConfig training;
    reconstruct::PipelineOptions pipeline;
    ParamSet params;
    std::size_t best_epoch = 0;
};

Json checkpoint_json(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const Json& doc);

/// `epoch,train_loss,val_loss,lr`.
std::string loss_history_csv(const training::LossHistory& history);

// ---------------------------------------------------------------------------
// Run manifests

/// Lists every produced file with its digest. `created_at` is the only
/// field that differs between otherwise identical runs.
class RunManifest {
public:
    RunManifest(std::string command, Json config, std::uint64_t seed);

    void add_input(const fs::path& path, const fs::path& base);
    void add_output(const fs::path& path, const fs::path& base);
    void write(const fs::path& path) const;
    const Json& doc() const noexcept { return doc_; }

private:
    Json doc_;
};

}  // namespace stripedepth::io
