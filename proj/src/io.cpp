#include "stripedepth/io.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "stripedepth/errors.hpp"
#include "stripedepth/pgm.hpp"

namespace stripedepth::io {
namespace {

/// Reads typed fields from one JSON object and rejects unknown keys.
class ObjectReader {
public:
    ObjectReader(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError(path_ + " must be a JSON object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        const auto it = obj_.find(key);
        if (it == obj_.end()) return;
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!it->is_number()) throw ConfigError("");
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!it->is_boolean()) throw ConfigError("");
            } else if constexpr (std::is_integral_v<T>) {
                if (!it->is_number_unsigned() && !(it->is_number_integer() && it->template get<long long>() >= 0)) {
                    throw ConfigError("");
                }
            }
            out = it->template get<T>();
        } catch (const std::exception&) {
            throw ConfigError(field(key) + " has an invalid value");
        }
    }

    std::optional<ObjectReader> child(const char* key) {
        seen_.insert(key);
        const auto it = obj_.find(key);
        if (it == obj_.end()) return std::nullopt;
        return ObjectReader(*it, field(key));
    }

    bool has(const char* key) const { return obj_.contains(key); }

    void finish() const {
        for (const auto& [k, v] : obj_.items()) {
            if (!seen_.count(k)) throw ConfigError("unknown field " + field(k.c_str()));
        }
    }

    std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    const Json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

std::string iso_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------

SimConfig parse_sim_config(const Json& doc) {
    SimConfig cfg;
    ObjectReader root(doc, "");
    if (auto m = root.child("material")) {
        auto& mat = cfg.specimen.material;
        m->get("conductivity", mat.conductivity);
        m->get("specific_heat", mat.specific_heat);
        m->get("density", mat.density);
        m->get("emissivity", mat.emissivity);
        m->finish();
    }
    if (auto s = root.child("specimen")) {
        s->get("thickness", cfg.specimen.thickness);
        s->get("lateral_size", cfg.specimen.lateral_size);
        s->get("defect_depths", cfg.specimen.defect_depths);
        s->get("defect_radius", cfg.specimen.defect_radius);
        s->finish();
    }
    if (auto e = root.child("excitation")) {
        auto& x = cfg.excitation;
        e->get("pulse_duration", x.pulse_duration);
        e->get("absorbed_flux", x.absorbed_flux);
        e->get("ambient_temp", x.ambient_temp);
        e->get("convection_coeff", x.convection_coeff);
        e->get("record_duration", x.record_duration);
        e->get("frame_rate", x.frame_rate);
        e->finish();
    }
    if (auto c = root.child("camera")) {
        c->get("netd_sigma", cfg.camera.netd_sigma);
        c->get("bit_depth", cfg.camera.bit_depth);
        if (c->has("calib_min") != c->has("calib_max")) {
            throw ConfigError("camera.calib_min and camera.calib_max must be given together");
        }
        if (c->has("calib_min")) {
            heatsim::Calibration cal;
            c->get("calib_min", cal.min);
            c->get("calib_max", cal.max);
            cfg.camera.calibration = cal;
        } else {
            double ignored = 0.0;
            c->get("calib_min", ignored);
            c->get("calib_max", ignored);
        }
        c->finish();
    }
    if (auto d = root.child("dataset")) {
        d->get("pixels_per_depth", cfg.generation.pixels_per_depth);
        d->get("flux_jitter", cfg.generation.flux_jitter);
        d->get("seed", cfg.generation.master_seed);
        d->finish();
    }
    root.finish();
    return cfg;
}

Json to_json(const SimConfig& cfg) {
    const auto& m = cfg.specimen.material;
    const auto& s = cfg.specimen;
    const auto& e = cfg.excitation;
    Json camera = {{"netd_sigma", cfg.camera.netd_sigma}, {"bit_depth", cfg.camera.bit_depth}};
    if (cfg.camera.calibration) {
        camera["calib_min"] = cfg.camera.calibration->min;
        camera["calib_max"] = cfg.camera.calibration->max;
    }
    return Json{
        {"material",
         {{"conductivity", m.conductivity},
          {"specific_heat", m.specific_heat},
          {"density", m.density},
          {"emissivity", m.emissivity}}},
        {"specimen",
         {{"thickness", s.thickness},
          {"lateral_size", s.lateral_size},
          {"defect_depths", s.defect_depths},
          {"defect_radius", s.defect_radius}}},
        {"excitation",
         {{"pulse_duration", e.pulse_duration},
          {"absorbed_flux", e.absorbed_flux},
          {"ambient_temp", e.ambient_temp},
          {"convection_coeff", e.convection_coeff},
          {"record_duration", e.record_duration},
          {"frame_rate", e.frame_rate}}},
        {"camera", camera},
        {"dataset",
         {{"pixels_per_depth", cfg.generation.pixels_per_depth},
          {"flux_jitter", cfg.generation.flux_jitter},
          {"seed", cfg.generation.master_seed}}},
    };
}

training::TrainConfig parse_training(const Json& doc) {
    training::TrainConfig t;
    ObjectReader r(doc, "training");
    r.get("lambda", t.lambda);
    r.get("lr", t.lr);
    r.get("weight_decay", t.weight_decay);
    r.get("batch_size", t.batch_size);
    r.get("epochs", t.epochs);
    r.get("clip_max_norm", t.clip_max_norm);
    r.get("seed", t.seed);
    if (auto s = r.child("scheduler")) {
        s->get("factor", t.scheduler.factor);
        s->get("patience", t.scheduler.patience);
        s->get("min_improve", t.scheduler.min_improve);
        s->finish();
    }
    if (auto s = r.child("split")) {
        s->get("train", t.split.train);
        s->get("val", t.split.val);
        s->get("test", t.split.test);
        s->finish();
    }
    r.finish();
    return t;
}

model::ModelConfig parse_model(const Json& doc) {
    model::ModelConfig m;
    ObjectReader r(doc, "model");
    r.get("input_size", m.input_side);
    if (r.has("channels")) {
        std::vector<std::size_t> ch;
        r.get("channels", ch);
        if (ch.size() != 3) throw ConfigError("model.channels must list three stage widths");
        std::copy(ch.begin(), ch.end(), m.channels.begin());
    } else {
        std::vector<std::size_t> ignored;
        r.get("channels", ignored);
    }
    r.get("se_reduction", m.se_reduction);
    r.get("head_hidden", m.head_hidden);
    r.get("dropout", m.dropout);
    r.get("use_rrh", m.use_rrh);
    r.finish();
    return m;
}

reconstruct::PipelineOptions parse_pipeline(const Json& doc) {
    reconstruct::PipelineOptions p;
    ObjectReader r(doc, "pipeline");
    r.get("stride", p.stride);
    r.get("target_len", p.target_len);
    r.get("smooth_window", p.smooth_window);
    r.get("poly_degree", p.poly_degree);
    r.get("enhance", p.enhance);
    r.get("input_size", p.input_size);
    r.finish();
    return p;
}

TrainRunConfig parse_train_config(const Json& doc) {
    TrainRunConfig cfg;
    if (!doc.is_object()) throw ConfigError("train config must be a JSON object");
    for (const auto& [k, v] : doc.items()) {
        if (k == "training") {
            cfg.training = parse_training(v);
        } else if (k == "model") {
            cfg.model = parse_model(v);
        } else {
            throw ConfigError("unknown field " + k);
        }
    }
    return cfg;
}

Json to_json(const training::TrainConfig& t) {
    return Json{{"lambda", t.lambda},
                {"lr", t.lr},
                {"weight_decay", t.weight_decay},
                {"batch_size", t.batch_size},
                {"epochs", t.epochs},
                {"clip_max_norm", t.clip_max_norm},
                {"seed", t.seed},
                {"scheduler",
                 {{"factor", t.scheduler.factor},
                  {"patience", t.scheduler.patience},
                  {"min_improve", t.scheduler.min_improve}}},
                {"split", {{"train", t.split.train}, {"val", t.split.val}, {"test", t.split.test}}}};
}

Json to_json(const model::ModelConfig& m) {
    return Json{{"input_size", m.input_side},
                {"channels", std::vector<std::size_t>(m.channels.begin(), m.channels.end())},
                {"se_reduction", m.se_reduction},
                {"head_hidden", m.head_hidden},
                {"dropout", m.dropout},
                {"use_rrh", m.use_rrh}};
}

Json to_json(const reconstruct::PipelineOptions& p) {
    return Json{{"stride", p.stride},           {"target_len", p.target_len},
                {"smooth_window", p.smooth_window}, {"poly_degree", p.poly_degree},
                {"enhance", p.enhance},         {"input_size", p.input_size}};
}

// ---------------------------------------------------------------------------

std::string read_text(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!os) throw IoError("failed writing " + path.string());
}

Json read_json(const fs::path& path) {
    const std::string text = read_text(path);
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(path.string() + ": malformed JSON (" + e.what() + ")");
    }
}

std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

void ensure_output_dir(const fs::path& dir) {
    std::error_code ec;
    if (fs::is_directory(dir, ec)) return;
    const fs::path parent = dir.has_parent_path() ? dir.parent_path() : fs::path(".");
    if (!parent.empty() && !fs::is_directory(parent, ec)) {
        throw IoError("output directory parent does not exist: " + parent.string());
    }
    if (!fs::create_directory(dir, ec) && !fs::is_directory(dir)) {
        throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    }
}

// ---------------------------------------------------------------------------

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw IoError("SHA-256 computation failed");
    }
    std::string hex;
    hex.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_text(path)); }

// ---------------------------------------------------------------------------

std::string curve_csv(const heatsim::PixelCurve& curve) {
    std::string out = "frame_index,value\n";
    for (std::size_t i = 0; i < curve.values.size(); ++i) {
        out += fmt::format("{},{:.10g}\n", i, curve.values[i]);
    }
    return out;
}

heatsim::PixelCurve parse_curve_csv(const std::string& text, double frame_rate) {
    heatsim::PixelCurve c;
    c.frame_rate = frame_rate;
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line.rfind("frame_index,value", 0) != 0) {
        throw IoError("curve CSV must start with the header frame_index,value");
    }
    std::size_t expected = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw IoError("malformed curve CSV row: " + line);
        try {
            if (std::stoul(line.substr(0, comma)) != expected) {
                throw IoError("curve CSV frame indices must be consecutive from 0");
            }
            c.values.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::invalid_argument&) {
            throw IoError("malformed curve CSV row: " + line);
        }
        ++expected;
    }
    return c;
}

std::string sample_stem(double depth_m, std::size_t pixel_index) {
    return fmt::format("{}_{}", std::llround(depth_m * 1e6), pixel_index);
}

Json write_dataset(const fs::path& dir, const heatsim::Dataset& ds, const SimConfig& cfg) {
    const fs::path curves_dir = dir / "curves";
    ensure_output_dir(dir);
    ensure_output_dir(curves_dir);

    Json entries = Json::array();
    double frame_rate = cfg.excitation.frame_rate;
    for (const auto& lc : ds.curves) {
        const double depth = *lc.curve.label_depth;
        const std::string rel = "curves/" + sample_stem(depth, lc.pixel_index) + ".csv";
        const std::string text = curve_csv(lc.curve);
        write_text(dir / rel, text);
        entries.push_back(Json{{"file", rel},
                               {"depth_m", depth},
                               {"depth_index", lc.depth_index},
                               {"pixel_index", lc.pixel_index},
                               {"seed", lc.seed},
                               {"flux_scale", lc.flux_scale},
                               {"sha256", sha256_hex(text)}});
        frame_rate = lc.curve.frame_rate;
    }
    Json manifest{{"format_version", kFormatVersion},
                  {"kind", "curves"},
                  {"tool_version", kToolVersion},
                  {"config", to_json(cfg)},
                  {"master_seed", cfg.generation.master_seed},
                  {"frame_rate", frame_rate},
                  {"depths_m", ds.depths},
                  {"calibration", {{"calib_min", ds.calibration.min}, {"calib_max", ds.calibration.max}}},
                  {"curves", entries}};
    write_text(dir / "manifest.json", dump(manifest));
    return manifest;
}

namespace {

void require_kind(const Json& doc, const char* kind, const fs::path& path) {
    if (!doc.is_object() || doc.value("kind", std::string()) != kind) {
        throw ConfigError(path.string() + ": expected a manifest of kind '" + kind + "'");
    }
    if (doc.value("format_version", 0) != kFormatVersion) {
        throw ConfigError(path.string() + ": unsupported format_version");
    }
}

}  // namespace

heatsim::Dataset read_dataset(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    const Json doc = read_json(manifest_path);
    require_kind(doc, "curves", manifest_path);
    heatsim::Dataset ds;
    try {
        ds.depths = doc.at("depths_m").get<std::vector<double>>();
        ds.calibration.min = doc.at("calibration").at("calib_min").get<double>();
        ds.calibration.max = doc.at("calibration").at("calib_max").get<double>();
        const double frame_rate = doc.at("frame_rate").get<double>();
        for (const auto& e : doc.at("curves")) {
            const std::string rel = e.at("file").get<std::string>();
            const std::string text = read_text(dir / rel);
            if (sha256_hex(text) != e.at("sha256").get<std::string>()) {
                throw IoError((dir / rel).string() + ": digest does not match the manifest");
            }
            heatsim::LabeledCurve lc;
            try {
                lc.curve = parse_curve_csv(text, frame_rate);
            } catch (const IoError& err) {
                throw IoError((dir / rel).string() + ": " + err.what());
            }
            lc.curve.label_depth = e.at("depth_m").get<double>();
            lc.depth_index = e.at("depth_index").get<std::size_t>();
            lc.pixel_index = e.at("pixel_index").get<std::size_t>();
            lc.seed = e.at("seed").get<std::uint64_t>();
            lc.flux_scale = e.at("flux_scale").get<double>();
            ds.curves.push_back(std::move(lc));
        }
    } catch (const Json::exception& e) {
        throw ConfigError(manifest_path.string() + ": " + e.what());
    }
    return ds;
}

PreparedDataset read_prepared_manifest(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    const Json doc = read_json(manifest_path);
    require_kind(doc, "stripes", manifest_path);
    PreparedDataset ds;
    try {
        ds.pipeline = parse_pipeline(doc.at("pipeline"));
        ds.depths_m = doc.at("depths_m").get<std::vector<double>>();
        for (const auto& e : doc.at("images")) {
            ds.entries.push_back(PreparedEntry{e.at("file").get<std::string>(),
                                               e.at("depth_m").get<double>(),
                                               e.at("depth_index").get<std::size_t>(),
                                               e.at("pixel_index").get<std::size_t>()});
        }
    } catch (const Json::exception& e) {
        throw ConfigError(manifest_path.string() + ": " + e.what());
    }
    return ds;
}

std::vector<model::Sample> load_prepared_samples(const fs::path& dir, const PreparedDataset& ds) {
    std::vector<model::Sample> out;
    out.reserve(ds.entries.size());
    for (const auto& e : ds.entries) {
        model::Sample s;
        s.input = reconstruct::normalize(pgm::read(dir / e.file));
        s.target = e.depth_m * 1000.0;
        s.depth_index = e.depth_index;
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------

Json checkpoint_json(const Checkpoint& ckpt) {
    Json params = Json::object();
    for (const auto& e : ckpt.params.entries()) {
        params[e.name] = Json{{"shape", e.tensor.shape}, {"data", e.tensor.data}};
    }
    return Json{{"format_version", kFormatVersion},
                {"kind", "checkpoint"},
                {"tool_version", kToolVersion},
                {"seed", ckpt.training.seed},
                {"best_epoch", ckpt.best_epoch},
                {"model", to_json(ckpt.model)},
                {"training", to_json(ckpt.training)},
                {"pipeline", to_json(ckpt.pipeline)},
                {"params", params}};
}

Checkpoint parse_checkpoint(const Json& doc) {
    require_kind(doc, "checkpoint", "checkpoint");
    Checkpoint c;
    try {
        c.model = parse_model(doc.at("model"));
        c.training = parse_training(doc.at("training"));
        c.pipeline = parse_pipeline(doc.at("pipeline"));
        c.best_epoch = doc.value("best_epoch", std::size_t{0});
        const model::Model m(c.model);
        c.params = m.init_params(0);
        const Json& params = doc.at("params");
        if (params.size() != c.params.entries().size()) {
            throw ConfigError("checkpoint parameter count does not match the model");
        }
        for (auto& e : c.params.entries()) {
            const Json& p = params.at(e.name);
            if (p.at("shape").get<std::vector<std::size_t>>() != e.tensor.shape) {
                throw ConfigError("checkpoint shape mismatch for " + e.name);
            }
            auto data = p.at("data").get<std::vector<double>>();
            if (data.size() != e.tensor.size()) throw ConfigError("checkpoint size mismatch for " + e.name);
            e.tensor.data = std::move(data);
        }
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("malformed checkpoint: ") + e.what());
    }
    return c;
}

std::string loss_history_csv(const training::LossHistory& history) {
    std::string out = "epoch,train_loss,val_loss,lr\n";
    for (const auto& r : history) {
        out += fmt::format("{},{:.12g},{:.12g},{:.12g}\n", r.epoch, r.train_loss, r.val_loss, r.lr);
    }
    return out;
}

// ---------------------------------------------------------------------------

RunManifest::RunManifest(std::string command, Json config, std::uint64_t seed) {
    doc_ = Json{{"format_version", kFormatVersion},
                {"kind", "run"},
                {"tool_version", kToolVersion},
                {"command", std::move(command)},
                {"seed", seed},
                {"config", std::move(config)},
                {"inputs", Json::array()},
                {"outputs", Json::array()},
                {"created_at", iso_timestamp()}};
}

void RunManifest::add_input(const fs::path& path, const fs::path& base) {
    doc_["inputs"].push_back(
        Json{{"path", fs::relative(path, base).generic_string()}, {"sha256", sha256_file(path)}});
}

void RunManifest::add_output(const fs::path& path, const fs::path& base) {
    doc_["outputs"].push_back(
        Json{{"path", fs::relative(path, base).generic_string()}, {"sha256", sha256_file(path)}});
}

void RunManifest::write(const fs::path& path) const { write_text(path, dump(doc_)); }

}  // namespace stripedepth::io
