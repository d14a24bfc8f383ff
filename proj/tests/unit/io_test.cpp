#include <gtest/gtest.h>

#include <fstream>

#include "stripedepth/errors.hpp"
#include "stripedepth/io.hpp"
#include "support.hpp"

using namespace stripedepth;
using namespace stripedepth::io;
using testing_support::TempDir;

TEST(Digest, KnownVectors) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(SimConfig, EmptyDocumentGivesDefaults) {
    const SimConfig cfg = parse_sim_config(Json::object());
    EXPECT_EQ(cfg.generation.pixels_per_depth, 197u);
    EXPECT_EQ(cfg.specimen.defect_depths.size(), 9u);
    EXPECT_EQ(cfg.excitation.frame_rate, 50.0);
    EXPECT_FALSE(cfg.camera.calibration.has_value());
}

TEST(SimConfig, OverridesAndRoundTrip) {
    const Json doc = Json::parse(R"({
        "material": {"conductivity": 0.2},
        "excitation": {"record_duration": 100},
        "camera": {"calib_min": 290, "calib_max": 400},
        "dataset": {"pixels_per_depth": 3, "seed": 9}
    })");
    const SimConfig cfg = parse_sim_config(doc);
    EXPECT_EQ(cfg.specimen.material.conductivity, 0.2);
    EXPECT_EQ(cfg.excitation.record_duration, 100.0);
    ASSERT_TRUE(cfg.camera.calibration.has_value());
    EXPECT_EQ(cfg.camera.calibration->max, 400.0);
    EXPECT_EQ(cfg.generation.master_seed, 9u);
    const SimConfig again = parse_sim_config(to_json(cfg));
    EXPECT_EQ(to_json(again), to_json(cfg));
}

TEST(SimConfig, ErrorsNameTheField) {
    try {
        parse_sim_config(Json::parse(R"({"excitation": {"flux": 3}})"));
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("excitation.flux"), std::string::npos);
    }
    try {
        parse_sim_config(Json::parse(R"({"camera": {"netd_sigma": "high"}})"));
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("camera.netd_sigma"), std::string::npos);
    }
    EXPECT_THROW(parse_sim_config(Json::parse(R"({"dataset": {"pixels_per_depth": -2}})")), ConfigError);
    EXPECT_THROW(parse_sim_config(Json::parse(R"({"camera": {"calib_min": 1}})")), ConfigError);
    EXPECT_THROW(parse_sim_config(Json::parse(R"([1, 2])")), ConfigError);
}

TEST(TrainConfig, ParsesNestedSections) {
    const Json doc = Json::parse(R"({
        "training": {"lr": 0.01, "epochs": 7, "scheduler": {"patience": 3}, "split": {"train": 0.8, "val": 0.1, "test": 0.1}},
        "model": {"dropout": 0.1, "use_rrh": false, "channels": [8, 16, 32]}
    })");
    const TrainRunConfig cfg = parse_train_config(doc);
    EXPECT_EQ(cfg.training.lr, 0.01);
    EXPECT_EQ(cfg.training.epochs, 7u);
    EXPECT_EQ(cfg.training.scheduler.patience, 3u);
    EXPECT_EQ(cfg.training.split.train, 0.8);
    EXPECT_EQ(cfg.model.dropout, 0.1);
    EXPECT_FALSE(cfg.model.use_rrh);
    EXPECT_EQ(cfg.model.channels[2], 32u);
    EXPECT_THROW(parse_train_config(Json::parse(R"({"optimizer": {}})")), ConfigError);
    EXPECT_THROW(parse_train_config(Json::parse(R"({"model": {"channels": [1, 2]}})")), ConfigError);
}

TEST(Curves, CsvRoundTrip) {
    heatsim::PixelCurve c;
    c.values = {0, 17, 255, 128};
    const std::string text = curve_csv(c);
    EXPECT_EQ(text, "frame_index,value\n0,0\n1,17\n2,255\n3,128\n");
    const heatsim::PixelCurve back = parse_curve_csv(text, 50.0);
    EXPECT_EQ(back.values, c.values);
    EXPECT_EQ(back.frame_rate, 50.0);
    EXPECT_THROW(parse_curve_csv("value\n1\n", 50.0), IoError);
    EXPECT_THROW(parse_curve_csv("frame_index,value\n1,3\n", 50.0), IoError);
}

TEST(Curves, StemUsesWholeMicrometres) {
    EXPECT_EQ(sample_stem(0.24e-3, 0), "240_0");
    EXPECT_EQ(sample_stem(1.52e-3, 196), "1520_196");
}

TEST(Dataset, WriteReadRoundTripAndTamperDetection) {
    TempDir tmp("dataset");
    SimConfig cfg;
    cfg.excitation.record_duration = 35.0;
    cfg.generation.pixels_per_depth = 2;
    const heatsim::Dataset ds =
        heatsim::generate_dataset(cfg.specimen, cfg.excitation, cfg.camera, cfg.generation);
    const auto dir = tmp.path() / "sim";
    write_dataset(dir, ds, cfg);
    EXPECT_TRUE(std::filesystem::exists(dir / "curves" / "240_1.csv"));

    const heatsim::Dataset back = read_dataset(dir);
    ASSERT_EQ(back.curves.size(), ds.curves.size());
    for (std::size_t i = 0; i < ds.curves.size(); ++i) {
        EXPECT_EQ(back.curves[i].curve.values, ds.curves[i].curve.values);
        EXPECT_EQ(back.curves[i].curve.label_depth, ds.curves[i].curve.label_depth);
        EXPECT_EQ(back.curves[i].seed, ds.curves[i].seed);
    }
    EXPECT_EQ(back.calibration.min, ds.calibration.min);

    std::ofstream(dir / "curves" / "240_1.csv", std::ios::app) << "250,1\n";
    EXPECT_THROW(read_dataset(dir), IoError);
}

TEST(OutputDir, MissingParentIsIoError) {
    TempDir tmp("outdir");
    EXPECT_NO_THROW(ensure_output_dir(tmp.path() / "a"));
    EXPECT_NO_THROW(ensure_output_dir(tmp.path() / "a"));
    try {
        ensure_output_dir(tmp.path() / "missing" / "b");
        FAIL();
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("missing"), std::string::npos);
    }
}

TEST(Checkpoint, RoundTripPreservesEverything) {
    Checkpoint c;
    c.model.input_side = 16;
    c.model.use_rrh = false;
    c.training.seed = 77;
    c.pipeline.input_size = 16;
    c.params = model::Model(c.model).init_params(5, 0.9);
    c.best_epoch = 12;
    const Json doc = checkpoint_json(c);
    EXPECT_EQ(doc.at("format_version"), kFormatVersion);
    const Checkpoint back = parse_checkpoint(Json::parse(doc.dump()));
    EXPECT_TRUE(back.params == c.params);
    EXPECT_EQ(back.training.seed, 77u);
    EXPECT_EQ(back.best_epoch, 12u);
    EXPECT_FALSE(back.model.use_rrh);
    EXPECT_EQ(to_json(back.pipeline), to_json(c.pipeline));
}

TEST(Checkpoint, ShapeMismatchIsRejected) {
    Checkpoint c;
    c.model.input_side = 16;
    c.params = model::Model(c.model).init_params(0);
    Json doc = checkpoint_json(c);
    doc["params"]["head.fc1.bias"]["shape"] = Json::array({3});
    EXPECT_THROW(parse_checkpoint(doc), ConfigError);
    doc = checkpoint_json(c);
    doc["kind"] = "curves";
    EXPECT_THROW(parse_checkpoint(doc), ConfigError);
}

TEST(History, CsvLayout) {
    training::LossHistory h{{1, 0.5, 0.25, 1e-3}, {2, 0.4, 0.2, 5e-4}};
    EXPECT_EQ(loss_history_csv(h), "epoch,train_loss,val_loss,lr\n1,0.5,0.25,0.001\n2,0.4,0.2,0.0005\n");
    EXPECT_EQ(loss_history_csv({}), "epoch,train_loss,val_loss,lr\n");
}

TEST(RunManifest, ListsOutputsWithDigests) {
    TempDir tmp("manifest");
    write_text(tmp.path() / "a.txt", "abc");
    RunManifest m("simulate", Json{{"k", 1}}, 3);
    m.add_output(tmp.path() / "a.txt", tmp.path());
    const Json& d = m.doc();
    EXPECT_EQ(d.at("outputs")[0].at("path"), "a.txt");
    EXPECT_EQ(d.at("outputs")[0].at("sha256"),
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(d.at("tool_version"), kToolVersion);
    EXPECT_TRUE(d.contains("created_at"));
}

TEST(ReadJson, MalformedIsConfigErrorMissingIsIoError) {
    TempDir tmp("json");
    write_text(tmp.path() / "bad.json", "{ nope");
    EXPECT_THROW(read_json(tmp.path() / "bad.json"), ConfigError);
    EXPECT_THROW(read_json(tmp.path() / "absent.json"), IoError);
}
