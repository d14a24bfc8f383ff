#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace stripedepth::heatsim {

/// Thermophysical properties of the specimen material (SI units).
/// Defaults are mid-range values for printed PLA.
struct MaterialProps {
    double conductivity = 0.19;     // W/(m K)
    double specific_heat = 1900.0;  // J/(kg K)
    double density = 1225.0;        // kg/m^3
    double emissivity = 0.92;

    void validate() const;
};

/// Nine flat-bottom-hole depths, 0.24 mm to 1.52 mm in 0.16 mm steps.
std::vector<double> default_defect_depths();

struct SpecimenSpec {
    double thickness = 5e-3;  // m
    double lateral_size = 90e-3;  // m, metadata only
    std::vector<double> defect_depths = default_defect_depths();  // m
    double defect_radius = 8e-3;  // m, metadata only
    MaterialProps material{};

    void validate() const;
    double min_depth() const;
};

struct ExcitationSpec {
    double pulse_duration = 30.0;   // s
    double absorbed_flux = 2000.0;  // W/m^2
    double ambient_temp = 298.15;   // K
    double convection_coeff = 10.0; // W/(m^2 K)
    double record_duration = 220.0; // s
    double frame_rate = 50.0;       // Hz

    void validate() const;
    /// round(record_duration * frame_rate)
    std::size_t frame_count() const;
};

/// Linear temperature-to-grayscale map of the virtual camera.
struct Calibration {
    double min = 0.0;  // K, maps to level 0
    double max = 0.0;  // K, maps to level 255
};

struct CameraSpec {
    double netd_sigma = 0.035;  // K
    int bit_depth = 8;
    /// Unset means "derive from the dataset" (see compute_calibration).
    std::optional<Calibration> calibration;

    void validate() const;
    double max_level() const { return static_cast<double>((1 << bit_depth) - 1); }
};

/// Spatial step and time step of the explicit solver. `dt` is snapped down
/// onto an integer number of sub-steps per camera frame.
struct GridParams {
    double dx = 0.0;  // m
    double dt = 0.0;  // s
};

/// Front-surface temperature per frame, before quantization.
struct TemperatureCurve {
    std::vector<double> samples;  // K
    double frame_rate = 0.0;      // Hz
};

/// One pixel's grayscale time series G(n).
struct PixelCurve {
    std::vector<double> values;  // levels in [0, 255]
    double frame_rate = 0.0;     // Hz
    std::optional<double> label_depth;  // m, absent for sound pixels
};

/// alpha = k / (rho c_p), m^2/s.
double thermal_diffusivity(const MaterialProps& m);

/// Default grid: dx = min(depth)/40, dt = 0.4 dx^2/alpha snapped to divide
/// the frame period.
GridParams default_grid(const SpecimenSpec& spec, const ExcitationSpec& exc);

/// Explicit FTCS solution of 1-D transient conduction for one pixel.
///
/// A defect pixel is a slab of thickness `depth` with an insulated back face
/// (flat-bottom hole); a sound pixel (`depth` empty) is the full specimen with
/// a convective back face. The front face absorbs `absorbed_flux` during the
/// pulse and loses h (T - T_inf) at all times. Boundary nodes use half-cell
/// control volumes, so the scheme conserves energy exactly up to round-off.
///
/// Throws StabilityViolation when alpha dt / dx^2 > 0.5 and InvalidDepth when
/// depth is outside (0, thickness).
TemperatureCurve simulate_pixel(const SpecimenSpec& spec, const ExcitationSpec& exc,
                                std::optional<double> depth, const GridParams& grid);

/// Same as simulate_pixel, but also returns the final nodal temperature
/// profile and the node spacing actually used. Used for energy accounting.
struct SlabState {
    std::vector<double> temperatures;  // K, front to back
    double dx = 0.0;
};
TemperatureCurve simulate_pixel(const SpecimenSpec& spec, const ExcitationSpec& exc,
                                std::optional<double> depth, const GridParams& grid,
                                SlabState* final_state);

/// Internal energy above ambient per unit area, J/m^2 (trapezoid weights,
/// consistent with the half-cell boundary volumes).
double stored_energy(const SlabState& state, const MaterialProps& m, double ambient_temp);

/// Adds N(0, netd_sigma) noise in the temperature domain, maps linearly onto
/// [0, 255], rounds half away from zero and clamps.
PixelCurve quantize_curve(const TemperatureCurve& t, const CameraSpec& cam,
                          std::uint64_t rng_seed);

/// Noiseless sound run and shallowest-defect run, range padded by 5% on both
/// sides.
Calibration compute_calibration(const SpecimenSpec& spec, const ExcitationSpec& exc,
                                const GridParams& grid);

struct PeakContrast {
    double value = 0.0;  // K
    double time = 0.0;   // s
    std::size_t frame = 0;
};

/// Maximum of (defect - sound) over the record. Ties resolve to the earliest
/// frame.
PeakContrast peak_contrast(const TemperatureCurve& defect, const TemperatureCurve& sound);

struct LabeledCurve {
    PixelCurve curve;
    std::size_t depth_index = 0;
    std::size_t pixel_index = 0;
    std::uint64_t seed = 0;
    double flux_scale = 1.0;  // absorbed flux multiplier applied to this pixel
};

struct Dataset {
    std::vector<LabeledCurve> curves;  // depth-major, then pixel index
    Calibration calibration;
    std::vector<double> depths;  // m, copy of spec.defect_depths
};

struct GenerationOptions {
    std::size_t pixels_per_depth = 197;
    std::uint64_t master_seed = 0;
    double flux_jitter = 0.02;  // uniform +/- fraction of absorbed flux
    std::optional<GridParams> grid;  // default_grid when empty
};

/// Labeled curves for every configured depth. Each pixel draws its flux
/// jitter and camera noise from a stream seeded by (master_seed, depth index,
/// pixel index), so the result does not depend on evaluation order.
Dataset generate_dataset(const SpecimenSpec& spec, const ExcitationSpec& exc,
                         const CameraSpec& cam, const GenerationOptions& opts);

}  // namespace stripedepth::heatsim
