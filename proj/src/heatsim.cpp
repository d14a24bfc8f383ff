#include "stripedepth/heatsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "stripedepth/errors.hpp"
#include "stripedepth/seeding.hpp"

namespace stripedepth::heatsim {
namespace {

void require_positive(double v, const char* field) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ConfigError(std::string(field) + " must be a positive finite number");
    }
}

}  // namespace

void MaterialProps::validate() const {
    require_positive(conductivity, "material.conductivity");
    require_positive(specific_heat, "material.specific_heat");
    require_positive(density, "material.density");
    require_positive(emissivity, "material.emissivity");
    if (emissivity > 1.0) throw ConfigError("material.emissivity must be <= 1");
}

std::vector<double> default_defect_depths() {
    std::vector<double> d;
    for (int i = 0; i < 9; ++i) d.push_back((0.24 + 0.16 * i) * 1e-3);
    return d;
}

void SpecimenSpec::validate() const {
    material.validate();
    require_positive(thickness, "specimen.thickness");
    require_positive(lateral_size, "specimen.lateral_size");
    require_positive(defect_radius, "specimen.defect_radius");
    if (defect_depths.empty()) throw ConfigError("specimen.defect_depths must not be empty");
    for (double d : defect_depths) {
        if (!(d > 0.0 && d < thickness)) {
            throw InvalidDepth("specimen.defect_depths: depth " + std::to_string(d) +
                               " m is outside (0, thickness)");
        }
    }
}

double SpecimenSpec::min_depth() const {
    return *std::min_element(defect_depths.begin(), defect_depths.end());
}

void ExcitationSpec::validate() const {
    require_positive(pulse_duration, "excitation.pulse_duration");
    require_positive(absorbed_flux, "excitation.absorbed_flux");
    require_positive(ambient_temp, "excitation.ambient_temp");
    require_positive(convection_coeff, "excitation.convection_coeff");
    require_positive(record_duration, "excitation.record_duration");
    require_positive(frame_rate, "excitation.frame_rate");
    if (!(pulse_duration < record_duration)) {
        throw ConfigError("excitation.pulse_duration must be shorter than record_duration");
    }
}

std::size_t ExcitationSpec::frame_count() const {
    return static_cast<std::size_t>(std::llround(record_duration * frame_rate));
}

void CameraSpec::validate() const {
    if (!(netd_sigma >= 0.0) || !std::isfinite(netd_sigma)) {
        throw ConfigError("camera.netd_sigma must be >= 0");
    }
    if (bit_depth != 8) throw ConfigError("camera.bit_depth: only 8-bit output is supported");
    if (calibration && !(calibration->min < calibration->max)) {
        throw CalibrationError("camera calibration requires calib_min < calib_max");
    }
}

double thermal_diffusivity(const MaterialProps& m) {
    return m.conductivity / (m.density * m.specific_heat);
}

GridParams default_grid(const SpecimenSpec& spec, const ExcitationSpec& exc) {
    const double alpha = thermal_diffusivity(spec.material);
    const double dx = spec.min_depth() / 40.0;
    const double dt_max = 0.4 * dx * dx / alpha;
    const double period = 1.0 / exc.frame_rate;
    const double substeps = std::ceil(period / dt_max);
    return GridParams{dx, period / substeps};
}

TemperatureCurve simulate_pixel(const SpecimenSpec& spec, const ExcitationSpec& exc,
                                std::optional<double> depth, const GridParams& grid) {
    return simulate_pixel(spec, exc, depth, grid, nullptr);
}

TemperatureCurve simulate_pixel(const SpecimenSpec& spec, const ExcitationSpec& exc,
                                std::optional<double> depth, const GridParams& grid,
                                SlabState* final_state) {
    spec.material.validate();
    if (!(exc.frame_rate > 0.0) || !(exc.record_duration > 0.0)) {
        throw ConfigError("excitation.frame_rate and record_duration must be positive");
    }
    if (depth && !(*depth > 0.0 && *depth < spec.thickness)) {
        throw InvalidDepth("defect depth " + std::to_string(*depth) +
                           " m is outside (0, " + std::to_string(spec.thickness) + ")");
    }
    if (!(grid.dx > 0.0) || !(grid.dt > 0.0)) {
        throw ConfigError("grid dx and dt must be positive");
    }

    const MaterialProps& m = spec.material;
    const double alpha = thermal_diffusivity(m);
    const double slab = depth.value_or(spec.thickness);
    const std::size_t intervals =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(slab / grid.dx)));
    const double dx = slab / static_cast<double>(intervals);

    const double period = 1.0 / exc.frame_rate;
    const std::size_t substeps =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(period / grid.dt)));
    const double dt = period / static_cast<double>(substeps);

    const double r = alpha * dt / (dx * dx);
    if (r > 0.5) {
        throw StabilityViolation("explicit scheme unstable: alpha*dt/dx^2 = " + std::to_string(r) +
                                 " > 0.5");
    }

    // Work in excess temperature theta = T - T_inf; the boundary terms below
    // are the half-cell energy balances (rho c dx/2) dtheta/dt = flux terms.
    const double boundary_gain = 2.0 * dt / (m.density * m.specific_heat * dx);
    const double h_front = exc.convection_coeff;
    const double h_back = depth ? 0.0 : exc.convection_coeff;
    const std::size_t nodes = intervals + 1;

    std::vector<double> theta(nodes, 0.0);
    std::vector<double> next(nodes, 0.0);

    const std::size_t frames = exc.frame_count();
    TemperatureCurve out;
    out.frame_rate = exc.frame_rate;
    out.samples.reserve(frames);
    if (frames > 0) out.samples.push_back(exc.ambient_temp);

    // Number of time steps during which the pulse is on (flux applied over
    // [t_k, t_k + dt) for t_k < pulse_duration).
    const double pulse_steps_real = exc.pulse_duration / dt;
    const auto pulse_steps = static_cast<std::size_t>(std::ceil(pulse_steps_real - 1e-9));

    std::size_t step = 0;
    for (std::size_t f = 1; f < frames; ++f) {
        for (std::size_t s = 0; s < substeps; ++s, ++step) {
            const double q = step < pulse_steps ? exc.absorbed_flux : 0.0;
            next[0] = theta[0] + 2.0 * r * (theta[1] - theta[0]) +
                      boundary_gain * (q - h_front * theta[0]);
            for (std::size_t i = 1; i + 1 < nodes; ++i) {
                next[i] = theta[i] + r * (theta[i + 1] - 2.0 * theta[i] + theta[i - 1]);
            }
            const std::size_t b = nodes - 1;
            next[b] = theta[b] + 2.0 * r * (theta[b - 1] - theta[b]) -
                      boundary_gain * h_back * theta[b];
            theta.swap(next);
        }
        out.samples.push_back(exc.ambient_temp + theta[0]);
    }

    if (final_state) {
        final_state->dx = dx;
        final_state->temperatures.resize(nodes);
        for (std::size_t i = 0; i < nodes; ++i) {
            final_state->temperatures[i] = exc.ambient_temp + theta[i];
        }
    }
    return out;
}

double stored_energy(const SlabState& state, const MaterialProps& m, double ambient_temp) {
    const auto& t = state.temperatures;
    if (t.size() < 2) return 0.0;
    double sum = 0.5 * ((t.front() - ambient_temp) + (t.back() - ambient_temp));
    for (std::size_t i = 1; i + 1 < t.size(); ++i) sum += t[i] - ambient_temp;
    return m.density * m.specific_heat * state.dx * sum;
}

PixelCurve quantize_curve(const TemperatureCurve& t, const CameraSpec& cam,
                          std::uint64_t rng_seed) {
    if (!cam.calibration) throw CalibrationError("camera calibration is not set");
    const Calibration c = *cam.calibration;
    if (!(c.min < c.max)) throw CalibrationError("camera calibration requires calib_min < calib_max");
    if (!(cam.netd_sigma >= 0.0)) throw ConfigError("camera.netd_sigma must be >= 0");

    const double levels = cam.max_level();
    const double span = c.max - c.min;
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    PixelCurve out;
    out.frame_rate = t.frame_rate;
    out.values.reserve(t.samples.size());
    for (double temp : t.samples) {
        const double noisy = cam.netd_sigma > 0.0 ? temp + cam.netd_sigma * noise(rng) : temp;
        // std::round rounds half away from zero.
        const double level = std::round((noisy - c.min) * levels / span);
        out.values.push_back(std::clamp(level, 0.0, levels));
    }
    return out;
}

Calibration compute_calibration(const SpecimenSpec& spec, const ExcitationSpec& exc,
                                const GridParams& grid) {
    const TemperatureCurve sound = simulate_pixel(spec, exc, std::nullopt, grid);
    const TemperatureCurve shallow = simulate_pixel(spec, exc, spec.min_depth(), grid);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto* curve : {&sound, &shallow}) {
        for (double v : curve->samples) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    const double pad = 0.05 * (hi - lo);
    if (!(pad > 0.0)) throw CalibrationError("calibration runs produced a constant temperature");
    return Calibration{lo - pad, hi + pad};
}

PeakContrast peak_contrast(const TemperatureCurve& defect, const TemperatureCurve& sound) {
    const std::size_t n = std::min(defect.samples.size(), sound.samples.size());
    PeakContrast best{-std::numeric_limits<double>::infinity(), 0.0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        const double c = defect.samples[i] - sound.samples[i];
        if (c > best.value) best = {c, static_cast<double>(i) / defect.frame_rate, i};
    }
    return best;
}

Dataset generate_dataset(const SpecimenSpec& spec, const ExcitationSpec& exc,
                         const CameraSpec& cam, const GenerationOptions& opts) {
    spec.validate();
    exc.validate();
    cam.validate();
    if (opts.pixels_per_depth < 1) throw ConfigError("pixels_per_depth must be >= 1");
    if (!(opts.flux_jitter >= 0.0 && opts.flux_jitter < 1.0)) {
        throw ConfigError("flux_jitter must be in [0, 1)");
    }
    const GridParams grid = opts.grid.value_or(default_grid(spec, exc));

    Dataset ds;
    ds.depths = spec.defect_depths;
    ds.calibration = cam.calibration ? *cam.calibration : compute_calibration(spec, exc, grid);
    CameraSpec camera = cam;
    camera.calibration = ds.calibration;

    ds.curves.reserve(spec.defect_depths.size() * opts.pixels_per_depth);
    for (std::size_t di = 0; di < spec.defect_depths.size(); ++di) {
        const double depth = spec.defect_depths[di];
        // The scheme is linear in the absorbed flux with a zero initial excess
        // temperature, so a jittered pixel is the nominal run scaled by
        // (1 + jitter) in excess temperature.
        const TemperatureCurve nominal = simulate_pixel(spec, exc, depth, grid);
        for (std::size_t pi = 0; pi < opts.pixels_per_depth; ++pi) {
            const std::uint64_t seed = derive_seed(opts.master_seed, {di, pi});
            std::mt19937_64 rng(seed);
            std::uniform_real_distribution<double> jitter(-opts.flux_jitter, opts.flux_jitter);
            const double flux_scale = opts.flux_jitter > 0.0 ? 1.0 + jitter(rng) : 1.0;

            TemperatureCurve pixel = nominal;
            for (double& v : pixel.samples) {
                v = exc.ambient_temp + flux_scale * (v - exc.ambient_temp);
            }
            const std::uint64_t noise_seed = rng();
            LabeledCurve lc;
            lc.curve = quantize_curve(pixel, camera, noise_seed);
            lc.curve.label_depth = depth;
            lc.depth_index = di;
            lc.pixel_index = pi;
            lc.seed = seed;
            lc.flux_scale = flux_scale;
            ds.curves.push_back(std::move(lc));
        }
    }
    return ds;
}

}  // namespace stripedepth::heatsim
