#pragma once

#include <stdexcept>
#include <string>

namespace stripedepth {

/// Base class for every error raised by the library. `kind()` is a stable
/// identifier used by the CLI to choose an exit code.
class Error : public std::runtime_error {
public:
    enum class Kind {
        Config,
        Io,
        Simulation,
        Reconstruction,
        Model,
        NonFinite,
        Training,
        Evaluation,
    };

    Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

#define STRIPEDEPTH_DEFINE_ERROR(Name, KindValue)                                   \
    class Name : public Error {                                                      \
    public:                                                                          \
        explicit Name(const std::string& what) : Error(Kind::KindValue, what) {}    \
    }

// heatsim
STRIPEDEPTH_DEFINE_ERROR(StabilityViolation, Simulation);
STRIPEDEPTH_DEFINE_ERROR(InvalidDepth, Simulation);
STRIPEDEPTH_DEFINE_ERROR(CalibrationError, Simulation);

// reconstruct
STRIPEDEPTH_DEFINE_ERROR(TooShort, Reconstruction);
STRIPEDEPTH_DEFINE_ERROR(DegenerateFit, Reconstruction);
STRIPEDEPTH_DEFINE_ERROR(NotDivisible, Reconstruction);

// model / training
STRIPEDEPTH_DEFINE_ERROR(ShapeMismatch, Model);
STRIPEDEPTH_DEFINE_ERROR(NonFiniteError, NonFinite);
STRIPEDEPTH_DEFINE_ERROR(EmptyBatch, Training);
STRIPEDEPTH_DEFINE_ERROR(LambdaOutOfRange, Training);
STRIPEDEPTH_DEFINE_ERROR(TooSmall, Training);

// eval
STRIPEDEPTH_DEFINE_ERROR(ZeroTarget, Evaluation);
STRIPEDEPTH_DEFINE_ERROR(ZeroVariance, Evaluation);
STRIPEDEPTH_DEFINE_ERROR(UnknownDepth, Evaluation);

// plumbing
STRIPEDEPTH_DEFINE_ERROR(ConfigError, Config);
STRIPEDEPTH_DEFINE_ERROR(IoError, Io);

#undef STRIPEDEPTH_DEFINE_ERROR

}  // namespace stripedepth
