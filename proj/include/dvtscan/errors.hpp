#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dvtscan {

// Broad failure classes; the CLI maps these onto process exit codes.
enum class ErrorClass {
    invalid_input,  // precondition or geometry problems in caller-supplied data
    config,         // scenario/config document problems
    simulation,     // plant faults, divergence, singular configurations
    parse,          // malformed files, missing columns
};

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
    [[nodiscard]] ErrorClass error_class() const noexcept { return cls_; }

private:
    ErrorClass cls_;
};

struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& w) : Error(ErrorClass::invalid_input, w) {}
};

struct DegenerateSegmentError : Error {
    explicit DegenerateSegmentError(std::size_t index)
        : Error(ErrorClass::invalid_input,
                "degenerate segment: waypoints " + std::to_string(index) + " and " +
                    std::to_string(index + 1) + " coincide"),
          index(index) {}
    std::size_t index;
};

struct DegenerateInterpolationError : Error {
    DegenerateInterpolationError()
        : Error(ErrorClass::invalid_input, "slerp between antipodal orientations is undefined") {}
};

struct UnderdeterminedKernelError : Error {
    explicit UnderdeterminedKernelError(std::size_t kernel)
        : Error(ErrorClass::invalid_input,
                "kernel " + std::to_string(kernel) +
                    " has zero activation over the samples; use fewer kernels or more samples"),
          kernel(kernel) {}
    std::size_t kernel;
};

struct DegenerateFrameError : Error {
    explicit DegenerateFrameError(std::size_t index)
        : Error(ErrorClass::invalid_input,
                "path tangent is parallel to the normal at sample " + std::to_string(index)),
          index(index) {}
    std::size_t index;
};

struct InvalidShapeParameter : Error {
    explicit InvalidShapeParameter(double k_s)
        : Error(ErrorClass::invalid_input,
                "shape parameter k_s=" + std::to_string(k_s) + " yields a negative radicand") {}
};

struct SingularConfigurationError : Error {
    explicit SingularConfigurationError(int rank)
        : Error(ErrorClass::simulation,
                "Jacobian rank " + std::to_string(rank) + " < 6 (singular configuration)"),
          rank(rank) {}
    int rank;
};

struct JointLimitError : Error {
    JointLimitError(int joint, double value)
        : Error(ErrorClass::simulation, "joint " + std::to_string(joint + 1) + " at " +
                                            std::to_string(value) + " rad is outside its limits"),
          joint(joint) {}
    int joint;
};

struct PlantFaultError : Error {
    explicit PlantFaultError(const std::string& w) : Error(ErrorClass::simulation, w) {}
};

struct SimulationDivergedError : Error {
    explicit SimulationDivergedError(long last_valid_tick)
        : Error(ErrorClass::simulation,
                "simulation diverged after tick " + std::to_string(last_valid_tick)),
          last_valid_tick(last_valid_tick) {}
    long last_valid_tick;
};

struct ScenarioError : Error {
    explicit ScenarioError(const std::string& w) : Error(ErrorClass::simulation, w) {}
};

struct SparseCloudError : Error {
    explicit SparseCloudError(std::size_t bin)
        : Error(ErrorClass::invalid_input,
                "no surface points in longitudinal slice " + std::to_string(bin)),
          bin(bin) {}
    std::size_t bin;
};

struct TrackLostError : Error {
    TrackLostError(long frame_id, double gap)
        : Error(ErrorClass::invalid_input, "vessel track lost at frame " + std::to_string(frame_id) +
                                               " (gap " + std::to_string(gap * 1e3) + " mm)"),
          frame_id(frame_id) {}
    long frame_id;
};

struct InsufficientObservationsError : Error {
    explicit InsufficientObservationsError(std::size_t n)
        : Error(ErrorClass::invalid_input,
                "only " + std::to_string(n) + " chained vessel points; at least 10 required") {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ErrorClass::config, w) {}
};

struct ParseError : Error {
    ParseError(const std::string& file, std::size_t line, const std::string& w)
        : Error(ErrorClass::parse, file + ": line " + std::to_string(line) + ": " + w), line(line) {}
    std::size_t line;
};

struct SchemaError : Error {
    explicit SchemaError(const std::string& w) : Error(ErrorClass::parse, w) {}
};

}  // namespace dvtscan
