#pragma once

#include "gapscope/dynamics.hpp"
#include "gapscope/error.hpp"
#include "gapscope/extremality.hpp"
#include "gapscope/impulsive.hpp"
#include "gapscope/serialize.hpp"
#include "gapscope/variations.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gapscope::scenario
{

inline constexpr const char* kToolName = "gapscope";
inline constexpr const char* kVersion = "1.0.0";

/// Failure inside a named pipeline stage, with the JSON pointer when known.
class StageError : public Error
{
public:
    StageError(std::string stage, ErrorKind kind, const std::string& message, std::string pointer = "");

    const std::string& stage() const noexcept { return stage_; }
    const std::string& pointer() const noexcept { return pointer_; }

private:
    std::string stage_;
    std::string pointer_;
};

struct RunOptions
{
    std::optional<std::size_t> grid;
    std::optional<double> tol;
    std::optional<std::size_t> candidates;
    std::size_t seed{0};
    bool timings{false};
};

/// Chattering spot-check attached to the abundance flag.
struct DensityCheck
{
    io::json base;
    std::vector<io::json> companions;
    std::size_t blocks{256};
    std::size_t gamma_points{11};
    double tolerance{1e-2};
    std::optional<double> forbidden_integral;
};

struct Abundance
{
    bool attested{false};
    bool concatenation_declared{false};
    std::optional<DensityCheck> density;
};

struct ImpulsiveData
{
    impulsive::ImpulsiveProblem problem;
    impulsive::Case kind{impulsive::Case::NonConvex};
    double t2{1.0};
    dynamics::ControlPath u;
    impulsive::OriginalProcess original;
};

/// A fully resolved scenario. For impulsive scenarios `system` is the
/// table-driven non-convex space-time system and `reference` the embedded control.
struct Scenario
{
    std::string name;
    std::string description;
    std::optional<dynamics::SystemSpec> system;
    Vec y0;
    std::optional<dynamics::ControlPath> reference;
    std::optional<extremality::TargetSpec> target;
    std::vector<variations::NeedleSpec> needles;
    std::vector<Vec> wset;
    double delta2{0.05};
    Abundance abundance;
    std::optional<ImpulsiveData> impulsive;

    const dynamics::SystemSpec& sys() const { return *system; }
};

Scenario load_scenario(const io::json& j, const RunOptions& opt = {});
Scenario load_scenario_text(const std::string& text, const RunOptions& opt = {});

/// Registry name or a path on disk.
std::string read_spec(const std::string& name_or_path);

std::vector<std::string> registry_names();
/// Raw JSON of a bundled scenario, or empty when unknown.
std::string registry_text(const std::string& name);

std::string sha256_hex(const std::string& bytes);

struct Outcome
{
    io::ojson report;
    int exit_code{0};
    extremality::GapVerdict gap{extremality::GapVerdict::Inapplicable};
    std::optional<dynamics::Process> process;
};

/// integrate → variational cone → separation → abnormality → controllability → verdict.
Outcome run_scenario(const std::string& spec_text, const RunOptions& opt = {});

/// Chattering density rows over γ ∈ [0,1]·(companion directions).
struct DensityRow
{
    double gamma{0.0};
    double integral{0.0};
    double endpoint_gap{0.0};
    bool in_family{true};
};

std::vector<DensityRow> density_sweep(const Scenario& sc, const DensityCheck& dc);

} // namespace gapscope::scenario
