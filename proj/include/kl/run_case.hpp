#pragma once

// Case orchestration behind the `kl` command line tool: builds the model from a
// configuration, runs one subcommand and renders the report.
//
// Exit codes: 0 success, 1 error, 2 a check failed (certificate, dual point or
// coercivity probe), 3 the primal solve did not converge.

#include "kl/config.hpp"
#include "kl/dual.hpp"
#include "kl/loads.hpp"
#include "kl/model.hpp"
#include "kl/plate.hpp"
#include "kl/shell.hpp"
#include "kl/solver.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace kl {

inline constexpr int kReportSchemaVersion = 1;
const char* tool_version();

enum class Command { solve, certify, build_t0, probe_coercivity, geometry_check };

Command parse_command(const std::string& name);
const char* command_name(Command c);

// Grid, loads, geometry and energy model of a configured case.
struct CaseModel {
    Grid grid;
    PlateLoads loads;
    std::optional<Surface> surface;        // shell only
    std::optional<SurfaceGeometry> geometry;  // shell only
    EnergyModel model;
};

ScalarField evaluate_load(const Grid& g, const LoadSpec& spec);
CaseModel build_case(const CaseConfig& c);

struct SolverStats {
    std::string init;  // "linear" or "zero"
    double J_initial = 0.0;
    bool converged = false;
    int iterations = 0;
    int newton_steps = 0;
    double grad_norm = 0.0;
    double gtol = 0.0;
};

struct T0Summary {
    std::string builder;  // "plate" or "shell"
    double residual = 0.0;
    double norm_sq = 0.0;
    std::optional<double> t_tilde_shift;  // plate only
};

struct CaseReport {
    Command command = Command::solve;
    std::string verdict;
    int exit_code = 0;
    std::optional<EnergyBreakdown> energies;
    std::optional<SolverStats> solver;
    std::optional<DualCertificate> certificate;
    std::string certificate_source;  // "solution" or "compression"
    std::optional<T0Summary> t0;
    std::optional<ProbeResult> probe;
    std::vector<std::string> probe_directions;
    std::optional<GeometryDiagnostics> geometry;
    std::vector<std::pair<std::string, std::string>> fields;  // name, path relative to the output directory
    double wall_time = 0.0;  // seconds
};

struct RunOptions {
    std::string out_dir;       // empty: nothing is written
    bool dump_fields = false;  // also honoured when the config sets output.dump_fields
};

// Runs one subcommand. Writes report.json, timing.json and the optional CSV
// field dumps (columns x, y, value) under out_dir.
CaseReport run_case(const CaseConfig& c, Command cmd, const RunOptions& opts = {});

// Deterministic report text (no timing data).
std::string report_json(const CaseReport& r, const CaseConfig& c);
std::string timing_json(const CaseReport& r);

}  // namespace kl
