#pragma once

// Case configuration: a line-oriented `key = value` file with dotted sections.
//
//   model = plate            # plate | shell
//   grid.nx = 33
//   material.nu = 0.3
//   loads.P.kind = sin-product
//   loads.P.amplitude = 1e-4
//
// `#` starts a comment. Every key is optional; omitted keys keep the defaults
// below. Unknown keys, repeated keys, malformed values and out-of-range values
// are errors that name the key and the line.

#include "kl/grid.hpp"

#include <optional>
#include <string>
#include <vector>

namespace kl {

enum class LoadKind { zero, constant, sin_product, gaussian };

// Analytic load catalogue:
//   const        amplitude
//   sin-product  amplitude sin(mx pi s) sin(my pi t), s, t the extents-normalised coordinates
//   gaussian     amplitude exp(-((x - cx)^2 + (y - cy)^2) / (2 sigma^2))
struct LoadSpec {
    LoadKind kind = LoadKind::zero;
    double amplitude = 0.0;
    int mx = 1, my = 1;
    double cx = 0.5, cy = 0.5, sigma = 0.1;
};

enum class SurfaceKind { plane, cylinder, sphere, paraboloid };

struct ShellSpec {
    SurfaceKind surface = SurfaceKind::plane;
    double R = 1.0;
    double a = 0.0, b = 0.0;  // paraboloid coefficients
};

struct SolverSpec {
    std::optional<double> gtol;  // empty: automatic
    int max_iter = 5000;
    int memory = 10;
    bool newton_polish = true;
    bool linear_init = true;  // start from the linearised solution (else from zero)
};

struct CertifySpec {
    std::optional<double> K;  // empty: automatic shift
    double tol_equilibrium = 1e-6;
    double tol_gap = 1e-6;
    int dense_max_nodes = 33 * 33;
    double a4_tol = 1e-8;
    // Certify-only mode: assess N = -compression * I (equilibrated) instead of
    // solving the primal problem.
    std::optional<double> compression;
};

struct ProbeSpec {
    double t_max = 10.0;
    int samples = 12;
};

struct CaseConfig {
    std::string source;  // path or label the config was read from
    std::string model = "plate";
    int nx = 17, ny = 17;
    Extents extents{};
    BoundarySpec boundary{};
    double E = 1.0, nu = 0.3, h = 0.1;
    LoadSpec P, P1, P2, Pt, Pt1, Pt2;
    ShellSpec shell{};
    SolverSpec solver{};
    CertifySpec certify{};
    ProbeSpec probe{};
    bool dump_fields = false;
};

CaseConfig parse_config(const std::string& path);
// Parses config text; `origin` labels error messages.
CaseConfig parse_config_text(const std::string& text, const std::string& origin = "<text>");

// Every key in canonical order with the effective value as written by the
// parser (round-trips through parse_config_text).
std::vector<std::pair<std::string, std::string>> config_entries(const CaseConfig& c);
std::string to_config_text(const CaseConfig& c);

const char* load_kind_name(LoadKind k);
const char* surface_kind_name(SurfaceKind k);

}  // namespace kl
