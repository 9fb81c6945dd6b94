#include "kl/run_case.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#ifndef KL_VERSION
#define KL_VERSION "0.0.0"
#endif

namespace kl {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string fmt_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

class FieldWriter {
public:
    FieldWriter(const Grid& g, std::string out_dir, bool enabled, CaseReport& report)
        : g_(g), dir_(std::move(out_dir)), enabled_(enabled && !dir_.empty()), report_(report) {}

    void write(const std::string& name, const Vec& values) {
        if (!enabled_) return;
        if (values.size() != g_.size()) throw Error("cli.dump", "field '" + name + "' has the wrong length");
        const fs::path rel = fs::path("fields") / (name + ".csv");
        const fs::path path = fs::path(dir_) / rel;
        fs::create_directories(path.parent_path());
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error("cli.dump", "cannot write '" + path.string() + "'");
        f << "x,y,value\n";
        for (int k = 0; k < g_.size(); ++k)
            f << fmt_double(g_.xk(k)) << ',' << fmt_double(g_.yk(k)) << ',' << fmt_double(values[k]) << '\n';
        if (!f) throw Error("cli.dump", "write failed for '" + path.string() + "'");
        report_.fields.emplace_back(name, rel.generic_string());
    }

    void write_tensor(const std::string& prefix, const TensorField2x2& t, bool symmetric) {
        write(prefix + "11", t(0, 0));
        write(prefix + "12", t(0, 1));
        if (!symmetric) write(prefix + "21", t(1, 0));
        write(prefix + "22", t(1, 1));
    }

    void write_stacked2(const std::string& prefix, const Vec& v) {
        const VectorField2 f = stacked_to_vector(g_, v);
        write(prefix + "1", f.c[0]);
        write(prefix + "2", f.c[1]);
    }

    void write_state(const Vec& x) {
        const DisplacementField u = from_dofs(g_, x);
        write("u1", u.u1.v);
        write("u2", u.u2.v);
        write("w", u.w.v);
    }

private:
    const Grid& g_;
    std::string dir_;
    bool enabled_;
    CaseReport& report_;
};

Surface make_surface(const ShellSpec& s) {
    switch (s.surface) {
        case SurfaceKind::plane: return plane_surface();
        case SurfaceKind::cylinder: return cylinder_surface(s.R);
        case SurfaceKind::sphere: return sphere_patch_surface(s.R);
        case SurfaceKind::paraboloid: return paraboloid_surface(s.a, s.b);
    }
    throw Error("cli.config", "unknown surface");
}

MinimizeOptions minimize_options(const SolverSpec& s) {
    MinimizeOptions o;
    o.gtol = s.gtol.value_or(-1.0);
    o.max_iter = s.max_iter;
    o.memory = s.memory;
    o.newton_polish = s.newton_polish;
    return o;
}

CertificateOptions certificate_options(const CertifySpec& s) {
    CertificateOptions o;
    o.K = s.K;
    o.tol_equilibrium = s.tol_equilibrium;
    o.tol_gap = s.tol_gap;
    o.a4.dense_max_nodes = s.dense_max_nodes;
    o.a4.tol = s.a4_tol;
    return o;
}

MinimizeResult solve_primal(const CaseModel& cm, const CaseConfig& c, CaseReport& r) {
    const Vec x_init = c.solver.linear_init ? linear_solution(cm.model) : Vec(Vec::Zero(cm.model.dofs()));
    SolverStats st;
    st.init = c.solver.linear_init ? "linear" : "zero";
    st.J_initial = cm.model.energy(x_init).J;
    spdlog::info("minimising {} energy on {}x{} nodes ({} init)", cm.model.kind, c.nx, c.ny, st.init);
    MinimizeResult run = minimize(cm.model, x_init, minimize_options(c.solver));
    st.converged = run.converged;
    st.iterations = run.iterations;
    st.newton_steps = run.newton_steps;
    st.grad_norm = run.grad_norm;
    st.gtol = run.gtol;
    spdlog::info("solver: converged={} iterations={} newton={} |g|={:.3e} gtol={:.3e}", run.converged, run.iterations,
                 run.newton_steps, run.grad_norm, run.gtol);
    for (std::size_t i = 0; i < run.history.size(); ++i)
        spdlog::debug("  iter {:5d} J={:.17g} |g|={:.3e}", i, run.history[i].J, run.history[i].grad_norm);
    r.solver = st;
    r.energies = cm.model.energy(run.x);
    return run;
}

// Transverse ray shapes for the coercivity probe, vanishing on the boundary
// together with their normal slopes.
std::vector<Vec> probe_directions(const CaseModel& cm, std::vector<std::string>& names) {
    const Grid& g = cm.grid;
    const Extents& e = g.extents();
    const int n = g.size();
    const std::vector<std::pair<int, int>> modes = {{1, 1}, {2, 1}, {1, 2}};
    std::vector<Vec> dirs;
    for (int sign : {1, -1})
        for (const auto& [m, l] : modes) {
            if (sign < 0 && (m != 1 || l != 1)) continue;
            Vec d = Vec::Zero(3 * n);
            for (int k = 0; k < n; ++k) {
                const double s = (g.xk(k) - e.x0) / (e.x1 - e.x0), t = (g.yk(k) - e.y0) / (e.y1 - e.y0);
                const double pi = std::numbers::pi;
                d[2 * n + k] = sign * std::sin(pi * s) * std::sin(pi * t) * std::sin(m * pi * s) * std::sin(l * pi * t);
            }
            for (int i = 0; i < 3 * n; ++i)
                if (!cm.model.is_free[static_cast<std::size_t>(i)]) d[i] = 0.0;
            dirs.push_back(std::move(d));
            names.push_back(std::string(sign < 0 ? "-" : "+") + "w" + std::to_string(m) + std::to_string(l));
        }
    return dirs;
}

T0Result build_t0(const CaseModel& cm, CaseReport& r) {
    T0Summary s;
    T0Result t0;
    if (cm.geometry) {
        s.builder = "shell";
        t0 = build_t0_shell(cm.grid, *cm.geometry, cm.loads.P1, cm.loads.P2);
    } else {
        s.builder = "plate";
        t0 = build_t0_plate(cm.grid, cm.loads);
    }
    s.residual = t0.residual;
    s.norm_sq = t0.norm_sq;
    r.t0 = s;
    return t0;
}

void run_certify(const CaseModel& cm, const CaseConfig& c, CaseReport& r, FieldWriter& out) {
    const int n = cm.model.nodes();
    const CertificateOptions copts = certificate_options(c.certify);
    if (c.certify.compression) {
        r.certificate_source = "compression";
        Vec N0 = Vec::Zero(3 * n);
        N0.head(2 * n).setConstant(-*c.certify.compression);
        const auto [N, Q] = equilibrate(cm.model, N0, Vec::Zero(2 * n));
        spdlog::info("assessing manufactured compressive membrane field, amplitude {}", *c.certify.compression);
        r.certificate = assess_dual_point(cm.model, N, Q, copts);
        r.verdict = r.certificate->verdict;
        r.exit_code = r.certificate->verdict == "dual-feasible" ? 0 : 2;
    } else {
        r.certificate_source = "solution";
        const MinimizeResult run = solve_primal(cm, c, r);
        out.write_state(run.x);
        if (!run.converged) {
            r.verdict = "not-converged";
            r.exit_code = 3;
            return;
        }
        r.certificate = extract_certificate(cm.model, run, copts);
        r.verdict = r.certificate->verdict;
        r.exit_code = r.certificate->certified ? 0 : 2;
    }
    const DualCertificate& d = *r.certificate;
    spdlog::info("certificate: {}", d.verdict);
    out.write_tensor("N", mandel_to_tensor(cm.grid, d.N), true);
    out.write_stacked2("Q", d.Q);
    out.write_stacked2("zstar", d.zstar);
}

Json energies_json(const EnergyBreakdown& e) {
    return Json{{"G1", e.G1}, {"G2", e.G2}, {"F1", e.F1}, {"J", e.J}};
}

Json certificate_json(const DualCertificate& d, const std::string& source) {
    Json j;
    j["source"] = source;
    j["K"] = d.K;
    j["residual_A1"] = d.residual_A1;
    j["residual_A2"] = d.residual_A2;
    j["residual_Q"] = d.residual_Q;
    j["tol_equilibrium"] = d.tol_equilibrium;
    j["in_A3"] = d.in_A3;
    j["lambda_min_A3"] = d.lambda_min_A3;
    j["lambda_min_A4"] = opt(d.lambda_min_A4);
    j["a4_method"] = d.a4_method.empty() ? Json(nullptr) : Json(d.a4_method);
    j["dual_value"] = opt(d.dual_value);
    j["J_star"] = opt(d.J_star);
    j["J_primal"] = opt(d.J_primal);
    j["gap"] = opt(d.gap);
    j["tol_gap"] = d.tol_gap;
    j["certified"] = d.certified;
    j["verdict"] = d.verdict;
    return j;
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cli.output", "cannot write '" + path.string() + "'");
    f << text;
    if (!f) throw Error("cli.output", "write failed for '" + path.string() + "'");
}

}  // namespace

const char* tool_version() { return KL_VERSION; }

Command parse_command(const std::string& name) {
    if (name == "solve") return Command::solve;
    if (name == "certify") return Command::certify;
    if (name == "build-t0") return Command::build_t0;
    if (name == "probe-coercivity") return Command::probe_coercivity;
    if (name == "geometry-check") return Command::geometry_check;
    throw Error("cli.command", "unknown subcommand '" + name + "'");
}

const char* command_name(Command c) {
    switch (c) {
        case Command::solve: return "solve";
        case Command::certify: return "certify";
        case Command::build_t0: return "build-t0";
        case Command::probe_coercivity: return "probe-coercivity";
        case Command::geometry_check: return "geometry-check";
    }
    return "?";
}

ScalarField evaluate_load(const Grid& g, const LoadSpec& spec) {
    const Extents& e = g.extents();
    const double A = spec.amplitude;
    switch (spec.kind) {
        case LoadKind::zero: return make_scalar(g, 0.0);
        case LoadKind::constant: return make_scalar(g, A);
        case LoadKind::sin_product:
            return sample(g, [&](double x, double y) {
                const double s = (x - e.x0) / (e.x1 - e.x0), t = (y - e.y0) / (e.y1 - e.y0);
                return A * std::sin(spec.mx * std::numbers::pi * s) * std::sin(spec.my * std::numbers::pi * t);
            });
        case LoadKind::gaussian:
            return sample(g, [&](double x, double y) {
                const double r2 = (x - spec.cx) * (x - spec.cx) + (y - spec.cy) * (y - spec.cy);
                return A * std::exp(-r2 / (2.0 * spec.sigma * spec.sigma));
            });
    }
    throw Error("cli.config", "unknown load kind");
}

CaseModel build_case(const CaseConfig& c) {
    CaseModel cm;
    cm.grid = Grid::build(c.extents, c.nx, c.ny, c.boundary);
    const Grid& g = cm.grid;
    cm.loads.P = evaluate_load(g, c.P);
    cm.loads.P1 = evaluate_load(g, c.P1);
    cm.loads.P2 = evaluate_load(g, c.P2);
    // Traction data lives on traction edges only.
    auto traction = [&g](const LoadSpec& s) {
        ScalarField f = evaluate_load(g, s);
        for (int k = 0; k < g.size(); ++k)
            if (g.tag(k) != NodeTag::traction) f.v[k] = 0.0;
        return f;
    };
    cm.loads.Pt = traction(c.Pt);
    cm.loads.Pt1 = traction(c.Pt1);
    cm.loads.Pt2 = traction(c.Pt2);
    if (c.model == "shell") {
        cm.surface = make_surface(c.shell);
        cm.geometry = build_geometry(g, *cm.surface);
        const ShellMaterial mat = shell_material(g, *cm.geometry, c.E, c.nu, c.h);
        cm.model = shell_model(g, *cm.geometry, mat, cm.loads);
    } else {
        cm.model = plate_model(g, build_material(c.E, c.nu, c.h), cm.loads);
    }
    return cm;
}

CaseReport run_case(const CaseConfig& c, Command cmd, const RunOptions& opts) {
    const auto t_start = std::chrono::steady_clock::now();
    CaseReport r;
    r.command = cmd;
    const CaseModel cm = build_case(c);
    FieldWriter out(cm.grid, opts.out_dir, opts.dump_fields || c.dump_fields, r);

    switch (cmd) {
        case Command::solve: {
            const MinimizeResult run = solve_primal(cm, c, r);
            out.write_state(run.x);
            out.write_tensor("N", mandel_to_tensor(cm.grid, cm.model.membrane_force(run.x)), true);
            r.verdict = run.converged ? "converged" : "not-converged";
            r.exit_code = run.converged ? 0 : 3;
            break;
        }
        case Command::certify: run_certify(cm, c, r, out); break;
        case Command::build_t0: {
            const T0Result t0 = build_t0(cm, r);
            out.write_tensor("T0_", t0.T, false);
            if (!cm.geometry) {
                const TTildeResult tt = build_t_tilde(cm.grid, cm.loads.P1, cm.loads.P2);
                r.t0->t_tilde_shift = tt.C;
                out.write_tensor("Ttilde_", tt.T, true);
            }
            r.verdict = "built";
            break;
        }
        case Command::probe_coercivity: {
            const T0Result t0 = build_t0(cm, r);
            std::vector<double> t_list;
            for (int i = 1; i <= c.probe.samples; ++i) t_list.push_back(c.probe.t_max * i / c.probe.samples);
            r.probe = coercivity_probe(cm.model, t0.T, probe_directions(cm, r.probe_directions), t_list);
            r.verdict = r.probe->coercive ? "coercive-along-probes" : "not-coercive-along-probes";
            r.exit_code = r.probe->coercive ? 0 : 2;
            break;
        }
        case Command::geometry_check: {
            const Surface s = cm.surface ? *cm.surface : plane_surface();
            const SurfaceGeometry geom = cm.geometry ? *cm.geometry : build_geometry(cm.grid, s);
            r.geometry = geometry_diagnostics(cm.grid, geom, &s);
            Vec gauss(cm.grid.size());
            for (int k = 0; k < cm.grid.size(); ++k) gauss[k] = geom.gauss_curvature(k);
            out.write("sqrt_a", geom.sqrt_a);
            out.write("gauss", gauss);
            r.verdict = "checked";
            break;
        }
    }

    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    if (!opts.out_dir.empty()) {
        write_text(fs::path(opts.out_dir) / "report.json", report_json(r, c));
        write_text(fs::path(opts.out_dir) / "timing.json", timing_json(r));
    }
    spdlog::info("{}: {} (exit {})", command_name(cmd), r.verdict, r.exit_code);
    return r;
}

std::string report_json(const CaseReport& r, const CaseConfig& c) {
    Json j;
    j["schema_version"] = kReportSchemaVersion;
    j["tool"] = Json{{"name", "kl"}, {"version", tool_version()}};
    j["command"] = command_name(r.command);
    j["verdict"] = r.verdict;
    j["exit_code"] = r.exit_code;
    Json cfg;
    cfg["source"] = c.source;
    for (const auto& [k, v] : config_entries(c)) cfg[k] = v;
    j["config"] = cfg;
    if (r.energies) j["energies"] = energies_json(*r.energies);
    if (r.solver) {
        const SolverStats& s = *r.solver;
        j["solver"] = Json{{"init", s.init},         {"J_initial", s.J_initial},       {"converged", s.converged},
                           {"iterations", s.iterations}, {"newton_steps", s.newton_steps}, {"grad_norm", s.grad_norm},
                           {"gtol", s.gtol}};
    }
    if (r.certificate) j["certificate"] = certificate_json(*r.certificate, r.certificate_source);
    if (r.t0) {
        j["t0"] = Json{{"builder", r.t0->builder},
                       {"residual", r.t0->residual},
                       {"norm_sq", r.t0->norm_sq},
                       {"t_tilde_shift", opt(r.t0->t_tilde_shift)}};
    }
    if (r.probe) {
        Json dirs = Json::array();
        for (std::size_t d = 0; d < r.probe->values.size(); ++d)
            dirs.push_back(Json{{"name", r.probe_directions[d]},
                                {"coercive", static_cast<bool>(r.probe->direction_coercive[d])},
                                {"values", r.probe->values[d]}});
        j["probe"] = Json{{"t", r.probe->t}, {"coercive", r.probe->coercive}, {"directions", dirs}};
    }
    if (r.geometry) {
        const GeometryDiagnostics& g = *r.geometry;
        j["geometry"] = Json{{"sqrt_a_min", g.sqrt_a_min},
                             {"sqrt_a_max", g.sqrt_a_max},
                             {"metric_inverse_error", g.metric_inverse_error},
                             {"normal_unit_error", g.normal_unit_error},
                             {"b_asymmetry", g.b_asymmetry},
                             {"christoffel_asymmetry", g.christoffel_asymmetry},
                             {"gauss_min", g.gauss_min},
                             {"gauss_max", g.gauss_max},
                             {"gauss_error", opt(g.gauss_error)}};
    }
    Json fields = Json::object();
    for (const auto& [name, path] : r.fields) fields[name] = path;
    j["fields"] = fields;
    return j.dump(2) + "\n";
}

std::string timing_json(const CaseReport& r) {
    Json j;
    j["schema_version"] = kReportSchemaVersion;
    j["command"] = command_name(r.command);
    j["wall_time_s"] = r.wall_time;
    return j.dump(2) + "\n";
}

}  // namespace kl
