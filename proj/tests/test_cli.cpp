#include "kl/config.hpp"
#include "kl/run_case.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace kl;

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

std::string error_of(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "cli.config");
        return e.what();
    }
    return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("kl_test_cli_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST(ParseConfig, MinimalPlateGetsDefaults) {
    const CaseConfig c = parse_config_text("model = plate\n");
    EXPECT_EQ(c.model, "plate");
    EXPECT_EQ(c.nx, 17);
    EXPECT_EQ(c.ny, 17);
    EXPECT_EQ(c.extents.x0, 0.0);
    EXPECT_EQ(c.extents.x1, 1.0);
    EXPECT_TRUE(c.boundary.fully_clamped());
    EXPECT_EQ(c.E, 1.0);
    EXPECT_EQ(c.nu, 0.3);
    EXPECT_EQ(c.h, 0.1);
    EXPECT_EQ(c.P.kind, LoadKind::zero);
    EXPECT_FALSE(c.solver.gtol.has_value());
    EXPECT_TRUE(c.solver.linear_init);
    EXPECT_FALSE(c.certify.K.has_value());
    EXPECT_FALSE(c.certify.compression.has_value());
    EXPECT_EQ(c.certify.tol_gap, 1e-6);
    EXPECT_FALSE(c.dump_fields);
}

TEST(ParseConfig, PoissonRatioOutOfRangeNamesLine) {
    const std::string msg = error_of("model = plate\n# comment\nmaterial.nu = 0.7\n");
    EXPECT_TRUE(contains(msg, "nu out of range (-1, 0.5) at line 3")) << msg;
    EXPECT_TRUE(contains(error_of("material.nu = -1\n"), "out of range")) << "open interval";
    EXPECT_NO_THROW(parse_config_text("material.nu = 0.49\n"));
}

TEST(ParseConfig, CylinderShell) {
    const CaseConfig c = parse_config_text("model = shell\nshell.surface = cylinder\nshell.R = 2.0\n");
    EXPECT_EQ(c.model, "shell");
    EXPECT_EQ(c.shell.surface, SurfaceKind::cylinder);
    EXPECT_EQ(c.shell.R, 2.0);
}

TEST(ParseConfig, CommentsWhitespaceAndDottedLoads) {
    const CaseConfig c = parse_config_text(
        "  # header\n\n grid.nx=9   # trailing\n\tloads.P.kind = gaussian\nloads.P.sigma = 0.2\r\n"
        "loads.P.amplitude = -3e-2\nsolver.gtol = 1e-9\ncertify.K = 0.5\nsolver.init = zero\n");
    EXPECT_EQ(c.nx, 9);
    EXPECT_EQ(c.P.kind, LoadKind::gaussian);
    EXPECT_EQ(c.P.sigma, 0.2);
    EXPECT_EQ(c.P.amplitude, -3e-2);
    EXPECT_EQ(*c.solver.gtol, 1e-9);
    EXPECT_EQ(*c.certify.K, 0.5);
    EXPECT_FALSE(c.solver.linear_init);
}

TEST(ParseConfig, ErrorsNameKeyAndLine) {
    EXPECT_TRUE(contains(error_of("grid.nz = 3\n"), "unknown key 'grid.nz' at line 1"));
    EXPECT_TRUE(contains(error_of("grid.nx = 9\ngrid.nx = 11\n"), "grid.nx repeats line 1 at line 2"));
    EXPECT_TRUE(contains(error_of("grid.nx = 9.5\n"), "grid.nx expects an integer, got '9.5' at line 1"));
    EXPECT_TRUE(contains(error_of("grid.nx = 2\n"), "grid.nx must be at least 3 at line 1"));
    EXPECT_TRUE(contains(error_of("material.E = abc\n"), "material.E expects a number"));
    EXPECT_TRUE(contains(error_of("material.E = 0\n"), "material.E must be positive"));
    EXPECT_TRUE(contains(error_of("material.h = -1\n"), "material.h must be positive"));
    EXPECT_TRUE(contains(error_of("loads.P.amplitude = inf\n"), "loads.P.amplitude"));
    EXPECT_TRUE(contains(error_of("loads.P.amplitude = nan\n"), "loads.P.amplitude"));
    EXPECT_TRUE(contains(error_of("loads.P.kind = cosine\n"), "loads.P.kind must be one of"));
    EXPECT_TRUE(contains(error_of("model = beam\n"), "model must be one of {plate, shell}"));
    EXPECT_TRUE(contains(error_of("solver.newton_polish = yes\n"), "expects true or false"));
    EXPECT_TRUE(contains(error_of("boundary.left = free\n"), "boundary.left"));
    EXPECT_TRUE(contains(error_of("shell.R = 0\n"), "shell.R must be positive"));
    EXPECT_TRUE(contains(error_of("certify.K = -1\n"), "certify.K must be positive"));
    EXPECT_TRUE(contains(error_of("probe.samples = 2\n"), "probe.samples must be at least 3"));
    EXPECT_TRUE(contains(error_of("grid.nx\n"), "expected 'key = value', got 'grid.nx' at line 1"));
    EXPECT_TRUE(contains(error_of("grid.nx = \n"), "grid.nx has no value at line 1"));
    EXPECT_TRUE(contains(error_of("grid.x0 = 1\ngrid.x1 = 0.5\n"), "grid.x1 must exceed grid.x0 at line 2"));
}

TEST(ParseConfig, MissingFile) {
    try {
        parse_config("/nonexistent/case.cfg");
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "cli.config");
        EXPECT_TRUE(contains(e.what(), "/nonexistent/case.cfg"));
    }
}

TEST(ParseConfig, EchoRoundTrips) {
    CaseConfig c = parse_config_text(
        "model = shell\nshell.surface = paraboloid\nshell.a = 0.1\nshell.b = -0.3\ngrid.x0 = -0.5\n"
        "loads.P2.kind = sin-product\nloads.P2.mx = 2\nloads.P2.amplitude = 0.123456789012345678\n"
        "certify.compression = 0\nboundary.top = traction\noutput.dump_fields = true\n");
    const std::string text = to_config_text(c);
    const CaseConfig back = parse_config_text(text);
    EXPECT_EQ(config_entries(back), config_entries(c));
    EXPECT_EQ(back.P2.amplitude, c.P2.amplitude);
    EXPECT_EQ(*back.certify.compression, 0.0);
    EXPECT_EQ(back.boundary.top, EdgeKind::traction);
}

TEST(EvaluateLoad, CatalogueMatchesFormulas) {
    const Grid g = Grid::build({0.0, 2.0, -1.0, 1.0}, 9, 7, {});
    LoadSpec s;
    s.kind = LoadKind::sin_product;
    s.amplitude = 1.5;
    s.mx = 2;
    s.my = 1;
    const ScalarField sp = evaluate_load(g, s);
    s.kind = LoadKind::gaussian;
    s.cx = 1.0;
    s.cy = 0.25;
    s.sigma = 0.3;
    const ScalarField ga = evaluate_load(g, s);
    s.kind = LoadKind::constant;
    const ScalarField co = evaluate_load(g, s);
    const double pi = std::numbers::pi;
    for (int k = 0; k < g.size(); ++k) {
        const double x = g.xk(k), y = g.yk(k);
        EXPECT_NEAR(sp.v[k], 1.5 * std::sin(2 * pi * x / 2.0) * std::sin(pi * (y + 1.0) / 2.0), 1e-15);
        EXPECT_NEAR(ga.v[k], 1.5 * std::exp(-((x - 1.0) * (x - 1.0) + (y - 0.25) * (y - 0.25)) / 0.18), 1e-15);
        EXPECT_EQ(co.v[k], 1.5);
    }
    s.kind = LoadKind::zero;
    EXPECT_EQ(evaluate_load(g, s).v.cwiseAbs().maxCoeff(), 0.0);
}

TEST(BuildCase, TractionLoadsStayOnTractionEdges) {
    const CaseConfig c = parse_config_text("boundary.right = traction\nloads.Pt2.kind = const\nloads.Pt2.amplitude = 2\n");
    const CaseModel cm = build_case(c);
    for (int k = 0; k < cm.grid.size(); ++k)
        EXPECT_EQ(cm.loads.Pt2.v[k], cm.grid.tag(k) == NodeTag::traction ? 2.0 : 0.0);
    EXPECT_EQ(cm.model.kind, "plate");
    const CaseModel shell = build_case(parse_config_text("model = shell\nshell.surface = cylinder\n"));
    EXPECT_EQ(shell.model.kind, "shell");
    ASSERT_TRUE(shell.geometry.has_value());
}

TEST(RunCase, ZeroLoadsCertifiedWithZeroGap) {
    const CaseConfig c = parse_config_text("grid.nx = 9\ngrid.ny = 9\n");
    const CaseReport r = run_case(c, Command::certify);
    EXPECT_EQ(r.verdict, "certified-global");
    EXPECT_EQ(r.exit_code, 0);
    ASSERT_TRUE(r.certificate && r.certificate->gap);
    EXPECT_EQ(*r.certificate->gap, 0.0);
    EXPECT_EQ(r.energies->J, 0.0);
}

TEST(RunCase, CompressiveCertifyOnlyExitsTwo) {
    const CaseConfig c = parse_config_text("grid.nx = 11\ngrid.ny = 11\ncertify.compression = 0.05\n");
    const CaseReport r = run_case(c, Command::certify);
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_EQ(r.verdict, "not-certified: A4 failed");
    ASSERT_TRUE(r.certificate && r.certificate->lambda_min_A4);
    EXPECT_LT(*r.certificate->lambda_min_A4, 0.0);
    EXPECT_FALSE(r.solver.has_value());
    EXPECT_EQ(r.certificate_source, "compression");

    // Far below the buckling load the same field passes every dual check.
    const CaseReport ok = run_case(parse_config_text("grid.nx = 11\ngrid.ny = 11\ncertify.compression = 1e-5\n"),
                                   Command::certify);
    EXPECT_EQ(ok.exit_code, 0);
    EXPECT_EQ(ok.verdict, "dual-feasible");
}

TEST(RunCase, NotConvergedExitsThree) {
    const CaseConfig c = parse_config_text(
        "grid.nx = 11\ngrid.ny = 11\nloads.P.kind = const\nloads.P.amplitude = 1\n"
        "solver.max_iter = 2\nsolver.newton_polish = false\nsolver.init = zero\n");
    const CaseReport s = run_case(c, Command::solve);
    EXPECT_EQ(s.exit_code, 3);
    EXPECT_EQ(s.verdict, "not-converged");
    const CaseReport r = run_case(c, Command::certify);
    EXPECT_EQ(r.exit_code, 3);
    EXPECT_FALSE(r.certificate.has_value());
}

TEST(RunCase, ReportNumbersComeFromModules) {
    const CaseConfig c = parse_config_text(
        "grid.nx = 13\ngrid.ny = 13\nloads.P.kind = sin-product\nloads.P.amplitude = 0.01\n");
    const CaseReport r = run_case(c, Command::certify);
    const CaseModel cm = build_case(c);
    MinimizeOptions o;
    const MinimizeResult run = minimize(cm.model, linear_solution(cm.model), o);
    const DualCertificate d = extract_certificate(cm.model, run);
    const Json j = Json::parse(report_json(r, c));
    EXPECT_EQ(j["certificate"]["gap"].get<double>(), *d.gap);
    EXPECT_EQ(j["certificate"]["lambda_min_A4"].get<double>(), *d.lambda_min_A4);
    EXPECT_EQ(j["certificate"]["residual_A1"].get<double>(), d.residual_A1);
    EXPECT_EQ(j["certificate"]["dual_value"].get<double>(), *d.dual_value);
    EXPECT_EQ(j["energies"]["J"].get<double>(), cm.model.energy(run.x).J);
    EXPECT_EQ(j["solver"]["iterations"].get<int>(), run.iterations);
    EXPECT_EQ(j["verdict"], d.verdict);
    EXPECT_EQ(j["schema_version"].get<int>(), kReportSchemaVersion);
    EXPECT_EQ(j["tool"]["version"], tool_version());
    EXPECT_EQ(j["config"]["loads.P.amplitude"], "0.01");
    EXPECT_FALSE(j.contains("wall_time_s"));
    EXPECT_TRUE(Json::parse(timing_json(r)).contains("wall_time_s"));
}

TEST(RunCase, WritesDeterministicReportsAndFieldDumps) {
    const CaseConfig c = parse_config_text(
        "grid.nx = 9\ngrid.ny = 7\nloads.P.kind = gaussian\nloads.P.amplitude = 0.02\n");
    const fs::path a = scratch("a"), b = scratch("b");
    const CaseReport ra = run_case(c, Command::certify, {a.string(), true});
    run_case(c, Command::certify, {b.string(), true});
    EXPECT_EQ(read_file(a / "report.json"), read_file(b / "report.json"));
    EXPECT_FALSE(read_file(a / "report.json").empty());
    EXPECT_TRUE(fs::exists(a / "timing.json"));

    std::vector<std::string> names;
    for (const auto& [name, path] : ra.fields) {
        names.push_back(name);
        EXPECT_EQ(read_file(a / path), read_file(b / path)) << name;
    }
    for (const char* want : {"u1", "u2", "w", "N11", "N12", "N22", "Q1", "Q2", "zstar1", "zstar2"})
        EXPECT_NE(std::find(names.begin(), names.end(), want), names.end()) << want;

    // w.csv holds x, y and the deflection at every node.
    const CaseModel cm = build_case(c);
    const MinimizeResult run = minimize(cm.model, linear_solution(cm.model));
    std::istringstream w(read_file(a / "fields" / "w.csv"));
    std::string line;
    std::getline(w, line);
    EXPECT_EQ(line, "x,y,value");
    int k = 0;
    while (std::getline(w, line)) {
        double x = 0, y = 0, v = 0;
        char c1 = 0, c2 = 0;
        std::istringstream row(line);
        row >> x >> c1 >> y >> c2 >> v;
        EXPECT_EQ(x, cm.grid.xk(k));
        EXPECT_EQ(y, cm.grid.yk(k));
        EXPECT_EQ(v, run.x[2 * cm.grid.size() + k]);
        ++k;
    }
    EXPECT_EQ(k, cm.grid.size());
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(RunCase, BuildT0AndProbeOnPlate) {
    const CaseConfig c = parse_config_text(
        "grid.nx = 11\ngrid.ny = 11\nloads.P1.kind = sin-product\nloads.P1.amplitude = 1e-3\n"
        "loads.P.kind = const\nloads.P.amplitude = 1e-4\n");
    const CaseReport t = run_case(c, Command::build_t0);
    ASSERT_TRUE(t.t0);
    EXPECT_EQ(t.t0->builder, "plate");
    const CaseModel cm = build_case(c);
    const T0Result direct = build_t0_plate(cm.grid, cm.loads);
    EXPECT_EQ(t.t0->residual, direct.residual);
    EXPECT_EQ(t.t0->norm_sq, direct.norm_sq);
    EXPECT_TRUE(t.t0->t_tilde_shift.has_value());
    EXPECT_EQ(t.exit_code, 0);

    const CaseReport p = run_case(c, Command::probe_coercivity);
    ASSERT_TRUE(p.probe);
    EXPECT_TRUE(p.probe->coercive);
    EXPECT_EQ(p.verdict, "coercive-along-probes");
    EXPECT_EQ(p.probe_directions.size(), p.probe->values.size());
    EXPECT_EQ(p.probe->t.size(), 12u);
}

TEST(RunCase, GeometryCheckOnSphere) {
    const CaseConfig c = parse_config_text(
        "model = shell\nshell.surface = sphere\nshell.R = 1.5\ngrid.nx = 33\ngrid.ny = 33\n"
        "grid.x0 = -0.7\ngrid.x1 = 0.7\ngrid.y1 = 1.2\n");
    const CaseReport r = run_case(c, Command::geometry_check);
    ASSERT_TRUE(r.geometry && r.geometry->gauss_error);
    EXPECT_LE(*r.geometry->gauss_error, 1e-6);
    EXPECT_EQ(r.exit_code, 0);

    const CaseReport flat = run_case(parse_config_text("grid.nx = 5\ngrid.ny = 5\n"), Command::geometry_check);
    EXPECT_EQ(flat.geometry->gauss_max, 0.0);
    EXPECT_EQ(flat.geometry->sqrt_a_min, 1.0);
}

TEST(RunCase, CommandNames) {
    for (Command c : {Command::solve, Command::certify, Command::build_t0, Command::probe_coercivity,
                      Command::geometry_check})
        EXPECT_EQ(parse_command(command_name(c)), c);
    EXPECT_THROW(parse_command("optimise"), Error);
}
