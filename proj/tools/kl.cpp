// kl: batch front end for the plate and shell solvers and the dual certificate.
//
//   kl certify case.cfg --out results --dump-fields
//   kl solve a.cfg b.cfg --jobs 2 --out results   (results/a, results/b)

#include "kl/config.hpp"
#include "kl/run_case.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace {

namespace fs = std::filesystem;

void configure_logging() {
    auto logger = spdlog::stderr_color_mt("kl");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    const char* env = std::getenv("KL_LOG");
    const std::string level = env ? env : "quiet";
    if (level == "quiet")
        spdlog::set_level(spdlog::level::warn);
    else if (level == "info")
        spdlog::set_level(spdlog::level::info);
    else if (level == "debug")
        spdlog::set_level(spdlog::level::debug);
    else
        throw kl::Error("cli.log", "KL_LOG must be quiet, info or debug, got '" + level + "'");
}

struct Job {
    std::string config;
    std::string out_dir;
    int exit_code = 1;
    std::string line;
};

// Output directories: the --out directory itself for a single case, one
// subdirectory per config stem (made unique) in batch mode.
std::vector<Job> plan_jobs(const std::vector<std::string>& configs, const std::string& out) {
    std::vector<Job> jobs;
    std::set<std::string> used;
    for (const std::string& cfg : configs) {
        Job j;
        j.config = cfg;
        if (configs.size() == 1) {
            j.out_dir = out;
        } else {
            std::string stem = fs::path(cfg).stem().string();
            std::string name = stem;
            for (int i = 2; used.count(name); ++i) name = stem + "_" + std::to_string(i);
            used.insert(name);
            j.out_dir = (fs::path(out) / name).string();
        }
        jobs.push_back(std::move(j));
    }
    return jobs;
}

void run_job(Job& job, kl::Command cmd, bool dump_fields) {
    try {
        const kl::CaseConfig cfg = kl::parse_config(job.config);
        const kl::CaseReport r = kl::run_case(cfg, cmd, {job.out_dir, dump_fields});
        job.exit_code = r.exit_code;
        job.line = job.config + ": " + r.verdict + " (exit " + std::to_string(r.exit_code) + ") -> " +
                   (fs::path(job.out_dir) / "report.json").string();
    } catch (const std::exception& e) {
        job.exit_code = 1;
        job.line = job.config + ": error: " + e.what();
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonlinear Kirchhoff-Love plate and shell solver with dual certificates"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kl::tool_version());

    std::vector<std::string> configs;
    std::string out = "kl_out";
    bool dump_fields = false;
    int jobs = 1;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"solve", "Minimise the energy"},
        {"certify", "Minimise, then build and check the dual certificate"},
        {"build-t0", "Build the load-balancing tensors T0 and T-tilde"},
        {"probe-coercivity", "Sample the coercivity functional along rays"},
        {"geometry-check", "Report middle-surface geometry diagnostics"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("configs", configs, "Case configuration files")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "Output directory")->capture_default_str();
        sub->add_flag("--dump-fields", dump_fields, "Write CSV field dumps (x, y, value)");
        sub->add_option("--jobs", jobs, "Cases run concurrently")->check(CLI::PositiveNumber)->capture_default_str();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        configure_logging();
    } catch (const std::exception& e) {
        std::cerr << "kl: error: " << e.what() << '\n';
        return 1;
    }

    const kl::Command cmd = kl::parse_command(app.get_subcommands().front()->get_name());
    std::vector<Job> plan = plan_jobs(configs, out);

    std::atomic<std::size_t> next{0};
    std::mutex print;
    auto worker = [&] {
        for (std::size_t i = next++; i < plan.size(); i = next++) {
            run_job(plan[i], cmd, dump_fields);
            const std::lock_guard<std::mutex> lock(print);
            (plan[i].exit_code == 1 ? std::cerr : std::cout) << plan[i].line << '\n';
        }
    };
    const int n_threads = std::min<int>(jobs, static_cast<int>(plan.size()));
    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();

    // Errors take precedence; otherwise the largest case exit code.
    int code = 0;
    for (const Job& j : plan) {
        if (j.exit_code == 1) return 1;
        code = std::max(code, j.exit_code);
    }
    return code;
}
