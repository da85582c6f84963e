#include "mpcguard/cli.hpp"

#include <CLI11.hpp>
#include <glob.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace mpcguard::cli {

std::string format_number(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

namespace {

double first_or_zero(const Vector& v) { return v.size() > 0 ? v[0] : 0.0; }
double at_or_zero(const Vector& v, Eigen::Index i) { return v.size() > i ? v[i] : 0.0; }

std::string optional_step(const std::optional<TimeIndex>& k) { return k ? std::to_string(*k) : "none"; }

std::string describe(const DetectionDelay& d) {
    switch (d.outcome) {
        case DelayOutcome::none: return "none";
        case DelayOutcome::detected: return std::to_string(d.steps);
        case DelayOutcome::false_positive: return "false_positive (" + std::to_string(d.steps) + ")";
    }
    return "none";
}

struct Outcome {
    std::filesystem::path scenario;
    std::string name;
    bool ok = false;
    std::string error;
    RunSummary summary;
    std::optional<TimeIndex> alarm;
    double sample_time = 0.1;
};

Outcome run_to_directory(const std::filesystem::path& scenario, const std::filesystem::path& dir,
                         const std::vector<Override>& overrides) {
    Outcome outcome;
    outcome.scenario = scenario;
    try {
        const ScenarioConfig cfg = load_scenario(scenario, overrides);
        const RunLog log = run(cfg);
        std::filesystem::create_directories(dir);
        std::ofstream csv(dir / "log.csv");
        std::ofstream summary(dir / "summary.txt");
        if (!csv || !summary) throw std::runtime_error("cannot write into " + dir.string());
        write_log_csv(log, csv);
        write_summary(log, summary);
        outcome.ok = true;
        outcome.summary = log.summary;
        outcome.alarm = log.first_alarm();
        outcome.sample_time = log.sample_time;
    } catch (const std::exception& e) {
        outcome.error = e.what();
    }
    return outcome;
}

std::filesystem::path default_output_dir() {
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return "mpcguard-out";
}

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n") == std::string::npos) return text;
    std::string quoted = "\"";
    for (char c : text) {
        if (c == '"') quoted += '"';
        quoted += c == '\n' ? ' ' : c;
    }
    return quoted + "\"";
}

std::vector<std::filesystem::path> expand(const std::string& pattern) {
    std::vector<std::filesystem::path> paths;
    glob_t matches{};
    if (::glob(pattern.c_str(), 0, nullptr, &matches) == 0) {
        for (std::size_t i = 0; i < matches.gl_pathc; ++i) paths.emplace_back(matches.gl_pathv[i]);
    }
    ::globfree(&matches);
    std::sort(paths.begin(), paths.end());
    return paths;
}

}  // namespace

void write_log_csv(const RunLog& log, std::ostream& out) {
    out << kLogHeader << '\n';
    for (const auto& r : log.records) {
        const std::string status = r.status ? std::string(to_string(*r.status)) : "halted";
        out << r.k << ',' << format_number(r.t) << ',' << format_number(r.x_true[0]) << ','
            << format_number(r.x_true[1]) << ',' << format_number(r.y_measured[0]) << ','
            << format_number(r.y_measured[1]) << ',' << format_number(r.ytilde[0]) << ','
            << format_number(r.ytilde[1]) << ',' << format_number(first_or_zero(r.u_applied)) << ','
            << format_number(first_or_zero(r.u_attack)) << ',' << format_number(at_or_zero(r.y_attack, 0)) << ','
            << format_number(at_or_zero(r.y_attack, 1)) << ',' << format_number(r.residual) << ','
            << format_number(r.cusum) << ',' << (r.alarm ? 1 : 0) << ',' << status << ',';
        if (r.status) out << format_number(r.cost) << ',' << format_number(r.violation);
        else out << ',';
        out << '\n';
    }
}

void write_summary(const RunLog& log, std::ostream& out) {
    const auto alarm = log.first_alarm();
    out << "steps: " << log.records.size() << '\n';
    out << "halted_reason: " << log.summary.halted_reason << '\n';
    out << "alarm_step: " << optional_step(alarm) << '\n';
    out << "alarm_time: " << (alarm ? format_number(static_cast<double>(*alarm) * log.sample_time) : "none") << '\n';
    out << "alarm_count: " << log.summary.alarm_steps.size() << '\n';
    out << "attack_start: "
        << (log.summary.attack_start >= 0 ? std::to_string(log.summary.attack_start) : std::string("none")) << '\n';
    out << "detection_delay: " << describe(log.summary.delay) << '\n';
    out << "max_state:";
    for (Eigen::Index i = 0; i < log.summary.max_state.size(); ++i) out << ' ' << format_number(log.summary.max_state[i]);
    out << "\nfinal_state:";
    for (Eigen::Index i = 0; i < log.summary.final_state.size(); ++i) out << ' ' << format_number(log.summary.final_state[i]);
    out << '\n';
}

int run_command(const std::filesystem::path& scenario, const RunOptions& options, std::ostream& out,
                std::ostream& err) {
    const Outcome o = run_to_directory(scenario, options.output_dir, options.overrides);
    if (!o.ok) {
        err << "error: " << o.error << '\n';
        return kError;
    }
    if (!options.quiet) {
        out << scenario.string() << ": ";
        if (o.alarm) {
            out << "alarm at step " << *o.alarm << " (t = " << format_number(static_cast<double>(*o.alarm) * o.sample_time)
                << " s), delay " << describe(o.summary.delay);
        } else {
            out << "no alarm";
        }
        out << "; outputs in " << options.output_dir.string() << '\n';
    }
    return o.alarm ? kAlarm : kOk;
}

int batch_command(const std::string& pattern, const RunOptions& options, unsigned jobs, std::ostream& out,
                  std::ostream& err) {
    const auto files = expand(pattern);
    if (files.empty()) {
        err << "error: no scenario matches '" << pattern << "'\n";
        return kError;
    }

    std::vector<std::string> names;
    std::map<std::string, int> seen;
    for (const auto& f : files) {
        std::string name = f.stem().string();
        if (const int n = ++seen[name]; n > 1) name += "-" + std::to_string(n);
        names.push_back(name);
    }

    std::vector<Outcome> outcomes(files.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < files.size(); i = next++) {
            outcomes[i] = run_to_directory(files[i], options.output_dir / names[i], options.overrides);
            outcomes[i].name = names[i];
        }
    };
    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, static_cast<unsigned>(files.size()));
    {
        std::vector<std::jthread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }

    std::filesystem::create_directories(options.output_dir);
    std::ofstream batch(options.output_dir / "batch.csv");
    if (!batch) {
        err << "error: cannot write " << (options.output_dir / "batch.csv").string() << '\n';
        return kError;
    }
    batch << kBatchHeader << '\n';
    bool failed = false;
    for (const auto& o : outcomes) {
        batch << csv_field(o.name) << ',';
        if (!o.ok) {
            failed = true;
            batch << ",,,,,," << csv_field(o.error) << '\n';
            err << "error: " << o.error << '\n';
            continue;
        }
        const bool fp = o.summary.delay.outcome == DelayOutcome::false_positive;
        const bool detected = o.summary.delay.outcome == DelayOutcome::detected;
        batch << (o.alarm ? 1 : 0) << ',' << (o.alarm ? std::to_string(*o.alarm) : "") << ','
              << (detected ? std::to_string(o.summary.delay.steps) : "") << ','
              << format_number(o.summary.max_state[0]) << ',' << format_number(o.summary.max_state[1]) << ','
              << (fp ? 1 : 0) << ",\n";
        if (!options.quiet) {
            out << o.name << ": " << (o.alarm ? "alarm at step " + std::to_string(*o.alarm) : "no alarm") << '\n';
        }
    }
    return failed ? kError : kOk;
}

int validate_command(const std::filesystem::path& scenario, const std::vector<Override>& overrides,
                     std::ostream& out, std::ostream& err) {
    try {
        const ScenarioConfig cfg = load_scenario(scenario, overrides);
        out << scenario.string() << ": ok (" << cfg.total_steps << " steps, " << cfg.attack.segments.size()
            << " attack segment" << (cfg.attack.segments.size() == 1 ? "" : "s") << ")\n";
        return kOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kError;
    }
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Coupled-tanks NMPC with a proximity-constrained reference and CUSUM attack detection"};
    app.require_subcommand(1);

    std::string output;
    std::vector<std::string> sets;
    bool quiet = false;
    unsigned jobs = 0;
    std::string scenario;
    std::string pattern;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--set", sets, "Override a scenario value, e.g. mpc.horizon=15 (repeatable)");
    };

    CLI::App* run_cmd = app.add_subcommand("run", "Run one scenario and write log.csv and summary.txt");
    run_cmd->add_option("scenario", scenario, "Scenario file")->required();
    run_cmd->add_option("-o,--output", output, std::string("Output directory (default: $") + kOutputDirEnv + ")");
    run_cmd->add_flag("-q,--quiet", quiet, "Print nothing on success");
    add_common(run_cmd);

    CLI::App* batch_cmd = app.add_subcommand("batch", "Run every scenario matching a glob pattern");
    batch_cmd->add_option("pattern", pattern, "Glob pattern, quoted (e.g. 'scenarios/*.yaml')")->required();
    batch_cmd->add_option("-o,--output", output, std::string("Output directory (default: $") + kOutputDirEnv + ")");
    batch_cmd->add_option("-j,--jobs", jobs, "Parallel runs (0 = one per hardware thread)");
    batch_cmd->add_flag("-q,--quiet", quiet, "Print nothing on success");
    add_common(batch_cmd);

    CLI::App* validate_cmd = app.add_subcommand("validate", "Parse and validate a scenario file");
    validate_cmd->add_option("scenario", scenario, "Scenario file")->required();
    add_common(validate_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kError;
    }

    RunOptions options;
    options.quiet = quiet;
    options.output_dir = output.empty() ? default_output_dir() : std::filesystem::path(output);
    try {
        for (const auto& s : sets) options.overrides.push_back(parse_override(s));
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kError;
    }

    if (run_cmd->parsed()) return run_command(scenario, options, out, err);
    if (batch_cmd->parsed()) return batch_command(pattern, options, jobs, out, err);
    return validate_command(scenario, options.overrides, out, err);
}

}  // namespace mpcguard::cli
