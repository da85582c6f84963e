#pragma once

#include "mpcguard/scenario.hpp"
#include "mpcguard/sim.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mpcguard::cli {

inline constexpr const char* kLogHeader =
    "k,t,x1,x2,y1,y2,ytilde1,ytilde2,u,ua,ya1,ya2,residual,cusum,alarm,status,cost,violation";
inline constexpr const char* kBatchHeader =
    "scenario,alarmed,alarm_step,delay,max_h1,max_h2,false_positive,error";
inline constexpr const char* kOutputDirEnv = "MPCGUARD_OUTPUT_DIR";

enum ExitCode : int { kOk = 0, kError = 1, kAlarm = 2 };

/// Shortest round-trip formatting ("%.17g").
std::string format_number(double value);

void write_log_csv(const RunLog& log, std::ostream& out);
void write_summary(const RunLog& log, std::ostream& out);

struct RunOptions {
    std::filesystem::path output_dir;
    std::vector<Override> overrides;
    bool quiet = false;
};

/// Runs one scenario file and writes log.csv and summary.txt into
/// `options.output_dir`. Returns kOk, kAlarm or kError.
int run_command(const std::filesystem::path& scenario, const RunOptions& options, std::ostream& out,
                std::ostream& err);

/// Runs every file matching `pattern` concurrently, each into
/// <output_dir>/<file stem>/, and writes <output_dir>/batch.csv. Returns kError
/// when nothing matches or any scenario fails, kOk otherwise.
int batch_command(const std::string& pattern, const RunOptions& options, unsigned jobs, std::ostream& out,
                  std::ostream& err);

/// Parses and validates a scenario file without running it.
int validate_command(const std::filesystem::path& scenario, const std::vector<Override>& overrides,
                     std::ostream& out, std::ostream& err);

/// Full command-line entry point (run | batch | validate).
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace mpcguard::cli
