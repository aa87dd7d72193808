#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hhnas::cli {

inline constexpr const char *kToolVersion = "0.1.0";

enum ExitCode : int {
  kOk = 0,
  kInternalError = 1,
  kConfigError = 2,
  kEvaluatorError = 3,
};

struct Options {
  std::vector<std::string> overrides;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

/// Output root: --out, else the config's output_dir, else $HHNAS_OUT_DIR,
/// else ./runs.
std::filesystem::path output_root(const Options &opts,
                                  const std::optional<std::string> &config_dir);

int cmd_run(const std::filesystem::path &config, const Options &opts, std::ostream &out,
            std::ostream &err);
int cmd_resume(const std::filesystem::path &checkpoint, const Options &opts,
               std::ostream &out, std::ostream &err);
int cmd_bench(const std::filesystem::path &config, const Options &opts, std::ostream &out,
              std::ostream &err);
int cmd_report(const std::filesystem::path &run_dir, const Options &opts,
               std::ostream &out, std::ostream &err);

} // namespace hhnas::cli
