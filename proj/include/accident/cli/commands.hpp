#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "accident/alerts/client.hpp"

namespace accident::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kConfig = 2,
  kIo = 3,
  kMissingPrerequisite = 4,
  kDelivery = 5,
};

struct Options {
  std::string config_path;  // empty: built-in defaults
  std::optional<std::uint64_t> seed;
  int phase = 1;
  std::string checkpoint;
  std::string manifest;
  std::string out;
  std::string clip;
  bool sweep_iters = false;
  std::optional<std::size_t> positives;
  std::optional<std::size_t> negatives;
};

/// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

int cmd_synth(const Options& opt, std::ostream& out, std::ostream& log);
int cmd_train(const Options& opt, std::ostream& out, std::ostream& log);
int cmd_eval(const Options& opt, std::ostream& out, std::ostream& log);
/// `client` overrides the configured alert client when non-null.
int cmd_alert(const Options& opt, std::ostream& out, std::ostream& log, alerts::AlertClient* client = nullptr);

/// Parses argv (program name first) and dispatches to a subcommand.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& log);

}  // namespace accident::cli
