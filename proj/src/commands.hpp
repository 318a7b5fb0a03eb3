#pragma once

// Subcommand implementations behind the timo3 executable. Exit codes:
// 0 success, 1 usage/config/contract failure, 2 hypothesis-gate failure,
// 3 blow-up during time integration. `fit` returns 0 only when the fitted
// decay is exponential-quality (delta0 > 0, r^2 >= 0.995); `verify` and
// `check` return 0 only when every check passes.

#include <optional>
#include <string>
#include <utility>

namespace timo3cli {

int cmd_run(const std::string& config_path, const std::string& out_dir,
            bool override_hypotheses);
int cmd_spectrum(const std::string& config_path, const std::string& out_dir,
                 bool override_hypotheses);
int cmd_verify(const std::string& config_path);
int cmd_fit(const std::string& csv_path,
            const std::optional<std::pair<double, double>>& window);
int cmd_check(const std::string& config_path);

}  // namespace timo3cli
