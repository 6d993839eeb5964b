#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "guidelab/theory.hpp"

namespace guidelab {

struct VerifyOptions {
    std::uint64_t seed = 1;
    bool fast = false;  // divide every trial count by 10
    int workers = 0;
};

// Names accepted by run_check, in suite order.
const std::vector<std::string>& verification_checks();

/// Runs one named check with its shipped parameters. Some checks produce more
/// than one row (one per direction or scale). Throws UnknownCheck.
std::vector<IdentityReport> run_check(const std::string& name, const VerifyOptions& opts = {});

// CSV with one row per report: name, lhs, rhs, stderr, z, passed, tol_abs, max_abs_error, trials.
std::string report_csv(const std::vector<IdentityReport>& reports);

/// Runs the named checks (all when empty). Unknown names are rejected before
/// anything runs. `on_report` sees each report as it finishes.
std::vector<IdentityReport> run_verification_suite(
    const std::vector<std::string>& names, const VerifyOptions& opts = {},
    const std::function<void(const IdentityReport&)>& on_report = {});

}  // namespace guidelab
