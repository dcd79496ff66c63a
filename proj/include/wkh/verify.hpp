#pragma once

#include "wkh/integrator.hpp"
#include "wkh/model.hpp"
#include "wkh/reduced_field.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace wkh {

struct CheckReport {
    std::string name;
    nlohmann::json params;  // market parameters and check settings
    std::uint64_t seed = 0;
    bool passed = false;
    nlohmann::json details;     // margins and counts
    nlohmann::json reproducer;  // set on failure: everything needed to rerun the failing case

    nlohmann::json to_json() const;
};

struct CheckOptions {
    std::uint64_t seed = 0;
    std::size_t trials = 100;
    std::optional<double> horizon;  // 200 / gamma when unset
    IntegrationOptions integration;
    unsigned threads = 1;
    // Constant added to every component of the field during integration.
    // Nonzero values exist only to exercise failure paths.
    double field_bias = 0.0;
};

CheckReport check_simplex_decay(const MarketParams& p, const PreferenceState& s0, const CheckOptions& opts = {});
CheckReport check_gronwall_bound(const MarketParams& p, const PreferenceState& s0, const CheckOptions& opts = {});
CheckReport check_monotone_ordering(const MarketParams& p, const CheckOptions& opts = {});
CheckReport check_eventual_ordering(const MarketParams& p, const CheckOptions& opts = {});
CheckReport check_trapping(const MarketParams& p, const CheckOptions& opts = {});
CheckReport check_cooperative_region(const MarketParams& p, const CheckOptions& opts = {});
CheckReport check_convergence_census(const MarketParams& p, const CheckOptions& opts = {});
CheckReport check_homogeneous_census(const MarketParams& p);
CheckReport check_contraction(const MarketParams& p, const CheckOptions& opts = {});
CheckReport check_gradient_structure(const MarketParams& p, const CheckOptions& opts = {});
CheckReport check_two_seller_regimes(double a1, double a2);
CheckReport check_two_cluster_regimes(const ClusterSpec& c);

struct ManifestEntry {
    std::string claim;
    std::vector<std::string> checks;
};

// Every claim covered by the suite and the checks that exercise it.
const std::vector<ManifestEntry>& manifest();

// All check names, in suite order.
const std::vector<std::string>& check_names();

struct SuiteConfig {
    std::optional<MarketParams> market;
    std::optional<ClusterSpec> cluster;
    std::vector<std::string> only;  // empty: every applicable check
    CheckOptions options;
};

// Runs the checks that apply to the configured market and cluster. A named
// check that does not apply yields a failed report. Unknown names throw InvalidInput.
std::vector<CheckReport> run_suite(const SuiteConfig& config);

// Whether `name` can run on this configuration.
bool check_applies(const std::string& name, const SuiteConfig& config);

}  // namespace wkh
