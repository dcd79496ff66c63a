#pragma once

#include "wkh/bifurcation.hpp"
#include "wkh/integrator.hpp"
#include "wkh/reduced_field.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace wkh::cli {

// Invalid configuration; the message starts with the offending field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SimulateConfig {
    double gamma = 0.0;
    std::vector<double> a;
    std::vector<double> initial_state;  // caller's seller order
    IntegrationOptions integration;
};

struct EquilibriaConfig {
    std::string solver = "auto";  // auto | homogeneous | two_seller | two_cluster | general
    std::optional<double> gamma;
    std::vector<double> a;
    std::optional<ClusterSpec> cluster;
    std::size_t starts = 500;
};

struct SweepConfig {
    RegimeTag regime = RegimeTag::TwoSeller;
    std::vector<double> a;
    std::optional<ClusterSpec> cluster;
    std::vector<double> grid;
};

struct StreamfieldConfig {
    double gamma = 0.0;
    std::vector<double> a;
    std::size_t base = 3;  // 1-based seller label
    double lo = -3.0;
    double hi = 3.0;
    std::size_t count = 201;
};

struct VerifyConfig {
    std::optional<double> gamma;
    std::vector<double> a;
    std::optional<ClusterSpec> cluster;
    std::vector<std::string> checks;
    std::size_t trials = 100;
    std::optional<double> horizon;
    double field_bias = 0.0;
    IntegrationOptions integration;
};

struct RunConfig {
    std::string command;
    std::string out;
    std::string format = "csv";
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::variant<SimulateConfig, EquilibriaConfig, SweepConfig, StreamfieldConfig, VerifyConfig> payload;
};

// Reads a JSON config file; ConfigError on I/O or syntax problems.
nlohmann::json load_config_file(const std::string& path);

// Validates the merged config for `command`. Unknown keys are rejected.
RunConfig resolve(const std::string& command, const nlohmann::json& config);

// Parses "1,2.5,3" into numbers; ConfigError names `field` on failure.
std::vector<double> parse_number_list(const std::string& text, const std::string& field);

}  // namespace wkh::cli
