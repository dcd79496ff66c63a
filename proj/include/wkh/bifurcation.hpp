#pragma once

#include "wkh/equilibria.hpp"
#include "wkh/reduced_field.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace wkh {

// Fold of the two-seller field: below it there are three equilibria, above it one.
// Throws PreconditionError unless a1 < a2.
double critical_gamma_two_seller(double a1, double a2);

// (n-k) a_low (1 - L/2) - k a_high (1 + L/2) with L = log((n-k)/k).
double cluster_A(const ClusterSpec& c);

struct UnimodalRegime {
    double gamma_star;
};
struct NonMonotoneRegime {
    double gamma1;
    double gamma2;
    double gamma3;
};
using ClusterRegime = std::variant<UnimodalRegime, NonMonotoneRegime>;

// Zeros of the critical values G(delta_+(gamma)) and G(delta_-(gamma)).
// Throws PreconditionError for the fully symmetric case (a_low == a_high, 2k == n).
ClusterRegime two_cluster_thresholds(const ClusterSpec& c);

enum class ThresholdKind { SaddleNode, SymmetryBreaking };
const char* to_string(ThresholdKind k) noexcept;

struct Threshold {
    double gamma;
    ThresholdKind kind;
};

enum class RegimeTag { Homogeneous, TwoSeller, TwoCluster };
const char* to_string(RegimeTag t) noexcept;

struct SweepFamily {
    RegimeTag regime = RegimeTag::TwoSeller;
    std::vector<double> a;            // homogeneous and two-seller families
    std::optional<ClusterSpec> cluster;  // two-cluster family
};

struct BranchPoint {
    double delta;  // J_1 - J_N
    Stability stability;
    std::string branch;  // "i<interval>r<rank>", stable within a regime interval
};

struct BifurcationDiagram {
    std::vector<double> gammas;
    std::vector<std::vector<BranchPoint>> points;  // one list per gamma, ascending delta
    std::vector<Threshold> thresholds;             // ascending
    std::string regime_string;                     // equilibrium counts between fold thresholds
};

// Increasing grid with constant ratio between neighbours.
std::vector<double> geometric_grid(double lo, double hi, std::size_t count);

// Solves the family at every grid value and locates the thresholds inside
// [grid.front(), grid.back()]. Throws InvalidInput on a bad grid or a family
// that does not match its regime tag.
BifurcationDiagram sweep(const SweepFamily& family, const std::vector<double>& grid, unsigned threads = 1);

}  // namespace wkh
