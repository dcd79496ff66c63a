#pragma once

#include "wkh/model.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

namespace wkh {

enum class Scheme { FixedStepRK4, AdaptiveRK45 };

struct IntegrationOptions {
    Scheme scheme = Scheme::AdaptiveRK45;
    double dt_init = 1e-2;  // first step (adaptive) or the step (fixed)
    double rel_tol = 1e-9;
    double abs_tol = 1e-11;
    std::optional<double> t_max;         // 200 / gamma when unset
    double convergence_tol = 1e-10;      // sup-norm of the field
    std::optional<double> record_every;  // t_max / 1000 when unset
    int convergence_steps = 5;           // consecutive accepted steps below convergence_tol
    double flip_band = 1e-12;            // |J_i - J_j| below this carries no ordering sign

    // Throws InvalidInput on non-positive values or tolerances below 1e-13.
    void validate() const;
    double resolved_t_max(double gamma) const;
    double resolved_record_every(double gamma) const;
};

struct OrderingFlip {
    std::size_t i;
    std::size_t j;  // i < j
    friend bool operator==(const OrderingFlip&, const OrderingFlip&) = default;
};
struct EnteredTrappingSet {
    std::size_t top;
    friend bool operator==(const EnteredTrappingSet&, const EnteredTrappingSet&) = default;
};
struct Converged {
    friend bool operator==(const Converged&, const Converged&) = default;
};
using EventKind = std::variant<OrderingFlip, EnteredTrappingSet, Converged>;

struct Event {
    double time;
    EventKind kind;
};

enum class Termination { Converged, ReachedTMax };

struct Trajectory {
    std::vector<double> times;  // strictly increasing, starts at 0
    std::vector<PreferenceState> states;
    std::vector<Vector> rates;  // field at each sample; enables Hermite interpolation
    std::vector<Event> events;  // sorted by time
    std::optional<PreferenceState> converged_to;
    Termination termination = Termination::ReachedTMax;
    double t_max = 0.0;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;

    bool converged() const noexcept { return converged_to.has_value(); }
};

using FieldFn = std::function<void(const Vector& j, Vector& out)>;

// Integrates the market dynamics until the field stays below
// convergence_tol for convergence_steps accepted steps, or until t_max.
// Samples land exactly on multiples of record_every.
Trajectory integrate(const MarketParams& p, const PreferenceState& s0, const IntegrationOptions& opts = {});

// Same driver with a caller-supplied right-hand side. Event detection still
// uses `p` for the trapping sets.
Trajectory integrate_field(const MarketParams& p, const FieldFn& field, const PreferenceState& s0,
                           const IntegrationOptions& opts);

struct OrderingEvent {
    double time;
    std::size_t i;
    std::size_t j;
};

// Sign changes of J_i - J_j between samples, located by bisection on the
// cubic Hermite interpolant. Differences inside `band` carry no sign.
std::vector<OrderingEvent> detect_ordering_events(const Trajectory& traj, double band = 1e-12);

// Evaluates the cubic Hermite interpolant between samples k and k+1.
Vector hermite(const Trajectory& traj, std::size_t k, double t);

struct BasinBox {
    PreferenceState lower;
    PreferenceState upper;
};

struct BasinSample {
    PreferenceState start;
    std::optional<PreferenceState> limit;  // empty when t_max was reached first
};

// Uniform initial conditions in the box, one independent stream per index.
std::vector<BasinSample> basin_sample(const MarketParams& p, const BasinBox& box, std::size_t count,
                                      std::uint64_t seed, const IntegrationOptions& opts = {},
                                      unsigned threads = 1);

}  // namespace wkh
