#pragma once

// Preference dynamics of a market with N sellers:
//
//   dJ_i/dt = F_i(J) = -gamma * J_i + a_i * softmax(J)_i
//
// Seller indices are 0-based throughout the library. Attractiveness is kept
// sorted non-decreasing; MarketParams records how the caller's order maps
// onto the sorted one.

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <vector>

namespace wkh {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class MarketParams {
public:
    // Sorts `attractiveness` (stable) and keeps the permutation.
    // Throws InvalidInput unless gamma > 0, every a_i > 0 and n >= 2.
    MarketParams(double gamma, std::vector<double> attractiveness);

    double gamma() const noexcept { return gamma_; }
    const Vector& a() const noexcept { return a_; }
    std::size_t n() const noexcept { return static_cast<std::size_t>(a_.size()); }
    double a_min() const noexcept { return a_(0); }
    double a_max() const noexcept { return a_(a_.size() - 1); }
    bool is_homogeneous() const noexcept { return a_min() == a_max(); }

    // permutation()[i] is the caller's index of the seller stored at sorted position i.
    const std::vector<std::size_t>& permutation() const noexcept { return order_; }

    // Maps a per-seller vector in sorted order back to the caller's order.
    Vector to_original_order(const Vector& sorted) const;

    MarketParams with_gamma(double gamma) const;

private:
    double gamma_;
    Vector a_;
    std::vector<std::size_t> order_;
};

class PreferenceState {
public:
    // Throws InvalidInput on non-finite entries.
    explicit PreferenceState(Vector j);
    PreferenceState(std::initializer_list<double> j);

    const Vector& values() const noexcept { return j_; }
    double operator[](std::size_t i) const { return j_(static_cast<Eigen::Index>(i)); }
    std::size_t size() const noexcept { return static_cast<std::size_t>(j_.size()); }

private:
    Vector j_;
};

// Differences J_k - J_base for every k != base, in increasing k.
class DeltaState {
public:
    DeltaState(std::size_t base, Vector deltas);

    std::size_t base() const noexcept { return base_; }
    const Vector& deltas() const noexcept { return d_; }
    std::size_t n() const noexcept { return static_cast<std::size_t>(d_.size()) + 1; }

    // Position of `seller` inside deltas(); seller must differ from base.
    std::size_t slot(std::size_t seller) const;
    // Seller index stored at position `slot`.
    std::size_t seller(std::size_t slot) const { return slot < base_ ? slot : slot + 1; }

private:
    std::size_t base_;
    Vector d_;
};

// Sectors of the difference space relative to the last seller:
// all differences negative, or a positive maximum reached at a seller.
struct SectorLabel {
    std::optional<std::size_t> max_positive_at;

    bool all_negative() const noexcept { return !max_positive_at.has_value(); }
    friend bool operator==(const SectorLabel&, const SectorLabel&) = default;
};

Vector softmax(const Vector& x);
double log_sum_exp(const Vector& x);
double sup_norm(const Vector& x);

DeltaState to_delta(const PreferenceState& s, std::size_t base);

// Recovers J from differences by placing the point on the simplex
// sum_i J_i / a_i = 1 / gamma.
PreferenceState lift_to_simplex(const MarketParams& p, const DeltaState& d);

// Boundary points whose largest difference is exactly 0 are labelled all-negative.
SectorLabel sector_of(const DeltaState& d);

Vector vector_field(const MarketParams& p, const PreferenceState& s);
Matrix jacobian(const MarketParams& p, const PreferenceState& s);

// Right-hand side of the difference dynamics relative to d.base().
Vector delta_field(const MarketParams& p, const DeltaState& d);

// sum_i J_i / a_i - 1 / gamma; zero exactly on the attracting simplex.
double simplex_residual(const MarketParams& p, const PreferenceState& s);

// Gradient potential of the homogeneous market; UnsupportedCase otherwise.
double potential(const MarketParams& p, const PreferenceState& s);

// J_i - J_top <= log(a_top / a_i) + tol for every seller i.
bool in_trapping_set(const MarketParams& p, const PreferenceState& s, std::size_t top,
                     double tol = 1e-9);
// Same set in difference coordinates, with top = d.base().
bool in_trapping_set(const MarketParams& p, const DeltaState& d, double tol = 1e-9);

namespace detail {
// vector_field without the state wrapper; `j` must already be finite and sized.
void field_into(const MarketParams& p, const Vector& j, Vector& out);
}  // namespace detail

}  // namespace wkh
