#include "wkh/model.hpp"

#include "wkh/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace wkh {

namespace {

void require_finite(const Vector& v, const char* what) {
    if (!v.allFinite()) throw InvalidInput(std::string(what) + ": non-finite entry");
}

void require_size(const MarketParams& p, std::size_t n, const char* what) {
    if (n != p.n()) {
        throw InvalidInput(std::string(what) + ": expected length " + std::to_string(p.n()) +
                           ", got " + std::to_string(n));
    }
}

}  // namespace

MarketParams::MarketParams(double gamma, std::vector<double> attractiveness) : gamma_(gamma) {
    if (!(std::isfinite(gamma) && gamma > 0.0)) throw InvalidInput("gamma: must be a positive finite number");
    if (attractiveness.size() < 2) throw InvalidInput("a: at least two sellers are required");
    for (double ai : attractiveness) {
        if (!(std::isfinite(ai) && ai > 0.0)) throw InvalidInput("a: every attractiveness must be positive and finite");
    }
    order_.resize(attractiveness.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t l, std::size_t r) { return attractiveness[l] < attractiveness[r]; });
    a_.resize(static_cast<Eigen::Index>(attractiveness.size()));
    for (std::size_t i = 0; i < order_.size(); ++i) a_(static_cast<Eigen::Index>(i)) = attractiveness[order_[i]];
}

Vector MarketParams::to_original_order(const Vector& sorted) const {
    require_size(*this, static_cast<std::size_t>(sorted.size()), "to_original_order");
    Vector out(sorted.size());
    for (std::size_t i = 0; i < order_.size(); ++i) {
        out(static_cast<Eigen::Index>(order_[i])) = sorted(static_cast<Eigen::Index>(i));
    }
    return out;
}

MarketParams MarketParams::with_gamma(double gamma) const {
    MarketParams copy = *this;
    if (!(std::isfinite(gamma) && gamma > 0.0)) throw InvalidInput("gamma: must be a positive finite number");
    copy.gamma_ = gamma;
    return copy;
}

PreferenceState::PreferenceState(Vector j) : j_(std::move(j)) { require_finite(j_, "state"); }

PreferenceState::PreferenceState(std::initializer_list<double> j)
    : PreferenceState(Vector::Map(j.begin(), static_cast<Eigen::Index>(j.size()))) {}

DeltaState::DeltaState(std::size_t base, Vector deltas) : base_(base), d_(std::move(deltas)) {
    require_finite(d_, "deltas");
    if (d_.size() < 1) throw InvalidInput("deltas: at least one difference is required");
    if (base_ > static_cast<std::size_t>(d_.size())) throw InvalidInput("deltas: base index out of range");
}

std::size_t DeltaState::slot(std::size_t seller) const {
    if (seller == base_ || seller >= n()) throw InvalidInput("delta slot: seller out of range or equal to base");
    return seller < base_ ? seller : seller - 1;
}

Vector softmax(const Vector& x) {
    const double m = x.maxCoeff();
    Vector e = (x.array() - m).exp();
    return e / e.sum();
}

double log_sum_exp(const Vector& x) {
    const double m = x.maxCoeff();
    return m + std::log((x.array() - m).exp().sum());
}

double sup_norm(const Vector& x) { return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff(); }

DeltaState to_delta(const PreferenceState& s, std::size_t base) {
    const std::size_t n = s.size();
    if (base >= n) throw InvalidInput("to_delta: base index out of range");
    Vector d(static_cast<Eigen::Index>(n - 1));
    for (std::size_t k = 0, slot = 0; k < n; ++k) {
        if (k == base) continue;
        d(static_cast<Eigen::Index>(slot++)) = s[k] - s[base];
    }
    return DeltaState(base, std::move(d));
}

PreferenceState lift_to_simplex(const MarketParams& p, const DeltaState& d) {
    require_size(p, d.n(), "lift_to_simplex");
    const Vector& a = p.a();
    const auto base = static_cast<Eigen::Index>(d.base());
    double weighted = 0.0;
    for (std::size_t slot = 0; slot + 1 < d.n(); ++slot) {
        weighted += d.deltas()(static_cast<Eigen::Index>(slot)) / a(static_cast<Eigen::Index>(d.seller(slot)));
    }
    const double jbase = (1.0 / p.gamma() - weighted) / a.cwiseInverse().sum();
    Vector j(a.size());
    j(base) = jbase;
    for (std::size_t slot = 0; slot + 1 < d.n(); ++slot) {
        j(static_cast<Eigen::Index>(d.seller(slot))) = jbase + d.deltas()(static_cast<Eigen::Index>(slot));
    }
    return PreferenceState(std::move(j));
}

SectorLabel sector_of(const DeltaState& d) {
    Eigen::Index arg = 0;
    const double m = d.deltas().maxCoeff(&arg);
    if (m > 0.0) return SectorLabel{d.seller(static_cast<std::size_t>(arg))};
    return SectorLabel{};
}

void detail::field_into(const MarketParams& p, const Vector& j, Vector& out) {
    const double m = j.maxCoeff();
    out = (j.array() - m).exp();
    out *= 1.0 / out.sum();
    out = p.a().cwiseProduct(out) - p.gamma() * j;
}

Vector vector_field(const MarketParams& p, const PreferenceState& s) {
    require_size(p, s.size(), "vector_field");
    Vector out;
    detail::field_into(p, s.values(), out);
    return out;
}

Matrix jacobian(const MarketParams& p, const PreferenceState& s) {
    require_size(p, s.size(), "jacobian");
    const Vector q = softmax(s.values());
    // a_i * (q_i q_l) keeps the homogeneous Jacobian exactly symmetric.
    Matrix jac = -(p.a().asDiagonal() * (q * q.transpose()));
    jac.diagonal() = p.a().cwiseProduct(q.cwiseProduct((1.0 - q.array()).matrix())).array() - p.gamma();
    return jac;
}

Vector delta_field(const MarketParams& p, const DeltaState& d) {
    require_size(p, d.n(), "delta_field");
    const Vector& a = p.a();
    const Vector& dl = d.deltas();
    const double aj = a(static_cast<Eigen::Index>(d.base()));
    // Scale numerator and denominator by exp(-m) so large differences stay finite.
    const double m = std::max(0.0, dl.maxCoeff());
    const Vector scaled = (dl.array() - m).exp();
    const double denom = std::exp(-m) + scaled.sum();
    Vector g(dl.size());
    for (Eigen::Index slot = 0; slot < dl.size(); ++slot) {
        const double ai = a(static_cast<Eigen::Index>(d.seller(static_cast<std::size_t>(slot))));
        g(slot) = -p.gamma() * dl(slot) + (ai * scaled(slot) - aj * std::exp(-m)) / denom;
    }
    return g;
}

double simplex_residual(const MarketParams& p, const PreferenceState& s) {
    require_size(p, s.size(), "simplex_residual");
    return s.values().cwiseQuotient(p.a()).sum() - 1.0 / p.gamma();
}

double potential(const MarketParams& p, const PreferenceState& s) {
    require_size(p, s.size(), "potential");
    if (!p.is_homogeneous()) {
        throw UnsupportedCase("potential: heterogeneous attractiveness has no gradient potential");
    }
    return 0.5 * p.gamma() * s.values().squaredNorm() - p.a_max() * log_sum_exp(s.values());
}

bool in_trapping_set(const MarketParams& p, const PreferenceState& s, std::size_t top, double tol) {
    require_size(p, s.size(), "in_trapping_set");
    if (top >= p.n()) throw InvalidInput("in_trapping_set: seller index out of range");
    const Vector& a = p.a();
    const auto t = static_cast<Eigen::Index>(top);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (s.values()(i) - s.values()(t) > std::log(a(t) / a(i)) + tol) return false;
    }
    return true;
}

bool in_trapping_set(const MarketParams& p, const DeltaState& d, double tol) {
    require_size(p, d.n(), "in_trapping_set");
    const Vector& a = p.a();
    const double at = a(static_cast<Eigen::Index>(d.base()));
    for (std::size_t slot = 0; slot + 1 < d.n(); ++slot) {
        const double ai = a(static_cast<Eigen::Index>(d.seller(slot)));
        if (d.deltas()(static_cast<Eigen::Index>(slot)) > std::log(at / ai) + tol) return false;
    }
    return true;
}

}  // namespace wkh
