#include "wkh/integrator.hpp"

#include "wkh/errors.hpp"
#include "wkh/parallel.hpp"
#include "wkh/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace wkh {

void IntegrationOptions::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(std::isfinite(v) && v > 0.0)) throw InvalidInput(std::string(name) + ": must be positive and finite");
    };
    positive(dt_init, "dt_init");
    positive(rel_tol, "rel_tol");
    positive(abs_tol, "abs_tol");
    positive(convergence_tol, "convergence_tol");
    if (rel_tol < 1e-13) throw InvalidInput("rel_tol: must be at least 1e-13");
    if (abs_tol < 1e-13) throw InvalidInput("abs_tol: must be at least 1e-13");
    if (t_max) positive(*t_max, "t_max");
    if (record_every) positive(*record_every, "record_every");
    if (convergence_steps < 1) throw InvalidInput("convergence_steps: must be at least 1");
    if (!(flip_band >= 0.0)) throw InvalidInput("flip_band: must be non-negative");
}

double IntegrationOptions::resolved_t_max(double gamma) const { return t_max ? *t_max : 200.0 / gamma; }

double IntegrationOptions::resolved_record_every(double gamma) const {
    return record_every ? *record_every : resolved_t_max(gamma) / 1000.0;
}

namespace {

double hermite_scalar(double t0, double y0, double f0, double t1, double y1, double f1, double t) {
    const double h = t1 - t0;
    const double s = (t - t0) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * f0 + (-2 * s3 + 3 * s2) * y1 +
           (s3 - s2) * h * f1;
}

int band_sign(double d, double band) { return d > band ? 1 : (d < -band ? -1 : 0); }

// Tracks the last definite sign of every pair difference and reports flips.
class OrderingTracker {
public:
    OrderingTracker(const Vector& y0, double band) : n_(static_cast<std::size_t>(y0.size())), band_(band) {
        sign_.resize(n_ * n_, 0);
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = i + 1; j < n_; ++j) sign_[i * n_ + j] = band_sign(diff(y0, i, j), band_);
        }
    }

    template <class Emit>
    void step(double t0, const Vector& y0, const Vector& f0, double t1, const Vector& y1, const Vector& f1,
              Emit&& emit) {
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = i + 1; j < n_; ++j) {
                const int s1 = band_sign(diff(y1, i, j), band_);
                int& last = sign_[i * n_ + j];
                if (s1 != 0 && last != 0 && s1 != last) {
                    const auto ii = static_cast<Eigen::Index>(i);
                    const auto jj = static_cast<Eigen::Index>(j);
                    auto d = [&](double t) {
                        return hermite_scalar(t0, y0(ii), f0(ii), t1, y1(ii), f1(ii), t) -
                               hermite_scalar(t0, y0(jj), f0(jj), t1, y1(jj), f1(jj), t);
                    };
                    // Earliest time at which the interpolant carries the new sign.
                    double lo = t0;
                    double hi = t1;
                    const double width = (t1 - t0) * 1e-6;
                    for (int it = 0; it < 60 && hi - lo > width; ++it) {
                        const double mid = 0.5 * (lo + hi);
                        if (d(mid) * s1 > 0.0) {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    emit(0.5 * (lo + hi), i, j);
                }
                if (s1 != 0) last = s1;
            }
        }
    }

private:
    static double diff(const Vector& y, std::size_t i, std::size_t j) {
        return y(static_cast<Eigen::Index>(i)) - y(static_cast<Eigen::Index>(j));
    }

    std::size_t n_;
    double band_;
    std::vector<int> sign_;
};

std::size_t leader_of(const Vector& y) {
    Eigen::Index arg = 0;
    y.maxCoeff(&arg);
    return static_cast<std::size_t>(arg);
}

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

class Stepper {
public:
    // `weights` maps a state error onto the simplex residual error (1 / a_i).
    Stepper(const FieldFn& field, const IntegrationOptions& opts, Vector weights)
        : field_(field), opts_(opts), weights_(std::move(weights)) {}

    // One Dormand-Prince step; returns the scaled error norm (<= 1 accepts).
    double dopri(const Vector& y, const Vector& f, double h, Vector& y1, Vector& f1) {
        Vector tmp;
        tmp = y + h * a21 * f;
        field_(tmp, k2_);
        tmp = y + h * (a31 * f + a32 * k2_);
        field_(tmp, k3_);
        tmp = y + h * (a41 * f + a42 * k2_ + a43 * k3_);
        field_(tmp, k4_);
        tmp = y + h * (a51 * f + a52 * k2_ + a53 * k3_ + a54 * k4_);
        field_(tmp, k5_);
        tmp = y + h * (a61 * f + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
        field_(tmp, k6_);
        y1 = y + h * (b1 * f + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
        field_(y1, f1);
        const Vector err = h * (e1 * f + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * f1);
        double norm = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double scale = opts_.abs_tol + opts_.rel_tol * std::max(std::abs(y(i)), std::abs(y1(i)));
            norm = std::max(norm, std::abs(err(i)) / scale);
        }
        // The residual is tracked to abs_tol whatever the size of the state.
        norm = std::max(norm, std::abs(err.dot(weights_)) / opts_.abs_tol);
        if (!y1.allFinite() || !std::isfinite(norm)) return std::numeric_limits<double>::infinity();
        return norm;
    }

    void rk4(const Vector& y, const Vector& f, double h, Vector& y1, Vector& f1) {
        Vector tmp = y + 0.5 * h * f;
        field_(tmp, k2_);
        tmp = y + 0.5 * h * k2_;
        field_(tmp, k3_);
        tmp = y + h * k3_;
        field_(tmp, k4_);
        y1 = y + (h / 6.0) * (f + 2.0 * k2_ + 2.0 * k3_ + k4_);
        field_(y1, f1);
    }

private:
    const FieldFn& field_;
    const IntegrationOptions& opts_;
    Vector weights_;
    Vector k2_, k3_, k4_, k5_, k6_;
};

}  // namespace

Trajectory integrate(const MarketParams& p, const PreferenceState& s0, const IntegrationOptions& opts) {
    const FieldFn field = [&p](const Vector& j, Vector& out) { detail::field_into(p, j, out); };
    return integrate_field(p, field, s0, opts);
}

Trajectory integrate_field(const MarketParams& p, const FieldFn& field, const PreferenceState& s0,
                           const IntegrationOptions& opts) {
    opts.validate();
    if (s0.size() != p.n()) throw InvalidInput("initial state: length does not match the number of sellers");

    const double t_max = opts.resolved_t_max(p.gamma());
    const double record_every = opts.resolved_record_every(p.gamma());

    Trajectory tr;
    tr.t_max = t_max;

    Vector y = s0.values();
    Vector f;
    field(y, f);
    if (!f.allFinite()) throw InvalidInput("initial state: field is not finite");

    auto record = [&](double t, const Vector& state, const Vector& rate) {
        tr.times.push_back(t);
        tr.states.emplace_back(state);
        tr.rates.push_back(rate);
    };
    record(0.0, y, f);

    OrderingTracker ordering(y, opts.flip_band);
    std::vector<Event> step_events;
    std::optional<std::size_t> trapped_in;
    auto check_trapping = [&](double t, const Vector& state) {
        const std::size_t top = leader_of(state);
        if (in_trapping_set(p, PreferenceState(state), top)) {
            if (trapped_in != top) tr.events.push_back(Event{t, EnteredTrappingSet{top}});
            trapped_in = top;
        } else {
            trapped_in.reset();
        }
    };
    check_trapping(0.0, y);

    int streak = 0;
    std::optional<double> streak_start;
    auto update_convergence = [&](double t, const Vector& rate) {
        if (sup_norm(rate) < opts.convergence_tol) {
            if (!streak_start) streak_start = t;
        } else {
            streak = 0;
            streak_start.reset();
        }
    };
    update_convergence(0.0, f);

    Stepper stepper(field, opts, p.a().cwiseInverse());
    double t = 0.0;
    double h = opts.dt_init;
    std::size_t sample_index = 1;
    Vector y1, f1;

    while (t < t_max) {
        const double target = std::min(record_every * static_cast<double>(sample_index), t_max);
        const bool clipped = t + h >= target;
        const double h_try = clipped ? target - t : h;

        if (opts.scheme == Scheme::FixedStepRK4) {
            stepper.rk4(y, f, h_try, y1, f1);
            if (!y1.allFinite()) throw StiffnessError("fixed-step integration produced a non-finite state");
        } else {
            const double err = stepper.dopri(y, f, h_try, y1, f1);
            const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            if (err > 1.0) {
                ++tr.rejected_steps;
                h = h_try * factor;
                if (h < 1e-14) throw StiffnessError("adaptive step size fell below 1e-14");
                continue;
            }
            if (!clipped) h = h_try * factor;
        }
        ++tr.accepted_steps;
        const double t1 = clipped ? target : t + h_try;

        step_events.clear();
        ordering.step(t, y, f, t1, y1, f1, [&](double when, std::size_t i, std::size_t j) {
            step_events.push_back(Event{when, OrderingFlip{i, j}});
        });
        std::sort(step_events.begin(), step_events.end(),
                  [](const Event& l, const Event& r) { return l.time < r.time; });
        tr.events.insert(tr.events.end(), step_events.begin(), step_events.end());

        t = t1;
        std::swap(y, y1);
        std::swap(f, f1);
        check_trapping(t, y);

        const bool on_sample = t == target;
        if (on_sample) {
            record(t, y, f);
            ++sample_index;
        }

        update_convergence(t, f);
        if (streak_start) ++streak;
        if (streak_start && streak >= opts.convergence_steps) {
            if (!on_sample) record(t, y, f);
            tr.events.push_back(Event{*streak_start, Converged{}});
            tr.converged_to = PreferenceState(y);
            tr.termination = Termination::Converged;
            break;
        }
    }

    std::stable_sort(tr.events.begin(), tr.events.end(),
                     [](const Event& l, const Event& r) { return l.time < r.time; });
    return tr;
}

Vector hermite(const Trajectory& traj, std::size_t k, double t) {
    if (k + 1 >= traj.times.size()) throw InvalidInput("hermite: sample index out of range");
    const double t0 = traj.times[k];
    const double t1 = traj.times[k + 1];
    const Vector& y0 = traj.states[k].values();
    const Vector& y1 = traj.states[k + 1].values();
    Vector out(y0.size());
    for (Eigen::Index i = 0; i < y0.size(); ++i) {
        out(i) = hermite_scalar(t0, y0(i), traj.rates[k](i), t1, y1(i), traj.rates[k + 1](i), t);
    }
    return out;
}

std::vector<OrderingEvent> detect_ordering_events(const Trajectory& traj, double band) {
    std::vector<OrderingEvent> out;
    if (traj.times.size() < 2) return out;
    OrderingTracker ordering(traj.states.front().values(), band);
    for (std::size_t k = 0; k + 1 < traj.times.size(); ++k) {
        std::vector<OrderingEvent> local;
        ordering.step(traj.times[k], traj.states[k].values(), traj.rates[k], traj.times[k + 1],
                      traj.states[k + 1].values(), traj.rates[k + 1],
                      [&](double when, std::size_t i, std::size_t j) { local.push_back({when, i, j}); });
        std::sort(local.begin(), local.end(),
                  [](const OrderingEvent& l, const OrderingEvent& r) { return l.time < r.time; });
        out.insert(out.end(), local.begin(), local.end());
    }
    return out;
}

std::vector<BasinSample> basin_sample(const MarketParams& p, const BasinBox& box, std::size_t count,
                                      std::uint64_t seed, const IntegrationOptions& opts, unsigned threads) {
    if (count < 1) throw InvalidInput("count: must be at least 1");
    if (box.lower.size() != p.n() || box.upper.size() != p.n()) {
        throw InvalidInput("box: bounds must have one entry per seller");
    }
    for (std::size_t i = 0; i < p.n(); ++i) {
        if (box.lower[i] > box.upper[i]) throw InvalidInput("box: lower bound exceeds upper bound");
    }
    opts.validate();

    std::vector<std::optional<BasinSample>> slots(count);
    parallel_for(count, threads, [&](std::size_t idx) {
        StreamRng rng(seed, idx);
        Vector j(static_cast<Eigen::Index>(p.n()));
        for (std::size_t i = 0; i < p.n(); ++i) j(static_cast<Eigen::Index>(i)) = rng.uniform(box.lower[i], box.upper[i]);
        PreferenceState start(std::move(j));
        Trajectory tr = integrate(p, start, opts);
        slots[idx] = BasinSample{start, tr.converged_to};
    });
    std::vector<BasinSample> out;
    out.reserve(count);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace wkh
