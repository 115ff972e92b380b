#include "lpplscan/calibration.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/Core>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "lpplscan/errors.hpp"
#include "lpplscan/parallel.hpp"

namespace lppl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Nonlinear coordinates, in this order throughout the file.
using Theta = std::array<double, 4>;  // t_c, beta, omega, phi

// Least squares on the centred design: the intercept is recovered from the
// means, which keeps the 2x2 system well conditioned even when (t_c - t)^beta
// is nearly constant.
LinearSubfit subfit_from_basis(std::span<const double> y, std::span<const double> f,
                               std::span<const double> g) {
    const std::size_t n = y.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    double my = 0.0, mf = 0.0, mg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        my += y[i];
        mf += f[i];
        mg += g[i];
    }
    my *= inv_n;
    mf *= inv_n;
    mg *= inv_n;
    double sff = 0.0, sfg = 0.0, sgg = 0.0, sfy = 0.0, sgy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double fc = f[i] - mf;
        const double gc = g[i] - mg;
        const double yc = y[i] - my;
        sff += fc * fc;
        sfg += fc * gc;
        sgg += gc * gc;
        sfy += fc * yc;
        sgy += gc * yc;
    }

    // Model: y = A - B f - BC g, so the centred slopes are (-B, -BC).
    LinearSubfit out;
    double slope_f = 0.0;
    double slope_g = 0.0;
    const double det = sff * sgg - sfg * sfg;
    const bool f_ok = sff > 0.0 && std::isfinite(sff);
    const bool g_ok = sgg > 0.0 && std::isfinite(sgg);
    if (f_ok && g_ok && det > 1e-12 * sff * sgg) {
        slope_f = (sgg * sfy - sfg * sgy) / det;
        slope_g = (sff * sgy - sfg * sfy) / det;
    } else {
        out.rank_deficient = true;
        if (f_ok) slope_f = sfy / sff;
    }
    out.B = -slope_f;
    out.BC = -slope_g;
    out.A = my - slope_f * mf - slope_g * mg;

    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - out.A + out.B * f[i] + out.BC * g[i];
        sse += r * r;
    }
    out.sse = sse;
    return out;
}

void fill_basis(std::size_t n, const Theta& th, std::vector<double>& f, std::vector<double>& g) {
    const auto [t_c, beta, omega, phi] = th;
    const double damp = lppl_damping(beta, omega);
    f.resize(n);
    g.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double ln_dt = std::log(t_c - static_cast<double>(i));
        const double p = std::exp(beta * ln_dt);
        f[i] = p;
        g[i] = p * damp * std::cos(omega * ln_dt + phi);
    }
}

struct Bounds {
    double tc_lo;  // exclusive
    double tc_hi;
    double beta_lo, beta_hi;
    double omega_lo, omega_hi;

    bool contains(const Theta& th) const {
        return th[0] > tc_lo && th[0] <= tc_hi && th[1] >= beta_lo && th[1] <= beta_hi &&
               th[2] >= omega_lo && th[2] <= omega_hi && std::isfinite(th[3]);
    }
};

class Objective {
public:
    Objective(std::span<const double> y, const Bounds& bounds) : y_(y), bounds_(bounds) {}

    double operator()(const Theta& th) {
        ++evaluations_;
        if (!bounds_.contains(th)) return kInf;
        fill_basis(y_.size(), th, f_, g_);
        const auto fit = subfit_from_basis(y_, f_, g_);
        if (fit.rank_deficient || !std::isfinite(fit.sse)) return kInf;
        return fit.sse;
    }

    // Residual vector at theta (for the gradient-based refinement).
    void residuals(const Theta& th, double* out) {
        fill_basis(y_.size(), th, f_, g_);
        const auto fit = subfit_from_basis(y_, f_, g_);
        for (std::size_t i = 0; i < y_.size(); ++i) {
            out[i] = y_[i] - fit.A + fit.B * f_[i] + fit.BC * g_[i];
        }
    }

    long evaluations() const { return evaluations_; }
    std::size_t size() const { return y_.size(); }

private:
    std::span<const double> y_;
    Bounds bounds_;
    std::vector<double> f_;
    std::vector<double> g_;
    long evaluations_ = 0;
};

struct LocalResult {
    Theta theta{};
    double sse = kInf;
    bool converged = false;
};

// Derivative-free Nelder-Mead in scaled coordinates; points outside the box
// evaluate to +inf and are contracted away.
LocalResult nelder_mead(Objective& objective, const Theta& start, const Theta& scale,
                        int max_iterations, double tol) {
    constexpr int kDim = 4;
    constexpr double kXtol = 1e-10;
    std::array<Theta, kDim + 1> pts;
    std::array<double, kDim + 1> vals;

    auto to_theta = [&](const Theta& x) {
        Theta th;
        for (int d = 0; d < kDim; ++d) th[d] = x[d] * scale[d];
        return th;
    };
    auto eval = [&](const Theta& x) { return objective(to_theta(x)); };

    Theta x0;
    for (int d = 0; d < kDim; ++d) x0[d] = start[d] / scale[d];

    LocalResult best;
    bool converged = false;
    int iterations = 0;
    for (int restart = 0; restart < 6; ++restart) {
        pts[0] = x0;
        vals[0] = eval(x0);
        for (int d = 0; d < kDim; ++d) {
            pts[d + 1] = x0;
            pts[d + 1][d] += 1.0;
            vals[d + 1] = eval(pts[d + 1]);
            if (!std::isfinite(vals[d + 1])) {
                pts[d + 1][d] = x0[d] - 1.0;
                vals[d + 1] = eval(pts[d + 1]);
            }
        }
        converged = false;
        std::array<int, kDim + 1> order;
        while (iterations < max_iterations) {
            for (int i = 0; i <= kDim; ++i) order[i] = i;
            std::sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
            const int lo = order[0];
            const int hi = order[kDim];
            const int second_hi = order[kDim - 1];

            double diameter = 0.0;
            for (int i = 1; i <= kDim; ++i) {
                for (int d = 0; d < kDim; ++d) {
                    diameter = std::max(diameter, std::abs(pts[order[i]][d] - pts[lo][d]));
                }
            }
            const double spread = vals[hi] - vals[lo];
            if (std::isfinite(vals[hi]) &&
                (spread <= tol * std::abs(vals[lo]) || diameter <= kXtol)) {
                converged = true;
                break;
            }
            ++iterations;

            Theta centroid{};
            for (int i = 0; i < kDim; ++i) {
                for (int d = 0; d < kDim; ++d) centroid[d] += pts[order[i]][d] / kDim;
            }
            auto along = [&](double coef) {
                Theta x;
                for (int d = 0; d < kDim; ++d) x[d] = centroid[d] + coef * (pts[hi][d] - centroid[d]);
                return x;
            };

            const Theta xr = along(-1.0);
            const double fr = eval(xr);
            if (fr < vals[lo]) {
                const Theta xe = along(-2.0);
                const double fe = eval(xe);
                if (fe < fr) {
                    pts[hi] = xe;
                    vals[hi] = fe;
                } else {
                    pts[hi] = xr;
                    vals[hi] = fr;
                }
                continue;
            }
            if (fr < vals[second_hi]) {
                pts[hi] = xr;
                vals[hi] = fr;
                continue;
            }
            const bool outside = fr < vals[hi];
            const Theta xc = along(outside ? -0.5 : 0.5);
            const double fc = eval(xc);
            if (fc < (outside ? fr : vals[hi])) {
                pts[hi] = xc;
                vals[hi] = fc;
                continue;
            }
            for (int i = 1; i <= kDim; ++i) {
                const int k = order[i];
                for (int d = 0; d < kDim; ++d) pts[k][d] = pts[lo][d] + 0.5 * (pts[k][d] - pts[lo][d]);
                vals[k] = eval(pts[k]);
            }
        }

        const int lo = static_cast<int>(std::min_element(vals.begin(), vals.end()) - vals.begin());
        const double previous = best.sse;
        if (vals[lo] < best.sse) {
            best.sse = vals[lo];
            best.theta = to_theta(pts[lo]);
            x0 = pts[lo];
        }
        if (!converged) break;
        // Restart from the best vertex until a fresh simplex stops improving.
        if (std::isfinite(previous) && previous - best.sse <= tol * std::abs(best.sse)) break;
    }
    best.converged = converged;
    return best;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

// Levenberg-Marquardt on the residual vector (variable projection). The box is
// imposed through logistic maps so the solver itself is unconstrained.
struct ProjectedResiduals {
    using Scalar = double;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;

    ProjectedResiduals(Objective& objective, const Bounds& bounds)
        : objective_(&objective), bounds_(bounds) {}

    int inputs() const { return 4; }
    int values() const { return static_cast<int>(objective_->size()); }

    Theta decode(const Eigen::VectorXd& x) const {
        const double span = bounds_.tc_hi - bounds_.tc_lo;
        return {bounds_.tc_lo + span * (1e-9 + (1.0 - 1e-9) * logistic(x[0])),
                bounds_.beta_lo + (bounds_.beta_hi - bounds_.beta_lo) * logistic(x[1]),
                bounds_.omega_lo + (bounds_.omega_hi - bounds_.omega_lo) * logistic(x[2]), x[3]};
    }

    Eigen::VectorXd encode(const Theta& th) const {
        auto inner = [](double v, double lo, double hi) {
            const double p = std::clamp((v - lo) / (hi - lo), 1e-6, 1.0 - 1e-6);
            return logit(p);
        };
        Eigen::VectorXd x(4);
        x << inner(th[0], bounds_.tc_lo, bounds_.tc_hi), inner(th[1], bounds_.beta_lo, bounds_.beta_hi),
            inner(th[2], bounds_.omega_lo, bounds_.omega_hi), th[3];
        return x;
    }

    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& fvec) const {
        objective_->residuals(decode(x), fvec.data());
        return 0;
    }

    Objective* objective_;
    Bounds bounds_;
};

LocalResult levenberg_marquardt(Objective& objective, const Bounds& bounds, const Theta& start,
                                int max_iterations, double tol) {
    ProjectedResiduals functor(objective, bounds);
    Eigen::NumericalDiff<ProjectedResiduals> numeric(functor);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<ProjectedResiduals>> lm(numeric);
    lm.parameters.maxfev = max_iterations;
    lm.parameters.ftol = tol;
    lm.parameters.xtol = tol;
    Eigen::VectorXd x = functor.encode(start);
    const auto status = lm.minimize(x);
    LocalResult out;
    out.theta = functor.decode(x);
    out.sse = objective(out.theta);
    out.converged = status == Eigen::LevenbergMarquardtSpace::RelativeReductionTooSmall ||
                    status == Eigen::LevenbergMarquardtSpace::RelativeErrorTooSmall ||
                    status == Eigen::LevenbergMarquardtSpace::RelativeErrorAndReductionTooSmall ||
                    status == Eigen::LevenbergMarquardtSpace::CosinusTooSmall ||
                    status == Eigen::LevenbergMarquardtSpace::FtolTooSmall ||
                    status == Eigen::LevenbergMarquardtSpace::XtolTooSmall ||
                    status == Eigen::LevenbergMarquardtSpace::GtolTooSmall;
    return out;
}

double grid_point(double lo, double hi, int count, int k) {
    if (count == 1) return 0.5 * (lo + hi);
    return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
}

bool better(double sse_a, double tc_a, double sse_b, double tc_b) {
    const double scale = std::max(std::abs(sse_a), std::abs(sse_b));
    if (std::abs(sse_a - sse_b) <= 1e-12 * scale) return tc_a < tc_b;
    return sse_a < sse_b;
}

double wrap_phase(double phi) {
    double w = std::fmod(phi, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    if (w >= kTwoPi) w = 0.0;
    return w;
}

}  // namespace

void FitConfig::validate() const {
    if (tc_max_beyond_end < 1) throw std::invalid_argument("tc_max_beyond_end must be >= 1");
    if (grid.t_c < 1 || grid.beta < 1 || grid.omega < 1 || grid.phi < 1) {
        throw std::invalid_argument("grid counts must be >= 1");
    }
    if (refine_top < 1) throw std::invalid_argument("refine_top must be >= 1");
    if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    if (!(convergence_tol > 0.0)) throw std::invalid_argument("convergence_tol must be > 0");
    if (!(0.0 < beta_min && beta_min < beta_max && beta_max < 1.0)) {
        throw std::invalid_argument("beta search box must lie inside (0, 1)");
    }
    if (!(0.0 < omega_min && omega_min < omega_max)) {
        throw std::invalid_argument("omega search box must be positive and non-empty");
    }
}

LinearSubfit linear_subfit(std::span<const double> log_prices, double beta, double omega,
                           double phi, double t_c) {
    if (log_prices.size() < 2) throw std::invalid_argument("linear_subfit needs >= 2 points");
    if (!(t_c > static_cast<double>(log_prices.size() - 1))) {
        throw std::domain_error("linear_subfit: t_c must exceed the last index");
    }
    std::vector<double> f;
    std::vector<double> g;
    fill_basis(log_prices.size(), Theta{t_c, beta, omega, phi}, f, g);
    return subfit_from_basis(log_prices, f, g);
}

ConditionReport check_lppl_conditions(const LpplParams& p, double last_index,
                                      int tc_max_beyond_end) {
    ConditionReport r;
    r.b_positive = p.B > 0.0;
    r.beta_in_range = p.beta >= 0.1 && p.beta <= 0.9;
    r.omega_in_range = p.omega >= 6.0 && p.omega <= 13.0;
    r.c_bounded = std::abs(p.C) < 1.0;
    r.tc_in_horizon = p.t_c > last_index && p.t_c <= last_index + tc_max_beyond_end;
    r.qualified = r.b_positive && r.beta_in_range && r.omega_in_range && r.c_bounded &&
                  r.tc_in_horizon;
    return r;
}

std::vector<double> lppl_residuals(std::span<const double> log_prices, const LpplParams& params) {
    std::vector<double> out(log_prices.size());
    for (std::size_t i = 0; i < log_prices.size(); ++i) {
        out[i] = log_prices[i] - lppl_h(params, static_cast<double>(i));
    }
    return out;
}

LpplFit fit_lppl(const PriceSeries& series, const FitConfig& config) {
    return fit_lppl(series.log_prices(), config);
}

LpplFit fit_lppl(std::span<const double> y, const FitConfig& config) {
    config.validate();
    if (y.size() < kMinFitLength) {
        throw std::invalid_argument("fit_lppl needs at least " + std::to_string(kMinFitLength) +
                                    " observations, got " + std::to_string(y.size()));
    }
    const auto [min_it, max_it] = std::minmax_element(y.begin(), y.end());
    if (*min_it == *max_it) throw FitError("degenerate series: constant log-price");

    const double last = static_cast<double>(y.size() - 1);
    const Bounds bounds{last, last + config.tc_max_beyond_end, config.beta_min, config.beta_max,
                        config.omega_min, config.omega_max};
    const auto& grid = config.grid;

    // Stage 1: deterministic grid over (t_c, beta, omega, phi).
    struct Candidate {
        Theta theta;
        double sse;
    };
    const std::size_t per_tc = static_cast<std::size_t>(grid.beta) * grid.omega * grid.phi;
    std::vector<Candidate> candidates(static_cast<std::size_t>(grid.t_c) * per_tc);
    parallel_for(static_cast<std::size_t>(grid.t_c), config.threads, [&](std::size_t k) {
        const double t_c = last + config.tc_max_beyond_end * static_cast<double>(k + 1) / grid.t_c;
        const std::size_t n = y.size();
        std::vector<double> ln_dt(n), power(n), f, g(n);
        for (std::size_t i = 0; i < n; ++i) ln_dt[i] = std::log(t_c - static_cast<double>(i));
        std::size_t slot = k * per_tc;
        for (int b = 0; b < grid.beta; ++b) {
            const double beta = grid_point(config.beta_min, config.beta_max, grid.beta, b);
            for (std::size_t i = 0; i < n; ++i) power[i] = std::exp(beta * ln_dt[i]);
            for (int w = 0; w < grid.omega; ++w) {
                const double omega = grid_point(config.omega_min, config.omega_max, grid.omega, w);
                const double damp = lppl_damping(beta, omega);
                for (int p = 0; p < grid.phi; ++p) {
                    const double phi = kTwoPi * p / grid.phi;
                    for (std::size_t i = 0; i < n; ++i) {
                        g[i] = power[i] * damp * std::cos(omega * ln_dt[i] + phi);
                    }
                    const auto fit = subfit_from_basis(y, power, g);
                    const double sse = fit.rank_deficient ? kInf : fit.sse;
                    candidates[slot++] = {{t_c, beta, omega, phi}, sse};
                }
            }
        }
    });
    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return better(a.sse, a.theta[0], b.sse, b.theta[0]);
    });
    const std::size_t starts = std::min<std::size_t>(config.refine_top, candidates.size());

    // Stage 2: local refinement of the best starts.
    const Theta scale{std::max(1.0, 0.04 * config.tc_max_beyond_end), 0.05, 0.5, 0.5};
    std::vector<LocalResult> refined(starts);
    std::vector<long> evals(starts, 0);
    parallel_for(starts, config.threads, [&](std::size_t s) {
        Objective objective(y, bounds);
        refined[s] = config.local_optimizer == LocalOptimizer::simplex
                         ? nelder_mead(objective, candidates[s].theta, scale, config.max_iterations,
                                       config.convergence_tol)
                         : levenberg_marquardt(objective, bounds, candidates[s].theta,
                                               config.max_iterations, config.convergence_tol);
        if (!(refined[s].sse <= candidates[s].sse)) {
            refined[s].theta = candidates[s].theta;
            refined[s].sse = candidates[s].sse;
        }
        evals[s] = objective.evaluations();
    });

    LpplFit out;
    out.evaluations = static_cast<long>(candidates.size());
    std::size_t best = 0;
    for (std::size_t s = 0; s < starts; ++s) {
        out.evaluations += evals[s];
        ++out.starts_refined;
        if (refined[s].converged) ++out.starts_converged;
        if (s > 0 && better(refined[s].sse, refined[s].theta[0], refined[best].sse,
                            refined[best].theta[0])) {
            best = s;
        }
    }
    const auto& winner = refined[best];
    if (!std::isfinite(winner.sse) || out.starts_converged == 0) {
        std::ostringstream diag;
        diag << "best sse=" << winner.sse << " t_c=" << winner.theta[0] << " beta=" << winner.theta[1]
             << " omega=" << winner.theta[2] << " phi=" << winner.theta[3]
             << " starts=" << starts << " evaluations=" << out.evaluations;
        throw FitError("optimizer did not converge from any start", diag.str());
    }

    const auto [t_c, beta, omega, phi] = winner.theta;
    const auto linear = linear_subfit(y, beta, omega, phi, t_c);
    out.params = LpplParams{linear.A, linear.B, linear.B != 0.0 ? linear.BC / linear.B : 0.0,
                            beta, omega, wrap_phase(phi), t_c};
    out.residuals = lppl_residuals(y, out.params);
    out.sse = 0.0;
    for (const double r : out.residuals) out.sse += r * r;
    out.conditions = check_lppl_conditions(out.params, last, config.tc_max_beyond_end);
    out.qualified = out.conditions.qualified;
    return out;
}

}  // namespace lppl
