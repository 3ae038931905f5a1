#pragma once

// Numeric kernels: upper incomplete gamma for real order (including
// negative and non-positive-integer orders), bracketed root finding,
// and adaptive Gauss-Kronrod quadrature on finite and semi-infinite
// intervals.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace srp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Compensated (Neumaier) summation.
class NeumaierSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Sums `terms` in descending-magnitude order with compensation.
/// Mutates the input buffer (sort order).
inline double sum_descending(std::vector<double>& terms) {
    std::sort(terms.begin(), terms.end(),
              [](double a, double b) { return std::abs(a) > std::abs(b); });
    NeumaierSum acc;
    for (double t : terms)
        acc.add(t);
    return acc.value();
}

// ---------------------------------------------------------------------------
// Upper incomplete gamma  G(z,p) = int_p^inf e^-w w^(z-1) dw,  p > 0.
// ---------------------------------------------------------------------------

struct GammaEval {
    double z = 0.0;
    double p = 0.0;
    double value = 0.0;
    double est_abs_err = 0.0;
    bool saturated = false;  // overflow/underflow clamped to +inf/0
};

namespace detail {

inline constexpr double kEps = std::numeric_limits<double>::epsilon();
inline constexpr double kEulerGamma = 0.57721566490153286060651209008;

// e^-p * p^z with underflow/overflow saturation.
inline double gamma_prefix(double z, double p, bool& saturated) {
    double lg = -p + z * std::log(p);
    if (lg < -745.0) {
        saturated = true;
        return 0.0;
    }
    if (lg > 709.0) {
        saturated = true;
        return kInf;
    }
    return std::exp(lg);
}

// Continued fraction (modified Lentz) for G(z,p). Reliable for p >= 1,
// and for p > z+1 when z > 0; valid for negative z as well since the
// partial numerators -n(n-z) keep a fixed sign there.
inline double upper_gamma_cf(double z, double p, bool& saturated) {
    const double tiny = 1e-300;
    double b = p + 1.0 - z;
    double c = 1.0 / tiny;
    double d = 1.0 / (b == 0.0 ? tiny : b);
    double f = d;
    for (int n = 1; n < 100000; ++n) {
        double an = -static_cast<double>(n) * (static_cast<double>(n) - z);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        f *= delta;
        if (std::abs(delta - 1.0) < 4.0 * kEps)
            break;
    }
    return gamma_prefix(z, p, saturated) * f;
}

// Lower-gamma power series: g(z,p) = p^z e^-p sum_n p^n / (z (z+1)...(z+n)).
// Requires z > 0 (or more generally z not at a non-positive integer and the
// caller keeping p small enough for fast convergence).
inline double lower_gamma_series(double z, double p, bool& saturated) {
    double term = 1.0 / z;
    double sum = term;
    for (int n = 1; n < 100000; ++n) {
        term *= p / (z + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEps)
            break;
    }
    return gamma_prefix(z, p, saturated) * sum;
}

// G(0,p) = E1(p), by series; intended for p < 1.
inline double exp_integral_e1_series(double p) {
    double sum = -kEulerGamma - std::log(p);
    double term = 1.0;
    for (int n = 1; n < 1000; ++n) {
        term *= -p / n;
        double add = -term / n;
        sum += add;
        if (std::abs(add) < std::abs(sum) * kEps)
            break;
    }
    return sum;
}

}  // namespace detail

/// Upper incomplete gamma with error estimate. Supports all real z
/// (including non-positive integers) for p > 0. For z <= 0 and small p
/// the value is produced by downward recurrence
///   G(z-1,p) = (G(z,p) - e^-p p^(z-1)) / (z-1)
/// from a series evaluation at the fractional base order; for p >= 1 the
/// continued fraction is used directly at the target order.
inline GammaEval upper_gamma_eval(double z, double p) {
    if (!(p > 0.0) || !std::isfinite(p))
        throw std::domain_error("upper_gamma: p must be > 0");
    if (!std::isfinite(z))
        throw std::domain_error("upper_gamma: z must be finite");

    GammaEval out;
    out.z = z;
    out.p = p;

    // G(1,p) and G(2,p) are plain exponentials.
    if (z == 1.0) {
        out.value = std::exp(-p);
        out.est_abs_err = 2.0 * detail::kEps * out.value;
        return out;
    }
    if (z == 2.0) {
        out.value = std::exp(-p) * (1.0 + p);
        out.est_abs_err = 4.0 * detail::kEps * out.value;
        return out;
    }

    if (z > 0.0) {
        if (p > z + 1.0) {
            out.value = detail::upper_gamma_cf(z, p, out.saturated);
            out.est_abs_err = 8.0 * detail::kEps * std::abs(out.value);
        } else {
            double g = std::tgamma(z);
            double low = detail::lower_gamma_series(z, p, out.saturated);
            out.value = g - low;
            out.est_abs_err =
                4.0 * detail::kEps * (std::abs(g) + std::abs(low));
        }
        return out;
    }

    // z <= 0 from here on.
    if (p >= 1.0) {
        out.value = detail::upper_gamma_cf(z, p, out.saturated);
        out.est_abs_err = 16.0 * detail::kEps * std::abs(out.value);
        return out;
    }

    // Small p: series at the fractional base order in [0,1), then recur down.
    double base = z - std::floor(z);  // in [0,1); 0 exactly for integer z
    int steps = static_cast<int>(std::lround(base - z));
    double g, err;
    if (base == 0.0) {
        g = detail::exp_integral_e1_series(p);
        err = 4.0 * detail::kEps * std::abs(g);
    } else {
        double whole = std::tgamma(base);
        double low = detail::lower_gamma_series(base, p, out.saturated);
        g = whole - low;
        err = 4.0 * detail::kEps * (std::abs(whole) + std::abs(low));
    }
    double zc = base;
    for (int k = 0; k < steps; ++k) {
        bool sat = false;
        double sub = detail::gamma_prefix(zc - 1.0, p, sat);
        out.saturated = out.saturated || sat;
        g = (g - sub) / (zc - 1.0);
        err = (err + detail::kEps * (std::abs(g * (zc - 1.0)) + sub)) /
              std::abs(zc - 1.0);
        zc -= 1.0;
    }
    out.value = g;
    out.est_abs_err = err;
    if (std::isinf(out.value)) out.saturated = true;
    return out;
}

inline double upper_gamma(double z, double p) {
    return upper_gamma_eval(z, p).value;
}

/// Complete gamma for z > 0, assembled from the two incomplete halves so it
/// shares no code path with std::tgamma.
inline double complete_gamma(double z) {
    if (!(z > 0.0))
        throw std::domain_error("complete_gamma: requires z > 0");
    bool sat = false;
    return detail::upper_gamma_cf(z, z + 2.0, sat) +
           detail::lower_gamma_series(z, z + 2.0, sat);
}

// ---------------------------------------------------------------------------
// Bracketed root finding (Brent).
// ---------------------------------------------------------------------------

/// Finds a root of f in [lo,hi]; f(lo) and f(hi) must not have the same
/// strict sign. Inverse-quadratic/secant steps safeguarded by bisection,
/// so convergence is guaranteed for continuous f.
template <class F>
double find_root(F&& f, double lo, double hi, double tol = 1e-12) {
    if (!(tol > 0.0))
        throw std::invalid_argument("find_root: tol must be > 0");
    double a = lo, b = hi;
    double fa = f(a), fb = f(b);
    if (std::isnan(fa) || std::isnan(fb))
        throw std::domain_error("find_root: f evaluated to NaN at endpoint");
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0.0) == (fb > 0.0))
        throw std::invalid_argument("find_root: endpoints do not bracket");

    double c = a, fc = fa;
    double d = b - a, e = d;
    for (int iter = 0; iter < 500; ++iter) {
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        double tol1 = 2.0 * detail::kEps * std::abs(b) + 0.5 * tol;
        double xm = 0.5 * (c - b);
        if (std::abs(xm) <= tol1 || fb == 0.0)
            return b;
        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            double s = fb / fa, p, q;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                double qq = fa / fc, r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::abs(p);
            if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q),
                                   std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += (std::abs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
        fb = f(b);
        if (std::isnan(fb))
            throw std::domain_error("find_root: f evaluated to NaN");
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    return b;
}

// ---------------------------------------------------------------------------
// Adaptive Gauss-Kronrod (G7,K15) quadrature.
// ---------------------------------------------------------------------------

struct QuadResult {
    double value = 0.0;
    double est_err = 0.0;
    bool converged = true;
};

namespace detail {

// Kronrod-15 abscissae on [0,1] and weights; Gauss-7 weights at the
// even-indexed nodes (QUADPACK dqk15 constants).
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526, 0.949107912342758524526189684048,
    0.864864423359769072789712788641, 0.741531185599394439863864773281,
    0.586087235467691130294144838259, 0.405845151377397166906606412077,
    0.207784955007898467600689403773, 0.0};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
void gk15(const F& f, double a, double b, double& value, double& err) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double fv[15];
    double fc = f(mid);
    fv[7] = fc;
    for (int i = 0; i < 7; ++i) {
        double dx = half * kXgk[i];
        fv[i] = f(mid + dx);
        fv[14 - i] = f(mid - dx);
    }
    for (double v : fv)
        if (std::isnan(v))
            throw std::domain_error("integrate: integrand evaluated to NaN");

    double resk = kWgk[7] * fc;
    double resg = kWg[3] * fc;
    for (int i = 0; i < 7; ++i) {
        resk += kWgk[i] * (fv[i] + fv[14 - i]);
        if (i % 2 == 1)
            resg += kWg[i / 2] * (fv[i] + fv[14 - i]);
    }
    double mean = resk * 0.5;
    double resasc = kWgk[7] * std::abs(fc - mean);
    for (int i = 0; i < 7; ++i)
        resasc += kWgk[i] *
                  (std::abs(fv[i] - mean) + std::abs(fv[14 - i] - mean));
    resasc *= std::abs(half);
    value = resk * half;
    err = std::abs((resk - resg) * half);
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
}

struct Interval {
    double a, b, value, err;
    bool operator<(const Interval& o) const { return err < o.err; }
};

}  // namespace detail

/// Adaptive quadrature of f over the finite interval [a,b] targeting
/// absolute error `tol`. Non-convergence is reported via the flag, never
/// by silently returning a bad value. NaN from the integrand throws.
template <class F>
QuadResult integrate(F&& f, double a, double b, double tol = 1e-10) {
    QuadResult out;
    if (a == b)
        return out;
    constexpr std::size_t kMaxIntervals = 4000;
    std::vector<detail::Interval> heap;
    heap.reserve(256);
    detail::Interval whole{a, b, 0.0, 0.0};
    detail::gk15(f, a, b, whole.value, whole.err);
    heap.push_back(whole);
    double total_err = whole.err;
    while (total_err > tol && heap.size() < kMaxIntervals) {
        std::pop_heap(heap.begin(), heap.end());
        detail::Interval worst = heap.back();
        heap.pop_back();
        double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // interval at floating-point resolution; keep as is
            heap.push_back(worst);
            std::push_heap(heap.begin(), heap.end());
            break;
        }
        detail::Interval left{worst.a, mid, 0.0, 0.0};
        detail::Interval right{mid, worst.b, 0.0, 0.0};
        detail::gk15(f, left.a, left.b, left.value, left.err);
        detail::gk15(f, right.a, right.b, right.value, right.err);
        total_err += left.err + right.err - worst.err;
        heap.push_back(left);
        std::push_heap(heap.begin(), heap.end());
        heap.push_back(right);
        std::push_heap(heap.begin(), heap.end());
    }
    NeumaierSum sum;
    for (const auto& iv : heap)
        sum.add(iv.value);
    out.value = sum.value();
    out.est_err = total_err;
    out.converged = total_err <= tol;
    return out;
}

/// Adaptive quadrature of f over [a, +inf), mapped through
/// w = a + u/(1-u) onto u in [0,1).
template <class F>
QuadResult integrate_to_inf(F&& f, double a, double tol = 1e-10) {
    auto g = [&f, a](double u) {
        double om = 1.0 - u;
        double w = a + u / om;
        double fw = f(w);
        if (fw == 0.0)
            return 0.0;  // avoid 0*inf at the far tail
        return fw / (om * om);
    };
    return integrate(g, 0.0, 1.0, tol);
}

}  // namespace srp
