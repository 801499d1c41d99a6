#include "asl/curve.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "asl/errors.hpp"

namespace asl {

namespace {

constexpr double kUClampLo = 0.01;
constexpr double kUClampHi = 0.99;

double quad(double p0, double p1, double p2, double s) {
    const double t = 1.0 - s;
    return t * t * p0 + 2.0 * s * t * p1 + s * s * p2;
}

double quad_deriv(double p0, double p1, double p2, double s) {
    return 2.0 * (1.0 - s) * (p1 - p0) + 2.0 * s * (p2 - p1);
}

} // namespace

const char* family_name(CurveFamily family) {
    return family == CurveFamily::Bezier ? "bezier" : "linear";
}

CurveFamily family_from_name(std::string_view name) {
    if (name == "bezier") return CurveFamily::Bezier;
    if (name == "linear") return CurveFamily::PiecewiseLinear;
    throw std::invalid_argument("unknown curve family: " + std::string(name));
}

int GCurve::param_count(CurveFamily family, int segments) {
    require(segments >= 1, "curve needs at least one segment");
    return family == CurveFamily::Bezier ? 2 * (2 * segments - 1) : segments;
}

GCurve GCurve::from_params(CurveFamily family, int segments, std::span<const double> raw) {
    const int expect = param_count(family, segments);
    if (static_cast<int>(raw.size()) != expect)
        throw std::invalid_argument("curve parameter count mismatch: expected " +
                                    std::to_string(expect) + ", got " +
                                    std::to_string(raw.size()));

    GCurve c;
    c.family_ = family;
    c.segments_ = segments;
    c.raw_.assign(raw.begin(), raw.end());

    if (family == CurveFamily::Bezier) {
        const int last = 2 * segments; // index of the fixed (1,1) point
        for (double v : raw)
            require(v >= 0.0 && v <= 1.0, "bezier parameters must lie in [0, 1]");
        for (int i = 1; i < last; ++i)
            c.raw_[2 * (i - 1)] = std::clamp(c.raw_[2 * (i - 1)], kUClampLo, kUClampHi);

        c.pu_.assign(last + 1, 0.0);
        c.pv_.assign(last + 1, 0.0);
        for (int i = 1; i < last; ++i) {
            const double tu = c.raw_[2 * (i - 1)];
            const double tv = c.raw_[2 * (i - 1) + 1];
            c.pu_[i] = c.pu_[i - 1] + tu * (1.0 - c.pu_[i - 1]);
            c.pv_[i] = c.pv_[i - 1] + tv * (1.0 - c.pv_[i - 1]);
        }
        c.pu_[last] = 1.0;
        c.pv_[last] = 1.0;

        c.identity_ = true;
        for (int i = 0; i <= last; ++i)
            if (c.pu_[i] != c.pv_[i]) {
                c.identity_ = false;
                break;
            }
    } else {
        for (double v : raw)
            require(std::isfinite(v), "linear parameters must be finite");
        // slopes = n * softmax(raw), knots at u = k/n
        const int n = segments;
        double m = raw[0];
        for (double v : raw) m = std::max(m, v);
        std::vector<double> e(n);
        double sum = 0.0;
        for (int k = 0; k < n; ++k) {
            e[k] = std::exp(raw[k] - m);
            sum += e[k];
        }
        c.pu_.assign(n + 1, 0.0);
        c.pv_.assign(n + 1, 0.0);
        for (int k = 0; k <= n; ++k) c.pu_[k] = static_cast<double>(k) / n;
        for (int k = 1; k < n; ++k) c.pv_[k] = c.pv_[k - 1] + e[k - 1] / sum;
        c.pv_[n] = 1.0;
        c.slopes_.assign(n, 0.0);
        for (int k = 0; k < n; ++k) c.slopes_[k] = n * (c.pv_[k + 1] - c.pv_[k]);

        // equal raw parameters give a uniform softmax, i.e. the identity
        c.identity_ = std::all_of(raw.begin(), raw.end(), [&](double v) { return v == raw[0]; });
    }
    return c;
}

std::vector<double> GCurve::identity_params(CurveFamily family, int segments) {
    std::vector<double> raw;
    if (family == CurveFamily::Bezier) {
        // control points evenly spaced on the diagonal: P_i = (i, i) / 2n
        const int last = 2 * segments;
        raw.reserve(2 * (last - 1));
        for (int i = 1; i < last; ++i) {
            const double t = 1.0 / (last - i + 1);
            raw.push_back(t);
            raw.push_back(t);
        }
    } else {
        raw.assign(segments, 0.5);
    }
    return raw;
}

GCurve GCurve::identity(CurveFamily family, int segments) {
    const std::vector<double> raw = identity_params(family, segments);
    return from_params(family, segments, raw);
}

void GCurve::eval_grad(double y, double& g, double& dg) const {
    require(segments_ >= 1, "curve is empty; build it with from_params");
    require(y >= 0.0 && y <= 1.0, "curve input outside [0, 1]");
    if (identity_) {
        g = y;
        dg = 1.0;
        return;
    }

    if (family_ == CurveFamily::Bezier) {
        int k = 0;
        while (k < segments_ - 1 && y > pu_[2 * k + 2]) ++k;
        const double u0 = pu_[2 * k], u1 = pu_[2 * k + 1], u2 = pu_[2 * k + 2];
        const double v0 = pv_[2 * k], v1 = pv_[2 * k + 1], v2 = pv_[2 * k + 2];

        double s;
        if (y <= u0) {
            s = 0.0;
        } else if (y >= u2) {
            s = 1.0;
        } else {
            const double alpha = u0 - 2.0 * u1 + u2;
            const double beta = 2.0 * (u1 - u0); // > 0 under strict u-monotonicity
            const double gamma = u0 - y;
            if (std::abs(alpha) < 1e-10) {
                s = -gamma / beta;
            } else {
                const double disc = std::max(beta * beta - 4.0 * alpha * gamma, 0.0);
                const double q = -0.5 * (beta + std::sqrt(disc));
                const double r1 = q / alpha;
                const double r2 = q != 0.0 ? gamma / q : -1.0;
                // exactly one root lies in [0,1]; pick the candidate that
                // reproduces y best, tolerating float dust at the ends
                const bool ok1 = r1 >= -1e-9 && r1 <= 1.0 + 1e-9;
                const bool ok2 = r2 >= -1e-9 && r2 <= 1.0 + 1e-9;
                if (ok1 && ok2)
                    s = std::abs(quad(u0, u1, u2, r1) - y) <= std::abs(quad(u0, u1, u2, r2) - y)
                            ? r1
                            : r2;
                else if (ok1)
                    s = r1;
                else if (ok2)
                    s = r2;
                else
                    s = std::abs(quad(u0, u1, u2, r1) - y) <= std::abs(quad(u0, u1, u2, r2) - y)
                            ? r1
                            : r2;
            }
            s = std::clamp(s, 0.0, 1.0);
        }

        g = std::clamp(quad(v0, v1, v2, s), 0.0, 1.0);
        const double du = quad_deriv(u0, u1, u2, s);
        const double dv = quad_deriv(v0, v1, v2, s);
        dg = dv / du;
    } else {
        const int n = segments_;
        const double t = y * n;
        int k = static_cast<int>(std::ceil(t)) - 1; // ties resolve to the left segment
        k = std::clamp(k, 0, n - 1);
        const double s = t - k;
        g = std::clamp((1.0 - s) * pv_[k] + s * pv_[k + 1], 0.0, 1.0);
        dg = slopes_[k];
    }
}

double GCurve::eval(double y) const {
    double g, dg;
    eval_grad(y, g, dg);
    return g;
}

double GCurve::grad(double y) const {
    double g, dg;
    eval_grad(y, g, dg);
    return dg;
}

std::vector<double> bezier_params_from_points(std::span<const double> pu,
                                              std::span<const double> pv) {
    require(pu.size() == pv.size() && pu.size() >= 3 && pu.size() % 2 == 1,
            "control point arrays must hold 2n+1 entries");
    const std::size_t last = pu.size() - 1;
    std::vector<double> raw;
    raw.reserve(2 * (last - 1));
    for (std::size_t i = 1; i < last; ++i) {
        const double du = 1.0 - pu[i - 1];
        const double dv = 1.0 - pv[i - 1];
        raw.push_back(du > 1e-15 ? (pu[i] - pu[i - 1]) / du : 0.0);
        raw.push_back(dv > 1e-15 ? (pv[i] - pv[i - 1]) / dv : 0.0);
    }
    return raw;
}

namespace {

void check_unit(double a, double b) {
    require(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0, "operator inputs outside [0, 1]");
}

} // namespace

double h_and(double a, double b, const GCurve& curve) {
    check_unit(a, b);
    return curve.eval(a) * curve.eval(b);
}

double h_or(double a, double b, const GCurve& curve) {
    check_unit(a, b);
    const double ga = curve.eval(a), gb = curve.eval(b);
    return ga + gb - ga * gb;
}

double h_xor(double a, double b, const GCurve& or_curve, const GCurve& and_curve) {
    return h_or(a, b, or_curve) - h_and(a, b, and_curve);
}

OpGrad h_and_grad(double a, double b, const GCurve& curve) {
    check_unit(a, b);
    double ga, da, gb, db;
    curve.eval_grad(a, ga, da);
    curve.eval_grad(b, gb, db);
    return {ga * gb, da * gb, ga * db};
}

OpGrad h_or_grad(double a, double b, const GCurve& curve) {
    check_unit(a, b);
    double ga, da, gb, db;
    curve.eval_grad(a, ga, da);
    curve.eval_grad(b, gb, db);
    return {ga + gb - ga * gb, da * (1.0 - gb), db * (1.0 - ga)};
}

OpGrad h_xor_grad(double a, double b, const GCurve& or_curve, const GCurve& and_curve) {
    const OpGrad o = h_or_grad(a, b, or_curve);
    const OpGrad n = h_and_grad(a, b, and_curve);
    return {o.value - n.value, o.da - n.da, o.db - n.db};
}

} // namespace asl
