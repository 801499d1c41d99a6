#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace asl {

enum class CurveFamily { Bezier, PiecewiseLinear };

const char* family_name(CurveFamily family);
CurveFamily family_from_name(std::string_view name);

/** Monotone scalar function g : [0,1] -> [0,1] with g(0) = 0 and g(1) = 1,
  * built from raw parameters so that both constraints hold by construction.
  *
  * Bezier family: n chained quadratic segments, 2n+1 control points. Raw
  * parameters are 2(2n-1) values in [0,1], interleaved (u_1, v_1, u_2, v_2,
  * ...). Control points are reconstructed recursively,
  *     P_i = P_{i-1} + theta_i * (1 - P_{i-1}),  per axis,
  * with P_0 = (0,0) and P_2n = (1,1) fixed. u-components are clamped to
  * [0.01, 0.99] before reconstruction so u is strictly increasing.
  *
  * Piecewise-linear family: n segments with knots fixed at u = k/n. Raw
  * parameters are n reals; slopes are n * softmax(raw), non-negative and
  * averaging to 1.
  *
  * Curves whose realized geometry lies exactly on the diagonal short-circuit
  * evaluation to g(y) = y; this makes the identity parameterization exact
  * rather than a quadratic-solve approximation of itself.
  */
class GCurve {
public:
    GCurve() = default; // empty placeholder; build real curves with from_params

    static GCurve from_params(CurveFamily family, int segments, std::span<const double> raw);
    static GCurve identity(CurveFamily family, int segments);
    static std::vector<double> identity_params(CurveFamily family, int segments);
    static int param_count(CurveFamily family, int segments);

    double eval(double y) const;
    double grad(double y) const;
    void eval_grad(double y, double& g, double& dg) const;

    CurveFamily family() const { return family_; }
    int segments() const { return segments_; }
    bool is_identity() const { return identity_; }
    std::span<const double> raw_params() const { return raw_; }

    // realized geometry: Bezier control points (2n+1) or linear knots (n+1)
    std::span<const double> points_u() const { return pu_; }
    std::span<const double> points_v() const { return pv_; }

private:
    CurveFamily family_ = CurveFamily::Bezier;
    int segments_ = 0;
    bool identity_ = false;
    std::vector<double> raw_;          // stored with u-components clamped (Bezier)
    std::vector<double> pu_, pv_;      // realized points
    std::vector<double> slopes_;       // linear family only
};

// Re-derive raw Bezier parameters from realized control points (the inverse
// of the reconstruction above).
std::vector<double> bezier_params_from_points(std::span<const double> pu,
                                              std::span<const double> pv);

// Parameterized logical operators on [0,1]^2. XOR is derived from an
// (OR, AND) curve pair: h_xor = h_or - h_and.
double h_and(double a, double b, const GCurve& curve);
double h_or(double a, double b, const GCurve& curve);
double h_xor(double a, double b, const GCurve& or_curve, const GCurve& and_curve);

struct OpGrad {
    double value;
    double da; // d value / d a
    double db; // d value / d b
};

OpGrad h_and_grad(double a, double b, const GCurve& curve);
OpGrad h_or_grad(double a, double b, const GCurve& curve);
OpGrad h_xor_grad(double a, double b, const GCurve& or_curve, const GCurve& and_curve);

} // namespace asl
