#include "merchant/quadrature.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <queue>
#include <vector>

#include "merchant/errors.hpp"

namespace merchant {

namespace {

// 15-point Kronrod abscissae/weights with the embedded 7-point Gauss rule
// (QUADPACK dqk15 values).
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b;
    double value;
    double error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

Panel eval_panel(const std::function<double(double)>& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double abs_half = std::fabs(half);
    const double fc = f(center);
    double res_g = fc * kWg[3];
    double res_k = fc * kWgk[7];
    double res_abs = std::fabs(fc) * kWgk[7];
    double fv1[7], fv2[7];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        fv1[j] = f(center - dx);
        fv2[j] = f(center + dx);
        const double fsum = fv1[j] + fv2[j];
        res_k += kWgk[j] * fsum;
        res_abs += kWgk[j] * (std::fabs(fv1[j]) + std::fabs(fv2[j]));
        if (j % 2 == 1) res_g += kWg[j / 2] * fsum;
    }
    // QUADPACK dqk15 error heuristic: scale |K15-G7| against the variation
    // resasc so roundoff noise does not masquerade as discretization error.
    const double res_kh = res_k * 0.5;
    double res_asc = kWgk[7] * std::fabs(fc - res_kh);
    for (int j = 0; j < 7; ++j)
        res_asc += kWgk[j] * (std::fabs(fv1[j] - res_kh) + std::fabs(fv2[j] - res_kh));
    res_asc *= abs_half;
    res_abs *= abs_half;
    double err = std::fabs((res_k - res_g) * half);
    if (res_asc != 0.0 && err != 0.0)
        err = res_asc * std::min(1.0, std::pow(200.0 * err / res_asc, 1.5));
    const double epmach = std::numeric_limits<double>::epsilon();
    const double uflow = std::numeric_limits<double>::min();
    if (res_abs > uflow / (50.0 * epmach)) err = std::max(epmach * 50.0 * res_abs, err);

    Panel p;
    p.a = a;
    p.b = b;
    p.value = res_k * half;
    p.error = err;
    return p;
}

}  // namespace

QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double abs_tol, double rel_tol, int max_subdiv,
                     const std::vector<double>& breakpoints) {
    QuadResult out;
    if (a == b) {
        out.converged = true;
        return out;
    }
    std::priority_queue<Panel> heap;
    double total = 0.0;
    double total_err = 0.0;
    double left = a;
    std::vector<double> edges;
    for (double bp : breakpoints)
        if (bp > a && bp < b) edges.push_back(bp);
    edges.push_back(b);
    for (double edge : edges) {
        Panel p = eval_panel(f, left, edge);
        total += p.value;
        total_err += p.error;
        heap.push(p);
        left = edge;
    }
    int subdiv = 0;
    auto tol = [&] { return std::max(abs_tol, rel_tol * std::fabs(total)); };
    while (total_err > tol() && subdiv < max_subdiv) {
        Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // interval exhausted at double resolution; keep its estimate
            heap.push(worst);
            break;
        }
        Panel left = eval_panel(f, worst.a, mid);
        Panel right = eval_panel(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++subdiv;
    }
    out.value = total;
    out.abs_error = total_err;
    out.subdivisions = subdiv;
    out.converged = total_err <= tol();
    return out;
}

double integrate_or_throw(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, double rel_tol, int max_subdiv,
                          const std::vector<double>& breakpoints) {
    const QuadResult r = integrate(f, a, b, abs_tol, rel_tol, max_subdiv, breakpoints);
    if (!r.converged) throw NumericalFailure("quadrature did not reach the requested tolerance");
    return r.value;
}

}  // namespace merchant
