#include "harvest/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace harvest {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec2 rot(double c, double s, Vec2 v) { return {c * v.x - s * v.y, s * v.x + c * v.y}; }
Vec2 perp(Vec2 v) { return {-v.y, v.x}; }

double wrap(double x, double period) {
    x = std::fmod(x, period);
    return x < 0 ? x + period : x;
}

struct Residual {
    double u = 0;
    std::array<double, 5> du{};
};

Residual residual(const EllipseSegment& e, Vec2 wB) {
    const double dx = wB.x - e.A, dy = wB.y - e.B;
    const double a2 = e.a * e.a, b2 = e.b * e.b, a3 = a2 * e.a, b3 = b2 * e.b;
    const double c = std::cos(e.phi), s = std::sin(e.phi);
    const double c2 = c * c, s2 = s * s, sin2 = std::sin(2 * e.phi), cos2 = std::cos(2 * e.phi);
    const double f1 = dx * dx / a2 + dy * dy / b2;
    const double f2 = dx * dx / b2 + dy * dy / a2;
    const double k = 1.0 / a2 - 1.0 / b2;
    const double f3 = dx * dy * k;
    Residual r;
    r.u = 1.0 - f1 * c2 - f2 * s2 - f3 * sin2;
    const std::array<double, 4> f1p{-2 * dx / a2, -2 * dy / b2, -2 * dx * dx / a3, -2 * dy * dy / b3};
    const std::array<double, 4> f2p{-2 * dx / b2, -2 * dy / a2, -2 * dy * dy / a3, -2 * dx * dx / b3};
    const std::array<double, 4> f3p{-dy * k, -dx * k, -2 * dx * dy / a3, 2 * dx * dy / b3};
    for (int m = 0; m < 4; ++m) r.du[m] = -(f1p[m] * c2 + f2p[m] * s2 + f3p[m] * sin2);
    r.du[4] = (f1 - f2) * sin2 - 2 * f3 * cos2;
    return r;
}

}  // namespace

const char* family_name(Family f) { return f == Family::ellipse ? "ellipse" : "fourier"; }

Family parse_family(const std::string& s) {
    if (s == "ellipse") return Family::ellipse;
    if (s == "fourier") return Family::fourier;
    throw ConfigError("unknown trajectory family '" + s + "'");
}

Layout Layout::ellipse(const std::vector<int>& segments) {
    Layout L;
    L.family_ = Family::ellipse;
    for (int E : segments) {
        if (E < 1) throw ConfigError("segment count must be >= 1");
        AgentBlock b;
        b.offset = L.dim_;
        b.segments = E;
        b.count = 5 * E;
        L.dim_ += b.count;
        L.blocks_.push_back(b);
    }
    return L;
}

Layout Layout::fourier(int agents, int gx, int gy) {
    if (gx < 1 || gy < 1) throw ConfigError("harmonic counts must be >= 1");
    Layout L;
    L.family_ = Family::fourier;
    for (int j = 0; j < agents; ++j) {
        AgentBlock b;
        b.offset = L.dim_;
        b.gx = gx;
        b.gy = gy;
        b.count = 1 + 2 * gx + 2 * gy;
        L.dim_ += b.count;
        L.blocks_.push_back(b);
    }
    return L;
}

int Layout::agent_of(int k) const {
    for (int j = 0; j < agents(); ++j)
        if (k >= blocks_[j].offset && k < blocks_[j].offset + blocks_[j].count) return j;
    return -1;
}

std::string Layout::name(int k) const {
    const int j = agent_of(k);
    const auto& b = blocks_[j];
    int loc = k - b.offset;
    const std::string pre = "j" + std::to_string(j) + ".";
    if (family_ == Family::ellipse) {
        static const char* names[5] = {"A", "B", "a", "b", "phi"};
        return pre + "e" + std::to_string(loc / 5) + "." + names[loc % 5];
    }
    if (loc == 0) return pre + "fx";
    --loc;
    if (loc < b.gx) return pre + "a" + std::to_string(loc + 1);
    loc -= b.gx;
    if (loc < b.gx) return pre + "phx" + std::to_string(loc + 1);
    loc -= b.gx;
    if (loc < b.gy) return pre + "b" + std::to_string(loc + 1);
    loc -= b.gy;
    return pre + "phy" + std::to_string(loc + 1);
}

ParamGroup Layout::group(int k) const {
    const int j = agent_of(k);
    const auto& b = blocks_[j];
    int loc = k - b.offset;
    if (family_ == Family::ellipse) return loc % 5 == 4 ? ParamGroup::phase : ParamGroup::length;
    if (loc == 0) return ParamGroup::frequency;
    --loc;
    if (loc < b.gx) return ParamGroup::length;
    loc -= b.gx;
    if (loc < b.gx) return ParamGroup::phase;
    loc -= b.gx;
    if (loc < b.gy) return ParamGroup::length;
    return ParamGroup::phase;
}

EllipseSegment get_segment(const Layout& L, const std::vector<double>& theta, int j, int seg) {
    const double* p = theta.data() + L.block(j).offset + 5 * seg;
    return {p[0], p[1], p[2], p[3], p[4]};
}

void set_segment(const Layout& L, std::vector<double>& theta, int j, int seg, const EllipseSegment& e) {
    double* p = theta.data() + L.block(j).offset + 5 * seg;
    p[0] = e.A;
    p[1] = e.B;
    p[2] = e.a;
    p[3] = e.b;
    p[4] = e.phi;
}

FourierParams get_fourier(const Layout& L, const std::vector<double>& theta, int j) {
    const auto& b = L.block(j);
    const double* p = theta.data() + b.offset;
    FourierParams f;
    f.fx = p[0];
    f.a.assign(p + 1, p + 1 + b.gx);
    f.phx.assign(p + 1 + b.gx, p + 1 + 2 * b.gx);
    f.b.assign(p + 1 + 2 * b.gx, p + 1 + 2 * b.gx + b.gy);
    f.phy.assign(p + 1 + 2 * b.gx + b.gy, p + 1 + 2 * b.gx + 2 * b.gy);
    return f;
}

void set_fourier(const Layout& L, std::vector<double>& theta, int j, const FourierParams& f) {
    const auto& b = L.block(j);
    double* p = theta.data() + b.offset;
    p[0] = f.fx;
    std::copy(f.a.begin(), f.a.end(), p + 1);
    std::copy(f.phx.begin(), f.phx.end(), p + 1 + b.gx);
    std::copy(f.b.begin(), f.b.end(), p + 1 + 2 * b.gx);
    std::copy(f.phy.begin(), f.phy.end(), p + 1 + 2 * b.gx + b.gy);
}

Vec2 ellipse_point(const EllipseSegment& e, double th) {
    const Vec2 q{e.a * std::cos(th), e.b * std::sin(th)};
    return Vec2{e.A, e.B} + rot(std::cos(e.phi), std::sin(e.phi), q);
}

std::array<Vec2, 5> ellipse_jacobian(const EllipseSegment& e, double th) {
    const double c = std::cos(e.phi), s = std::sin(e.phi), ct = std::cos(th), st = std::sin(th);
    const Vec2 Rq = rot(c, s, {e.a * ct, e.b * st});
    return {Vec2{1, 0}, Vec2{0, 1}, Vec2{c * ct, s * ct}, Vec2{-s * st, c * st}, perp(Rq)};
}

double phase_origin(const EllipseSegment& e, Vec2 wB, std::array<double, 5>* grad) {
    const double c = std::cos(e.phi), s = std::sin(e.phi);
    const double dx = wB.x - e.A, dy = wB.y - e.B;
    const double ux = c * dx + s * dy, uy = -s * dx + c * dy;
    const double X = ux / e.a, Y = uy / e.b;
    const double D = X * X + Y * Y;
    if (grad) grad->fill(0.0);
    if (D < 1e-300) return 0.0;
    if (grad) {
        const std::array<double, 5> dux{-c, -s, 0, 0, uy};
        const std::array<double, 5> duy{s, -c, 0, 0, -ux};
        for (int k = 0; k < 5; ++k) {
            double dX = dux[k] / e.a, dY = duy[k] / e.b;
            if (k == 2) dX -= ux / (e.a * e.a);
            if (k == 3) dY -= uy / (e.b * e.b);
            (*grad)[k] = (X * dY - Y * dX) / D;
        }
    }
    return std::atan2(Y, X);
}

double ellipse_perimeter(const EllipseSegment& e) {
    // periodic integrand: the trapezoid rule converges geometrically
    const int n = 4096;
    double acc = 0;
    for (int k = 0; k < n; ++k) {
        const double th = kTwoPi * k / n;
        acc += std::hypot(e.a * std::sin(th), e.b * std::cos(th));
    }
    return acc * kTwoPi / n;
}

BaseConstraint base_constraint(const EllipseSegment& e, Vec2 wB) {
    const Residual r = residual(e, wB);
    BaseConstraint bc;
    bc.residual = r.u;
    bc.value = r.u * r.u;
    for (int k = 0; k < 5; ++k) bc.grad[k] = 2.0 * r.u * r.du[k];
    return bc;
}

bool project_onto_base(EllipseSegment& e, Vec2 wB, double amax, double L1, double L2) {
    for (int it = 0; it < 100; ++it) {
        const Residual r = residual(e, wB);
        if (std::abs(r.u) < 1e-13) return true;
        double g2 = 0;
        for (double d : r.du) g2 += d * d;
        if (g2 < 1e-300) return false;
        double step = -r.u / g2;
        double len = std::abs(step) * std::sqrt(g2);
        if (len > 0.5) step *= 0.5 / len;
        e.A = std::clamp(e.A + step * r.du[0], 0.0, L1);
        e.B = std::clamp(e.B + step * r.du[1], 0.0, L2);
        e.a = std::clamp(e.a + step * r.du[2], 0.1, amax);
        e.b = std::clamp(e.b + step * r.du[3], 0.1, amax);
        e.phi = wrap(e.phi + step * r.du[4], kPi);
    }
    return std::abs(residual(e, wB).u) < 1e-10;
}

AgentPath::AgentPath(const Layout& L, const std::vector<double>& theta, int j, Vec2 wB)
    : family_(L.family()), agent_(j), offset_(L.block(j).offset), wB_(wB) {
    if (family_ == Family::ellipse) {
        for (int k = 0; k < L.block(j).segments; ++k) {
            segs_.push_back(get_segment(L, theta, j, k));
            std::array<double, 5> d{};
            th0_.push_back(phase_origin(segs_.back(), wB, &d));
            dth0_.push_back(d);
        }
    } else {
        f_ = get_fourier(L, theta, j);
        a0_ = wB.x;
        b0_ = wB.y;
        for (size_t n = 0; n < f_.a.size(); ++n) a0_ -= f_.a[n] * std::sin(f_.phx[n]);
        for (size_t n = 0; n < f_.b.size(); ++n) b0_ -= f_.b[n] * std::sin(f_.phy[n]);
        segs_.resize(1);
    }
}

double AgentPath::segment_end(int seg) const {
    if (seg + 1 >= segments()) return std::numeric_limits<double>::infinity();
    return kTwoPi * (seg + 1);
}

void AgentPath::eval(double rho, int seg, PathPoint& out, bool jac) const {
    if (family_ == Family::ellipse) {
        const auto& e = segs_[seg];
        const double th = rho - kTwoPi * seg + th0_[seg];
        const double c = std::cos(e.phi), s = std::sin(e.phi), ct = std::cos(th), st = std::sin(th);
        const Vec2 Rq = rot(c, s, {e.a * ct, e.b * st});
        out.s = Vec2{e.A, e.B} + Rq;
        out.g = rot(c, s, {-e.a * st, e.b * ct});
        out.gg = -1.0 * Rq;
        out.col0 = offset_ + 5 * seg;
        out.ncol = 5;
        if (!jac) return;
        out.sp.resize(5);
        out.gp.resize(5);
        const std::array<Vec2, 5> sp{Vec2{1, 0}, Vec2{0, 1}, Vec2{c * ct, s * ct}, Vec2{-s * st, c * st}, perp(Rq)};
        const std::array<Vec2, 5> gp{Vec2{0, 0}, Vec2{0, 0}, Vec2{-c * st, -s * st}, Vec2{-s * ct, c * ct},
                                     perp(out.g)};
        const auto& d = dth0_[seg];
        for (int k = 0; k < 5; ++k) {
            out.sp[k] = sp[k] + d[k] * out.g;
            out.gp[k] = gp[k] + d[k] * out.gg;
        }
        return;
    }
    const int gx = static_cast<int>(f_.a.size()), gy = static_cast<int>(f_.b.size());
    // written as w_B + sum a_n (sin(arg) - sin(ph)) so that rho = 0 lands on the base exactly
    out.s = wB_;
    out.g = {0, 0};
    out.gg = {0, 0};
    out.col0 = offset_;
    out.ncol = 1 + 2 * gx + 2 * gy;
    if (jac) {
        out.sp.assign(out.ncol, Vec2{0, 0});
        out.gp.assign(out.ncol, Vec2{0, 0});
    }
    for (int n = 1; n <= gx; ++n) {
        const double an = f_.a[n - 1], ph = f_.phx[n - 1];
        const double w = kTwoPi * n * f_.fx;
        const double arg = w * rho + ph, sa = std::sin(arg), ca = std::cos(arg);
        out.s.x += an * (sa - std::sin(ph));
        out.g.x += an * w * ca;
        out.gg.x -= an * w * w * sa;
        if (!jac) continue;
        const double dw = kTwoPi * n;  // dw/dfx
        out.sp[0].x += an * dw * rho * ca;
        out.gp[0].x += an * dw * ca - an * w * dw * rho * sa;
        out.sp[n].x = sa - std::sin(ph);
        out.gp[n].x = w * ca;
        out.sp[gx + n].x = an * ca - an * std::cos(ph);
        out.gp[gx + n].x = -an * w * sa;
    }
    for (int n = 1; n <= gy; ++n) {
        const double bn = f_.b[n - 1], ph = f_.phy[n - 1];
        const double w = kTwoPi * n;
        const double arg = w * rho + ph, sa = std::sin(arg), ca = std::cos(arg);
        out.s.y += bn * (sa - std::sin(ph));
        out.g.y += bn * w * ca;
        out.gg.y -= bn * w * w * sa;
        if (!jac) continue;
        const int kb = 2 * gx + n, kp = 2 * gx + gy + n;
        out.sp[kb].y = sa - std::sin(ph);
        out.gp[kb].y = w * ca;
        out.sp[kp].y = bn * ca - bn * std::cos(ph);
        out.gp[kp].y = -bn * w * sa;
    }
}

Vec2 AgentPath::position(double rho, int seg) const {
    PathPoint p;
    eval(rho, seg, p, false);
    return p.s;
}

double AgentPath::rho_dot(double rho, int seg) const {
    PathPoint p;
    eval(rho, seg, p, false);
    const double n = norm(p.g);
    if (n < kEpsCurve)
        throw SingularityError("degenerate curve point for agent " + std::to_string(agent_) + " segment " +
                               std::to_string(seg));
    return 1.0 / n;
}

Vec2 AgentPath::velocity(double rho, int seg) const {
    PathPoint p;
    eval(rho, seg, p, false);
    const double n = norm(p.g);
    if (n < kEpsCurve)
        throw SingularityError("degenerate curve point for agent " + std::to_string(agent_) + " segment " +
                               std::to_string(seg));
    return (1.0 / n) * p.g;
}

std::vector<AgentPath> build_paths(const Layout& L, const std::vector<double>& theta, Vec2 wB) {
    std::vector<AgentPath> out;
    for (int j = 0; j < L.agents(); ++j) out.emplace_back(L, theta, j, wB);
    return out;
}

std::vector<double> segment_schedule(const std::vector<EllipseSegment>& segs) {
    if (segs.empty()) throw ConfigError("segment sequence must be non-empty");
    std::vector<double> out;
    double t = 0;
    for (const auto& e : segs) {
        t += ellipse_perimeter(e);
        out.push_back(t);
    }
    return out;
}

Feasibility feasibility_for(const MissionConfig& cfg) {
    Feasibility F;
    F.L1 = cfg.L1;
    F.L2 = cfg.L2;
    F.ab_max = std::max(cfg.L1, cfg.L2);
    F.amp_max = std::max(cfg.L1, cfg.L2);
    return F;
}

void project(const Layout& L, std::vector<double>& theta, const Feasibility& F) {
    for (int j = 0; j < L.agents(); ++j) {
        const auto& b = L.block(j);
        if (L.family() == Family::ellipse) {
            for (int k = 0; k < b.segments; ++k) {
                auto e = get_segment(L, theta, j, k);
                e.A = std::clamp(e.A, 0.0, F.L1);
                e.B = std::clamp(e.B, 0.0, F.L2);
                e.a = std::clamp(e.a, F.ab_min, F.ab_max);
                e.b = std::clamp(e.b, F.ab_min, F.ab_max);
                e.phi = wrap(e.phi, kPi);
                set_segment(L, theta, j, k, e);
            }
        } else {
            auto f = get_fourier(L, theta, j);
            f.fx = std::clamp(f.fx, F.f_min, F.f_max);
            for (auto& v : f.a) v = std::clamp(v, -F.amp_max, F.amp_max);
            for (auto& v : f.b) v = std::clamp(v, -F.amp_max, F.amp_max);
            for (auto& v : f.phx) v = wrap(v, kTwoPi);
            for (auto& v : f.phy) v = wrap(v, kTwoPi);
            set_fourier(L, theta, j, f);
        }
    }
}

bool feasible(const Layout& L, const std::vector<double>& theta, const Feasibility& F) {
    auto copy = theta;
    project(L, copy, F);
    return copy == theta;
}

}  // namespace harvest
