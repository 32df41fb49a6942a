#include <doctest.h>

#include <cmath>

#include "harvest/io.hpp"
#include "harvest/optimizer.hpp"
#include "support.hpp"

using namespace harvest;

namespace {

OptimizerOptions quick(int iters) {
    OptimizerOptions o;
    o.iterations = iters;
    return o;
}

}  // namespace

TEST_CASE("step size sequence") {
    CHECK(step_size(0, 3.0, 0.602) == 3.0);
    for (int l : {0, 5, 100}) CHECK(step_size(l, 2.0, 0.0) == 2.0);
    CHECK(step_size(10, 1.0, 0.7) < step_size(9, 1.0, 0.7));
    // partial sums: the plain series keeps growing, the squares level off
    double s1 = 0, s2 = 0, s1_half = 0, s2_half = 0;
    const int n = 2000000;
    for (int l = 0; l < n; ++l) {
        const double v = step_size(l, 1.0, 0.75);
        s1 += v;
        s2 += v * v;
        if (l == n / 2 - 1) s1_half = s1, s2_half = s2;
    }
    CHECK(s1 - s1_half > 10);
    CHECK(s2 - s2_half < 1e-2);
}

TEST_CASE("zero step sizes leave theta unchanged") {
    const auto cfg = parse_scenario(testing::lone_target_json());
    CostContext cc(cfg);
    const auto L = Layout::ellipse({1});
    const auto th0 = init_theta(cfg, L, 3);
    auto o = quick(4);
    o.eta_length = o.eta_phase = o.eta_frequency = 0;
    const auto r = optimize(cc, L, th0, o);
    CHECK(r.theta == th0);
    CHECK(r.history.size() == 5);
    for (const auto& h : r.history) CHECK(h.cost.J == r.history[0].cost.J);
}

TEST_CASE("single target single agent run improves") {
    const auto cfg = parse_scenario(testing::lone_target_json(0.5, 4000));
    CostContext cc(cfg);
    const auto L = Layout::ellipse({1});
    const auto th0 = init_theta(cfg, L, 1);
    const auto r = optimize(cc, L, th0, quick(50));
    REQUIRE(r.history.size() == 51);
    CHECK(r.history.back().cost.J < r.history.front().cost.J);
    CHECK(feasible(L, r.theta, feasibility_for(cfg)));
    CHECK(penalty(cc, L, r.theta) <= 1e-3);
    // the centre sits between the base and the target
    const auto e = get_segment(L, r.theta, 0, 0);
    const Vec2 c{e.A, e.B}, b = cfg.base.pos, t = cfg.targets[0].pos;
    const Vec2 axis = (1.0 / dist(b, t)) * (t - b);
    const Vec2 rel = c - b;
    const double off_axis = std::abs(rel.x * axis.y - rel.y * axis.x);
    CHECK(off_axis < 0.25 * dist(b, t));
}

TEST_CASE("optimizer is deterministic") {
    const auto cfg = parse_scenario(testing::lone_target_json(0.5, 2000));
    CostContext cc(cfg);
    const auto L = Layout::fourier(1, 2, 2);
    const auto th0 = init_theta(cfg, L, 5);
    const auto a = optimize(cc, L, th0, quick(5));
    const auto b = optimize(cc, L, th0, quick(5));
    CHECK(a.theta == b.theta);
    REQUIRE(a.history.size() == b.history.size());
    for (size_t k = 0; k < a.history.size(); ++k) {
        CHECK(a.history[k].cost.J == b.history[k].cost.J);
        CHECK(a.history[k].grad_norm == b.history[k].grad_norm);
    }
}

TEST_CASE("replication mean does not depend on the thread count") {
    auto cfg = parse_scenario(testing::lone_target_json(0.5, 2000));
    cfg.arrivals[0].mode = ArrivalSpec::Mode::piecewise_linear;
    CostContext cc(cfg);
    const auto L = Layout::ellipse({1});
    const auto th = init_theta(cfg, L, 1);
    const auto one = evaluate(cc, L, th, 10, 3, 1);
    const auto three = evaluate(cc, L, th, 10, 3, 3);
    CHECK(one.cost.J == three.cost.J);
    CHECK(one.grad == three.grad);
    CHECK(one.valid == 3);
    const auto a = evaluate(cc, L, th, 10, 1, 1), b = evaluate(cc, L, th, 11, 1, 1), c = evaluate(cc, L, th, 12, 1, 1);
    CHECK(one.cost.J == doctest::Approx((a.cost.J + b.cost.J + c.cost.J) / 3).epsilon(1e-14));
}

TEST_CASE("initial guesses are feasible") {
    for (const char* name : {"case1.json", "case2.json", "case3_det.json"}) {
        const auto cfg = load_scenario(testing::scenario_path(name));
        CostContext cc(cfg);
        const auto F = feasibility_for(cfg);
        const auto E = Layout::ellipse(std::vector<int>(cfg.N, 1));
        const auto te = init_theta(cfg, E, 1);
        CHECK(feasible(E, te, F));
        CHECK(penalty(cc, E, te) <= 1e-3);
        const auto Fo = Layout::fourier(cfg.N, 3, 3);
        const auto tf = init_theta(cfg, Fo, 1);
        CHECK(feasible(Fo, tf, F));
        for (const auto& p : build_paths(Fo, tf, cfg.base.pos)) {
            CHECK(p.position(0, 0).x == cfg.base.pos.x);
            CHECK(p.position(0, 0).y == cfg.base.pos.y);
        }
    }
}

TEST_CASE("segment search with an infinite threshold keeps one segment") {
    const auto cfg = parse_scenario(testing::lone_target_json(0.5, 1000));
    CostContext cc(cfg);
    const auto r = segment_search(cc, 2, quick(2), INFINITY);
    CHECK(r.segments == 1);
    CHECK(r.J_by_E.size() >= 1);
    CHECK(static_cast<int>(r.theta.size()) == 5);
}
