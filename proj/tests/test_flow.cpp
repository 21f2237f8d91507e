#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <numbers>

#include "apmcf/flow.hpp"
#include "apmcf/spherical_harmonics.hpp"

using namespace apmcf;
namespace {
constexpr double kPi = std::numbers::pi;

RadialGraph mode_sphere(GridPtr grid, double radius, int l, int m, double amp) {
    RadialGraph s = RadialGraph::sphere(std::move(grid), Eigen::Vector3d::Zero(), radius);
    const GridSpec& g = *s.grid;
    for (int i = 0; i < g.n_theta; ++i)
        for (int j = 0; j < g.n_phi; ++j)
            s.rho[g.idx(i, j)] += amp * real_sph_harmonic(l, m, g.theta[i], g.phi[j]);
    return s;
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}
}  // namespace

TEST_CASE("constant mean curvature surfaces are stationary") {
    auto grid = GridSpec::create(48, 96);
    FlowConfig cfg;
    struct Case {
        AmbientMetric amb;
        double radius;
    };
    const Case cases[] = {
        {AmbientMetric::euclidean(), 1.0},
        {AmbientMetric::sphere_chart(), std::tan(0.5)},       // geodesic sphere s=1 in S^3
        {AmbientMetric::hyperbolic_chart(), std::tanh(0.5)},  // geodesic sphere s=1 in H^3
        {AmbientMetric::schwarzschild(1.0), 10.0},
    };
    for (const auto& c : cases) {
        auto s = RadialGraph::sphere(grid, Eigen::Vector3d::Zero(), c.radius);
        FlowConfig run_cfg = cfg;
        if (c.amb.kind == AmbientKind::Schwarzschild) run_cfg.r_inner = 1.0;
        auto e = eval_stage(s, c.amb, run_cfg);
        CHECK(max_abs(e.velocity) <= 1e-8);
    }
}

TEST_CASE("normal speed properties") {
    auto grid = GridSpec::create(16, 32);
    auto amb = AmbientMetric::euclidean();
    auto s = mode_sphere(grid, 1.0, 2, 0, 0.1);
    auto first = first_fundamental(s, amb);
    auto second = second_fundamental(s, amb, first);
    auto terms = global_terms(s, amb, first, second, 0.0, false);

    SECTION("area-preserving mode: f = h0 - H with matching signs") {
        FlowConfig cfg;
        auto f = normal_speed(second, terms, cfg);
        for (std::size_t k = 0; k < f.size(); ++k) {
            if (second.H[k] < terms.h0) CHECK(f[k] > 0.0);
            if (second.H[k] > terms.h0) CHECK(f[k] < 0.0);
        }
    }
    SECTION("volume-preserving mode has exactly mean-zero speed") {
        FlowConfig cfg;
        cfg.global_term = GlobalTerm::H;
        auto f = normal_speed(second, terms, cfg);
        std::vector<double> buf(f.size());
        for (std::size_t k = 0; k < f.size(); ++k) buf[k] = first.weight[k] * f[k];
        CHECK(std::abs(pairwise_sum(buf)) <= 1e-12 * std::abs(terms.int_H));
    }
    SECTION("round sphere is a fixed point of the h0 mode") {
        auto r = RadialGraph::sphere(grid, Eigen::Vector3d::Zero(), 1.0);
        auto e = eval_stage(r, amb, FlowConfig{});
        CHECK(max_abs(e.speed) <= 1e-10);
    }
}

TEST_CASE("radial velocity") {
    auto grid = GridSpec::create(16, 32);
    SECTION("definition residual vanishes on a tilted ellipsoid") {
        auto amb = AmbientMetric::euclidean();
        auto s = mode_sphere(grid, 1.0, 2, 1, 0.15);
        auto first = first_fundamental(s, amb);
        auto second = second_fundamental(s, amb, first);
        auto terms = global_terms(s, amb, first, second, 0.0, false);
        auto f = normal_speed(second, terms, FlowConfig{});
        auto v = radial_velocity(s, f, first);
        for (std::size_t k = 0; k < v.size(); ++k)
            CHECK(std::abs(v[k] * first.margin[k] - f[k]) <= 1e-14);
    }
    SECTION("concentric Schwarzschild spheres have nu parallel to omega") {
        auto amb = AmbientMetric::schwarzschild(1.0);
        auto s = RadialGraph::sphere(grid, Eigen::Vector3d::Zero(), 10.0);
        auto first = first_fundamental(s, amb);
        // margin = <nu, omega> = psi for the Euclid-unit radial omega
        const double psi = std::pow(1.0 + 0.05, 2);
        for (double m : first.margin) CHECK(std::abs(m - psi) < 1e-12);
    }
    SECTION("margin guard throws when the graph degenerates") {
        auto amb = AmbientMetric::euclidean();
        auto s = mode_sphere(grid, 1.0, 2, 0, 0.1);
        auto first = first_fundamental(s, amb);
        first.min_margin = 0.01;  // simulate a near-tangent normal
        std::vector<double> f(s.rho.size(), 0.0);
        CHECK_THROWS_AS(radial_velocity(s, f, first), GraphDegenerationError);
    }
}

TEST_CASE("the round sphere is unchanged by repeated steps") {
    auto grid = GridSpec::create(16, 32);
    auto amb = AmbientMetric::euclidean();
    auto s = RadialGraph::sphere(grid, Eigen::Vector3d::Zero(), 1.0);
    FlowConfig cfg;
    for (int k = 0; k < 5; ++k) {
        auto e = eval_stage(s, amb, cfg);
        step(s, amb, cfg, e, 1e9, 1e-3);
    }
    for (double rho : s.rho) CHECK(std::abs(rho - 1.0) <= 1e-12);
}

TEST_CASE("a single step damps the quadrupole mode") {
    auto grid = GridSpec::create(16, 32);
    auto amb = AmbientMetric::euclidean();
    auto s = mode_sphere(grid, 1.0, 2, 0, 1e-3);
    FlowConfig cfg;
    auto e0 = eval_stage(s, amb, cfg);
    auto sr = step(s, amb, cfg, e0, 1e9);
    CHECK(sr.halvings == 0);
    auto e1 = eval_stage(s, amb, cfg);
    CHECK(e1.second.max_Aring2 < e0.second.max_Aring2);
}

TEST_CASE("one-step area error is time-discretization dominated at large dt") {
    auto grid = GridSpec::create(16, 32);
    auto amb = AmbientMetric::euclidean();
    FlowConfig cfg;
    const double dt0 = 0.08;
    std::vector<double> errs;
    for (double dt : {dt0, 0.5 * dt0}) {
        auto s = mode_sphere(grid, 1.0, 2, 0, 0.1);
        auto e = eval_stage(s, amb, cfg);
        const double a0 = e.terms.area;
        auto sr = step(s, amb, cfg, e, 1e9, dt);
        REQUIRE(sr.halvings == 0);
        auto e1 = eval_stage(s, amb, cfg);
        errs.push_back(std::abs(e1.terms.area - a0) / a0);
    }
    // >= 3rd order under halving (the local truncation term is 5th order)
    CHECK(errs[1] <= errs[0] / 8.0);
    // and the loose absolute bound |dA|/A <= C dt^3 with C from the coarse run
    const double C = errs[0] / (dt0 * dt0 * dt0);
    CHECK(errs[1] <= C * std::pow(0.5 * dt0, 3));
}

TEST_CASE("short conservation runs") {
    auto grid = GridSpec::create(16, 32);
    auto amb = AmbientMetric::euclidean();
    SECTION("area-preserving mode conserves area and grows volume") {
        FlowConfig cfg;
        cfg.t_end = 0.5;
        cfg.monitor_cadence = 5;
        auto run1 = run(mode_sphere(grid, 1.0, 2, 0, 0.05), amb, cfg);
        REQUIRE(run1.reason == Termination::TimeBudget);
        REQUIRE(run1.records.size() > 5);
        const double a0 = run1.records.front().terms.area;
        for (const auto& r : run1.records) {
            CHECK(std::abs(r.terms.area - a0) / a0 <= 1e-6);
            CHECK(r.monitor.vol_integrand >= -1e-12);
        }
        for (std::size_t i = 1; i < run1.records.size(); ++i)
            CHECK(run1.records[i].terms.volume >=
                  run1.records[i - 1].terms.volume - 1e-8);
    }
    SECTION("volume-preserving mode conserves the enclosed volume") {
        FlowConfig cfg;
        cfg.global_term = GlobalTerm::H;
        cfg.t_end = 0.5;
        cfg.monitor_cadence = 10;
        auto run1 = run(mode_sphere(grid, 1.0, 2, 0, 0.05), amb, cfg);
        REQUIRE(run1.reason == Termination::TimeBudget);
        const double v0 = run1.records.front().terms.volume;
        for (const auto& r : run1.records)
            CHECK(std::abs(r.terms.volume - v0) / v0 <= 1e-6);
    }
    SECTION("h1 mode conserves the integral of H") {
        FlowConfig cfg;
        cfg.global_term = GlobalTerm::H1;
        cfg.t_end = 0.5;
        cfg.monitor_cadence = 10;
        auto run1 = run(mode_sphere(grid, 1.0, 2, 0, 0.05), amb, cfg);
        REQUIRE(run1.reason == Termination::TimeBudget);
        const double i0 = run1.records.front().terms.int_H;
        for (const auto& r : run1.records)
            CHECK(std::abs(r.terms.int_H - i0) / i0 <= 1e-6);
    }
}

TEST_CASE("area is conserved in the curved space forms too") {
    auto grid = GridSpec::create(16, 32);
    auto amb = AmbientMetric::sphere_chart();
    // geodesic sphere s = 1 with a small quadrupole ripple
    auto s = mode_sphere(grid, std::tan(0.5), 2, 0, 0.01);
    FlowConfig cfg;
    cfg.t_end = 0.3;
    cfg.monitor_cadence = 5;
    auto r = run(s, amb, cfg);
    REQUIRE((r.reason == Termination::TimeBudget || r.reason == Termination::Converged));
    const double a0 = r.records.front().terms.area;
    for (const auto& rec : r.records) {
        CHECK(std::abs(rec.terms.area - a0) / a0 <= 1e-6);
        CHECK(rec.monitor.vol_integrand >= -1e-12);
    }
}

TEST_CASE("flow configuration invariants") {
    auto grid = GridSpec::create(16, 32);
    auto amb = AmbientMetric::euclidean();
    auto s = RadialGraph::sphere(grid, Eigen::Vector3d::Zero(), 1.0);
    FlowConfig cfg;
    cfg.cfl = 0.7;
    CHECK_THROWS_AS(run(s, amb, cfg), ValidationError);
    cfg.cfl = 0.2;
    cfg.t_end = -1.0;
    CHECK_THROWS_AS(run(s, amb, cfg), ValidationError);
}

TEST_CASE("flow converges to a round sphere at desk scale") {
    auto grid = GridSpec::create(16, 32);
    auto amb = AmbientMetric::euclidean();
    FlowConfig cfg;
    cfg.t_end = 20.0;
    auto initial = mode_sphere(grid, 1.0, 2, 0, 0.02);
    auto r = run(initial, amb, cfg);
    REQUIRE(r.reason == Termination::Converged);

    const double area0 = r.records.front().terms.area;
    const double rf = std::sqrt(area0 / (4.0 * kPi));
    double dev = 0.0;
    for (double rho : r.final_surface.rho) dev = std::max(dev, std::abs(rho - rf));
    CHECK(dev <= 1e-6);
    CHECK(std::abs(r.records.back().terms.area - area0) / area0 <= 1e-6);

    SECTION("the converged surface re-fed as initial data is stationary") {
        auto e = eval_stage(r.final_surface, amb, cfg);
        CHECK(max_abs(e.velocity) <= 1e-8);
    }
    SECTION("monitored records have strictly increasing time and finite values") {
        for (std::size_t i = 1; i < r.records.size(); ++i)
            CHECK(r.records[i].t > r.records[i - 1].t);
        for (const auto& rec : r.records) {
            CHECK(std::isfinite(rec.monitor.max_aring));
            CHECK(std::isfinite(rec.monitor.res_dtH));
            CHECK(std::isfinite(rec.monitor.volume));
        }
    }
}

TEST_CASE("runs are deterministic") {
    auto grid = GridSpec::create(16, 32);
    auto amb = AmbientMetric::euclidean();
    FlowConfig cfg;
    cfg.t_end = 0.2;
    auto a = run(mode_sphere(grid, 1.0, 2, 0, 0.05), amb, cfg);
    auto b = run(mode_sphere(grid, 1.0, 2, 0, 0.05), amb, cfg);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(std::memcmp(a.records[i].surface.rho.data(), b.records[i].surface.rho.data(),
                          a.records[i].surface.rho.size() * sizeof(double)) == 0);
        CHECK(a.records[i].terms.h0 == b.records[i].terms.h0);
        CHECK(a.records[i].terms.volume == b.records[i].terms.volume);
    }
}

TEST_CASE("evolution consistency diagnostics") {
    auto grid = GridSpec::create(16, 32);
    auto amb = AmbientMetric::euclidean();
    FlowConfig cfg;
    SECTION("all residuals vanish on the stationary round sphere") {
        cfg.t_end = 0.01;
        cfg.monitor_cadence = 1;
        auto r = run(RadialGraph::sphere(grid, Eigen::Vector3d::Zero(), 1.0), amb, cfg);
        // stationary: converges immediately, no steps taken
        CHECK(r.reason == Termination::Converged);
        CHECK(r.steps == 0);
        // manufacture two identical-time-shifted records instead
        auto e = eval_stage(r.final_surface, amb, cfg);
        FlowRecord b{0.0, r.final_surface, e.terms, {}};
        FlowRecord a{0.1, r.final_surface, e.terms, {}};
        auto res = evolution_consistency(b, a, amb, cfg);
        CHECK(res.res_area <= 1e-10);
        CHECK(res.res_vol <= 1e-10);
        // pointwise residual carries H rounding noise through the stencil norms
        CHECK(res.res_dtH <= 1e-9);
        CHECK(res.res_dth <= 1e-10);
        CHECK(res.vol_integrand >= -1e-12);
    }
    SECTION("single-step residuals from a fixed state decrease with dt") {
        const double dt0 = 5e-3;
        std::vector<EvolutionResiduals> res;
        for (double dt : {dt0, 0.5 * dt0, 0.25 * dt0}) {
            auto s = mode_sphere(grid, 1.0, 2, 0, 0.1);
            auto e = eval_stage(s, amb, cfg);
            FlowRecord before{0.0, s, e.terms, {}};
            auto s2 = s;
            auto sr = step(s2, amb, cfg, e, 1e9, dt);
            REQUIRE(sr.halvings == 0);
            auto e2 = eval_stage(s2, amb, cfg);
            FlowRecord after{dt, s2, e2.terms, {}};
            res.push_back(evolution_consistency(before, after, amb, cfg));
        }
        CHECK(res[1].res_vol < res[0].res_vol);
        CHECK(res[2].res_vol < res[1].res_vol);
        CHECK(res[1].res_dth < res[0].res_dth);
        CHECK(res[2].res_dth < res[1].res_dth);
        CHECK(res[1].res_dtH < res[0].res_dtH);
        CHECK(res[2].res_dtH < res[1].res_dtH);
    }
}

TEST_CASE("termination reasons") {
    auto grid = GridSpec::create(16, 32);
    auto amb = AmbientMetric::euclidean();
    SECTION("zero time budget returns immediately with no records") {
        FlowConfig cfg;
        cfg.t_end = 0.0;
        auto r = run(mode_sphere(grid, 1.0, 2, 0, 0.05), amb, cfg);
        CHECK(r.reason == Termination::TimeBudget);
        CHECK(r.records.empty());
        CHECK(r.steps == 0);
    }
    SECTION("step budget") {
        FlowConfig cfg;
        cfg.max_steps = 3;
        auto r = run(mode_sphere(grid, 1.0, 2, 0, 0.05), amb, cfg);
        CHECK(r.reason == Termination::StepBudget);
        CHECK(r.steps == 3);
    }
    SECTION("nonpositive integral of H is a terminal error") {
        auto sph = AmbientMetric::sphere_chart();
        FlowConfig cfg;
        auto r = run(RadialGraph::sphere(grid, Eigen::Vector3d::Zero(), 3.0), sph, cfg);
        CHECK(r.reason == Termination::ErrorNonpositiveMeanCurvature);
    }
    SECTION("step rejection exhausts after halvings on an absurd step") {
        FlowConfig cfg;
        auto s = mode_sphere(grid, 1.0, 2, 0, 0.3);
        auto e = eval_stage(s, amb, cfg);
        CHECK_THROWS_AS(step(s, amb, cfg, e, 1e18, 1e12), StepRejectedError);
    }
}
