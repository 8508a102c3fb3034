#include <catch2/catch_amalgamated.hpp>

#include "rgf/model.hpp"
#include "rgf/rng.hpp"

using namespace rgf;
using Catch::Approx;

TEST_CASE("loss values") {
    const Vec y{2.0};
    CHECK(loss_value(LossKind::squared_l2(), y, y) == 0.0);
    CHECK(loss_value(LossKind::power(1.1), {3.0}, {2.0}) == Approx(1.0));
    CHECK(loss_value(LossKind::squared_l2(), {1.0, 2.0}, {0.0, 0.0}) == Approx(5.0));
    CHECK_THROWS_AS(loss_value(LossKind::squared_l2(), {1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("loss gradients") {
    CHECK(norm_inf(loss_grad(LossKind::squared_l2(), {1.0, 2.0}, {1.0, 2.0})) == 0.0);
    CHECK(loss_grad(LossKind::power(1.1), {3.0}, {2.0})[0] == Approx(1.1));
    const Vec g = loss_grad(LossKind::squared_l2(), {1.0, 2.0}, {0.0, 0.0});
    CHECK(g[0] == Approx(2.0));
    CHECK(g[1] == Approx(4.0));
    CHECK(loss_grad(LossKind::power(1.5), {1.0}, {1.0})[0] == 0.0);  // tie
}

TEST_CASE("loss is zero exactly at ties") {
    Rng rng(77);
    for (int i = 0; i < 50; ++i) {
        const Vec z = rng.normal_vec(3), y = rng.normal_vec(3);
        const bool same = norm_inf(z - y) == 0.0;
        CHECK((loss_value(LossKind::power(1.3), z, y) == 0.0) == same);
    }
}

TEST_CASE("PL constants") {
    CHECK(pl_constant(LossKind::squared_l2()) == 2.0);
    CHECK_FALSE(pl_constant(LossKind::power(1.1)).has_value());
    CHECK(pl_constant(LossKind::power(2.0)) == 2.0);
    // ||grad||^2 = 2 * mu * loss holds with equality for the squared loss
    Rng rng(78);
    for (int i = 0; i < 100; ++i) {
        const Vec z = rng.normal_vec(4), y = rng.normal_vec(4);
        const double g2 = dot(loss_grad(LossKind::squared_l2(), z, y),
                              loss_grad(LossKind::squared_l2(), z, y));
        CHECK(g2 == Approx(2.0 * 2.0 * loss_value(LossKind::squared_l2(), z, y)).epsilon(1e-12));
    }
}

TEST_CASE("links") {
    CHECK(link_apply(LinkKind::Identity, 7.0) == 7.0);
    CHECK(link_apply(LinkKind::Cubic, 1.0) == 2.0);
    CHECK(link_inverse(LinkKind::Cubic, 2.0) == Approx(1.0).epsilon(1e-13));
    CHECK(link_derivative(LinkKind::Cubic, 2.0) == Approx(13.0));
    Rng rng(79);
    for (int i = 0; i < 50; ++i) {
        const double v = rng.uniform(-20.0, 20.0);
        CHECK(link_apply(LinkKind::Cubic, link_inverse(LinkKind::Cubic, v)) ==
              Approx(v).margin(1e-10));
    }
}

namespace {

ProblemInstance fig1a_like() {
    ProblemInstance inst;
    inst.a = Mat(1, 2, {-0.7, 1.0});
    inst.y = {2.0};
    inst.loss = LossKind::power(1.1);
    inst.reparam = ReparamFamily::power(1.2);
    inst.w0.assign(2, inst.reparam.inverse(1e-4));
    return inst;
}

}  // namespace

TEST_CASE("full_loss") {
    SECTION("vanishes at a global minimizer") {
        ProblemInstance inst;
        inst.a = Mat::identity(2);
        inst.y = {1.0, 2.0};
        inst.w0 = {0.0, 0.0};
        CHECK(full_loss(inst, {1.0, 2.0}) == 0.0);
    }
    SECTION("plain least squares arithmetic") {
        ProblemInstance inst;
        inst.a = Mat::identity(2);
        inst.y = {0.0, 0.0};
        inst.w0 = {0.0, 0.0};
        CHECK(full_loss(inst, {1.0, 2.0}) == Approx(5.0));
    }
    SECTION("small-initialization one-row instance") {
        const auto inst = fig1a_like();
        const double residual = -0.7e-4 + 1e-4 - 2.0;
        CHECK(full_loss(inst, inst.w0) == Approx(std::pow(std::abs(residual), 1.1)).epsilon(1e-14));
        CHECK(full_loss(inst, inst.w0) == Approx(std::pow(2.0, 1.1)).epsilon(1e-4));
    }
}

TEST_CASE("full_grad") {
    SECTION("power saddle has zero gradient") {
        auto inst = fig1a_like();
        CHECK(norm_inf(full_grad(inst, {0.0, 0.0})) == 0.0);
    }
    SECTION("classical least squares form") {
        Rng rng(80);
        ProblemInstance inst;
        inst.a = rng.gaussian(2, 3);
        inst.y = rng.normal_vec(2);
        inst.w0.assign(3, 0.0);
        const Vec w = rng.normal_vec(3);
        const Vec expected = matvec_t(inst.a, 2.0 * (matvec(inst.a, w) - inst.y));
        CHECK(norm_inf(full_grad(inst, w) - expected) < 1e-12);
    }
    SECTION("chain rule at the small initialization") {
        const auto inst = fig1a_like();
        const double r = -0.7e-4 + 1e-4 - 2.0;  // negative residual
        const double lprime = 1.1 * sgn(r) * std::pow(std::abs(r), 0.1);
        const double rho_prime = inst.reparam.derivative(inst.w0[0]);
        const Vec g = full_grad(inst, inst.w0);
        CHECK(g[0] == Approx(lprime * -0.7 * rho_prime).epsilon(1e-12));
        CHECK(g[1] == Approx(lprime * 1.0 * rho_prime).epsilon(1e-12));
    }
}

TEST_CASE("gradient matches central differences across model combinations") {
    const ReparamFamily fams[] = {ReparamFamily::identity(), ReparamFamily::power(1.3),
                                  ReparamFamily::sinh(), ReparamFamily::tanh()};
    const LossKind losses[] = {LossKind::squared_l2(), LossKind::power(1.1)};
    const LinkKind links[] = {LinkKind::Identity, LinkKind::Cubic};
    std::uint64_t seed = 90;
    for (const auto& fam : fams)
        for (const auto& loss : losses)
            for (const auto link : links) {
                Rng rng(seed++);
                ProblemInstance inst;
                inst.a = rng.gaussian(2, 3);
                inst.y = rng.normal_vec(2);
                inst.link = link;
                inst.loss = loss;
                inst.reparam = fam;
                inst.w0.assign(3, 0.0);
                int tested = 0;
                while (tested < 20) {
                    const Vec w = rng.normal_vec(3);
                    if (fam.has_interior_critical_point() &&
                        std::any_of(w.begin(), w.end(),
                                    [](double x) { return std::abs(x) < 1e-3; }))
                        continue;
                    ++tested;
                    const Vec g = full_grad(inst, w);
                    Vec fd(3);
                    for (std::size_t i = 0; i < 3; ++i) {
                        Vec wp = w, wm = w;
                        wp[i] += 1e-6;
                        wm[i] -= 1e-6;
                        fd[i] = (full_loss(inst, wp) - full_loss(inst, wm)) / 2e-6;
                    }
                    CHECK(norm_inf(g - fd) / std::max(norm_inf(g), 1e-8) < 1e-4);
                }
            }
}

TEST_CASE("instance validation") {
    ProblemInstance inst;
    inst.a = Mat(1, 2, {1.0, 1.0});
    inst.y = {1.0, 2.0};  // wrong length
    inst.w0 = {0.1, 0.1};
    CHECK_THROWS_AS(inst.validate(), std::invalid_argument);
    inst.y = {1.0};
    CHECK_NOTHROW(inst.validate());
    inst.reparam = ReparamFamily::power(1.2);
    inst.w0 = {0.1, 0.0};  // saddle coordinate
    CHECK_THROWS_AS(inst.validate(), std::invalid_argument);
}
