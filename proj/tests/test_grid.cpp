#include <catch2/catch_amalgamated.hpp>

#include "snn/config.hpp"
#include "snn/grid.hpp"

using namespace snn;

TEST_CASE("reset index and jump shift match the node convention") {
    ModelParams p = preset_params("hopf"); // v_reset = -1.5, w_jump = 1.5
    Grid2D g = build_grid(p, {-5.0, 6.0, 0.0, 5.5}, 111, 111);
    CHECK(g.dv == Catch::Approx(0.1));
    CHECK(g.dw == Catch::Approx(0.05));
    CHECK(g.i_reset == 35); // floor((-1.5 + 5)/0.1)
    CHECK(g.j_shift == 30); // 1.5/0.05
    CHECK(g.v_max == Catch::Approx(g.v_min + (g.n_v - 1) * g.dv));
    CHECK(g.w_max == Catch::Approx(g.w_min + (g.n_w - 1) * g.dw));
}

TEST_CASE("geometric validation errors") {
    ModelParams p = preset_params("hopf");
    CHECK_THROWS_AS(build_grid(p, {-5.0, 6.0, 0.0, 5.5}, 1, 111), config_error);
    CHECK_THROWS_AS(build_grid(p, {0.0, 6.0, 0.0, 5.5}, 111, 111),
                    config_error); // v_reset = -1.5 outside
    CHECK_THROWS_AS(build_grid(p, {-5.0, 6.0, 0.0, 1.0}, 111, 111),
                    config_error); // w_jump >= extent
    CHECK_THROWS_AS(build_grid(p, {-5.0, 6.0, 0.0, 5.5}, 111, 101),
                    config_error); // non-integer shift
}

TEST_CASE("preset default boxes build with sane geometry") {
    for (const auto& name : preset_names()) {
        ModelParams p = preset_params(name);
        PresetGrid pg = preset_grid(name);
        std::vector<std::string> warnings;
        Grid2D g = build_grid(p, pg.bounds, pg.n_v, pg.n_w, &warnings);
        INFO(name);
        CHECK(g.i_reset >= 1);
        CHECK(g.i_reset <= g.n_v - 1);
        CHECK(g.j_shift >= 1);
        CHECK(g.j_shift < g.n_w);
    }
    // the oscillation-sweep box satisfies every edge condition
    ModelParams hopf = preset_params("hopf");
    PresetGrid pg = preset_grid("hopf");
    std::vector<std::string> warnings;
    build_grid(hopf, pg.bounds, pg.n_v, pg.n_w, &warnings);
    for (const auto& w : warnings) INFO(w);
    CHECK(warnings.empty());
}

TEST_CASE("a box that violates the edge conditions warns but builds") {
    ModelParams p = preset_params("hopf");
    std::vector<std::string> warnings;
    // w_max below the v-nullcline at the reset: accumulation corner condition fails
    Grid2D g = build_grid(p, {-5.0, 6.0, 0.0, 1.6}, 111, 17, &warnings);
    (void)g;
    CHECK(!warnings.empty());
}
