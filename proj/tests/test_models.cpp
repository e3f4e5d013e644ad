#include <doctest.h>

#include "cpcs/lindblad.hpp"
#include "cpcs/models.hpp"

using namespace cpcs;

namespace {
Eigen::VectorXd eigenvalues(const Matrix& h) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}
}  // namespace

TEST_CASE("two-level constructor") {
    auto s = make_two_level(7.35e-2, 3.3e-3, 3.93);
    CHECK(s.dim == 2);
    auto ev = eigenvalues(s.h0);
    CHECK(ev(0) == doctest::Approx(0.0));
    CHECK(ev(1) == doctest::Approx(7.35e-2));
    CHECK(s.jumps.size() == 1);
    Matrix ada = s.emission_op.adjoint() * s.emission_op;
    CHECK((ada - projector(1, 1, 2)).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(make_two_level(-1.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("exciton-biexciton constructor") {
    SUBCASE("spectrum follows the level scheme") {
        auto s = make_exciton_biexciton({7.35e-2, 1e-3, 3.3e-3, 3.93});
        CHECK(s.h0(1, 1).real() == doctest::Approx(0.0745));
        CHECK(s.h0(2, 2).real() == doctest::Approx(0.0725));
        CHECK(s.h0(3, 3).real() == doctest::Approx(0.147));
        CHECK(s.jumps.size() == 4);
        CHECK(s.drives.size() == 2);
    }
    SUBCASE("zero splitting leaves the excitons degenerate") {
        auto s = make_exciton_biexciton({7.35e-2, 0.0, 3.3e-3, 3.93});
        CHECK(s.h0(1, 1) == s.h0(2, 2));
    }
    SUBCASE("biexciton energy is 2 omega_x for any splitting") {
        for (double delta : {-2e-3, 0.0, 5e-4, 2e-3}) {
            auto s = make_exciton_biexciton({7.35e-2, delta, 3.3e-3, 3.93});
            CHECK(s.h0(3, 3).real() == doctest::Approx(2 * 7.35e-2));
        }
    }
    SUBCASE("excitation number commutes with H0 and drives change it by one") {
        auto s = make_exciton_biexciton({7.35e-2, 1e-3, 3.3e-3, 3.93});
        Matrix n = s.number_operator();
        CHECK((s.h0 * n - n * s.h0).cwiseAbs().maxCoeff() == 0.0);
        for (const auto& d : s.drives)
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c)
                    if (std::abs(d.op(r, c)) > 0)
                        CHECK(std::abs(s.excitation_number(r) - s.excitation_number(c)) == 1.0);
    }
    CHECK_THROWS_AS(make_exciton_biexciton({7.35e-2, 8e-2, 3.3e-3, 3.93}), std::invalid_argument);
}

TEST_CASE("coupled-emitter constructor") {
    SUBCASE("resonant single-excitation eigenvalues are omega +- g") {
        auto s = make_coupled_emitters({7.35e-2, 7.35e-2, 2e-3, 3.3e-3, 3.93});
        auto ev = eigenvalues(s.h0);
        CHECK(ev(0) == doctest::Approx(0.0));
        CHECK(ev(1) == doctest::Approx(7.35e-2 - 2e-3));
        CHECK(ev(2) == doctest::Approx(7.35e-2 + 2e-3));
        CHECK(ev(3) == doctest::Approx(2 * 7.35e-2));
    }
    SUBCASE("total excitation commutes with H0") {
        auto s = make_coupled_emitters({7.0e-2, 7.5e-2, 3e-3, 3.3e-3, 3.93});
        Matrix n = s.number_operator();
        CHECK((s.h0 * n - n * s.h0).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("g = 0 with TLS-1 drive keeps TLS 2 exactly dark") {
        auto s = make_coupled_emitters({7.35e-2, 7.35e-2, 0.0, 3.3e-3, 3.93});
        DriveProgram prog;
        prog.assignments.push_back({Pulse{5e-3, 300.0, 100.0, 7.35e-2}, 0});
        TimeGrid grid{0.0, 0.5, 2400};
        auto traj = propagate(s, prog, DensityMatrix::ground(4), grid);
        double worst = 0;
        for (const auto& rho : traj.states)
            worst = std::max(worst, std::abs(rho(1, 1).real()) + std::abs(rho(3, 3).real()));
        CHECK(worst == 0.0);
    }
}
