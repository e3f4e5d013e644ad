#include <doctest.h>

#include "cpcs/operators.hpp"

using namespace cpcs;

TEST_CASE("projector basics") {
    Matrix sigma = projector(0, 1, 2);  // TLS lowering operator
    CHECK(sigma(0, 1) == Complex{1.0, 0.0});
    CHECK(sigma.cwiseAbs().sum() == 1.0);

    Matrix pe = projector(1, 1, 2);  // excited-state population projector
    CHECK(pe(1, 1) == Complex{1.0, 0.0});
    CHECK(pe.cwiseAbs().sum() == 1.0);

    Matrix p = projector(0, 3, 4);
    Matrix p33 = p.adjoint() * p;  // |3><3|
    CHECK((p33 - projector(3, 3, 4)).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(projector(0, 2, 2), std::out_of_range);
    CHECK_THROWS_AS(projector(-1, 0, 2), std::out_of_range);
}

TEST_CASE("projector multiplication table |m><n| |p><q| = delta_np |m><q|") {
    const int dim = 4;
    for (int m = 0; m < dim; ++m)
        for (int n = 0; n < dim; ++n)
            for (int p = 0; p < dim; ++p)
                for (int q = 0; q < dim; ++q) {
                    Matrix lhs = projector(m, n, dim) * projector(p, q, dim);
                    Matrix rhs = (n == p) ? projector(m, q, dim) : Matrix::Zero(dim, dim).eval();
                    CHECK((lhs - rhs).cwiseAbs().maxCoeff() == 0.0);
                }
}

TEST_CASE("double dagger returns the original operator") {
    Matrix a = 2.0 * projector(0, 1, 3) + Complex{0, 1.5} * projector(2, 0, 3);
    CHECK((dagger(dagger(a)) - a).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("validate_density diagnostics") {
    SUBCASE("maximally mixed state is clean") {
        DensityMatrix rho{Matrix::Identity(4, 4) / 4.0, true};
        auto r = validate_density(rho, 1e-8);
        CHECK(r.ok());
        CHECK(r.herm_defect == 0.0);
        CHECK(r.trace_deviation == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(r.min_eigenvalue == doctest::Approx(0.25));
    }
    SUBCASE("pure excited state is valid") {
        DensityMatrix rho{projector(1, 1, 2), true};
        CHECK(validate_density(rho, 1e-8).ok());
    }
    SUBCASE("trace violation is flagged") {
        DensityMatrix rho{0.97 * projector(1, 1, 2), true};
        auto r = validate_density(rho, 1e-8);
        CHECK_FALSE(r.trace_ok);
        CHECK(r.hermitian_ok);
        CHECK(r.positive_ok);
        CHECK(r.trace_deviation == doctest::Approx(0.03));
    }
    SUBCASE("negative eigenvalue is flagged") {
        Matrix m = Matrix::Zero(2, 2);
        m(0, 0) = 1.1;
        m(1, 1) = -0.1;
        auto r = validate_density({m, true}, 1e-8);
        CHECK_FALSE(r.positive_ok);
        CHECK(r.min_eigenvalue == doctest::Approx(-0.1));
    }
    SUBCASE("unnormalized conditional states may carry trace above one") {
        DensityMatrix cond{2.0 * projector(0, 0, 4), false};
        CHECK(validate_density(cond, 1e-8).ok());
    }
}

TEST_CASE("symmetrize reports the defect before repair") {
    Matrix m = projector(0, 1, 2);  // maximally non-Hermitian
    double defect = symmetrize(m);
    CHECK(defect == 1.0);
    CHECK(herm_defect(m) == 0.0);
    CHECK(m(0, 1) == Complex{0.5, 0.0});
}
