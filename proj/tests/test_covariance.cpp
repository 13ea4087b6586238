#include <doctest.h>

#include <random>
#include <sstream>

#include "cvqkd/covariance.hpp"
#include "cvqkd/csv.hpp"
#include "cvqkd/spectrum.hpp"
#include "test_helpers.hpp"

using namespace cvqkd;

TEST_CASE("epr_cm matches the two-mode squeezed form") {
  SUBCASE("V = 1 is a vacuum pair") {
    const auto g = epr_cm(1.0);
    CHECK((g.entries() - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("V = 2 has blocks 2 I and sqrt(3) sigma_z") {
    const auto g = epr_cm(2.0, "a", "b");
    const double c = std::sqrt(3.0);
    CHECK(g.var(0, Quadrature::X) == doctest::Approx(2.0));
    CHECK(g.var(1, Quadrature::P) == doctest::Approx(2.0));
    CHECK(g.cov(0, Quadrature::X, 1, Quadrature::X) == doctest::Approx(c));
    CHECK(g.cov(0, Quadrature::P, 1, Quadrature::P) == doctest::Approx(-c));
    CHECK(g.cov(0, Quadrature::X, 1, Quadrature::P) == 0.0);
    CHECK(g.mode("b") == 1);
  }
  SUBCASE("below vacuum variance is rejected") {
    CHECK_THROWS_AS(epr_cm(0.5), DomainError);
  }
  SUBCASE("EPR pairs are pure") {
    const auto spec = symplectic_spectrum_generic(epr_cm(5.0));
    CHECK(spec.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(spec.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("beam_splitter") {
  SUBCASE("T = 1 is the identity") {
    const auto s = beam_splitter(1.0, 0, 1, 2);
    CHECK((s.entries() - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("balanced splitter matches the heterodyne coupler") {
    const auto s = beam_splitter(0.5, 0, 1, 2);
    const double h = std::sqrt(0.5);
    Eigen::MatrixXd expected(4, 4);
    expected << h, 0, h, 0,
                0, h, 0, h,
               -h, 0, h, 0,
                0, -h, 0, h;
    CHECK((s.entries() - expected).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("invalid arguments") {
    CHECK_THROWS_AS(beam_splitter(1.5, 0, 1, 2), DomainError);
    CHECK_THROWS_AS(beam_splitter(-0.1, 0, 1, 2), DomainError);
    CHECK_THROWS_AS(beam_splitter(0.5, 0, 0, 2), DomainError);
    CHECK_THROWS_AS(beam_splitter(0.5, 0, 2, 2), IndexError);
  }
  SUBCASE("symplectic for generic T") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
      const auto s = beam_splitter(unit(rng), 0, 2, 3);
      const auto omega = symplectic_form(3);
      CHECK((s.entries() * omega * s.entries().transpose() - omega).cwiseAbs().maxCoeff() <
            1e-12);
    }
  }
}

TEST_CASE("cnot_gate") {
  SUBCASE("k = 0 is the identity") {
    const auto s = cnot_gate(0.0, 1, 0, 2);
    CHECK((s.entries() - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("vector action at k = 2") {
    // (x_t, p_t, x_c, p_c) = (5, 1, 3, 2) -> (-1, 1, 3, 4)
    const auto s = cnot_gate(2.0, 1, 0, 2);
    Eigen::Vector4d v(5.0, 1.0, 3.0, 2.0);
    const Eigen::Vector4d out = s.entries() * v;
    CHECK(out(0) == doctest::Approx(-1.0));
    CHECK(out(1) == doctest::Approx(1.0));
    CHECK(out(2) == doctest::Approx(3.0));
    CHECK(out(3) == doctest::Approx(4.0));
  }
  SUBCASE("symplectic for several gains") {
    for (const double k : {-3.0, 0.7, 10.0}) {
      const auto s = cnot_gate(k, 0, 2, 3);
      const auto omega = symplectic_form(3);
      CHECK((s.entries() * omega * s.entries().transpose() - omega).cwiseAbs().maxCoeff() <
            1e-12);
    }
  }
  SUBCASE("mode collision is rejected") {
    CHECK_THROWS_AS(cnot_gate(1.0, 1, 1, 2), DomainError);
  }
}

TEST_CASE("apply preserves the symplectic spectrum") {
  std::mt19937_64 rng(11);
  const auto gamma = testing::random_physical_cm(4, rng);
  const auto before = symplectic_spectrum_generic(gamma);

  SUBCASE("identity leaves the state unchanged") {
    const auto out = apply(SymplecticTransform::identity(4), gamma);
    CHECK((out.entries() - gamma.entries()).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("random transforms") {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto state = gamma;
    for (int g = 0; g < 6; ++g) {
      state = apply(beam_splitter(unit(rng), g % 4, (g + 1) % 4, 4), state);
      state = apply(cnot_gate(2.0 * unit(rng) - 1.0, (g + 2) % 4, g % 4, 4), state);
    }
    const auto after = symplectic_spectrum_generic(state);
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(after.eigenvalues[i] == doctest::Approx(before.eigenvalues[i]).epsilon(1e-10));
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(apply(SymplecticTransform::identity(3), gamma), DimensionError);
  }
}

TEST_CASE("direct_sum, reorder, reduce") {
  SUBCASE("two vacua give the 4x4 identity") {
    const auto g = direct_sum(vacuum_cm("a"), vacuum_cm("b"));
    CHECK((g.entries() - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("reducing an EPR pair leaves a thermal mode") {
    const double v = 3.0;
    const std::size_t keep[] = {0};
    const auto g = reduce(epr_cm(v), keep);
    CHECK(g.n_modes() == 1);
    CHECK((g.entries() - v * Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("identity permutation is a no-op") {
    std::mt19937_64 rng(3);
    const auto gamma = testing::random_physical_cm(3, rng);
    const std::size_t order[] = {0, 1, 2};
    CHECK((reorder(gamma, order).entries() - gamma.entries()).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("reorder permutes labels and blocks together") {
    const auto g = direct_sum(thermal_cm(2.0, "hot"), vacuum_cm("cold"));
    const std::size_t order[] = {1, 0};
    const auto swapped = reorder(g, order);
    CHECK(swapped.labels()[0] == "cold");
    CHECK(swapped.var(1, Quadrature::X) == doctest::Approx(2.0));
  }
  SUBCASE("spectrum of a direct sum is the union of spectra") {
    std::mt19937_64 rng(5);
    std::vector<double> la, lb;
    const auto a = testing::random_physical_cm(2, rng, 4.0, &la);
    const auto b = testing::random_physical_cm(2, rng, 4.0, &lb);
    auto all = la;
    all.insert(all.end(), lb.begin(), lb.end());
    std::sort(all.begin(), all.end(), std::greater<>());
    const auto spec = symplectic_spectrum_generic(direct_sum(a, b));
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(spec.eigenvalues[i] == doctest::Approx(all[i]).epsilon(1e-9));
  }
  SUBCASE("bad indices") {
    const auto g = direct_sum(vacuum_cm("a"), vacuum_cm("b"));
    const std::size_t dup[] = {0, 0};
    CHECK_THROWS_AS(reduce(g, dup), IndexError);
    const std::size_t bad[] = {0, 3};
    CHECK_THROWS_AS(reduce(g, bad), IndexError);
    const std::size_t not_perm[] = {1, 1};
    CHECK_THROWS_AS(reorder(g, not_perm), IndexError);
  }
}

TEST_CASE("condition_on_homodyne") {
  SUBCASE("product states are untouched") {
    const auto g = direct_sum(epr_cm(2.0, "a", "b"), thermal_cm(3.0, "t"));
    const auto cond = condition_on_homodyne(g, "t", Quadrature::X);
    CHECK((cond.entries() - epr_cm(2.0).entries()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(cond.labels()[0] == "a");
    CHECK_FALSE(cond.has_mode("t"));
  }
  SUBCASE("EPR conditioning gives diag(1/V, V)") {
    const double v = 4.0;
    const auto cond = condition_on_homodyne(epr_cm(v), 1, Quadrature::X);
    CHECK(cond.var(0, Quadrature::X) == doctest::Approx(1.0 / v).epsilon(1e-12));
    CHECK(cond.var(0, Quadrature::P) == doctest::Approx(v).epsilon(1e-12));
  }
  SUBCASE("x-then-p conditioning on two modes commutes") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
      const auto gamma = testing::random_pure_cm(4, rng);
      const auto ab = condition_on_homodyne(condition_on_homodyne(gamma, "q3", Quadrature::X),
                                            "q2", Quadrature::P);
      const auto ba = condition_on_homodyne(condition_on_homodyne(gamma, "q2", Quadrature::P),
                                            "q3", Quadrature::X);
      CHECK((ab.entries() - ba.entries()).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
  SUBCASE("never increases a retained variance") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 10; ++trial) {
      const auto gamma = testing::random_physical_cm(4, rng);
      const auto cond = condition_on_homodyne(gamma, 0, Quadrature::P);
      for (Eigen::Index i = 0; i < cond.entries().rows(); ++i)
        CHECK(cond.entries()(i, i) <= gamma.entries()(i + 2, i + 2) + 1e-12);
    }
  }
  SUBCASE("zero-variance direction skips the update") {
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(4, 4);
    g(0, 0) = 1e-16;  // numerically dark measured direction
    const auto cond =
        condition_on_homodyne(CovarianceMatrix(g, {"s", "v"}), "s", Quadrature::X);
    CHECK((cond.entries() - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("measured mode must exist") {
    CHECK_THROWS_AS(condition_on_homodyne(epr_cm(2.0), 5, Quadrature::X), IndexError);
  }
  SUBCASE("over-correlated input yields an unphysical conditional") {
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(4, 4);
    g(0, 2) = g(2, 0) = 0.9;  // beyond any EPR correlation at unit variance
    CHECK_THROWS_AS(condition_on_homodyne(CovarianceMatrix(g, {"a", "b"}), 1, Quadrature::X),
                    PhysicalityError);
  }
}

TEST_CASE("debug CSV serialization") {
  const auto g = epr_cm(2.0, "A", "B");
  std::stringstream out;
  write_cm_csv(out, g);
  std::string header;
  REQUIRE(std::getline(out, header));
  CHECK(header == "x_A,p_A,x_B,p_B");
  std::string row;
  REQUIRE(std::getline(out, row));
  const auto fields = split_csv_line(row);
  REQUIRE(fields.size() == 4);
  // full 17-significant-digit precision round-trips exactly
  CHECK(std::stod(fields[2]) == std::sqrt(3.0));
  CHECK(std::stod(fields[0]) == 2.0);
}

TEST_CASE("symplectic transform validation") {
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(4, 4);
  bad(0, 0) = 2.0;
  CHECK_THROWS_AS(SymplecticTransform{bad}, DomainError);
  CHECK_THROWS_AS(SymplecticTransform{Eigen::MatrixXd::Identity(3, 3)}, DimensionError);
}
