#include "kolmo/geometry.hpp"

#include "doctest.h"
#include "json.hpp"
#include "kolmo/io.hpp"
#include "kolmo/rng.hpp"
#include "support/identities.hpp"
#include "support/util.hpp"

using kolmo::KineticPoint;
using kolmo::SystemSpec;
using testid::dilation_images;
using testid::group_images;
using testid::laplace_v;
using testid::random_poly;
using testid::transport_apply;
using testpoly::Poly;

namespace {

KineticPoint display_point(const SystemSpec& spec, std::initializer_list<double> coords,
                           double t) {
  Eigen::VectorXd x(static_cast<int>(coords.size()));
  int k = 0;
  for (double v : coords) x(k++) = v;
  return KineticPoint::from_display(spec, x, t);
}

}  // namespace

TEST_CASE("spec validation rejects malformed input") {
  CHECK_THROWS_AS(SystemSpec::validated(1, 1.0, {1, 2}, {Eigen::MatrixXd::Ones(2, 1)}, 2.0),
                  kolmo::InvalidSpecError);  // increasing dims
  CHECK_THROWS_AS(SystemSpec::validated(1, 0.0, {1, 1}, {Eigen::MatrixXd::Ones(1, 1)}, 2.0),
                  kolmo::InvalidSpecError);  // beta out of range
  CHECK_THROWS_AS(SystemSpec::validated(1, 1.0, {2, 2},
                                        {(Eigen::MatrixXd(2, 2) << 1, 1, 1, 1).finished()}, 3.0),
                  kolmo::InvalidSpecError);  // rank-deficient block
  CHECK_THROWS_AS(SystemSpec::validated(1, 1.0, {1, 1}, {5.0 * Eigen::MatrixXd::Ones(1, 1)}, 2.0),
                  kolmo::InvalidSpecError);  // |B| > lambda
  CHECK_NOTHROW(SystemSpec::kolmogorov(3, 2));
}

TEST_CASE("assemble_B matches the block pattern") {
  const SystemSpec k1 = SystemSpec::kolmogorov(1, 1);
  Eigen::MatrixXd b = kolmo::assemble_B(k1);
  CHECK(b(0, 0) == 0.0);
  CHECK(b(0, 1) == 1.0);
  CHECK(b(1, 0) == 0.0);
  CHECK(b(1, 1) == 0.0);

  const SystemSpec k2 = SystemSpec::kolmogorov(2, 1);
  Eigen::MatrixXd b2 = kolmo::assemble_B(k2);
  Eigen::MatrixXd shift = Eigen::MatrixXd::Zero(3, 3);
  shift(0, 1) = 1.0;
  shift(1, 2) = 1.0;
  CHECK((b2 - shift).norm() == 0.0);
}

TEST_CASE("assembled B is nilpotent of index kappa+1") {
  kolmo::rng::Stream stream(7);
  for (int trial = 0; trial < 5; ++trial) {
    const SystemSpec spec = testutil::random_spec(3, {3, 2, 2, 1}, stream);
    Eigen::MatrixXd b = kolmo::assemble_B(spec);
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(spec.total_dim(), spec.total_dim());
    for (int m = 0; m <= spec.kappa; ++m) p = p * b;
    CHECK(p.norm() == 0.0);
  }
}

TEST_CASE("composed_block products") {
  kolmo::rng::Stream stream(3);
  const SystemSpec spec = testutil::random_spec(3, {3, 3, 2, 1}, stream);
  CHECK((kolmo::composed_block(spec, 2, 2) - spec.blocks[1]).norm() == 0.0);
  CHECK((kolmo::composed_block(spec, 3, 1) -
         kolmo::composed_block(spec, 3, 2) * spec.blocks[0])
            .norm() < 1e-14);

  const SystemSpec twos =
      SystemSpec::validated(2, 1.0, {1, 1, 1},
                            {2.0 * Eigen::MatrixXd::Ones(1, 1), 2.0 * Eigen::MatrixXd::Ones(1, 1)},
                            4.0);
  CHECK(kolmo::composed_block(twos, 2, 1)(0, 0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK_THROWS_AS(kolmo::composed_block(spec, 1, 2), kolmo::InvalidParametersError);
}

TEST_CASE("exp_tB is the terminating series") {
  const SystemSpec spec = SystemSpec::kolmogorov(1, 1);
  Eigen::MatrixXd e6 = kolmo::exp_tB(spec, 6.0);
  // Hand oracle: B^2 = 0, so exp(6B) = I + 6B.
  CHECK(e6(0, 0) == 1.0);
  CHECK(e6(0, 1) == 6.0);
  CHECK(e6(1, 0) == 0.0);
  CHECK(e6(1, 1) == 1.0);

  CHECK(kolmo::exp_tB(spec, 0.0).isIdentity(0.0));

  kolmo::rng::Stream stream(11);
  const SystemSpec spec3 = testutil::random_spec(2, {2, 2, 1}, stream);
  Eigen::MatrixXd lhs = kolmo::exp_tB(spec3, 1.3) * kolmo::exp_tB(spec3, -0.4);
  Eigen::MatrixXd rhs = kolmo::exp_tB(spec3, 0.9);
  CHECK((lhs - rhs).norm() < 1e-13);
}

TEST_CASE("group law worked example and axioms") {
  const SystemSpec spec = SystemSpec::kolmogorov(1, 1);
  // Display tuples (x1, x0, t): exp(6B)(1,2) = (13,2), so compose = (17,7,9).
  const KineticPoint zt = display_point(spec, {1.0, 2.0}, 3.0);
  const KineticPoint z = display_point(spec, {4.0, 5.0}, 6.0);
  const KineticPoint w = kolmo::group_compose(spec, zt, z);
  CHECK(w.layers[1](0) == doctest::Approx(17.0).epsilon(1e-15));
  CHECK(w.layers[0](0) == doctest::Approx(7.0).epsilon(1e-15));
  CHECK(w.t == doctest::Approx(9.0).epsilon(1e-15));

  const KineticPoint origin = KineticPoint::origin(spec);
  const KineticPoint left = kolmo::group_compose(spec, origin, z);
  CHECK((left.control_vector() - z.control_vector()).norm() == 0.0);
  const KineticPoint right = kolmo::group_compose(spec, z, origin);
  CHECK((right.control_vector() - z.control_vector()).norm() == 0.0);

  const KineticPoint zi = kolmo::group_inverse(spec, z);
  const KineticPoint prod = kolmo::group_compose(spec, z, zi);
  CHECK(prod.control_vector().norm() < 1e-14);
  CHECK(prod.t == 0.0);
  const KineticPoint prod2 = kolmo::group_compose(spec, zi, z);
  CHECK(prod2.control_vector().norm() < 1e-14);

  const KineticPoint zii = kolmo::group_inverse(spec, zi);
  CHECK((zii.control_vector() - z.control_vector()).norm() < 1e-14);
  CHECK(zii.t == z.t);

  const KineticPoint oi = kolmo::group_inverse(spec, origin);
  CHECK(oi.control_vector().norm() == 0.0);
  CHECK(oi.t == 0.0);
}

TEST_CASE("group associativity to 1e-12 on random triples") {
  kolmo::rng::Stream stream(23);
  for (const auto& dims : {std::vector<int>{1, 1}, std::vector<int>{2, 2, 1}}) {
    const int kappa = static_cast<int>(dims.size()) - 1;
    const SystemSpec spec = testutil::random_spec(kappa, dims, stream);
    for (int trial = 0; trial < 50; ++trial) {
      const KineticPoint a = testutil::random_point(spec, stream);
      const KineticPoint b = testutil::random_point(spec, stream);
      const KineticPoint c = testutil::random_point(spec, stream);
      const KineticPoint lhs =
          kolmo::group_compose(spec, kolmo::group_compose(spec, a, b), c);
      const KineticPoint rhs =
          kolmo::group_compose(spec, a, kolmo::group_compose(spec, b, c));
      CHECK((lhs.control_vector() - rhs.control_vector()).lpNorm<Eigen::Infinity>() < 1e-12);
      CHECK(std::abs(lhs.t - rhs.t) < 1e-12);
    }
  }
}

TEST_CASE("dilation exponents and semigroup") {
  const SystemSpec spec = SystemSpec::kolmogorov(1, 1);
  const KineticPoint z = display_point(spec, {1.0, 1.0}, 1.0);
  const KineticPoint d = kolmo::dilate(spec, 2.0, z);
  CHECK(d.layers[1](0) == doctest::Approx(8.0).epsilon(1e-15));
  CHECK(d.layers[0](0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(d.t == doctest::Approx(4.0).epsilon(1e-15));

  const KineticPoint same = kolmo::dilate(spec, 1.0, z);
  CHECK((same.control_vector() - z.control_vector()).norm() == 0.0);

  kolmo::rng::Stream stream(5);
  const SystemSpec fr = testutil::random_spec(2, {2, 1, 1}, stream, 0.5);
  const KineticPoint p = testutil::random_point(fr, stream);
  const KineticPoint ab = kolmo::dilate(fr, 1.7, kolmo::dilate(fr, 0.6, p));
  const KineticPoint once = kolmo::dilate(fr, 1.7 * 0.6, p);
  CHECK((ab.control_vector() - once.control_vector()).lpNorm<Eigen::Infinity>() < 1e-14);
  CHECK(std::abs(ab.t - once.t) < 1e-14);

  CHECK_THROWS_AS(kolmo::dilate(spec, 0.0, z), kolmo::InvalidParametersError);
}

TEST_CASE("cylinder membership and sampling") {
  const SystemSpec spec = SystemSpec::kolmogorov(1, 1);
  const kolmo::Cylinder q1 = kolmo::Cylinder::unit(spec);

  KineticPoint center = KineticPoint::origin(spec);
  center.t = -0.5;
  CHECK(kolmo::cylinder_contains(spec, q1, center));

  KineticPoint late = KineticPoint::origin(spec);
  late.t = q1.t_hi + 0.1;
  CHECK(!kolmo::cylinder_contains(spec, q1, late));

  SUBCASE("samples land inside, template cylinder") {
    const auto pts = kolmo::cylinder_sample(spec, q1, 10000, 42);
    int inside = 0;
    for (const auto& z : pts) inside += kolmo::cylinder_contains(spec, q1, z) ? 1 : 0;
    CHECK(inside == 10000);
  }

  SUBCASE("samples land inside, translated dilated cylinder") {
    kolmo::rng::Stream stream(9);
    const SystemSpec spec2 = testutil::random_spec(2, {2, 1, 1}, stream);
    KineticPoint c = testutil::random_point(spec2, stream);
    const kolmo::Cylinder q = kolmo::Cylinder::at(spec2, c, 1.5);
    const auto pts = kolmo::cylinder_sample(spec2, q, 2000, 7);
    int inside = 0;
    for (const auto& z : pts) inside += kolmo::cylinder_contains(spec2, q, z) ? 1 : 0;
    CHECK(inside == 2000);
    CHECK(q.kind == kolmo::CylinderKind::Translated);
  }

  SUBCASE("deterministic per seed") {
    const auto a = kolmo::cylinder_sample(spec, q1, 5, 1234);
    const auto b = kolmo::cylinder_sample(spec, q1, 5, 1234);
    for (int k = 0; k < 5; ++k)
      CHECK((a[static_cast<std::size_t>(k)].control_vector() -
             b[static_cast<std::size_t>(k)].control_vector())
                .norm() == 0.0);
  }
}

TEST_CASE("three-cylinder layout windows") {
  const SystemSpec spec = SystemSpec::kolmogorov(1, 1);
  const kolmo::CylinderTriple triple = kolmo::three_cylinder_layout(spec);
  CHECK(triple.future.t_lo == doctest::Approx(-1.0));
  CHECK(triple.future.t_hi == doctest::Approx(0.0));
  CHECK(triple.middle.t_lo == doctest::Approx(-3.0));
  CHECK(triple.middle.t_hi == doctest::Approx(-2.0));
  CHECK(triple.past.t_lo == doctest::Approx(-5.0));
  CHECK(triple.past.t_hi == doctest::Approx(-4.0));
}

TEST_CASE("transport invariance under the group action") {
  kolmo::rng::Stream stream(31);
  for (const auto& dims : {std::vector<int>{1, 1}, std::vector<int>{2, 1, 1}}) {
    const int kappa = static_cast<int>(dims.size()) - 1;
    const SystemSpec spec = testutil::random_spec(kappa, dims, stream);
    const int nv = spec.total_dim() + 1;
    for (int trial = 0; trial < 3; ++trial) {
      const Poly f = random_poly(nv, 3, stream);
      const KineticPoint zt = testutil::random_point(spec, stream);
      const auto images = group_images(spec, zt);
      // (Tf)(zt o z) vs T[f(zt o .)](z), coefficient-wise.
      const Poly lhs = transport_apply(spec, f).subst(images);
      const Poly rhs = transport_apply(spec, f.subst(images));
      CHECK(testpoly::max_coeff_diff(lhs, rhs) < 1e-8);
    }
  }
}

TEST_CASE("scaling identity of the principal operator, beta = 1") {
  kolmo::rng::Stream stream(37);
  for (const auto& dims : {std::vector<int>{1, 1}, std::vector<int>{2, 2, 2}}) {
    const int kappa = static_cast<int>(dims.size()) - 1;
    const SystemSpec spec = SystemSpec::kolmogorov(kappa, dims[0]);
    const int nv = spec.total_dim() + 1;
    for (double r : {0.5, 2.0}) {
      const Poly f = random_poly(nv, 3, stream);
      const auto dil = dilation_images(spec, r);
      const Poly composed = f.subst(dil);
      const Poly lhs = transport_apply(spec, composed) + laplace_v(spec, composed);
      const Poly rhs =
          (transport_apply(spec, f) + laplace_v(spec, f)).subst(dil) * (r * r);
      CHECK(testpoly::max_coeff_diff(lhs, rhs) < 1e-10);
    }
  }
}

TEST_CASE("spec JSON round trip is bit exact") {
  const double third = 1.0 / 3.0;
  const SystemSpec spec = SystemSpec::validated(
      2, 1.0, {2, 1, 1},
      {(Eigen::MatrixXd(1, 2) << third, std::sqrt(2.0)).finished(),
       (Eigen::MatrixXd(1, 1) << 0.1234567890123456789).finished()},
      3.75);
  const nlohmann::json j = kolmo::spec_to_json(spec);
  const std::string text = j.dump();
  const SystemSpec back = kolmo::spec_from_json(nlohmann::json::parse(text));
  CHECK(back.kappa == spec.kappa);
  CHECK(back.beta == spec.beta);
  CHECK(back.lambda == spec.lambda);
  for (int i = 0; i < spec.kappa; ++i)
    CHECK((back.blocks[static_cast<std::size_t>(i)] - spec.blocks[static_cast<std::size_t>(i)])
              .lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("point JSON round trip") {
  const SystemSpec spec = SystemSpec::kolmogorov(1, 2);
  kolmo::rng::Stream stream(41);
  const KineticPoint z = testutil::random_point(spec, stream);
  const KineticPoint back = kolmo::point_from_json(spec, kolmo::point_to_json(z));
  CHECK((back.control_vector() - z.control_vector()).norm() == 0.0);
  CHECK(back.t == z.t);
}
