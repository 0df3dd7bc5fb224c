#include <doctest.h>

#include <rotflow/fundamental.hpp>

#include <cmath>
#include <vector>

using namespace rotflow;

namespace {

QuadratureBudget tight() {
  QuadratureBudget b;
  b.abs_tol = 1e-9;
  return b;
}

}  // namespace

// ============================================================
// Domain errors
// ============================================================

TEST_CASE("rejects a = 0 and diagonal evaluation") {
  CHECK_THROWS_AS(fundamental_solution(0.0, {1.0, 0.0}, {0.0, 0.0}), std::domain_error);
  CHECK_THROWS_AS(fundamental_solution(1.0, {1.0, 0.5}, {1.0, 0.5}), std::domain_error);
  CHECK_THROWS_AS(fundamental_solution_gradient(0.0, {1.0, 0.0}, {0.0, 0.0}),
                  std::domain_error);
}

// ============================================================
// Reference values (frozen from a 30-digit arbitrary-precision
// reimplementation: per-period quadrature plus Richardson summation
// of the period series)
// ============================================================

TEST_CASE("matches frozen reference values") {
  struct Case {
    double a;
    Vec2 x, y;
    Mat2 ref;
  };
  const std::vector<Case> cases = {
      {1.0, {2.0, 0.0}, {0.0, 0.5},
       {2.1855303259482225e-02, 2.3768927692991617e-02,
        -2.8840407947696466e-02, -2.2323758406828196e-02}},
      {1.0, {0.3, -0.4}, {-1.0, 2.0},
       {-3.2563740286385673e-02, -3.0169917008886995e-04,
        -2.3966523778459858e-02, 9.2073414004406014e-03}},
      {4.0, {1.0, 1.0}, {-0.5, 0.25},
       {9.8178840082903804e-04, 3.9772858837147814e-02,
        -4.8990446556401919e-03, -1.7683266128632723e-02}},
      {0.25, {6.0, 0.0}, {0.5, -0.5},
       {3.2505957336593329e-03, 2.0972694991551632e-02,
        1.9690381083671202e-02, -8.6519510409521609e-03}},
      {1.0, {3.0, 4.0}, {3.5, 3.0},
       {1.6744180912227096e-02, -5.7328508283984691e-02,
        -4.5821831390412204e-02, 2.9706007797340021e-02}},
  };
  for (const auto& c : cases) {
    auto res = fundamental_solution(c.a, c.x, c.y, 1e-9);
    CHECK(res.converged);
    CHECK(abs_max(res.value - c.ref) < 5e-8);
  }
}

// ============================================================
// Structural identities
// ============================================================

TEST_CASE("adjoint identity couples transposition with reversed rotation") {
  // Swapping the two arguments and transposing lands on the solution for
  // the opposite rotation rate: Gamma_a(x, y)^T = Gamma_{-a}(y, x).
  struct Triple {
    double a;
    Vec2 x, y;
  };
  const std::vector<Triple> triples = {
      {1.0, {2.0, 0.0}, {0.0, 0.5}},
      {0.5, {-1.2, 0.7}, {0.4, 1.8}},
      {4.0, {1.0, 1.0}, {-0.5, 0.25}},
  };
  for (const auto& tr : triples) {
    auto fwd = fundamental_solution(tr.a, tr.x, tr.y, 1e-9);
    auto swp = fundamental_solution(-tr.a, tr.y, tr.x, 1e-9);
    CHECK(fwd.converged);
    CHECK(swp.converged);
    CHECK(abs_max(transpose(fwd.value) - swp.value) < 4e-9);
  }
}

TEST_CASE("rotation covariance") {
  const double a = 1.0;
  const Vec2 x{1.4, -0.3}, y{0.2, 0.9};
  for (double phi : {0.6, 2.1}) {
    const Mat2 rot = rotation(phi);
    auto lhs = fundamental_solution(a, rot * x, rot * y, 1e-9);
    auto rhs = fundamental_solution(a, x, y, 1e-9);
    CHECK(lhs.converged);
    CHECK(rhs.converged);
    CHECK(abs_max(lhs.value - rot * rhs.value * transpose(rot)) < 4e-9);
  }
}

TEST_CASE("gradient matches finite differences of the solution") {
  const double a = 1.0;
  const Vec2 x{2.0, 0.0}, y{0.3, 0.6};
  const double h = 1e-4;
  auto grad = fundamental_solution_gradient(a, x, y, 1e-10);
  CHECK(grad.converged);
  auto plus1 = fundamental_solution(a, x, {y.e1 + h, y.e2}, 1e-11);
  auto minus1 = fundamental_solution(a, x, {y.e1 - h, y.e2}, 1e-11);
  auto plus2 = fundamental_solution(a, x, {y.e1, y.e2 + h}, 1e-11);
  auto minus2 = fundamental_solution(a, x, {y.e1, y.e2 - h}, 1e-11);
  const Mat2 fd1 = (1.0 / (2.0 * h)) * (plus1.value - minus1.value);
  const Mat2 fd2 = (1.0 / (2.0 * h)) * (plus2.value - minus2.value);
  CHECK(abs_max(grad.value.d1 - fd1) < 5e-7);
  CHECK(abs_max(grad.value.d2 - fd2) < 5e-7);
}

TEST_CASE("error estimates are honest at loose tolerance") {
  const double a = 0.25;
  const Vec2 x{4.0, 1.0}, y{0.5, -0.5};
  auto loose = fundamental_solution(a, x, y, 1e-5, tight());
  auto fine = fundamental_solution(a, x, y, 1e-10, tight());
  CHECK(loose.converged);
  CHECK(abs_max(loose.value - fine.value) <= 10.0 * std::max(loose.error_estimate, 1e-12));
  CHECK(loose.evaluations <= fine.evaluations);
}
