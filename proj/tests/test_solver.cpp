#include <gtest/gtest.h>

#include "ehl/solver.hpp"
#include "ehl/study.hpp"

using namespace ehl;

namespace {

Problem manufactured(const ManufacturedCase& mc, int p, double eps_p = 0.0) {
  return case_problem(mc, Mesh::build(mc.domain, p), StudyOptions{}, eps_p);
}

}  // namespace

TEST(Solver, LinearProblemOneNewtonStep) {
  const Problem pb = manufactured(smooth_1d(CoefficientMode::constant, 16), 2);
  const SolveReport r = solve_with_force_balance(pb, DgField(pb.space), 0.0, SolveConfig{});
  ASSERT_TRUE(r.converged) << r.message;
  EXPECT_LE(r.newton_iterations, 1);
  const DgField zero(pb.space);
  const LinearSystem sys = assemble_picard(pb, zero, film_values(pb, zero.coefficients));
  const Eigen::VectorXd direct = sys.matrix.solve(sys.rhs);
  EXPECT_LT((direct - r.pressure.coefficients).lpNorm<Eigen::Infinity>(), 1e-10 * direct.lpNorm<Eigen::Infinity>());
}

TEST(Solver, PicardAndNewtonAgreeOnNonlinearCase) {
  const Problem pb = manufactured(smooth_1d(CoefficientMode::nonlinear, 16), 2);
  SolveConfig a;
  SolveConfig b;
  b.method = InnerMethod::picard;
  SolveConfig c;
  c.method = InnerMethod::hybrid;
  const SolveReport ra = solve_with_force_balance(pb, DgField(pb.space), 0.0, a);
  const SolveReport rb = solve_with_force_balance(pb, DgField(pb.space), 0.0, b);
  const SolveReport rc = solve_with_force_balance(pb, DgField(pb.space), 0.0, c);
  ASSERT_TRUE(ra.converged && rb.converged && rc.converged);
  EXPECT_GT(rb.picard_iterations, 1);
  EXPECT_LT((ra.pressure.coefficients - rb.pressure.coefficients).lpNorm<Eigen::Infinity>(), 1e-8);
  EXPECT_LT((ra.pressure.coefficients - rc.pressure.coefficients).lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(Solver, ObstacleNegativePartBoundedByPenalty) {
  const ManufacturedCase mc = obstacle_1d(64);
  for (double eps : {1e-3, 1e-5}) {
    const Problem pb = manufactured(mc, 1, eps);
    const SolveReport r = solve_with_force_balance(pb, DgField(pb.space), 0.0, SolveConfig{});
    ASSERT_TRUE(r.converged) << r.message;
    EXPECT_GE(r.min_u, -10.0 * eps * 1.0);
    EXPECT_LT(r.min_u, 0.0);
  }
}

TEST(Solver, WarmRestartIsImmediate) {
  const Problem pb = manufactured(smooth_1d(CoefficientMode::nonlinear, 8), 1);
  const SolveReport first = solve_with_force_balance(pb, DgField(pb.space), 0.0, SolveConfig{});
  ASSERT_TRUE(first.converged);
  const SolveReport again = solve_with_force_balance(pb, first.pressure, 0.0, SolveConfig{});
  ASSERT_TRUE(again.converged);
  EXPECT_LE(again.newton_iterations, 1);
  EXPECT_LT((again.pressure.coefficients - first.pressure.coefficients).lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(Solver, Deterministic) {
  const Problem pb = manufactured(smooth_2d(CoefficientMode::nonlinear, 4), 1);
  const SolveReport a = solve_with_force_balance(pb, DgField(pb.space), 0.0, SolveConfig{});
  const SolveReport b = solve_with_force_balance(pb, DgField(pb.space), 0.0, SolveConfig{});
  ASSERT_TRUE(a.converged);
  EXPECT_EQ(a.pressure.coefficients, b.pressure.coefficients);
  EXPECT_EQ(a.newton_iterations, b.newton_iterations);
}

TEST(Solver, ConfigValidation) {
  SolveConfig c;
  EXPECT_NO_THROW(c.validate());
  c.damping = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SolveConfig{};
  c.tol_residual = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SolveConfig{};
  c.max_newton = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Solver, NonFiniteStartRejected) {
  Problem pb = manufactured(smooth_1d(), 1);
  DgField u(pb.space);
  u.coefficients[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(solve_inner(pb, u, SolveConfig{}), SolverError);
}

TEST(Solver, CollapsedFilmReportsFailure) {
  const SpacePtr s = make_space(Mesh::build(default_contact_domain(ContactKind::line, 16), 1));
  const DeformationKernel k = build_kernel(s, ContactKind::line);
  const PhysicalInputs in = paper_defaults();
  const Lubricant lub = Lubricant::from(derive(in, ContactKind::line), in, LubricantOptions{});
  Problem pb;
  pb.space = s;
  pb.coefficient = [lub](double u, double h, const Point& x) { return lub.epsilon_star(u, h, x); };
  pb.density = [lub](double u) { return lub.density_value(u); };
  pb.kernel = &k;
  pb.h00 = -10.0;  // film negative everywhere
  DgField u(s);
  InnerResult r;
  EXPECT_NO_THROW(r = solve_inner(pb, u, SolveConfig{}));
  EXPECT_FALSE(r.converged);
  EXPECT_FALSE(r.message.empty());
}

TEST(Solver, SmallLineContactBalancesLoad) {
  ContactSetup s = contact_defaults(ContactKind::line, 64, 1);
  s.inputs.U = 1e-10;  // lighter speed parameter
  const ContactRun run = solve_contact(s);
  ASSERT_TRUE(run.report.converged) << run.report.message;
  EXPECT_NEAR(integral(run.report.pressure), force_target(ContactKind::line), 1e-6);
  EXPECT_GE(run.report.min_u, -1e-3);
}
