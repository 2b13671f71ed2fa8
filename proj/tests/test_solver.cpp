#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "phasegn/solver.hpp"

using namespace phasegn;

namespace {

struct Instance {
  SensingEnsemble e;
  Signal z;
  Observations y;
};

Instance make(Index m, Index n, Field signal, std::uint64_t seed,
              double sigma = 0.0) {
  auto e = sample_ensemble(m, n, Field::Complex, seed);
  auto z = sample_signal(n, signal, seed);
  auto y = observe(e, z, sigma, seed);
  return {std::move(e), std::move(z), std::move(y)};
}

// Small integer ensemble for exact brute-force comparisons.
SensingEnsemble integer_ensemble(Index m, Index n) {
  SensingEnsemble e{ComplexMatrix(m, n), Field::Complex, 0, 0};
  for (Index j = 0; j < m; ++j)
    for (Index k = 0; k < n; ++k)
      e.a(j, k) = Complex(static_cast<double>((j + 2 * k) % 5) - 2.0,
                          static_cast<double>((3 * j + k) % 4) - 1.5);
  return e;
}

double rel_diff(const RealMatrix& a, const RealMatrix& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

ComplexVector sharp(const ComplexVector& v) {
  ComplexVector out(2 * v.size());
  out << v, v.conjugate();
  return out;
}

}  // namespace

TEST(Objective, ZeroAtTruthAndNonnegative) {
  const auto inst = make(100, 6, Field::Real, 1);
  EXPECT_LE(objective(inst.e, inst.y, inst.z), 1e-20 * inst.y.y.squaredNorm());
  oracle::Rng rng(2);
  for (int t = 0; t < 10; ++t) {
    EXPECT_GE(objective(inst.e, inst.y, Signal::complex(rng.complex_vector(6))), 0.0);
  }
}

TEST(Objective, HandEvaluationOneByTwo) {
  // Rows a_1^* = (1 + 2i), a_2^* = (-0.5); x = 3; y = (40, 1).
  SensingEnsemble e{ComplexMatrix(2, 1), Field::Complex, 0, 0};
  e.a(0, 0) = Complex(1.0, 2.0);
  e.a(1, 0) = Complex(-0.5, 0.0);
  Observations y{RealVector(2), 0.0, 0};
  y.y << 40.0, 1.0;
  RealVector x(1);
  x << 3.0;
  // |(1+2i) 3|^2 = 45, |-1.5|^2 = 2.25; f = ((5)^2 + (1.25)^2) / 4.
  const double expected = (25.0 + 1.5625) / 4.0;
  EXPECT_NEAR(objective(e, y, Signal::real(x)), expected, 1e-15 * expected);
}

TEST(Objective, CompensatedPathMatchesBruteForce) {
  const auto inst = make(120000, 2, Field::Complex, 3, 0.3);
  oracle::Rng rng(3);
  const ComplexVector x = rng.complex_vector(2);
  long double s = 0.0L;
  for (Index j = 0; j < inst.e.m(); ++j) {
    const long double p = std::norm(inst.e.a(j, 0) * x(0) + inst.e.a(j, 1) * x(1));
    const long double f = p - inst.y.y(j);
    s += f * f;
  }
  const double ref = static_cast<double>(s / (2.0L * inst.e.m()));
  EXPECT_NEAR(objective(inst.e, inst.y, Signal::complex(x)), ref, 1e-12 * ref);
}

TEST(Objective, MatchesOracleForRealAndComplexIterates) {
  const auto inst = make(30, 4, Field::Real, 5, 0.1);
  oracle::Rng rng(5);
  const RealVector xr = rng.real_vector(4);
  const ComplexVector xc = rng.complex_vector(4);
  const double fr = oracle::objective_real(inst.e, inst.y.y, xr);
  const double fc = oracle::objective_complex(inst.e, inst.y.y, xc);
  EXPECT_NEAR(objective(inst.e, inst.y, Signal::real(xr)), fr, 1e-13 * fr);
  EXPECT_NEAR(objective(inst.e, inst.y, Signal::complex(xc)), fc, 1e-13 * fc);
}

TEST(NormalMatrix, SymmetricPsd) {
  const auto inst = make(50, 6, Field::Real, 2);
  oracle::Rng rng(2);
  const RealMatrix m = gn_normal_matrix(inst.e, Signal::real(rng.real_vector(6)));
  EXPECT_EQ((m - m.transpose()).norm(), 0.0);
  EXPECT_GE(oracle::jacobi(m).values.back(), -1e-10);
}

TEST(NormalMatrix, IntegerExampleMatchesTermByTerm) {
  const auto e = integer_ensemble(3, 2);
  RealVector x(2);
  x << 1.0, -2.0;
  const RealMatrix ref = oracle::normal_matrix(e, x);
  EXPECT_LT(rel_diff(gn_normal_matrix(e, Signal::real(x)), ref), 1e-14);
}

TEST(NormalMatrix, RandomMatchesTermByTerm) {
  for (Index n : {1, 2, 8}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto inst = make(5 * n + 3, n, Field::Real, seed);
      oracle::Rng rng(static_cast<unsigned>(seed));
      const RealVector x = rng.real_vector(n);
      EXPECT_LT(rel_diff(gn_normal_matrix(inst.e, Signal::real(x)),
                         oracle::normal_matrix(inst.e, x)),
                1e-14)
          << "n=" << n;
    }
  }
}

TEST(NormalMatrix, RealEnsembleDropsImaginaryTerms) {
  const auto e = sample_ensemble(20, 3, Field::Real, 4);
  RealVector x(3);
  x << 0.3, -1.0, 2.0;
  EXPECT_LT(rel_diff(gn_normal_matrix(e, Signal::real(x)), oracle::normal_matrix(e, x)),
            1e-14);
}

TEST(NormalMatrix, MonteCarloExpectation) {
  // E(J^T J) = 2|x|^2 I + 6 x x^T; error relative to its norm 8|x|^2.
  const Index n = 4;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto e = sample_ensemble(800 * n, n, Field::Complex, seed);
    oracle::Rng rng(static_cast<unsigned>(seed));
    const RealVector x = rng.real_vector(n);
    const double xsq = x.squaredNorm();
    const RealMatrix expected =
        2.0 * xsq * RealMatrix::Identity(n, n) + 6.0 * x * x.transpose();
    const double err =
        oracle::sym_norm(gn_normal_matrix(e, Signal::real(x)) - expected);
    EXPECT_LT(err, 0.1 * 8.0 * xsq) << "seed " << seed;
  }
}

TEST(NormalMatrix, RejectsComplexIterate) {
  const auto inst = make(10, 2, Field::Complex, 1);
  EXPECT_THROW(gn_normal_matrix(inst.e, inst.z), FieldMismatch);
}

TEST(Gradient, ZeroAtTruth) {
  const auto inst = make(80, 5, Field::Real, 3);
  const double scale = std::pow(inst.z.norm(), 3);
  EXPECT_LT(gn_gradient(inst.e, inst.y, inst.z).norm(), 1e-12 * scale);
}

TEST(Gradient, MatchesTermByTerm) {
  for (Index n : {1, 2, 8}) {
    const auto inst = make(6 * n, n, Field::Real, 7, 0.2);
    oracle::Rng rng(7);
    const RealVector x = rng.real_vector(n);
    const RealVector ref = oracle::gradient(inst.e, inst.y.y, x);
    EXPECT_LT((gn_gradient(inst.e, inst.y, Signal::real(x)) - ref).norm(),
              1e-14 * ref.norm())
        << "n=" << n;
    // Same formula at 2x with y fixed.
    const RealVector ref2 = oracle::gradient(inst.e, inst.y.y, 2.0 * x);
    EXPECT_LT((gn_gradient(inst.e, inst.y, Signal::real(2.0 * x)) - ref2).norm(),
              1e-14 * ref2.norm());
  }
}

TEST(Gradient, MatchesFiniteDifferences) {
  const auto inst = make(40, 8, Field::Real, 9, 0.1);
  oracle::Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    const RealVector x = rng.real_vector(8);
    const auto f = [&](const RealVector& v) {
      return objective(inst.e, inst.y, Signal::real(v));
    };
    const RealVector fd = oracle::finite_difference(f, x, 1e-5 * x.norm());
    const RealVector g = gn_gradient(inst.e, inst.y, Signal::real(x));
    EXPECT_LT((g - fd).norm(), 1e-6 * g.norm());
  }
}

TEST(RealStep, FixedPointAtTruth) {
  const auto inst = make(100, 6, Field::Real, 4);
  const auto step = gn_step_real(inst.e, inst.y, inst.z);
  EXPECT_LT((step.next.values() - inst.z.values()).norm(), 1e-12 * inst.z.norm());
  const auto neg = gn_step_real(inst.e, inst.y, inst.z.scaled(-1.0));
  EXPECT_LT(dist(neg.next, inst.z), 1e-12 * inst.z.norm());
}

TEST(RealStep, SolvesTheNormalEquations) {
  const auto inst = make(90, 7, Field::Real, 5);
  oracle::Rng rng(5);
  const Signal x = Signal::real(inst.z.real_part() + 0.3 * rng.real_vector(7));
  const auto step = gn_step_real(inst.e, inst.y, x);
  const RealMatrix m = oracle::normal_matrix(inst.e, x.real_part());
  const RealVector g = oracle::gradient(inst.e, inst.y.y, x.real_part());
  EXPECT_LE((m * step.direction + g).norm(), 1e-8 * g.norm());
  EXPECT_FALSE(step.regularized);
}

TEST(RealStep, QuadraticContraction) {
  const Index n = 32;
  const auto m = static_cast<Index>(std::ceil(8.0 * n * std::log(static_cast<double>(n))));
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto e = sample_ensemble(m, n, Field::Complex, seed);
    const Signal raw = sample_signal(n, Field::Real, seed);
    const Signal z = raw.scaled(1.0 / raw.norm());
    const auto y = observe(e, z, 0.0, 0);
    oracle::Rng rng(static_cast<unsigned>(seed));
    RealVector d = rng.real_vector(n);
    const Signal x = Signal::real(z.real_part() + 0.05 * d / d.norm());
    const double d0 = dist(x, z);
    const double d1 = dist(gn_step_real(e, y, x).next, z);
    if (d1 < 20.0 * d0 * d0) ++hits;
  }
  EXPECT_GE(hits, 45);
}

TEST(RealStep, Errors) {
  const auto inst = make(10, 2, Field::Real, 1);
  const Signal c = Signal::complex(ComplexVector::Ones(2));
  EXPECT_THROW(gn_step_real(inst.e, inst.y, c), FieldMismatch);
  EXPECT_THROW(gn_step_real(inst.e, inst.y, Signal::real(RealVector::Zero(2))),
               SingularSystem);
}

TEST(ComplexStep, FixedPointAtTruthAndItsOrbit) {
  const auto inst = make(60, 5, Field::Complex, 2);
  for (double phi : {0.0, 0.4, 2.5}) {
    const Signal x = inst.z.scaled(std::polar(1.0, phi));
    const auto step = gn_step_complex(inst.e, inst.y, x);
    EXPECT_LT((step.next.values() - x.values()).norm(), 1e-10 * inst.z.norm());
  }
}

TEST(ComplexStep, ConjugatePairIdentity) {
  const auto inst = make(60, 5, Field::Complex, 3, 0.05);
  oracle::Rng rng(3);
  for (int t = 0; t < 10; ++t) {
    const Signal x = Signal::complex(inst.z.values() + 0.3 * rng.complex_vector(5));
    const auto step = gn_step_complex(inst.e, inst.y, x);
    const ComplexVector& u = step.correction;
    EXPECT_LT((u.tail(5) - u.head(5).conjugate()).norm(), 1e-8 * u.norm());
    EXPECT_EQ(step.rank, 9);
  }
}

TEST(ComplexStep, SolutionFamilyAndMinimality) {
  const auto inst = make(50, 4, Field::Complex, 4, 0.05);
  oracle::Rng rng(4);
  const Signal x = Signal::complex(inst.z.values() + 0.2 * rng.complex_vector(4));
  const auto sys = complex_step_system(inst.e, inst.y, x);
  const auto step = gn_step_complex(inst.e, inst.y, x);
  // u = [xhat; conj(xhat)] minimizes |A_k u + F|.
  const ComplexVector xhat = step.correction.head(4);
  const ComplexVector f = sys.residual.cast<Complex>();
  const double base = (sys.jacobian * sharp(xhat) + f).norm();
  for (double c0 : {0.5, -1.3}) {
    const ComplexVector shifted = xhat + Complex(0.0, c0) * x.values();
    EXPECT_NEAR((sys.jacobian * sharp(shifted) + f).norm(), base, 1e-9);
    EXPECT_LE(xhat.norm(), shifted.norm());
  }
  // The family direction is in the kernel of A_k.
  EXPECT_LT((sys.jacobian * sharp(Complex(0.0, 1.0) * x.values())).norm(),
            1e-10 * sys.jacobian.norm() * x.norm());
}

TEST(ComplexStep, MinimalAgainstRandomKernelShifts) {
  const auto inst = make(40, 4, Field::Complex, 6, 0.05);
  oracle::Rng rng(6);
  const Signal x = Signal::complex(inst.z.values() + 0.2 * rng.complex_vector(4));
  const auto step = gn_step_complex(inst.e, inst.y, x);
  const double un = step.correction.head(4).norm();
  for (int t = 0; t < 100; ++t) {
    const double c = rng.uniform(-3.0, 3.0);
    EXPECT_LE(un, (step.correction.head(4) + Complex(0.0, c) * x.values()).norm());
  }
}

TEST(ComplexStep, PhaseEquivariance) {
  const auto inst = make(60, 5, Field::Complex, 8);
  oracle::Rng rng(8);
  const Signal x = Signal::complex(inst.z.values() + 0.3 * rng.complex_vector(5));
  const double d = dist(gn_step_complex(inst.e, inst.y, x).next, inst.z);
  for (double phi : {0.3, 1.7, -2.2}) {
    const auto rotated = gn_step_complex(inst.e, inst.y, x.scaled(std::polar(1.0, phi)));
    EXPECT_NEAR(dist(rotated.next, inst.z), d, 1e-8);
  }
}

TEST(ComplexStep, SystemRowsMatchDefinition) {
  const auto inst = make(6, 3, Field::Complex, 9);
  oracle::Rng rng(9);
  const Signal x = Signal::complex(rng.complex_vector(3));
  const auto sys = complex_step_system(inst.e, inst.y, x);
  for (Index j = 0; j < 6; ++j) {
    // a_j = conj(row j); first block x^* a_j a_j^*, second x^T conj(a_j) a_j^T.
    Complex xa = 0.0;  // x^* a_j
    for (Index k = 0; k < 3; ++k) xa += std::conj(x.values()(k)) * std::conj(inst.e.a(j, k));
    for (Index k = 0; k < 3; ++k) {
      EXPECT_NEAR(std::abs(sys.jacobian(j, k) - xa * inst.e.a(j, k)), 0.0, 1e-12);
      EXPECT_NEAR(std::abs(sys.jacobian(j, 3 + k) - std::conj(xa) * std::conj(inst.e.a(j, k))),
                  0.0, 1e-12);
    }
    EXPECT_NEAR(sys.residual(j), std::norm(xa) - inst.y.y(j), 1e-12);
  }
}

TEST(ComplexStep, Errors) {
  const auto inst = make(10, 2, Field::Complex, 1);
  EXPECT_THROW(gn_step_complex(inst.e, inst.y, Signal::complex(ComplexVector::Zero(2))),
               DegenerateInstance);
  EXPECT_THROW(gn_step_complex(inst.e, inst.y, Signal::real(RealVector::Ones(2))),
               FieldMismatch);
}

TEST(SolveGn, ReachesThresholdFastFromAlgorithmOneStart) {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto inst = make(5 * 128, 128, Field::Real, seed);
    InitConfig ic;
    ic.signal_field = Field::Real;
    ic.power_seed = seed;
    const auto x0 = init_exp_spectral(inst.e, inst.y, ic).x0;
    const auto trace = solve_gn(inst.e, inst.y, x0, inst.z, GNConfig{});
    const auto hit = trace.first_below(1e-5);
    if (hit && *hit <= 10) ++hits;
  }
  EXPECT_GE(hits, 45);
}

TEST(SolveGn, StartAtTruthStopsImmediately) {
  const auto inst = make(100, 8, Field::Real, 2);
  const auto trace = solve_gn(inst.e, inst.y, inst.z, inst.z, GNConfig{});
  EXPECT_LE(trace.steps(), 1);
  EXPECT_EQ(trace.rel_errors.back(), 0.0);
  EXPECT_EQ(trace.status, SolveStatus::Converged);
}

TEST(SolveGn, DeterministicTraces) {
  const auto inst = make(200, 10, Field::Real, 3);
  const Signal x0 = Signal::real(inst.z.real_part() * 0.8);
  const auto a = solve_gn(inst.e, inst.y, x0, inst.z, GNConfig{});
  const auto b = solve_gn(inst.e, inst.y, x0, inst.z, GNConfig{});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a.iterates[k].values(), b.iterates[k].values());
    EXPECT_EQ(a.rel_errors[k], b.rel_errors[k]);
    EXPECT_EQ(a.residuals[k], b.residuals[k]);
  }
}

TEST(SolveGn, TraceLengthsAreConsistent) {
  const auto inst = make(200, 10, Field::Real, 3);
  GNConfig cfg;
  cfg.max_iters = 3;
  cfg.rel_err_tol = 1e-300;
  const auto t = solve_gn(inst.e, inst.y, Signal::real(inst.z.real_part() * 0.5),
                          inst.z, cfg);
  EXPECT_EQ(t.size(), 4u);
  EXPECT_EQ(t.rel_errors.size(), 4u);
  EXPECT_EQ(t.residuals.size(), 4u);
  EXPECT_EQ(t.wall_times.size(), 4u);
  EXPECT_EQ(t.flags.size(), 4u);
  EXPECT_EQ(t.rows_used.size(), 3u);
  EXPECT_TRUE(std::is_sorted(t.wall_times.begin(), t.wall_times.end()));
  for (double r : t.residuals) EXPECT_TRUE(std::isfinite(r));
  EXPECT_EQ(t.status, SolveStatus::MaxIterations);
}

TEST(SolveGn, StepFailureIsRecordedNotThrown) {
  const auto inst = make(30, 3, Field::Real, 1);
  const auto t = solve_gn(inst.e, inst.y, Signal::real(RealVector::Zero(3)),
                          inst.z, GNConfig{});
  EXPECT_EQ(t.status, SolveStatus::StepFailed);
  EXPECT_TRUE(t.flags.back() & kFlagStepFailed);
  EXPECT_FALSE(t.message.empty());
}

TEST(SolveGn, ResidualProxyWithoutTruth) {
  const auto inst = make(300, 10, Field::Real, 6);
  const Signal x0 = Signal::real(inst.z.real_part() * 0.9);
  const auto t = solve_gn(inst.e, inst.y, x0, std::nullopt, GNConfig{});
  EXPECT_EQ(t.status, SolveStatus::Converged);
  EXPECT_LT(t.rel_errors.back(), 1e-12);
  EXPECT_LT(dist(t.last(), inst.z), 1e-9 * inst.z.norm());
  const double proxy0 = std::sqrt(2.0 * objective(inst.e, inst.y, x0)) / inst.y.y.norm();
  EXPECT_DOUBLE_EQ(t.rel_errors.front(), proxy0);
}

TEST(SolveGn, ComplexModelConverges) {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = make(8 * 16, 16, Field::Complex, seed);
    InitConfig ic;
    ic.power_seed = seed;
    const auto x0 = init_exp_spectral(inst.e, inst.y, ic).x0;
    const auto t = solve_gn(inst.e, inst.y, x0, inst.z, GNConfig{});
    if (t.status == SolveStatus::Converged) ++hits;
    for (unsigned f : t.flags) EXPECT_FALSE(f & kFlagRankDeficient);
  }
  EXPECT_GE(hits, 8);
}

TEST(SolveGn, RejectsFieldMismatches) {
  const auto inst = make(30, 3, Field::Real, 1);
  EXPECT_THROW(solve_gn(inst.e, inst.y, inst.z,
                        Signal::complex(inst.z.values()), GNConfig{}),
               FieldMismatch);
}

TEST(TraceCsv, HeaderAndRows) {
  const auto inst = make(100, 5, Field::Real, 1);
  const auto t = solve_gn(inst.e, inst.y, Signal::real(inst.z.real_part() * 0.9),
                          inst.z, GNConfig{});
  std::ostringstream out;
  write_trace_csv(out, t);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "iter,rel_err,residual,wall_ms,flags");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(line.rfind(std::to_string(rows) + ",", 0), 0u);
    ++rows;
  }
  EXPECT_EQ(rows, t.size());
  EXPECT_EQ(flags_to_string(kFlagRegularized | kFlagDiverged), "regularized|diverged");
}

TEST(Resample, StepCountRule) {
  EXPECT_EQ(resample_steps(1e-2, 3.0), 9);
  EXPECT_EQ(resample_steps(1e-3, 3.0), 10);
  EXPECT_EQ(resample_steps(0.49, 3.0), 1);
  EXPECT_EQ(resample_steps(0.3, 3.0), 3);
  EXPECT_THROW(resample_steps(0.5, 3.0), ConfigError);
  EXPECT_THROW(resample_steps(0.0, 3.0), ConfigError);
  EXPECT_THROW(resample_steps(1e-3, 0.0), ConfigError);
}

TEST(Resample, BlockAudit) {
  const Index n = 16;
  const int steps = resample_steps(1e-3, 3.0);
  const Index blocks = steps + 1;
  const Index m = 10 * n * blocks + 7;  // leftover rows must go unused
  const auto inst = make(m, n, Field::Real, 5);
  const auto t = solve_gn_resampled(inst.e, inst.y, 1e-3, inst.z, GNConfig{});
  ASSERT_EQ(t.size(), static_cast<std::size_t>(blocks));
  ASSERT_EQ(t.rows_used.size(), static_cast<std::size_t>(steps));
  const Index rows = m / blocks;
  std::set<Index> seen;
  for (int k = 0; k < steps; ++k) {
    const RowRange r = t.rows_used[static_cast<std::size_t>(k)];
    EXPECT_EQ(r.first, (k + 1) * rows);
    EXPECT_EQ(r.count, rows);
    for (Index i = r.first; i < r.first + r.count; ++i) {
      EXPECT_TRUE(seen.insert(i).second);
      EXPECT_GE(i, rows);  // block 0 belongs to the initializer
      EXPECT_LT(i, blocks * rows);
    }
  }
}

TEST(Resample, Converges) {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Index n = 32;
    const auto inst = make(10 * n * 11, n, Field::Real, seed);
    const auto t = solve_gn_resampled(inst.e, inst.y, 1e-3, inst.z, GNConfig{});
    if (dist(t.last(), inst.z) < 1e-3) ++hits;
  }
  EXPECT_GE(hits, 8);
}

TEST(Resample, Errors) {
  const auto small = make(50, 8, Field::Real, 1);
  EXPECT_THROW(solve_gn_resampled(small.e, small.y, 1e-3, small.z, GNConfig{}),
               ConfigError);
  const auto cplx = make(2000, 4, Field::Complex, 1);
  EXPECT_THROW(solve_gn_resampled(cplx.e, cplx.y, 1e-3, cplx.z, GNConfig{}),
               FieldMismatch);
}
