#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "wtsid/dynamics.hpp"
#include "wtsid/scenario.hpp"
#include "wtsid/signals.hpp"

using namespace wtsid;

namespace {

constexpr double kPi = std::numbers::pi;

ArrayModel twin_pair() {
  ArrayModel twin;
  TurbineParams p;
  twin.turbines.push_back({p, make_twin_truth(TwinKind::Freestream)});
  twin.turbines.push_back({p, make_twin_truth(TwinKind::Waked)});
  return twin;
}

InputSeries constant_inputs(double u, std::vector<double> rv, std::size_t n, double f_s = 20.0) {
  InputSeries in;
  in.f_s = f_s;
  in.u1.assign(n, u);
  for (double r : rv) in.R_vs.push_back(std::vector<double>(n, r));
  return in;
}

}  // namespace

TEST_CASE("gen_torque elementary identities") {
  TurbineParams p;
  CHECK(gen_torque(0.0, 2.0, p) == 0.0);

  TurbineParams unit = p;
  unit.k_tau = unit.k_omega = 1.0;
  unit.R_tot = 1.0;
  CHECK(gen_torque(10.0, 1.0, unit) == doctest::Approx(5.0));

  const double tau1 = gen_torque(300.0, 1.5, p);
  TurbineParams doubled = p;
  doubled.R_tot = 2.0 * (p.R_tot + 1.5) - 1.5;  // doubles R_tot + R_v
  CHECK(gen_torque(300.0, 1.5, doubled) == doctest::Approx(0.5 * tau1));

  TurbineParams shorted = p;
  shorted.R_tot = 0.0;
  CHECK_THROWS(gen_torque(10.0, 0.0, shorted));
  CHECK_THROWS(gen_torque(10.0, -1.0, p));
}

TEST_CASE("aero_torque matches the direct arithmetic oracle") {
  TurbineParams p;
  CHECK(aero_torque(400.0, 8.0, 0.0, p) == 0.0);
  CHECK(aero_torque(400.0, 0.0, 0.4, p) == 0.0);
  // 0.5 * 1.2 * pi * 0.075^2 * 0.4 * 8^3 / 400
  const double expected = 0.5 * 1.2 * kPi * 0.075 * 0.075 * 0.4 * 512.0 / 400.0;
  CHECK(aero_torque(400.0, 8.0, 0.4, p) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(5.4287e-3).epsilon(1e-4));
}

TEST_CASE("rhs vanishes at a constructed equilibrium and chains turbines") {
  const ArrayModel twin = twin_pair();
  const TurbineParams& p = twin.turbines[0].params;
  const double u = 8.0;

  // Upstream: pick lambda, solve for the load that balances the torques.
  const double lam1 = 5.0;
  const double rv1 = equilibrium_resistance(twin.turbines[0].cp, p, u, p.reynolds(u), lam1);
  const double lam2 = 4.6;
  const double rv2 = equilibrium_resistance(twin.turbines[1].cp, p, u, lam1, lam2);

  ArrayState state;
  state.omegas = {lam1 * u / p.R, lam2 * u / p.R};
  const std::vector<double> rv{rv1, rv2};
  const std::vector<double> dw = rhs(state, u, rv, twin);
  CHECK(std::abs(dw[0]) < 1e-9 * std::abs(state.omegas[0]));
  CHECK(std::abs(dw[1]) < 1e-9 * std::abs(state.omegas[1]));

  // Two-turbine evaluation matches hand-chained scalar oracles.
  ArrayState off;
  off.omegas = {420.0, 380.0};
  const std::vector<double> dw_off = rhs(off, u, rv, twin);
  const double l1 = off.omegas[0] * p.R / u;
  const double cp1 = cp_eval(twin.turbines[0].cp, l1, p.reynolds(u));
  const double expect1 =
      (aero_torque(off.omegas[0], u, cp1, p) - gen_torque(off.omegas[0], rv1, p)) / p.J;
  CHECK(dw_off[0] == doctest::Approx(expect1).epsilon(1e-14));
  const double l2 = off.omegas[1] * p.R / u;
  const double cp2 = cp_eval(twin.turbines[1].cp, l2, l1);
  const double expect2 =
      (aero_torque(off.omegas[1], u, cp2, p) - gen_torque(off.omegas[1], rv2, p)) / p.J;
  CHECK(dw_off[1] == doctest::Approx(expect2).epsilon(1e-14));

  // A single-turbine array reduces to the scalar equation.
  ArrayModel solo;
  solo.turbines.push_back(twin.turbines[0]);
  ArrayState s1;
  s1.omegas = {off.omegas[0]};
  CHECK(rhs(s1, u, std::vector<double>{rv1}, solo)[0] == doctest::Approx(expect1).epsilon(1e-14));
}

TEST_CASE("steady-state power identity at equilibrium") {
  const ArrayModel twin = twin_pair();
  const TurbineParams& p = twin.turbines[0].params;
  for (double lam : {4.0, 5.0, 6.5}) {
    for (double u : {6.0, 8.0, 9.5}) {
      const double cp_model = cp_eval(twin.turbines[0].cp, lam, p.reynolds(u));
      const double rv = equilibrium_resistance(twin.turbines[0].cp, p, u, p.reynolds(u), lam);
      const double omega = lam * u / p.R;
      const double tau_g = gen_torque(omega, rv, p);
      const double cp_back = 2.0 * tau_g * omega / (p.rho * kPi * p.R * p.R * u * u * u);
      CHECK(cp_back == doctest::Approx(cp_model).epsilon(1e-10));
    }
  }
}

TEST_CASE("df_domega agrees with finite differences and closed forms") {
  const ArrayModel twin = twin_pair();
  const TurbineParams& p = twin.turbines[0].params;
  const double u = 7.5;
  const std::vector<double> rv{1.7, 2.9};

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> omega_dist(350.0, 750.0);
  for (int trial = 0; trial < 25; ++trial) {
    ArrayState state;
    state.omegas = {omega_dist(rng), omega_dist(rng)};
    const ArrayJacobian jac = df_domega(state, u, rv, twin);
    CHECK(jac.upstream[0] == 0.0);

    for (std::size_t i = 0; i < 2; ++i) {
      const double h = 1e-4 * state.omegas[i];
      ArrayState up = state, dn = state;
      up.omegas[i] += h;
      dn.omegas[i] -= h;
      const double fd_own = (rhs(up, u, rv, twin)[i] - rhs(dn, u, rv, twin)[i]) / (2.0 * h);
      CHECK(jac.own[i] == doctest::Approx(fd_own).epsilon(1e-4));
      if (i == 1) {
        ArrayState upu = state, dnu = state;
        upu.omegas[0] += h;
        dnu.omegas[0] -= h;
        const double fd_cross =
            (rhs(upu, u, rv, twin)[1] - rhs(dnu, u, rv, twin)[1]) / (2.0 * h);
        CHECK(jac.upstream[1] == doctest::Approx(fd_cross).epsilon(1e-4));
      }
    }
  }

  // Constant-Cp, fixed-R_v closed form: a single bump has zero lambda
  // gradient exactly at its center.
  BasisConfig single;
  single.centers = {5.0};
  single.aux_kind = AuxKind::Reynolds;
  CpSurrogate flat;
  flat.config = single;
  flat.weights = Eigen::MatrixXd::Zero(1, 3);
  flat.weights(0, 0) = 0.4;
  ArrayModel solo;
  solo.turbines.push_back({p, flat});
  ArrayState st;
  const double u0 = 8.0;
  st.omegas = {5.0 * u0 / p.R};  // lambda exactly at the center
  const ArrayJacobian jac = df_domega(st, u0, std::vector<double>{2.0}, solo);
  const double cp = 0.4;
  const double expected = (-0.5 * p.rho * kPi * p.R * p.R * cp * u0 * u0 * u0 /
                               (st.omegas[0] * st.omegas[0]) -
                           p.k_tau * p.k_omega / (p.R_tot + 2.0)) /
                          p.J;
  CHECK(jac.own[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("integrate preserves equilibria and decays without wind") {
  const ArrayModel twin = twin_pair();
  const TurbineParams& p = twin.turbines[0].params;
  const double u = 8.0;
  const double lam1 = 5.2, lam2 = 4.4;
  const double rv1 = equilibrium_resistance(twin.turbines[0].cp, p, u, p.reynolds(u), lam1);
  const double rv2 = equilibrium_resistance(twin.turbines[1].cp, p, u, lam1, lam2);

  const InputSeries inputs = constant_inputs(u, {rv1, rv2}, 201);
  const std::vector<double> omega0{lam1 * u / p.R, lam2 * u / p.R};
  const Trajectory traj = integrate(twin, omega0, inputs, 10);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t k = 0; k < traj.samples(); ++k) {
      CHECK(std::abs(traj.omegas[i][k] - omega0[i]) < 1e-10 * omega0[i]);
    }
  }

  // Wind effectively off: braking torque only, monotone decay to the floor.
  const InputSeries becalmed = constant_inputs(1e-3, {0.5, 0.5}, 401);
  const Trajectory decay = integrate(twin, omega0, becalmed, 10);
  for (std::size_t k = 0; k + 1 < decay.samples(); ++k) {
    CHECK(decay.omegas[0][k + 1] <= decay.omegas[0][k] + 1e-12);
  }
  CHECK(decay.omegas[0].back() == doctest::Approx(kOmegaFloor).epsilon(0.05));
}

TEST_CASE("RK4 shows fourth-order convergence on a smooth transient") {
  const ArrayModel twin = twin_pair();
  const TurbineParams& p = twin.turbines[0].params;
  const double u = 8.0;
  const double rv = 2.0;
  // Start well off equilibrium so the transient is active.
  const std::vector<double> omega0{4.0 * u / p.R, 3.8 * u / p.R};
  const InputSeries inputs = constant_inputs(u, {rv, rv}, 41);

  const Trajectory ref = integrate(twin, omega0, inputs, 320);
  auto terminal_error = [&](int substeps) {
    const Trajectory t = integrate(twin, omega0, inputs, substeps);
    return std::abs(t.omegas[0].back() - ref.omegas[0].back());
  };
  const double e1 = terminal_error(2);
  const double e2 = terminal_error(4);
  const double e3 = terminal_error(8);
  const double order12 = std::log2(e1 / e2);
  const double order23 = std::log2(e2 / e3);
  CHECK(order12 > 3.8);
  CHECK(order12 < 4.2);
  CHECK(order23 > 3.6);
  CHECK(order23 < 4.4);

  // Halving the step at already-fine resolution barely moves the answer.
  const Trajectory a = integrate(twin, omega0, inputs, 10);
  const Trajectory b = integrate(twin, omega0, inputs, 20);
  CHECK(std::abs(a.omegas[0].back() - b.omegas[0].back()) < 1e-6 * b.omegas[0].back());
}

TEST_CASE("monotone wake response around the upstream optimum") {
  const ArrayModel twin = twin_pair();
  const TurbineParams& p = twin.turbines[0].params;
  const double u = 8.0;
  const double rv2 = 3.0;

  auto downstream_terminal = [&](double lam1) {
    const double rv1 = equilibrium_resistance(twin.turbines[0].cp, p, u, p.reynolds(u), lam1);
    const InputSeries inputs = constant_inputs(u, {rv1, rv2}, 401);  // 20 s to settle
    const std::vector<double> omega0{lam1 * u / p.R, 4.5 * u / p.R};
    return integrate(twin, omega0, inputs, 10).omegas[1].back();
  };
  // Raising the upstream tip-speed ratio toward its optimum deepens the wake.
  const double w_low = downstream_terminal(4.0);
  const double w_opt = downstream_terminal(5.0);
  CHECK(w_opt < w_low);
}

TEST_CASE("integrate validates inputs") {
  const ArrayModel twin = twin_pair();
  const std::vector<double> omega0{500.0, 450.0};
  InputSeries inputs = constant_inputs(8.0, {2.0, 2.0}, 11);
  CHECK_THROWS(integrate(twin, omega0, inputs, 0));
  inputs.R_vs.pop_back();
  CHECK_THROWS(integrate(twin, omega0, inputs, 10));
  const InputSeries too_short = constant_inputs(8.0, {2.0, 2.0}, 1);
  CHECK_THROWS(integrate(twin, omega0, too_short, 10));
}

TEST_CASE("array model validation enforces the auxiliary ordering") {
  ArrayModel wrong;
  TurbineParams p;
  wrong.turbines.push_back({p, make_twin_truth(TwinKind::Waked)});
  CHECK_THROWS(wrong.validate());
  wrong.turbines.clear();
  wrong.turbines.push_back({p, make_twin_truth(TwinKind::Freestream)});
  wrong.turbines.push_back({p, make_twin_truth(TwinKind::Freestream)});
  CHECK_THROWS(wrong.validate());
}

TEST_CASE("trajectory CSV round-trips through its own reader") {
  const ArrayModel twin = twin_pair();
  const TurbineParams& p = twin.turbines[0].params;
  const InputSeries inputs = constant_inputs(8.0, {2.0, 3.0}, 21);
  const std::vector<double> omega0{5.0 * 8.0 / p.R, 4.5 * 8.0 / p.R};
  const Trajectory traj = integrate(twin, omega0, inputs, 10);

  const auto path = std::filesystem::temp_directory_path() / "wtsid_traj_roundtrip.csv";
  write_trajectory_csv(traj, path);
  const Trajectory back = read_trajectory_csv(path);
  REQUIRE(back.omegas.size() == 2);
  REQUIRE(back.samples() == traj.samples());
  for (std::size_t k = 0; k < traj.samples(); ++k) {
    CHECK(back.omegas[0][k] == doctest::Approx(traj.omegas[0][k]).epsilon(1e-11));
    CHECK(back.lambdas[1][k] == doctest::Approx(traj.lambdas[1][k]).epsilon(1e-11));
  }
  std::filesystem::remove(path);
}
