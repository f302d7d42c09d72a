#include <doctest.h>

#include <cmath>

#include "les/io.hpp"
#include "les/operators.hpp"
#include "les/pipeline.hpp"
#include "les/projection.hpp"
#include "support.hpp"

using namespace les;

namespace {

// Small configuration that runs in well under a second per DNS.
ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.fine_n = 32;
  cfg.coarse_n = {8, 16};
  cfg.train_coarse_n = 16;
  cfg.ensemble_coarse_n = 8;
  cfg.kf_coarse_n = 8;
  cfg.kappa_max = 4;
  cfg.dt = 1e-2;
  cfg.coarse_multiplier = 2;
  cfg.snapshot_stride = 4;
  cfg.t_train = 0.2;
  cfg.n_sims = 2;
  cfg.nu = 1e-2;
  return cfg;
}

// Reference for the planted-Cs check: the data are themselves SMAG-LES runs.
std::vector<SnapshotDataset> smagorinsky_data(const Grid& g, double cs, double dt, int steps_between,
                                              int n_snapshots, double nu) {
  std::vector<SnapshotDataset> out;
  for (std::uint64_t seed : {3u, 4u}) {
    SimConfig sim;
    sim.dt = dt;
    sim.nu = nu;
    sim.n_steps = steps_between * (n_snapshots - 1);
    sim.snapshot_stride = steps_between;
    sim.closure = ClosureModel::smagorinsky(cs);
    const auto traj = simulate(random_initial_condition(g, seed, 5), sim);
    REQUIRE_FALSE(traj.blew_up);
    out.push_back(build_fdns_dataset(traj, {FaceAverageFilter(g, 1)}, {nu, ForcingKind::kNone, seed}).front());
  }
  return out;
}

// Direct transcription of the documented synthesis: per component, ky then
// kx ascending, one (re, im) pair per mode with 0 < |k| < kappa_max.
StaggeredVelocity naive_initial_field(const Grid& g, std::uint64_t seed, int kmax) {
  CounterRng rng(seed);
  StaggeredVelocity out(g);
  for (int comp = 0; comp < 2; ++comp) {
    Lattice& l = comp == 0 ? out.u : out.v;
    for (int ky = -(kmax - 1); ky <= kmax - 1; ++ky) {
      for (int kx = -(kmax - 1); kx <= kmax - 1; ++kx) {
        if (kx * kx + ky * ky == 0 || kx * kx + ky * ky >= kmax * kmax) continue;
        const double re = rng.uniform(-1.0, 1.0);
        const double im = rng.uniform(-1.0, 1.0);
        for (int j = 0; j < g.ny; ++j) {
          for (int i = 0; i < g.nx; ++i) {
            const double x = comp == 0 ? g.x_face(i) : g.x_center(i);
            const double y = comp == 0 ? g.y_center(j) : g.y_face(j);
            const double phase = kx * x + ky * y;
            l(i, j) += re * std::cos(phase) - im * std::sin(phase);
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("random initial condition matches the documented synthesis") {
  for (int n : {32, 64}) {
    const Grid g = Grid::periodic_square(n);
    CAPTURE(n);
    StaggeredVelocity raw = naive_initial_field(g, 17, 10);
    const double e = (dot(raw.u, raw.u) + dot(raw.v, raw.v)) / (2.0 * g.size());
    const double scale = std::sqrt(1.2 / e);
    for (double& x : raw.u.values()) x *= scale;
    for (double& x : raw.v.values()) x *= scale;
    const double e_pre = (dot(raw.u, raw.u) + dot(raw.v, raw.v)) / (2.0 * g.size());
    CHECK(e_pre == doctest::Approx(1.2).epsilon(1e-12));

    const auto u = random_initial_condition(g, 17);
    const auto expected = PoissonSolver(g).project(raw);
    CHECK(testing::max_abs_diff(u, expected) <= 1e-12 * expected.max_abs());
    CHECK(testing::max_abs(divergence(u)) <= 1e-10);

    const Spectrum s = energy_spectrum(u);
    for (std::size_t b = 0; b < s.size(); ++b) {
      if (s.bin_low[b] >= 16.0) CHECK(s.energy[b] <= 1e-20 * s.total());
    }
    CHECK(s.total() <= 1.2 * (1.0 + 1e-12));
  }
}

TEST_CASE("random initial condition is seeded and scales with the target") {
  const Grid g = Grid::periodic_square(32);
  const auto u = random_initial_condition(g, 5, 10, 1.2);
  const auto again = random_initial_condition(g, 5, 10, 1.2);
  CHECK(u.u.values() == again.u.values());
  CHECK(u.v.values() == again.v.values());
  const auto other = random_initial_condition(g, 6, 10, 1.2);
  CHECK(u.u.values() != other.u.values());

  const auto twice = random_initial_condition(g, 5, 10, 2.4);
  const double e1 = dot(u.u, u.u) + dot(u.v, u.v);
  const double e2 = dot(twice.u, twice.u) + dot(twice.v, twice.v);
  CHECK(e2 / e1 == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("random initial condition rejects a band limit above the grid Nyquist") {
  const Grid g = Grid::periodic_square(16);
  CHECK_THROWS_AS(random_initial_condition(g, 1, 8), Error);
  CHECK_NOTHROW(random_initial_condition(g, 1, 7));
}

TEST_CASE("snapshot counting") {
  CHECK(snapshot_aligned_steps(2.0, 2e-3, 10) == 1000);
  CHECK(snapshot_aligned_steps(0.2, 1e-2, 4) == 20);
  CHECK(snapshot_aligned_steps(0.21, 1e-2, 4) == 20);
  CHECK(snapshot_aligned_steps(0.0, 1e-2, 4) == 0);

  const ExperimentConfig cfg = tiny_config();
  const auto data = generate_training_data(cfg);
  REQUIRE(data.coarse_n == std::vector<int>{8, 16});
  REQUIRE(data.sim_seeds.size() == 2);
  CHECK(data.sim_seeds[0] != data.sim_seeds[1]);
  const std::size_t expected = static_cast<std::size_t>(std::floor(cfg.t_train / (cfg.snapshot_stride * cfg.dt) + 1e-9)) + 1;
  for (int n : {8, 16}) {
    const auto& sets = data.at(n);
    REQUIRE(sets.size() == 2);
    for (const auto& d : sets) {
      CHECK(d.grid.nx == n);
      CHECK(d.size() == expected);
      CHECK(d.dt_between == doctest::Approx(cfg.snapshot_stride * cfg.dt));
      for (const auto& s : d.snapshots) CHECK(testing::max_abs(divergence(s)) <= 1e-10);
    }
  }
  CHECK_THROWS_AS(data.at(32), Error);

  ExperimentConfig none = cfg;
  none.n_sims = 0;
  const auto empty = generate_training_data(none);
  for (const auto& sets : empty.sets) CHECK(sets.empty());
}

TEST_CASE("training data generation is deterministic") {
  const ExperimentConfig cfg = tiny_config();
  const auto a = generate_training_data(cfg);
  const auto b = generate_training_data(cfg);
  CHECK(a.fine_fingerprints == b.fine_fingerprints);
  CHECK(a.sim_seeds == b.sim_seeds);
  for (std::size_t r = 0; r < a.sets.size(); ++r) {
    for (std::size_t s = 0; s < a.sets[r].size(); ++s) {
      for (std::size_t k = 0; k < a.sets[r][s].size(); ++k) {
        CHECK(fingerprint(a.sets[r][s].snapshots[k]) == fingerprint(b.sets[r][s].snapshots[k]));
      }
    }
  }
}

TEST_CASE("Smagorinsky candidate grid") {
  const auto c = smagorinsky_candidates(0.0, 0.30, 0.01);
  REQUIRE(c.size() == 31);
  CHECK(c[17] == 0.17);
  CHECK(c.back() == 0.30);
  CHECK(smagorinsky_candidates(0.1, 0.1, 0.01) == std::vector<double>{0.1});
  CHECK_THROWS_AS(smagorinsky_candidates(0.2, 0.1, 0.01), Error);
}

TEST_CASE("calibration recovers a planted Smagorinsky constant") {
  const Grid g = Grid::periodic_square(32);
  const double dt = 1e-2, nu = 1e-3;
  const auto data = smagorinsky_data(g, 0.17, dt, 5, 11, nu);
  const auto candidates = smagorinsky_candidates(0.10, 0.24, 0.01);
  const auto res = calibrate_smagorinsky(data, candidates, 0.5, dt, nu);
  CHECK(res.cs == 0.17);
  REQUIRE(res.errors.size() == candidates.size());
  CHECK(res.errors[7] == 0.0);
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (k != 7) CHECK(res.errors[k] > 0.0);
  }

  const auto single = calibrate_smagorinsky(data, {0.1}, 0.5, dt, nu);
  CHECK(single.cs == 0.1);

  // Equal errors go to the first, smaller, candidate.
  const auto tied = calibrate_smagorinsky(data, {0.16, 0.17, 0.17}, 0.5, dt, nu);
  CHECK(tied.errors[1] == tied.errors[2]);
  CHECK(tied.cs == 0.17);

  CHECK_THROWS_AS(calibrate_smagorinsky(data, candidates, 5.0, dt, nu), Error);
}

TEST_CASE("decaying experiment records outcomes and is deterministic") {
  ExperimentConfig cfg = tiny_config();
  const auto ref = make_reference(cfg, 16, 99, 0.4);
  REQUIRE(ref.fdns.size() == 11);
  CHECK(ref.times.back() == doctest::Approx(0.4));
  const std::vector<NamedModel> models{{"NC", ClosureModel::none()},
                                       {"SMAG", ClosureModel::smagorinsky(0.17)},
                                       {"SKEW", cfg.initial_model(ClosureKind::kSkew, 3)}};
  const auto a = run_decaying_experiment(models, ref, cfg);
  const auto b = run_decaying_experiment(models, ref, cfg);
  REQUIRE(a.models.size() == 3);
  for (const auto& m : a.models) {
    CAPTURE(m.name);
    CHECK_FALSE(m.blew_up);
    CHECK(m.times.size() == 11);
    CHECK(m.error.size() == 11);
    CHECK(m.error.front() == 0.0);
    CHECK(m.steps.size() == 10 * 2 + 1);
    CHECK(b.outcome(m.name).error == m.error);
    CHECK(b.outcome(m.name).energy == m.energy);
  }
  // NC energy is non-increasing.
  const auto& nc = a.outcome("NC");
  for (std::size_t k = 1; k < nc.energy.size(); ++k) CHECK(nc.energy[k] <= nc.energy[k - 1]);
  CHECK_THROWS_AS(a.outcome("CNN"), Error);
}

TEST_CASE("a blow-up is recorded, not raised") {
  ExperimentConfig cfg = tiny_config();
  const auto ref = make_reference(cfg, 16, 7, 0.4);
  // An unconstrained CNN with large weights injects energy without bound.
  ClosureModel bad = ClosureModel::network(ClosureKind::kCnn, 4, 1, 1, 1);
  for (double& p : bad.params) p *= 400.0;
  const auto rep = run_decaying_experiment({{"NC", ClosureModel::none()}, {"BAD", bad}}, ref, cfg);
  CHECK_FALSE(rep.outcome("NC").blew_up);
  const auto& o = rep.outcome("BAD");
  REQUIRE(o.blew_up);
  CHECK(o.blowup_time > 0.0);
  CHECK(o.error.size() < 11);
  CHECK(o.error.size() == o.times.size());
}

TEST_CASE("Kolmogorov experiment summaries") {
  ExperimentConfig cfg = tiny_config();
  cfg.kf_warmup = 0.2;
  cfg.kf_horizon = 1.0;
  cfg.kf_sample_stride = 5;
  cfg.kf_reference = true;
  const std::vector<NamedModel> models{{"NC", ClosureModel::none()}, {"SMAG", ClosureModel::smagorinsky(0.17)}};
  const auto rep = run_kolmogorov_experiment(models, cfg);
  REQUIRE(rep.models.size() == 3);
  CHECK(rep.coarse.nx == 8);
  for (const auto& m : rep.models) {
    CAPTURE(m.name);
    CHECK_FALSE(m.blew_up);
    CHECK(m.steps.size() == 51 - (m.name == "FDNS" ? 1 : 0));
    CHECK(m.kde_points.size() == 200);
    double mass = 0.0;
    for (std::size_t k = 1; k < m.kde_points.size(); ++k)
      mass += 0.5 * (m.kde_density[k] + m.kde_density[k - 1]) * (m.kde_points[k] - m.kde_points[k - 1]);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(m.top_bin_energy == m.mean_spectrum.energy.back());
  }
  CHECK(rep.outcome("NC").max_closure_energy == 0.0);
  CHECK(rep.outcome("SMAG").max_closure_energy <= 0.0);
  const auto again = run_kolmogorov_experiment(models, cfg);
  CHECK(again.outcome("SMAG").mean_spectrum.energy == rep.outcome("SMAG").mean_spectrum.energy);
}

TEST_CASE("ensemble replicas get distinct recorded seeds") {
  ExperimentConfig cfg = tiny_config();
  cfg.hidden_channels = 2;
  cfg.hidden_layers = 1;
  cfg.radius = 1;
  cfg.batch_size = 2;
  cfg.n_unroll = 2;
  const auto data = generate_training_data(cfg);
  const auto ref = make_reference(cfg, 16, 1001, 0.4);
  const auto rep = run_ensemble(ClosureKind::kSkew, 2, data.at(16), ref, cfg, 1);
  REQUIRE(rep.replicas.size() == 2);
  CHECK(rep.replicas[0].seed == replica_seed(cfg.seed, ClosureKind::kSkew, 0));
  CHECK(rep.replicas[0].seed != rep.replicas[1].seed);
  CHECK(rep.replicas[0].model.params != rep.replicas[1].model.params);
  for (const auto& r : rep.replicas) CHECK_FALSE(r.outcome.blew_up);
  CHECK_THROWS_AS(run_ensemble(ClosureKind::kSkew, 1, data.at(16), ref, cfg, 1), Error);
  CHECK_THROWS_AS(run_ensemble(ClosureKind::kSmagorinsky, 2, data.at(16), ref, cfg, 1), Error);
}

TEST_CASE("SKEW term diagnostics") {
  const Grid g = Grid::periodic_square(16);
  ClosureModel skew = ClosureModel::network(ClosureKind::kSkew, 4, 2, 2, 8);
  CounterRng jitter(9);
  for (double& p : skew.params) p += 0.1 * jitter.uniform(-1.0, 1.0);
  std::vector<StaggeredVelocity> states;
  std::vector<double> times;
  for (int k = 0; k < 5; ++k) {
    states.push_back(random_initial_condition(g, 40 + k, 5));
    times.push_back(0.1 * k);
  }
  const auto rows = skew_term_diagnostics(skew, times, states, 1e-3);
  REQUIRE(rows.size() == 5);
  for (const auto& r : rows) {
    CHECK(std::abs(r.k_energy) <= 1e-12 * std::max(1e-300, std::abs(r.q_energy) + r.k_norm));
    CHECK(r.k_energy_relative <= 1e-12);
    CHECK(r.q_energy <= 0.0);
    CHECK(r.q_norm > 0.0);
    CHECK(r.additivity_residual <= 1e-12);
  }
  const auto k_only = skew_ablation(skew, true, false);
  CHECK(k_only.use_k);
  CHECK_FALSE(k_only.use_q);
  CHECK_THROWS_AS(skew_ablation(ClosureModel::none(), true, true), Error);
}

TEST_CASE("config text parses, overrides and round-trips") {
  const auto cfg = ExperimentConfig::parse(
      "# desk run\n"
      "fine_n = 128\n"
      "coarse_n = 32, 64   # two grids\n"
      "closures = SKEW,CNN\n"
      "kf_reference = true\n");
  CHECK(cfg.fine_n == 128);
  CHECK(cfg.coarse_n == std::vector<int>{32, 64});
  CHECK(cfg.closures == std::vector<std::string>{"SKEW", "CNN"});
  CHECK(cfg.kf_reference);
  CHECK(cfg.nu == 1e-3);

  const auto again = ExperimentConfig::parse(cfg.to_text());
  CHECK(again.to_text() == cfg.to_text());
  CHECK(again.hash() == cfg.hash());

  ExperimentConfig over = cfg;
  over.apply_override("dt=0.001");
  CHECK(over.dt == 0.001);
  CHECK(over.hash() != cfg.hash());
  CHECK(over.dt_coarse() == 0.001 * 10);
  CHECK(over.steps_per_snapshot() == 1);
  CHECK(over.eval_horizon() == 4.0);

  const auto expect_invalid = [](const std::string& text) {
    try {
      ExperimentConfig::parse(text);
      FAIL("expected InvalidArgument for: " << text);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kInvalidArgument);
    }
  };
  expect_invalid("unknown_key = 1\n");
  expect_invalid("fine_n = 100\n");
  expect_invalid("dt = fast\n");
  expect_invalid("coarse_n = 32\n");  // train_coarse_n 64 is no longer listed
  expect_invalid("snapshot_stride = 15\n");
  expect_invalid("closures = SMAG\n");
  expect_invalid("n_replicas = 1\n");
  expect_invalid("just a line\n");
  CHECK_THROWS_AS(over.apply_override("dt"), Error);
}
