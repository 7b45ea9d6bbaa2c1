#include <doctest.h>

#include <cmath>
#include <string>

#include "huberloc/eval.hpp"

using namespace huberloc;

namespace
{

ScenarioConfig small_scenario(std::size_t runs)
{
  ScenarioConfig sc;
  sc.num_sensors = 10;
  sc.mc_runs = runs;
  return sc;
}

std::string message_of(const ScenarioConfig& sc)
{
  try
  {
    sc.validate();
  }
  catch (const InvalidArgument& e)
  {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("network_error examples")
{
  const std::vector<Position> truth{{0, 0}, {10, 10}};
  CHECK(network_error(std::vector<Position>{{3, 4}, {10, 10}}, truth) == doctest::Approx(3.5355339059327378));
  CHECK(network_error(std::vector<Position>{{1, 0}, {11, 10}}, truth) == 1.0);
  CHECK(network_error(truth, truth) == 0.0);
  CHECK_THROWS_AS(network_error(std::vector<Position>{{0, 0}}, truth), InvalidArgument);
  CHECK_THROWS_AS(network_error(std::vector<Position>{}, std::vector<Position>{}), InvalidArgument);
}

TEST_CASE("a common translation gives its length as the error")
{
  const std::vector<Position> truth{{0, 0}, {4, 1}, {2, 9}};
  std::vector<Position> moved = truth;
  for (auto& p : moved)
    p += Position{0.6, -0.8};
  CHECK(network_error(moved, truth) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("cdf_table examples")
{
  const std::vector<double> s{1, 2, 3};
  const std::vector<double> grid{0.5, 2.0, 3.0, 10.0};
  const auto t = cdf_table(s, grid);
  REQUIRE(t.size() == 4);
  CHECK(t[0].fraction == 0.0);
  CHECK(t[1].fraction == doctest::Approx(2.0 / 3.0));
  CHECK(t[2].fraction == 1.0);
  CHECK(t[3].fraction == 1.0);
  CHECK(t[1].error == 2.0);
  CHECK_THROWS_AS(cdf_table(std::vector<double>{}, grid), InvalidArgument);

  const auto g = linear_grid(0.0, 10.0, 101);
  const std::vector<double> many{0.3, 7.7, 2.2, 2.2, 9.1, 0.0, 4.4};
  const auto c = cdf_table(many, g);
  for (std::size_t k = 1; k < c.size(); ++k)
    CHECK(c[k].fraction >= c[k - 1].fraction);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 10.0);
  CHECK(g[10] == doctest::Approx(1.0));
}

TEST_CASE("quantile and summarize")
{
  const std::vector<double> s{1, 2, 3, 4};
  CHECK(quantile(s, 0.0) == 1.0);
  CHECK(quantile(s, 1.0) == 4.0);
  CHECK(quantile(s, 0.5) == 2.5);
  CHECK_THROWS_AS(quantile(std::vector<double>{}, 0.5), InvalidArgument);

  RunReport r;
  for (double e : {4.0, 1.0, 3.0})
  {
    RunRecord rec;
    rec.network_error = e;
    r.runs.push_back(rec);
  }
  RunRecord bad;
  bad.failed = true;
  r.runs.push_back(bad);
  summarize(r);
  CHECK(r.failures == 1);
  CHECK(r.sorted_errors == std::vector<double>{1, 3, 4});
  CHECK(r.median == 3.0);
  CHECK(r.mean == doctest::Approx(8.0 / 3.0));
  CHECK(r.quantiles.at("q50") == 3.0);
  CHECK(r.quantiles.size() == 5);

  RunReport empty;
  empty.runs.push_back(bad);
  summarize(empty);
  CHECK(std::isnan(empty.median));
}

TEST_CASE("seed derivation is pure and spreads streams")
{
  CHECK(derive_seed(42, 0) == derive_seed(42, 0));
  CHECK(derive_seed(42, 0) != derive_seed(42, 1));
  CHECK(derive_seed(42, 0) != derive_seed(43, 0));
  const RunSeeds s = run_seeds(7, 3);
  CHECK(s.run == derive_seed(7, 3));
  CHECK(s.placement == derive_seed(s.run, 0));
  CHECK(s.measurement == derive_seed(s.run, 1));
  CHECK(s.init == derive_seed(s.run, 2));
}

TEST_CASE("method and placement names round-trip")
{
  for (Method m : all_methods())
    CHECK(parse_method(to_string(m)) == m);
  CHECK(parse_method("relaxed_huber") == Method::StageOne);
  CHECK_THROWS_AS(parse_method("gradient"), InvalidArgument);
  CHECK(parse_placement(to_string(Placement::Fixed)) == Placement::Fixed);
  CHECK_THROWS_AS(parse_placement("grid"), InvalidArgument);
}

TEST_CASE("scenario validation names the field")
{
  CHECK(message_of(ScenarioConfig{}).empty());
  ScenarioConfig sc;
  sc.mc_runs = 0;
  CHECK(message_of(sc).find("mc_runs") != std::string::npos);
  sc = {};
  sc.noise.nlos_prob = 1.5;
  CHECK(message_of(sc).find("nlos_prob") != std::string::npos);
  sc = {};
  sc.stage1.step = -1;
  CHECK(message_of(sc).find("stage1") != std::string::npos);
  sc = {};
  sc.noise.sigma_n = 0.0;
  CHECK(message_of(sc).find("solver_sigma_n") != std::string::npos);
  sc.solver_sigma_n = 0.5;
  CHECK(message_of(sc).empty());
  sc.solver_sigma_n = -0.5;
  CHECK(message_of(sc).find("solver_sigma_n") != std::string::npos);
  sc = {};
  sc.anchors.clear();
  CHECK(message_of(sc).find("anchors") != std::string::npos);
  sc = {};
  sc.pocs_iters = 0;
  CHECK(message_of(sc).find("pocs_iters") != std::string::npos);
}

TEST_CASE("every method in a run sees the same measurements")
{
  const ScenarioConfig sc = small_scenario(3);
  const auto methods = all_methods();
  const auto reports = run_monte_carlo(sc, methods, 5);
  for (std::size_t k = 0; k < 3; ++k)
  {
    const auto hash = reports.at(Method::TwoStage).runs[k].measurement_hash;
    for (Method m : methods)
    {
      CHECK(reports.at(m).runs[k].measurement_hash == hash);
      CHECK(reports.at(m).runs[k].seed == run_seeds(5, k).run);
      CHECK(reports.at(m).runs[k].index == k);
    }
  }
  CHECK(reports.at(Method::Pocs).runs[0].measurement_hash != reports.at(Method::Pocs).runs[1].measurement_hash);
}

TEST_CASE("Monte-Carlo output depends only on the seed")
{
  const ScenarioConfig sc = small_scenario(6);
  const std::vector<Method> methods{Method::TwoStage, Method::Pocs, Method::OracleLos};
  const auto a = run_monte_carlo(sc, methods, 11, 1);
  const auto b = run_monte_carlo(sc, methods, 11, 1);
  const auto c = run_monte_carlo(sc, methods, 11, 4);
  const auto d = run_monte_carlo(sc, methods, 12, 1);
  CHECK(a == b);
  CHECK(a == c);
  CHECK_FALSE(a == d);
}

TEST_CASE("fixed placement reuses one layout")
{
  ScenarioConfig sc = small_scenario(1);
  sc.placement = Placement::Fixed;
  sc.placement_seed = 99;
  const RunInstance a = make_instance(sc, run_seeds(1, 0));
  const RunInstance b = make_instance(sc, run_seeds(1, 1));
  CHECK(a.net.true_sensor_positions() == b.net.true_sensor_positions());
  CHECK_FALSE(a.ms == b.ms);
  sc.placement = Placement::RedrawPerRun;
  CHECK(make_instance(sc, run_seeds(1, 0)).net.true_sensor_positions() !=
        make_instance(sc, run_seeds(1, 1)).net.true_sensor_positions());
}

TEST_CASE("noise-free data is recovered by every method")
{
  ScenarioConfig sc = small_scenario(4);
  sc.noise = {0.0, 0.0, 10.0};
  sc.solver_sigma_n = 0.5;
  sc.init_std = 1.0;
  sc.stage1.max_iters = 2000;
  sc.stage2.max_iters = 2000;
  sc.relaxed_nls.max_iters = 4000;
  sc.raw_huber.max_iters = 2000;
  sc.pocs_iters = 5000;
  sc.oracle_pocs_iters = 50;
  sc.oracle.max_iters = 2000;
  const auto reports = run_monte_carlo(sc, all_methods(), 3);

  CHECK(reports.at(Method::TwoStage).sorted_errors.back() < 1e-3);
  CHECK(reports.at(Method::RawHuber).sorted_errors.back() < 1e-3);
  CHECK(reports.at(Method::OracleLos).sorted_errors.back() < 1e-3);
  // the relaxed costs are flat inside the ball intersection, so these only
  // approach the truth
  CHECK(reports.at(Method::StageOne).sorted_errors.back() < 1e-1);
  CHECK(reports.at(Method::RelaxedNls).sorted_errors.back() < 1e-1);
  CHECK(reports.at(Method::Pocs).sorted_errors.back() < 1e-1);
  for (const auto& [m, r] : reports)
    CHECK(r.failures == 0);
}

TEST_CASE("solve_method stages")
{
  const ScenarioConfig sc = small_scenario(1);
  const RunInstance inst = make_instance(sc, run_seeds(2, 0));
  auto names = [](const MethodResult& r) {
    std::vector<std::string> out;
    for (const auto& [n, t] : r.stages)
      out.push_back(n);
    return out;
  };
  CHECK(names(solve_method(Method::TwoStage, sc, inst.net, inst.ms, inst.init)) ==
        std::vector<std::string>{"stage1", "stage2"});
  CHECK(names(solve_method(Method::OracleLos, sc, inst.net, inst.ms, inst.init)) ==
        std::vector<std::string>{"oracle_nls"});
  CHECK(names(solve_method(Method::Pocs, sc, inst.net, inst.ms, inst.init)) == std::vector<std::string>{"pocs"});

  ScenarioConfig skip = sc;
  skip.stage2.max_iters = 0;
  const auto one = solve_method(Method::TwoStage, skip, inst.net, inst.ms, inst.init);
  const auto s1 = solve_method(Method::StageOne, sc, inst.net, inst.ms, inst.init);
  CHECK(one.state.positions == s1.state.positions);

  ScenarioConfig swapped = sc;
  swapped.stage1.loss = LossKind::Huber;
  CHECK_THROWS_AS(solve_method(Method::TwoStage, swapped, inst.net, inst.ms, inst.init), InvalidArgument);
}

TEST_CASE("divergence is recorded as a failed run")
{
  ScenarioConfig sc = small_scenario(2);
  sc.relaxed_nls.step = 0.04;
  sc.num_sensors = 50;
  const auto reports = run_monte_carlo(sc, std::vector<Method>{Method::RelaxedNls}, 1);
  const auto& r = reports.at(Method::RelaxedNls);
  CHECK(r.failures == 2);
  CHECK(r.runs[0].failure.find("diverge") != std::string::npos);
  CHECK(r.sorted_errors.empty());
}

TEST_CASE("re-initialized trials keep the problem fixed")
{
  ScenarioConfig sc = small_scenario(5);
  const RunInstance inst = make_instance(sc, run_seeds(4, 0));
  const auto reports = run_reinitialized(sc, inst.net, inst.ms, std::vector<Method>{Method::TwoStage}, 8, 2);
  const auto& r = reports.at(Method::TwoStage);
  REQUIRE(r.runs.size() == 5);
  for (const auto& run : r.runs)
    CHECK(run.measurement_hash == inst.ms.hash());
  CHECK(r.runs[0].network_error != r.runs[1].network_error);

  const Network no_truth(1, {{0, 0}}, {make_edge(NodeId{0}, NodeId{1})});
  const MeasurementSet ms(no_truth, {{Edge{NodeId{0}, NodeId{1}}, 1.0, LinkLabel::Unknown}});
  CHECK_THROWS_AS(run_reinitialized(sc, no_truth, ms, std::vector<Method>{Method::TwoStage}, 1), InvalidArgument);
}
