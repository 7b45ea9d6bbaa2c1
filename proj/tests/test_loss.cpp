#include <doctest.h>

#include <cmath>
#include <random>

#include "huberloc/loss.hpp"
#include "support.hpp"

using namespace huberloc;

namespace
{

constexpr LossKind kAll[] = {LossKind::Nls, LossKind::RelaxedNls, LossKind::Huber, LossKind::RelaxedHuber};

// Reference cost written out from the piecewise definitions.
double reference_cost(LossKind kind, double k, double u)
{
  switch (kind)
  {
    case LossKind::Nls:
      return u * u;
    case LossKind::RelaxedNls:
      return u > 0 ? u * u : 0.0;
    case LossKind::Huber:
      return std::abs(u) < k ? u * u : 2 * k * std::abs(u) - k * k;
    case LossKind::RelaxedHuber:
      if (u <= 0)
        return 0.0;
      return u < k ? u * u : 2 * k * u - k * k;
  }
  return 0.0;
}

Position fd_grad(LossKind kind, const LossParams& p, Position xi, Position xj, double r, double h)
{
  auto f = [&](Position x) { return link_cost(kind, p, residual(x, xj, r)); };
  return {(f(xi + Position{h, 0}) - f(xi - Position{h, 0})) / (2 * h),
          (f(xi + Position{0, h}) - f(xi - Position{0, h})) / (2 * h)};
}

}  // namespace

TEST_CASE("residual examples")
{
  CHECK(residual({0, 0}, {3, 4}, 5) == 0.0);
  CHECK(residual({0, 0}, {3, 4}, 4) == 1.0);
  CHECK(residual({0, 0}, {0, 0}, 2) == -2.0);
}

TEST_CASE("link_cost examples")
{
  const LossParams k1{1.0};
  CHECK(link_cost(LossKind::Huber, k1, 0.5) == 0.25);
  CHECK(link_cost(LossKind::Huber, k1, -3.0) == 5.0);
  CHECK(link_cost(LossKind::RelaxedHuber, k1, -3.0) == 0.0);
  CHECK(link_cost(LossKind::RelaxedHuber, k1, 2.0) == 3.0);
  CHECK(link_cost(LossKind::Nls, k1, -3.0) == 9.0);
  CHECK(link_cost(LossKind::RelaxedNls, k1, -3.0) == 0.0);
  CHECK(link_cost(LossKind::RelaxedNls, k1, 3.0) == 9.0);
  // knee: both branches give K^2
  CHECK(link_cost(LossKind::Huber, {1.5}, 1.5) == 2.25);
  CHECK(link_cost(LossKind::Huber, {1.5}, -1.5) == 2.25);
}

TEST_CASE("link_cost matches the piecewise definitions")
{
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-20.0, 20.0), k(0.01, 5.0);
  for (int n = 0; n < 1000; ++n)
  {
    const double kk = k(rng), uu = u(rng);
    for (LossKind kind : kAll)
      CHECK(link_cost(kind, {kk}, uu) == doctest::Approx(reference_cost(kind, kk, uu)).epsilon(1e-14));
  }
}

TEST_CASE("costs are continuous at branch boundaries")
{
  for (double k : {0.05, 1.0, 3.0})
    for (LossKind kind : kAll)
      for (double b : {-k, 0.0, k})
      {
        const double below = link_cost(kind, {k}, std::nextafter(b, -1e9));
        const double above = link_cost(kind, {k}, std::nextafter(b, 1e9));
        CHECK(std::abs(below - above) < 1e-12);
      }
}

TEST_CASE("relaxed Huber never exceeds Huber and equals it for u >= 0")
{
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-20.0, 20.0), k(0.01, 5.0);
  for (int n = 0; n < 1000; ++n)
  {
    const double kk = k(rng), uu = u(rng);
    CHECK(link_cost(LossKind::RelaxedHuber, {kk}, uu) <= link_cost(LossKind::Huber, {kk}, uu));
    if (uu >= 0)
      CHECK(link_cost(LossKind::RelaxedHuber, {kk}, uu) == link_cost(LossKind::Huber, {kk}, uu));
    CHECK(link_cost(LossKind::RelaxedNls, {kk}, uu) <= link_cost(LossKind::Nls, {kk}, uu));
  }
}

TEST_CASE("link_grad examples")
{
  CHECK(link_grad(LossKind::RelaxedHuber, {1.0}, {0.5, 0}, {0, 0}, 1.0) == Position{0, 0});
  CHECK(link_grad(LossKind::RelaxedNls, {1.0}, {0.5, 0}, {0, 0}, 1.0) == Position{0, 0});
  CHECK(link_grad(LossKind::Huber, {1.0}, {2, 0}, {0, 0}, 1.0) == Position{2, 0});
  for (LossKind kind : kAll)
    CHECK(link_grad(kind, {1.0}, {3, 3}, {3, 3}, 2.0) == Position{0, 0});
}

TEST_CASE("Huber gradient descends for large negative residuals")
{
  // xi at distance 1 from xj with r = 5: u = -4, K = 1 -> 2K sign(u) unit = (-2, 0)
  const Position g = link_grad(LossKind::Huber, {1.0}, {1, 0}, {0, 0}, 5.0);
  CHECK(g.x == doctest::Approx(-2.0));
  CHECK(g.y == 0.0);
}

TEST_CASE("link_grad matches central finite differences")
{
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> coord(-10.0, 10.0), range(-2.0, 15.0), k(0.05, 3.0);
  const double h = 1e-6;
  int checked = 0;
  while (checked < 1000)
  {
    const Position xi{coord(rng), coord(rng)}, xj{coord(rng), coord(rng)};
    const double r = range(rng), kk = k(rng);
    const double u = residual(xi, xj, r);
    if (distance(xi, xj) < 1e-4 || std::abs(u) < 1e-4 || std::abs(std::abs(u) - kk) < 1e-4)
      continue;
    ++checked;
    for (LossKind kind : kAll)
    {
      const Position g = link_grad(kind, {kk}, xi, xj, r);
      const Position fd = fd_grad(kind, {kk}, xi, xj, r, h);
      const double scale = std::max(norm(g), 1e-300);
      if (norm(g) == 0.0)
        CHECK(norm(fd) < 1e-8);
      else
        CHECK(norm(g - fd) / scale < 1e-5);
    }
  }
}

TEST_CASE("network_cost examples")
{
  // sensors 0, 1; anchor 2 at origin; triangle of edges
  const Network net(2, {{0, 0}}, {make_edge(NodeId{0}, NodeId{1}), make_edge(NodeId{0}, NodeId{2}),
                                  make_edge(NodeId{1}, NodeId{2})});
  const std::vector<Position> x{{3, 0}, {0, 4}};
  // distances: d01 = 5, d02 = 3, d12 = 4
  const MeasurementSet exact(net, {{Edge{NodeId{0}, NodeId{1}}, 5.0, LinkLabel::Unknown},
                                   {Edge{NodeId{0}, NodeId{2}}, 3.0, LinkLabel::Unknown},
                                   {Edge{NodeId{1}, NodeId{2}}, 4.0, LinkLabel::Unknown}});
  for (LossKind kind : kAll)
    CHECK(network_cost(kind, {1.0}, x, net, exact) == 0.0);

  // residuals 0.5, -2, 3 with K = 1: Huber 0.25 + 3 + 5
  const MeasurementSet off(net, {{Edge{NodeId{0}, NodeId{1}}, 4.5, LinkLabel::Unknown},
                                 {Edge{NodeId{0}, NodeId{2}}, 5.0, LinkLabel::Unknown},
                                 {Edge{NodeId{1}, NodeId{2}}, 1.0, LinkLabel::Unknown}});
  CHECK(network_cost(LossKind::Huber, {1.0}, x, net, off) == doctest::Approx(8.25));
  CHECK(network_cost(LossKind::RelaxedHuber, {1.0}, x, net, off) == doctest::Approx(0.25 + 5.0));
  CHECK(network_cost(LossKind::Nls, {1.0}, x, net, off) == doctest::Approx(0.25 + 4.0 + 9.0));

  const Network single(1, {{0, 0}}, {make_edge(NodeId{0}, NodeId{1})});
  const MeasurementSet one(single, {{Edge{NodeId{0}, NodeId{1}}, 0.5, LinkLabel::Unknown}});
  CHECK(network_cost(LossKind::Huber, {1.0}, std::vector<Position>{{1, 0}}, single, one) == 0.25);

  CHECK_THROWS_AS(network_cost(LossKind::Huber, {1.0}, std::vector<Position>{{1, 0}}, net, off), InvalidArgument);
}

TEST_CASE("relaxed network costs are midpoint convex")
{
  std::mt19937_64 rng(4);
  const Network net = testing::random_network(rng, 10);
  const MeasurementSet ms = synthesize(net, {0.5, 0.5, 10.0}, 7);
  std::uniform_real_distribution<double> c(-5.0, 15.0);
  for (int n = 0; n < 1000; ++n)
  {
    std::vector<Position> a(10), b(10), mid(10);
    for (std::size_t i = 0; i < 10; ++i)
    {
      a[i] = {c(rng), c(rng)};
      b[i] = {c(rng), c(rng)};
      mid[i] = 0.5 * (a[i] + b[i]);
    }
    for (LossKind kind : {LossKind::RelaxedHuber, LossKind::RelaxedNls})
    {
      const LossParams p{1.0};
      const double slack = 0.5 * (network_cost(kind, p, a, net, ms) + network_cost(kind, p, b, net, ms)) -
                           network_cost(kind, p, mid, net, ms);
      CHECK(slack >= -1e-9);
    }
  }
}

TEST_CASE("loss kinds round-trip through their names")
{
  for (LossKind kind : kAll)
    CHECK(parse_loss_kind(to_string(kind)) == kind);
  CHECK(is_huber(LossKind::RelaxedHuber));
  CHECK_FALSE(is_huber(LossKind::Nls));
  CHECK_THROWS_AS(parse_loss_kind("tukey"), InvalidArgument);
}
