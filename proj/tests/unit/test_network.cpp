#include <random>

#include "doctest.h"
#include "rted/error.hpp"
#include "rted/network.hpp"

using namespace rted;

namespace {

// Full DC solve: fix the slack angle at zero, solve B theta = P, flows (th_f - th_t) / x.
Eigen::VectorXd dc_flows(const NetworkModel& net, const Eigen::VectorXd& p) {
  const auto n = net.bus_count();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  for (const auto& l : net.lines()) {
    const auto f = net.bus_index(l.from), t = net.bus_index(l.to);
    b(f, f) += 1 / l.reactance;
    b(t, t) += 1 / l.reactance;
    b(f, t) -= 1 / l.reactance;
    b(t, f) -= 1 / l.reactance;
  }
  const auto s = net.slack_index();
  Eigen::VectorXd rhs = p;
  rhs(s) = 0;
  b.row(s).setZero();
  b(s, s) = 1;
  const Eigen::VectorXd theta = b.fullPivLu().solve(rhs);
  Eigen::VectorXd flows(net.line_count());
  for (Eigen::Index l = 0; l < net.line_count(); ++l) {
    const auto& ln = net.lines()[static_cast<std::size_t>(l)];
    flows(l) = (theta(net.bus_index(ln.from)) - theta(net.bus_index(ln.to))) / ln.reactance;
  }
  return flows;
}

NetworkModel six_bus() { return load_network(RTED_SOURCE_DIR "/data/networks/six_bus.json"); }

}  // namespace

TEST_CASE("two buses, one line") {
  const NetworkModel net("two", {{1, 0}, {2, 1}}, {{1, 2, 0.1, 50, ""}}, 1);
  CHECK(net.ptdf()(0, 1) == doctest::Approx(-1.0));
  CHECK(net.ptdf()(0, 0) == 0.0);
  // Orientation: injecting at bus 2 pushes flow toward bus 1, against the 1->2 direction.
  const NetworkModel rev("two", {{1, 0}, {2, 1}}, {{2, 1, 0.1, 50, ""}}, 1);
  CHECK(rev.ptdf()(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("symmetric triangle splits two thirds and one third") {
  const NetworkModel net("tri", {{1, 0}, {2, 0}, {3, 0}}, {{2, 1, 1.0, 0, ""}, {2, 3, 1.0, 0, ""}, {3, 1, 1.0, 0, ""}}, 1);
  CHECK(net.ptdf()(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(net.ptdf()(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(net.ptdf()(2, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(net.monitored_lines().empty());
}

TEST_CASE("six-bus flows match a direct DC solve") {
  const auto net = six_bus();
  CHECK(net.bus_count() == 6);
  CHECK(net.line_count() == 11);
  CHECK(net.ptdf().col(net.slack_index()).cwiseAbs().maxCoeff() == 0.0);
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(-100, 100);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd p(6);
    for (auto& v : p) v = u(g);
    if (trial % 2 == 0) p(net.slack_index()) -= p.sum();  // balanced
    const auto f = line_flow(net, p);
    CHECK((f - dc_flows(net, p)).cwiseAbs().maxCoeff() <= 1e-9);
  }
  CHECK(line_flow(net, Eigen::VectorXd::Zero(6)).cwiseAbs().maxCoeff() == 0.0);
  Eigen::VectorXd slack_only = Eigen::VectorXd::Zero(6);
  slack_only(net.slack_index()) = 250;
  CHECK(line_flow(net, slack_only).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(line_flow(net, Eigen::VectorXd::Zero(5)), Error);
}

TEST_CASE("superposition and reactance scaling") {
  const auto net = six_bus();
  Eigen::VectorXd a(6), b(6);
  a << 0, 10, -5, 30, 2, -7;
  b << 3, -1, 4, -1, 5, -9;
  CHECK((line_flow(net, 2.5 * a - b) - (2.5 * line_flow(net, a) - line_flow(net, b))).cwiseAbs().maxCoeff() <= 1e-12);
  auto lines = net.lines();
  for (auto& l : lines) l.reactance *= 3.7;
  const NetworkModel scaled("s", net.buses(), lines, net.slack_bus());
  CHECK((scaled.ptdf() - net.ptdf()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("from-side minus to-side consistency") {
  // Injecting at the from bus and withdrawing at the to bus of line l moves
  // k(l,from) - k(l,to) MW across l, which lies in (0, 1].
  const auto net = six_bus();
  for (Eigen::Index l = 0; l < net.line_count(); ++l) {
    const auto& ln = net.lines()[static_cast<std::size_t>(l)];
    const double d = net.ptdf()(l, net.bus_index(ln.from)) - net.ptdf()(l, net.bus_index(ln.to));
    CHECK(d > 0.0);
    CHECK(d <= 1.0 + 1e-12);
  }
}

TEST_CASE("topology errors") {
  try {
    NetworkModel("split", {{1, 0}, {2, 0}, {3, 0}}, {{1, 2, 0.1, 0, ""}}, 1);
    FAIL("disconnected");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Topology);
  }
  CHECK_THROWS_AS(NetworkModel("x", {{1, 0}, {2, 0}}, {{1, 2, 0.0, 0, ""}}, 1), Error);
  CHECK_THROWS_AS(NetworkModel("x", {{1, 0}, {2, 0}}, {{1, 2, 0.1, 0, ""}}, 5), Error);
  const auto net = six_bus();
  std::vector<PlantId> plants{{0, PlantKind::Wind, 100, 9, "far"}};
  CHECK_THROWS_AS(plant_shift_factors(net, plants), Error);
}

TEST_CASE("float instantiation of the shift-factor kernel") {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> ends{{1, 0}, {1, 2}, {2, 0}};
  const Eigen::Vector3f x(1.0f, 1.0f, 1.0f);
  const Eigen::MatrixXf k = compute_ptdf<float>(3, ends, x, 0);
  CHECK(k(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("json round trip and MATPOWER import") {
  const auto net = six_bus();
  nlohmann::json j = net;
  const auto back = network_from_json(nlohmann::json::parse(j.dump()));
  CHECK((back.ptdf() - net.ptdf()).cwiseAbs().maxCoeff() == 0.0);

  const std::string m = R"(function mpc = case3
mpc.baseMVA = 100;
mpc.bus = [
	1	3	0	0	0	0	1	1	0	135	1	1.05	0.95;
	2	1	60	0	0	0	1	1	0	135	1	1.05	0.95;  % load
	3	1	40	0	0	0	1	1	0	135	1	1.05	0.95
];
mpc.branch = [
	1	2	0	1	0	80	0	0	0	0	1	-360	360;
	2	3	0	1	0	0	0	0	0	0	1	-360	360;
	3	1	0	1	0	40	0	0	0	0	1	-360	360;
	1	3	0	1	0	40	0	0	0	0	0	-360	360;
];
)";
  const auto mp = parse_matpower(m);
  CHECK(mp.bus_count() == 3);
  CHECK(mp.line_count() == 3);
  CHECK(mp.slack_bus() == 1);
  CHECK(mp.buses()[1].load_share == doctest::Approx(0.6));
  CHECK(mp.lines()[0].limit_mw == 80);
  CHECK(!mp.lines()[1].monitored());
  CHECK(mp.ptdf()(0, 1) == doctest::Approx(-2.0 / 3.0));
}
