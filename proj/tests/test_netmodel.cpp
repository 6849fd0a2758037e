#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pvm/netmodel.hpp"

using namespace pvm;

namespace {

Network chain(int n) {
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  buses.push_back({1, BusKind::Slack, 0.0, 0.0});
  for (int i = 2; i <= n; ++i) {
    buses.push_back({i, BusKind::Load, 100.0, 50.0});
    branches.push_back({i - 1, i, 0.01, 0.02, std::nullopt});
  }
  return Network(buses, branches, 1.0, 12.66);
}

NetworkDefect defect_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const NetworkError& e) {
    return e.defect();
  }
  ADD_FAILURE() << "expected a NetworkError";
  return NetworkDefect::Schema;
}

}  // namespace

TEST(Network, LoadsBundled33BusFeeder) {
  const Network net = load_network_file(std::string(PVM_DATA_DIR) + "/ieee33.json");
  EXPECT_EQ(net.bus_count(), 33U);
  EXPECT_EQ(net.branch_count(), 32U);
  EXPECT_EQ(net.slack_id(), 1);
  double p = 0.0, q = 0.0;
  for (const Bus& b : net.buses()) {
    p += b.p_base_kw;
    q += b.q_base_kvar;
  }
  EXPECT_NEAR(p, 3715.0, 1e-9);
  EXPECT_NEAR(q, 2300.0, 1e-9);
  EXPECT_EQ(leaf_buses(net), (std::vector<BusId>{18, 22, 25, 33}));
}

TEST(Network, LoadsBundled69BusFeeder) {
  const Network net = load_network_file(std::string(PVM_DATA_DIR) + "/ieee69.json");
  EXPECT_EQ(net.bus_count(), 69U);
  EXPECT_EQ(net.branch_count(), 68U);
}

TEST(Network, OrientsBranchesAwayFromSlack) {
  std::vector<Bus> buses{{1, BusKind::Slack, 0, 0}, {2, BusKind::Load, 1, 0}, {3, BusKind::Load, 1, 0}};
  std::vector<Branch> branches{{2, 1, 0.1, 0.1, std::nullopt}, {3, 2, 0.1, 0.1, std::nullopt}};
  const Network net(buses, branches, 1.0, 12.66);
  for (const Branch& b : net.branches()) EXPECT_LT(net.depth(net.index_of(b.from)), net.depth(net.index_of(b.to)));
  EXPECT_EQ(*net.parent(net.index_of(3)), net.index_of(2));
  EXPECT_TRUE(net.children(net.index_of(3)).empty());
}

TEST(Network, RejectsStructuralDefects) {
  const std::vector<Bus> three{{1, BusKind::Slack, 0, 0}, {2, BusKind::Load, 1, 0}, {3, BusKind::Load, 1, 0}};
  EXPECT_EQ(defect_of([&] {
              Network({{1, BusKind::Load, 0, 0}, {2, BusKind::Load, 0, 0}}, {{1, 2, 0.1, 0.1, {}}}, 1, 1);
            }),
            NetworkDefect::MissingSlack);
  EXPECT_EQ(defect_of([&] {
              Network({{1, BusKind::Slack, 0, 0}, {2, BusKind::Slack, 0, 0}}, {{1, 2, 0.1, 0.1, {}}}, 1, 1);
            }),
            NetworkDefect::MultipleSlack);
  EXPECT_EQ(defect_of([&] {
              Network(three, {{1, 2, 0.1, 0.1, {}}, {2, 3, 0.1, 0.1, {}}, {1, 3, 0.1, 0.1, {}}}, 1, 1);
            }),
            NetworkDefect::NonRadial);
  EXPECT_EQ(defect_of([&] { Network(three, {{1, 2, 0.1, 0.1, {}}}, 1, 1); }), NetworkDefect::Disconnected);
  EXPECT_EQ(defect_of([&] { Network(three, {{1, 2, 0.1, 0.1, {}}, {2, 4, 0.1, 0.1, {}}}, 1, 1); }),
            NetworkDefect::UnknownBus);
  EXPECT_EQ(defect_of([&] { Network(three, {{1, 2, -0.1, 0.1, {}}, {2, 3, 0.1, 0.1, {}}}, 1, 1); }),
            NetworkDefect::NegativeImpedance);
  EXPECT_EQ(defect_of([&] { Network(three, {{1, 2, 0.1, 0.1, {}}, {2, 2, 0.1, 0.1, {}}}, 1, 1); }),
            NetworkDefect::SelfLoop);
  EXPECT_EQ(defect_of([&] {
              Network({{1, BusKind::Slack, 0, 0}, {1, BusKind::Load, 0, 0}}, {}, 1, 1);
            }),
            NetworkDefect::DuplicateBus);
  EXPECT_EQ(defect_of([&] { Network(three, {{1, 2, 0.1, 0.1, {}}, {2, 3, 0.1, 0.1, {}}}, 1, 1, {1.05, 0.95}); }),
            NetworkDefect::InvalidLimits);
}

TEST(Network, RejectsMalformedDocuments) {
  EXPECT_EQ(defect_of([] { load_network("{not json"); }), NetworkDefect::Schema);
  EXPECT_EQ(defect_of([] { load_network(R"({"buses": []})"); }), NetworkDefect::Schema);
  EXPECT_EQ(defect_of([] {
              load_network(R"({"bases": {"s_mva": 1, "v_kv": 12.66},
                 "buses": [{"id": 1, "kind": "slack"}, {"id": 2}],
                 "branches": [{"from": 1, "to": 2, "r_ohm": 1.0}]})");
            }),
            NetworkDefect::Schema);
}

TEST(Network, ConvertsOhmsAndAmperesToPerUnit) {
  const Network net = load_network(R"({"bases": {"s_mva": 1, "v_kv": 10},
      "buses": [{"id": 1, "kind": "slack"}, {"id": 2, "p_base_kw": 10}],
      "branches": [{"from": 1, "to": 2, "r_ohm": 1.0, "x_ohm": 2.0, "i_limit_a": 100}]})");
  EXPECT_NEAR(net.branches()[0].r, 0.01, 1e-15);
  EXPECT_NEAR(net.branches()[0].x, 0.02, 1e-15);
  const double i_base = 1e6 / (std::sqrt(3.0) * 10e3);
  EXPECT_NEAR(*net.branches()[0].i_sq_limit, std::pow(100.0 / i_base, 2), 1e-12);
}

TEST(ElectricalDistance, MetricProperties) {
  const Network net = load_network_file(std::string(PVM_DATA_DIR) + "/ieee33.json");
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> pick(0, net.bus_count() - 1);
  for (int k = 0; k < 500; ++k) {
    const std::size_t a = pick(rng), b = pick(rng), c = pick(rng);
    const double ab = electrical_distance_by_index(net, a, b);
    EXPECT_DOUBLE_EQ(ab, electrical_distance_by_index(net, b, a));
    EXPECT_EQ(electrical_distance_by_index(net, a, a), 0.0);
    EXPECT_LE(electrical_distance_by_index(net, a, c), ab + electrical_distance_by_index(net, b, c) + 1e-12);
    if (a != b) EXPECT_GT(ab, 0.0);
  }
}

TEST(ElectricalDistance, AdditiveAlongUniformChain) {
  const Network net = chain(6);
  const double step = std::hypot(0.01, 0.02);
  EXPECT_NEAR(electrical_distance(net, 2, 6), 4.0 * step, 1e-14);
  EXPECT_NEAR(electrical_distance(net, 1, 3) + electrical_distance(net, 3, 6), electrical_distance(net, 1, 6), 1e-14);
}

TEST(Profiles, CsvRoundTripInAnyRowOrder) {
  const std::string csv =
      "timestamp,bus_id,p_kw,q_kvar\n"
      "2023-01-01T01:00,3,2.5,1\n"
      "2023-01-01T00:00,2,1.0,0.5\n"
      "2023-01-01T00:00,3,2.0,1\n"
      "2023-01-01 01:00,2,1.5,0.5\n";
  const LoadProfileSet set = read_profiles_csv(csv);
  EXPECT_EQ(set.hours(), 2U);
  EXPECT_EQ(set.start(), make_timestamp(2023, 1, 1, 0));
  EXPECT_EQ(set.p_kw(2), (std::vector<double>{1.0, 1.5}));
  const LoadProfileSet again = read_profiles_csv(write_profiles_csv(set));
  EXPECT_EQ(again.p_kw(3), set.p_kw(3));
  EXPECT_EQ(again.q_kvar(2), set.q_kvar(2));
}

TEST(Profiles, RejectsGapsAndMismatchedHorizons) {
  EXPECT_THROW(read_profiles_csv("timestamp,bus_id,p_kw,q_kvar\n"
                                 "2023-01-01T00:00,2,1,0\n2023-01-01T02:00,2,1,0\n"),
               InputError);
  EXPECT_THROW(read_profiles_csv("timestamp,bus_id,p_kw,q_kvar\n"
                                 "2023-01-01T00:00,2,1,0\n2023-01-01T00:00,2,1,0\n"),
               InputError);
  EXPECT_THROW(read_profiles_csv("timestamp,bus_id,p_kw,q_kvar\n"
                                 "2023-01-01T00:00,2,1,0\n2023-01-01T01:00,3,1,0\n"),
               InputError);
  EXPECT_THROW(read_profiles_csv("timestamp,bus_id,p_kw,q_kvar\n2023-01-01T00:30,2,1,0\n"), InputError);
}

TEST(Profiles, ScalingIsLinear) {
  const Network net = chain(4);
  BaseLoadShape shape;
  shape.days = 3;
  const LoadProfileSet base = synthesize_base_profiles(net, shape);
  const LoadProfileSet a = scale_profiles(base, 1.3);
  const LoadProfileSet b = scale_profiles(scale_profiles(base, 1.1), 1.3 / 1.1);
  for (BusId id : base.bus_ids())
    for (std::size_t t = 0; t < base.hours(); ++t) {
      EXPECT_NEAR(a.p_kw(id)[t], 1.3 * base.p_kw(id)[t], 1e-12);
      EXPECT_NEAR(a.p_kw(id)[t], b.p_kw(id)[t], 1e-12);
    }
  EXPECT_THROW(scale_profiles(base, 0.0), InputError);
}

TEST(Profiles, SynthesizedShapeCoversNetworkDeterministically) {
  const Network net = chain(5);
  BaseLoadShape shape;
  shape.days = 10;
  const LoadProfileSet a = synthesize_base_profiles(net, shape);
  const LoadProfileSet b = synthesize_base_profiles(net, shape);
  EXPECT_NO_THROW(a.check_covers(net));
  EXPECT_EQ(a.hours(), 240U);
  EXPECT_EQ(a.p_kw(3), b.p_kw(3));
  for (double v : a.p_kw(3)) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 100.0);
  }
}

TEST(Profiles, SliceKeepsTimestamps) {
  const Network net = chain(3);
  BaseLoadShape shape;
  shape.days = 2;
  const LoadProfileSet full = synthesize_base_profiles(net, shape);
  const LoadProfileSet part = full.slice(5, 10);
  EXPECT_EQ(part.start(), full.timestamp(5));
  EXPECT_EQ(part.p_kw(2)[0], full.p_kw(2)[5]);
  EXPECT_THROW(full.slice(40, 10), InputError);
}

TEST(Time, TimestampRoundTrip) {
  const Timestamp ts = make_timestamp(2024, 2, 29, 23);
  EXPECT_EQ(to_string(ts), "2024-02-29T23:00");
  EXPECT_EQ(parse_timestamp("2024-02-29T23:00"), ts);
  EXPECT_EQ(hour_of_day(ts), 23);
  EXPECT_EQ(to_string(date_of(ts)), "2024-02-29");
  EXPECT_THROW(make_timestamp(2023, 2, 29), InputError);
}
