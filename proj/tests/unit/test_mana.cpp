#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>
#include <tuple>

#include "nslf/core/errors.hpp"
#include "nslf/mana/distribute.hpp"
#include "nslf/mana/runtime.hpp"
#include "test_util.hpp"

using namespace nslf;
using namespace std::chrono_literals;

namespace {

RegionGridConfig grid_0_12() {
  RegionGridConfig g;
  g.b_min = {0, 0, 0};
  g.b_max = {12, 12, 12};
  g.cell_edge = 4;
  return g;
}

ModelSpec small_spec(ModelKind kind = ModelKind::NslfSh) {
  ModelSpec s;
  s.kind = kind;
  s.grid.levels = 2;
  s.grid.log2_table_size = 8;
  s.grid.base_resolution = 4;
  s.grid.max_resolution = 8;
  return s;
}

ManaConfig small_config(bool deterministic = true) {
  ManaConfig c;
  c.grid = grid_0_12();
  c.model = small_spec();
  c.quota = 10;
  c.batch_size = 16;
  c.seed = 3;
  c.deterministic = deterministic;
  return c;
}

ColoredPointBatch points_in(const Vec3d& lo, const Vec3d& hi, std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ColoredPointBatch b;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3d p{lo.x + (hi.x - lo.x) * u(rng), lo.y + (hi.y - lo.y) * u(rng), lo.z + (hi.z - lo.z) * u(rng)};
    b.push_back(p, Vec3f(test::random_unit(rng)), Vec3f(Vec3d{u(rng), u(rng), u(rng)}));
  }
  return b;
}

using Sample = std::tuple<float, float, float, float, float, float>;

}  // namespace

TEST_SUITE("mana") {
  TEST_CASE("region_of: examples, boundary convention and routing errors") {
    const RegionGridConfig g = grid_0_12();
    CHECK(region_of(g.b_min, g) == RegionIndex{0, 0, 0});
    CHECK(region_of({4.5, 0.2, 8.0}, g) == RegionIndex{1, 0, 2});
    CHECK(region_of({4.0, 0.0, 0.0}, g).ix == 1);
    CHECK(region_of({12.0, 12.0, 12.0}, g) == RegionIndex{2, 2, 2});
    CHECK_THROWS_AS(region_of({12.01, 1, 1}, g), RoutingError);
    CHECK_THROWS_AS(region_of({-0.01, 1, 1}, g), RoutingError);
    RegionIndex out;
    CHECK(!try_region_of({1, 1, 13}, g, out));
    CHECK(g.cell_counts() == std::array<int, 3>{3, 3, 3});

    RegionGridConfig uneven = g;
    uneven.b_max = {10, 12, 12};
    CHECK(uneven.cell_counts()[0] == 3);
    CHECK(region_of({9.99, 0, 0}, uneven).ix == 2);
    RegionGridConfig bad = g;
    bad.cell_edge = 0;
    CHECK_THROWS(bad.validate());
  }

  TEST_CASE("to_region_unit maps the cell onto the unit cube") {
    const RegionGridConfig g = grid_0_12();
    const RegionIndex r{1, 0, 2};
    CHECK(region_origin(r, g) == Vec3d{4, 0, 8});
    const Vec3f u = to_region_unit({5.0, 3.0, 8.0}, r, g);
    CHECK(u.x == doctest::Approx(0.25));
    CHECK(u.y == doctest::Approx(0.75));
    CHECK(u.z == doctest::Approx(0.0));
  }

  TEST_CASE("distribute: single region, empty batch, rejected points") {
    std::mt19937_64 rng(1);
    const RegionGridConfig g = grid_0_12();
    const auto one = points_in({4.1, 4.1, 4.1}, {7.9, 7.9, 7.9}, 50, rng);
    const Distribution d = distribute(one, g);
    REQUIRE(d.batches.size() == 1);
    CHECK(d.batches.at({1, 1, 1}).size() == 50);
    CHECK(distribute(ColoredPointBatch{}, g).batches.empty());

    ColoredPointBatch mixed = one;
    mixed.push_back({20, 1, 1}, {0, 0, 1}, {0, 0, 0});
    mixed.push_back({1, 1, 1}, {0, 0, 1}, {0, 0, 0});
    mixed.push_back({1, -5, 1}, {0, 0, 1}, {0, 0, 0});
    const Distribution dm = distribute(mixed, g);
    CHECK(dm.rejected == std::vector<std::size_t>{50, 52});
    CHECK(dm.batches.at({0, 0, 0}).size() == 1);
  }

  TEST_CASE("property: distribute equals a brute-force loop and conserves the multiset") {
    const RegionGridConfig g = grid_0_12();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      std::mt19937_64 rng(seed);
      const auto batch = points_in({0, 0, 0}, {12, 12, 12}, 10000, rng);
      const Distribution d = distribute(batch, g);
      std::map<RegionIndex, std::vector<std::size_t>> oracle;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const Vec3d& p = batch.points[i];
        RegionIndex r{std::min(2, static_cast<int>(std::floor(p.x / 4))),
                      std::min(2, static_cast<int>(std::floor(p.y / 4))),
                      std::min(2, static_cast<int>(std::floor(p.z / 4)))};
        oracle[r].push_back(i);
      }
      CHECK(d.source_indices == oracle);
      CHECK(d.batches.size() == 27);

      std::vector<Sample> in, out;
      std::size_t total = 0;
      for (const auto& [r, tb] : d.batches) {
        const auto& src = d.source_indices.at(r);
        total += tb.size();
        for (std::size_t k = 0; k < tb.size(); ++k) {
          const std::size_t i = src[k];
          // remapped point re-maps to its own region and back to the source point
          const Vec3d world = region_origin(r, g) + Vec3d(tb.points[k]) * g.cell_edge;
          CHECK(norm(world - batch.points[i]) < 1e-5);
          CHECK(tb.colors[k] == batch.colors[i]);
          CHECK(tb.directions[k] == batch.directions[i]);
          out.emplace_back(tb.colors[k].x, tb.colors[k].y, tb.colors[k].z, tb.directions[k].x, tb.directions[k].y,
                           tb.directions[k].z);
        }
      }
      for (std::size_t i = 0; i < batch.size(); ++i)
        in.emplace_back(batch.colors[i].x, batch.colors[i].y, batch.colors[i].z, batch.directions[i].x,
                        batch.directions[i].y, batch.directions[i].z);
      std::sort(in.begin(), in.end());
      std::sort(out.begin(), out.end());
      CHECK(total == batch.size());
      CHECK(in == out);
    }
  }

  TEST_CASE("budgets: examples and invariants") {
    CHECK(assign_budgets({{{0, 0, 0}, 0}}, 0.0, 200) == std::vector<std::uint64_t>{200});
    CHECK(assign_budgets({{{0, 0, 0}, 1000}, {{1, 0, 0}, 0}}, median_of({1000, 0}), 200) ==
          std::vector<std::uint64_t>{0, 200});
    // equal loads: equal split, remainder by region order
    const auto eq = assign_budgets({{{0, 0, 1}, 5}, {{0, 0, 0}, 5}, {{1, 0, 0}, 5}}, 5.0, 200);
    CHECK(eq == std::vector<std::uint64_t>{67, 67, 66});
    CHECK(assign_budgets({}, 0.0, 200).empty());
    CHECK(median_of({}) == 0.0);
    CHECK(median_of({3, 1, 2}) == 2.0);
    CHECK(median_of({4, 1, 2, 3}) == 2.5);

    std::mt19937_64 rng(9);
    std::uniform_int_distribution<std::uint64_t> load(0, 5000), q(1, 1000);
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<BudgetCandidate> c;
      std::vector<std::uint64_t> all;
      const int n = 1 + trial % 9;
      for (int i = 0; i < n; ++i) {
        c.push_back({{i, 0, 0}, load(rng)});
        all.push_back(c.back().committed);
      }
      for (int extra = 0; extra < trial % 4; ++extra) all.push_back(load(rng));
      const double med = median_of(all);
      const std::uint64_t quota = q(rng);
      const auto grants = assign_budgets(c, med, quota);
      CHECK(std::accumulate(grants.begin(), grants.end(), std::uint64_t{0}) == quota);
      const bool any_below = std::any_of(c.begin(), c.end(), [&](auto& x) { return x.committed < med; });
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (any_below && c[i].committed >= med) CHECK(grants[i] == 0);
        // less loaded never receives less than a more loaded candidate (up to the leftover unit)
        for (std::size_t j = 0; j < c.size(); ++j)
          if (c[i].committed < c[j].committed) CHECK(grants[i] + 1 >= grants[j]);
      }
    }
  }

  TEST_CASE("runtime: feed then immediate snapshot keeps the data") {
    ManaConfig cfg = small_config(false);
    cfg.executors = 1;
    cfg.quota = 100000;
    ManaRuntime rt(cfg);
    std::mt19937_64 rng(2);
    const FeedAck ack = rt.feed_frame(points_in({0.5, 0.5, 0.5}, {3.5, 3.5, 3.5}, 200, rng));
    CHECK(ack.points == 200);
    CHECK(ack.routed == 200);
    CHECK(ack.agents_spawned == 1);
    CHECK(ack.granted == 100000);
    const Snapshot s = rt.quiesce_and_snapshot(DrainPolicy::PauseNow, 60s);
    CHECK(rt.mode() == RuntimeMode::Evaluation);
    const auto st = rt.stats();
    REQUIRE(st.size() == 1);
    CHECK(st[0].samples == 200);
    CHECK(st[0].slices == 1);
    CHECK(st[0].trained_iters < 100000);
    CHECK(s.models.size() == 1);
    CHECK(rt.total_granted() - rt.total_consumed() == rt.total_outstanding());
  }

  TEST_CASE("runtime: two feeds to one region stack two slices") {
    ManaRuntime rt(small_config());
    std::mt19937_64 rng(3);
    rt.feed_frame(points_in({0.5, 0.5, 0.5}, {3.5, 3.5, 3.5}, 30, rng));
    rt.feed_frame(points_in({0.5, 0.5, 0.5}, {3.5, 3.5, 3.5}, 40, rng));
    const auto st = rt.stats();
    REQUIRE(st.size() == 1);
    CHECK(st[0].slices == 2);
    CHECK(st[0].samples == 70);
    CHECK(st[0].trained_iters == 20);
    CHECK(st[0].budget == 0);
  }

  TEST_CASE("runtime: budget 5 equals five sequential train_steps calls") {
    ManaConfig cfg = small_config();
    cfg.quota = 5;
    std::mt19937_64 rng(4);
    const auto frame = points_in({4.2, 0.5, 0.5}, {7.8, 3.5, 3.5}, 64, rng);
    ManaRuntime rt(cfg);
    rt.feed_frame(frame);
    const Snapshot s = rt.quiesce_and_snapshot();
    const RegionIndex r{1, 0, 0};

    const AgentSeeds seeds = agent_seeds(cfg.seed, r);
    AnyModel direct = make_model(cfg.model, seeds.model);
    auto& m = std::get<NslfModel<float>>(direct);
    auto opt = AdamState<float>::for_params(m.parameter_blocks(), cfg.adam);
    DataMemory mem(cfg.memory_cap, seeds.memory);
    mem.append(std::make_shared<const TrainBatch>(distribute(frame, cfg.grid).batches.at(r)));
    std::mt19937_64 train_rng(seeds.train);
    for (int i = 0; i < 5; ++i) train_steps(m, opt, mem, 1, cfg.batch_size, train_rng);
    CHECK(bit_equal(s.models.at(r), direct));
    CHECK(s.trained_iters.at(r) == 5);
  }

  TEST_CASE("runtime: spawned agent with empty memory idles without error") {
    ManaConfig cfg = small_config(false);
    cfg.executors = 0;
    ManaRuntime rt(cfg);
    rt.spawn_agent({2, 2, 2});
    CHECK(rt.wait_idle(5s));
    const Snapshot s = rt.quiesce_and_snapshot();
    CHECK(bit_equal(s.models.at({2, 2, 2}), make_model(cfg.model, agent_seeds(cfg.seed, {2, 2, 2}).model)));
    CHECK(s.trained_iters.at({2, 2, 2}) == 0);
  }

  TEST_CASE("runtime: evaluation mode rejects feeds until resumed") {
    ManaRuntime rt(small_config());
    std::mt19937_64 rng(5);
    const auto frame = points_in({0.5, 0.5, 0.5}, {3.5, 3.5, 3.5}, 20, rng);
    rt.quiesce_and_snapshot();
    CHECK_THROWS_AS(rt.feed_frame(frame), StateError);
    rt.resume_training();
    CHECK(rt.mode() == RuntimeMode::Training);
    CHECK_NOTHROW(rt.feed_frame(frame));
  }

  TEST_CASE("runtime: zero agents give an empty snapshot") {
    ManaRuntime rt(small_config(false));
    const Snapshot s = rt.quiesce_and_snapshot();
    CHECK(s.models.empty());
    CHECK(rt.mode() == RuntimeMode::Evaluation);
    CHECK(rt.agent_count() == 0);
    const FeedAck ack = [] {
      ManaRuntime other(small_config());
      return other.feed_frame(ColoredPointBatch{});
    }();
    CHECK(ack.agents_spawned == 0);
    CHECK(ack.granted == 0);
  }

  TEST_CASE("runtime: pause-now snapshot is isolated from resumed training") {
    ManaConfig cfg = small_config(false);
    cfg.executors = 1;
    cfg.quota = 1000000;
    ManaRuntime rt(cfg);
    std::mt19937_64 rng(6);
    rt.feed_frame(points_in({0.5, 0.5, 0.5}, {3.5, 3.5, 3.5}, 100, rng));
    std::this_thread::sleep_for(50ms);
    const Snapshot s = rt.quiesce_and_snapshot(DrainPolicy::PauseNow, 60s);
    const AnyModel copy = s.models.at({0, 0, 0});
    const auto iters = s.trained_iters.at({0, 0, 0});
    rt.resume_training();
    std::this_thread::sleep_for(100ms);
    const Snapshot later = rt.quiesce_and_snapshot(DrainPolicy::PauseNow, 60s);
    CHECK(bit_equal(s.models.at({0, 0, 0}), copy));
    CHECK(later.trained_iters.at({0, 0, 0}) > iters);
    CHECK(!bit_equal(later.models.at({0, 0, 0}), copy));
  }

  TEST_CASE("runtime: drain timeout reports the backlog") {
    ManaConfig cfg = small_config(false);
    cfg.executors = 1;
    cfg.quota = 100000000;
    ManaRuntime rt(cfg);
    std::mt19937_64 rng(7);
    rt.feed_frame(points_in({0.5, 0.5, 0.5}, {3.5, 3.5, 3.5}, 100, rng));
    try {
      rt.quiesce_and_snapshot(DrainPolicy::Drain, 20ms);
      FAIL("expected TimeoutError");
    } catch (const TimeoutError& e) {
      CHECK(std::string(e.what()).find("(0,0,0)") != std::string::npos);
    }
    rt.quiesce_and_snapshot(DrainPolicy::PauseNow, 60s);
  }

  TEST_CASE("isolation: untouched agents keep their initial parameters") {
    ManaConfig cfg = small_config();
    ManaRuntime rt(cfg);
    rt.spawn_agent({1, 1, 1});
    rt.spawn_agent({2, 0, 1});
    std::mt19937_64 rng(8);
    rt.feed_frame(points_in({0.5, 0.5, 0.5}, {3.5, 3.5, 3.5}, 50, rng));
    rt.feed_frame(points_in({0.5, 0.5, 0.5}, {3.5, 3.5, 3.5}, 50, rng));
    const Snapshot s = rt.quiesce_and_snapshot();
    for (const RegionIndex r : {RegionIndex{1, 1, 1}, RegionIndex{2, 0, 1}})
      CHECK(bit_equal(s.models.at(r), make_model(cfg.model, agent_seeds(cfg.seed, r).model)));
    CHECK(!bit_equal(s.models.at({0, 0, 0}), make_model(cfg.model, agent_seeds(cfg.seed, {0, 0, 0}).model)));
  }

  TEST_CASE("determinism: the whole pipeline is bit-reproducible") {
    auto run = [] {
      ManaRuntime rt(small_config());
      std::mt19937_64 rng(10);
      for (int f = 0; f < 3; ++f) rt.feed_frame(points_in({0.5, 0.5, 0.5}, {11.5, 11.5, 3.5}, 300, rng));
      rt.quiesce_and_snapshot();
      std::mt19937_64 q(11);
      const auto probe = points_in({0.5, 0.5, 0.5}, {11.5, 11.5, 3.5}, 200, q);
      return rt.predict_batch(probe.points, probe.directions).colors;
    };
    CHECK(run() == run());
  }

  TEST_CASE("predict: routing oracle, uncovered gray, serial equals parallel") {
    ManaConfig cfg = small_config();
    ManaRuntime rt(cfg);
    std::mt19937_64 rng(12);
    rt.feed_frame(points_in({0.5, 0.5, 0.5}, {3.5, 3.5, 3.5}, 100, rng));
    rt.feed_frame(points_in({4.5, 0.5, 0.5}, {7.5, 3.5, 3.5}, 100, rng));
    rt.feed_frame(points_in({8.5, 8.5, 8.5}, {11.5, 11.5, 11.5}, 100, rng));
    const Snapshot s = rt.quiesce_and_snapshot();
    CHECK_THROWS_AS(ManaRuntime(cfg).predict_batch({}, {}), StateError);

    const auto probe = points_in({0, 0, 0}, {12, 12, 12}, 3000, rng);
    const Prediction par = predict_batch(s, probe.points, probe.directions);
    const Prediction ser = predict_batch_serial(s, probe.points, probe.directions);
    CHECK(par.colors == ser.colors);
    CHECK(par.covered == ser.covered);
    std::size_t uncovered = 0;
    for (std::size_t i = 0; i < probe.size(); ++i) {
      const RegionIndex r = region_of(probe.points[i], cfg.grid);
      auto it = s.models.find(r);
      if (it == s.models.end()) {
        CHECK(par.colors[i] == kUncoveredColor);
        CHECK(par.covered[i] == 0);
        ++uncovered;
      } else {
        CHECK(par.colors[i] == predict(it->second, to_region_unit(probe.points[i], r, cfg.grid), probe.directions[i]));
        CHECK(par.covered[i] == 1);
      }
    }
    CHECK(par.uncovered == uncovered);
    CHECK(uncovered > 0);

    const std::vector<Vec3d> outside{{20, 0, 0}};
    const std::vector<Vec3f> dir{{0, 0, 1}};
    CHECK_THROWS_AS(predict_batch(s, outside, dir), RoutingError);
    PredictOptions lenient;
    lenient.outside_as_uncovered = true;
    const Prediction o = predict_batch(s, outside, dir, lenient);
    CHECK(o.outside == 1);
    CHECK(o.colors[0] == kUncoveredColor);
  }

  TEST_CASE("snapshot checkpoint round-trips") {
    ManaConfig cfg = small_config();
    cfg.model = small_spec(ModelKind::Hg);
    ManaRuntime rt(cfg);
    std::mt19937_64 rng(13);
    rt.feed_frame(points_in({0.5, 0.5, 0.5}, {7.5, 3.5, 3.5}, 100, rng));
    const Snapshot s = rt.quiesce_and_snapshot();
    test::TempDir dir("snap");
    save_snapshot(dir.path(), s);
    CHECK(std::filesystem::exists(dir / "manifest.json"));
    CHECK(std::filesystem::exists(dir / "agent_1_0_0.nslf"));
    const Snapshot back = load_snapshot(dir.path());
    REQUIRE(back.models.size() == s.models.size());
    for (const auto& [r, m] : s.models) CHECK(bit_equal(back.models.at(r), m));
    CHECK(back.trained_iters == s.trained_iters);
    CHECK(back.grid.cell_edge == s.grid.cell_edge);
    CHECK(back.grid.b_max == s.grid.b_max);

    std::filesystem::remove(dir / "agent_1_0_0.nslf");
    CHECK_THROWS_AS(load_snapshot(dir.path()), DataError);
    CHECK_THROWS_AS(load_snapshot(dir / "nothing"), DataError);
  }
}
