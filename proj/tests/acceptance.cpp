// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Reference values come from the oracles in oracles.hpp.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cli.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "poleplan/coverage.hpp"
#include "poleplan/immune.hpp"
#include "poleplan/ingest.hpp"
#include "poleplan/pipeline.hpp"
#include "poleplan/service.hpp"

using namespace poleplan;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const geo::BBoxLTRD kBox(geo::GeoPoint(42.37, -71.12), geo::GeoPoint(42.35, -71.10));

// Instances shared by the optimality and greedy criteria.
struct SmallInstance {
  coverage::PlanProblem problem;
  int opt;
};

std::vector<SmallInstance> small_instances() {
  Rng rng(20240611);
  std::vector<SmallInstance> out;
  for (int i = 0; i < 240; ++i) {
    const std::size_t n = 3 + rng.below(13);
    const std::size_t m = 5 + rng.below(36);
    auto p = oracle::random_geo_instance(rng, n, m);
    const int opt = oracle::min_cover(oracle::row_masks(p)).size;
    out.push_back({std::move(p), opt});
  }
  return out;
}

Verdict oracle_optimality(const std::vector<SmallInstance>& instances) {
  const auto t0 = Clock::now();
  std::size_t full = 0, optimal = 0, below_opt = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    const auto r = immune::run(inst.problem, immune::ImmuneParams{}, i);
    if (r.covered == inst.problem.n_coverable) ++full;
    const int size = static_cast<int>(r.selected.size());
    if (size < inst.opt) ++below_opt;
    if (size == inst.opt && r.covered == inst.problem.n_coverable) ++optimal;
  }
  const double elapsed = seconds_since(t0);
  const std::size_t n = instances.size();
  const double rate = static_cast<double>(optimal) / static_cast<double>(n);
  Verdict v;
  v.pass = full == n && below_opt == 0 && rate >= 0.90 && elapsed < 60.0;
  v.detail = fmt("%zu instances, full cover %zu/%zu, below optimum %zu, exactly optimal %.1f%%, %.2f s",
                 n, full, n, below_opt, 100.0 * rate, elapsed);
  return v;
}

Verdict greedy_bound(const std::vector<SmallInstance>& instances) {
  std::size_t violations = 0;
  for (const auto& inst : instances) {
    const auto g = immune::greedy_cover(inst.problem);
    const double mp = static_cast<double>(inst.problem.n_coverable);
    const double bound = mp > 0 ? (std::log(mp) + 1.0) * inst.opt : 0.0;
    if (static_cast<double>(g.count()) > bound + 1e-9) ++violations;
    if (coverage::coverage_count(inst.problem, g).covered != inst.problem.n_coverable) ++violations;
  }
  return {violations == 0, fmt("%zu instances, %zu violations", instances.size(), violations)};
}

Verdict fitness_order() {
  Rng rng(99);
  std::size_t pairs = 0, strict = 0, violations = 0;
  while (pairs < 10000) {
    const std::size_t n = 2 + rng.below(60), m = 1 + rng.below(120);
    auto p = oracle::random_set_instance(rng, n, m, rng.uniform(0.02, 0.3));
    for (int k = 0; k < 100 && pairs < 10000; ++k, ++pairs) {
      BitVec x(n), y(n);
      const double dx = rng.uniform(), dy = rng.uniform();
      for (std::size_t i = 0; i < n; ++i) {
        if (rng.uniform() < dx) x.set(i);
        if (rng.uniform() < dy) y.set(i);
      }
      // Coverage from the raw rows, not the library evaluator.
      auto cov = [&](const BitVec& s) {
        std::size_t c = 0;
        for (std::size_t j = 0; j < m; ++j) {
          for (std::size_t i = 0; i < n; ++i) {
            if (s.test(i) && p.matrix.covers(i, j)) {
              ++c;
              break;
            }
          }
        }
        return c;
      };
      const std::size_t cx = cov(x), cy = cov(y);
      if (cx == cy) continue;
      ++strict;
      const double fx = immune::fitness(p, x), fy = immune::fitness(p, y);
      if ((cx > cy) != (fx > fy)) ++violations;
    }
  }
  return {violations == 0,
          fmt("%zu pairs (%zu with unequal coverage), %zu violations", pairs, strict, violations)};
}

Verdict determinism() {
  const auto dir = std::filesystem::temp_directory_path() / "poleplan_acceptance_det";
  std::filesystem::create_directories(dir);
  const std::string det = (dir / "det.csv").string();
  std::ostringstream sink, serr;
  cli::run({"synth", "--seed", "11", "--bbox", "42.37,-71.12,42.35,-71.10", "--poles", "60",
            "--dup-rate", "1", "--jitter", "2", "--out", det},
           sink, serr);
  auto plan = [&] {
    std::ostringstream out, err;
    const int code = cli::run({"plan", "--detections", det, "--bbox", "42.37,-71.12,42.35,-71.10",
                               "--seed", "5"},
                              out, err);
    return std::make_pair(code, out.str());
  };
  const auto a = plan(), b = plan();
  const bool cli_ok = a.first == 0 && !a.second.empty() && a.second == b.second;

  service::JobManager jobs(service::ServiceConfig{2, 16, std::nullopt});
  const json req{{"bbox", {{"lt", {{"lat", 42.37}, {"lon", -71.12}}},
                           {"rd", {{"lat", 42.35}, {"lon", -71.10}}}}},
                 {"seed", 8},
                 {"scenario", {{"seed", 4}, {"n_poles", 50}, {"dup_rate", 1.0}, {"jitter_m", 2.0}}}};
  std::vector<std::string> bodies;
  std::vector<std::string> ids;
  for (int i = 0; i < 3; ++i) {
    ids.push_back(json::parse(jobs.submit(req.dump()).body).at("job_id"));
  }
  for (const auto& id : ids) {
    jobs.wait_terminal(id, std::chrono::seconds(120));
    bodies.push_back(jobs.result(id).body);
  }
  const bool svc_ok = !bodies[0].empty() && bodies[0] == bodies[1] && bodies[1] == bodies[2] &&
                      jobs.state(ids[0]) == service::JobState::done;
  std::filesystem::remove_all(dir);
  return {cli_ok && svc_ok,
          fmt("cli plan bytes identical: %s (%zu bytes); service scenario results identical: %s",
              cli_ok ? "yes" : "no", a.second.size(), svc_ok ? "yes" : "no")};
}

Verdict exclusion() {
  // A river band across the box, as a lon/lat ring for the oracle.
  const std::vector<std::pair<double, double>> ring{
      {-71.125, 42.3585}, {-71.095, 42.3605}, {-71.095, 42.3625}, {-71.125, 42.3605}};
  std::vector<geo::GeoPoint> verts;
  for (auto [x, y] : ring) verts.emplace_back(y, x);
  const geo::Polygon river(verts);
  auto in_river = [&](const geo::GeoPoint& p) {
    return oracle::winding_number(p.lon(), p.lat(), ring) != 0;
  };

  PlanSettings s;
  s.bbox = kBox;
  s.exclusions = {river};
  s.seed = 3;
  const auto det = ingest::synth_scenario(21, kBox, 120, 0.8, 2.0);
  const auto cands = ingest::dedup_merge(det, s.r_merge_m);
  std::size_t expected_dropped = 0;
  for (const auto& c : cands) expected_dropped += in_river(c.point);

  const auto outcome = run_pipeline(det, s);
  const auto parsed = parse_plan_geojson(plan_to_geojson(outcome, s));
  std::size_t bad = 0;
  for (const auto& c : parsed.candidates) bad += in_river(c.point);
  for (std::size_t id : parsed.selected) {
    for (const auto& c : parsed.candidates) {
      if (c.id == id) bad += in_river(c.point);
    }
  }
  std::size_t bad_demand = 0;
  for (const auto& p : outcome.problem.demand.points) bad_demand += in_river(p);
  std::size_t dropped_ok = 0;
  for (const auto& c : parsed.excluded) dropped_ok += in_river(c.point);

  const bool pass = expected_dropped > 0 && bad == 0 && bad_demand == 0 &&
                    parsed.excluded.size() == expected_dropped && dropped_ok == expected_dropped &&
                    parsed.summary.excluded_count == expected_dropped &&
                    parsed.summary.coverage == 1.0;
  return {pass, fmt("%zu candidates, %zu inside river reported as excluded (%zu expected), "
                    "%zu kept/selected inside, %zu demand inside, coverage %.4f",
                    cands.size(), parsed.excluded.size(), expected_dropped, bad, bad_demand,
                    parsed.summary.coverage)};
}

Verdict dedup_conservation() {
  Rng rng(5150);
  std::size_t fuzz_fail = 0;
  const std::size_t fuzz_cases = 500;
  for (std::size_t t = 0; t < fuzz_cases; ++t) {
    std::vector<ingest::DetectionRecord> recs;
    const std::size_t clusters = rng.below(30);
    for (std::size_t k = 0; k < clusters; ++k) {
      const double lat = 42.35 + 0.002 * rng.uniform(), lon = -71.10 + 0.002 * rng.uniform();
      const std::size_t copies = 1 + rng.below(6);
      for (std::size_t c = 0; c < copies; ++c) {
        const double jl = (rng.uniform() - 0.5) * 1e-4, jo = (rng.uniform() - 0.5) * 1e-4;
        const double conf = rng.below(10) == 0 ? 0.0 : rng.uniform();
        recs.emplace_back(geo::GeoPoint(lat + jl, lon + jo), conf, "d" + std::to_string(recs.size()));
      }
    }
    const double r = rng.uniform(0.5, 30.0);
    const auto out = ingest::dedup_merge(recs, r);
    std::size_t support = 0;
    for (const auto& c : out) support += c.support;
    if (support != recs.size()) ++fuzz_fail;
  }

  std::size_t bij_fail = 0;
  const std::size_t bij_cases = 100;
  for (std::size_t seed = 0; seed < bij_cases; ++seed) {
    const auto recs = ingest::synth_scenario(seed, kBox, 1 + seed % 80, 0.0, 0.0);
    const auto out = ingest::dedup_merge(recs, ingest::kDefaultMergeRadiusM);
    std::multiset<std::pair<double, double>> a, b;
    for (const auto& d : recs) a.insert({d.point.lat(), d.point.lon()});
    for (const auto& c : out) {
      b.insert({c.point.lat(), c.point.lon()});
      if (c.support != 1) ++bij_fail;
    }
    if (a != b) ++bij_fail;
  }
  return {fuzz_fail == 0 && bij_fail == 0,
          fmt("%zu fuzzed inputs, %zu conservation failures; %zu jitter-0/dup-0 scenarios, %zu "
              "non-bijective",
              fuzz_cases, fuzz_fail, bij_cases, bij_fail)};
}

Verdict performance() {
  // About 5 km square at 50 m spacing: a 100 x 100 demand grid.
  const double side_lat = 4990.0 / geo::meters_per_degree_lat();
  const double side_lon = 4990.0 / geo::meters_per_degree_lon(42.36);
  const geo::BBoxLTRD box(geo::GeoPoint(42.36 + side_lat / 2, -71.10 - side_lon / 2),
                          geo::GeoPoint(42.36 - side_lat / 2, -71.10 + side_lon / 2));
  Rng rng(2024);
  std::vector<ingest::PoleCandidate> cands;
  for (std::size_t i = 0; i < 2000; ++i) {
    cands.push_back({i,
                     geo::GeoPoint(rng.uniform(box.south(), box.north()),
                                   rng.uniform(box.west(), box.east())),
                     1.0, 1});
  }
  const auto t0 = Clock::now();
  const auto problem = coverage::build_problem(std::move(cands), box, 150.0, 50.0, {});
  const double build_s = seconds_since(t0);

  immune::ImmuneParams params;
  params.pop_size = 50;
  params.max_generations = 200;
  params.stall_limit = 1000;
  const auto t1 = Clock::now();
  const auto r = immune::run(problem, params, 1);
  const double run_s = seconds_since(t1);

  double trace_sum = 0, trace_max = 0;
  for (const auto& e : r.trace) {
    trace_sum += e.elapsed_s;
    trace_max = std::max(trace_max, e.elapsed_s);
  }
  const double mean_gen = r.trace.empty() ? 0 : trace_sum / static_cast<double>(r.trace.size());
  const double total = build_s + run_s;
  const bool pass = problem.n_candidates() == 2000 && problem.n_demand() == 10000 &&
                    r.generations_run == 200 && r.trace.size() == 200 && total < 60.0;
  return {pass, fmt("N=%zu M=%zu, build %.2f s, %zu generations %.2f s (mean %.1f ms/gen, max "
                    "%.1f ms), total %.2f s, %zu poles, coverage %.4f",
                    problem.n_candidates(), problem.n_demand(), build_s, r.generations_run, run_s,
                    1e3 * mean_gen, 1e3 * trace_max, total, r.selected.size(), r.cov)};
}

Verdict geo_accuracy() {
  const double equator = std::numbers::pi * oracle::kR / 180.0;
  const double meridian = std::numbers::pi * oracle::kR / 2.0;
  const double e1 = std::abs(geo::haversine_m(geo::GeoPoint(0, 0), geo::GeoPoint(0, 1)) - equator);
  const double e2 = std::abs(geo::haversine_m(geo::GeoPoint(0, 0), geo::GeoPoint(90, 0)) - meridian);
  const double e3 =
      std::abs(geo::haversine_m(geo::GeoPoint(-45, 30), geo::GeoPoint(45, 30)) - meridian);
  const double e4 = geo::haversine_m(geo::GeoPoint(42.3601, -71.0589), geo::GeoPoint(42.3601, -71.0589));
  const double worst = std::max({e1, e2, e3, e4});

  Rng rng(4242);
  std::size_t disagreements = 0;
  const std::size_t cases = 1000;
  for (std::size_t i = 0; i < cases; ++i) {
    // Star-shaped simple polygon with random radii.
    const double cx = rng.uniform(-1, 1), cy = rng.uniform(-1, 1);
    const std::size_t k = 3 + rng.below(10);
    std::vector<double> angles(k);
    for (auto& a : angles) a = rng.uniform(0, 2 * std::numbers::pi);
    std::sort(angles.begin(), angles.end());
    std::vector<geo::GeoPoint> verts;
    std::vector<std::pair<double, double>> ring;
    for (double a : angles) {
      const double rad = rng.uniform(0.2, 1.0);
      const double x = cx + rad * std::cos(a), y = cy + rad * std::sin(a);
      verts.emplace_back(y, x);
      ring.emplace_back(x, y);
    }
    const geo::Polygon poly(verts);
    const double px = rng.uniform(-2, 2), py = rng.uniform(-2, 2);
    if (geo::point_in_polygon(geo::GeoPoint(py, px), poly) !=
        (oracle::winding_number(px, py, ring) != 0)) {
      ++disagreements;
    }
  }
  return {worst <= 0.1 && disagreements == 0,
          fmt("worst closed-form error %.6f m; polygon %zu cases, %zu disagreements", worst, cases,
              disagreements)};
}

Verdict service_contract() {
  using service::JobState;
  service::JobManager jobs(service::ServiceConfig{1, 16, std::nullopt});
  std::vector<std::string> problems;
  auto expect = [&](bool ok, const char* what) {
    if (!ok) problems.emplace_back(what);
  };

  const json bbox{{"lt", {{"lat", 42.37}, {"lon", -71.12}}}, {"rd", {{"lat", 42.35}, {"lon", -71.10}}}};
  const json quick{{"bbox", bbox}, {"scenario", {{"seed", 1}, {"n_poles", 40}, {"dup_rate", 1.0}, {"jitter_m", 2.0}}}};
  const json endless{{"bbox", bbox},
                     {"grid_spacing_m", 20},
                     {"immune", {{"max_generations", 100000000}, {"stall_limit", 100000000}}},
                     {"scenario", {{"seed", 2}, {"n_poles", 300}}}};

  // submit -> poll monotone progress -> result
  const auto sub = jobs.submit(quick.dump());
  expect(sub.status == 202, "submit not 202");
  const std::string id = json::parse(sub.body).value("job_id", "");
  std::size_t last = 0;
  bool monotone = true;
  for (int i = 0; i < 12000; ++i) {
    const auto doc = json::parse(jobs.status(id).body);
    const auto g = doc.at("progress").at("generation").get<std::size_t>();
    monotone = monotone && g >= last;
    last = g;
    if (doc.at("state") == "done") break;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  expect(monotone, "progress not monotone");
  expect(jobs.state(id) == JobState::done, "job did not finish");
  const auto res = jobs.result(id);
  expect(res.status == 200, "result not 200");
  if (res.status == 200) {
    const auto plan = parse_plan_geojson(res.body);
    std::set<std::size_t> ids;
    for (const auto& c : plan.candidates) ids.insert(c.id);
    bool subset = !plan.selected.empty();
    for (auto s : plan.selected) subset = subset && ids.count(s) == 1;
    expect(subset, "selected not a subset of candidates");
  }

  // error statuses
  json inverted = quick;
  inverted["bbox"]["lt"]["lat"] = 42.30;
  expect(jobs.submit(inverted.dump()).status == 400, "inverted bbox not 400");
  json both = quick;
  both["detections"] = json::array();
  expect(jobs.submit(both.dump()).status == 422, "both sources not 422");
  expect(jobs.status("missing").status == 404, "unknown id not 404");

  // cancel semantics: running, queued, done
  const std::string run_id = json::parse(jobs.submit(endless.dump()).body).at("job_id");
  for (int i = 0; i < 4000 && jobs.state(run_id) != JobState::running; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  const std::string q_id = json::parse(jobs.submit(quick.dump()).body).at("job_id");
  expect(jobs.state(q_id) == JobState::queued, "second job not queued");
  expect(jobs.result(run_id).status == 409, "result of running job not 409");
  expect(jobs.cancel(q_id).status == 202 && jobs.state(q_id) == JobState::cancelled,
         "queued cancel not immediate");
  expect(jobs.cancel(run_id).status == 202, "running cancel not 202");
  expect(jobs.wait_terminal(run_id, std::chrono::seconds(30)) &&
             jobs.state(run_id) == JobState::cancelled,
         "running job not cancelled");
  expect(jobs.cancel(id).status == 202 && jobs.state(id) == JobState::done,
         "cancel changed a done job");
  expect(jobs.health().status == 200, "health not 200");

  std::string detail = problems.empty() ? "submit/poll/result/cancel/errors as specified"
                                        : "";
  for (const auto& p : problems) detail += (detail.empty() ? "" : "; ") + p;
  return {problems.empty(), detail};
}

}  // namespace

int main() {
  std::cout << "poleplan acceptance\n";
  int failures = 0;
  auto report = [&](const char* name, const std::function<Verdict()>& check) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
  };

  const auto instances = small_instances();
  report("oracle-optimality", [&] { return oracle_optimality(instances); });
  report("greedy-bound", [&] { return greedy_bound(instances); });
  report("fitness-lexicographic", fitness_order);
  report("determinism", determinism);
  report("exclusion", exclusion);
  report("dedup-conservation", dedup_conservation);
  report("performance", performance);
  report("geo-accuracy", geo_accuracy);
  report("service-contract", service_contract);

  std::cout << (failures == 0 ? "ALL PASS" : fmt("%d FAILED", failures)) << std::endl;
  return failures == 0 ? 0 : 1;
}
