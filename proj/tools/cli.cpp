#include "cli.hpp"

#include <signal.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "poleplan/error.hpp"
#include "poleplan/ingest.hpp"
#include "poleplan/pipeline.hpp"
#include "poleplan/service.hpp"
#include "poleplan/settings.hpp"

namespace poleplan::cli {
namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// "-" means standard output.
void write_output(const std::string& path, const std::string& content, std::ostream& out) {
  if (path == "-") {
    out << content;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError(path, "cannot open output file");
  f << content;
  if (!f) throw FormatError(path, "write failed");
}

std::vector<ingest::DetectionRecord> load_detections(const std::string& path,
                                                     const std::string& format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path, "cannot open detections file");
  const auto fmt = format.empty() ? ingest::format_from_path(path) : ingest::parse_format(format);
  try {
    return ingest::parse_detections(in, fmt);
  } catch (const FormatError& e) {
    throw FormatError(path, e.what());
  }
}

struct PlanFlags {
  std::string detections;
  std::string format;
  std::string bbox;
  std::string config;
  std::string exclusions;
  std::string out = "-";
  std::string trace_out;
  std::string dropped_out;
  double radius = 0;
  double grid = 0;
  double merge = 0;
  std::uint64_t seed = 0;
  std::size_t pop_size = 0, max_generations = 0, stall_limit = 0;
  double select_frac = 0, clone_beta = 0, p_min = 0, p_max = 0, suppress = 0, newcomer = 0,
         density = 0;
  bool no_greedy = false;
};

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {
    app_.require_subcommand(1);
    app_.fallthrough(false);
    setup_plan();
    setup_synth();
    setup_manifest();
    setup_dedup();
    setup_serve();
  }

  int operator()(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"poleplan"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
      app_.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
      out_ << help_for_active();
      return kOk;
    } catch (const CLI::CallForAllHelp&) {
      out_ << app_.help("", CLI::AppFormatMode::All);
      return kOk;
    } catch (const CLI::ParseError& e) {
      err_ << "error: " << e.what() << "\n\n" << help_for_active();
      return kUsage;
    }
    return code_;
  }

 private:
  std::string help_for_active() {
    for (CLI::App* sub : app_.get_subcommands()) return sub->help();
    return app_.help();
  }

  // Runs `body`, mapping library exceptions onto the exit-code scheme.
  template <typename F>
  void guarded(F&& body) {
    try {
      code_ = body();
    } catch (const CLI::ParseError&) {
      throw;
    } catch (const Infeasible& e) {
      err_ << "infeasible: " << e.what() << "\n";
      code_ = kInfeasible;
    } catch (const Error& e) {
      err_ << "input error: " << e.what() << "\n";
      code_ = kInput;
    } catch (const std::exception& e) {
      err_ << "error: " << e.what() << "\n";
      code_ = kInput;
    }
  }

  void setup_plan() {
    CLI::App* c = app_.add_subcommand("plan", "Plan a minimal pole set covering the bbox");
    c->add_option("--detections", plan_.detections, "Detection file (CSV or GeoJSON)")
        ->required();
    c->add_option("--format", plan_.format, "Detection format: csv | geojson (default: by extension)");
    c->add_option("--bbox", plan_.bbox, "Planning rectangle lt_lat,lt_lon,rd_lat,rd_lon");
    c->add_option("--config", plan_.config, "JSON config file; explicit flags override it");
    c->add_option("--exclusions", plan_.exclusions, "GeoJSON file of exclusion polygons");
    c->add_option("--radius", plan_.radius, "Coverage radius in metres (default 150)");
    c->add_option("--grid", plan_.grid, "Demand grid spacing in metres (default 50)");
    c->add_option("--merge", plan_.merge, "Detection merge radius in metres (default 5)");
    c->add_option("--seed", plan_.seed, "Optimizer seed (default 0)");
    c->add_option("--out", plan_.out, "Result GeoJSON path, '-' for stdout")->capture_default_str();
    c->add_option("--trace-out", plan_.trace_out, "Per-generation trace CSV");
    c->add_option("--pop-size", plan_.pop_size, "Antibodies per generation (default 50)");
    c->add_option("--max-generations", plan_.max_generations, "Generation cap (default 300)");
    c->add_option("--stall-limit", plan_.stall_limit,
                  "Stop after this many generations without improvement (default 50)");
    c->add_option("--select-frac", plan_.select_frac, "Fraction selected for cloning (default 0.2)");
    c->add_option("--clone-beta", plan_.clone_beta, "Clone multiplier (default 1.0)");
    c->add_option("--p-min", plan_.p_min, "Per-bit mutation rate of the best parent (default 1/N)");
    c->add_option("--p-max", plan_.p_max,
                  "Per-bit mutation rate of the worst parent (default min(5/N, 0.5))");
    c->add_option("--suppress-threshold", plan_.suppress,
                  "Normalized Hamming distance below which the weaker antibody is removed (default 0.05)");
    c->add_option("--newcomer-frac", plan_.newcomer, "Fraction of fresh antibodies per generation (default 0.1)");
    c->add_option("--init-density", plan_.density, "Set-bit probability of random antibodies (default 0.1)");
    c->add_flag("--no-greedy-seed", plan_.no_greedy, "Do not seed the population with the greedy cover");
    c->callback([this, c] { guarded([&] { return cmd_plan(*c); }); });
  }

  int cmd_plan(const CLI::App& c) {
    PlanSettings s;
    if (!plan_.config.empty()) s = settings_from_json(read_file(plan_.config));
    auto given = [&](const char* flag) { return c.count(flag) > 0; };
    try {
      if (given("--bbox")) s.bbox = parse_bbox_flag(plan_.bbox);
    } catch (const InvalidArgument& e) {
      err_ << "error: --bbox: " << e.what() << "\n";
      return kUsage;
    }
    if (!s.bbox) {
      err_ << "error: a bbox is required (--bbox or config)\n\n" << c.help();
      return kUsage;
    }
    if (!plan_.exclusions.empty()) s.exclusions = ingest::parse_exclusion_zones(read_file(plan_.exclusions));
    if (given("--radius")) s.radius_m = plan_.radius;
    if (given("--grid")) s.grid_spacing_m = plan_.grid;
    if (given("--merge")) s.r_merge_m = plan_.merge;
    if (given("--seed")) s.seed = plan_.seed;
    auto& im = s.immune;
    if (given("--pop-size")) im.pop_size = plan_.pop_size;
    if (given("--max-generations")) im.max_generations = plan_.max_generations;
    if (given("--stall-limit")) im.stall_limit = plan_.stall_limit;
    if (given("--select-frac")) im.select_frac = plan_.select_frac;
    if (given("--clone-beta")) im.clone_beta = plan_.clone_beta;
    if (given("--p-min")) im.p_min = plan_.p_min;
    if (given("--p-max")) im.p_max = plan_.p_max;
    if (given("--suppress-threshold")) im.suppress_threshold = plan_.suppress;
    if (given("--newcomer-frac")) im.newcomer_frac = plan_.newcomer;
    if (given("--init-density")) im.init_density = plan_.density;
    if (plan_.no_greedy) im.seed_greedy = false;
    try {
      s.validate();
    } catch (const InvalidArgument& e) {
      err_ << "error: " << e.what() << "\n";
      return kUsage;
    }

    const auto t0 = std::chrono::steady_clock::now();
    const auto detections = load_detections(plan_.detections, plan_.format);
    PlanOutcome outcome = run_pipeline(detections, s);
    write_output(plan_.out, plan_to_geojson(outcome, s), out_);

    if (!plan_.trace_out.empty()) {
      std::ostringstream t;
      t << "generation,best_fitness,best_cov,best_size,elapsed_s\n";
      t << std::setprecision(17);
      for (const auto& e : outcome.result.trace) {
        t << e.generation << ',' << e.best_fitness << ',' << e.best_cov << ',' << e.best_size
          << ',' << e.elapsed_s << '\n';
      }
      write_output(plan_.trace_out, t.str(), out_);
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    // Keep stdout clean when the GeoJSON itself goes there.
    std::ostream& summary = plan_.out == "-" ? err_ : out_;
    const auto& r = outcome.result;
    summary << "detections:  " << outcome.detection_count << "\n"
            << "candidates:  " << outcome.problem.candidates.size() << " ("
            << outcome.dropped.size() << " excluded)\n"
            << "selected:    " << r.selected.size() << "\n"
            << "coverage:    " << std::fixed << std::setprecision(2) << 100.0 * r.cov << "% of "
            << outcome.problem.n_coverable << " coverable demand points ("
            << r.uncoverable.size() << " uncoverable)\n"
            << "generations: " << r.generations_run << "\n"
            << "wall time:   " << std::setprecision(3) << wall << " s\n";
    summary.unsetf(std::ios::fixed);
    return kOk;
  }

  void setup_synth() {
    CLI::App* c = app_.add_subcommand("synth", "Write a synthetic detection CSV");
    c->add_option("--seed", synth_seed_, "Generator seed")->capture_default_str();
    c->add_option("--bbox", synth_bbox_, "Rectangle lt_lat,lt_lon,rd_lat,rd_lon")->required();
    c->add_option("--poles", synth_poles_, "Number of true poles")->capture_default_str();
    c->add_option("--dup-rate", synth_dup_, "Mean extra detections per pole (Poisson)")
        ->capture_default_str();
    c->add_option("--jitter", synth_jitter_, "Max offset of extra detections in metres")
        ->capture_default_str();
    c->add_option("--out", synth_out_, "Output CSV path, '-' for stdout")->capture_default_str();
    c->callback([this] {
      guarded([&] {
        geo::BBoxLTRD bbox = parse_bbox_or_usage(synth_bbox_);
        if (!(synth_dup_ >= 0.0) || !(synth_jitter_ >= 0.0)) {
          throw CLI::ValidationError("--dup-rate and --jitter must be non-negative");
        }
        auto recs = ingest::synth_scenario(synth_seed_, bbox, synth_poles_, synth_dup_, synth_jitter_);
        std::ostringstream ss;
        ingest::write_detections_csv(ss, recs);
        write_output(synth_out_, ss.str(), out_);
        return kOk;
      });
    });
  }

  void setup_manifest() {
    CLI::App* c = app_.add_subcommand("manifest", "Write the street-imagery capture manifest");
    c->add_option("--bbox", man_bbox_, "Rectangle lt_lat,lt_lon,rd_lat,rd_lon")->required();
    c->add_option("--spacing", man_spacing_, "Capture grid spacing in metres")
        ->capture_default_str();
    c->add_option("--url-template", man_template_,
                  "Optional URL template with {lat} {lon} {heading} {fov}");
    c->add_option("--out", man_out_, "Output JSON path, '-' for stdout")->capture_default_str();
    c->callback([this, c] {
      guarded([&] {
        geo::BBoxLTRD bbox = parse_bbox_or_usage(man_bbox_);
        if (!(man_spacing_ > 0.0)) throw CLI::ValidationError("--spacing must be positive");
        std::optional<std::string> tmpl;
        if (c->count("--url-template") > 0) tmpl = man_template_;
        auto entries = ingest::build_capture_manifest(bbox, man_spacing_, tmpl);
        write_output(man_out_, ingest::manifest_to_json(entries), out_);
        return kOk;
      });
    });
  }

  void setup_dedup() {
    CLI::App* c = app_.add_subcommand("dedup", "Merge repeated detections into candidates");
    c->add_option("--detections", dd_in_, "Detection file (CSV or GeoJSON)")->required();
    c->add_option("--format", dd_format_, "Detection format: csv | geojson");
    c->add_option("--merge", dd_merge_, "Merge radius in metres")->capture_default_str();
    c->add_option("--out", dd_out_, "Candidate CSV path, '-' for stdout")->capture_default_str();
    c->callback([this] {
      guarded([&] {
        if (!(dd_merge_ > 0.0)) throw CLI::ValidationError("--merge must be positive");
        auto recs = load_detections(dd_in_, dd_format_);
        auto candidates = ingest::dedup_merge(recs, dd_merge_);
        std::ostringstream ss;
        ingest::write_candidates_csv(ss, candidates);
        write_output(dd_out_, ss.str(), out_);
        return kOk;
      });
    });
  }

  void setup_serve() {
    CLI::App* c = app_.add_subcommand("serve", "Run the planning HTTP service");
    c->add_option("--host", srv_host_, "Listen address")->capture_default_str();
    c->add_option("--port", srv_port_, "Listen port")->capture_default_str();
    c->add_option("--workers", srv_workers_, "Concurrent planning jobs")->capture_default_str();
    c->add_option("--max-queue", srv_queue_, "Queued jobs before 503")->capture_default_str();
    c->add_option("--results-dir", srv_dir_, "Write finished results here (optional)");
    c->callback([this] { guarded([&] { return cmd_serve(); }); });
  }

  int cmd_serve() {
    if (srv_workers_ == 0) throw CLI::ValidationError("--workers must be at least 1");

    // Block termination signals before any thread starts so only the
    // dedicated waiter below receives them.
    sigset_t sigs;
    sigemptyset(&sigs);
    sigaddset(&sigs, SIGINT);
    sigaddset(&sigs, SIGTERM);
    sigset_t old;
    pthread_sigmask(SIG_BLOCK, &sigs, &old);
    struct RestoreMask {
      sigset_t mask;
      ~RestoreMask() { pthread_sigmask(SIG_SETMASK, &mask, nullptr); }
    } restore{old};

    service::ServiceConfig cfg;
    cfg.workers = srv_workers_;
    cfg.max_queue = srv_queue_;
    if (!srv_dir_.empty()) cfg.results_dir = srv_dir_;
    service::JobManager jobs(cfg);
    service::HttpServer server(jobs);
    if (!server.bind(srv_host_, srv_port_)) {
      err_ << "error: cannot listen on " << srv_host_ << ":" << srv_port_
           << " (port in use or address unavailable)\n";
      return kInput;
    }
    out_ << "poleplan service listening on http://" << srv_host_ << ":" << srv_port_ << " ("
         << cfg.workers << " worker" << (cfg.workers == 1 ? "" : "s") << ")" << std::endl;

    std::thread waiter([&] {
      int sig = 0;
      sigwait(&sigs, &sig);
      server.stop();
    });
    server.serve();
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    jobs.shutdown();
    return kOk;
  }

  geo::BBoxLTRD parse_bbox_or_usage(const std::string& text) {
    try {
      return parse_bbox_flag(text);
    } catch (const InvalidArgument& e) {
      throw CLI::ValidationError(std::string("--bbox: ") + e.what());
    }
  }

  std::ostream& out_;
  std::ostream& err_;
  CLI::App app_{"poleplan: 5G utility pole placement planner", "poleplan"};
  int code_ = kOk;

  PlanFlags plan_;
  std::uint64_t synth_seed_ = 0;
  std::string synth_bbox_;
  std::size_t synth_poles_ = 0;
  double synth_dup_ = 0.0;
  double synth_jitter_ = 0.0;
  std::string synth_out_ = "-";
  std::string man_bbox_;
  double man_spacing_ = 50.0;
  std::string man_template_;
  std::string man_out_ = "-";
  std::string dd_in_;
  std::string dd_format_;
  double dd_merge_ = ingest::kDefaultMergeRadiusM;
  std::string dd_out_ = "-";
  std::string srv_host_ = "0.0.0.0";
  int srv_port_ = 8080;
  std::size_t srv_workers_ = 1;
  std::size_t srv_queue_ = 16;
  std::string srv_dir_;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Runner runner(out, err);
  return runner(args);
}

}  // namespace poleplan::cli
