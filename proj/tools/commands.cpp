#include "commands.hpp"

#include "rgbdseg/engine.hpp"
#include "rgbdseg/evaluation.hpp"
#include "rgbdseg/frame_io.hpp"
#include "rgbdseg/synth.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

namespace rgbdseg::cli {
namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) {
    if (!item.empty()) {
      parts.push_back(item);
    }
  }
  return parts;
}

// Options shared by the commands that build a pipeline.
struct PipelineOptions {
  std::string algo = "gmm";
  std::string mode = "rgbd";
  std::uint64_t seed = PipelineConfig{}.seed;
  std::size_t workers = default_worker_count();
  GmmParams gmm;
  PbasParams pbas;

  void add_to(CLI::App& app, bool algo_list) {
    if (algo_list) {
      app.add_option("--algo", algo, "Algorithms, comma separated (gmm,pbas)")->capture_default_str();
    } else {
      app.add_option("--algo", algo, "Algorithm: gmm or pbas")
          ->check(CLI::IsMember({"gmm", "pbas"}))
          ->capture_default_str();
    }
    app.add_option("--mode", mode, "rgb_only or rgbd")->check(CLI::IsMember({"rgb_only", "rgbd"}))->capture_default_str();
    app.add_option("--seed", seed, "Seed for the PBAS update draws")->capture_default_str();
    if (!algo_list) {
      app.add_option("--workers", workers, "Worker threads (default: $RGBD_BGSEG_WORKERS or 1)")
          ->check(CLI::PositiveNumber)
          ->capture_default_str();
    }
    app.add_option("--gmm-k-rgb", gmm.k_rgb, "Gaussians in the colour mixture")->capture_default_str();
    app.add_option("--gmm-k-depth", gmm.k_d, "Gaussians in the depth mixture")->capture_default_str();
    app.add_option("--gmm-alpha", gmm.alpha, "GMM learning rate")->capture_default_str();
    app.add_option("--gmm-scale", gmm.s, "Density scale factor")->capture_default_str();
    app.add_option("--gmm-tau", gmm.tau, "Background threshold on the fused score")->capture_default_str();
    app.add_option("--gmm-lambda", gmm.match_lambda, "Match gate in standard deviations")->capture_default_str();
    app.add_option("--gmm-var-init", gmm.var_init, "Variance of new components")->capture_default_str();
    app.add_option("--gmm-w-init", gmm.w_init, "Weight of new components")->capture_default_str();
    app.add_option("--gmm-background-ratio", gmm.background_ratio,
                   "Cumulative weight of components scored as background")
        ->capture_default_str();
    app.add_option("--pbas-n", pbas.n, "Samples per pixel")->capture_default_str();
    app.add_option("--pbas-min-matches", pbas.min_matches, "Matches required for background")->capture_default_str();
    app.add_option("--pbas-r-lower", pbas.r_lower, "Lower bound of the decision threshold")->capture_default_str();
    app.add_option("--pbas-r-init", pbas.r_init, "Initial decision threshold")->capture_default_str();
    app.add_option("--pbas-t-init", pbas.t_init, "Initial learning parameter")->capture_default_str();
  }

  PipelineConfig config(Algorithm a) const {
    PipelineConfig c;
    c.algorithm = a;
    c.mode = parse_mode(mode);
    c.seed = seed;
    c.worker_count = workers;
    c.gmm = gmm;
    c.pbas = pbas;
    return c;
  }
};

constexpr const char* kConfigFooter = "Any option may also be set in a `key = value` file passed with --config; "
                                      "command-line flags take precedence.";

// CLI11 reads config files at the root only, so plain `key = value` lines are
// filed under the subcommand being run.
class SubcommandConfig : public CLI::ConfigTOML {
public:
  explicit SubcommandConfig(std::string section) : section_(std::move(section)) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigTOML::from_config(input);
    for (auto& item : items) {
      if (item.parents.empty()) {
        item.parents.push_back(section_);
      }
    }
    return items;
  }

private:
  std::string section_;
};

void echo_config(const CLI::App& app, std::ostream& out) {
  out << "# effective configuration\n" << app.config_to_str(true, false) << '\n';
}

// --- segment ---------------------------------------------------------------

struct SegmentCommand {
  PipelineOptions pipeline;
  std::string rgb_dir;
  std::string depth_dir;
  std::string gt_dir;
  std::string out_dir;
  bool no_masks = false;
  CLI::App* app = nullptr;

  void attach(CLI::App& root) {
    app = root.add_subcommand("segment", "Segment an image sequence into foreground masks");
    app->footer(kConfigFooter);
    pipeline.add_to(*app, false);
    app->add_option("--rgb-dir", rgb_dir, "Directory of colour frames")->required();
    app->add_option("--depth-dir", depth_dir, "Directory of 16-bit depth frames (required in rgbd mode)");
    app->add_option("--gt-dir", gt_dir, "Ground truth directory; when given, metrics are reported");
    app->add_option("--out-dir", out_dir, "Output directory for masks and reports")->required();
    app->add_flag("--no-masks", no_masks, "Do not write mask images");
  }

  int run(std::ostream& out, std::ostream& err) const {
    if (pipeline.mode == "rgbd" && depth_dir.empty()) {
      err << "error: --depth-dir is required in rgbd mode\n";
      return 2;
    }
    echo_config(*app, out);

    std::optional<fs::path> depth;
    if (!depth_dir.empty()) {
      depth = fs::path(depth_dir);
    }
    std::optional<fs::path> gt;
    if (!gt_dir.empty()) {
      gt = fs::path(gt_dir);
    }
    const SequenceSource source(rgb_dir, pipeline.mode == "rgbd" ? depth : std::nullopt, gt);
    if (source.empty()) {
      err << "error: --rgb-dir '" << rgb_dir << "' contains no frames\n";
      return 2;
    }

    PipelineConfig config = pipeline.config(parse_algorithm(pipeline.algo));
    config.emit_masks = !no_masks;
    config.out_dir = fs::path(out_dir) / "masks";
    fs::create_directories(out_dir);

    std::vector<ConfusionCounts> counts;
    const RunStats stats = process_sequence(source, config, [&](std::size_t i, const std::string&, const ForegroundMask& m) {
      if (!gt) {
        return;
      }
      if (const auto path = source.ground_truth_for(i)) {
        counts.push_back(compare_masks(m, load_ground_truth(*path)));
      }
    });

    std::ofstream summary(fs::path(out_dir) / "run_stats.txt");
    auto write_stats = [&](std::ostream& o) {
      o << "frames_processed = " << stats.frames_processed << '\n'
        << "compute_seconds = " << stats.total_seconds << '\n'
        << "resample_seconds = " << stats.resample_seconds << '\n'
        << "fps = " << stats.fps() << '\n';
    };
    write_stats(summary);
    write_stats(out);

    if (gt) {
      if (counts.empty()) {
        err << "error: no ground-truth frames in --gt-dir '" << gt_dir << "' matched the sequence\n";
        return 3;
      }
      const std::vector<ReportRow> rows{
          {fs::path(rgb_dir).parent_path().filename().string(), pipeline.algo, pipeline.mode,
           aggregate_sequence(counts)}};
      write_report_table(out, rows);
      std::ofstream csv(fs::path(out_dir) / "report.csv");
      write_report_csv(csv, rows);
      if (!csv) {
        err << "error: failed to write report.csv\n";
        return 3;
      }
    }
    if (!summary) {
      err << "error: failed to write run_stats.txt\n";
      return 3;
    }
    return 0;
  }
};

// --- evaluate --------------------------------------------------------------

struct EvaluateCommand {
  std::string mask_dir;
  std::string gt_dir;
  std::string report;
  std::string sequence = "sequence";
  std::string algo = "-";
  std::string mode = "-";
  CLI::App* app = nullptr;

  void attach(CLI::App& root) {
    app = root.add_subcommand("evaluate", "Compare a mask directory against ground truth");
    app->footer(kConfigFooter);
    app->add_option("--mask-dir", mask_dir, "Directory of result masks")->required();
    app->add_option("--gt-dir", gt_dir, "Directory of ground-truth masks")->required();
    app->add_option("--report", report, "Write the comma-separated report here");
    app->add_option("--sequence", sequence, "Sequence label for the report")->capture_default_str();
    app->add_option("--algo", algo, "Algorithm label for the report")->capture_default_str();
    app->add_option("--mode", mode, "Mode label for the report")->capture_default_str();
  }

  int run(std::ostream& out, std::ostream& err) const {
    echo_config(*app, out);
    const auto masks = list_images(mask_dir, {".png", ".pgm"});
    const auto gts = list_images(gt_dir, {".png", ".pgm"});
    if (masks.size() != gts.size()) {
      err << "error: frame count mismatch: " << masks.size() << " masks in --mask-dir vs " << gts.size()
          << " ground-truth frames in --gt-dir\n";
      return 3;
    }
    std::map<std::string, fs::path> gt_by_key;
    for (const auto& p : gts) {
      gt_by_key[frame_key(p.stem().string())] = p;
    }
    std::vector<ConfusionCounts> counts;
    counts.reserve(masks.size());
    for (const auto& m : masks) {
      const auto it = gt_by_key.find(frame_key(m.stem().string()));
      if (it == gt_by_key.end()) {
        err << "error: no ground truth for mask '" << m.filename().string() << "'\n";
        return 3;
      }
      counts.push_back(compare_masks(load_mask(m), load_ground_truth(it->second)));
    }
    const std::vector<ReportRow> rows{{sequence, algo, mode, aggregate_sequence(counts)}};
    write_report_table(out, rows);
    if (!report.empty()) {
      std::ofstream csv(report);
      write_report_csv(csv, rows);
      if (!csv) {
        err << "error: cannot write --report '" << report << "'\n";
        return 3;
      }
    }
    return 0;
  }
};

// --- bench -----------------------------------------------------------------

struct BenchCommand {
  PipelineOptions pipeline;
  std::string sizes = "480p/480p,720p/480p,720p/720p,1080p/720p";
  std::string workers = "1";
  int frames = 20;
  int repeat = 1;
  std::string report;
  CLI::App* app = nullptr;

  void attach(CLI::App& root) {
    app = root.add_subcommand("bench", "Measure segmentation throughput on synthetic frames");
    app->footer(kConfigFooter);
    pipeline.algo = "gmm,pbas";
    pipeline.add_to(*app, true);
    app->add_option("--sizes", sizes, "RGB/depth resolution pairs, comma separated")->capture_default_str();
    app->add_option("--workers", workers, "Worker counts, comma separated")->capture_default_str();
    app->add_option("--frames", frames, "Timed frames per run")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--repeat", repeat, "Runs per configuration")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--report", report, "Write results as comma-separated values here");
  }

  struct Cell {
    double fps = 0.0;
    double cv = 0.0;
    double resample_share = 0.0;
  };

  int run(std::ostream& out, std::ostream& err) const {
    echo_config(*app, out);
    std::vector<Algorithm> algos;
    std::vector<std::size_t> worker_counts;
    std::vector<std::pair<std::string, std::pair<std::pair<int, int>, std::pair<int, int>>>> size_pairs;
    try {
      for (const auto& a : split(pipeline.algo, ',')) {
        algos.push_back(parse_algorithm(a));
      }
      for (const auto& w : split(workers, ',')) {
        const long v = std::stol(w);
        if (v <= 0) {
          throw std::invalid_argument("worker counts must be positive");
        }
        worker_counts.push_back(static_cast<std::size_t>(v));
      }
      for (const auto& s : split(sizes, ',')) {
        const auto parts = split(s, '/');
        if (parts.size() != 2) {
          throw std::invalid_argument("size pair '" + s + "' must look like RGB/DEPTH");
        }
        size_pairs.push_back({s, {parse_resolution(parts[0]), parse_resolution(parts[1])}});
      }
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return 2;
    }
    if (algos.empty() || worker_counts.empty() || size_pairs.empty()) {
      err << "error: --algo, --workers and --sizes must be non-empty\n";
      return 2;
    }

    // row key: (algo, workers) -> per size
    std::vector<std::vector<Cell>> table;
    std::vector<std::string> row_names;
    for (const auto a : algos) {
      for (const auto w : worker_counts) {
        row_names.push_back(std::string(to_string(a)) + " " + pipeline.mode + " w=" + std::to_string(w));
        table.emplace_back();
      }
    }

    for (std::size_t si = 0; si < size_pairs.size(); ++si) {
      const auto& [rgb_res, depth_res] = size_pairs[si].second;
      const auto content = make_content(rgb_res, depth_res);
      std::size_t row = 0;
      for (const auto a : algos) {
        for (const auto w : worker_counts) {
          table[row++].push_back(measure(a, w, content));
        }
      }
    }

    out << std::left << std::setw(22) << "fps";
    for (const auto& s : size_pairs) {
      out << std::right << std::setw(14) << s.first;
    }
    out << '\n';
    for (std::size_t r = 0; r < table.size(); ++r) {
      out << std::left << std::setw(22) << row_names[r];
      for (const auto& c : table[r]) {
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(2) << c.fps;
        out << std::right << std::setw(14) << cell.str();
      }
      out << '\n';
    }
    if (repeat > 1) {
      out << "coefficient of variation of fps across " << repeat << " runs:\n";
      for (std::size_t r = 0; r < table.size(); ++r) {
        out << std::left << std::setw(22) << row_names[r];
        for (const auto& c : table[r]) {
          std::ostringstream cell;
          cell << std::fixed << std::setprecision(1) << 100.0 * c.cv << '%';
          out << std::right << std::setw(14) << cell.str();
        }
        out << '\n';
      }
    }

    if (!report.empty()) {
      std::ofstream csv(report);
      csv << "algorithm,mode,workers,size,fps,cv,resample_share\n";
      std::size_t row = 0;
      for (const auto a : algos) {
        for (const auto w : worker_counts) {
          for (std::size_t si = 0; si < size_pairs.size(); ++si) {
            const Cell& c = table[row][si];
            csv << to_string(a) << ',' << pipeline.mode << ',' << w << ',' << size_pairs[si].first << ',' << c.fps
                << ',' << c.cv << ',' << c.resample_share << '\n';
          }
          ++row;
        }
      }
      if (!csv) {
        err << "error: cannot write --report '" << report << "'\n";
        return 3;
      }
    }
    return 0;
  }

  struct Content {
    std::vector<RgbImage> rgb;
    std::vector<DepthMap16> depth;
  };

  // A few distinct frames of a moving-object scene; the depth stream is the
  // scene depth reduced to the depth resolution, so matched and mixed pairs
  // carry the same content.
  static Content make_content(std::pair<int, int> rgb_res, std::pair<int, int> depth_res) {
    synth::SynthParams p;
    p.scenario = synth::Scenario::colour_camouflage;
    p.width = rgb_res.first;
    p.height = rgb_res.second;
    p.entry_frame = 0;
    p.object_width = std::max(p.width / 5, 1);
    p.object_height = std::max(p.height / 3, 1);
    p.speed = std::max(p.width / 100, 1);
    p = p.resolved();
    Content c;
    constexpr int kDistinctFrames = 4;
    for (int t = 0; t < kDistinctFrames; ++t) {
      auto f = synth::render_frame(p, t);
      c.rgb.push_back(std::move(f.rgb));
      c.depth.push_back(resample_depth(f.depth, depth_res.first, depth_res.second));
    }
    return c;
  }

  Cell measure(Algorithm a, std::size_t w, const Content& content) const {
    std::vector<double> fps_runs;
    double resample_share = 0.0;
    for (int rep = 0; rep < repeat; ++rep) {
      PipelineConfig config = pipeline.config(a);
      config.worker_count = w;
      Pipeline pl(config);
      // Untimed pre-roll so PBAS leaves its warm-up phase before timing.
      const int preroll = pipeline.pbas.n;
      const std::size_t n = content.rgb.size();
      for (int i = 0; i < preroll + frames; ++i) {
        const std::size_t k = static_cast<std::size_t>(i) % n;
        pl.process(content.rgb[k], &content.depth[k]);
      }
      const auto& secs = pl.stats().frame_seconds;
      const double timed = std::accumulate(secs.begin() + preroll, secs.end(), 0.0);
      fps_runs.push_back(timed > 0.0 ? frames / timed : 0.0);
      const double total = pl.stats().total_seconds;
      resample_share = total > 0.0 ? pl.stats().resample_seconds / total : 0.0;
    }
    const double mean = std::accumulate(fps_runs.begin(), fps_runs.end(), 0.0) / static_cast<double>(fps_runs.size());
    double var = 0.0;
    for (double f : fps_runs) {
      var += (f - mean) * (f - mean);
    }
    var /= static_cast<double>(fps_runs.size());
    return Cell{mean, mean > 0.0 ? std::sqrt(var) / mean : 0.0, resample_share};
  }
};

// --- synth -----------------------------------------------------------------

struct SynthCommand {
  std::string scenario;
  std::string out_dir;
  synth::SynthParams params;
  int depth_offset = -1;
  int colour_noise = -1;
  int depth_noise = -1;
  CLI::App* app = nullptr;

  void attach(CLI::App& root) {
    app = root.add_subcommand("synth", "Generate a synthetic RGB-D sequence with ground truth");
    app->footer(kConfigFooter);
    std::string names;
    for (auto n : synth::kScenarioNames) {
      names += names.empty() ? "" : ", ";
      names += n;
    }
    app->add_option("scenario", scenario, "One of: " + names)->required();
    app->add_option("--out-dir", out_dir, "Output root (rgb/, depth/, gt/ are created)")->required();
    app->add_option("--frames", params.frames, "Frame count")->capture_default_str();
    app->add_option("--width", params.width, "Frame width")->capture_default_str();
    app->add_option("--height", params.height, "Frame height")->capture_default_str();
    app->add_option("--entry-frame", params.entry_frame, "First frame with the object")->capture_default_str();
    app->add_option("--object-width", params.object_width, "Object width")->capture_default_str();
    app->add_option("--object-height", params.object_height, "Object height")->capture_default_str();
    app->add_option("--speed", params.speed, "Object speed, pixels per frame")->capture_default_str();
    app->add_option("--depth-offset", depth_offset,
                    "Object depth offset, 8-bit units (default: 80 colour_camouflage, 2 depth_camouflage, 60 "
                    "otherwise)");
    app->add_option("--colour-noise", colour_noise, "Colour noise amplitude (default: 0 static, 2 otherwise)");
    app->add_option("--depth-noise", depth_noise, "Depth noise amplitude (default: 0 static, 1 otherwise)");
    app->add_option("--ramp-slope", params.ramp_slope, "Brightness gain per frame (illumination_ramp)")
        ->capture_default_str();
    app->add_option("--invalid-fraction", params.invalid_fraction, "Share of pixels with invalid depth")
        ->capture_default_str();
    app->add_option("--seed", params.seed, "Noise seed")->capture_default_str();
  }

  int run(std::ostream& out, std::ostream& err) const {
    synth::SynthParams p = params;
    try {
      p.scenario = synth::parse_scenario(scenario);
      if (depth_offset >= 0) p.depth_offset = depth_offset;
      if (colour_noise >= 0) p.colour_noise = colour_noise;
      if (depth_noise >= 0) p.depth_noise = depth_noise;
      p = p.resolved();
    } catch (const std::invalid_argument& e) {
      err << "error: " << e.what() << '\n';
      return 2;
    }
    echo_config(*app, out);
    synth::write_sequence(out_dir, p);
    out << "wrote " << p.frames << " frames of '" << scenario << "' to " << out_dir << '\n';
    return 0;
  }
};

} // namespace

std::pair<int, int> parse_resolution(const std::string& name) {
  static const std::map<std::string, std::pair<int, int>> named{
      {"480p", {640, 480}}, {"720p", {1280, 720}}, {"1080p", {1920, 1080}}};
  if (const auto it = named.find(name); it != named.end()) {
    return it->second;
  }
  const auto x = name.find('x');
  if (x != std::string::npos) {
    try {
      std::size_t used_w = 0;
      std::size_t used_h = 0;
      const int w = std::stoi(name.substr(0, x), &used_w);
      const int h = std::stoi(name.substr(x + 1), &used_h);
      if (used_w == x && used_h == name.size() - x - 1 && w > 0 && h > 0) {
        return {w, h};
      }
    } catch (const std::exception&) {
    }
  }
  throw std::invalid_argument("unknown resolution '" + name + "' (use 480p, 720p, 1080p or WxH)");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("RGB-D foreground segmentation (GMM and PBAS)", "rgbdseg");
  app.require_subcommand(1, 1);
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.fallthrough();
  app.set_config("--config", "", "Read options from a key = value file");

  SegmentCommand segment;
  EvaluateCommand evaluate;
  BenchCommand bench;
  SynthCommand synth_cmd;
  segment.attach(app);
  evaluate.attach(app);
  bench.attach(app);
  synth_cmd.attach(app);

  for (const auto& a : args) {
    if (app.get_subcommand_no_throw(a) != nullptr) {
      app.config_formatter(std::make_shared<SubcommandConfig>(a));
      break;
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    if (const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
      err << sub->help();
    }
    return 2;
  }

  try {
    if (segment.app->parsed()) return segment.run(out, err);
    if (evaluate.app->parsed()) return evaluate.run(out, err);
    if (bench.app->parsed()) return bench.run(out, err);
    if (synth_cmd.app->parsed()) return synth_cmd.run(out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

} // namespace rgbdseg::cli
