// Command-line front end: single-template matching with heatmap output plus
// the correspondence, detection and parameter-sensitivity benchmarks.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dimtm/bench.hpp"
#include "dimtm/plot.hpp"

namespace fs = std::filesystem;
using namespace dimtm;

namespace {

struct CliOptions {
  std::string dataset;
  std::string method = "dim";
  std::string additional = "maxcorr";
  int max_additional = 4;
  int template_size = 0;  // 0: protocol default (all three sizes for VGG)
  int iterations = 0;
  double lambda = 0.025;
  double epsilon2 = 1e-2;
  uint64_t seed = 0;
  int threads = 0;
  std::string out = "dimtm_out";
  double vgg_scale = 0.5;
  int keypoints = 25;
};

void add_common_flags(CLI::App* cmd, CliOptions& o, bool with_dataset) {
  if (with_dataset)
    cmd->add_option("--dataset", o.dataset,
                    "dataset root (falls back to DIM_DATASET_ROOT)");
  cmd->add_option("--method", o.method, "matching method: dim or zncc")
      ->check(CLI::IsMember({"dim", "zncc"}));
  cmd->add_option("--additional", o.additional,
                  "additional-template strategy: maxcorr|keypoint|random|other:<path>[:kind]");
  cmd->add_option("--max-additional", o.max_additional, "additional template cap");
  cmd->add_option("--iterations", o.iterations, "iteration count (0 = bank-size default)");
  cmd->add_option("--lambda", o.lambda, "neighborhood-summation scale");
  cmd->add_option("--epsilon2", o.epsilon2, "reconstruction clamp");
  cmd->add_option("--seed", o.seed, "seed for random placements");
  cmd->add_option("--threads", o.threads, "worker threads (0 = hardware)");
  cmd->add_option("--out", o.out, "output directory");
}

std::string resolve_dataset(const CliOptions& o, const std::string& subdir) {
  std::string root = o.dataset;
  if (root.empty()) {
    const char* env = std::getenv("DIM_DATASET_ROOT");
    if (!env || !*env)
      throw std::runtime_error("no dataset root: pass --dataset or set DIM_DATASET_ROOT");
    root = env;
  }
  if (!subdir.empty() && fs::is_directory(fs::path(root) / subdir))
    return (fs::path(root) / subdir).string();
  return root;
}

BenchOptions to_bench_options(const CliOptions& o) {
  BenchOptions b;
  b.method = parse_method(o.method);
  b.max_additional = o.max_additional;
  b.dim.iterations = o.iterations;
  b.dim.lambda = o.lambda;
  b.dim.epsilon2 = o.epsilon2;
  b.seed = o.seed;
  b.threads = o.threads;

  std::string strat = o.additional;
  if (strat == "maxcorr") {
    b.additional = SelectionKind::MaxCorrelation;
  } else if (strat == "keypoint") {
    b.additional = SelectionKind::Keypoint;
  } else if (strat == "random") {
    b.additional = SelectionKind::Random;
  } else if (strat.starts_with("other:")) {
    b.additional = SelectionKind::FromOtherImage;
    std::string rest = strat.substr(6);
    size_t colon = rest.rfind(':');
    std::string kind = "maxcorr";
    if (colon != std::string::npos && rest.find('.', colon) == std::string::npos &&
        (rest.substr(colon + 1) == "maxcorr" || rest.substr(colon + 1) == "keypoint" ||
         rest.substr(colon + 1) == "random")) {
      kind = rest.substr(colon + 1);
      rest = rest.substr(0, colon);
    }
    b.additional_source_path = rest;
    b.additional_other_kind = kind == "keypoint"  ? SelectionKind::Keypoint
                              : kind == "random" ? SelectionKind::Random
                                                 : SelectionKind::MaxCorrelation;
  } else {
    throw std::runtime_error("unknown --additional strategy: " + strat);
  }
  return b;
}

BoundingBox parse_box(const std::string& s) {
  BoundingBox b;
  char c1, c2, c3;
  std::istringstream ss(s);
  if (!(ss >> b.x >> c1 >> b.y >> c2 >> b.w >> c3 >> b.h) || c1 != ',' || c2 != ',' || c3 != ',')
    throw std::runtime_error("expected --box x,y,w,h, got '" + s + "'");
  return b;
}

PlotSeries curve_series(const EvalCurve& c, double r, double g, double b) {
  return {c.thresholds, c.values, r, g, b};
}

int cmd_match(const CliOptions& o, const std::string& image_path, const std::string& tpl_path,
              const std::string& box_str, int top_k) {
  Image query_raw = load_image(image_path);
  Image source_raw = load_image(tpl_path);
  BoundingBox box = parse_box(box_str);
  BenchOptions bench = to_bench_options(o);

  Plane map;
  if (bench.method == Method::Dim) {
    SelectionStrategy strat;
    strat.kind = bench.additional;
    strat.max_count = bench.max_additional;
    strat.seed = bench.seed;
    Image other;
    if (strat.kind == SelectionKind::FromOtherImage) {
      other = load_image(bench.additional_source_path);
      strat.other_image = &other;
      strat.other_kind = bench.additional_other_kind;
    }
    std::vector<BoundingBox> boxes =
        bench.max_additional > 0 ? select_additional(source_raw, box, strat)
                                 : std::vector<BoundingBox>{};
    Image src = detail::to_match_space(source_raw, Method::Dim);
    Image query = detail::to_match_space(query_raw, Method::Dim);
    Image other_conv;
    std::vector<PatchSpec> adds;
    const Image* add_src = &src;
    if (strat.kind == SelectionKind::FromOtherImage) {
      other_conv = detail::to_match_space(other, Method::Dim);
      add_src = &other_conv;
    }
    for (const BoundingBox& b : boxes) adds.push_back({add_src, b});
    std::cout << "matching with " << 1 + adds.size() << " templates\n";
    SimilarityField field = match(query, {&src, box}, adds, bench.dim);
    map = std::move(field.maps[0]);
  } else {
    map = zncc_match(query_raw, extract_patch(source_raw, box), Colorspace::HSV);
  }

  fs::create_directories(o.out);
  save_png(heatmap_image(map), (fs::path(o.out) / "heatmap.png").string());

  std::vector<Peak> peaks = top_k_peaks(map, top_k);
  std::ofstream csv(fs::path(o.out) / "peaks.csv");
  csv << "rank,x,y,score,box_x,box_y,box_w,box_h\n";
  Image annotated = query_raw;
  for (size_t i = 0; i < peaks.size(); ++i) {
    BoundingBox b = box_around(peaks[i].x, peaks[i].y, box.w, box.h);
    csv << i + 1 << "," << peaks[i].x << "," << peaks[i].y << "," << peaks[i].score << "," << b.x
        << "," << b.y << "," << b.w << "," << b.h << "\n";
    if (i == 0)
      draw_rect(annotated, b.x, b.y, b.w, b.h, 0.0, 1.0, 1.0);
    else
      draw_rect(annotated, b.x, b.y, b.w, b.h, 1.0, 1.0, 0.0, 1);
  }
  save_png(annotated, (fs::path(o.out) / "annotated.png").string());
  std::cout << "wrote " << o.out << "/heatmap.png, annotated.png, peaks.csv\n";
  return 0;
}

int cmd_bench_bbs(const CliOptions& o) {
  std::string root = resolve_dataset(o, "bbs");
  std::vector<PairCase> cases = load_bbs_dataset(root);
  BenchOptions bench = to_bench_options(o);
  std::cout << "running " << o.method << " on " << cases.size() << " pairs from " << root
            << "\n";
  BbsResult r = run_bbs_benchmark(cases, bench);

  fs::create_directories(o.out);
  write_bbs_pairs_csv(r, (fs::path(o.out) / "pairs.csv").string());
  write_success_csv(r.curve_best, (fs::path(o.out) / "success.csv").string());
  write_success_csv(r.curve_topk, (fs::path(o.out) / "success_topk.csv").string());
  std::vector<PlotSeries> series{curve_series(r.curve_best, 0.8, 0.1, 0.1),
                                 curve_series(r.curve_topk, 0.1, 0.1, 0.8)};
  save_png(render_plot(series), (fs::path(o.out) / "success.png").string());

  std::ofstream summary(fs::path(o.out) / "summary.txt");
  for (std::ostream* os : {static_cast<std::ostream*>(&summary), &std::cout}) {
    *os << "pairs: " << r.pairs.size() << "\n"
        << "auc: " << r.curve_best.auc << "\n"
        << "auc_topk: " << r.curve_topk.auc << "\n"
        << "total_seconds: " << r.total_seconds << "\n"
        << "seconds_per_pair: " << r.total_seconds / double(r.pairs.size()) << "\n";
  }
  return 0;
}

int cmd_bench_vgg_correspond(const CliOptions& o) {
  std::string root = resolve_dataset(o, "vgg");
  std::vector<SequenceCase> seqs;
  for (const std::string& dir : list_vgg_sequences(root))
    seqs.push_back(load_vgg_sequence(dir, o.vgg_scale));
  if (seqs.empty()) throw std::runtime_error("no sequences under " + root);
  BenchOptions bench = to_bench_options(o);
  std::vector<int> sizes = o.template_size > 0 ? std::vector<int>{o.template_size}
                                               : std::vector<int>{17, 33, 49};
  std::cout << "running " << o.method << " on " << seqs.size() << " sequences, sizes";
  for (int s : sizes) std::cout << " " << s;
  std::cout << "\n";
  VggCorrespondResult r = run_vgg_correspondence(seqs, bench, sizes, o.keypoints);

  fs::create_directories(o.out);
  std::ofstream summary(fs::path(o.out) / "summary.txt");
  for (const VggSizeResult& sz : r.sizes) {
    std::string tag = std::to_string(sz.template_size);
    write_success_csv(sz.pooled, (fs::path(o.out) / ("success_" + tag + ".csv")).string());
    std::vector<PlotSeries> series;
    double hue = 0.0;
    for (const VggSequenceResult& sr : sz.sequences) {
      if (sr.ious.empty()) continue;
      series.push_back(curve_series(sr.curve, 0.2 + 0.6 * hue, 0.1, 0.9 - 0.7 * hue));
      hue += 1.0 / double(sz.sequences.size());
    }
    series.push_back(curve_series(sz.pooled, 0.0, 0.0, 0.0));
    save_png(render_plot(series), (fs::path(o.out) / ("success_" + tag + ".png")).string());
    std::ofstream per_seq(fs::path(o.out) / ("sequences_" + tag + ".csv"));
    per_seq << "sequence,comparisons,auc\n";
    for (const VggSequenceResult& sr : sz.sequences)
      per_seq << sr.name << "," << sr.ious.size() << ","
              << (sr.ious.empty() ? 0.0 : sr.curve.auc) << "\n";
    for (std::ostream* os : {static_cast<std::ostream*>(&summary), &std::cout})
      *os << "size " << sz.template_size << ": auc " << sz.pooled.auc << " over "
          << sz.comparisons << " comparisons\n";
  }
  summary << "total_seconds: " << r.total_seconds << "\n";
  std::cout << "total_seconds: " << r.total_seconds << "\n";
  return 0;
}

int cmd_bench_vgg_detect(const CliOptions& o) {
  std::string root = resolve_dataset(o, "vgg");
  std::vector<SequenceCase> seqs;
  for (const std::string& dir : list_vgg_sequences(root))
    seqs.push_back(load_vgg_sequence(dir, o.vgg_scale));
  BenchOptions bench = to_bench_options(o);
  std::vector<int> sizes = o.template_size > 0 ? std::vector<int>{o.template_size}
                                               : std::vector<int>{17, 33, 49};
  fs::create_directories(o.out);
  std::ofstream summary(fs::path(o.out) / "summary.txt");
  for (int ts : sizes) {
    VggDetectResult r = run_vgg_detection(seqs, bench, ts, 10);
    std::string tag = std::to_string(ts);
    write_pr_csv(r.pr, (fs::path(o.out) / ("pr_" + tag + ".csv")).string());
    PlotSeries pr_series{r.pr.values, r.pr.values2, 0.8, 0.1, 0.1};  // recall vs precision
    save_png(render_plot({&pr_series, 1}), (fs::path(o.out) / ("pr_" + tag + ".png")).string());
    for (std::ostream* os : {static_cast<std::ostream*>(&summary), &std::cout})
      *os << "size " << ts << ": best_fscore " << r.best_fscore << " (" << r.templates
          << " templates, " << r.query_images << " query images, " << r.total_seconds
          << " s)\n";
  }
  return 0;
}

int cmd_sweep(const CliOptions& o, const std::string& param, const std::string& factors_str) {
  std::string root = resolve_dataset(o, "bbs");
  std::vector<PairCase> cases = load_bbs_dataset(root);
  std::vector<double> factors;
  std::istringstream ss(factors_str);
  std::string tok;
  while (std::getline(ss, tok, ',')) factors.push_back(std::stod(tok));
  if (factors.empty()) throw std::runtime_error("no sweep factors given");
  BenchOptions bench = to_bench_options(o);
  std::vector<SweepRow> rows = run_sweep(param, factors, cases, bench);
  fs::create_directories(o.out);
  write_sweep_csv(rows, (fs::path(o.out) / ("sweep_" + param + ".csv")).string());
  for (const SweepRow& r : rows)
    std::cout << r.param << " x" << r.factor << ": auc " << r.auc << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"divisive-input-modulation template matching"};
  app.require_subcommand(1);
  CliOptions o;

  std::string image, tpl_image, box_str;
  int top_k = 7;
  CLI::App* match_cmd = app.add_subcommand("match", "match one template against one image");
  match_cmd->add_option("--image", image, "query image")->required();
  match_cmd->add_option("--template-image", tpl_image, "image the template is cut from")
      ->required();
  match_cmd->add_option("--box", box_str, "template box x,y,w,h in the template image")
      ->required();
  match_cmd->add_option("--top-k", top_k, "peaks to report");
  add_common_flags(match_cmd, o, false);

  CLI::App* bbs_cmd = app.add_subcommand("bench-bbs", "pair-correspondence benchmark");
  add_common_flags(bbs_cmd, o, true);

  CLI::App* vggc_cmd =
      app.add_subcommand("bench-vgg-correspond", "homography-sequence correspondence benchmark");
  add_common_flags(vggc_cmd, o, true);
  vggc_cmd->add_option("--template-size", o.template_size, "17/33/49 (0 = all)");
  vggc_cmd->add_option("--scale", o.vgg_scale, "image rescale factor");
  vggc_cmd->add_option("--keypoints", o.keypoints, "keypoints per sequence");

  CLI::App* vggd_cmd =
      app.add_subcommand("bench-vgg-detect", "homography-sequence detection benchmark");
  add_common_flags(vggd_cmd, o, true);
  vggd_cmd->add_option("--template-size", o.template_size, "17/33/49 (0 = all)");
  vggd_cmd->add_option("--scale", o.vgg_scale, "image rescale factor");

  std::string sweep_param = "sigma";
  std::string sweep_factors = "0.1,0.2,0.5,1,2,5,10";
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "parameter sensitivity sweep");
  sweep_cmd->add_option("--param", sweep_param, "sigma|epsilon1|epsilon2|lambda|iterations")
      ->required();
  sweep_cmd->add_option("--factors", sweep_factors, "comma-separated multipliers");
  add_common_flags(sweep_cmd, o, true);

  CLI11_PARSE(app, argc, argv);
  try {
    if (match_cmd->parsed()) return cmd_match(o, image, tpl_image, box_str, top_k);
    if (bbs_cmd->parsed()) return cmd_bench_bbs(o);
    if (vggc_cmd->parsed()) return cmd_bench_vgg_correspond(o);
    if (vggd_cmd->parsed()) return cmd_bench_vgg_detect(o);
    if (sweep_cmd->parsed()) return cmd_sweep(o, sweep_param, sweep_factors);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
