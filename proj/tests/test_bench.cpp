#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "dimtm/bench.hpp"
#include "helpers.hpp"

using namespace dimtm;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

/// Pair cases where image 2 is the same scene with fresh noise, so the
/// target is findable at exactly the ground-truth box.
std::vector<PairCase> make_mini_bbs(const fs::path& dir, int n_pairs) {
  for (int i = 0; i < n_pairs; ++i) {
    SynthScene clean = synth_scene(500 + uint64_t(i), 2, 15, 15, 96, 80, 0.0);
    SynthScene noisy = synth_scene(500 + uint64_t(i), 2, 15, 15, 96, 80, 0.015);
    write_bbs_case(dir.string(), "case" + std::to_string(i), clean.image, noisy.image,
                   clean.boxes[0], clean.boxes[0]);
  }
  return load_bbs_dataset(dir.string());
}

SequenceCase make_identity_sequence(uint64_t seed, const fs::path& dir) {
  SynthScene scene = synth_scene(seed, 3, 12, 12, 100, 90, 0.0);
  fs::create_directories(dir);
  for (int i = 1; i <= 6; ++i)
    save_png(scene.image, (dir / ("img" + std::to_string(i) + ".png")).string());
  for (int k = 2; k <= 6; ++k) {
    std::ofstream out(dir / ("H1to" + std::to_string(k) + "p"));
    out << "1 0 0\n0 1 0\n0 0 1\n";
  }
  return load_vgg_sequence(dir.string(), 1.0);
}

}  // namespace

TEST_CASE("bbs benchmark locates planted targets with both methods") {
  fs::path dir = fresh_dir("dimtm_bench_bbs");
  std::vector<PairCase> cases = make_mini_bbs(dir, 3);

  BenchOptions dim_opt;
  dim_opt.method = Method::Dim;
  dim_opt.max_additional = 2;
  BbsResult dim_result = run_bbs_benchmark(cases, dim_opt);
  REQUIRE(dim_result.pairs.size() == 3);
  REQUIRE(dim_result.curve_best.auc > 0.9);
  REQUIRE(dim_result.curve_topk.auc >= dim_result.curve_best.auc - 1e-12);
  REQUIRE(dim_result.total_seconds > 0.0);

  BenchOptions solo = dim_opt;
  solo.max_additional = 0;
  BbsResult solo_result = run_bbs_benchmark(cases, solo);
  for (const BbsPairResult& r : solo_result.pairs) REQUIRE(r.templates_used == 1);
  REQUIRE(solo_result.curve_best.auc > 0.9);

  BenchOptions zncc_opt;
  zncc_opt.method = Method::Zncc;
  BbsResult zncc_result = run_bbs_benchmark(cases, zncc_opt);
  REQUIRE(zncc_result.curve_best.auc > 0.9);

  REQUIRE_THROWS_AS(run_bbs_benchmark({}, dim_opt), std::invalid_argument);
}

TEST_CASE("bbs report files are written") {
  fs::path dir = fresh_dir("dimtm_bench_bbs_csv");
  std::vector<PairCase> cases = make_mini_bbs(dir, 2);
  BenchOptions opt;
  opt.method = Method::Zncc;
  BbsResult r = run_bbs_benchmark(cases, opt);
  fs::path out = fresh_dir("dimtm_bench_bbs_out");
  write_bbs_pairs_csv(r, (out / "pairs.csv").string());
  write_success_csv(r.curve_best, (out / "success.csv").string());
  std::ifstream pairs(out / "pairs.csv");
  std::string header;
  std::getline(pairs, header);
  REQUIRE(header == "pair,iou,iou_topk,templates,seconds");
  int lines = 0;
  for (std::string line; std::getline(pairs, line);) ++lines;
  REQUIRE(lines == 2);
}

TEST_CASE("identity-homography sequence gives near-perfect correspondence") {
  fs::path root = fresh_dir("dimtm_bench_vgg");
  std::vector<SequenceCase> seqs{make_identity_sequence(1000, root / "alpha")};

  BenchOptions opt;
  opt.method = Method::Zncc;
  VggCorrespondResult zncc_result = run_vgg_correspondence(seqs, opt, {17}, 5);
  REQUIRE(zncc_result.sizes.size() == 1);
  REQUIRE(zncc_result.sizes[0].comparisons >= 5);
  // exact self matching: every predicted box equals its ground truth
  REQUIRE(zncc_result.sizes[0].pooled.auc > 0.98);

  opt.method = Method::Dim;
  VggCorrespondResult dim_result = run_vgg_correspondence(seqs, opt, {17}, 5);
  REQUIRE(dim_result.sizes[0].pooled.auc > 0.98);
  REQUIRE(dim_result.sizes[0].sequences[0].name == "alpha");
}

TEST_CASE("translated sequence validates the homography direction and rescaling") {
  // img1 and the query views are crops of one canvas, offset by (8, 6);
  // content at (x, y) in image 1 appears at (x-8, y-6) in every query view.
  SynthScene canvas = synth_scene(4321, 0, 9, 9, 130, 110, 0.0);
  Image img1 = extract_patch(canvas.image, {0, 0, 110, 90});
  Image imgk = extract_patch(canvas.image, {8, 6, 110, 90});

  fs::path dir = fresh_dir("dimtm_bench_vgg_shift") / "shifted";
  fs::create_directories(dir);
  save_png(img1, (dir / "img1.png").string());
  for (int i = 2; i <= 6; ++i) save_png(imgk, (dir / ("img" + std::to_string(i) + ".png")).string());
  for (int k = 2; k <= 6; ++k) {
    std::ofstream out(dir / ("H1to" + std::to_string(k) + "p"));
    out << "1 0 -8\n0 1 -6\n0 0 1\n";
  }

  BenchOptions opt;
  for (Method m : {Method::Zncc, Method::Dim}) {
    opt.method = m;
    std::vector<SequenceCase> seqs{load_vgg_sequence(dir.string(), 1.0)};
    VggCorrespondResult r = run_vgg_correspondence(seqs, opt, {17}, 5);
    REQUIRE(r.sizes[0].pooled.auc > 0.95);
  }

  // even offsets survive exact 2x downscaling; the loader conjugates H
  opt.method = Method::Zncc;
  std::vector<SequenceCase> half{load_vgg_sequence(dir.string(), 0.5)};
  VggCorrespondResult r = run_vgg_correspondence(half, opt, {17}, 5);
  REQUIRE(r.sizes[0].pooled.auc > 0.9);
}

TEST_CASE("detection benchmark on identity sequences separates own and foreign templates") {
  fs::path root = fresh_dir("dimtm_bench_vgg_detect");
  std::vector<SequenceCase> seqs{make_identity_sequence(2000, root / "alpha"),
                                 make_identity_sequence(3000, root / "beta")};

  BenchOptions opt;
  opt.method = Method::Dim;
  VggDetectResult r = run_vgg_detection(seqs, opt, 17, 3);
  REQUIRE(r.templates == 6);
  REQUIRE(r.query_images == 10);
  REQUIRE(r.best_fscore > 0.5);
  for (size_t i = 1; i < r.pr.values.size(); ++i) REQUIRE(r.pr.values[i] <= r.pr.values[i - 1]);

  // a grayscale sequence is excluded from the detection protocol
  SequenceCase gray = seqs[0];
  gray.name = "gray";
  for (Image& img : gray.images) img = convert_colorspace(img, Colorspace::Gray);
  std::vector<SequenceCase> with_gray{seqs[0], seqs[1], gray};
  VggDetectResult r2 = run_vgg_detection(with_gray, opt, 17, 3);
  REQUIRE(r2.templates == 6);
}

TEST_CASE("sweep: unit factor reproduces the baseline, params are validated") {
  fs::path dir = fresh_dir("dimtm_bench_sweep");
  std::vector<PairCase> cases = make_mini_bbs(dir, 2);
  BenchOptions opt;
  opt.max_additional = 1;
  BbsResult base = run_bbs_benchmark(cases, opt);

  for (const std::string& param : {"sigma", "epsilon1", "epsilon2", "lambda", "iterations"}) {
    std::vector<SweepRow> rows = run_sweep(param, {1.0}, cases, opt);
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].auc == Catch::Approx(base.curve_best.auc).margin(1e-12));
  }
  std::vector<SweepRow> two = run_sweep("iterations", {0.1, 1.0}, cases, opt);
  REQUIRE(two[0].factor == 0.1);
  REQUIRE(two[1].auc == Catch::Approx(base.curve_best.auc).margin(1e-12));

  REQUIRE_THROWS_AS(run_sweep("bogus", {1.0}, cases, opt), std::invalid_argument);
}
