#pragma once

#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dimtm/datasets.hpp"
#include "dimtm/dim.hpp"
#include "dimtm/eval.hpp"
#include "dimtm/keypoints.hpp"
#include "dimtm/parallel.hpp"
#include "dimtm/zncc.hpp"

namespace dimtm {

enum class Method { Dim, Zncc };

inline Method parse_method(const std::string& s) {
  if (s == "dim") return Method::Dim;
  if (s == "zncc") return Method::Zncc;
  throw std::invalid_argument("unknown method '" + s + "' (expected dim or zncc)");
}

/// Shared knobs for the benchmark drivers. DIM matches in CIELab, ZNCC in
/// HSV; grayscale inputs stay grayscale.
struct BenchOptions {
  Method method = Method::Dim;
  SelectionKind additional = SelectionKind::MaxCorrelation;
  SelectionKind additional_other_kind = SelectionKind::MaxCorrelation;
  std::string additional_source_path;  // FromOtherImage source
  int max_additional = 4;
  DimParams dim;
  double sigma_scale = 1.0;
  uint64_t seed = 0;
  int threads = 1;  // case-level workers; 0 = hardware concurrency
  int top_k = 7;
};

namespace detail {

inline Image to_match_space(const Image& img, Method method) {
  if (img.grayscale()) return img;
  return convert_colorspace(img, method == Method::Dim ? Colorspace::CIELab : Colorspace::HSV);
}

inline std::pair<int, int> argmax(const Plane& map) {
  int bx = 0, by = 0;
  double best = map(0, 0);
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x)
      if (map(y, x) > best) {
        best = map(y, x);
        bx = x;
        by = y;
      }
  return {bx, by};
}

inline double best_peak_iou(const Plane& map, const BoundingBox& gt, int tpl_w, int tpl_h,
                            int k) {
  double best = 0.0;
  for (const Peak& p : top_k_peaks(map, k))
    best = std::max(best, iou(box_around(p.x, p.y, tpl_w, tpl_h), gt));
  return best;
}

}  // namespace detail

struct BbsPairResult {
  std::string id;
  double iou_best = 0.0;   // IoU of the single strongest location
  double iou_topk = 0.0;   // best IoU among the top-k similarity peaks
  int templates_used = 1;  // target plus accepted additional templates
  double seconds = 0.0;
};

struct BbsResult {
  std::vector<BbsPairResult> pairs;
  EvalCurve curve_best;
  EvalCurve curve_topk;
  double total_seconds = 0.0;
};

/// Correspondence protocol over image pairs: extract the target template
/// from image 1, locate it in image 2, score the predicted box (template
/// dims centered on the similarity argmax) against the ground truth.
inline BbsResult run_bbs_benchmark(const std::vector<PairCase>& cases, const BenchOptions& opt) {
  if (cases.empty()) throw std::invalid_argument("run_bbs_benchmark: no cases");

  std::optional<Image> other_source;
  if (opt.method == Method::Dim && opt.additional == SelectionKind::FromOtherImage) {
    if (opt.additional_source_path.empty())
      throw std::invalid_argument("additional=other needs a source image path");
    other_source = load_image(opt.additional_source_path);
  }

  BbsResult result;
  result.pairs.resize(cases.size());
  auto wall0 = std::chrono::steady_clock::now();

  parallel_for(int(cases.size()), opt.threads, [&](int idx) {
    const PairCase& c = cases[size_t(idx)];
    auto t0 = std::chrono::steady_clock::now();
    Image img1 = load_image(c.image1);
    Image img2 = load_image(c.image2);
    BbsPairResult& row = result.pairs[size_t(idx)];
    row.id = c.id;

    Plane map;
    if (opt.method == Method::Dim) {
      SelectionStrategy strat;
      strat.kind = opt.additional;
      strat.max_count = opt.max_additional;
      strat.seed = opt.seed + uint64_t(idx);
      strat.other_image = other_source ? &*other_source : nullptr;
      strat.other_kind = opt.additional_other_kind;
      std::vector<BoundingBox> boxes =
          opt.max_additional > 0 ? select_additional(img1, c.gt_box1, strat)
                                 : std::vector<BoundingBox>{};

      Image src = detail::to_match_space(img1, Method::Dim);
      Image query = detail::to_match_space(img2, Method::Dim);
      const Image* extra_src = nullptr;
      Image other_conv;
      if (strat.kind == SelectionKind::FromOtherImage && other_source) {
        other_conv = detail::to_match_space(*other_source, Method::Dim);
        extra_src = &other_conv;
      }
      std::vector<PatchSpec> adds;
      for (const BoundingBox& b : boxes) adds.push_back({extra_src ? extra_src : &src, b});
      row.templates_used = 1 + int(adds.size());
      SimilarityField field =
          match(query, {&src, c.gt_box1}, adds, opt.dim, opt.sigma_scale);
      map = std::move(field.maps[0]);
    } else {
      Image tpl = extract_patch(img1, c.gt_box1);
      map = zncc_match(img2, tpl, Colorspace::HSV, opt.dim.plan);
    }

    auto [px, py] = detail::argmax(map);
    row.iou_best = iou(box_around(px, py, c.gt_box1.w, c.gt_box1.h), c.gt_box2);
    row.iou_topk = detail::best_peak_iou(map, c.gt_box2, c.gt_box1.w, c.gt_box1.h, opt.top_k);
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });

  result.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  std::vector<double> ious, ious_topk;
  for (const BbsPairResult& r : result.pairs) {
    ious.push_back(r.iou_best);
    ious_topk.push_back(r.iou_topk);
  }
  result.curve_best = success_curve(ious);
  result.curve_topk = success_curve(ious_topk);
  return result;
}

/// Keypoints for one sequence: Harris corners filtered so the template fits
/// in the reference image, its mapped box fits in every query view, and
/// keypoints keep their spacing.
inline std::vector<Keypoint> sequence_keypoints(const SequenceCase& seq, int tpl_size,
                                                int count) {
  std::vector<MappedTarget> targets;
  for (size_t k = 0; k < seq.homographies.size(); ++k)
    targets.push_back(
        {seq.images[k + 1].width, seq.images[k + 1].height, seq.homographies[k]});
  return filter_keypoints_vgg(harris_corners(seq.images[0]), tpl_size, tpl_size,
                              seq.images[0].width, seq.images[0].height, targets, 24, count);
}

struct VggSequenceResult {
  std::string name;
  std::vector<double> ious;  // one per (keypoint, query image)
  EvalCurve curve;
};

struct VggSizeResult {
  int template_size = 0;
  std::vector<VggSequenceResult> sequences;
  EvalCurve pooled;
  int comparisons = 0;
};

struct VggCorrespondResult {
  std::vector<VggSizeResult> sizes;
  double total_seconds = 0.0;
};

/// Correspondence protocol over homography sequences: templates around
/// filtered Harris keypoints of image 1 are located in images 2..6; the
/// ground-truth box sits at the homography-mapped keypoint. With DIM all
/// keypoint templates of a sequence compete in a single bank.
inline VggCorrespondResult run_vgg_correspondence(const std::vector<SequenceCase>& seqs,
                                                  const BenchOptions& opt,
                                                  const std::vector<int>& template_sizes = {17,
                                                                                            33,
                                                                                            49},
                                                  int keypoints_per_image = 25) {
  if (seqs.empty()) throw std::invalid_argument("run_vgg_correspondence: no sequences");
  VggCorrespondResult result;
  auto wall0 = std::chrono::steady_clock::now();

  for (int ts : template_sizes) {
    VggSizeResult size_result;
    size_result.template_size = ts;
    size_result.sequences.resize(seqs.size());

    parallel_for(int(seqs.size()), opt.threads, [&](int si) {
      const SequenceCase& seq = seqs[size_t(si)];
      VggSequenceResult& sr = size_result.sequences[size_t(si)];
      sr.name = seq.name;
      std::vector<Keypoint> kps = sequence_keypoints(seq, ts, keypoints_per_image);
      if (kps.empty()) return;

      if (opt.method == Method::Dim) {
        Image src = detail::to_match_space(seq.images[0], Method::Dim);
        ChannelStack stack1 = preprocess(src, ts, ts, opt.sigma_scale);
        std::vector<ChannelStack> patches;
        for (const Keypoint& kp : kps)
          patches.push_back(extract_patch(stack1, box_around(kp.x, kp.y, ts, ts)));
        TemplateBank bank = build_bank(patches);
        for (size_t q = 0; q < seq.homographies.size(); ++q) {
          Image query = detail::to_match_space(seq.images[q + 1], Method::Dim);
          ChannelStack xq = preprocess(query, ts, ts, opt.sigma_scale);
          SimilarityField field = dim_solve(xq, bank, opt.dim);
          field = crop_field(field);
          field = postprocess_sum(field, ts, ts, opt.dim.lambda, opt.dim.plan);
          for (size_t j = 0; j < kps.size(); ++j) {
            Point2 p = apply_homography(seq.homographies[q],
                                        {double(kps[j].x), double(kps[j].y)});
            BoundingBox gt =
                box_around(int(std::lround(p.x)), int(std::lround(p.y)), ts, ts);
            auto [px, py] = detail::argmax(field.maps[j]);
            sr.ious.push_back(iou(box_around(px, py, ts, ts), gt));
          }
        }
      } else {
        for (size_t q = 0; q < seq.homographies.size(); ++q) {
          for (const Keypoint& kp : kps) {
            Image tpl = extract_patch(seq.images[0], box_around(kp.x, kp.y, ts, ts));
            Plane map = zncc_match(seq.images[q + 1], tpl, Colorspace::HSV, opt.dim.plan);
            Point2 p = apply_homography(seq.homographies[q],
                                        {double(kp.x), double(kp.y)});
            BoundingBox gt =
                box_around(int(std::lround(p.x)), int(std::lround(p.y)), ts, ts);
            auto [px, py] = detail::argmax(map);
            sr.ious.push_back(iou(box_around(px, py, ts, ts), gt));
          }
        }
      }
    });

    std::vector<double> pooled;
    for (VggSequenceResult& sr : size_result.sequences) {
      if (!sr.ious.empty()) sr.curve = success_curve(sr.ious);
      pooled.insert(pooled.end(), sr.ious.begin(), sr.ious.end());
    }
    if (pooled.empty()) throw std::runtime_error("vgg correspondence: no usable keypoints");
    size_result.pooled = success_curve(pooled);
    size_result.comparisons = int(pooled.size());
    result.sizes.push_back(std::move(size_result));
  }

  result.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return result;
}

struct VggDetectResult {
  int template_size = 0;
  EvalCurve pr;
  double best_fscore = 0.0;
  int templates = 0;
  int query_images = 0;
  double total_seconds = 0.0;
};

/// Detection protocol: templates from the first image of every color
/// sequence are matched against every query image of every color sequence.
/// Detections are similarity local maxima over a sweeping global threshold;
/// a detection is correct when it overlaps the homography-mapped box of its
/// own keypoint with IoU >= 0.5. Cross-sequence pairings have no ground
/// truth, so everything found there counts against precision.
inline VggDetectResult run_vgg_detection(const std::vector<SequenceCase>& seqs_in,
                                         const BenchOptions& opt, int template_size = 17,
                                         int templates_per_sequence = 10) {
  std::vector<const SequenceCase*> seqs;
  for (const SequenceCase& s : seqs_in)
    if (!s.images[0].grayscale()) seqs.push_back(&s);  // color-only protocol
  if (seqs.empty()) throw std::invalid_argument("run_vgg_detection: no color sequences");

  const int ts = template_size;
  VggDetectResult result;
  result.template_size = ts;
  auto wall0 = std::chrono::steady_clock::now();

  struct TemplateRef {
    int seq = 0;        // owning sequence index
    Keypoint keypoint;  // in image 1 of that sequence
  };
  std::vector<TemplateRef> tpl_refs;
  std::vector<ChannelStack> patches;      // DIM kernels
  std::vector<Image> intensity_patches;   // ZNCC templates
  for (size_t si = 0; si < seqs.size(); ++si) {
    std::vector<Keypoint> kps = sequence_keypoints(*seqs[si], ts, templates_per_sequence);
    Image src = detail::to_match_space(seqs[si]->images[0], Method::Dim);
    ChannelStack stack1 = preprocess(src, ts, ts, opt.sigma_scale);
    for (const Keypoint& kp : kps) {
      tpl_refs.push_back({int(si), kp});
      patches.push_back(extract_patch(stack1, box_around(kp.x, kp.y, ts, ts)));
      intensity_patches.push_back(
          extract_patch(seqs[si]->images[0], box_around(kp.x, kp.y, ts, ts)));
    }
  }
  result.templates = int(tpl_refs.size());
  if (tpl_refs.empty()) throw std::runtime_error("vgg detection: no usable keypoints");

  TemplateBank bank;
  if (opt.method == Method::Dim) bank = build_bank(patches);

  struct QueryRef {
    int seq = 0;
    int view = 0;  // 0..4 -> image 2..6
  };
  std::vector<QueryRef> queries;
  for (size_t si = 0; si < seqs.size(); ++si)
    for (int v = 0; v < 5; ++v) queries.push_back({int(si), v});
  result.query_images = int(queries.size());

  std::vector<std::vector<DetectionCase>> per_query(queries.size());
  parallel_for(int(queries.size()), opt.threads, [&](int qi) {
    const QueryRef& q = queries[size_t(qi)];
    const SequenceCase& qseq = *seqs[size_t(q.seq)];
    const Image& query_img = qseq.images[size_t(q.view) + 1];
    std::vector<DetectionCase>& cases = per_query[size_t(qi)];
    cases.resize(tpl_refs.size());

    std::vector<Plane> maps(tpl_refs.size());
    if (opt.method == Method::Dim) {
      Image query = detail::to_match_space(query_img, Method::Dim);
      ChannelStack xq = preprocess(query, ts, ts, opt.sigma_scale);
      SimilarityField field = dim_solve(xq, bank, opt.dim);
      field = crop_field(field);
      field = postprocess_sum(field, ts, ts, opt.dim.lambda, opt.dim.plan);
      maps = std::move(field.maps);
    } else {
      for (size_t j = 0; j < tpl_refs.size(); ++j)
        maps[j] = zncc_match(query_img, intensity_patches[j], Colorspace::HSV, opt.dim.plan);
    }

    for (size_t j = 0; j < tpl_refs.size(); ++j) {
      cases[j].detections = detect_matches(maps[j], 0.0, ts, ts);
      if (tpl_refs[j].seq == q.seq) {
        const Homography& h = qseq.homographies[size_t(q.view)];
        Point2 p = apply_homography(
            h, {double(tpl_refs[j].keypoint.x), double(tpl_refs[j].keypoint.y)});
        cases[j].ground_truth.push_back(
            box_around(int(std::lround(p.x)), int(std::lround(p.y)), ts, ts));
      }
    }
  });

  std::vector<DetectionCase> all_cases;
  for (auto& v : per_query)
    for (DetectionCase& c : v) all_cases.push_back(std::move(c));
  result.pr = pr_curve(all_cases, 0.5);
  result.best_fscore = result.pr.best_fscore;
  result.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return result;
}

struct SweepRow {
  std::string param;
  double factor = 1.0;
  double auc = 0.0;
};

/// One-at-a-time parameter sensitivity on the pair-correspondence protocol.
/// Supported params: sigma, epsilon1, epsilon2, lambda, iterations. When
/// sweeping epsilon2, epsilon1 keeps the value derived from the baseline
/// epsilon2 so only one parameter actually changes.
inline std::vector<SweepRow> run_sweep(const std::string& param,
                                       const std::vector<double>& factors,
                                       const std::vector<PairCase>& cases,
                                       const BenchOptions& base) {
  std::vector<SweepRow> rows;
  for (double f : factors) {
    BenchOptions opt = base;
    opt.method = Method::Dim;
    if (param == "sigma") {
      opt.sigma_scale = base.sigma_scale * f;
    } else if (param == "epsilon1") {
      opt.dim.epsilon1_scale = base.dim.epsilon1_scale * f;
    } else if (param == "epsilon2") {
      opt.dim.epsilon1_ref_epsilon2 = base.dim.epsilon2;
      opt.dim.epsilon2 = base.dim.epsilon2 * f;
    } else if (param == "lambda") {
      opt.dim.lambda = base.dim.lambda * f;
    } else if (param == "iterations") {
      int base_iters = base.dim.iterations > 0 ? base.dim.iterations : 10;
      opt.dim.iterations = std::max(1, int(std::lround(base_iters * f)));
    } else {
      throw std::invalid_argument("run_sweep: unknown param '" + param + "'");
    }
    BbsResult r = run_bbs_benchmark(cases, opt);
    rows.push_back({param, f, r.curve_best.auc});
  }
  return rows;
}

// ---- CSV report helpers ----

inline void write_success_csv(const EvalCurve& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "threshold,success_fraction\n";
  for (size_t i = 0; i < c.thresholds.size(); ++i)
    out << c.thresholds[i] << "," << c.values[i] << "\n";
  out << "# auc," << c.auc << "\n";
}

inline void write_pr_csv(const EvalCurve& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "threshold,recall,precision\n";
  for (size_t i = 0; i < c.thresholds.size(); ++i)
    out << c.thresholds[i] << "," << c.values[i] << "," << c.values2[i] << "\n";
  out << "# best_fscore," << c.best_fscore << "\n";
}

inline void write_bbs_pairs_csv(const BbsResult& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "pair,iou,iou_topk,templates,seconds\n";
  for (const BbsPairResult& p : r.pairs)
    out << p.id << "," << p.iou_best << "," << p.iou_topk << "," << p.templates_used << ","
        << p.seconds << "\n";
}

inline void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "param,factor,auc\n";
  for (const SweepRow& r : rows) out << r.param << "," << r.factor << "," << r.auc << "\n";
}

}  // namespace dimtm
