#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dimtm/eval.hpp"
#include "dimtm/image.hpp"
#include "dimtm/image_io.hpp"

namespace dimtm {

namespace fs = std::filesystem;

/// One correspondence benchmark pair: two frames of the same scene plus the
/// target's box in each.
struct PairCase {
  std::string id;
  std::string image1, image2;
  BoundingBox gt_box1, gt_box2;
};

namespace detail {

inline std::string find_case_image(const fs::path& root, const std::string& stem) {
  for (const char* ext : {".png", ".ppm", ".pgm"}) {
    fs::path p = root / (stem + ext);
    if (fs::exists(p)) return p.string();
  }
  return {};
}

inline BoundingBox parse_box_line(const std::string& line, const std::string& context) {
  std::istringstream ss(line);
  BoundingBox b;
  std::string extra;
  if (!(ss >> b.x >> b.y >> b.w >> b.h) || (ss >> extra) || b.w < 1 || b.h < 1)
    throw std::runtime_error(context + ": malformed ground-truth line '" + line + "'");
  return b;
}

inline void check_box_inside(const BoundingBox& b, const std::string& image_path,
                             const std::string& context) {
  auto [w, h] = image_dims(image_path);
  if (!BoundingBox{0, 0, w, h}.contains_box(b))
    throw std::runtime_error(context + ": box outside image " + image_path);
}

}  // namespace detail

/// Loads a correspondence-pair directory. Each case consists of
/// <id>_a.<ext>, <id>_b.<ext> (png/ppm/pgm) and <id>_gt.txt holding one
/// "x y w h" line per image. Cases are returned sorted by id.
inline std::vector<PairCase> load_bbs_dataset(const std::string& root) {
  if (!fs::is_directory(root)) throw std::runtime_error("BBS dataset root not found: " + root);
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root)) {
    std::string name = entry.path().filename().string();
    const std::string suffix = "_gt.txt";
    if (name.size() > suffix.size() && name.ends_with(suffix))
      ids.push_back(name.substr(0, name.size() - suffix.size()));
  }
  std::sort(ids.begin(), ids.end());
  if (ids.empty()) throw std::runtime_error("BBS dataset root has no *_gt.txt files: " + root);

  std::vector<PairCase> cases;
  for (const std::string& id : ids) {
    std::string context = "BBS case " + id;
    PairCase c;
    c.id = id;
    c.image1 = detail::find_case_image(root, id + "_a");
    c.image2 = detail::find_case_image(root, id + "_b");
    if (c.image1.empty() || c.image2.empty())
      throw std::runtime_error(context + ": missing image file");
    std::ifstream gt(fs::path(root) / (id + "_gt.txt"));
    std::string line1, line2;
    if (!std::getline(gt, line1) || !std::getline(gt, line2))
      throw std::runtime_error(context + ": ground-truth file needs two lines");
    c.gt_box1 = detail::parse_box_line(line1, context);
    c.gt_box2 = detail::parse_box_line(line2, context);
    detail::check_box_inside(c.gt_box1, c.image1, context);
    detail::check_box_inside(c.gt_box2, c.image2, context);
    cases.push_back(std::move(c));
  }
  return cases;
}

/// Writes one pair case in the layout load_bbs_dataset reads.
inline void write_bbs_case(const std::string& root, const std::string& id, const Image& img1,
                           const Image& img2, const BoundingBox& box1, const BoundingBox& box2) {
  fs::create_directories(root);
  save_png(img1, (fs::path(root) / (id + "_a.png")).string());
  save_png(img2, (fs::path(root) / (id + "_b.png")).string());
  std::ofstream gt(fs::path(root) / (id + "_gt.txt"));
  gt << box1.x << " " << box1.y << " " << box1.w << " " << box1.h << "\n"
     << box2.x << " " << box2.y << " " << box2.w << " " << box2.h << "\n";
}

/// One homography sequence: six views of a scene; homographies[k] maps
/// image 1 pixel coordinates to image k+2 (already conjugated when the
/// sequence was rescaled).
struct SequenceCase {
  std::string name;
  std::vector<std::string> image_paths;
  std::vector<Image> images;
  std::vector<Homography> homographies;
  double scale = 1.0;
};

/// Loads img1..img6 plus H1to2p..H1to6p from a sequence directory, rescaling
/// images by `scale` and conjugating the homographies accordingly
/// (H' = S H S^-1).
inline SequenceCase load_vgg_sequence(const std::string& dir, double scale = 1.0) {
  if (!fs::is_directory(dir)) throw std::runtime_error("sequence directory not found: " + dir);
  SequenceCase seq;
  seq.name = fs::path(dir).filename().string();
  seq.scale = scale;
  for (int i = 1; i <= 6; ++i) {
    std::string p = detail::find_case_image(dir, "img" + std::to_string(i));
    if (p.empty())
      throw std::runtime_error("sequence " + seq.name + ": missing img" + std::to_string(i));
    seq.image_paths.push_back(p);
    Image img = load_image(p);
    seq.images.push_back(scale == 1.0 ? std::move(img) : resize(img, scale));
  }
  Homography s = Homography::scaling(scale);
  Homography sinv = Homography::scaling(1.0 / scale);
  for (int k = 2; k <= 6; ++k) {
    fs::path hp = fs::path(dir) / ("H1to" + std::to_string(k) + "p");
    std::ifstream in(hp);
    if (!in) throw std::runtime_error("sequence " + seq.name + ": missing " + hp.string());
    Homography h;
    for (double& v : h.m)
      if (!(in >> v)) throw std::runtime_error("sequence " + seq.name + ": malformed " + hp.string());
    if (!h.invertible())
      throw std::runtime_error("sequence " + seq.name + ": non-invertible " + hp.string());
    seq.homographies.push_back(scale == 1.0 ? h : s * h * sinv);
  }
  return seq;
}

/// Sequence subdirectories (anything containing an img1.*), sorted by name.
inline std::vector<std::string> list_vgg_sequences(const std::string& root) {
  if (!fs::is_directory(root)) throw std::runtime_error("VGG dataset root not found: " + root);
  std::vector<std::string> dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory() && !detail::find_case_image(entry.path(), "img1").empty())
      dirs.push_back(entry.path().string());
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

struct SynthScene {
  Image image;
  std::vector<BoundingBox> boxes;
  std::vector<Image> patches;
};

/// Random scene for desk-scale checks: a uniform-noise background with
/// non-overlapping random patches planted at known boxes, plus optional
/// Gaussian pixel noise. The scene content depends only on `seed` and the
/// geometry, never on noise_sigma, so the same seed yields the same clean
/// scene with and without noise.
inline SynthScene synth_scene(uint64_t seed, int n_plants, int tpl_w, int tpl_h, int img_w,
                              int img_h, double noise_sigma, int channels = 3) {
  if (tpl_w > img_w || tpl_h > img_h) throw std::invalid_argument("synth_scene: template too big");
  if ((long long)n_plants * tpl_w * tpl_h > (long long)img_w * img_h)
    throw std::runtime_error("synth_scene: infeasible packing");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  SynthScene scene;
  scene.image = Image(img_w, img_h, channels);
  for (Plane& c : scene.image.channels)
    for (double& v : c) v = uni(rng);

  std::uniform_int_distribution<int> dx(0, img_w - tpl_w);
  std::uniform_int_distribution<int> dy(0, img_h - tpl_h);
  for (int p = 0; p < n_plants; ++p) {
    BoundingBox box;
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      box = {dx(rng), dy(rng), tpl_w, tpl_h};
      placed = std::none_of(scene.boxes.begin(), scene.boxes.end(),
                            [&](const BoundingBox& b) { return boxes_overlap(box, b); });
    }
    if (!placed) throw std::runtime_error("synth_scene: infeasible packing");
    Image patch(tpl_w, tpl_h, channels);
    for (Plane& c : patch.channels)
      for (double& v : c) v = uni(rng);
    for (int c = 0; c < channels; ++c)
      for (int y = 0; y < tpl_h; ++y)
        for (int x = 0; x < tpl_w; ++x)
          scene.image.channels[size_t(c)](box.y + y, box.x + x) = patch.channels[size_t(c)](y, x);
    scene.boxes.push_back(box);
    scene.patches.push_back(std::move(patch));
  }

  if (noise_sigma > 0.0) {
    std::mt19937_64 noise_rng(seed ^ 0x9E3779B97F4A7C15ull);
    std::normal_distribution<double> gauss(0.0, noise_sigma);
    for (Plane& c : scene.image.channels)
      for (double& v : c) v = std::clamp(v + gauss(noise_rng), 0.0, 1.0);
  }
  return scene;
}

}  // namespace dimtm
