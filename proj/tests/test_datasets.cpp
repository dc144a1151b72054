#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "dimtm/datasets.hpp"
#include "helpers.hpp"

using namespace dimtm;
namespace fs = std::filesystem;
using testutil::random_image;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_identity_h(const fs::path& p) {
  std::ofstream out(p);
  out << "1 0 0\n0 1 0\n0 0 1\n";
}

}  // namespace

TEST_CASE("bbs dataset round trips through the writer helper") {
  std::mt19937_64 rng(71);
  fs::path dir = fresh_dir("dimtm_bbs_roundtrip");
  std::vector<BoundingBox> b1, b2;
  for (int i = 0; i < 3; ++i) {
    Image img1 = random_image(rng, 40 + i, 30, 3);
    Image img2 = random_image(rng, 40, 30 + i, 3);
    BoundingBox box1{5 + i, 6, 8, 9}, box2{7, 4 + i, 8, 9};
    write_bbs_case(dir.string(), "pair00" + std::to_string(i), img1, img2, box1, box2);
    b1.push_back(box1);
    b2.push_back(box2);
  }
  std::vector<PairCase> cases = load_bbs_dataset(dir.string());
  REQUIRE(cases.size() == 3);
  for (int i = 0; i < 3; ++i) {
    REQUIRE(cases[size_t(i)].id == "pair00" + std::to_string(i));
    REQUIRE(cases[size_t(i)].gt_box1 == b1[size_t(i)]);
    REQUIRE(cases[size_t(i)].gt_box2 == b2[size_t(i)]);
    REQUIRE(load_image(cases[size_t(i)].image1).width == 40 + i);
  }
  // repeated loads are identical
  std::vector<PairCase> again = load_bbs_dataset(dir.string());
  for (size_t i = 0; i < 3; ++i) {
    REQUIRE(again[i].id == cases[i].id);
    REQUIRE(again[i].image1 == cases[i].image1);
  }
}

TEST_CASE("bbs loader rejects malformed cases by name") {
  std::mt19937_64 rng(72);
  fs::path dir = fresh_dir("dimtm_bbs_bad");
  Image img = random_image(rng, 20, 20, 3);

  write_bbs_case(dir.string(), "ok", img, img, {1, 1, 4, 4}, {2, 2, 4, 4});
  {
    std::ofstream gt(dir / "bad_gt.txt");
    gt << "1 2 3\n1 2 3 4\n";  // three tokens on line one
  }
  save_png(img, (dir / "bad_a.png").string());
  save_png(img, (dir / "bad_b.png").string());
  REQUIRE_THROWS_WITH(load_bbs_dataset(dir.string()),
                      Catch::Matchers::ContainsSubstring("bad"));

  fs::remove(dir / "bad_gt.txt");
  write_bbs_case(dir.string(), "oob", img, img, {15, 15, 10, 10}, {0, 0, 4, 4});
  REQUIRE_THROWS_WITH(load_bbs_dataset(dir.string()),
                      Catch::Matchers::ContainsSubstring("outside image"));

  fs::remove(dir / "oob_gt.txt");
  {
    std::ofstream gt(dir / "gone_gt.txt");
    gt << "0 0 2 2\n0 0 2 2\n";
  }
  REQUIRE_THROWS_WITH(load_bbs_dataset(dir.string()),
                      Catch::Matchers::ContainsSubstring("missing image"));

  fs::path empty = fresh_dir("dimtm_bbs_empty");
  REQUIRE_THROWS(load_bbs_dataset(empty.string()));
}

TEST_CASE("vgg sequence loading, scaling and conjugation") {
  std::mt19937_64 rng(73);
  fs::path root = fresh_dir("dimtm_vgg");
  fs::path seq = root / "synth";
  fs::create_directories(seq);
  for (int i = 1; i <= 6; ++i)
    save_png(random_image(rng, 64, 48, 3), (seq / ("img" + std::to_string(i) + ".png")).string());
  write_identity_h(seq / "H1to2p");
  {
    std::ofstream out(seq / "H1to3p");
    out << "1 0 100\n0 1 60\n0 0 1\n";  // pure translation
  }
  write_identity_h(seq / "H1to4p");
  write_identity_h(seq / "H1to5p");
  write_identity_h(seq / "H1to6p");

  SequenceCase full = load_vgg_sequence(seq.string(), 1.0);
  REQUIRE(full.name == "synth");
  REQUIRE(full.images.size() == 6);
  REQUIRE(full.homographies.size() == 5);
  Point2 moved = apply_homography(full.homographies[1], {10, 20});
  REQUIRE(moved.x == Catch::Approx(110.0));
  REQUIRE(moved.y == Catch::Approx(80.0));

  SequenceCase half = load_vgg_sequence(seq.string(), 0.5);
  REQUIRE(half.images[0].width == 32);
  // conjugated translation: scaling then mapping equals mapping then scaling
  Point2 conj = apply_homography(half.homographies[1], {50, 30});
  REQUIRE(conj.x == Catch::Approx(50.0 + 50.0).margin(1e-9));
  REQUIRE(conj.y == Catch::Approx(30.0 + 30.0).margin(1e-9));

  std::vector<std::string> seqs = list_vgg_sequences(root.string());
  REQUIRE(seqs.size() == 1);

  fs::remove(seq / "img6.png");
  REQUIRE_THROWS_WITH(load_vgg_sequence(seq.string(), 1.0),
                      Catch::Matchers::ContainsSubstring("img6"));
  save_png(random_image(rng, 64, 48, 3), (seq / "img6.png").string());
  {
    std::ofstream out(seq / "H1to4p");
    out << "0 0 0\n0 0 0\n0 0 0\n";
  }
  REQUIRE_THROWS_WITH(load_vgg_sequence(seq.string(), 1.0),
                      Catch::Matchers::ContainsSubstring("non-invertible"));
}

TEST_CASE("synthetic scenes are reproducible and honor packing limits") {
  SynthScene a = synth_scene(99, 2, 8, 6, 50, 40, 0.0);
  SynthScene b = synth_scene(99, 2, 8, 6, 50, 40, 0.0);
  REQUIRE(a.boxes == b.boxes);
  for (int c = 0; c < 3; ++c)
    REQUIRE(testutil::max_abs_diff(a.image.channels[size_t(c)], b.image.channels[size_t(c)]) ==
            0.0);

  // planted patch reads back exactly when noise-free
  for (size_t p = 0; p < a.boxes.size(); ++p) {
    Image cut(a.boxes[p].w, a.boxes[p].h, 3);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < a.boxes[p].h; ++y)
        for (int x = 0; x < a.boxes[p].w; ++x)
          cut.channels[size_t(c)](y, x) =
              a.image.channels[size_t(c)](a.boxes[p].y + y, a.boxes[p].x + x);
    for (int c = 0; c < 3; ++c)
      REQUIRE(testutil::max_abs_diff(cut.channels[size_t(c)],
                                     a.patches[p].channels[size_t(c)]) == 0.0);
  }

  // noise changes pixels but not the underlying content stream
  SynthScene noisy = synth_scene(99, 2, 8, 6, 50, 40, 0.05);
  REQUIRE(noisy.boxes == a.boxes);

  REQUIRE_THROWS_WITH(synth_scene(1, 50, 9, 9, 20, 20, 0.0),
                      Catch::Matchers::ContainsSubstring("packing"));
}
