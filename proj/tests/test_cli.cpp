#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "dimtm/datasets.hpp"

using namespace dimtm;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  std::string cmd = std::string(DIMTM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("cli match writes heatmap, annotation and peak csv") {
  fs::path dir = fs::temp_directory_path() / "dimtm_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);

  SynthScene clean = synth_scene(4242, 1, 13, 13, 80, 64, 0.0);
  SynthScene noisy = synth_scene(4242, 1, 13, 13, 80, 64, 0.02);
  fs::path tpl_png = dir / "scene_a.png";
  fs::path query_png = dir / "scene_b.png";
  save_png(clean.image, tpl_png.string());
  save_png(noisy.image, query_png.string());
  BoundingBox box = clean.boxes[0];
  std::string box_arg = std::to_string(box.x) + "," + std::to_string(box.y) + "," +
                        std::to_string(box.w) + "," + std::to_string(box.h);

  fs::path out_dim = dir / "out_dim";
  REQUIRE(run_cli("match --image " + query_png.string() + " --template-image " +
                  tpl_png.string() + " --box " + box_arg + " --out " + out_dim.string()) == 0);
  REQUIRE(fs::exists(out_dim / "heatmap.png"));
  REQUIRE(fs::exists(out_dim / "annotated.png"));
  REQUIRE(fs::exists(out_dim / "peaks.csv"));

  // top peak in the csv sits within one pixel of the planted center
  std::ifstream csv(out_dim / "peaks.csv");
  std::string header, first;
  std::getline(csv, header);
  std::getline(csv, first);
  int rank, px, py;
  char c;
  std::istringstream ss(first);
  ss >> rank >> c >> px >> c >> py;
  auto [ax, ay] = box_anchor(box);
  REQUIRE(std::abs(px - ax) <= 1);
  REQUIRE(std::abs(py - ay) <= 1);

  fs::path out_zncc = dir / "out_zncc";
  REQUIRE(run_cli("match --method zncc --image " + query_png.string() + " --template-image " +
                  tpl_png.string() + " --box " + box_arg + " --out " + out_zncc.string()) == 0);
  REQUIRE(file_bytes(out_dim / "heatmap.png") != file_bytes(out_zncc / "heatmap.png"));
}

TEST_CASE("cli failures exit nonzero") {
  REQUIRE(run_cli("match --image /nonexistent.png --template-image /nonexistent.png "
                  "--box 0,0,4,4") != 0);
  REQUIRE(run_cli("bench-bbs --dataset /nonexistent_dir") != 0);
  REQUIRE(run_cli("sweep --param bogus --dataset /nonexistent_dir") != 0);
  REQUIRE(run_cli("definitely-not-a-command") != 0);
}

TEST_CASE("cli bench-bbs produces reports on a mini dataset") {
  fs::path dir = fs::temp_directory_path() / "dimtm_cli_bbs";
  fs::remove_all(dir);
  fs::create_directories(dir);
  for (int i = 0; i < 2; ++i) {
    SynthScene clean = synth_scene(900 + uint64_t(i), 1, 13, 13, 72, 60, 0.0);
    SynthScene noisy = synth_scene(900 + uint64_t(i), 1, 13, 13, 72, 60, 0.01);
    write_bbs_case(dir.string(), "p" + std::to_string(i), clean.image, noisy.image,
                   clean.boxes[0], clean.boxes[0]);
  }
  fs::path out = dir / "report";
  REQUIRE(run_cli("bench-bbs --dataset " + dir.string() + " --max-additional 1 --out " +
                  out.string()) == 0);
  for (const char* f : {"pairs.csv", "success.csv", "success_topk.csv", "success.png",
                        "summary.txt"})
    REQUIRE(fs::exists(out / f));
}
