// End-to-end tests for the command-line driver. Each case launches the
// installed binary (path in the ADINKRA_CLI environment variable) as a
// subprocess and inspects exit codes, stdout, and the files it writes.
// Expensive artifacts — a synthetic dataset, a one-epoch checkpoint, and
// feature files — are built once and shared.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "adinkra/data/image_io.hpp"
#include "adinkra/ml/features.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli_binary() {
  const char* env = std::getenv("ADINKRA_CLI");
  REQUIRE_MESSAGE(env != nullptr,
                  "ADINKRA_CLI must point at the driver binary");
  return env;
}

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const auto tmp = fs::temp_directory_path() / "adinkra_cli_tests";
  fs::create_directories(tmp);
  const auto out_path = tmp / ("stdout_" + std::to_string(counter) + ".txt");
  const auto err_path = tmp / ("stderr_" + std::to_string(counter) + ".txt");
  ++counter;
  const std::string cmd = "\"" + cli_binary() + "\" " + args + " >\"" +
                          out_path.string() + "\" 2>\"" + err_path.string() +
                          "\"";
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

std::map<std::string, std::string> parse_manifest(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE_MESSAGE(bool(in), "manifest missing: " << path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos)
      kv.emplace(line.substr(0, eq), line.substr(eq + 1));  // first wins
  }
  return kv;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

// One dataset, one checkpoint, and train/test feature files shared by
// every case that needs a trained model.
struct Fixture {
  fs::path root;
  fs::path data;
  fs::path run;
  fs::path ftrain;
  fs::path ftest;
  int classes = 6;
  int per_class = 5;
};

const Fixture& fx() {
  static const Fixture fixture = [] {
    Fixture f;
    f.root = fs::temp_directory_path() / "adinkra_cli_fixture";
    fs::remove_all(f.root);
    fs::create_directories(f.root);
    f.data = f.root / "data";
    f.run = f.root / "run";
    f.ftrain = f.root / "ftrain";
    f.ftest = f.root / "ftest";

    auto r = run_cli("synth --classes 6 --per-class 5 --size 16 --seed 11 "
                     "--out \"" + f.data.string() + "\"");
    REQUIRE_MESSAGE(r.code == 0, "synth failed: " << r.err);

    r = run_cli("train --data \"" + f.data.string() +
                "\" --epochs 1 --batch 8 --workers 1 --seed 1 --out \"" +
                f.run.string() + "\"");
    REQUIRE_MESSAGE(r.code == 0, "train failed: " << r.err);

    r = run_cli("features --checkpoint \"" + (f.run / "model.adnk").string() +
                "\" --data \"" + f.data.string() +
                "\" --split train --workers 1 --out \"" + f.ftrain.string() +
                "\"");
    REQUIRE_MESSAGE(r.code == 0, "features(train) failed: " << r.err);

    r = run_cli("features --checkpoint \"" + (f.run / "model.adnk").string() +
                "\" --data \"" + f.data.string() +
                "\" --split test --workers 1 --out \"" + f.ftest.string() +
                "\"");
    REQUIRE_MESSAGE(r.code == 0, "features(test) failed: " << r.err);
    return f;
  }();
  return fixture;
}

}  // namespace

TEST_CASE("no subcommand, bad flags, and bad values exit with code 2") {
  CHECK(run_cli("").code == 2);
  CHECK(run_cli("frobnicate").code == 2);
  CHECK(run_cli("synth --bogus-flag 1 --out /tmp/x").code == 2);
  CHECK(run_cli("synth --classes 63 --out /tmp/adinkra_cli_never").code == 2);
  CHECK(run_cli("synth").code == 2);  // --out missing
  CHECK_FALSE(fs::exists("/tmp/adinkra_cli_never"));
}

TEST_CASE("--help exits 0 and lists every subcommand") {
  const auto r = run_cli("--help");
  CHECK(r.code == 0);
  for (const char* name : {"synth", "train", "eval", "predict", "features",
                           "classical", "heatmap", "bench"})
    CHECK_MESSAGE(r.out.find(name) != std::string::npos, name);
}

TEST_CASE("synthesis writes one directory per class plus catalog and manifest") {
  const auto& f = fx();
  CHECK(fs::is_regular_file(f.data / "catalog.tsv"));
  CHECK(fs::is_regular_file(f.data / "manifest.txt"));
  int dirs = 0, files = 0;
  for (const auto& entry : fs::directory_iterator(f.data))
    if (entry.is_directory()) {
      ++dirs;
      for (const auto& img : fs::directory_iterator(entry.path()))
        if (img.path().extension() == ".png") ++files;
    }
  CHECK(dirs == f.classes);
  CHECK(files == f.classes * f.per_class);

  const auto manifest = parse_manifest(f.data / "manifest.txt");
  CHECK(manifest.at("command") == "synth");
  CHECK(manifest.at("files") == std::to_string(f.classes * f.per_class));
  CHECK(manifest.at("config.seed") == "11");
}

TEST_CASE("synthesis is reproducible byte for byte from the same seed") {
  const auto& f = fx();
  const auto again = f.root / "data_again";
  const auto r = run_cli("synth --classes 6 --per-class 5 --size 16 "
                         "--seed 11 --out \"" + again.string() + "\"");
  REQUIRE(r.code == 0);
  CHECK(slurp(f.data / "catalog.tsv") == slurp(again / "catalog.tsv"));
  for (int c = 0; c < f.classes; ++c) {
    const auto cls = "synth_" + std::to_string(c);
    for (const auto& img : fs::directory_iterator(f.data / cls)) {
      if (img.path().extension() != ".png") continue;
      CHECK_MESSAGE(slurp(img.path()) ==
                        slurp(again / cls / img.path().filename()),
                    img.path().string());
    }
  }
}

TEST_CASE("a manifest fed back through --config replays the run exactly") {
  const auto& f = fx();
  const auto replay = f.root / "data_replay";
  const auto r = run_cli("synth --config \"" +
                         (f.data / "manifest.txt").string() + "\" --out \"" +
                         replay.string() + "\"");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(slurp(f.data / "catalog.tsv") == slurp(replay / "catalog.tsv"));
  CHECK(slurp(f.data / "synth_0" / "img_00000.png") ==
        slurp(replay / "synth_0" / "img_00000.png"));
}

TEST_CASE("flags on the command line override config-file values") {
  const auto& f = fx();
  const auto out = f.root / "data_small";
  const auto r = run_cli("synth --config \"" +
                         (f.data / "manifest.txt").string() +
                         "\" --classes 3 --out \"" + out.string() + "\"");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  int dirs = 0;
  for (const auto& entry : fs::directory_iterator(out))
    if (entry.is_directory()) ++dirs;
  CHECK(dirs == 3);
  CHECK(parse_manifest(out / "manifest.txt").at("config.classes") == "3");
}

TEST_CASE("an unknown configuration key is rejected with exit code 2") {
  const auto& f = fx();
  const auto cfg = f.root / "bad.cfg";
  std::ofstream(cfg) << "classes=4\nnot_a_real_key=7\n";
  const auto r = run_cli("synth --config \"" + cfg.string() +
                         "\" --out \"" + (f.root / "never").string() + "\"");
  CHECK(r.code == 2);
  CHECK(r.err.find("not_a_real_key") != std::string::npos);
}

TEST_CASE("training writes a history CSV, a checkpoint, and a full manifest") {
  const auto& f = fx();
  CHECK(fs::is_regular_file(f.run / "model.adnk"));

  const auto history = lines_of(slurp(f.run / "history.csv"));
  REQUIRE(history.size() == 2);  // header + 1 epoch
  CHECK(history[0] ==
        "epoch,train_loss,train_acc,val_loss,val_acc,seconds,peak_mem");
  CHECK(history[1].rfind("1,", 0) == 0);

  const auto manifest = parse_manifest(f.run / "manifest.txt");
  CHECK(manifest.at("command") == "train");
  CHECK(manifest.at("classes") == "6");
  CHECK(manifest.at("best_epoch") == "1");
  // defaults resolved into the manifest even when the flag was omitted
  CHECK(manifest.at("config.lr") == "0.0001");
  CHECK(manifest.at("config.spec") == "reduced");
  CHECK(manifest.at("config.batch_pred") == "4");
}

TEST_CASE("training rejects zero epochs with exit code 2") {
  const auto& f = fx();
  const auto r = run_cli("train --data \"" + f.data.string() +
                         "\" --epochs 0 --out \"" +
                         (f.root / "never_train").string() + "\"");
  CHECK(r.code == 2);
  CHECK(r.err.find("epochs") != std::string::npos);
}

TEST_CASE("feature extraction emits a loadable matrix of the expected shape") {
  const auto& f = fx();
  const auto fm =
      adinkra::ml::load_features((f.ftrain / "features.adnf").string());
  CHECK(fm.dim == 512);  // fc2 tap
  CHECK(fm.rows == int64_t(fm.labels.size()));
  const auto manifest = parse_manifest(f.ftrain / "manifest.txt");
  CHECK(manifest.at("rows") == std::to_string(fm.rows));
  CHECK(manifest.at("dim") == "512");
  CHECK(manifest.at("config.tap") == "fc2");
  // every class contributes the same number of training rows
  std::map<std::int64_t, int> per_class;
  for (auto label : fm.labels) ++per_class[label];
  REQUIRE(per_class.size() == 6);
  for (const auto& [label, count] : per_class)
    CHECK(count == per_class.begin()->second);
}

TEST_CASE("evaluation writes a confusion matrix consistent with the split") {
  const auto& f = fx();
  const auto out = f.root / "eval";
  const auto r = run_cli("eval --checkpoint \"" +
                         (f.run / "model.adnk").string() + "\" --data \"" +
                         f.data.string() + "\" --split test --workers 1 "
                         "--out \"" + out.string() + "\"");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("accuracy") != std::string::npos);

  const auto test_fm =
      adinkra::ml::load_features((f.ftest / "features.adnf").string());
  const auto rows = lines_of(slurp(out / "confusion.csv"));
  REQUIRE(int(rows.size()) == f.classes);
  std::int64_t total = 0;
  std::vector<std::int64_t> row_sums;
  for (const auto& row : rows) {
    std::int64_t sum = 0;
    std::istringstream in(row);
    std::string cell;
    int cells = 0;
    while (std::getline(in, cell, ',')) {
      sum += std::stoll(cell);
      ++cells;
    }
    CHECK(cells == f.classes);
    row_sums.push_back(sum);
    total += sum;
  }
  CHECK(total == test_fm.rows);
  // the split is stratified over equal class sizes, so per-class test
  // counts match
  for (auto sum : row_sums) CHECK(sum == row_sums.front());

  const auto manifest = parse_manifest(out / "manifest.txt");
  const double acc = std::stod(manifest.at("accuracy"));
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
}

TEST_CASE("prediction prints name, meaning, and confidence on one line") {
  const auto& f = fx();
  const auto r = run_cli("predict --checkpoint \"" +
                         (f.run / "model.adnk").string() + "\" --image \"" +
                         (f.data / "synth_2" / "img_00000.png").string() +
                         "\" --catalog \"" +
                         (f.data / "catalog.tsv").string() + "\" --out \"" +
                         (f.root / "pred").string() + "\"");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto output = lines_of(r.out);
  REQUIRE(output.size() == 1);
  std::vector<std::string> fields;
  std::istringstream in(output[0]);
  std::string field;
  while (std::getline(in, field, '\t')) fields.push_back(field);
  REQUIRE(fields.size() == 3);
  CHECK(fields[0].rfind("synth_", 0) == 0);
  CHECK(fields[1].rfind("synthetic symbol ", 0) == 0);
  REQUIRE(fields[2].size() == 6);  // 0.NNNN
  const double confidence = std::stod(fields[2]);
  CHECK(confidence >= 0.0);
  CHECK(confidence <= 1.0);
}

TEST_CASE("prediction on a missing image exits with code 2") {
  const auto& f = fx();
  const auto r = run_cli("predict --checkpoint \"" +
                         (f.run / "model.adnk").string() +
                         "\" --image /definitely/not/there.png --catalog \"" +
                         (f.data / "catalog.tsv").string() + "\"");
  CHECK(r.code == 2);
}

TEST_CASE("the classical grid consumes a custom grid file deterministically") {
  const auto& f = fx();
  const auto grid_file = f.root / "grid.txt";
  std::ofstream(grid_file) << "# one nearest-neighbour configuration\n"
                           << "knn n_neighbors=1;weights=uniform;p=2\n";
  const auto out1 = f.root / "cls1";
  const auto out2 = f.root / "cls2";
  const std::string common =
      "classical --features \"" + (f.ftrain / "features.adnf").string() +
      "\" --test-features \"" + (f.ftest / "features.adnf").string() +
      "\" --grid \"" + grid_file.string() + "\" --runs 3 --seed 5 --out ";
  const auto r1 = run_cli(common + "\"" + out1.string() + "\"");
  REQUIRE_MESSAGE(r1.code == 0, r1.err);
  const auto r2 = run_cli(common + "\"" + out2.string() + "\"");
  REQUIRE_MESSAGE(r2.code == 0, r2.err);

  const auto runs_csv = slurp(out1 / "grid_runs.csv");
  const auto means_csv = slurp(out1 / "grid_means.csv");
  CHECK(runs_csv == slurp(out2 / "grid_runs.csv"));
  CHECK(means_csv == slurp(out2 / "grid_means.csv"));
  CHECK(lines_of(runs_csv).size() == 4);   // header + 3 runs
  CHECK(lines_of(means_csv).size() == 2);  // header + 1 configuration
  CHECK(lines_of(runs_csv)[0] == "family,params,run,accuracy");
  CHECK(lines_of(means_csv)[0] == "family,params,mean_accuracy");
  CHECK(lines_of(means_csv)[1].rfind("knn,", 0) == 0);

  const auto manifest = parse_manifest(out1 / "manifest.txt");
  CHECK(manifest.at("result_rows") == "3");
  CHECK(manifest.at("failures") == "0");
}

TEST_CASE("an unknown grid family in a grid file exits with code 2") {
  const auto& f = fx();
  const auto grid_file = f.root / "bad_grid.txt";
  std::ofstream(grid_file) << "svm kernel=rbf\n";
  const auto r = run_cli(
      "classical --features \"" + (f.ftrain / "features.adnf").string() +
      "\" --test-features \"" + (f.ftest / "features.adnf").string() +
      "\" --grid \"" + grid_file.string() + "\" --out \"" +
      (f.root / "never_cls").string() + "\"");
  CHECK(r.code == 2);
  CHECK(r.err.find("unknown family") != std::string::npos);
}

TEST_CASE("heatmap renders one decodable panel per requested layer") {
  const auto& f = fx();
  const auto out = f.root / "hm";
  const auto r = run_cli("heatmap --checkpoint \"" +
                         (f.run / "model.adnk").string() + "\" --image \"" +
                         (f.data / "synth_0" / "img_00001.png").string() +
                         "\" --layer conv1,pool1 --out \"" + out.string() +
                         "\"");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  for (const char* tag : {"conv1", "pool1"}) {
    const auto panel = out / (std::string("panel_") + tag + ".png");
    REQUIRE_MESSAGE(fs::is_regular_file(panel), panel.string());
    const auto decoded = adinkra::data::decode_image(panel.string());
    CHECK(decoded.channels == 3);
    // 16x16 source image: three panels of width 16 with four 8px gutters,
    // and a 16px header strip above the 16px panel row
    CHECK(decoded.width == 3 * 16 + 4 * 8);
    CHECK(decoded.height == 16 + 16 + 2 * 8);
  }
  const auto manifest = parse_manifest(out / "manifest.txt");
  CHECK(manifest.at("config.alpha").rfind("0.4", 0) == 0);
  CHECK(manifest.at("config.layer") == "conv1,pool1");
}

TEST_CASE("heatmap rejects an unknown layer tag with exit code 2") {
  const auto& f = fx();
  const auto r = run_cli("heatmap --checkpoint \"" +
                         (f.run / "model.adnk").string() + "\" --image \"" +
                         (f.data / "synth_0" / "img_00001.png").string() +
                         "\" --layer conv9 --out \"" +
                         (f.root / "never_hm").string() + "\"");
  CHECK(r.code == 2);
  CHECK(r.err.find("conv9") != std::string::npos);
}

TEST_CASE("bench records positive wall time and peak memory in its manifest") {
  const auto& f = fx();
  const auto out = f.root / "bench";
  const auto r = run_cli("bench --checkpoint \"" +
                         (f.run / "model.adnk").string() + "\" --data \"" +
                         f.data.string() + "\" --split test --out \"" +
                         out.string() + "\"");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto manifest = parse_manifest(out / "manifest.txt");
  CHECK(std::stod(manifest.at("workload_seconds")) > 0.0);
  CHECK(std::stoll(manifest.at("peak_mem_bytes")) > 0);
  const double acc = std::stod(manifest.at("accuracy"));
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
}
