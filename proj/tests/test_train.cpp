#include "deepdetect/errors.hpp"
#include "deepdetect/fusion.hpp"
#include "deepdetect/raster_io.hpp"
#include "deepdetect/train.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace deepdetect;
using namespace deepdetect::testing;

namespace {

std::vector<TrainExample> tiny_set(int n, int size) {
  std::vector<TrainExample> out;
  for (int i = 0; i < n; ++i) {
    RgbImage img = to_rgb(textured_gray(size, size, 40 + i));
    out.push_back({img, build_label(img, DetectorProfile::normal())});
  }
  return out;
}

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 2;
  cfg.input_size = 16;
  cfg.lr_max = 1e-2;
  cfg.lr_min = 1e-4;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST_CASE("TrainConfig validation") {
  CHECK_NOTHROW(TrainConfig{}.validate());
  const TrainConfig def;
  CHECK(def.epochs == 100);
  CHECK(def.lr_max == 1e-3);
  CHECK(def.batch_size == 64);
  CHECK(def.tau == 0.5);
  CHECK(def.input_size == 480);
  auto bad = [](auto mutate) {
    TrainConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
  };
  bad([](TrainConfig& c) { c.epochs = 0; });
  bad([](TrainConfig& c) { c.lr_min = 0; });
  bad([](TrainConfig& c) { c.lr_min = 2 * c.lr_max; });
  bad([](TrainConfig& c) { c.batch_size = 0; });
  bad([](TrainConfig& c) { c.tau = 1.0; });
  bad([](TrainConfig& c) { c.input_size = 30; });
  bad([](TrainConfig& c) { c.train_fraction = 0.0; });
}

TEST_CASE("train_examples") {
  const auto set = tiny_set(5, 32);
  SUBCASE("log contract and determinism") {
    const TrainResult a = train_examples(set, {}, tiny_config());
    const TrainResult b = train_examples(set, {}, tiny_config());
    REQUIRE(a.log.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(a.log[i].epoch == i + 1);
    CHECK(a.log == b.log);
    CHECK(a.weights == b.weights);
    CHECK(a.best_epoch >= 1);
    CHECK(a.log[a.best_epoch - 1].val_loss <= a.log.back().val_loss);
    for (const auto& r : a.log) {
      CHECK(std::isfinite(r.train_loss));
      CHECK(r.train_loss >= 0.0);
    }
    CHECK_NOTHROW(validate_architecture(a.weights));
  }
  SUBCASE("different seed, different run") {
    TrainConfig other = tiny_config();
    other.seed = 4;
    CHECK_FALSE(train_examples(set, {}, tiny_config()).log == train_examples(set, {}, other).log);
  }
  SUBCASE("best weights score the logged validation loss") {
    const std::vector<TrainExample> train(set.begin(), set.begin() + 3), val(set.begin() + 3, set.end());
    const TrainResult r = train_examples(train, val, tiny_config());
    CHECK(r.n_val == 2);
    std::vector<TrainExample> val16;
    for (const auto& ex : val) val16.push_back(resize_example(ex, 16));
    CHECK(evaluate_loss(val16, r.weights, 2) == r.log[r.best_epoch - 1].val_loss);
  }
  SUBCASE("loss decreases on a tiny overfit") {
    TrainConfig cfg = tiny_config();
    cfg.epochs = 30;
    const TrainResult r = train_examples(set, {}, cfg);
    CHECK(r.log.back().train_loss < r.log.front().train_loss);
  }
  SUBCASE("empty training set") { CHECK_THROWS_AS(train_examples({}, {}, tiny_config()), InvalidArgument); }
}

TEST_CASE("resize_example") {
  TrainExample ex{random_rgb(20, 10, 1), BinaryMask::Zero(10, 20)};
  ex.mask(3, 4) = 1;
  const TrainExample r = resize_example(ex, 40);
  CHECK(r.image.width == 40);
  CHECK(width_of(r.mask) == 40);
  CHECK(((r.mask == 0) || (r.mask == 1)).all());
  CHECK(r.mask.cast<int>().sum() == 8);
  TrainExample bad{random_rgb(20, 10, 1), BinaryMask::Zero(11, 20)};
  CHECK_THROWS_AS(resize_example(bad, 16), InvalidArgument);
}

TEST_CASE("train from samples") {
  TempDir dir("train");
  std::vector<LabeledSample> samples;
  const auto set = tiny_set(4, 32);
  for (size_t i = 0; i < set.size(); ++i) {
    LabeledSample s;
    s.image_path = dir / ("img" + std::to_string(i) + ".ppm");
    s.mask_path = dir / ("mask" + std::to_string(i) + ".pgm");
    save_image(set[i].image, s.image_path);
    save_mask(set[i].mask, s.mask_path);
    samples.push_back(s);
  }
  LabeledSample missing;
  missing.image_path = dir / "absent.ppm";
  missing.mask_path = dir / "absent.pgm";
  samples.push_back(missing);

  TrainConfig cfg = tiny_config();
  cfg.train_fraction = 0.5;
  const TrainResult r = train(samples, cfg);
  CHECK(r.n_train == 2);
  CHECK(r.n_val == 2);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("absent.ppm") != std::string::npos);
  CHECK(r.log.size() == 3);

  CHECK_THROWS_AS(train({}, cfg), InvalidArgument);
  CHECK_THROWS_AS(train({missing}, cfg), InvalidArgument);
}

TEST_CASE("loss log CSV") {
  std::vector<LossRecord> log{{1, 0.6931471805599453, 0.7}, {2, 1.0 / 3.0, 1e-300}};
  std::ostringstream out;
  write_loss_log(out, log);
  CHECK(out.str().rfind("epoch,train_loss,val_loss\n1,", 0) == 0);
  std::istringstream in(out.str());
  CHECK(read_loss_log(in) == log);
  std::istringstream bad("epoch,train_loss,val_loss\n1,2\n");
  CHECK_THROWS_AS(read_loss_log(bad), ParseError);
  std::istringstream nan("epoch,train_loss,val_loss\n1,x,2\n");
  CHECK_THROWS_AS(read_loss_log(nan), ParseError);
  TempDir dir("losslog");
  save_loss_log(dir / "loss.csv", log);
  CHECK(load_loss_log(dir / "loss.csv") == log);
}
