#include <cmath>

#include "dawnfm/experiments/config.hpp"
#include "dawnfm/io/csv.hpp"
#include "dawnfm/io/idx.hpp"
#include "dawnfm/io/image.hpp"
#include "helpers.hpp"

using namespace dawnfm;
using namespace dawnfm::io;
using testutil::random_tensor;
using testutil::scratch_dir;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

Bytes idx_bytes(std::uint32_t magic, std::vector<std::uint32_t> dims, std::vector<std::uint8_t> payload) {
  Bytes b;
  auto be = [&](std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
  };
  be(magic);
  for (auto d : dims) be(d);
  b.insert(b.end(), payload.begin(), payload.end());
  return b;
}

}  // namespace

TEST(TensorIo, HeaderBytesForShape2x3) {
  const Bytes b = encode_tensor(Tensor({2, 3}));
  const Bytes header{0x44, 0x57, 0x4E, 0x54, 0x01, 0x02, 0x02, 0x02, 0x00, 0x00, 0x00, 0x03, 0x00, 0x00, 0x00};
  ASSERT_EQ(b.size(), header.size() + 48);
  EXPECT_TRUE(std::equal(header.begin(), header.end(), b.begin()));
}

TEST(TensorIo, RoundTripIsBitwise) {
  SeededRng rng(1);
  Tensor t = random_tensor(rng, {3, 4});
  t[0] = -0.0;
  t[1] = 1e-310;
  const Tensor back = decode_tensor(encode_tensor(t));
  ASSERT_EQ(back.shape(), t.shape());
  EXPECT_EQ(std::memcmp(back.data(), t.data(), t.size() * sizeof(double)), 0);
  const auto f = t.cast<float>();
  EXPECT_EQ(decode_tensor<float>(encode_tensor(f)), f);
  const auto dir = scratch_dir("f");
  write_file(dir / "t.dwnt", encode_tensor(t));
  EXPECT_EQ(decode_tensor(read_file(dir / "t.dwnt")), t);
}

TEST(TensorIo, RejectsCorruptInput) {
  Bytes b = encode_tensor(Tensor({2, 2}));
  Bytes bad = b;
  bad[0] = 'X';
  EXPECT_THROW(decode_tensor(bad), IoError);
  bad = b;
  bad[4] = 0x02;
  EXPECT_THROW(decode_tensor(bad), IoError);
  bad = b;
  bad[5] = 0x07;
  EXPECT_THROW(decode_tensor(bad), IoError);
  bad = b;
  bad.pop_back();
  EXPECT_NE(error_of([&] { decode_tensor(bad); }).find("expected 32"), std::string::npos);
}

TEST(Image, PgmBytes) {
  const Bytes b = encode_image(Tensor({1, 1}, 1.0));
  const std::string expect = "P5\n1 1\n255\n\xFF";
  EXPECT_EQ(std::string(b.begin(), b.end()), expect);
  EXPECT_EQ(to_byte(0.5), 128);
  EXPECT_EQ(to_byte(-3.0), 0);
  EXPECT_EQ(to_byte(2.0), 255);
}

TEST(Image, PpmIsChannelInterleaved) {
  Tensor t({3, 1, 2});
  t[0] = 1.0;  // red, pixel 0
  t[5] = 1.0;  // blue, pixel 1
  const Bytes b = encode_image(t);
  const std::string head = "P6\n2 1\n255\n";
  ASSERT_EQ(b.size(), head.size() + 6);
  EXPECT_EQ(std::string(b.begin(), b.begin() + static_cast<long>(head.size())), head);
  const Bytes px(b.begin() + static_cast<long>(head.size()), b.end());
  EXPECT_EQ(px, (Bytes{255, 0, 0, 0, 0, 255}));
}

TEST(Image, RejectsBadShapes) {
  EXPECT_THROW(encode_image(Tensor({2, 4, 4})), ShapeError);
  EXPECT_THROW(encode_image(Tensor({4})), ShapeError);
}

TEST(Image, DisplayNormalization) {
  const Tensor n = normalize_for_display(Tensor::vector({-2, 0, 2}));
  EXPECT_EQ(n, Tensor::vector({0, 0.5, 1}));
  EXPECT_EQ(max_value(normalize_for_display(Tensor({2}, 3.0))), 0.0);
}

TEST(Idx, CraftedFile) {
  const Tensor t = decode_idx(idx_bytes(0x803, {1, 2, 2}, {0, 128, 255, 64}));
  ASSERT_EQ(t.shape(), (Shape{1, 2, 2}));
  EXPECT_EQ(t[0], 0.0);
  EXPECT_EQ(t[1], 128.0 / 255.0);
  EXPECT_EQ(t[2], 1.0);
  EXPECT_EQ(t[3], 64.0 / 255.0);
  const Tensor labels = decode_idx(idx_bytes(0x801, {3}, {1, 2, 3}));
  EXPECT_EQ(labels.shape(), (Shape{3}));
}

TEST(Idx, Errors) {
  const std::string magic = error_of([] { decode_idx(idx_bytes(0x899, {1, 2, 2}, {0, 0, 0, 0})); });
  EXPECT_NE(magic.find("offset 0"), std::string::npos) << magic;
  const std::string shortp = error_of([] { decode_idx(idx_bytes(0x803, {1, 2, 2}, {0, 0, 0})); });
  EXPECT_NE(shortp.find("expected 4"), std::string::npos) << shortp;
  EXPECT_NE(shortp.find("3"), std::string::npos) << shortp;
  EXPECT_THROW(decode_idx(Bytes{0, 0, 8}), ParseError);
  EXPECT_THROW(load_idx("/nonexistent/file.idx"), IoError);
}

TEST(Csv, NumbersRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e22, 0.0}) EXPECT_EQ(parse_double(format_double(v)), v);
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_TRUE(std::isinf(parse_double("inf")));
  EXPECT_TRUE(std::isnan(parse_double("nan")));
  EXPECT_THROW(parse_double("1.0x"), ParseError);
}

TEST(Csv, WriteAndRead) {
  CsvWriter w({"a", "b"});
  w.row({"1", "x"});
  EXPECT_EQ(w.str(), "a,b\n1,x\n");
  EXPECT_THROW(w.row({"1"}), ShapeError);
  const auto path = scratch_dir("c") / "sub" / "t.csv";
  w.save(path);
  const auto rows = read_csv(path);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1], (std::vector<std::string>{"1", "x"}));
}

TEST(Config, ExperimentRoundTrip) {
  auto cfg = experiments::ExperimentConfig::desk_deblur(true);
  cfg.train.max_epochs = 7;
  cfg.inference.ensemble_size = 5;
  const Json j = experiments::to_json(cfg);
  const auto back = experiments::experiment_config_from_json(j);
  EXPECT_EQ(experiments::to_json(back), j);
  EXPECT_EQ(back.train, cfg.train);
  EXPECT_EQ(back.model, cfg.model);
}

TEST(Config, UnknownKeyNamesPath) {
  const Json j = Json::parse(R"({"task": "deblur", "dataset": {"kind": "synthetic-phantoms", "side": 16}, "operator": {"kind": "blur", "side": 16}, "train": {"max_epochs": 3, "lr": 0.1}})");
  const std::string msg = error_of([&] { experiments::experiment_config_from_json(j); });
  EXPECT_NE(msg.find("train.lr"), std::string::npos) << msg;
}

TEST(Config, WrongTypeAndInconsistency) {
  EXPECT_THROW(experiments::experiment_config_from_json(Json::parse(R"({"task": "deblur", "dataset": {"kind": "synthetic-phantoms", "side": 16}, "operator": {"kind": "blur", "side": 16}, "train": {"max_epochs": "x"}})")),
               ConfigError);
  auto cfg = experiments::ExperimentConfig::desk_deblur(true);
  cfg.op.side = 20;
  EXPECT_THROW(experiments::validate(cfg), ConfigError);
  const Json idx = Json::parse(R"({"task": "deblur", "dataset": {"kind": "idx", "path": "/no/such/file"}, "operator": {"kind": "blur", "side": 28}})");
  EXPECT_THROW(experiments::experiment_config_from_json(idx), ConfigError);
  EXPECT_THROW(experiments::experiment_config_from_json(Json::parse(R"({"task": "deblur"})")), ConfigError);
}

TEST(Config, ShippedConfigsLoad) {
  const fs::path dir = fs::path(DAWNFM_SOURCE_DIR) / "configs";
  std::size_t loaded = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename() == "mnist_deblur.json") continue;  // needs the IDX file
    EXPECT_NO_THROW(experiments::load_experiment_config(e.path())) << e.path();
    ++loaded;
  }
  EXPECT_EQ(loaded, 3u);
}
