#include "deepdetect/espnet.hpp"

#include "deepdetect/errors.hpp"
#include "deepdetect/imgproc.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace deepdetect {

namespace {

constexpr const char* kWeightsMagic = "deepdetect-weights 1";

RgbImage reflect_pad(const RgbImage& img, int width, int height) {
  if (width == img.width && height == img.height) return img;
  RgbImage out(width, height);
  for (int y = 0; y < height; ++y) {
    const int sy = reflect101(y, img.height);
    for (int x = 0; x < width; ++x) {
      const int sx = reflect101(x, img.width);
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(sx, sy, c);
    }
  }
  return out;
}

int round_up8(int v) { return (v + 7) / 8 * 8; }

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  for (std::string tok; ss >> tok;) out.push_back(tok);
  return out;
}

bool is_running_stat(const std::string& name) { return name.find(".running_") != std::string::npos; }

}  // namespace

Tensor images_to_tensor(const std::vector<const RgbImage*>& imgs) {
  if (imgs.empty()) throw InvalidArgument("images_to_tensor: no images");
  const int w = imgs.front()->width, h = imgs.front()->height;
  Tensor t({static_cast<int>(imgs.size()), 3, h, w});
  for (size_t n = 0; n < imgs.size(); ++n) {
    const RgbImage& img = *imgs[n];
    if (img.width != w || img.height != h) throw InvalidArgument("images_to_tensor: images differ in size");
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          t.at(static_cast<int>(n), c, y, x) = (static_cast<float>(img.at(x, y, c)) - 127.5f) / 127.5f;
  }
  return t;
}

Tensor image_to_tensor(const RgbImage& img) { return images_to_tensor({&img}); }

Tensor masks_to_tensor(const std::vector<const BinaryMask*>& masks) {
  if (masks.empty()) throw InvalidArgument("masks_to_tensor: no masks");
  const int w = width_of(*masks.front()), h = height_of(*masks.front());
  Tensor t({static_cast<int>(masks.size()), 1, h, w});
  for (size_t n = 0; n < masks.size(); ++n) {
    const BinaryMask& m = *masks[n];
    if (width_of(m) != w || height_of(m) != h) throw InvalidArgument("masks_to_tensor: masks differ in size");
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) t.at(static_cast<int>(n), 0, y, x) = m(y, x) ? 1.0f : 0.0f;
  }
  return t;
}

BinaryMask threshold_prob(const ProbMap& prob, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw InvalidArgument("tau must lie in (0, 1), got " + std::to_string(tau));
  return (prob >= static_cast<float>(tau)).cast<uint8_t>();
}

ProbMap predict_prob(const RgbImage& img, const ModelWeights& weights, std::optional<int> working_size) {
  validate_architecture(weights);
  if (img.width < 1 || img.height < 1) throw InvalidArgument("predict_prob: empty image");
  if (working_size && *working_size < 1) throw InvalidArgument("working size must be >= 1");
  const RgbImage work = working_size ? resize_bilinear(img, *working_size, *working_size) : img;
  const RgbImage padded = reflect_pad(work, round_up8(work.width), round_up8(work.height));
  const Tensor logits = espnet_forward(image_to_tensor(padded), weights);
  ProbMap prob(work.height, work.width);
  for (int y = 0; y < work.height; ++y)
    for (int x = 0; x < work.width; ++x) prob(y, x) = sigmoid(logits.at(0, 0, y, x));
  if (working_size && (work.width != img.width || work.height != img.height)) {
    prob = resize_bilinear(prob, img.width, img.height).max(0.0f).min(1.0f);
  }
  return prob;
}

InferenceResult infer_mask(const RgbImage& img, const ModelWeights& weights, double tau,
                           std::optional<int> working_size) {
  if (!(tau > 0.0 && tau < 1.0)) throw InvalidArgument("tau must lie in (0, 1), got " + std::to_string(tau));
  InferenceResult r;
  r.prob = predict_prob(img, weights, working_size);
  r.mask = threshold_prob(r.prob, tau);
  return r;
}

KeypointList mask_to_keypoints(const BinaryMask& mask, const ProbMap* prob) {
  if (prob && (width_of(*prob) != width_of(mask) || height_of(*prob) != height_of(mask))) {
    throw InvalidArgument("mask_to_keypoints: probability map size differs from mask");
  }
  KeypointList out;
  for (int y = 0; y < height_of(mask); ++y)
    for (int x = 0; x < width_of(mask); ++x)
      if (mask(y, x)) out.push_back({static_cast<float>(x), static_cast<float>(y), prob ? (*prob)(y, x) : 1.0f});
  return out;
}

void write_weights(std::ostream& out, const ModelWeights& weights) {
  out << kWeightsMagic << '\n';
  for (const auto& e : weights.entries()) {
    out << e.name << " f32";
    for (int d : e.value.shape()) out << ' ' << d;
    out << '\n';
  }
  out << "DATA\n";
  std::vector<char> buf;
  for (const auto& e : weights.entries()) {
    buf.resize(e.value.size() * 4);
    for (size_t i = 0; i < e.value.size(); ++i) {
      const uint32_t bits = std::bit_cast<uint32_t>(e.value[i]);
      for (int b = 0; b < 4; ++b) buf[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw IoError(IoErrorKind::WriteFailed, "failed writing weights");
}

ModelWeights read_weights(std::istream& in) {
  auto malformed = [](const std::string& why) { return IoError(IoErrorKind::MalformedHeader, "weights: " + why); };
  std::string line;
  if (!std::getline(in, line) || line != kWeightsMagic) throw malformed("missing '" + std::string(kWeightsMagic) + "'");
  struct Header {
    std::string name;
    std::vector<int> shape;
  };
  std::vector<Header> headers;
  while (true) {
    if (!std::getline(in, line)) throw malformed("missing DATA line");
    if (line == "DATA") break;
    auto tok = split_ws(line);
    if (tok.size() < 2) throw malformed("bad header line '" + line + "'");
    if (tok[1] != "f32") throw malformed("unsupported dtype '" + tok[1] + "'");
    Header h{tok[0], {}};
    for (size_t i = 2; i < tok.size(); ++i) {
      int d = 0;
      auto [p, ec] = std::from_chars(tok[i].data(), tok[i].data() + tok[i].size(), d);
      if (ec != std::errc() || p != tok[i].data() + tok[i].size() || d < 0) {
        throw malformed("bad extent '" + tok[i] + "' for " + tok[0]);
      }
      h.shape.push_back(d);
    }
    headers.push_back(std::move(h));
  }
  ModelWeights w;
  std::vector<char> buf;
  for (const Header& h : headers) {
    Tensor t(h.shape);
    buf.resize(t.size() * 4);
    if (!in.read(buf.data(), static_cast<std::streamsize>(buf.size()))) throw malformed("truncated data for " + h.name);
    for (size_t i = 0; i < t.size(); ++i) {
      uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<uint32_t>(static_cast<unsigned char>(buf[i * 4 + b])) << (8 * b);
      t[i] = std::bit_cast<float>(bits);
    }
    try {
      w.add(h.name, std::move(t), !is_running_stat(h.name));
    } catch (const InvalidArgument& e) {
      throw malformed(e.what());
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw malformed("trailing bytes after data");
  return w;
}

void save_weights(const std::filesystem::path& path, const ModelWeights& weights) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(IoErrorKind::WriteFailed, "cannot open " + path.string() + " for writing");
  write_weights(out, weights);
}

ModelWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoErrorKind::MissingFile, "cannot open " + path.string());
  return read_weights(in);
}

}  // namespace deepdetect
