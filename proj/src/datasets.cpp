#include "stuc/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>

namespace stuc {
namespace {

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = rng.uniform_int(i);
    std::swap(v[i - 1], v[j]);
  }
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint32_t get_le(const std::vector<std::uint8_t>& in, std::size_t at, int bytes) {
  std::uint32_t v = 0;
  for (int k = 0; k < bytes; ++k) v |= static_cast<std::uint32_t>(in[at + k]) << (8 * k);
  return v;
}

constexpr std::size_t kTinyHeaderBytes = 16;

}  // namespace

SslDataset make_two_moons(std::size_t n, double noise, std::uint64_t seed) {
  if (n < 4) throw ContractError("two moons needs at least 2 points per class");
  Rng rng(seed);
  SslDataset d;
  d.pool.num_classes = 2;
  d.pool.input_dim = 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = i % 2;
    const double theta = rng.uniform(0.0, std::numbers::pi);
    double px, py;
    if (y == 0) {
      px = std::cos(theta);
      py = std::sin(theta);
    } else {
      px = 1.0 - std::cos(theta);
      py = 0.5 - std::sin(theta);
    }
    if (noise > 0.0) {
      px += rng.normal(0.0, noise);
      py += rng.normal(0.0, noise);
    }
    d.pool.labeled.push_back({{px, py}, y});
  }
  return d;
}

SslDataset make_blobs(std::size_t num_classes, std::size_t n, const BlobOptions& options,
                      std::uint64_t seed) {
  if (num_classes < 2) throw ContractError("blobs need at least 2 classes");
  if (options.dim < 2) throw ContractError("blobs need dimension >= 2");
  if (options.spreads.empty()) throw ContractError("blobs need a spread");
  std::vector<Vector> centers = options.centers;
  if (centers.empty()) {
    for (std::size_t c = 0; c < num_classes; ++c) {
      Vector m(options.dim, 0.0);
      const double a = 2.0 * std::numbers::pi * static_cast<double>(c) /
                       static_cast<double>(num_classes);
      m[0] = options.radius * std::cos(a);
      m[1] = options.radius * std::sin(a);
      centers.push_back(std::move(m));
    }
  }
  if (centers.size() != num_classes) throw ContractError("one center per class required");
  Rng rng(seed);
  SslDataset d;
  d.pool.num_classes = num_classes;
  d.pool.input_dim = options.dim;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = i % num_classes;
    const double spread =
        options.spreads.size() == 1 ? options.spreads[0] : options.spreads.at(y);
    if (centers[y].size() != options.dim) throw ContractError("center dimension mismatch");
    Vector x = centers[y];
    if (spread > 0.0) {
      for (double& v : x) v += rng.normal(0.0, spread);
    }
    d.pool.labeled.push_back({std::move(x), y});
  }
  return d;
}

SslDataset make_blobs(std::size_t num_classes, std::size_t n, double spread,
                      std::uint64_t seed) {
  BlobOptions o;
  o.spreads = {spread};
  return make_blobs(num_classes, n, o, seed);
}

SslDataset split_ssl(const SslDataset& dataset, std::size_t labels_per_class,
                     std::uint64_t seed) {
  const std::size_t C = dataset.pool.num_classes;
  std::vector<std::vector<std::size_t>> by_class(C);
  for (std::size_t i = 0; i < dataset.pool.labeled.size(); ++i) {
    by_class.at(dataset.pool.labeled[i].y).push_back(i);
  }
  Rng rng(seed);
  SslDataset out;
  out.pool.num_classes = C;
  out.pool.input_dim = dataset.pool.input_dim;
  out.pool.image = dataset.pool.image;
  std::vector<std::size_t> rest;
  for (std::size_t c = 0; c < C; ++c) {
    if (by_class[c].size() < labels_per_class) {
      throw ContractError("class " + std::to_string(c) + " has only " +
                          std::to_string(by_class[c].size()) + " members");
    }
    shuffle(by_class[c], rng);
    for (std::size_t k = 0; k < by_class[c].size(); ++k) {
      if (k < labels_per_class) {
        out.pool.labeled.push_back(dataset.pool.labeled[by_class[c][k]]);
      } else {
        rest.push_back(by_class[c][k]);
      }
    }
  }
  std::sort(rest.begin(), rest.end());
  shuffle(rest, rng);
  for (std::size_t i : rest) {
    out.pool.unlabeled.push_back({dataset.pool.labeled[i].x});
    out.hidden.push_back(dataset.pool.labeled[i].y);
  }
  for (std::size_t i = 0; i < dataset.pool.unlabeled.size(); ++i) {
    out.pool.unlabeled.push_back(dataset.pool.unlabeled[i]);
    out.hidden.push_back(dataset.hidden.at(i));
  }
  return out;
}

void add_distractors(SslDataset& dataset, const std::vector<Vector>& distractor) {
  for (const auto& x : distractor) {
    if (x.size() != dataset.pool.input_dim) {
      throw ContractError("distractor dimension mismatch");
    }
    dataset.pool.unlabeled.push_back({x});
    dataset.hidden.push_back(dataset.pool.num_classes);
  }
}

EvalSet to_eval_set(const SslDataset& dataset) {
  EvalSet e;
  e.num_classes = dataset.pool.num_classes;
  e.examples = dataset.pool.labeled;
  for (std::size_t i = 0; i < dataset.pool.unlabeled.size(); ++i) {
    const std::size_t y = dataset.hidden.at(i);
    if (y < e.num_classes) e.examples.push_back({dataset.pool.unlabeled[i].u, y});
  }
  return e;
}

BatchSampler::BatchSampler(const TrainingPool& pool, BatchConfig cfg, AugmentPolicy weak,
                           AugmentPolicy strong, std::uint64_t seed)
    : pool_(&pool), cfg_(cfg), weak_(std::move(weak)), strong_(std::move(strong)), rng_(seed) {
  cfg_.validate();
  if (pool.labeled.empty()) throw ContractError("labeled pool is empty");
  labeled_order_ = iota(pool.labeled.size());
  labeled_cursor_ = labeled_order_.size();
  unlabeled_order_ = iota(pool.unlabeled.size());
  unlabeled_cursor_ = unlabeled_order_.size();
}

std::size_t BatchSampler::draw(std::vector<std::size_t>& order, std::size_t& cursor) {
  if (cursor >= order.size()) {
    shuffle(order, rng_);
    cursor = 0;
  }
  return order[cursor++];
}

std::pair<LabeledBatch, UnlabeledBatch> BatchSampler::next_batches() {
  LabeledBatch lb;
  for (std::size_t i = 0; i < cfg_.labeled_batch; ++i) {
    const std::size_t id = draw(labeled_order_, labeled_cursor_);
    const auto& ex = pool_->labeled[id];
    lb.x.push_back(augment_weak(ex.x, weak_, rng_));
    lb.y.push_back(ex.y);
    lb.ids.push_back(id);
  }
  UnlabeledBatch ub;
  if (!pool_->unlabeled.empty()) {
    for (std::size_t i = 0; i < cfg_.unlabeled_batch(); ++i) {
      const std::size_t id = draw(unlabeled_order_, unlabeled_cursor_);
      const auto& u = pool_->unlabeled[id].u;
      ub.weak.push_back(augment_weak(u, weak_, rng_));
      ub.strong.push_back(augment_strong(u, strong_, rng_));
      ub.ids.push_back(id);
    }
  }
  return {std::move(lb), std::move(ub)};
}

BatchSampler::State BatchSampler::state() const {
  return State{rng_.serialize(), labeled_order_, labeled_cursor_, unlabeled_order_,
               unlabeled_cursor_};
}

void BatchSampler::restore(const State& s) {
  if (s.labeled_order.size() != pool_->labeled.size() ||
      s.unlabeled_order.size() != pool_->unlabeled.size()) {
    throw IoError("sampler state does not match the dataset");
  }
  rng_ = Rng::deserialize(s.rng);
  labeled_order_ = s.labeled_order;
  labeled_cursor_ = s.labeled_cursor;
  unlabeled_order_ = s.unlabeled_order;
  unlabeled_cursor_ = s.unlabeled_cursor;
}

std::vector<std::uint8_t> encode_tiny_images(const TinyImageSet& set) {
  if (set.num_classes > 0xffff || set.width > 0xffff || set.height > 0xffff ||
      set.pixels.size() != set.labels.size()) {
    throw ContractError("tiny image set is not encodable");
  }
  std::vector<std::uint8_t> out{'T', 'I', 'M', 'G'};
  put_u16(out, kTinyImageVersion);
  put_u16(out, static_cast<std::uint16_t>(set.num_classes));
  put_u16(out, static_cast<std::uint16_t>(set.width));
  put_u16(out, static_cast<std::uint16_t>(set.height));
  put_u32(out, static_cast<std::uint32_t>(set.pixels.size()));
  for (std::size_t i = 0; i < set.pixels.size(); ++i) {
    if (set.pixels[i].size() != set.width * set.height) {
      throw ContractError("tiny image has the wrong pixel count");
    }
    out.insert(out.end(), set.pixels[i].begin(), set.pixels[i].end());
    out.push_back(set.labels[i]);
  }
  return out;
}

TinyImageSet decode_tiny_images(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kTinyHeaderBytes || bytes[0] != 'T' || bytes[1] != 'I' ||
      bytes[2] != 'M' || bytes[3] != 'G') {
    throw IoError("not a tiny image file");
  }
  if (get_le(bytes, 4, 2) != kTinyImageVersion) throw IoError("unsupported tiny image version");
  TinyImageSet set;
  set.num_classes = get_le(bytes, 6, 2);
  set.width = get_le(bytes, 8, 2);
  set.height = get_le(bytes, 10, 2);
  const std::size_t count = get_le(bytes, 12, 4);
  const std::size_t record = set.width * set.height + 1;
  if (bytes.size() != kTinyHeaderBytes + count * record) {
    throw IoError("tiny image file has the wrong length");
  }
  std::size_t at = kTinyHeaderBytes;
  for (std::size_t i = 0; i < count; ++i) {
    set.pixels.emplace_back(bytes.begin() + static_cast<long>(at),
                            bytes.begin() + static_cast<long>(at + record - 1));
    set.labels.push_back(bytes[at + record - 1]);
    if (set.labels.back() >= set.num_classes) throw IoError("tiny image label out of range");
    at += record;
  }
  return set;
}

void write_tiny_images(const std::string& path, const TinyImageSet& set) {
  const auto bytes = encode_tiny_images(set);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<long>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

TinyImageSet read_tiny_images(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_tiny_images(bytes);
}

TinyImageSet make_tiny_digits(std::size_t num_classes, std::size_t n, std::size_t side,
                              std::uint64_t seed) {
  if (num_classes < 2 || num_classes > 255) throw ContractError("unsupported class count");
  if (side < 4) throw ContractError("images must be at least 4x4");
  Rng rng(seed);
  // Each class: three strokes (row or column bars) at class-specific places.
  struct Stroke { bool horizontal; std::size_t pos, from, to; };
  std::vector<std::vector<Stroke>> templates(num_classes);
  Rng shape_rng(seed ^ 0x5eedULL);
  for (auto& t : templates) {
    for (int k = 0; k < 3; ++k) {
      Stroke s;
      s.horizontal = shape_rng.bernoulli(0.5);
      s.pos = 1 + shape_rng.uniform_int(side - 2);
      s.from = shape_rng.uniform_int(side / 2);
      s.to = side / 2 + shape_rng.uniform_int(side - side / 2);
      t.push_back(s);
    }
  }
  TinyImageSet set;
  set.num_classes = num_classes;
  set.width = side;
  set.height = side;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = i % num_classes;
    std::vector<double> img(side * side, 0.0);
    const long dx = static_cast<long>(rng.uniform_int(3)) - 1;
    const long dy = static_cast<long>(rng.uniform_int(3)) - 1;
    for (const auto& s : templates[y]) {
      for (std::size_t k = s.from; k <= s.to && k < side; ++k) {
        long r = static_cast<long>(s.horizontal ? s.pos : k) + dy;
        long c = static_cast<long>(s.horizontal ? k : s.pos) + dx;
        if (r < 0 || c < 0 || r >= static_cast<long>(side) || c >= static_cast<long>(side)) continue;
        img[static_cast<std::size_t>(r) * side + static_cast<std::size_t>(c)] = 1.0;
      }
    }
    std::vector<std::uint8_t> px(side * side);
    for (std::size_t p = 0; p < px.size(); ++p) {
      const double v = std::clamp(img[p] * 0.85 + 0.1 + rng.normal(0.0, 0.08), 0.0, 1.0);
      px[p] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    set.pixels.push_back(std::move(px));
    set.labels.push_back(static_cast<std::uint8_t>(y));
  }
  return set;
}

SslDataset to_dataset(const TinyImageSet& set) {
  SslDataset d;
  d.pool.num_classes = set.num_classes;
  d.pool.input_dim = set.width * set.height;
  d.pool.image = ImageShape{set.width, set.height};
  for (std::size_t i = 0; i < set.pixels.size(); ++i) {
    Vector x(set.pixels[i].size());
    for (std::size_t p = 0; p < x.size(); ++p) x[p] = set.pixels[i][p] / 255.0;
    d.pool.labeled.push_back({std::move(x), set.labels[i]});
  }
  return d;
}

}  // namespace stuc
