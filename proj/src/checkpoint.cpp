#include "stuc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace stuc {
namespace {

constexpr char kMagic[8] = {'S', 'T', 'U', 'C', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) out_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void reals(const Vector& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  template <typename T>
  void counts(const std::vector<T>& v) {
    u64(v.size());
    for (auto x : v) u64(static_cast<std::uint64_t>(x));
  }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(in_[at_ + k]) << (8 * k);
    at_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t length() {
    const std::uint64_t n = u64();
    if (n > in_.size() - at_) throw IoError("checkpoint length field out of range");
    return static_cast<std::size_t>(n);
  }
  std::string str() {
    const std::size_t n = length();
    std::string s(in_.begin() + static_cast<long>(at_),
                  in_.begin() + static_cast<long>(at_ + n));
    at_ += n;
    return s;
  }
  Vector reals() {
    Vector v(length());
    for (double& x : v) x = f64();
    return v;
  }
  template <typename T>
  std::vector<T> counts() {
    std::vector<T> v(length());
    for (auto& x : v) x = static_cast<T>(u64());
    return v;
  }
  void expect(const void* p, std::size_t n) {
    need(n);
    if (std::memcmp(in_.data() + at_, p, n) != 0) throw IoError("not a checkpoint file");
    at_ += n;
  }
  bool finished() const { return at_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - at_ < n) throw IoError("truncated checkpoint");
  }
  const std::vector<std::uint8_t>& in_;
  std::size_t at_ = 0;
};

void write_arch(Writer& w, const Architecture& a) {
  w.u64(a.input_dim);
  w.counts(a.hidden);
  w.u64(a.embed_dim);
  w.u64(a.num_classes);
  w.u64(static_cast<std::uint64_t>(a.activation));
}

Architecture read_arch(Reader& r) {
  Architecture a;
  a.input_dim = r.u64();
  a.hidden = r.counts<std::size_t>();
  a.embed_dim = r.u64();
  a.num_classes = r.u64();
  const auto act = r.u64();
  if (act > static_cast<std::uint64_t>(Activation::kTanh)) throw IoError("bad activation");
  a.activation = static_cast<Activation>(act);
  return a;
}

ModelParams read_params(Reader& r) {
  ModelParams p;
  p.arch = read_arch(r);
  p.values = r.reals();
  if (p.values.size() != p.arch.parameter_count()) {
    throw IoError("checkpoint parameter count does not match its architecture");
  }
  return p;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u64(kCheckpointVersion);
  w.str(c.config_json);
  write_arch(w, c.params.arch);
  w.reals(c.params.values);
  w.reals(c.optimizer.velocity());
  w.f64(c.optimizer.momentum());
  w.f64(c.optimizer.weight_decay());
  write_arch(w, c.ema.shadow.arch);
  w.reals(c.ema.shadow.values);
  w.f64(c.ema.decay);
  const ThresholdState& t = c.thresholds;
  w.f64(t.tau);
  w.f64(t.lambda);
  w.counts(t.phi);
  w.reals(t.sigma);
  w.u64(t.t);
  w.u64(t.window.capacity());
  w.u64(t.window.head());
  w.u64(t.window.slots().size());
  for (const auto& s : t.window.slots()) w.counts(s);
  w.u64(c.iteration);
  w.str(c.sampler.rng);
  w.counts(c.sampler.labeled_order);
  w.u64(c.sampler.labeled_cursor);
  w.counts(c.sampler.unlabeled_order);
  w.u64(c.sampler.unlabeled_cursor);
  w.str(c.plan_rng);
  return w.take();
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  r.expect(kMagic, sizeof kMagic);
  if (r.u64() != kCheckpointVersion) throw IoError("unsupported checkpoint version");
  Checkpoint c;
  c.config_json = r.str();
  c.params = read_params(r);
  Vector velocity = r.reals();
  const double momentum = r.f64();
  const double weight_decay = r.f64();
  if (velocity.size() != c.params.values.size()) throw IoError("optimizer state size mismatch");
  c.optimizer = SgdMomentum::restore(std::move(velocity), momentum, weight_decay);
  c.ema.shadow = read_params(r);
  c.ema.decay = r.f64();
  ThresholdState& t = c.thresholds;
  t.tau = r.f64();
  t.lambda = r.f64();
  t.phi = r.counts<std::uint64_t>();
  t.sigma = r.reals();
  t.t = r.u64();
  const std::size_t capacity = r.u64();
  const std::size_t head = r.u64();
  const std::size_t filled = r.length();
  std::vector<std::vector<std::uint64_t>> slots;
  for (std::size_t i = 0; i < filled; ++i) slots.push_back(r.counts<std::uint64_t>());
  if (capacity == 0 || t.sigma.size() != t.phi.size()) throw IoError("corrupt threshold state");
  t.window = StatusWindow::restore(t.phi.size(), capacity, head, std::move(slots));
  c.iteration = r.u64();
  c.sampler.rng = r.str();
  c.sampler.labeled_order = r.counts<std::size_t>();
  c.sampler.labeled_cursor = r.u64();
  c.sampler.unlabeled_order = r.counts<std::size_t>();
  c.sampler.unlabeled_cursor = r.u64();
  c.plan_rng = r.str();
  if (!r.finished()) throw IoError("trailing bytes after checkpoint");
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<long>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace stuc
